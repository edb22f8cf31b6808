use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("factor `{0}` has no potential table")]
    UnknownFactorPresent(String),

    #[error("joint state space of {size} assignments exceeds the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: u128 },

    #[error("no node named `{0}`")]
    UnknownNode(String),

    #[error("model is invalid: {}", format_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("evidence has zero probability under the model")]
    InconsistentEvidence,

    #[error("distributions are not over the same domain: {0}")]
    DomainMismatch(String),

    #[error("divergence is infinite: q({0}) = 0 where p > 0")]
    InfiniteDivergence(String),

    #[error("instance generation infeasible for seed {seed}: {reason}")]
    GenerationInfeasible { seed: u64, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
