//! Brute-force joint distribution, used as the reference for inference.

use crate::error::{Error, Result};
use crate::model::table::for_each_assignment;
use crate::model::{Evidence, FactorGraph};

pub const DEFAULT_STATE_CAP: u128 = 1 << 20;

/// Normalised joint over all variables of a graph, row-major in variable
/// order (last variable fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub vars: Vec<String>,
    pub shape: Vec<usize>,
    pub probs: Vec<f64>,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// P(rv | evidence) by restriction and summation.
    pub fn conditional(&self, rv: &str, evidence: &[(usize, usize)]) -> Option<Vec<f64>> {
        let q = self.vars.iter().position(|v| v == rv)?;
        let mut out = vec![0.0; self.shape[q]];
        let mut i = 0;
        for_each_assignment(&self.shape, |a| {
            if evidence.iter().all(|&(v, val)| a[v] == val) {
                out[a[q]] += self.probs[i];
            }
            i += 1;
        });
        let z: f64 = out.iter().sum();
        if z <= 0.0 {
            return None;
        }
        out.iter_mut().for_each(|p| *p /= z);
        Some(out)
    }

    pub fn marginal(&self, rv: &str) -> Option<Vec<f64>> {
        self.conditional(rv, &[])
    }

    /// Resolves named evidence against a graph into (variable, value) indices.
    pub fn evidence_indices(fg: &FactorGraph, evidence: &Evidence) -> Result<Vec<(usize, usize)>> {
        evidence
            .iter()
            .map(|(k, v)| {
                let ri = fg.rv_idx(k).ok_or_else(|| Error::UnknownNode(k.clone()))?;
                let vi = fg.rvs()[ri]
                    .range
                    .index_of(v)
                    .ok_or_else(|| Error::UnknownNode(format!("{k}={v}")))?;
                Ok((ri, vi))
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Full joint distribution of a graph with all factors known, ignoring any
/// evidence stored on the variables.
pub fn joint_distribution(fg: &FactorGraph) -> Result<JointDistribution> {
    joint_distribution_capped(fg, DEFAULT_STATE_CAP)
}

pub fn joint_distribution_capped(fg: &FactorGraph, cap: u128) -> Result<JointDistribution> {
    fg.ensure_all_known()?;
    fg.ensure_valid()?;
    let shape: Vec<usize> = fg.rvs().iter().map(|r| r.range.len()).collect();
    let size = shape
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::StateSpaceTooLarge { size, cap });
    }
    let tables: Vec<_> = fg
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| (fg.args_of(i), f.table().expect("checked known")))
        .collect();
    let mut probs = Vec::with_capacity(size as usize);
    let mut local = Vec::new();
    for_each_assignment(&shape, |a| {
        let mut p = 1.0;
        for (args, t) in &tables {
            local.clear();
            local.extend(args.iter().map(|&r| a[r]));
            p *= t.get(&local);
        }
        probs.push(p);
    });
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(JointDistribution {
        vars: fg.rvs().iter().map(|r| r.id.clone()).collect(),
        shape,
        probs,
    })
}
