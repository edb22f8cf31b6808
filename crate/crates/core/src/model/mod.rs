//! Factor graphs whose factors may lack a potential table.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

pub mod format;
pub mod joint;
pub mod table;

pub use joint::{joint_distribution, JointDistribution, DEFAULT_STATE_CAP};
pub use table::{CanonicalTable, PotentialEq, PotentialTable};

/// Ordered list of value labels a random variable can take.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RangeSpec {
    values: Vec<String>,
}

impl RangeSpec {
    /// Range invariants (at least two values, no duplicates) are checked by
    /// `validate`, not here, so that malformed models can still be loaded and
    /// reported on.
    pub fn new<S: Into<String>>(values: impl IntoIterator<Item = S>) -> Self {
        Self {
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn boolean() -> Self {
        Self::new(["true", "false"])
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn index_of(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomVariable {
    pub id: String,
    pub range: RangeSpec,
    pub evidence: Option<String>,
}

impl RandomVariable {
    pub fn new(id: impl Into<String>, range: RangeSpec) -> Self {
        Self {
            id: id.into(),
            range,
            evidence: None,
        }
    }

    /// Index of the observed value within the range, if observed.
    pub fn evidence_index(&self) -> Option<usize> {
        self.evidence
            .as_deref()
            .and_then(|v| self.range.index_of(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Known(PotentialTable),
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub id: String,
    pub args: Vec<String>,
    pub potential: Potential,
}

impl Factor {
    pub fn known(id: impl Into<String>, args: Vec<String>, table: PotentialTable) -> Self {
        Self {
            id: id.into(),
            args,
            potential: Potential::Known(table),
        }
    }

    pub fn unknown(id: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            id: id.into(),
            args,
            potential: Potential::Unknown,
        }
    }

    pub fn table(&self) -> Option<&PotentialTable> {
        match &self.potential {
            Potential::Known(t) => Some(t),
            Potential::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.potential, Potential::Unknown)
    }
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId(String),
    InvalidRange {
        rv: String,
        reason: String,
    },
    EvidenceOutOfRange {
        rv: String,
        value: String,
    },
    DanglingArgument {
        factor: String,
        rv: String,
    },
    RepeatedArgument {
        factor: String,
        rv: String,
    },
    ShapeMismatch {
        factor: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    LengthMismatch {
        factor: String,
        expected: usize,
        actual: usize,
    },
    NonPositivePotential {
        factor: String,
        index: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId(id) => write!(f, "duplicate node id `{id}`"),
            Violation::InvalidRange { rv, reason } => write!(f, "range of `{rv}`: {reason}"),
            Violation::EvidenceOutOfRange { rv, value } => {
                write!(f, "evidence `{value}` is not in the range of `{rv}`")
            }
            Violation::DanglingArgument { factor, rv } => {
                write!(f, "factor `{factor}` references missing variable `{rv}`")
            }
            Violation::RepeatedArgument { factor, rv } => {
                write!(f, "factor `{factor}` lists `{rv}` more than once")
            }
            Violation::ShapeMismatch {
                factor,
                expected,
                actual,
            } => write!(
                f,
                "factor `{factor}` has table shape {actual:?}, argument ranges give {expected:?}"
            ),
            Violation::LengthMismatch {
                factor,
                expected,
                actual,
            } => write!(
                f,
                "factor `{factor}` has {actual} entries, expected {expected}"
            ),
            Violation::NonPositivePotential {
                factor,
                index,
                value,
            } => write!(
                f,
                "factor `{factor}` entry {index} is {value}, potentials must be positive"
            ),
        }
    }
}

/// Bipartite graph of random variables and factors.
///
/// Edges are implied by factor argument lists. Construction never fails;
/// use [`validate`] (or [`FactorGraph::ensure_valid`]) before running
/// algorithms on untrusted input.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    rvs: Vec<RandomVariable>,
    factors: Vec<Factor>,
    rv_index: HashMap<String, usize>,
    factor_index: HashMap<String, usize>,
    /// Resolved argument indices per factor (dangling arguments skipped).
    factor_args: Vec<Vec<usize>>,
    /// Per RV: (factor index, argument position) of every incident edge.
    rv_edges: Vec<Vec<(usize, usize)>>,
}

impl PartialEq for FactorGraph {
    fn eq(&self, other: &Self) -> bool {
        self.rvs == other.rvs && self.factors == other.factors
    }
}

impl FactorGraph {
    pub fn new(rvs: Vec<RandomVariable>, factors: Vec<Factor>) -> Self {
        let mut rv_index = HashMap::with_capacity(rvs.len());
        for (i, rv) in rvs.iter().enumerate() {
            rv_index.entry(rv.id.clone()).or_insert(i);
        }
        let mut factor_index = HashMap::with_capacity(factors.len());
        for (i, f) in factors.iter().enumerate() {
            factor_index.entry(f.id.clone()).or_insert(i);
        }
        let mut rv_edges = vec![Vec::new(); rvs.len()];
        let factor_args = factors
            .iter()
            .enumerate()
            .map(|(fi, f)| {
                f.args
                    .iter()
                    .enumerate()
                    .filter_map(|(pos, a)| {
                        let ri = *rv_index.get(a)?;
                        rv_edges[ri].push((fi, pos));
                        Some(ri)
                    })
                    .collect()
            })
            .collect();
        Self {
            rvs,
            factors,
            rv_index,
            factor_index,
            factor_args,
            rv_edges,
        }
    }

    pub fn builder() -> FactorGraphBuilder {
        FactorGraphBuilder::default()
    }

    pub fn rvs(&self) -> &[RandomVariable] {
        &self.rvs
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn rv_idx(&self, id: &str) -> Option<usize> {
        self.rv_index.get(id).copied()
    }

    pub fn factor_idx(&self, id: &str) -> Option<usize> {
        self.factor_index.get(id).copied()
    }

    pub fn rv(&self, id: &str) -> Option<&RandomVariable> {
        self.rv_idx(id).map(|i| &self.rvs[i])
    }

    pub fn factor(&self, id: &str) -> Option<&Factor> {
        self.factor_idx(id).map(|i| &self.factors[i])
    }

    /// RV indices of a factor's arguments, in argument order.
    pub fn args_of(&self, factor: usize) -> &[usize] {
        &self.factor_args[factor]
    }

    /// (factor index, argument position) for every factor touching `rv`.
    pub fn edges_of(&self, rv: usize) -> &[(usize, usize)] {
        &self.rv_edges[rv]
    }

    pub fn degree(&self, rv: usize) -> usize {
        self.rv_edges[rv].len()
    }

    pub fn has_unknown(&self) -> bool {
        self.factors.iter().any(Factor::is_unknown)
    }

    pub fn unknown_factors(&self) -> impl Iterator<Item = &Factor> {
        self.factors.iter().filter(|f| f.is_unknown())
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidModel(v))
        }
    }

    pub fn ensure_all_known(&self) -> Result<()> {
        match self.unknown_factors().next() {
            Some(f) => Err(Error::UnknownFactorPresent(f.id.clone())),
            None => Ok(()),
        }
    }

    /// Copy of the graph with the given factor's potential replaced.
    pub fn with_potential(&self, factor: usize, potential: Potential) -> Self {
        let mut factors = self.factors.clone();
        factors[factor].potential = potential;
        Self {
            factors,
            ..self.clone()
        }
    }

    /// Copy of the graph with every factor potential replaced through `f`.
    pub fn map_potentials(&self, mut f: impl FnMut(usize, &Factor) -> Potential) -> Self {
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(i, fac)| Factor {
                potential: f(i, fac),
                ..fac.clone()
            })
            .collect();
        Self {
            factors,
            ..self.clone()
        }
    }

    /// Copy of the graph with additional observed values.
    pub fn with_evidence(&self, evidence: &Evidence) -> Result<Self> {
        let mut rvs = self.rvs.clone();
        for (name, value) in evidence {
            let i = self
                .rv_idx(name)
                .ok_or_else(|| Error::UnknownNode(name.clone()))?;
            if rvs[i].range.index_of(value).is_none() {
                return Err(Error::InvalidModel(vec![Violation::EvidenceOutOfRange {
                    rv: name.clone(),
                    value: value.clone(),
                }]));
            }
            rvs[i].evidence = Some(value.clone());
        }
        Ok(Self {
            rvs,
            ..self.clone()
        })
    }

    /// Observed values currently stored on the variables.
    pub fn evidence(&self) -> Evidence {
        self.rvs
            .iter()
            .filter_map(|r| r.evidence.clone().map(|e| (r.id.clone(), e)))
            .collect()
    }

    /// Shape a table for `args` must have, `None` if an argument is missing.
    pub fn shape_for(&self, args: &[String]) -> Option<Vec<usize>> {
        args.iter()
            .map(|a| self.rv(a).map(|r| r.range.len()))
            .collect()
    }
}

/// Observed values keyed by variable name.
pub type Evidence = BTreeMap<String, String>;

/// Incremental construction of a [`FactorGraph`], mostly for tests and
/// generators. Known-factor shapes are taken from the argument ranges.
#[derive(Debug, Default)]
pub struct FactorGraphBuilder {
    rvs: Vec<RandomVariable>,
    factors: Vec<Factor>,
}

impl FactorGraphBuilder {
    pub fn rv(mut self, id: &str, values: &[&str]) -> Self {
        self.rvs.push(RandomVariable::new(
            id,
            RangeSpec::new(values.iter().copied()),
        ));
        self
    }

    pub fn boolean(self, id: &str) -> Self {
        self.rv(id, &["true", "false"])
    }

    pub fn observed(mut self, id: &str, value: &str) -> Self {
        if let Some(rv) = self.rvs.iter_mut().find(|r| r.id == id) {
            rv.evidence = Some(value.to_string());
        }
        self
    }

    pub fn known(mut self, id: &str, args: &[&str], entries: &[f64]) -> Self {
        let shape = args
            .iter()
            .map(|a| {
                self.rvs
                    .iter()
                    .find(|r| r.id == *a)
                    .map_or(0, |r| r.range.len())
            })
            .collect();
        self.factors.push(Factor::known(
            id,
            args.iter().map(|s| s.to_string()).collect(),
            PotentialTable::new(shape, entries.to_vec()),
        ));
        self
    }

    pub fn unknown(mut self, id: &str, args: &[&str]) -> Self {
        self.factors.push(Factor::unknown(
            id,
            args.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    pub fn build(self) -> FactorGraph {
        FactorGraph::new(self.rvs, self.factors)
    }
}

/// Every invariant violation in `fg`; empty iff the graph is well formed.
pub fn validate(fg: &FactorGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for id in fg
        .rvs
        .iter()
        .map(|r| &r.id)
        .chain(fg.factors.iter().map(|f| &f.id))
    {
        if !seen.insert(id.as_str()) {
            out.push(Violation::DuplicateId(id.clone()));
        }
    }
    for rv in &fg.rvs {
        if rv.range.len() < 2 {
            out.push(Violation::InvalidRange {
                rv: rv.id.clone(),
                reason: "fewer than two values".into(),
            });
        }
        let distinct: HashSet<_> = rv.range.values().iter().collect();
        if distinct.len() != rv.range.len() {
            out.push(Violation::InvalidRange {
                rv: rv.id.clone(),
                reason: "repeated value label".into(),
            });
        }
        if let Some(e) = &rv.evidence {
            if rv.range.index_of(e).is_none() {
                out.push(Violation::EvidenceOutOfRange {
                    rv: rv.id.clone(),
                    value: e.clone(),
                });
            }
        }
    }
    for f in &fg.factors {
        let mut dangling = false;
        let mut args_seen = HashSet::new();
        for a in &f.args {
            if fg.rv(a).is_none() {
                dangling = true;
                out.push(Violation::DanglingArgument {
                    factor: f.id.clone(),
                    rv: a.clone(),
                });
            }
            if !args_seen.insert(a) {
                out.push(Violation::RepeatedArgument {
                    factor: f.id.clone(),
                    rv: a.clone(),
                });
            }
        }
        let Some(t) = f.table() else { continue };
        if !dangling {
            let expected = fg.shape_for(&f.args).unwrap_or_default();
            if t.shape() != expected.as_slice() {
                out.push(Violation::ShapeMismatch {
                    factor: f.id.clone(),
                    expected,
                    actual: t.shape().to_vec(),
                });
            }
        }
        if !dangling && t.len() != t.expected_len() {
            out.push(Violation::LengthMismatch {
                factor: f.id.clone(),
                expected: t.expected_len(),
                actual: t.len(),
            });
        }
        for (i, &v) in t.entries().iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                out.push(Violation::NonPositivePotential {
                    factor: f.id.clone(),
                    index: i,
                    value: v,
                });
            }
        }
    }
    out
}

/// Which factors belong to which individual.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackgroundKnowledge {
    pub individuals: Vec<(String, BTreeSet<String>)>,
}

impl BackgroundKnowledge {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_individual<S: Into<String>>(
        mut self,
        id: &str,
        factors: impl IntoIterator<Item = S>,
    ) -> Self {
        self.individuals.push((
            id.to_string(),
            factors.into_iter().map(Into::into).collect(),
        ));
        self
    }

    /// Index of the individual owning `factor`.
    pub fn owner_of(&self, factor: &str) -> Option<usize> {
        self.individuals
            .iter()
            .position(|(_, fs)| fs.contains(factor))
    }

    /// Overlapping or dangling factor references, as human-readable strings.
    pub fn validate(&self, fg: &FactorGraph) -> Vec<String> {
        let mut out = Vec::new();
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (ind, fs) in &self.individuals {
            for f in fs {
                if fg.factor(f).is_none() {
                    out.push(format!(
                        "individual `{ind}` references missing factor `{f}`"
                    ));
                }
                if let Some(prev) = owner.insert(f, ind) {
                    out.push(format!("factor `{f}` belongs to both `{prev}` and `{ind}`"));
                }
            }
        }
        out
    }
}
