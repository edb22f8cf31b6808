//! Exact queries by variable elimination, and KL divergence.

use std::collections::BTreeSet;

use crate::colour::Grouping;
use crate::error::{Error, Result};
use crate::model::table::for_each_assignment;
use crate::model::{Evidence, FactorGraph};

/// Distribution of one variable, aligned with its range order.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub rv: String,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EliminationOrder {
    /// Fewest interaction-graph neighbours first, ties by id.
    #[default]
    MinDegree,
    /// Descending id order.
    ReverseId,
}

/// Dense factor over variable indices, row-major with the last variable
/// fastest.
#[derive(Debug, Clone)]
struct Dense {
    vars: Vec<usize>,
    card: Vec<usize>,
    values: Vec<f64>,
}

impl Dense {
    fn product(&self, other: &Dense) -> Dense {
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        for (&v, &c) in other.vars.iter().zip(&other.card) {
            if !vars.contains(&v) {
                vars.push(v);
                card.push(c);
            }
        }
        let pos_a: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|x| x == v).unwrap())
            .collect();
        let pos_b: Vec<usize> = other
            .vars
            .iter()
            .map(|v| vars.iter().position(|x| x == v).unwrap())
            .collect();
        let mut values = Vec::with_capacity(card.iter().product());
        for_each_assignment(&card, |a| {
            let ia = pos_a
                .iter()
                .zip(&self.card)
                .fold(0, |acc, (&p, &c)| acc * c + a[p]);
            let ib = pos_b
                .iter()
                .zip(&other.card)
                .fold(0, |acc, (&p, &c)| acc * c + a[p]);
            values.push(self.values[ia] * other.values[ib]);
        });
        Dense { vars, card, values }
    }

    fn sum_out(&self, var: usize) -> Dense {
        let Some(k) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(k);
        card.remove(k);
        let mut values = vec![0.0; card.iter().product()];
        let mut i = 0;
        for_each_assignment(&self.card, |a| {
            let j = a
                .iter()
                .enumerate()
                .filter(|&(p, _)| p != k)
                .fold(0, |acc, (p, &x)| acc * self.card[p] + x);
            values[j] += self.values[i];
            i += 1;
        });
        Dense { vars, card, values }
    }

    /// Fixes `var` to `value`, dropping it from the scope.
    fn restrict(&self, var: usize, value: usize) -> Dense {
        let Some(k) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        let mut card = self.card.clone();
        vars.remove(k);
        card.remove(k);
        let mut values = Vec::with_capacity(card.iter().product());
        let mut i = 0;
        for_each_assignment(&self.card, |a| {
            if a[k] == value {
                values.push(self.values[i]);
            }
            i += 1;
        });
        Dense { vars, card, values }
    }

    /// Divides by the largest entry; elimination only needs values up to scale.
    fn rescale(&mut self) {
        let m = self.values.iter().copied().fold(0.0, f64::max);
        if m > 0.0 && m.is_finite() {
            self.values.iter_mut().for_each(|v| *v /= m);
        }
    }
}

/// P(query | evidence) where evidence combines the values stored on the
/// variables with `evidence`.
pub fn variable_elimination(
    fg: &FactorGraph,
    query: &str,
    evidence: &Evidence,
) -> Result<Marginal> {
    variable_elimination_ordered(fg, query, evidence, EliminationOrder::MinDegree)
}

pub fn variable_elimination_ordered(
    fg: &FactorGraph,
    query: &str,
    evidence: &Evidence,
    order: EliminationOrder,
) -> Result<Marginal> {
    fg.ensure_all_known()?;
    fg.ensure_valid()?;
    let q = fg
        .rv_idx(query)
        .ok_or_else(|| Error::UnknownNode(query.to_string()))?;

    let mut observed: Vec<Option<usize>> = fg.rvs().iter().map(|r| r.evidence_index()).collect();
    for (name, value) in evidence {
        let i = fg
            .rv_idx(name)
            .ok_or_else(|| Error::UnknownNode(name.clone()))?;
        let v = fg.rvs()[i]
            .range
            .index_of(value)
            .ok_or_else(|| Error::UnknownNode(format!("{name}={value}")))?;
        match observed[i] {
            Some(prev) if prev != v => return Err(Error::InconsistentEvidence),
            _ => observed[i] = Some(v),
        }
    }

    let mut factors: Vec<Dense> = fg
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let t = f.table().expect("checked known");
            let mut d = Dense {
                vars: fg.args_of(i).to_vec(),
                card: t.shape().to_vec(),
                values: t.entries().to_vec(),
            };
            for (r, val) in observed.iter().enumerate() {
                if let Some(v) = val {
                    if r != q {
                        d = d.restrict(r, *v);
                    }
                }
            }
            d
        })
        .collect();

    let mut remaining: BTreeSet<usize> = (0..fg.rvs().len())
        .filter(|&r| r != q && observed[r].is_none())
        .collect();
    while !remaining.is_empty() {
        let var = match order {
            EliminationOrder::MinDegree => pick_min_degree(fg, &factors, &remaining),
            EliminationOrder::ReverseId => *remaining
                .iter()
                .max_by(|&&a, &&b| fg.rvs()[a].id.cmp(&fg.rvs()[b].id))
                .unwrap(),
        };
        remaining.remove(&var);
        let (touching, rest): (Vec<Dense>, Vec<Dense>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        factors = rest;
        if touching.is_empty() {
            continue;
        }
        let mut prod = touching
            .iter()
            .skip(1)
            .fold(touching[0].clone(), |acc, f| acc.product(f));
        prod = prod.sum_out(var);
        prod.rescale();
        factors.push(prod);
    }

    let card = fg.rvs()[q].range.len();
    let result = factors.iter().fold(
        Dense {
            vars: vec![q],
            card: vec![card],
            values: vec![1.0; card],
        },
        |acc, f| {
            let mut p = acc.product(f);
            p.rescale();
            p
        },
    );
    let mut probs = result.values;
    if let Some(v) = observed[q] {
        for (i, p) in probs.iter_mut().enumerate() {
            if i != v {
                *p = 0.0;
            }
        }
    }
    let z: f64 = probs.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::InconsistentEvidence);
    }
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(Marginal {
        rv: query.to_string(),
        probabilities: probs,
    })
}

fn pick_min_degree(fg: &FactorGraph, factors: &[Dense], remaining: &BTreeSet<usize>) -> usize {
    let mut best: Option<(usize, &str, usize)> = None;
    for &v in remaining {
        let mut nbrs = BTreeSet::new();
        for f in factors.iter().filter(|f| f.vars.contains(&v)) {
            nbrs.extend(f.vars.iter().copied().filter(|&x| x != v));
        }
        let key = (nbrs.len(), fg.rvs()[v].id.as_str(), v);
        if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
            best = Some(key);
        }
    }
    best.unwrap().2
}

/// Σ p(x) ln(p(x) / q(x)), with 0 ln(0 / q) = 0.
pub fn kld(p: &Marginal, q: &Marginal) -> Result<f64> {
    if p.rv != q.rv || p.probabilities.len() != q.probabilities.len() {
        return Err(Error::DomainMismatch(format!(
            "{} ({} values) vs {} ({} values)",
            p.rv,
            p.probabilities.len(),
            q.rv,
            q.probabilities.len()
        )));
    }
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.probabilities.iter().zip(&q.probabilities).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::InfiniteDivergence(format!("{}[{i}]", p.rv)));
        }
        total += pi * (pi / qi).ln();
    }
    // rounding can leave a tiny negative sum for (nearly) equal inputs
    Ok(total.max(0.0))
}

/// (variable classes / variables, factor classes / factors); lower means
/// more lifting.
pub fn compression_ratio(grouping: &Grouping, fg: &FactorGraph) -> (f64, f64) {
    let ratio = |classes: usize, nodes: usize| {
        if nodes == 0 {
            1.0
        } else {
            classes as f64 / nodes as f64
        }
    };
    (
        ratio(grouping.rv_classes.len(), fg.rvs().len()),
        ratio(grouping.factor_classes.len(), fg.factors().len()),
    )
}
