//! Random graph generators and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

pub mod goldens;
pub mod props;

use std::collections::{BTreeMap, BTreeSet};

use lifg::model::table::permutations;
use lifg::model::{Evidence, Factor, FactorGraph, PotentialTable, RandomVariable, RangeSpec};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub max_hubs: usize,
    pub max_private: usize,
    pub max_template_factors: usize,
    pub max_replicas: usize,
    pub max_extra: usize,
    pub max_arity: usize,
    pub evidence_prob: f64,
    pub max_states: u128,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_hubs: 2,
            max_private: 3,
            max_template_factors: 3,
            max_replicas: 4,
            max_extra: 2,
            max_arity: 3,
            evidence_prob: 0.0,
            max_states: 1 << 16,
        }
    }
}

const VALUES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 4.5];

fn random_table(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> PotentialTable {
    let n = shape.iter().product();
    let entries = (0..n).map(|_| *VALUES.choose(rng).unwrap()).collect();
    PotentialTable::new(shape, entries)
}

fn state_space(rvs: &[RandomVariable]) -> u128 {
    rvs.iter().map(|r| r.range.len() as u128).product()
}

/// A graph built from a small template copied several times around shared
/// hub variables, plus a few extra random factors. Each copy may pick one
/// of two table variants and shuffles its argument order, so symmetries
/// exist but are not visible from ids or argument positions.
pub fn random_graph(rng: &mut ChaCha8Rng, p: GenParams) -> FactorGraph {
    loop {
        if let Some(fg) = try_random_graph(rng, p) {
            return fg;
        }
    }
}

fn try_random_graph(rng: &mut ChaCha8Rng, p: GenParams) -> Option<FactorGraph> {
    let hubs = rng.gen_range(0..=p.max_hubs);
    let private = rng.gen_range(1..=p.max_private);
    let replicas = rng.gen_range(1..=p.max_replicas);
    let ranges: Vec<usize> = (0..hubs + private).map(|_| rng.gen_range(2..=3)).collect();

    let mut rvs = Vec::new();
    for (h, &k) in ranges[..hubs].iter().enumerate() {
        rvs.push(RandomVariable::new(
            format!("H{h}"),
            RangeSpec::new((0..k).map(|v| format!("v{v}"))),
        ));
    }
    for r in 0..replicas {
        for i in 0..private {
            let k = ranges[hubs + i];
            rvs.push(RandomVariable::new(
                format!("X{i}.{r}"),
                RangeSpec::new((0..k).map(|v| format!("v{v}"))),
            ));
        }
    }
    if state_space(&rvs) > p.max_states {
        return None;
    }
    let template_var = |slot: usize, r: usize| -> String {
        if slot < hubs {
            format!("H{slot}")
        } else {
            format!("X{}.{r}", slot - hubs)
        }
    };

    let mut factors = Vec::new();
    let n_templates = rng.gen_range(1..=p.max_template_factors);
    for t in 0..n_templates {
        let arity = rng.gen_range(1..=p.max_arity.min(hubs + private));
        let mut slots: Vec<usize> = (0..hubs + private).collect();
        slots.shuffle(rng);
        slots.truncate(arity);
        if slots.iter().all(|&s| s < hubs) {
            slots[0] = hubs + rng.gen_range(0..private);
            slots.sort_unstable();
            slots.dedup();
        }
        let shape: Vec<usize> = slots.iter().map(|&s| ranges[s]).collect();
        let variants = [random_table(rng, shape.clone()), random_table(rng, shape)];
        let two = rng.gen_bool(0.4);
        for r in 0..replicas {
            let table = &variants[if two { rng.gen_range(0..2) } else { 0 }];
            let args: Vec<String> = slots.iter().map(|&s| template_var(s, r)).collect();
            let mut perm: Vec<usize> = (0..args.len()).collect();
            perm.shuffle(rng);
            let args = perm.iter().map(|&k| args[k].clone()).collect();
            factors.push(Factor::known(
                format!("g{t}.{r}"),
                args,
                table.permuted(&perm),
            ));
        }
    }

    for e in 0..rng.gen_range(0..=p.max_extra) {
        let arity = rng.gen_range(1..=p.max_arity.min(rvs.len()));
        let mut idx: Vec<usize> = (0..rvs.len()).collect();
        idx.shuffle(rng);
        idx.truncate(arity);
        let args: Vec<String> = idx.iter().map(|&i| rvs[i].id.clone()).collect();
        let shape = idx.iter().map(|&i| rvs[i].range.len()).collect();
        factors.push(Factor::known(
            format!("e{e}"),
            args,
            random_table(rng, shape),
        ));
    }

    // every variable needs at least one factor
    let used: BTreeSet<&str> = factors
        .iter()
        .flat_map(|f| f.args.iter().map(String::as_str))
        .collect();
    let mut unary = Vec::new();
    for rv in &rvs {
        if !used.contains(rv.id.as_str()) {
            unary.push(Factor::known(
                format!("u.{}", rv.id),
                vec![rv.id.clone()],
                PotentialTable::new(vec![rv.range.len()], vec![1.0; rv.range.len()]),
            ));
        }
    }
    factors.extend(unary);

    for rv in rvs.iter_mut() {
        if rng.gen_bool(p.evidence_prob) {
            let v = rng.gen_range(0..rv.range.len());
            rv.evidence = Some(rv.range.values()[v].clone());
        }
    }
    Some(FactorGraph::new(rvs, factors))
}

pub fn graph_strategy(p: GenParams) -> impl Strategy<Value = FactorGraph> + Clone {
    any::<u64>().prop_map(move |seed| random_graph(&mut rng(seed), p))
}

/// Renames every node and shuffles variable, factor and argument order.
/// Returns the new graph and the old-to-new id map.
pub fn relabel(fg: &FactorGraph, rng: &mut ChaCha8Rng) -> (FactorGraph, BTreeMap<String, String>) {
    let mut names = BTreeMap::new();
    let mut rv_order: Vec<usize> = (0..fg.rvs().len()).collect();
    rv_order.shuffle(rng);
    let mut rvs = Vec::new();
    for (k, &i) in rv_order.iter().enumerate() {
        let mut rv = fg.rvs()[i].clone();
        let new = format!("r{k:03}");
        names.insert(rv.id.clone(), new.clone());
        rv.id = new;
        rvs.push(rv);
    }
    let mut f_order: Vec<usize> = (0..fg.factors().len()).collect();
    f_order.shuffle(rng);
    let mut factors = Vec::new();
    for (k, &i) in f_order.iter().enumerate() {
        let f = &fg.factors()[i];
        let new = format!("q{k:03}");
        names.insert(f.id.clone(), new.clone());
        let mut perm: Vec<usize> = (0..f.args.len()).collect();
        perm.shuffle(rng);
        let args = perm.iter().map(|&a| names[&f.args[a]].clone()).collect();
        let g = match f.table() {
            Some(t) => Factor::known(new, args, t.permuted(&perm)),
            None => Factor::unknown(new, args),
        };
        factors.push(g);
    }
    (FactorGraph::new(rvs, factors), names)
}

/// Partition with every id mapped and blocks re-sorted.
pub fn rename_partition(
    part: &[Vec<String>],
    names: &BTreeMap<String, String>,
) -> BTreeSet<BTreeSet<String>> {
    part.iter()
        .map(|b| b.iter().map(|id| names[id].clone()).collect())
        .collect()
}

pub fn as_sets(part: &[Vec<String>]) -> BTreeSet<BTreeSet<String>> {
    part.iter().map(|b| b.iter().cloned().collect()).collect()
}

/// Indistinguishability straight from the definition: equal neighbour
/// counts and some bijection between neighbours preserving evidence,
/// range and degree, found by trying every permutation.
pub fn indistinguishable_oracle(fg: &FactorGraph, a: &str, b: &str) -> bool {
    let fa = fg.factor(a).unwrap();
    let fb = fg.factor(b).unwrap();
    if fa.args.len() != fb.args.len() {
        return false;
    }
    let key = |id: &str| {
        let i = fg.rv_idx(id).unwrap();
        let r = &fg.rvs()[i];
        (r.evidence.clone(), r.range.clone(), fg.degree(i))
    };
    permutations(fa.args.len())
        .iter()
        .any(|tau| (0..fa.args.len()).all(|k| key(&fa.args[k]) == key(&fb.args[tau[k]])))
}

/// P(query | evidence) by enumerating every assignment of every variable.
pub fn brute_marginal(fg: &FactorGraph, query: &str, evidence: &Evidence) -> Vec<f64> {
    let rvs = fg.rvs();
    let shape: Vec<usize> = rvs.iter().map(|r| r.range.len()).collect();
    let mut fixed: Vec<Option<usize>> = rvs.iter().map(|r| r.evidence_index()).collect();
    for (k, v) in evidence {
        let i = fg.rv_idx(k).unwrap();
        fixed[i] = rvs[i].range.index_of(v);
    }
    let q = fg.rv_idx(query).unwrap();
    let mut out = vec![0.0; shape[q]];
    let mut a = vec![0usize; shape.len()];
    loop {
        if a.iter().zip(&fixed).all(|(x, f)| f.is_none_or(|f| f == *x)) {
            let mut w = 1.0;
            for (fi, f) in fg.factors().iter().enumerate() {
                let sub: Vec<usize> = fg.args_of(fi).iter().map(|&r| a[r]).collect();
                w *= f.table().unwrap().get(&sub);
            }
            out[a[q]] += w;
        }
        let mut k = shape.len();
        loop {
            if k == 0 {
                let z: f64 = out.iter().sum();
                return out.iter().map(|x| x / z).collect();
            }
            k -= 1;
            a[k] += 1;
            if a[k] < shape[k] {
                break;
            }
            a[k] = 0;
        }
    }
}

pub fn check(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}
