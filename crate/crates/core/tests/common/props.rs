//! Property checks, each usable from `proptest!` and from a manual runner.

use lifg::colour::{grounded_equivalence_check, run_acp};
use lifg::inference::{
    kld, variable_elimination, variable_elimination_ordered, EliminationOrder, Marginal,
};
use lifg::lifg::{indistinguishable, run_lifg};
use lifg::model::format::{parse_evidence, parse_model, serialize_evidence, serialize_model};
use lifg::model::{joint_distribution, Evidence, FactorGraph, Potential};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::{
    as_sets, brute_marginal, check, indistinguishable_oracle, relabel, rename_partition, rng,
};

type Outcome = Result<(), TestCaseError>;

pub fn indistinguishability_is_equivalence(fg: &FactorGraph) -> Outcome {
    let ids: Vec<&str> = fg.factors().iter().map(|f| f.id.as_str()).collect();
    let n = ids.len();
    let mut rel = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            rel[i][j] = indistinguishable(fg, ids[i], ids[j]).unwrap();
            check(
                rel[i][j] == indistinguishable_oracle(fg, ids[i], ids[j]),
                format!(
                    "{} vs {} disagrees with the bijection search",
                    ids[i], ids[j]
                ),
            )?;
        }
    }
    for i in 0..n {
        check(rel[i][i], format!("{} not reflexive", ids[i]))?;
        for j in 0..n {
            check(
                rel[i][j] == rel[j][i],
                format!("{} / {} not symmetric", ids[i], ids[j]),
            )?;
            for k in 0..n {
                if rel[i][j] && rel[j][k] {
                    check(
                        rel[i][k],
                        format!("{} {} {} not transitive", ids[i], ids[j], ids[k]),
                    )?;
                }
            }
        }
    }
    Ok(())
}

fn normalised(raw: &[f64]) -> Marginal {
    let z: f64 = raw.iter().sum();
    Marginal {
        rv: "X".into(),
        probabilities: raw.iter().map(|x| x / z).collect(),
    }
}

pub fn distribution_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..10.0, n),
            prop::collection::vec(0.01f64..10.0, n),
        )
    })
}

pub fn kld_nonnegative_and_zero_iff_equal(a: &[f64], b: &[f64]) -> Outcome {
    let p = normalised(a);
    let q = normalised(b);
    let d = kld(&p, &q).unwrap();
    check(d >= 0.0, format!("negative divergence {d}"))?;
    check(kld(&p, &p).unwrap() == 0.0, "self divergence not zero")?;
    let gap = p
        .probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if gap > 1e-6 {
        check(
            d > 0.0,
            format!("distinct distributions (gap {gap}) gave zero divergence"),
        )?;
    }
    Ok(())
}

/// Strips evidence and blanks every factor whose index is in `unknown`.
fn model_part(fg: &FactorGraph, unknown_mask: u64) -> FactorGraph {
    let blanked = fg.map_potentials(|i, f| {
        if unknown_mask >> (i % 64) & 1 == 1 {
            Potential::Unknown
        } else {
            f.potential.clone()
        }
    });
    let rvs = blanked
        .rvs()
        .iter()
        .cloned()
        .map(|mut r| {
            r.evidence = None;
            r
        })
        .collect();
    FactorGraph::new(rvs, blanked.factors().to_vec())
}

pub fn format_round_trip(fg: &FactorGraph, unknown_mask: u64) -> Outcome {
    let model = model_part(fg, unknown_mask);
    let text = serialize_model(&model);
    let back = parse_model(&text).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(back == model, "model changed in a round trip")?;
    check(serialize_model(&back) == text, "serialization not stable")?;
    for (a, b) in model.factors().iter().zip(back.factors()) {
        if let (Some(x), Some(y)) = (a.table(), b.table()) {
            let same = x
                .entries()
                .iter()
                .zip(y.entries())
                .all(|(u, v)| u.to_bits() == v.to_bits());
            check(same, format!("{} potentials not bit-identical", a.id))?;
        }
    }
    let ev = fg.evidence();
    let ev_back =
        parse_evidence(&serialize_evidence(&ev)).map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(ev_back == ev, "evidence changed in a round trip")?;
    let restored = back
        .with_evidence(&ev_back)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    check(restored.rvs() == fg.rvs(), "evidence not restored")
}

pub fn acp_invariant_under_relabelling(fg: &FactorGraph, seed: u64) -> Outcome {
    let g = run_acp(fg).unwrap();
    let again = run_acp(fg).unwrap();
    check(g == again, "two runs differ")?;
    check(g.report() == again.report(), "two reports differ")?;
    let (h, names) = relabel(fg, &mut rng(seed));
    let gh = run_acp(&h).unwrap();
    check(
        rename_partition(&g.rv_partition(), &names) == as_sets(&gh.rv_partition()),
        "variable partition changed under relabelling",
    )?;
    check(
        rename_partition(&g.factor_partition(), &names) == as_sets(&gh.factor_partition()),
        "factor partition changed under relabelling",
    )
}

pub fn lifg_invariant_under_relabelling(fg: &FactorGraph, unknown_mask: u64, seed: u64) -> Outcome {
    let blanked = fg.map_potentials(|i, f| {
        if unknown_mask >> (i % 64) & 1 == 1 {
            Potential::Unknown
        } else {
            f.potential.clone()
        }
    });
    let (h, names) = relabel(&blanked, &mut rng(seed));
    let a = run_lifg(&blanked, 0.0, None).unwrap();
    let b = run_lifg(&h, 0.0, None).unwrap();
    let mut ua: Vec<String> = a
        .report
        .unresolved
        .iter()
        .map(|u| names[u].clone())
        .collect();
    let mut ub = b.report.unresolved.clone();
    ua.sort();
    ub.sort();
    check(ua == ub, "unresolved set changed under relabelling")?;
    // Donor choice breaks ties by id, so only what precedes it is compared.
    let shape = |o: &lifg::lifg::LiftOutcome, rename: bool| {
        let mut v: Vec<(String, usize, Vec<usize>)> = o
            .report
            .entries
            .iter()
            .map(|e| {
                let id = if rename {
                    names[&e.unknown].clone()
                } else {
                    e.unknown.clone()
                };
                (id, e.candidates, e.class_sizes.clone())
            })
            .collect();
        v.sort();
        v
    };
    check(
        shape(&a, true) == shape(&b, false),
        "candidate sets changed under relabelling",
    )
}

pub fn joint_is_normalised(fg: &FactorGraph) -> Outcome {
    let j = joint_distribution(fg).unwrap();
    check(
        (j.total() - 1.0).abs() <= 1e-12,
        format!("joint sums to {}", j.total()),
    )?;
    check(j.probs.iter().all(|&p| p > 0.0), "non-positive joint entry")
}

pub fn ve_matches_brute_force(fg: &FactorGraph, tol: f64) -> Outcome {
    let none = Evidence::new();
    for rv in fg.rvs() {
        let oracle = brute_marginal(fg, &rv.id, &none);
        for order in [EliminationOrder::MinDegree, EliminationOrder::ReverseId] {
            let m = variable_elimination_ordered(fg, &rv.id, &none, order).unwrap();
            let err = m
                .probabilities
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            check(err <= tol, format!("{} off by {err} ({order:?})", rv.id))?;
        }
    }
    Ok(())
}

pub fn ve_matches_joint(fg: &FactorGraph, tol: f64) -> Outcome {
    let j = joint_distribution(fg).unwrap();
    let ev = lifg::model::JointDistribution::evidence_indices(fg, &fg.evidence()).unwrap();
    for rv in fg.rvs() {
        let Some(oracle) = j.conditional(&rv.id, &ev) else {
            continue;
        };
        let m = variable_elimination(fg, &rv.id, &Evidence::new()).unwrap();
        let err = m
            .probabilities
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(err <= tol, format!("{} off by {err}", rv.id))?;
    }
    Ok(())
}

pub fn lifting_is_lossless(fg: &FactorGraph) -> Outcome {
    let g = run_acp(fg).unwrap();
    check(
        grounded_equivalence_check(fg, &g).unwrap(),
        "grounded grouping changes the joint",
    )
}

pub fn lifg_matches_acp_on_known(fg: &FactorGraph, theta: f64) -> Outcome {
    let acp = run_acp(fg).unwrap();
    let out = run_lifg(fg, theta, None).unwrap();
    check(out.completed == *fg, "known graph modified")?;
    check(
        as_sets(&out.grouping.rv_partition()) == as_sets(&acp.rv_partition()),
        "variable partitions differ",
    )?;
    check(
        as_sets(&out.grouping.factor_partition()) == as_sets(&acp.factor_partition()),
        "factor partitions differ",
    )
}
