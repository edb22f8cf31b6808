//! Expected groupings for the hand-encoded example models.

use std::collections::BTreeSet;

use lifg::colour::{acp_colouring, colour_passing_step, initial_colouring, run_acp};
use lifg::fixtures::{
    chain, epidemic_known, epidemic_new_individual, epidemic_two_groups,
    epidemic_two_groups_background, CHAIN_TABLE,
};
use lifg::lifg::{run_lifg, LiftOutcome};
use lifg::model::PotentialEq;

use super::as_sets;

type Check = Result<(), String>;

fn blocks(spec: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    spec.iter()
        .map(|b| b.iter().map(|s| s.to_string()).collect())
        .collect()
}

fn expect_eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Check {
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: got {got:?}, want {want:?}"))
    }
}

pub fn chain_grouping() -> Check {
    let fg = chain(CHAIN_TABLE);
    let init = initial_colouring(&fg).map_err(|e| e.to_string())?;
    expect_eq(
        "initial variable colours",
        as_sets(&init.rv_partition(&fg)),
        blocks(&[&["A", "B", "C"]]),
    )?;
    expect_eq(
        "initial factor colours",
        as_sets(&init.factor_partition(&fg)),
        blocks(&[&["f1", "f2"]]),
    )?;
    let step = colour_passing_step(&fg, &init);
    expect_eq(
        "after one step",
        as_sets(&step.rv_partition(&fg)),
        blocks(&[&["A", "C"], &["B"]]),
    )?;
    let g = run_acp(&fg).map_err(|e| e.to_string())?;
    expect_eq(
        "variable classes",
        as_sets(&g.rv_partition()),
        blocks(&[&["A", "C"], &["B"]]),
    )?;
    expect_eq(
        "factor classes",
        as_sets(&g.factor_partition()),
        blocks(&[&["f1", "f2"]]),
    )
}

fn epidemic_two_person_rv_blocks(extra: &[&str]) -> BTreeSet<BTreeSet<String>> {
    let mut people = vec!["alice", "bob"];
    people.extend_from_slice(extra);
    let mut out = BTreeSet::new();
    out.insert(BTreeSet::from(["Epid".to_string()]));
    for prefix in ["Sick", "Travel"] {
        out.insert(people.iter().map(|p| format!("{prefix}.{p}")).collect());
    }
    out.insert(
        people
            .iter()
            .flat_map(|p| ["m1", "m2"].map(|m| format!("Treat.{p}.{m}")))
            .collect(),
    );
    out
}

fn epidemic_factor_blocks(people: &[&str]) -> BTreeSet<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    out.insert(BTreeSet::from(["f0".to_string()]));
    out.insert(people.iter().map(|p| format!("f1.{p}")).collect());
    out.insert(
        people
            .iter()
            .flat_map(|p| ["m1", "m2"].map(|m| format!("f2.{p}.{m}")))
            .collect(),
    );
    out.insert(people.iter().map(|p| format!("f3.{p}")).collect());
    out
}

pub fn epidemic_grouping() -> Check {
    let fg = epidemic_known();
    let g = run_acp(&fg).map_err(|e| e.to_string())?;
    expect_eq(
        "variable classes",
        as_sets(&g.rv_partition()),
        epidemic_two_person_rv_blocks(&[]),
    )?;
    expect_eq(
        "factor classes",
        as_sets(&g.factor_partition()),
        epidemic_factor_blocks(&["alice", "bob"]),
    )?;
    // the four factor groups are told apart from the start
    let col = acp_colouring(&fg, PotentialEq::EXACT).map_err(|e| e.to_string())?;
    let f = |id: &str| col.factor_colour(&fg, id).unwrap();
    let distinct: BTreeSet<u32> = ["f0", "f1.alice", "f2.alice.m1", "f3.alice"]
        .iter()
        .map(|id| f(id))
        .collect();
    expect_eq("distinct factor colours", distinct.len(), 4)
}

pub fn epidemic_completion() -> Check {
    let fg = epidemic_new_individual();
    let out = run_lifg(&fg, 0.0, None).map_err(|e| e.to_string())?;
    expect_eq("unresolved", out.report.unresolved.len(), 0)?;
    expect_eq("unknown left", out.completed.has_unknown(), false)?;
    for e in &out.report.entries {
        expect_eq(
            &format!("classes for {}", e.unknown),
            e.class_sizes.len(),
            1,
        )?;
        expect_eq(&format!("ratio for {}", e.unknown), e.ratio, 1.0)?;
    }
    let people = ["alice", "bob", "eve"];
    expect_eq(
        "variable classes",
        as_sets(&out.grouping.rv_partition()),
        epidemic_two_person_rv_blocks(&["eve"]),
    )?;
    expect_eq(
        "factor classes",
        as_sets(&out.grouping.factor_partition()),
        epidemic_factor_blocks(&people),
    )?;
    // same result at the strictest threshold
    let strict = run_lifg(&fg, 1.0, None).map_err(|e| e.to_string())?;
    expect_eq("completion at theta 1", strict.completed, out.completed)
}

fn treat_selection(out: &LiftOutcome, unknown: &str) -> Result<BTreeSet<String>, String> {
    let e = out
        .report
        .entries
        .iter()
        .find(|e| e.unknown == unknown)
        .ok_or_else(|| format!("no entry for {unknown}"))?;
    expect_eq(
        &format!("class sizes for {unknown}"),
        e.class_sizes.clone(),
        vec![4, 2],
    )?;
    Ok(e.chosen.clone().unwrap_or_default().into_iter().collect())
}

pub fn two_groups_with_background() -> Check {
    let fg = epidemic_two_groups();
    let bk = epidemic_two_groups_background();
    let out = run_lifg(&fg, 0.0, Some(&bk)).map_err(|e| e.to_string())?;
    for m in ["m1", "m2"] {
        expect_eq(
            &format!("class chosen for f2.eve.{m}"),
            treat_selection(&out, &format!("f2.eve.{m}"))?,
            ["f2.dave.m1", "f2.dave.m2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )?;
    }
    let main = epidemic_factor_blocks(&["alice", "bob"]);
    let alt = epidemic_factor_blocks(&["dave", "eve"]);
    let want: BTreeSet<_> = main.union(&alt).cloned().collect();
    expect_eq(
        "factor classes",
        as_sets(&out.grouping.factor_partition()),
        want,
    )?;
    let rv_want: BTreeSet<_> = epidemic_two_person_rv_blocks(&[])
        .into_iter()
        .chain(epidemic_two_person_rv_blocks(&[]).into_iter().map(|b| {
            b.iter()
                .map(|s| s.replace("alice", "dave").replace("bob", "eve"))
                .collect()
        }))
        .collect();
    expect_eq(
        "variable classes",
        as_sets(&out.grouping.rv_partition()),
        rv_want,
    )
}

pub fn two_groups_without_background() -> Check {
    let fg = epidemic_two_groups();
    let out = run_lifg(&fg, 0.0, None).map_err(|e| e.to_string())?;
    for m in ["m1", "m2"] {
        expect_eq(
            &format!("class chosen for f2.eve.{m}"),
            treat_selection(&out, &format!("f2.eve.{m}"))?,
            ["f2.alice.m1", "f2.alice.m2", "f2.bob.m1", "f2.bob.m2"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )?;
    }
    // eve's factors now mix both tables and form classes of their own
    let want = blocks(&[
        &["f0"],
        &["f1.alice", "f1.bob"],
        &["f1.dave"],
        &["f1.eve"],
        &["f2.alice.m1", "f2.alice.m2", "f2.bob.m1", "f2.bob.m2"],
        &["f2.dave.m1", "f2.dave.m2"],
        &["f2.eve.m1", "f2.eve.m2"],
        &["f3.alice", "f3.bob"],
        &["f3.dave"],
        &["f3.eve"],
    ]);
    expect_eq(
        "factor classes",
        as_sets(&out.grouping.factor_partition()),
        want,
    )
}
