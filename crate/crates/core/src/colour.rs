//! Colour passing over the bipartite factor graph.
//!
//! Variables start with a colour derived from (range, evidence), factors
//! with a colour derived from their canonical potential table. Each round
//! factors are recoloured by their own colour and the colours of their
//! arguments in canonical argument order, then variables by their own colour
//! and the multiset of (factor colour, canonical position) messages they
//! receive. Rounds repeat until the partition stops changing.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::table::{invert, CanonicalTable};
use crate::model::{
    joint_distribution, FactorGraph, Potential, PotentialEq, PotentialTable, RangeSpec,
};

/// A colour per node. Vectors are aligned with `fg.rvs()` and
/// `fg.factors()`; variable and factor colours never overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colouring {
    pub rv: Vec<u32>,
    pub factor: Vec<u32>,
}

impl Colouring {
    pub fn rv_colour(&self, fg: &FactorGraph, id: &str) -> Option<u32> {
        fg.rv_idx(id).map(|i| self.rv[i])
    }

    pub fn factor_colour(&self, fg: &FactorGraph, id: &str) -> Option<u32> {
        fg.factor_idx(id).map(|i| self.factor[i])
    }

    pub fn rv_partition(&self, fg: &FactorGraph) -> Vec<Vec<String>> {
        partition_of(&self.rv, |i| fg.rvs()[i].id.clone())
    }

    pub fn factor_partition(&self, fg: &FactorGraph) -> Vec<Vec<String>> {
        partition_of(&self.factor, |i| fg.factors()[i].id.clone())
    }

    /// True when both colourings induce the same partition of the nodes.
    pub fn same_partition(&self, other: &Colouring) -> bool {
        same_blocks(&self.rv, &other.rv) && same_blocks(&self.factor, &other.factor)
    }

    pub fn class_count(&self) -> usize {
        distinct(&self.rv) + distinct(&self.factor)
    }
}

fn distinct(v: &[u32]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

fn same_blocks(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Sorted classes of sorted member ids.
fn partition_of(colours: &[u32], id: impl Fn(usize) -> String) -> Vec<Vec<String>> {
    let mut by_colour: HashMap<u32, Vec<String>> = HashMap::new();
    for (i, &c) in colours.iter().enumerate() {
        by_colour.entry(c).or_default().push(id(i));
    }
    let mut classes: Vec<Vec<String>> = by_colour.into_values().collect();
    classes.iter_mut().for_each(|c| c.sort());
    classes.sort();
    classes
}

/// Dense ranks of `keys` in sorted order, starting at `offset`.
fn dense_ranks<K: Ord>(keys: &[K], offset: u32) -> Vec<u32> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut out = vec![0; keys.len()];
    let mut next = offset;
    for (n, &i) in order.iter().enumerate() {
        if n > 0 && keys[order[n - 1]] != keys[i] {
            next += 1;
        }
        out[i] = next;
    }
    out
}

/// How a factor enters the initial colouring.
#[derive(Debug, Clone)]
pub(crate) enum Seed {
    /// Coloured by its (canonical) potential table.
    Table,
    /// Pre-coloured: factors sharing a key share a colour distinct from
    /// every table colour.
    Preset(String),
}

/// Per-factor canonical data reused across rounds.
pub(crate) struct Canon {
    pub(crate) tables: Vec<Option<CanonicalTable>>,
}

impl Canon {
    pub(crate) fn of(fg: &FactorGraph) -> Self {
        Self {
            tables: fg
                .factors()
                .iter()
                .map(|f| f.table().map(CanonicalTable::of))
                .collect(),
        }
    }

    fn perms(&self, fg: &FactorGraph, f: usize) -> Vec<Vec<usize>> {
        match &self.tables[f] {
            Some(c) => c.perms.clone(),
            None => CanonicalTable::identity(fg.args_of(f).len()),
        }
    }
}

fn rv_key(fg: &FactorGraph, i: usize) -> (&RangeSpec, Option<&str>) {
    let rv = &fg.rvs()[i];
    (&rv.range, rv.evidence.as_deref())
}

/// Groups known factors by canonical table under `eq`. Returns one group
/// index per factor (None for factors without a table), groups numbered in
/// sorted canonical order.
pub(crate) fn table_groups(canon: &Canon, eq: PotentialEq) -> Vec<Option<u32>> {
    let mut known: Vec<usize> = (0..canon.tables.len())
        .filter(|&i| canon.tables[i].is_some())
        .collect();
    let table = |i: usize| &canon.tables[i].as_ref().unwrap().table;
    known.sort_by(|&a, &b| table(a).lex_cmp(table(b)).then(a.cmp(&b)));
    let mut out = vec![None; canon.tables.len()];
    let mut rep: Option<usize> = None;
    let mut group = 0u32;
    for &i in &known {
        match rep {
            Some(r) if eq.tables_eq(table(r), table(i)) => {}
            Some(_) => {
                group += 1;
                rep = Some(i);
            }
            None => rep = Some(i),
        }
        out[i] = Some(group);
    }
    out
}

pub(crate) fn seeded_colouring(
    fg: &FactorGraph,
    canon: &Canon,
    seeds: &[Seed],
    eq: PotentialEq,
) -> Colouring {
    let rv_keys: Vec<_> = (0..fg.rvs().len()).map(|i| rv_key(fg, i)).collect();
    let rv = dense_ranks(&rv_keys, 0);
    let offset = rv.iter().max().map_or(0, |m| m + 1);
    let groups = table_groups(canon, eq);
    // Table colours sort before preset colours.
    let keys: Vec<(u8, u32, &str)> = seeds
        .iter()
        .zip(&groups)
        .map(|(s, g)| match s {
            Seed::Table => (0, g.expect("table seed on known factor"), ""),
            Seed::Preset(k) => (1, 0, k.as_str()),
        })
        .collect();
    let factor = dense_ranks(&keys, offset);
    Colouring { rv, factor }
}

/// Colours from ranges, evidence and potential tables.
pub fn initial_colouring(fg: &FactorGraph) -> Result<Colouring> {
    initial_colouring_with(fg, PotentialEq::EXACT)
}

pub fn initial_colouring_with(fg: &FactorGraph, eq: PotentialEq) -> Result<Colouring> {
    fg.ensure_valid()?;
    fg.ensure_all_known()?;
    let canon = Canon::of(fg);
    let seeds = vec![Seed::Table; fg.factors().len()];
    Ok(seeded_colouring(fg, &canon, &seeds, eq))
}

/// One round of colour passing.
pub fn colour_passing_step(fg: &FactorGraph, colouring: &Colouring) -> Colouring {
    step(fg, &Canon::of(fg), colouring)
}

fn step(fg: &FactorGraph, canon: &Canon, col: &Colouring) -> Colouring {
    let nf = fg.factors().len();
    let mut factor_sigs = Vec::with_capacity(nf);
    // canonical position of each argument, per factor
    let mut positions: Vec<Vec<u32>> = Vec::with_capacity(nf);
    for f in 0..nf {
        let args = fg.args_of(f);
        let perms = canon.perms(fg, f);
        let tuple = |p: &Vec<usize>| -> Vec<u32> { p.iter().map(|&k| col.rv[args[k]]).collect() };
        let best = perms.iter().map(tuple).min().unwrap_or_default();
        let mut pos = vec![u32::MAX; args.len()];
        for p in perms.iter().filter(|p| tuple(p) == best) {
            for (k, &orig) in p.iter().enumerate() {
                pos[orig] = pos[orig].min(k as u32);
            }
        }
        factor_sigs.push((col.factor[f], best));
        positions.push(pos);
    }
    let new_factor = dense_ranks(&factor_sigs, 0);

    let rv_sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..fg.rvs().len())
        .map(|r| {
            let mut msgs: Vec<(u32, u32)> = fg
                .edges_of(r)
                .iter()
                .map(|&(f, p)| (new_factor[f], positions[f][p]))
                .collect();
            msgs.sort_unstable();
            (col.rv[r], msgs)
        })
        .collect();
    let rv = dense_ranks(&rv_sigs, 0);
    let offset = rv.iter().max().map_or(0, |m| m + 1);
    Colouring {
        rv,
        factor: new_factor.into_iter().map(|c| c + offset).collect(),
    }
}

/// Iterates colour passing from `start` until the partition is stable.
pub(crate) fn refine(fg: &FactorGraph, canon: &Canon, start: Colouring) -> Colouring {
    let mut cur = start;
    // Each non-final round splits at least one class.
    let bound = fg.rvs().len() + fg.factors().len() + 1;
    for _ in 0..bound {
        let next = step(fg, canon, &cur);
        if next.same_partition(&cur) {
            return next;
        }
        cur = next;
    }
    cur
}

/// Stable colouring of a fully known graph.
pub fn acp_colouring(fg: &FactorGraph, eq: PotentialEq) -> Result<Colouring> {
    let start = initial_colouring_with(fg, eq)?;
    Ok(refine(fg, &Canon::of(fg), start))
}

pub fn run_acp(fg: &FactorGraph) -> Result<Grouping> {
    run_acp_with(fg, PotentialEq::EXACT)
}

pub fn run_acp_with(fg: &FactorGraph, eq: PotentialEq) -> Result<Grouping> {
    let col = acp_colouring(fg, eq)?;
    Ok(Grouping::from_colouring(fg, &Canon::of(fg), &col))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RvClass {
    pub members: Vec<String>,
}

/// A factor in a class together with the argument order that maps its own
/// table onto the class table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMember {
    pub id: String,
    /// `perm[k]` is the member's argument sitting at class position `k`.
    pub perm: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorClass {
    pub members: Vec<ClassMember>,
    /// Shared table in class argument order; `None` for unresolved unknowns.
    pub table: Option<PotentialTable>,
}

impl FactorClass {
    pub fn member_ids(&self) -> Vec<String> {
        self.members.iter().map(|m| m.id.clone()).collect()
    }
}

/// Lifted representation: classes of interchangeable variables and
/// factors. The size of a class is its multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    pub rv_classes: Vec<RvClass>,
    pub factor_classes: Vec<FactorClass>,
}

impl Grouping {
    pub(crate) fn from_colouring(fg: &FactorGraph, canon: &Canon, col: &Colouring) -> Self {
        let rv_classes = col
            .rv_partition(fg)
            .into_iter()
            .map(|members| RvClass { members })
            .collect();
        let factor_classes = col
            .factor_partition(fg)
            .into_iter()
            .map(|ids| {
                let members: Vec<ClassMember> = ids
                    .into_iter()
                    .map(|id| {
                        let i = fg.factor_idx(&id).expect("member of fg");
                        let perm = match &canon.tables[i] {
                            Some(c) => c.perms[0].clone(),
                            None => CanonicalTable::identity(fg.args_of(i).len()).remove(0),
                        };
                        ClassMember { id, perm }
                    })
                    .collect();
                let first = fg.factor_idx(&members[0].id).unwrap();
                let table = canon.tables[first].as_ref().map(|c| c.table.clone());
                FactorClass { members, table }
            })
            .collect();
        Self {
            rv_classes,
            factor_classes,
        }
    }

    pub fn rv_partition(&self) -> Vec<Vec<String>> {
        self.rv_classes.iter().map(|c| c.members.clone()).collect()
    }

    pub fn factor_partition(&self) -> Vec<Vec<String>> {
        self.factor_classes
            .iter()
            .map(FactorClass::member_ids)
            .collect()
    }

    /// Expands the grouping back to ground factors: every member receives
    /// its class table in its own argument order.
    pub fn ground(&self, fg: &FactorGraph) -> Result<FactorGraph> {
        let mut tables: HashMap<&str, Potential> = HashMap::new();
        for class in &self.factor_classes {
            for m in &class.members {
                let p = match &class.table {
                    Some(t) => Potential::Known(t.permuted(&invert(&m.perm))),
                    None => Potential::Unknown,
                };
                tables.insert(m.id.as_str(), p);
            }
        }
        let mut missing = None;
        let out = fg.map_potentials(|_, f| match tables.get(f.id.as_str()) {
            Some(p) => p.clone(),
            None => {
                missing.get_or_insert_with(|| f.id.clone());
                f.potential.clone()
            }
        });
        match missing {
            Some(id) => Err(Error::UnknownNode(id)),
            None => Ok(out),
        }
    }

    /// `class <id> kind=<rv|factor> size=<n> members=<ids>` per class,
    /// variable classes first.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let classes = self
            .rv_classes
            .iter()
            .map(|c| ("rv", c.members.clone()))
            .chain(
                self.factor_classes
                    .iter()
                    .map(|c| ("factor", c.member_ids())),
            );
        for (id, (kind, members)) in classes.enumerate() {
            writeln!(
                out,
                "class {id} kind={kind} size={} members={}",
                members.len(),
                members.join(",")
            )
            .unwrap();
        }
        out
    }
}

/// Lossless-lifting check: the joint of `fg` equals the joint of the
/// grounded grouping within 1e-12 per entry.
pub fn grounded_equivalence_check(fg: &FactorGraph, grouping: &Grouping) -> Result<bool> {
    let truth = joint_distribution(fg)?;
    let grounded = match grouping.ground(fg) {
        Ok(g) => g,
        Err(Error::UnknownNode(_)) => return Ok(false),
        Err(e) => return Err(e),
    };
    let lifted = joint_distribution(&grounded)?;
    Ok(truth.max_abs_diff(&lifted) <= 1e-12)
}
