//! Completing factor graphs with unknown factors.
//!
//! An unknown factor receives the potentials of known factors whose 2-step
//! neighbourhood is indistinguishable from its own, provided the chosen
//! group of donors covers at least a fraction `theta` of all candidates.
//! Background knowledge about which factors belong to the same individual
//! can steer the choice of donor group. Colour passing then runs on the
//! completed graph.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use crate::colour::{refine, seeded_colouring, table_groups, Canon, Colouring, Grouping, Seed};
use crate::error::{Error, Result};
use crate::model::format::format_sig;
use crate::model::{BackgroundKnowledge, FactorGraph, Potential, PotentialEq, RangeSpec};

/// What a factor "sees" of one neighbouring variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeighbourTriple {
    pub evidence: Option<String>,
    pub range: RangeSpec,
    pub degree: usize,
}

/// Sorted multiset of neighbour triples. Two factors have indistinguishable
/// 2-step neighbourhoods exactly when their signatures are equal: a
/// triple-preserving bijection between neighbour sets exists iff the
/// multisets coincide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NeighbourhoodSignature {
    pub neighbour_count: usize,
    pub neighbour_profile: Vec<NeighbourTriple>,
}

fn triple(fg: &FactorGraph, rv: usize) -> NeighbourTriple {
    let r = &fg.rvs()[rv];
    NeighbourTriple {
        evidence: r.evidence.clone(),
        range: r.range.clone(),
        degree: fg.degree(rv),
    }
}

fn triples(fg: &FactorGraph, factor: usize) -> Vec<NeighbourTriple> {
    fg.args_of(factor).iter().map(|&r| triple(fg, r)).collect()
}

pub fn neighbourhood_signature(fg: &FactorGraph, factor: usize) -> NeighbourhoodSignature {
    let mut profile = triples(fg, factor);
    profile.sort();
    NeighbourhoodSignature {
        neighbour_count: profile.len(),
        neighbour_profile: profile,
    }
}

fn factor_index(fg: &FactorGraph, id: &str) -> Result<usize> {
    fg.factor_idx(id)
        .ok_or_else(|| Error::UnknownNode(id.to_string()))
}

/// The factor's neighbours, plus every factor sharing one of them
/// (including the factor itself).
pub fn two_step_neighbourhood(fg: &FactorGraph, factor: &str) -> Result<BTreeSet<String>> {
    let f = factor_index(fg, factor)?;
    let mut out = BTreeSet::new();
    out.insert(fg.factors()[f].id.clone());
    for &r in fg.args_of(f) {
        out.insert(fg.rvs()[r].id.clone());
        for &(g, _) in fg.edges_of(r) {
            out.insert(fg.factors()[g].id.clone());
        }
    }
    Ok(out)
}

pub fn indistinguishable(fg: &FactorGraph, fi: &str, fj: &str) -> Result<bool> {
    let (a, b) = (factor_index(fg, fi)?, factor_index(fg, fj)?);
    Ok(neighbourhood_signature(fg, a) == neighbourhood_signature(fg, b))
}

pub fn possibly_identical(fg: &FactorGraph, fi: &str, fj: &str) -> Result<bool> {
    possibly_identical_with(fg, fi, fj, PotentialEq::EXACT)
}

/// Indistinguishable neighbourhoods, and either side unknown or both
/// tables equal up to argument order.
pub fn possibly_identical_with(
    fg: &FactorGraph,
    fi: &str,
    fj: &str,
    eq: PotentialEq,
) -> Result<bool> {
    if !indistinguishable(fg, fi, fj)? {
        return Ok(false);
    }
    let (a, b) = (fg.factor(fi).unwrap(), fg.factor(fj).unwrap());
    Ok(match (a.table(), b.table()) {
        (Some(x), Some(y)) => eq.tables_eq(
            &crate::model::CanonicalTable::of(x).table,
            &crate::model::CanonicalTable::of(y).table,
        ),
        _ => true,
    })
}

/// Colour of every known factor by its potentials (unknown factors have
/// none). Used to compare factors across individuals.
#[derive(Debug, Clone)]
pub struct PotentialColours {
    by_id: HashMap<String, u32>,
}

impl PotentialColours {
    pub fn of(fg: &FactorGraph, eq: PotentialEq) -> Self {
        Self::from_groups(fg, &table_groups(&Canon::of(fg), eq))
    }

    fn from_groups(fg: &FactorGraph, groups: &[Option<u32>]) -> Self {
        let by_id = fg
            .factors()
            .iter()
            .zip(groups)
            .filter_map(|(f, g)| g.map(|g| (f.id.clone(), g)))
            .collect();
        Self { by_id }
    }

    pub fn get(&self, factor: &str) -> Option<u32> {
        self.by_id.get(factor).copied()
    }
}

/// Known factors possibly identical to one unknown factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub unknown_factor: String,
    /// Other unknown factors possibly identical to this one.
    pub unknown_peers: Vec<String>,
    /// All known candidates, sorted.
    pub candidates: Vec<String>,
    /// Maximal pairwise possibly-identical subsets of `candidates`, largest
    /// first, ties broken by smallest member id. Members sorted.
    pub classes: Vec<Vec<String>>,
}

pub fn candidate_sets(fg: &FactorGraph) -> Result<Vec<CandidateSet>> {
    candidate_sets_with(fg, PotentialEq::EXACT)
}

pub fn candidate_sets_with(fg: &FactorGraph, eq: PotentialEq) -> Result<Vec<CandidateSet>> {
    fg.ensure_valid()?;
    let groups = table_groups(&Canon::of(fg), eq);
    Ok(build_candidate_sets(fg, &groups))
}

fn build_candidate_sets(fg: &FactorGraph, groups: &[Option<u32>]) -> Vec<CandidateSet> {
    let factors = fg.factors();
    let mut by_sig: HashMap<NeighbourhoodSignature, Vec<usize>> = HashMap::new();
    for i in 0..factors.len() {
        by_sig
            .entry(neighbourhood_signature(fg, i))
            .or_default()
            .push(i);
    }
    let mut out = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        if !f.is_unknown() {
            continue;
        }
        let same = &by_sig[&neighbourhood_signature(fg, i)];
        let mut unknown_peers = Vec::new();
        let mut by_table: HashMap<u32, Vec<String>> = HashMap::new();
        for &j in same {
            if j == i {
                continue;
            }
            match groups[j] {
                None => unknown_peers.push(factors[j].id.clone()),
                Some(g) => by_table.entry(g).or_default().push(factors[j].id.clone()),
            }
        }
        unknown_peers.sort();
        let mut classes: Vec<Vec<String>> = by_table.into_values().collect();
        classes.iter_mut().for_each(|c| c.sort());
        classes.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
        let mut candidates: Vec<String> = classes.iter().flatten().cloned().collect();
        candidates.sort();
        out.push(CandidateSet {
            unknown_factor: f.id.clone(),
            unknown_peers,
            candidates,
            classes,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BkSupport {
    /// No background knowledge given.
    NotApplicable,
    /// The chosen class is supported by the background knowledge.
    Supported,
    /// Background knowledge given but no class is supported.
    Unsupported,
}

impl BkSupport {
    fn label(self) -> &'static str {
        match self {
            BkSupport::NotApplicable => "n/a",
            BkSupport::Supported => "yes",
            BkSupport::Unsupported => "no",
        }
    }
}

/// The class picked for an unknown factor and whether it passed the
/// threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub class: Vec<String>,
    /// `|class| / |candidates|`
    pub ratio: f64,
    pub bk: BkSupport,
    pub accepted: bool,
}

/// Picks the donor class for one candidate set. Returns `None` when there
/// are no candidates; otherwise the selection records whether the ratio
/// reached `theta`.
pub fn select_transfer_class(
    cs: &CandidateSet,
    theta: f64,
    bk: Option<&BackgroundKnowledge>,
    colours: &PotentialColours,
) -> Option<Selection> {
    if cs.candidates.is_empty() {
        return None;
    }
    let (idx, support) = match bk {
        None => (0, BkSupport::NotApplicable),
        Some(bk) => {
            let supported = supported_classes(cs, bk, colours);
            // classes are ordered largest first, so the first supported one
            // is the largest supported one
            match supported.iter().position(|&s| s) {
                Some(i) => (i, BkSupport::Supported),
                None => (0, BkSupport::Unsupported),
            }
        }
    };
    let class = cs.classes[idx].clone();
    let ratio = class.len() as f64 / cs.candidates.len() as f64;
    Some(Selection {
        accepted: ratio >= theta,
        class,
        ratio,
        bk: support,
    })
}

/// Which candidate classes the background knowledge supports.
///
/// If the unknown factor belongs to no individual every class is supported.
/// Otherwise let `K_i` be its individual: there must be exactly one other
/// individual `K_o` holding, for every known factor of `K_i`, a factor of
/// the same colour; a class is supported iff it contains a factor of `K_o`.
fn supported_classes(
    cs: &CandidateSet,
    bk: &BackgroundKnowledge,
    colours: &PotentialColours,
) -> Vec<bool> {
    let Some(own) = bk.owner_of(&cs.unknown_factor) else {
        return vec![true; cs.classes.len()];
    };
    let known_colours: Vec<u32> = bk.individuals[own]
        .1
        .iter()
        .filter_map(|f| colours.get(f))
        .collect();
    if known_colours.is_empty() {
        return vec![false; cs.classes.len()];
    }
    let matching: Vec<usize> = bk
        .individuals
        .iter()
        .enumerate()
        .filter(|&(o, _)| o != own)
        .filter(|(_, (_, fs))| {
            let theirs: BTreeSet<u32> = fs.iter().filter_map(|f| colours.get(f)).collect();
            known_colours.iter().all(|c| theirs.contains(c))
        })
        .map(|(o, _)| o)
        .collect();
    let [other] = matching[..] else {
        return vec![false; cs.classes.len()];
    };
    let other_factors = &bk.individuals[other].1;
    cs.classes
        .iter()
        .map(|c| c.iter().any(|f| other_factors.contains(f)))
        .collect()
}

/// Donor argument for each recipient argument.
///
/// Positions are kept when the neighbour triples agree position by
/// position; otherwise both argument lists are sorted by (triple, position)
/// and paired in that order.
pub fn argument_alignment(fg: &FactorGraph, donor: usize, recipient: usize) -> Vec<usize> {
    let d = triples(fg, donor);
    let r = triples(fg, recipient);
    if d == r {
        return (0..r.len()).collect();
    }
    let order = |t: &[NeighbourTriple]| {
        let mut idx: Vec<usize> = (0..t.len()).collect();
        idx.sort_by(|&a, &b| t[a].cmp(&t[b]).then(a.cmp(&b)));
        idx
    };
    let (od, or) = (order(&d), order(&r));
    let mut align = vec![0; r.len()];
    for (&rk, &dk) in or.iter().zip(&od) {
        align[rk] = dk;
    }
    align
}

/// Outcome for one unknown factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferEntry {
    pub unknown: String,
    pub candidates: usize,
    pub class_sizes: Vec<usize>,
    pub chosen: Option<Vec<String>>,
    pub ratio: f64,
    pub bk: BkSupport,
    /// Factor whose table was copied, when the transfer happened.
    pub donor: Option<String>,
    /// `alignment[k]` is the donor argument copied into recipient argument `k`.
    pub alignment: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferReport {
    pub entries: Vec<TransferEntry>,
    pub unresolved: Vec<String>,
}

impl TransferReport {
    /// One `unknown ...` line per unknown factor followed by one
    /// `unresolved <id>` line per factor left without potentials.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let classes = if e.class_sizes.is_empty() {
                "-".to_string()
            } else {
                e.class_sizes
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(
                out,
                "unknown {} candidates={} classes={} chosen={} ratio={} bk={}",
                e.unknown,
                e.candidates,
                classes,
                e.donor.as_deref().unwrap_or("none"),
                format_sig(e.ratio, 6),
                e.bk.label()
            )
            .unwrap();
        }
        for u in &self.unresolved {
            writeln!(out, "unresolved {u}").unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    pub theta: f64,
    pub eq: PotentialEq,
}

impl LiftOptions {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            eq: PotentialEq::EXACT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiftOutcome {
    pub completed: FactorGraph,
    pub grouping: Grouping,
    pub colouring: Colouring,
    pub report: TransferReport,
}

pub fn run_lifg(
    fg: &FactorGraph,
    theta: f64,
    bk: Option<&BackgroundKnowledge>,
) -> Result<LiftOutcome> {
    run_lifg_with(fg, LiftOptions::new(theta), bk)
}

pub fn run_lifg_with(
    fg: &FactorGraph,
    opts: LiftOptions,
    bk: Option<&BackgroundKnowledge>,
) -> Result<LiftOutcome> {
    fg.ensure_valid()?;
    if !(0.0..=1.0).contains(&opts.theta) {
        return Err(Error::InvalidConfig(format!(
            "theta {} outside [0, 1]",
            opts.theta
        )));
    }
    if let Some(bk) = bk {
        let problems = bk.validate(fg);
        if !problems.is_empty() {
            return Err(Error::InvalidConfig(problems.join("; ")));
        }
    }

    let groups = table_groups(&Canon::of(fg), opts.eq);
    let colours = PotentialColours::from_groups(fg, &groups);
    let sets = build_candidate_sets(fg, &groups);

    // Decide every transfer first, then apply them.
    let mut report = TransferReport::default();
    let mut transfers = Vec::new();
    for cs in &sets {
        let recipient = fg.factor_idx(&cs.unknown_factor).unwrap();
        let selection = select_transfer_class(cs, opts.theta, bk, &colours);
        let mut entry = TransferEntry {
            unknown: cs.unknown_factor.clone(),
            candidates: cs.candidates.len(),
            class_sizes: cs.classes.iter().map(Vec::len).collect(),
            chosen: None,
            ratio: 0.0,
            bk: if bk.is_some() {
                BkSupport::Unsupported
            } else {
                BkSupport::NotApplicable
            },
            donor: None,
            alignment: None,
        };
        if let Some(sel) = selection {
            entry.ratio = sel.ratio;
            entry.bk = sel.bk;
            if sel.accepted {
                let donor = fg.factor_idx(&sel.class[0]).unwrap();
                let align = argument_alignment(fg, donor, recipient);
                let table = fg.factors()[donor]
                    .table()
                    .expect("candidates are known")
                    .permuted(&align);
                transfers.push((recipient, table));
                entry.donor = Some(sel.class[0].clone());
                entry.alignment = Some(align);
            }
            entry.chosen = Some(sel.class);
        }
        if entry.donor.is_none() {
            report.unresolved.push(cs.unknown_factor.clone());
        }
        report.entries.push(entry);
    }

    let mut new_tables: HashMap<usize, _> = transfers.into_iter().collect();
    let completed = fg.map_potentials(|i, f| match new_tables.remove(&i) {
        Some(t) => Potential::Known(t),
        None => f.potential.clone(),
    });

    // Unresolved unknowns that are possibly identical to each other share a
    // colour; possibly-identical is an equivalence on unknowns, so the
    // components are the signature classes.
    let mut component: HashMap<NeighbourhoodSignature, String> = HashMap::new();
    for id in &report.unresolved {
        let sig = neighbourhood_signature(fg, fg.factor_idx(id).unwrap());
        let key = component.entry(sig).or_insert_with(|| id.clone());
        if id < key {
            *key = id.clone();
        }
    }
    let seeds: Vec<Seed> = completed
        .factors()
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.is_unknown() {
                Seed::Preset(component[&neighbourhood_signature(fg, i)].clone())
            } else {
                Seed::Table
            }
        })
        .collect();

    let canon = Canon::of(&completed);
    let start = seeded_colouring(&completed, &canon, &seeds, opts.eq);
    let colouring = refine(&completed, &canon, start);
    let grouping = Grouping::from_colouring(&completed, &canon, &colouring);
    Ok(LiftOutcome {
        completed,
        grouping,
        colouring,
        report,
    })
}
