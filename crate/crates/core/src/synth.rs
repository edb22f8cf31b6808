//! Seeded generator of cohort-structured factor graphs and the KLD
//! experiment built on it.
//!
//! Every instance is an epidemic-style hub model: one shared `Epid`
//! variable with a prior `f0`, and per individual `i` the variables
//! `Sick.i` and `Travel.i` with factors `hub.i(Epid, Sick.i)`,
//! `link.i(Sick.i, Travel.i)` and `leaf.i(Travel.i)`. Individuals are split
//! into cohorts; all individuals of a cohort share their three tables.
//!
//! Randomness comes from ChaCha8 streams keyed by the seed, one stream per
//! generation stage, so each stage is reproducible on its own.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::inference::{compression_ratio, kld, variable_elimination};
use crate::lifg::{neighbourhood_signature, run_lifg};
use crate::model::format::format_sig;
use crate::model::{
    Evidence, Factor, FactorGraph, Potential, PotentialTable, RandomVariable, RangeSpec,
};

pub const GRID_DS: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];
pub const GRID_PS: [f64; 5] = [0.2, 0.3, 0.5, 0.7, 0.9];

/// Range potentials are drawn from.
pub const POTENTIAL_MIN: f64 = 0.1;
pub const POTENTIAL_MAX: f64 = 10.0;

/// Names the synthetic model family in reports, which is a stand-in for
/// unpublished benchmark graphs.
pub const GENERATOR_LABEL: &str = "synthetic-hub-cohorts";

const STREAM_STRUCTURE: u64 = 1;
const STREAM_POTENTIALS: u64 = 2;
const STREAM_STRIP: u64 = 3;
const STREAM_QUERIES: u64 = 4;
const MAX_ATTEMPTS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Parameters restricted to the standard experimental grid.
    Grid,
    /// Any positive size and proportion.
    Free,
}

/// How the tables of non-dominant cohorts relate to the dominant one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CohortSpread {
    /// Every cohort draws its own tables.
    Independent,
    /// Each entry is the dominant cohort's entry times a factor drawn
    /// uniformly from `[1 - s, 1 + s]`.
    Relative(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub p: f64,
    pub unknown_fraction: f64,
    /// Fixed cohort count, or drawn from 3..=5.
    pub cohorts: Option<usize>,
    /// Fixed query count, or drawn from 3..=4.
    pub queries_per_instance: Option<usize>,
    pub theta: f64,
    pub seed: u64,
    pub mode: Mode,
    pub spread: CohortSpread,
}

pub const DEFAULT_SPREAD: CohortSpread = CohortSpread::Relative(0.2);

impl ExperimentConfig {
    pub fn grid(d: usize, p: f64, unknown_fraction: f64, seed: u64) -> Self {
        Self {
            d,
            p,
            unknown_fraction,
            cohorts: None,
            queries_per_instance: None,
            theta: 0.0,
            seed,
            mode: Mode::Grid,
            spread: DEFAULT_SPREAD,
        }
    }

    pub fn free(d: usize, p: f64, unknown_fraction: f64, seed: u64) -> Self {
        Self {
            mode: Mode::Free,
            ..Self::grid(d, p, unknown_fraction, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad(format!("p = {} outside (0, 1]", self.p));
        }
        if !(0.0..1.0).contains(&self.unknown_fraction) {
            return bad(format!(
                "unknown fraction {} outside [0, 1)",
                self.unknown_fraction
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta {} outside [0, 1]", self.theta));
        }
        if let CohortSpread::Relative(s) = self.spread {
            if !(0.0..1.0).contains(&s) {
                return bad(format!("cohort spread {s} outside [0, 1)"));
            }
        }
        if self.cohorts == Some(0) || self.queries_per_instance == Some(0) {
            return bad("cohort and query counts must be positive".into());
        }
        if self.mode == Mode::Grid {
            if !GRID_DS.contains(&self.d) {
                return bad(format!("d = {} not in {GRID_DS:?}", self.d));
            }
            if !GRID_PS.iter().any(|&p| (p - self.p).abs() < 1e-12) {
                return bad(format!("p = {} not in {GRID_PS:?}", self.p));
            }
            if !(0.05 - 1e-12..=0.20 + 1e-12).contains(&self.unknown_fraction) {
                return bad(format!(
                    "unknown fraction {} outside [0.05, 0.20]",
                    self.unknown_fraction
                ));
            }
            if self.cohorts.is_some_and(|c| !(3..=5).contains(&c)) {
                return bad("cohorts must be within 3..=5".into());
            }
            if self
                .queries_per_instance
                .is_some_and(|q| !(3..=4).contains(&q))
            {
                return bad("queries per instance must be within 3..=4".into());
            }
            if self.theta != 0.0 {
                return bad("theta must be 0".into());
            }
        }
        Ok(())
    }
}

fn stream(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: FactorGraph,
    pub incomplete: FactorGraph,
    pub queries: Vec<String>,
    /// Cohort of each individual variable (the hub belongs to none).
    pub cohort_of: HashMap<String, usize>,
    /// Cohort index 0 is the dominant one.
    pub cohorts: usize,
    pub stripped: Vec<String>,
}

impl Instance {
    pub fn cohort_size(&self, cohort: usize) -> usize {
        self.cohort_of.values().filter(|&&c| c == cohort).count()
    }
}

fn draw_table(rng: &mut ChaCha8Rng, shape: Vec<usize>) -> PotentialTable {
    let n = shape.iter().product();
    let entries = (0..n)
        .map(|_| rng.gen_range(POTENTIAL_MIN..=POTENTIAL_MAX))
        .collect();
    PotentialTable::new(shape, entries)
}

fn perturb(rng: &mut ChaCha8Rng, base: &PotentialTable, s: f64) -> PotentialTable {
    let entries = base
        .entries()
        .iter()
        .map(|&v| v * rng.gen_range(1.0 - s..=1.0 + s))
        .collect();
    PotentialTable::new(base.shape().to_vec(), entries)
}

/// Per-cohort tables for the three individual factor roles.
struct CohortTables {
    hub: PotentialTable,
    link: PotentialTable,
    leaf: PotentialTable,
}

pub fn generate_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, STREAM_STRUCTURE);

    // 1 + 2n variables must land in [2d, 3d].
    let lo = (2 * cfg.d).saturating_sub(1).div_ceil(2).max(1);
    let hi = (3 * cfg.d - 1) / 2;
    if lo > hi {
        return Err(Error::GenerationInfeasible {
            seed: cfg.seed,
            reason: format!("no individual count fits d = {}", cfg.d),
        });
    }
    let n = rng.gen_range(lo..=hi);
    let total_rvs = 1 + 2 * n;
    let cohorts = cfg.cohorts.unwrap_or_else(|| rng.gen_range(3..=5));

    let dominant = ((cfg.p * total_rvs as f64 / 2.0).round() as usize).clamp(1, n);
    let mut membership: Vec<usize> = vec![0; dominant];
    for _ in dominant..n {
        membership.push(if cohorts > 1 {
            rng.gen_range(1..cohorts)
        } else {
            0
        });
    }
    membership.shuffle(&mut rng);

    let mut prng = stream(cfg.seed, STREAM_POTENTIALS);
    let prior = draw_table(&mut prng, vec![2]);
    let base = CohortTables {
        hub: draw_table(&mut prng, vec![2, 2]),
        link: draw_table(&mut prng, vec![2, 2]),
        leaf: draw_table(&mut prng, vec![2]),
    };
    let mut tables = Vec::with_capacity(cohorts);
    for c in 0..cohorts {
        let t = if c == 0 {
            CohortTables {
                hub: base.hub.clone(),
                link: base.link.clone(),
                leaf: base.leaf.clone(),
            }
        } else {
            match cfg.spread {
                CohortSpread::Independent => CohortTables {
                    hub: draw_table(&mut prng, vec![2, 2]),
                    link: draw_table(&mut prng, vec![2, 2]),
                    leaf: draw_table(&mut prng, vec![2]),
                },
                CohortSpread::Relative(s) => CohortTables {
                    hub: perturb(&mut prng, &base.hub, s),
                    link: perturb(&mut prng, &base.link, s),
                    leaf: perturb(&mut prng, &base.leaf, s),
                },
            }
        };
        tables.push(t);
    }

    let width = n.to_string().len();
    let mut rvs = vec![RandomVariable::new("Epid", RangeSpec::boolean())];
    let mut factors = vec![Factor::known("f0", vec!["Epid".into()], prior)];
    let mut cohort_of = HashMap::new();
    for (i, &c) in membership.iter().enumerate() {
        let sick = format!("Sick.i{i:0width$}");
        let travel = format!("Travel.i{i:0width$}");
        rvs.push(RandomVariable::new(sick.clone(), RangeSpec::boolean()));
        rvs.push(RandomVariable::new(travel.clone(), RangeSpec::boolean()));
        let t = &tables[c];
        factors.push(Factor::known(
            format!("hub.i{i:0width$}"),
            vec!["Epid".into(), sick.clone()],
            t.hub.clone(),
        ));
        factors.push(Factor::known(
            format!("link.i{i:0width$}"),
            vec![sick.clone(), travel.clone()],
            t.link.clone(),
        ));
        factors.push(Factor::known(
            format!("leaf.i{i:0width$}"),
            vec![travel.clone()],
            t.leaf.clone(),
        ));
        cohort_of.insert(sick, c);
        cohort_of.insert(travel, c);
    }
    let truth = FactorGraph::new(rvs, factors);

    let n_strip = if cfg.unknown_fraction > 0.0 {
        ((cfg.unknown_fraction * truth.factors().len() as f64).round() as usize).max(1)
    } else {
        0
    };
    let signatures: Vec<_> = (0..truth.factors().len())
        .map(|i| neighbourhood_signature(&truth, i))
        .collect();
    let queries_wanted = cfg
        .queries_per_instance
        .unwrap_or_else(|| rng.gen_range(3..=4));

    for attempt in 0..MAX_ATTEMPTS {
        let mut srng = stream(
            cfg.seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            STREAM_STRIP,
        );
        let Some(stripped) = choose_stripped(&signatures, n_strip, &mut srng) else {
            continue;
        };
        let incomplete = truth.map_potentials(|i, f| {
            if stripped.contains(&i) {
                Potential::Unknown
            } else {
                f.potential.clone()
            }
        });
        let touched: BTreeSet<usize> = stripped
            .iter()
            .flat_map(|&f| truth.args_of(f).iter().copied())
            .collect();
        let mut untouched: Vec<usize> = (0..truth.rvs().len())
            .filter(|r| !touched.contains(r))
            .collect();
        if untouched.is_empty() {
            continue;
        }
        let mut qrng = stream(
            cfg.seed ^ attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15),
            STREAM_QUERIES,
        );
        untouched.shuffle(&mut qrng);
        untouched.truncate(queries_wanted);
        let queries = untouched
            .iter()
            .map(|&r| truth.rvs()[r].id.clone())
            .collect();
        let mut stripped_ids: Vec<String> = stripped
            .iter()
            .map(|&i| truth.factors()[i].id.clone())
            .collect();
        stripped_ids.sort();
        return Ok(Instance {
            truth,
            incomplete,
            queries,
            cohort_of,
            cohorts,
            stripped: stripped_ids,
        });
    }
    Err(Error::GenerationInfeasible {
        seed: cfg.seed,
        reason: format!("could not strip {n_strip} factors with known look-alikes after {MAX_ATTEMPTS} attempts"),
    })
}

/// Random factors to strip such that each keeps at least one known factor
/// with the same neighbourhood signature.
fn choose_stripped<S: Eq + std::hash::Hash>(
    signatures: &[S],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Option<BTreeSet<usize>> {
    let mut known_per_sig: HashMap<&S, usize> = HashMap::new();
    for s in signatures {
        *known_per_sig.entry(s).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..signatures.len()).collect();
    order.shuffle(rng);
    let mut chosen = BTreeSet::new();
    for i in order {
        if chosen.len() == count {
            break;
        }
        let k = known_per_sig.get_mut(&signatures[i]).unwrap();
        if *k >= 2 {
            *k -= 1;
            chosen.insert(i);
        }
    }
    (chosen.len() == count).then_some(chosen)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRow {
    pub query: String,
    pub kld: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<QueryRow>,
    pub unresolved: usize,
    /// (variable ratio, factor ratio) of the lifted completed model.
    pub compression: (f64, f64),
    /// Why the instance produced no KLD rows, if it failed.
    pub failure: Option<String>,
}

/// Generate, complete with the lifting algorithm, and compare query
/// answers of the completed model against the ground truth.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let inst = generate_instance(cfg)?;
    let out = run_lifg(&inst.incomplete, cfg.theta, None)?;
    let compression = compression_ratio(&out.grouping, &out.completed);
    let mut report = ExperimentReport {
        config: cfg.clone(),
        rows: Vec::new(),
        unresolved: out.report.unresolved.len(),
        compression,
        failure: None,
    };
    if report.unresolved > 0 {
        report.failure = Some(format!("{} unknown factors unresolved", report.unresolved));
        return Ok(report);
    }
    let lifted = out.grouping.ground(&out.completed)?;
    let none = Evidence::new();
    for q in &inst.queries {
        let p = variable_elimination(&inst.truth, q, &none)?;
        let r = variable_elimination(&lifted, q, &none)?;
        report.rows.push(QueryRow {
            query: q.clone(),
            kld: kld(&p, &r)?,
        });
    }
    Ok(report)
}

/// Cartesian grid of configurations, one instance per seed.
#[derive(Debug, Clone)]
pub struct Sweep {
    pub ds: Vec<usize>,
    pub ps: Vec<f64>,
    pub fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub theta: f64,
    pub mode: Mode,
    pub spread: CohortSpread,
}

impl Sweep {
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &d in &self.ds {
            for &p in &self.ps {
                for &f in &self.fractions {
                    for &seed in &self.seeds {
                        out.push(ExperimentConfig {
                            theta: self.theta,
                            mode: self.mode,
                            spread: self.spread,
                            ..ExperimentConfig::grid(d, p, f, seed)
                        });
                    }
                }
            }
        }
        out
    }

    /// Runs every instance, in parallel, returning reports in grid order.
    pub fn run(&self) -> Vec<Result<ExperimentReport>> {
        self.configs().par_iter().map(run_experiment).collect()
    }
}

/// Aggregate KLD statistics over a set of reports.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub instances: usize,
    pub failed: usize,
    pub queries: usize,
    pub max_kld: f64,
    pub median_kld: f64,
}

pub fn summarize<'a>(reports: impl IntoIterator<Item = &'a ExperimentReport>) -> SweepSummary {
    let mut instances = 0;
    let mut failed = 0;
    let mut klds = Vec::new();
    for r in reports {
        instances += 1;
        if r.failure.is_some() {
            failed += 1;
        }
        klds.extend(r.rows.iter().map(|q| q.kld));
    }
    SweepSummary {
        instances,
        failed,
        queries: klds.len(),
        max_kld: klds.iter().copied().fold(0.0, f64::max),
        median_kld: median(&mut klds),
    }
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Tab-separated `d p unknown_frac seed query kld` rows, one per query,
/// followed by a `summary` line.
pub fn rows_tsv(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let c = &r.config;
        for q in &r.rows {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                c.d,
                format_sig(c.p, 6),
                format_sig(c.unknown_fraction, 6),
                c.seed,
                q.query,
                format_sig(q.kld, 12)
            )
            .unwrap();
        }
        if let Some(why) = &r.failure {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\tFAILED\t{}",
                c.d,
                format_sig(c.p, 6),
                format_sig(c.unknown_fraction, 6),
                c.seed,
                why.replace('\t', " ")
            )
            .unwrap();
        }
    }
    let s = summarize(reports);
    writeln!(
        out,
        "summary\tgenerator={}\tinstances={}\tfailed={}\tqueries={}\tmax_kld={}\tmedian_kld={}",
        GENERATOR_LABEL,
        s.instances,
        s.failed,
        s.queries,
        format_sig(s.max_kld, 6),
        format_sig(s.median_kld, 6)
    )
    .unwrap();
    out
}
