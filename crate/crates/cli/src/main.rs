//! `lifg` command-line tool: complete, query, generate and evaluate factor
//! graphs with unknown factors.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lifg::inference::{variable_elimination_ordered, EliminationOrder};
use lifg::lifg::run_lifg;
use lifg::model::format::{
    format_sig, parse_background, parse_evidence, parse_model, serialize_model,
};
use lifg::model::{Evidence, FactorGraph};
use lifg::synth::{generate_instance, rows_tsv, CohortSpread, ExperimentConfig, Mode, Sweep};
use lifg::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_ALGORITHM: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "lifg",
    version,
    about = "Complete and query factor graphs with unknown factors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transfer potentials to unknown factors and write the completed model.
    Lift {
        #[arg(long)]
        model: PathBuf,
        /// Minimum share of candidates the chosen class must cover.
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        evidence: Option<PathBuf>,
        /// Background knowledge: `individual <id> <factor>,...` lines.
        #[arg(long)]
        bk: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Also write the final variable and factor classes.
        #[arg(long)]
        classes: Option<PathBuf>,
        /// Fail when an unknown factor cannot be completed.
        #[arg(long)]
        strict: bool,
    },
    /// Print marginals of the given variables.
    Query {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        evidence: Option<PathBuf>,
        #[arg(long = "rv", required = true)]
        rvs: Vec<String>,
        #[arg(long, value_enum, default_value_t = Order::MinDegree)]
        order: Order,
    },
    /// Write one synthetic instance: ground truth, incomplete copy, queries.
    Generate {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        p: f64,
        #[arg(long = "unknown-frac")]
        unknown_frac: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long = "out-truth")]
        out_truth: PathBuf,
        #[arg(long = "out-incomplete")]
        out_incomplete: PathBuf,
        #[arg(long = "out-queries")]
        out_queries: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Run a sweep of instances and write per-query KLD rows.
    Evaluate {
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,0.9")]
        p: Vec<f64>,
        #[arg(
            long = "unknown-frac",
            value_delimiter = ',',
            default_value = "0.05,0.1,0.15,0.2"
        )]
        unknown_frac: Vec<f64>,
        /// Number of seeds per configuration.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long = "first-seed", default_value_t = 0)]
        first_seed: u64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        gen: GenFlags,
    },
    /// Summarize evaluate rows per (d, p) cell.
    Report {
        #[arg(long)]
        rows: PathBuf,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct GenFlags {
    #[arg(long, value_enum, default_value_t = ModeArg::Grid)]
    mode: ModeArg,
    /// Relative spread of non-dominant cohort tables around the dominant
    /// ones; `independent` draws them separately.
    #[arg(long = "cohort-spread", default_value = "0.2")]
    cohort_spread: String,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Grid,
    Free,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Order {
    MinDegree,
    ReverseId,
}

/// Failure carrying its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InconsistentEvidence
            | Error::StateSpaceTooLarge { .. }
            | Error::InfiniteDivergence(_)
            | Error::GenerationInfeasible { .. } => EXIT_ALGORITHM,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn in_file<T>(path: &Path, r: lifg::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Outcome {
    let io = |e: std::io::Error| Failure::input(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn load_model(model: &Path, evidence: Option<&Path>) -> Result<FactorGraph, Failure> {
    let fg = in_file(model, parse_model(&read(model)?))?;
    let problems = lifg::model::validate(&fg);
    if !problems.is_empty() {
        let list: Vec<String> = problems.iter().map(ToString::to_string).collect();
        return Err(Failure::input(format!(
            "{}: {}",
            model.display(),
            list.join("; ")
        )));
    }
    match evidence {
        None => Ok(fg),
        Some(path) => {
            let ev = in_file(path, parse_evidence(&read(path)?))?;
            in_file(path, fg.with_evidence(&ev))
        }
    }
}

fn generator_config(
    d: usize,
    p: f64,
    unknown_frac: f64,
    seed: u64,
    theta: f64,
    gen: &GenFlags,
) -> Result<ExperimentConfig, Failure> {
    let spread = match gen.cohort_spread.as_str() {
        "independent" => CohortSpread::Independent,
        s => CohortSpread::Relative(s.parse().map_err(|_| {
            Failure::input(format!(
                "--cohort-spread: expected a number or `independent`, got `{s}`"
            ))
        })?),
    };
    let cfg = ExperimentConfig {
        theta,
        mode: match gen.mode {
            ModeArg::Grid => Mode::Grid,
            ModeArg::Free => Mode::Free,
        },
        spread,
        ..ExperimentConfig::grid(d, p, unknown_frac, seed)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Lift {
            model,
            theta,
            evidence,
            bk,
            out,
            report,
            classes,
            strict,
        } => {
            let fg = load_model(&model, evidence.as_deref())?;
            let bk = match &bk {
                None => None,
                Some(path) => Some(in_file(path, parse_background(&read(path)?))?),
            };
            let outcome = run_lifg(&fg, theta, bk.as_ref())?;
            write_atomic(&out, &serialize_model(&outcome.completed))?;
            write_atomic(&report, &outcome.report.to_text())?;
            if let Some(path) = classes {
                write_atomic(&path, &outcome.grouping.report())?;
            }
            let unresolved = &outcome.report.unresolved;
            if !unresolved.is_empty() {
                let msg = format!(
                    "{} unknown factors left unresolved: {}",
                    unresolved.len(),
                    unresolved.join(", ")
                );
                if strict {
                    return Err(Failure {
                        code: EXIT_ALGORITHM,
                        message: msg,
                    });
                }
                eprintln!("warning: {msg}");
            }
            Ok(())
        }
        Command::Query {
            model,
            evidence,
            rvs,
            order,
        } => {
            let fg = load_model(&model, evidence.as_deref())?;
            let order = match order {
                Order::MinDegree => EliminationOrder::MinDegree,
                Order::ReverseId => EliminationOrder::ReverseId,
            };
            let mut text = String::new();
            for rv in &rvs {
                let m = variable_elimination_ordered(&fg, rv, &Evidence::new(), order)?;
                let probs: Vec<String> =
                    m.probabilities.iter().map(|&p| format_sig(p, 12)).collect();
                text.push_str(&format!("{rv} {}\n", probs.join(",")));
            }
            print!("{text}");
            Ok(())
        }
        Command::Generate {
            d,
            p,
            unknown_frac,
            seed,
            out_truth,
            out_incomplete,
            out_queries,
            gen,
        } => {
            let cfg = generator_config(d, p, unknown_frac, seed, 0.0, &gen)?;
            let inst = generate_instance(&cfg)?;
            write_atomic(&out_truth, &serialize_model(&inst.truth))?;
            write_atomic(&out_incomplete, &serialize_model(&inst.incomplete))?;
            let queries: String = inst.queries.iter().map(|q| format!("{q}\n")).collect();
            write_atomic(&out_queries, &queries)?;
            Ok(())
        }
        Command::Evaluate {
            d,
            p,
            unknown_frac,
            seeds,
            first_seed,
            theta,
            out,
            gen,
        } => {
            // validate every grid point before running anything
            for &dd in &d {
                for &pp in &p {
                    for &ff in &unknown_frac {
                        generator_config(dd, pp, ff, first_seed, theta, &gen)?;
                    }
                }
            }
            let template = generator_config(d[0], p[0], unknown_frac[0], first_seed, theta, &gen)?;
            let sweep = Sweep {
                ds: d,
                ps: p,
                fractions: unknown_frac,
                seeds: (first_seed..first_seed + seeds).collect(),
                theta,
                mode: template.mode,
                spread: template.spread,
            };
            let reports = sweep.run().into_iter().collect::<lifg::Result<Vec<_>>>()?;
            let text = rows_tsv(&reports);
            write_atomic(&out, &text)?;
            if let Some(last) = text.lines().last() {
                println!("{last}");
            }
            Ok(())
        }
        Command::Report { rows, out } => {
            let table = report::render(&read(&rows)?).map_err(|(line, why)| {
                Failure::input(format!("{}:{line}: {why}", rows.display()))
            })?;
            match out {
                Some(path) => write_atomic(&path, &table),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
