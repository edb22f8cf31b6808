//! Line-oriented text formats for models, evidence and background knowledge.
//!
//! ```text
//! # comment
//! rv A true,false
//! factor f1 known A,B 1,2,3,4
//! factor f2 unknown B,C
//! ```
//!
//! Potentials are written with 17 significant digits so that reading a
//! serialized model reproduces every `f64` bit for bit.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::model::{
    BackgroundKnowledge, Evidence, Factor, FactorGraph, PotentialTable, RandomVariable, RangeSpec,
};

fn parse_err(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("");
        let words: Vec<&str> = line.split_whitespace().collect();
        (!words.is_empty()).then_some((i + 1, words))
    })
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::to_string).collect()
}

pub fn parse_model(text: &str) -> Result<FactorGraph> {
    let mut rvs = Vec::new();
    let mut pending = Vec::new();
    for (line, words) in content_lines(text) {
        match words[0] {
            "rv" => {
                if words.len() != 3 {
                    return Err(parse_err(line, "expected `rv <name> <v1>,<v2>,...`"));
                }
                let values = split_list(words[2]);
                if values.iter().any(String::is_empty) {
                    return Err(parse_err(line, "empty value label"));
                }
                rvs.push(RandomVariable::new(words[1], RangeSpec::new(values)));
            }
            "factor" => pending.push((line, words)),
            other => return Err(parse_err(line, format!("unknown record `{other}`"))),
        }
    }

    // Variables may be declared after the factors that use them.
    let ranges: HashMap<&str, usize> = rvs.iter().map(|r| (r.id.as_str(), r.range.len())).collect();
    let mut factors = Vec::with_capacity(pending.len());
    for (line, words) in pending {
        if words.len() < 4 {
            return Err(parse_err(
                line,
                "expected `factor <name> known|unknown <args> ...`",
            ));
        }
        let args = split_list(words[3]);
        if args.iter().any(String::is_empty) {
            return Err(parse_err(line, "empty argument name"));
        }
        match words[2] {
            "unknown" => {
                if words.len() != 4 {
                    return Err(parse_err(line, "unknown factor takes no potentials"));
                }
                factors.push(Factor::unknown(words[1], args));
            }
            "known" => {
                if words.len() != 5 {
                    return Err(parse_err(
                        line,
                        "expected `factor <name> known <args> <potentials>`",
                    ));
                }
                let entries = words[4]
                    .split(',')
                    .map(|p| {
                        p.parse::<f64>()
                            .map_err(|e| parse_err(line, format!("bad potential `{p}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let shape = args
                    .iter()
                    .map(|a| ranges.get(a.as_str()).copied().unwrap_or(0))
                    .collect();
                factors.push(Factor::known(
                    words[1],
                    args,
                    PotentialTable::new(shape, entries),
                ));
            }
            other => {
                return Err(parse_err(
                    line,
                    format!("expected `known` or `unknown`, got `{other}`"),
                ))
            }
        }
    }
    Ok(FactorGraph::new(rvs, factors))
}

/// Writes the model structure and potentials. Evidence is not part of the
/// model format; see [`serialize_evidence`].
pub fn serialize_model(fg: &FactorGraph) -> String {
    let mut out = String::new();
    for rv in fg.rvs() {
        writeln!(out, "rv {} {}", rv.id, rv.range.values().join(",")).unwrap();
    }
    for f in fg.factors() {
        let args = f.args.join(",");
        match f.table() {
            None => writeln!(out, "factor {} unknown {}", f.id, args).unwrap(),
            Some(t) => {
                let entries: Vec<String> = t.entries().iter().map(|&v| format_sig(v, 17)).collect();
                writeln!(out, "factor {} known {} {}", f.id, args, entries.join(",")).unwrap();
            }
        }
    }
    out
}

pub fn parse_evidence(text: &str) -> Result<Evidence> {
    let mut ev = Evidence::new();
    for (line, words) in content_lines(text) {
        if words.len() != 2 {
            return Err(parse_err(line, "expected `<rv-name> <value>`"));
        }
        if ev
            .insert(words[0].to_string(), words[1].to_string())
            .is_some()
        {
            return Err(parse_err(line, format!("`{}` observed twice", words[0])));
        }
    }
    Ok(ev)
}

pub fn serialize_evidence(ev: &Evidence) -> String {
    ev.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
}

pub fn parse_background(text: &str) -> Result<BackgroundKnowledge> {
    let mut bk = BackgroundKnowledge::new();
    for (line, words) in content_lines(text) {
        if words.len() != 3 || words[0] != "individual" {
            return Err(parse_err(
                line,
                "expected `individual <id> <factor>,<factor>,...`",
            ));
        }
        let factors: BTreeSet<String> = split_list(words[2]).into_iter().collect();
        bk.individuals.push((words[1].to_string(), factors));
    }
    Ok(bk)
}

pub fn serialize_background(bk: &BackgroundKnowledge) -> String {
    bk.individuals
        .iter()
        .map(|(id, fs)| {
            format!(
                "individual {id} {}\n",
                fs.iter().cloned().collect::<Vec<_>>().join(",")
            )
        })
        .collect()
}

/// `printf("%.{digits}g")`: `digits` significant digits, trailing zeros
/// removed, scientific notation outside `1e-5 ..= 10^digits`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
