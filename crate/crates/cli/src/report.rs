//! Summary table over the rows written by `evaluate`.

use std::collections::BTreeMap;
use std::fmt::Write;

use lifg::model::format::format_sig;
use lifg::synth::median;

#[derive(Debug, Default)]
struct Cell {
    klds: Vec<f64>,
    failed: usize,
}

/// Ordered by numeric value; wraps `f64` bits so it can key a map.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(usize, f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

/// Renders one line per (d, p) cell with query count, failures, median
/// and maximum KLD. Errors carry the 1-based line number.
pub fn render(rows: &str) -> Result<String, (usize, String)> {
    let mut cells: BTreeMap<Key, Cell> = BTreeMap::new();
    let mut generators = Vec::new();
    for (i, line) in rows.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with("summary") {
            for field in line.split('\t') {
                if let Some(g) = field.strip_prefix("generator=") {
                    if !generators.iter().any(|x| x == g) {
                        generators.push(g.to_string());
                    }
                }
            }
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err((
                line_no,
                format!("expected 6 tab-separated fields, found {}", fields.len()),
            ));
        }
        let num = |k: usize, what: &str| {
            fields[k]
                .parse::<f64>()
                .map_err(|e| (line_no, format!("bad {what} `{}`: {e}", fields[k])))
        };
        let d = fields[0]
            .parse::<usize>()
            .map_err(|e| (line_no, format!("bad d `{}`: {e}", fields[0])))?;
        let p = num(1, "p")?;
        let cell = cells.entry(Key(d, p)).or_default();
        if fields[4] == "FAILED" {
            cell.failed += 1;
        } else {
            cell.klds.push(num(5, "kld")?);
        }
    }
    let mut out = String::new();
    if !generators.is_empty() {
        writeln!(out, "# generator: {}", generators.join(", ")).unwrap();
    }
    out.push_str("d\tp\tqueries\tfailed\tmedian_kld\tmax_kld\n");
    for (Key(d, p), mut cell) in cells {
        let max = cell.klds.iter().copied().fold(0.0, f64::max);
        let med = median(&mut cell.klds);
        writeln!(
            out,
            "{d}\t{}\t{}\t{}\t{}\t{}",
            format_sig(p, 6),
            cell.klds.len(),
            cell.failed,
            format_sig(med, 6),
            format_sig(max, 6)
        )
        .unwrap();
    }
    Ok(out)
}
