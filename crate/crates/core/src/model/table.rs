use std::cmp::Ordering;

/// Dense potential table over an ordered argument list.
///
/// Entries are stored row-major: the last argument varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTable {
    shape: Vec<usize>,
    entries: Vec<f64>,
}

impl PotentialTable {
    /// Builds a table without checking it. `validate` on the owning graph
    /// reports length and positivity problems.
    pub fn new(shape: Vec<usize>, entries: Vec<f64>) -> Self {
        Self { shape, entries }
    }

    pub fn arity(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn expected_len(&self) -> usize {
        self.shape.iter().product()
    }

    /// Flat offset of a full assignment.
    pub fn offset(&self, assignment: &[usize]) -> usize {
        debug_assert_eq!(assignment.len(), self.shape.len());
        assignment
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&a, &s)| acc * s + a)
    }

    pub fn get(&self, assignment: &[usize]) -> f64 {
        self.entries[self.offset(assignment)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            entries: self.entries.iter().map(|v| v * c).collect(),
        }
    }

    /// Reorders the arguments. Argument `k` of the result is argument
    /// `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(
            perm.len(),
            self.arity(),
            "permutation length must equal arity"
        );
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut entries = Vec::with_capacity(self.entries.len());
        let mut src = vec![0usize; self.arity()];
        for_each_assignment(&shape, |dst| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = dst[k];
            }
            entries.push(self.get(&src));
        });
        Self { shape, entries }
    }

    /// Total order used for canonical forms: shape first, then entries.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.shape.cmp(&other.shape).then_with(|| {
            for (a, b) in self.entries.iter().zip(&other.entries) {
                match a.total_cmp(b) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            self.entries.len().cmp(&other.entries.len())
        })
    }
}

/// Calls `f` on every assignment of `shape` in row-major order.
pub fn for_each_assignment(shape: &[usize], mut f: impl FnMut(&[usize])) {
    if shape.contains(&0) {
        return;
    }
    let mut cur = vec![0usize; shape.len()];
    loop {
        f(&cur);
        let mut k = shape.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < shape[k] {
                break;
            }
            cur[k] = 0;
        }
    }
}

/// Equality of potential values.
///
/// A zero tolerance means bitwise equality; otherwise two values are equal
/// when `|a - b| <= rel_tol * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialEq {
    pub rel_tol: f64,
}

impl PotentialEq {
    pub const EXACT: PotentialEq = PotentialEq { rel_tol: 0.0 };

    pub fn relative(rel_tol: f64) -> Self {
        Self { rel_tol }
    }

    pub fn values_eq(&self, a: f64, b: f64) -> bool {
        if self.rel_tol == 0.0 {
            a.to_bits() == b.to_bits()
        } else {
            (a - b).abs() <= self.rel_tol * a.abs().max(b.abs())
        }
    }

    pub fn tables_eq(&self, a: &PotentialTable, b: &PotentialTable) -> bool {
        a.shape == b.shape
            && a.entries.len() == b.entries.len()
            && a.entries
                .iter()
                .zip(&b.entries)
                .all(|(&x, &y)| self.values_eq(x, y))
    }
}

/// Largest arity for which canonical forms try every argument permutation.
pub const MAX_CANONICAL_ARITY: usize = 5;

/// A table brought to argument-order-independent form.
#[derive(Debug, Clone)]
pub struct CanonicalTable {
    /// Lexicographically smallest permuted table.
    pub table: PotentialTable,
    /// Every permutation producing `table`; `perm[k]` is the original
    /// argument placed at canonical position `k`. Never empty.
    pub perms: Vec<Vec<usize>>,
}

impl CanonicalTable {
    pub fn of(table: &PotentialTable) -> Self {
        let n = table.arity();
        if n > MAX_CANONICAL_ARITY {
            return Self {
                table: table.clone(),
                perms: vec![(0..n).collect()],
            };
        }
        let mut best: Option<PotentialTable> = None;
        let mut perms = Vec::new();
        for perm in permutations(n) {
            let t = table.permuted(&perm);
            match best.as_ref().map(|b| t.lex_cmp(b)) {
                None | Some(Ordering::Less) => {
                    best = Some(t);
                    perms.clear();
                    perms.push(perm);
                }
                Some(Ordering::Equal) => perms.push(perm),
                Some(Ordering::Greater) => {}
            }
        }
        Self {
            table: best.expect("at least the identity permutation"),
            perms,
        }
    }

    /// Canonical form for a factor without a table: positions are kept.
    pub fn identity(arity: usize) -> Vec<Vec<usize>> {
        vec![(0..arity).collect()]
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}
