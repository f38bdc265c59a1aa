//! Symbolic minors of matrices with polynomial entries, computed by a
//! Laplace-expansion table over column subsets shared along row prefixes.

use std::collections::HashMap;

use num_bigint::BigInt;

use crate::forms::IntPolynomial;

/// Invoke `visit(rows, cols, minor)` for every k×k minor of `mat`.
/// Returning `false` from the visitor stops the enumeration.
pub fn for_each_minor<F>(mat: &[Vec<IntPolynomial>], k: usize, mut visit: F)
where
    F: FnMut(&[usize], &[usize], &IntPolynomial) -> bool,
{
    let n_rows = mat.len();
    let n_cols = mat.first().map(|r| r.len()).unwrap_or(0);
    if k == 0 || k > n_rows || k > n_cols {
        return;
    }
    let nv = mat[0][0].num_vars();
    let mut table: HashMap<u64, IntPolynomial> = HashMap::new();
    table.insert(0, IntPolynomial::constant(nv, 1));
    let mut rows = Vec::with_capacity(k);
    rec(mat, k, n_rows, n_cols, 0, &mut rows, &table, &mut visit);
}

#[allow(clippy::too_many_arguments)]
fn rec<F>(
    mat: &[Vec<IntPolynomial>],
    k: usize,
    n_rows: usize,
    n_cols: usize,
    start: usize,
    rows: &mut Vec<usize>,
    table: &HashMap<u64, IntPolynomial>,
    visit: &mut F,
) -> bool
where
    F: FnMut(&[usize], &[usize], &IntPolynomial) -> bool,
{
    let j = rows.len();
    for i in start..n_rows {
        if n_rows - i < k - j {
            break;
        }
        let next = extend(mat, i, j, n_cols, table);
        rows.push(i);
        if j + 1 == k {
            let mut keys: Vec<&u64> = next.keys().collect();
            keys.sort_unstable();
            for mask in keys {
                let cols: Vec<usize> = (0..n_cols).filter(|c| mask >> c & 1 == 1).collect();
                if !visit(rows, &cols, &next[mask]) {
                    return false;
                }
            }
        } else if !rec(mat, k, n_rows, n_cols, i + 1, rows, &next, visit) {
            return false;
        }
        rows.pop();
    }
    true
}

/// Table for row prefix extended by `row`: determinants for every column
/// subset of size j+1, expanding along the new (last) row.
fn extend(
    mat: &[Vec<IntPolynomial>],
    row: usize,
    j: usize,
    n_cols: usize,
    table: &HashMap<u64, IntPolynomial>,
) -> HashMap<u64, IntPolynomial> {
    let mut out: HashMap<u64, IntPolynomial> = HashMap::new();
    for (&mask, det) in table {
        for c in 0..n_cols {
            if mask >> c & 1 == 1 {
                continue;
            }
            let entry = &mat[row][c];
            if entry.is_zero() || det.is_zero() {
                out.entry(mask | 1 << c).or_insert_with(|| IntPolynomial::zero(entry.num_vars()));
                continue;
            }
            let new_mask = mask | 1 << c;
            // Position of c inside the new subset decides the sign.
            let pos = (new_mask & ((1u64 << c) - 1)).count_ones() as usize;
            let term = det * entry;
            let slot = out
                .entry(new_mask)
                .or_insert_with(|| IntPolynomial::zero(entry.num_vars()));
            if (pos + j) % 2 == 0 {
                *slot = &*slot + &term;
            } else {
                *slot = &*slot - &term;
            }
        }
    }
    out
}

/// All nonzero k×k minors.
pub fn nonzero_minors(mat: &[Vec<IntPolynomial>], k: usize) -> Vec<(Vec<usize>, Vec<usize>, IntPolynomial)> {
    let mut out = Vec::new();
    for_each_minor(mat, k, |r, c, m| {
        if !m.is_zero() {
            out.push((r.to_vec(), c.to_vec(), m.clone()));
        }
        true
    });
    out
}

/// First nonzero k×k minor, if any.
pub fn first_nonzero_minor(mat: &[Vec<IntPolynomial>], k: usize) -> Option<(Vec<usize>, Vec<usize>, IntPolynomial)> {
    let mut found = None;
    for_each_minor(mat, k, |r, c, m| {
        if m.is_zero() {
            true
        } else {
            found = Some((r.to_vec(), c.to_vec(), m.clone()));
            false
        }
    });
    found
}

/// Determinant of a square polynomial matrix.
pub fn poly_det(mat: &[Vec<IntPolynomial>]) -> IntPolynomial {
    let n = mat.len();
    if n == 0 {
        panic!("determinant of an empty polynomial matrix needs an arity");
    }
    let mut out = None;
    for_each_minor(mat, n, |_, _, m| {
        out = Some(m.clone());
        false
    });
    out.expect("square matrix has one maximal minor")
}

/// Integer determinant helper re-exported for callers that mix both kinds.
pub fn int_det(m: &[Vec<BigInt>]) -> BigInt {
    crate::forms::matrix::int_det(m)
}
