//! Dense matrices over the rationals with exact determinant, adjugate,
//! rank and congruence diagonalization.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense matrix of exact rationals in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

/// Result of a congruence diagonalization `Pᵀ A P = diag(d)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Congruence {
    pub p: RationalMatrix,
    pub diagonal: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        if rows.iter().any(|v| v.len() != c) {
            return Err(Error::Precondition("ragged matrix rows".into()));
        }
        Ok(RationalMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_int_rows(rows: &[Vec<BigInt>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|v| BigRational::from_integer(v.clone())).collect())
                .collect(),
        )
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<BigRational> {
        self.entries[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn to_rows(&self) -> Vec<Vec<BigRational>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * &v[j])
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .collect())
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * k).collect(),
        }
    }

    /// Row echelon form by Gaussian elimination; returns the reduced matrix,
    /// the pivot columns and the determinant sign/scale factor.
    fn echelon(&self) -> (Self, Vec<usize>, BigRational) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut det_factor = BigRational::one();
        let mut r = 0;
        for c in 0..m.cols {
            if r >= m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.entries.swap(pr * m.cols + j, r * m.cols + j);
                }
                det_factor = -det_factor;
            }
            let piv = m.get(r, c).clone();
            det_factor *= &piv;
            for i in (r + 1)..m.rows {
                let f = m.get(i, c) / &piv;
                if f.is_zero() {
                    continue;
                }
                for j in c..m.cols {
                    let v = m.get(i, j) - &f * m.get(r, j);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots, det_factor)
    }

    pub fn rank(&self) -> usize {
        self.echelon().1.len()
    }

    /// Pivot columns of the row echelon form.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.echelon().1
    }

    pub fn det(&self) -> Result<BigRational> {
        if !self.is_square() {
            return Err(Error::Precondition("determinant of non-square matrix".into()));
        }
        if self.rows == 0 {
            return Ok(BigRational::one());
        }
        let (_, pivots, f) = self.echelon();
        if pivots.len() < self.rows {
            Ok(BigRational::zero())
        } else {
            Ok(f)
        }
    }

    /// Submatrix on the given rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.get(i, j).clone());
            }
        }
        m
    }

    /// Adjugate and determinant, with `M · adj M = det(M) · I`.
    pub fn adjugate_and_det(&self) -> Result<(Self, BigRational)> {
        if !self.is_square() {
            return Err(Error::Precondition("adjugate of non-square matrix".into()));
        }
        let n = self.rows;
        let det = self.det()?;
        let mut adj = Self::zeros(n, n);
        if n == 1 {
            adj.set(0, 0, BigRational::one());
            return Ok((adj, det));
        }
        for i in 0..n {
            for j in 0..n {
                let rows: Vec<usize> = (0..n).filter(|&k| k != j).collect();
                let cols: Vec<usize> = (0..n).filter(|&k| k != i).collect();
                let mut c = self.submatrix(&rows, &cols).det()?;
                if (i + j) % 2 == 1 {
                    c = -c;
                }
                adj.set(i, j, c);
            }
        }
        Ok((adj, det))
    }

    pub fn inverse(&self) -> Result<Self> {
        let (adj, det) = self.adjugate_and_det()?;
        if det.is_zero() {
            return Err(Error::Singular);
        }
        Ok(adj.scale(&(BigRational::one() / det)))
    }

    /// Solve `A x = b` for square nonsingular A.
    pub fn solve(&self, b: &[BigRational]) -> Result<Vec<BigRational>> {
        self.inverse()?.mul_vec(b)
    }

    /// Lagrange reduction: returns P with Pᵀ A P diagonal. Zero pivots are
    /// replaced by a nonzero diagonal entry further down or, failing that,
    /// by adding a column with a nonzero off-diagonal entry.
    pub fn congruence_diagonalize(&self) -> Result<Congruence> {
        if !self.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut p = Self::identity(n);
        for k in 0..n {
            if a.get(k, k).is_zero() {
                if let Some(j) = ((k + 1)..n).find(|&j| !a.get(j, j).is_zero()) {
                    a.swap_sym(k, j);
                    p.swap_cols(k, j);
                } else if let Some(j) = ((k + 1)..n).find(|&j| !a.get(k, j).is_zero()) {
                    a.add_sym(k, j, &BigRational::one());
                    p.add_col(k, j, &BigRational::one());
                } else {
                    continue;
                }
            }
            let piv = a.get(k, k).clone();
            for j in (k + 1)..n {
                let f = a.get(k, j) / &piv;
                if f.is_zero() {
                    continue;
                }
                a.add_sym(j, k, &-f.clone());
                p.add_col(j, k, &-f);
            }
        }
        let diagonal = (0..n).map(|i| a.get(i, i).clone()).collect();
        Ok(Congruence { p, diagonal })
    }

    /// Exact (rank, positive inertia, negative inertia).
    pub fn rank_signature(&self) -> Result<(usize, usize, usize)> {
        let c = self.congruence_diagonalize()?;
        let pos = c.diagonal.iter().filter(|d| d.is_positive()).count();
        let neg = c.diagonal.iter().filter(|d| d.is_negative()).count();
        Ok((pos + neg, pos, neg))
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn swap_sym(&mut self, a: usize, b: usize) {
        self.swap_cols(a, b);
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// col_dst += f·col_src.
    fn add_col(&mut self, dst: usize, src: usize, f: &BigRational) {
        for i in 0..self.rows {
            let v = self.get(i, dst) + f * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    /// Congruence step: col_dst += f·col_src and row_dst += f·row_src.
    fn add_sym(&mut self, dst: usize, src: usize, f: &BigRational) {
        self.add_col(dst, src, f);
        for j in 0..self.cols {
            let v = self.get(dst, j) + f * self.get(src, j);
            self.set(dst, j, v);
        }
    }
}

/// Exact determinant of a square integer matrix by fraction-free
/// elimination (Bareiss).
pub fn int_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match ((k + 1)..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Exact rank of an integer matrix (rows may have any common length).
pub fn int_rank(m: &[Vec<BigInt>]) -> usize {
    if m.is_empty() {
        return 0;
    }
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let rows = a.len();
    let cols = a[0].len();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let v = (&a[i][j] * &a[r][c] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
    }
    r
}

/// Rank with pivot rows and columns of an integer matrix, returned as
/// (rank, rows, cols) such that the submatrix on those rows and columns is
/// nonsingular.
pub fn int_rank_with_pivots(m: &[Vec<BigInt>]) -> (usize, Vec<usize>, Vec<usize>) {
    if m.is_empty() {
        return (0, vec![], vec![]);
    }
    let rows = m.len();
    let cols = m[0].len();
    let mut a: Vec<Vec<BigInt>> = m.to_vec();
    let mut order: Vec<usize> = (0..rows).collect();
    let mut piv_rows = Vec::new();
    let mut piv_cols = Vec::new();
    let mut r = 0;
    let mut prev = BigInt::one();
    for c in 0..cols {
        if r >= rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(p, r);
        order.swap(p, r);
        for i in (r + 1)..rows {
            for j in (c + 1)..cols {
                let v = (&a[i][j] * &a[r][c] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        piv_rows.push(order[r]);
        piv_cols.push(c);
        r += 1;
    }
    piv_rows.sort_unstable();
    (r, piv_rows, piv_cols)
}
