//! Structure of a cubic form split into fibre variables x and base
//! variables y: the bundle of quadratic forms Q_y, its rank over Q(y),
//! shape detectors, and the predicted growth exponents.
//!
//! Matrices of quadratic forms are stored doubled (the Hessian), so that
//! every entry is an integer linear form. Minors of the doubled matrix of
//! order k are 2^k times the minors of the half matrix.

pub mod exponents;
pub mod minors;
pub mod probes;
pub mod shapes;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::matrix::int_rank_with_pivots;
use crate::forms::{FibrationMode, IntPolynomial, Monomial, VariableSplit};

pub use exponents::{predicted_exponents, ExponentPrediction, ShapeTag, TheoremFlags};
pub use probes::{
    low_rank_specialization_count, singular_locus_dim_probe, CodimProbe, LowRankCount,
    SingularProbe,
};
pub use shapes::{
    classify_rank2_bundle, detect_common_linear_factor_qi, detect_hypothesis_h1,
    extract_linear_block, indefinite_witness, order3_minor_common_factor, CommonLinearFactor,
    H1Report, IndefiniteWitness, LinearBlock, Order3Report, Order3Status, Rank2Report,
    Rank2Shape, ShapeClassification,
};

/// Matrix dimension above which symbolic minor expansion is refused.
pub const MAX_SYMBOLIC_DIM: usize = 12;

/// Square symmetric matrix whose entries are integer linear forms in
/// `num_params` parameters; `entries[i][j][k]` is the coefficient of the
/// k-th parameter in entry (i, j).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearFormMatrix {
    pub dim: usize,
    pub num_params: usize,
    pub entries: Vec<Vec<Vec<BigInt>>>,
}

impl LinearFormMatrix {
    pub fn zeros(dim: usize, num_params: usize) -> Self {
        LinearFormMatrix {
            dim,
            num_params,
            entries: vec![vec![vec![BigInt::zero(); num_params]; dim]; dim],
        }
    }

    /// Σ_k y_k A_k for integer symmetric matrices A_k.
    pub fn from_pencil(mats: &[Vec<Vec<BigInt>>]) -> Result<Self> {
        let h = mats.len();
        let dim = mats.first().map(|m| m.len()).unwrap_or(0);
        let mut out = Self::zeros(dim, h);
        for (k, a) in mats.iter().enumerate() {
            if a.len() != dim || a.iter().any(|r| r.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: a.len() });
            }
            for i in 0..dim {
                for j in 0..dim {
                    if a[i][j] != a[j][i] {
                        return Err(Error::NotSymmetric);
                    }
                    out.entries[i][j][k] = a[i][j].clone();
                }
            }
        }
        Ok(out)
    }

    /// Coefficient matrix of the k-th parameter.
    pub fn slice(&self, k: usize) -> Vec<Vec<BigInt>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entries[i][j][k].clone()).collect())
            .collect()
    }

    /// Σ_k c_k A_k.
    pub fn combine(&self, c: &[BigInt]) -> Vec<Vec<BigInt>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        self.entries[i][j]
                            .iter()
                            .zip(c)
                            .fold(BigInt::zero(), |acc, (a, b)| acc + a * b)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn evaluate_i64(&self, y: &[i64]) -> Vec<Vec<BigInt>> {
        let c: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
        self.combine(&c)
    }

    /// Entries as polynomials in the parameters.
    pub fn to_polys(&self) -> Vec<Vec<IntPolynomial>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| IntPolynomial::linear_form(e)).collect())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().flatten().all(|c| c.is_zero())
    }

    /// Replace the parameters by linear forms: y = S z, with `s[k]` the
    /// coefficient vector of y_k in terms of z.
    pub fn reparametrize(&self, s: &[Vec<BigInt>]) -> Self {
        let np = s.first().map(|r| r.len()).unwrap_or(0);
        let mut out = Self::zeros(self.dim, np);
        for i in 0..self.dim {
            for j in 0..self.dim {
                for (k, c) in self.entries[i][j].iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    for (l, sv) in s[k].iter().enumerate() {
                        out.entries[i][j][l] += c * sv;
                    }
                }
            }
        }
        out
    }
}

/// C = Σ y_k F_k(x) + Σ x_j q_j(y) + R(y), each piece in its own block's
/// local variables (x-block indices 0..nx, y-block indices 0..h).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub f: Vec<IntPolynomial>,
    pub q: Vec<IntPolynomial>,
    pub r: IntPolynomial,
}

/// C = Σ x_i Q_i(y) + R(y) for a split of x-degree at most one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearFibreDecomposition {
    pub q: Vec<IntPolynomial>,
    pub r: IntPolynomial,
}

/// Settings for the randomized phase of rank computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankConfig {
    pub seed: u64,
    pub trials: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { seed: 0x5eed, trials: 8 }
    }
}

/// Outcome of the two-phase rank computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCertificate {
    pub rank: usize,
    pub witness_rows: Vec<usize>,
    pub witness_cols: Vec<usize>,
    /// Witness minor of the doubled matrix, a nonzero form of degree r.
    pub witness_minor: IntPolynomial,
    pub seed: u64,
    pub trials: usize,
    pub randomized_rank: usize,
    /// Number of order-(r+1) minors expanded and found identically zero.
    pub vanishing_minors_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibrationData {
    pub split: VariableSplit,
    pub cubic: IntPolynomial,
    pub decomposition: Decomposition,
    /// Doubled matrix of Q_y(x) = Σ y_k F_k(x).
    pub m2: LinearFormMatrix,
    pub rank: RankCertificate,
}

impl FibrationData {
    pub fn r(&self) -> usize {
        self.rank.rank
    }

    pub fn nx(&self) -> usize {
        self.split.x_indices.len()
    }

    pub fn h(&self) -> usize {
        self.split.y_indices.len()
    }

    /// Q_y(x) as a polynomial in all n variables.
    pub fn q_y(&self) -> Result<IntPolynomial> {
        let n = self.split.n();
        let mut out = IntPolynomial::zero(n);
        for (k, fk) in self.decomposition.f.iter().enumerate() {
            let emb = fk.embed(n, &self.split.x_indices)?;
            let yk = IntPolynomial::var(n, self.split.y_indices[k]);
            out = &out + &(&yk * &emb);
        }
        Ok(out)
    }
}

fn local_exponents(m: &Monomial, idx: &[usize]) -> Vec<u32> {
    idx.iter().map(|&i| m.0[i]).collect()
}

/// Split C into its x-degree components.
pub fn decompose(c: &IntPolynomial, split: &VariableSplit) -> Result<Decomposition> {
    split.validate(c)?;
    if !c.is_zero() && (!c.is_homogeneous() || c.total_degree() != 3) {
        return Err(Error::Precondition("cubic form must be homogeneous of degree 3".into()));
    }
    let nx = split.x_indices.len();
    let h = split.y_indices.len();
    let mut f = vec![IntPolynomial::zero(nx); h];
    let mut q = vec![IntPolynomial::zero(h); nx];
    let mut r = IntPolynomial::zero(h);
    for (m, coef) in c.terms() {
        let ex = local_exponents(m, &split.x_indices);
        let ey = local_exponents(m, &split.y_indices);
        let dx: u32 = ex.iter().sum();
        match dx {
            3 => {
                return Err(Error::InvalidSplit(format!(
                    "monomial of x-degree 3 (coefficient {coef}); the split is not an h-decomposition"
                )))
            }
            2 => {
                let k = ey.iter().position(|&e| e == 1).expect("y-degree one");
                f[k].add_term(Monomial(ex), coef.clone());
            }
            1 => {
                let j = ex.iter().position(|&e| e == 1).expect("x-degree one");
                q[j].add_term(Monomial(ey), coef.clone());
            }
            _ => r.add_term(Monomial(ey), coef.clone()),
        }
    }
    Ok(Decomposition { f, q, r })
}

/// Split C = Σ x_i Q_i(y) + R(y).
pub fn decompose_linear_fibre(c: &IntPolynomial, split: &VariableSplit) -> Result<LinearFibreDecomposition> {
    let s = VariableSplit::new(split.x_indices.clone(), split.y_indices.clone(), FibrationMode::PiPrime);
    s.validate(c)?;
    let d = decompose(c, &s)?;
    Ok(LinearFibreDecomposition { q: d.q, r: d.r })
}

/// Hessian pencil of the quadratic forms F_k: entry (a, b) of the k-th
/// slice is ∂²F_k/∂x_a∂x_b.
pub fn hessian_pencil(f: &[IntPolynomial], nx: usize) -> LinearFormMatrix {
    let mut out = LinearFormMatrix::zeros(nx, f.len());
    for (k, fk) in f.iter().enumerate() {
        for (m, coef) in fk.terms() {
            let vars: Vec<usize> = (0..nx).filter(|&i| m.0[i] > 0).collect();
            match vars.as_slice() {
                [a] => out.entries[*a][*a][k] += coef * 2,
                [a, b] => {
                    out.entries[*a][*b][k] += coef;
                    out.entries[*b][*a][k] += coef;
                }
                _ => {}
            }
        }
    }
    out
}

/// Decompose C, assemble the doubled matrix M[y] and compute its rank.
pub fn build_fibration(c: &IntPolynomial, split: &VariableSplit, cfg: RankConfig) -> Result<FibrationData> {
    let decomposition = decompose(c, split)?;
    let m2 = hessian_pencil(&decomposition.f, split.x_indices.len());
    let rank = fibration_rank(&m2, cfg)?;
    Ok(FibrationData { split: split.clone(), cubic: c.clone(), decomposition, m2, rank })
}

/// Largest k with an order-k minor of M[y] not identically zero.
///
/// Random integer evaluations give a candidate rank and pivot minor; the
/// pivot minor is then expanded symbolically and every order-(r+1) minor
/// is expanded and checked to be the zero polynomial.
pub fn fibration_rank(m: &LinearFormMatrix, cfg: RankConfig) -> Result<RankCertificate> {
    if m.dim > MAX_SYMBOLIC_DIM {
        return Err(Error::Precondition(format!(
            "matrix dimension {} exceeds symbolic cap {MAX_SYMBOLIC_DIM}",
            m.dim
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = (0usize, Vec::new(), Vec::new());
    for _ in 0..cfg.trials.max(1) {
        let y: Vec<i64> = (0..m.num_params).map(|_| rng.gen_range(-1_000_000..=1_000_000)).collect();
        let (r, rows, cols) = int_rank_with_pivots(&m.evaluate_i64(&y));
        if r > best.0 {
            best = (r, rows, cols);
        }
    }
    let (r, rows, cols) = best;
    let polys = m.to_polys();
    let witness_minor = if r == 0 {
        IntPolynomial::constant(m.num_params, 1)
    } else {
        let sub: Vec<Vec<IntPolynomial>> =
            rows.iter().map(|&i| cols.iter().map(|&j| polys[i][j].clone()).collect()).collect();
        minors::poly_det(&sub)
    };
    if witness_minor.is_zero() {
        return Err(Error::Disagreement(format!(
            "randomized rank {r} but the pivot minor expands to zero"
        )));
    }
    let mut checked = 0usize;
    let mut offending = None;
    if r < m.dim {
        minors::for_each_minor(&polys, r + 1, |ri, ci, mi| {
            checked += 1;
            if mi.is_zero() {
                true
            } else {
                offending = Some((ri.to_vec(), ci.to_vec(), mi.to_string()));
                false
            }
        });
    }
    if let Some((ri, ci, mi)) = offending {
        return Err(Error::Disagreement(format!(
            "randomized rank {r} but the order-{} minor rows {ri:?} cols {ci:?} is {mi}",
            r + 1
        )));
    }
    Ok(RankCertificate {
        rank: r,
        witness_rows: rows,
        witness_cols: cols,
        witness_minor,
        seed: cfg.seed,
        trials: cfg.trials,
        randomized_rank: r,
        vanishing_minors_checked: checked,
    })
}

/// Exact rank of an integer matrix with i128 fraction-free elimination,
/// falling back to big integers on overflow.
pub fn small_int_rank(m: &[Vec<i64>]) -> usize {
    let rows = m.len();
    let cols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(rank, p);
        for i in (rank + 1)..rows {
            for j in (c + 1)..cols {
                let v = a[rank][c]
                    .checked_mul(a[i][j])
                    .and_then(|x| a[i][c].checked_mul(a[rank][j]).and_then(|y| x.checked_sub(y)));
                match v {
                    Some(v) => a[i][j] = v / prev,
                    None => {
                        let big: Vec<Vec<BigInt>> =
                            m.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect();
                        return crate::forms::matrix::int_rank(&big);
                    }
                }
            }
            a[i][c] = 0;
        }
        prev = a[rank][c];
        rank += 1;
    }
    rank
}

/// Rank of the integer matrix Σ y_k A_k at an i64 point.
pub fn rank_at(m: &LinearFormMatrix, y: &[i64]) -> usize {
    let small: Option<Vec<Vec<i64>>> = m
        .entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| {
                    let mut acc: i128 = 0;
                    for (c, v) in e.iter().zip(y) {
                        let c: i64 = c.try_into().ok()?;
                        acc = acc.checked_add((c as i128).checked_mul(*v as i128)?)?;
                    }
                    i64::try_from(acc).ok()
                })
                .collect()
        })
        .collect();
    match small {
        Some(s) => small_int_rank(&s),
        None => crate::forms::matrix::int_rank(&m.evaluate_i64(y)),
    }
}

/// Unit vector helper.
pub(crate) fn unit(n: usize, i: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n];
    v[i] = BigInt::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, terms: &[(&[u32], i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn decomposition_examples() {
        // Variables x1, x2, y1, y2.
        let c = poly(
            4,
            &[(&[2, 0, 1, 0], 1), (&[1, 1, 0, 1], 1), (&[1, 0, 0, 2], 1), (&[0, 0, 3, 0], 1)],
        );
        let split = VariableSplit::leading(2, 4, FibrationMode::Pi);
        let d = decompose(&c, &split).unwrap();
        assert_eq!(d.f[0], poly(2, &[(&[2, 0], 1)]));
        assert_eq!(d.f[1], poly(2, &[(&[1, 1], 1)]));
        assert_eq!(d.q[0], poly(2, &[(&[0, 2], 1)]));
        assert!(d.q[1].is_zero());
        assert_eq!(d.r, poly(2, &[(&[3, 0], 1)]));

        let bad = poly(4, &[(&[3, 0, 0, 0], 1)]);
        assert!(matches!(decompose(&bad, &split), Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn rank_examples() {
        // y1(x1² + x2²): doubled matrix 2 y1 I, witness 4 y1².
        let c = poly(3, &[(&[2, 0, 1], 1), (&[0, 2, 1], 1)]);
        let fd = build_fibration(&c, &VariableSplit::leading(2, 3, FibrationMode::Pi), RankConfig::default())
            .unwrap();
        assert_eq!(fd.r(), 2);
        assert_eq!(fd.rank.witness_minor, poly(1, &[(&[2], 4)]));

        // y1 x1² + y2 x1 x2: doubled determinant −y2².
        let c = poly(4, &[(&[2, 0, 1, 0], 1), (&[1, 1, 0, 1], 1)]);
        let fd = build_fibration(&c, &VariableSplit::leading(2, 4, FibrationMode::Pi), RankConfig::default())
            .unwrap();
        assert_eq!(fd.r(), 2);
        assert_eq!(fd.rank.witness_minor, poly(2, &[(&[0, 2], -1)]));

        let c = poly(4, &[(&[1, 0, 2, 0], 1)]);
        let fd = build_fibration(&c, &VariableSplit::leading(2, 4, FibrationMode::Pi), RankConfig::default())
            .unwrap();
        assert_eq!(fd.r(), 0);
    }

    #[test]
    fn small_rank_matches_big() {
        let m = vec![vec![2, 4, 6], vec![1, 2, 3], vec![0, 1, 5]];
        assert_eq!(small_int_rank(&m), 2);
        let m = vec![vec![i64::MAX, 1], vec![1, i64::MAX]];
        assert_eq!(small_int_rank(&m), 2);
    }
}
