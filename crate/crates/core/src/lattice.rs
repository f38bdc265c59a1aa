//! Kernel lattices of linear forms, LLL reduction, shortest vectors, exact
//! and asymptotic counts of integer points on affine hyperplanes inside
//! balls, and the volume constants of ball slices.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, gcd_all, isqrt_i128, squarefree_divisors};
use crate::error::{Error, Result};
use crate::forms::matrix::int_det;
use crate::forms::IntPolynomial;

/// Largest rank for which the exact shortest vector is computed.
pub const MAX_SVP_RANK: usize = 8;

/// A lattice given by integer basis vectors (rows) in Z^n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerLattice {
    pub ambient_dim: usize,
    pub basis: Vec<Vec<BigInt>>,
    /// det(G Gᵀ) for the basis rows, the squared covolume.
    pub gram_det: BigInt,
    pub reduced: Option<Vec<Vec<BigInt>>>,
    /// Unimodular U with reduced = U · basis.
    pub transform: Option<Vec<Vec<BigInt>>>,
    pub shortest: Option<(Vec<BigInt>, BigInt)>,
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).fold(BigInt::zero(), |s, (x, y)| s + x * y)
}

fn gram(basis: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    basis.iter().map(|u| basis.iter().map(|v| dot(u, v)).collect()).collect()
}

impl IntegerLattice {
    pub fn new(basis: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = basis.first().map(|b| b.len()).unwrap_or(0);
        if basis.iter().any(|b| b.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: 0 });
        }
        let gram_det = if basis.is_empty() { BigInt::one() } else { int_det(&gram(&basis)) };
        if !gram_det.is_positive() {
            return Err(Error::Singular);
        }
        Ok(IntegerLattice { ambient_dim: n, basis, gram_det, reduced: None, transform: None, shortest: None })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn covolume(&self) -> f64 {
        self.gram_det.to_f64().unwrap_or(f64::INFINITY).sqrt()
    }

    /// LLL-reduce (δ = 3/4) and cache the result.
    pub fn reduce(&mut self) -> &[Vec<BigInt>] {
        if self.reduced.is_none() {
            let (r, u) = lll_reduce(&self.basis, &BigRational::new(BigInt::from(3), BigInt::from(4)));
            self.reduced = Some(r);
            self.transform = Some(u);
        }
        self.reduced.as_deref().unwrap()
    }

    /// Shortest nonzero vector and its squared length, by enumeration.
    pub fn shortest_vector(&mut self) -> Result<(Vec<BigInt>, BigInt)> {
        if let Some(s) = &self.shortest {
            return Ok(s.clone());
        }
        let red = self.reduce().to_vec();
        let s = shortest_vector_exact(&red)?;
        self.shortest = Some(s.clone());
        Ok(s)
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        if crate::forms::matrix::int_rank(&rows) > self.rank() {
            return false;
        }
        // v is in the real span; check integrality of its coordinates.
        let g = gram(&self.basis);
        let rhs: Vec<BigRational> = self.basis.iter().map(|b| BigRational::from_integer(dot(b, v))).collect();
        let m = crate::forms::RationalMatrix::from_int_rows(&g).expect("square gram");
        match m.solve(&rhs) {
            Ok(c) => c.iter().all(|x| x.is_integer()),
            Err(_) => false,
        }
    }
}

/// Unimodular U (columns) with a · U = (g, 0, …, 0), g = gcd(a) ≥ 0.
pub fn unimodular_column_reduction(a: &[BigInt]) -> (BigInt, Vec<Vec<BigInt>>) {
    let n = a.len();
    let mut row: Vec<BigInt> = a.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..n).map(|i| (0..n).map(|j| BigInt::from((i == j) as i32)).collect()).collect();
    for j in 1..n {
        if row[j].is_zero() {
            continue;
        }
        let (g, x, y) = ext_gcd(&row[0], &row[j]);
        let p = &row[j] / &g;
        let q = &row[0] / &g;
        for r in u.iter_mut() {
            let c0 = r[0].clone();
            let cj = r[j].clone();
            r[0] = &x * &c0 + &y * &cj;
            r[j] = &p * &c0 - &q * &cj;
        }
        row[0] = g;
        row[j] = BigInt::zero();
    }
    if row[0].is_negative() {
        for r in u.iter_mut() {
            r[0] = -&r[0];
        }
        row[0] = -&row[0];
    }
    (row[0].clone(), u)
}

/// Λ_a = {x ∈ Z^n : ⟨a, x⟩ = 0}, LLL-reduced.
pub fn kernel_lattice(a: &[BigInt]) -> Result<IntegerLattice> {
    if a.iter().all(|x| x.is_zero()) {
        return Err(Error::Degenerate("zero linear form".into()));
    }
    let n = a.len();
    let (_, u) = unimodular_column_reduction(a);
    let basis: Vec<Vec<BigInt>> = (1..n).map(|j| (0..n).map(|i| u[i][j].clone()).collect()).collect();
    let mut lat = IntegerLattice::new(basis)?;
    let red = lat.reduce().to_vec();
    let mut out = IntegerLattice::new(red)?;
    out.reduced = Some(out.basis.clone());
    out.transform = Some((0..n - 1).map(|i| (0..n - 1).map(|j| BigInt::from((i == j) as i32)).collect()).collect());
    Ok(out)
}

/// Λ_y = {x : Σ x_i Q_i(y) = 0} for forms Q_i evaluated at y.
pub fn kernel_lattice_of_forms(qs: &[IntPolynomial], y: &[BigInt]) -> Result<IntegerLattice> {
    let a: Vec<BigInt> = qs.iter().map(|q| q.evaluate(y)).collect::<Result<_>>()?;
    kernel_lattice(&a)
}

struct GramSchmidt {
    mu: Vec<Vec<BigRational>>,
    bsq: Vec<BigRational>,
}

fn gram_schmidt(b: &[Vec<BigInt>]) -> GramSchmidt {
    let m = b.len();
    let n = b.first().map(|v| v.len()).unwrap_or(0);
    let mut star: Vec<Vec<BigRational>> = Vec::with_capacity(m);
    let mut mu = vec![vec![BigRational::zero(); m]; m];
    let mut bsq = Vec::with_capacity(m);
    for i in 0..m {
        let mut v: Vec<BigRational> = b[i].iter().map(|x| BigRational::from_integer(x.clone())).collect();
        for j in 0..i {
            let num = (0..n).fold(BigRational::zero(), |s, t| s + BigRational::from_integer(b[i][t].clone()) * &star[j][t]);
            let c = num / &bsq[j];
            for t in 0..n {
                let d = &c * &star[j][t];
                v[t] -= d;
            }
            mu[i][j] = c;
        }
        let s = v.iter().fold(BigRational::zero(), |s, x| s + x * x);
        bsq.push(s);
        star.push(v);
    }
    GramSchmidt { mu, bsq }
}

fn round_rat(x: &BigRational) -> BigInt {
    (x + BigRational::new(BigInt::one(), BigInt::from(2))).floor().to_integer()
}

/// Exact rational LLL on the rows of `basis`; returns (reduced, U) with
/// reduced = U · basis and U unimodular.
pub fn lll_reduce(basis: &[Vec<BigInt>], delta: &BigRational) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let m = basis.len();
    let mut b = basis.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..m).map(|i| (0..m).map(|j| BigInt::from((i == j) as i32)).collect()).collect();
    if m <= 1 {
        return (b, u);
    }
    let mut gs = gram_schmidt(&b);
    let mut k = 1;
    while k < m {
        for j in (0..k).rev() {
            let q = round_rat(&gs.mu[k][j]);
            if q.is_zero() {
                continue;
            }
            for t in 0..b[k].len() {
                let d = &q * &b[j][t];
                b[k][t] -= d;
            }
            for t in 0..m {
                let d = &q * &u[j][t];
                u[k][t] -= d;
            }
            let qr = BigRational::from_integer(q);
            for i in 0..j {
                let d = &qr * &gs.mu[j][i];
                gs.mu[k][i] -= d;
            }
            gs.mu[k][j] -= &qr;
        }
        let lhs = gs.bsq[k].clone();
        let rhs = (delta - &gs.mu[k][k - 1] * &gs.mu[k][k - 1]) * &gs.bsq[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            gs = gram_schmidt(&b);
            k = (k - 1).max(1);
        }
    }
    (b, u)
}

/// Floating Gram–Schmidt data of an integer basis.
struct FloatGs {
    mu: Vec<Vec<f64>>,
    bsq: Vec<f64>,
}

fn float_gs(b: &[Vec<i128>]) -> FloatGs {
    let m = b.len();
    let n = b.first().map(|v| v.len()).unwrap_or(0);
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut mu = vec![vec![0.0; m]; m];
    let mut bsq = Vec::with_capacity(m);
    for i in 0..m {
        let mut v: Vec<f64> = b[i].iter().map(|&x| x as f64).collect();
        for j in 0..i {
            let num: f64 = (0..n).map(|t| b[i][t] as f64 * star[j][t]).sum();
            let c = num / bsq[j];
            for t in 0..n {
                v[t] -= c * star[j][t];
            }
            mu[i][j] = c;
        }
        bsq.push(v.iter().map(|x| x * x).sum());
        star.push(v);
    }
    FloatGs { mu, bsq }
}

/// LLL with exact i128 basis updates and floating Gram–Schmidt.
pub fn lll_reduce_fast(basis: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let m = basis.len();
    let mut b = basis.to_vec();
    if m <= 1 {
        return b;
    }
    let mut k = 1;
    let mut guard = 0usize;
    while k < m && guard < 100_000 {
        guard += 1;
        let gs = float_gs(&b);
        let mut mu_k = gs.mu[k].clone();
        for j in (0..k).rev() {
            let q = mu_k[j].round();
            if q == 0.0 {
                continue;
            }
            let qi = q as i128;
            for t in 0..b[k].len() {
                b[k][t] -= qi * b[j][t];
            }
            for i in 0..j {
                mu_k[i] -= q * gs.mu[j][i];
            }
            mu_k[j] -= q;
        }
        let gs = float_gs(&b);
        if gs.bsq[k] >= (0.75 - gs.mu[k][k - 1] * gs.mu[k][k - 1]) * gs.bsq[k - 1] * (1.0 - 1e-12) {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    b
}

fn to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128().ok_or_else(|| Error::Precondition(format!("coordinate {v} exceeds 128 bits")))
}

/// Exact shortest nonzero vector of the lattice spanned by `basis` (rows),
/// returned with its squared length.
pub fn shortest_vector_exact(basis: &[Vec<BigInt>]) -> Result<(Vec<BigInt>, BigInt)> {
    let k = basis.len();
    if k == 0 {
        return Err(Error::Degenerate("zero lattice".into()));
    }
    if k > MAX_SVP_RANK {
        return Err(Error::BudgetExceeded { needed: k as u128, budget: MAX_SVP_RANK as u128 });
    }
    let b: Vec<Vec<i128>> = basis.iter().map(|v| v.iter().map(to_i128).collect::<Result<_>>()).collect::<Result<_>>()?;
    let gs = float_gs(&b);
    let norm = |v: &[i128]| v.iter().map(|x| x * x).sum::<i128>();
    let mut best_v = b[0].clone();
    let mut best = norm(&b[0]);
    for v in &b {
        let s = norm(v);
        if s < best {
            best = s;
            best_v = v.clone();
        }
    }
    let n = b[0].len();
    let mut c = vec![0i64; k];
    // Depth-first enumeration from the last level.
    fn rec(
        level: usize,
        partial: f64,
        c: &mut Vec<i64>,
        b: &[Vec<i128>],
        gs: &FloatGs,
        n: usize,
        best: &mut i128,
        best_v: &mut Vec<i128>,
    ) {
        let k = b.len();
        let center: f64 = -((level + 1)..k).map(|j| c[j] as f64 * gs.mu[j][level]).sum::<f64>();
        let bound = *best as f64 * (1.0 + 1e-9) + 1e-9;
        let rem = bound - partial;
        if rem < 0.0 {
            return;
        }
        let w = (rem / gs.bsq[level]).sqrt();
        let lo = (center - w - 1e-9).ceil() as i64;
        let hi = (center + w + 1e-9).floor() as i64;
        for ci in lo..=hi {
            c[level] = ci;
            let t = ci as f64 - center;
            let p = partial + t * t * gs.bsq[level];
            if p > *best as f64 * (1.0 + 1e-9) + 1e-9 {
                continue;
            }
            if level == 0 {
                if c.iter().all(|&x| x == 0) {
                    continue;
                }
                let v: Vec<i128> = (0..n).map(|t| (0..k).map(|j| c[j] as i128 * b[j][t]).sum()).collect();
                let s: i128 = v.iter().map(|x| x * x).sum();
                if s < *best {
                    *best = s;
                    *best_v = v;
                }
            } else {
                rec(level - 1, p, c, b, gs, n, best, best_v);
            }
        }
        c[level] = 0;
    }
    rec(k - 1, 0.0, &mut c, &b, &gs, n, &mut best, &mut best_v);
    Ok((best_v.iter().map(|&x| BigInt::from(x)).collect(), BigInt::from(best)))
}

/// Integer points x with ⟨a, x⟩ + b = 0 and ‖x‖² ≤ r2, counted by
/// enumeration over a reduced kernel basis with an exact innermost interval.
#[derive(Clone, Debug)]
pub struct HyperplaneEnumerator {
    pub g: BigInt,
    basis: Vec<Vec<i128>>,
    /// Unimodular first column: a · u0 = g.
    u0: Vec<i128>,
    gs_mu: Vec<Vec<f64>>,
    gs_bsq: Vec<f64>,
    star: Vec<Vec<f64>>,
}

impl HyperplaneEnumerator {
    pub fn new(a: &[BigInt]) -> Result<Self> {
        if a.iter().all(|x| x.is_zero()) {
            return Err(Error::Degenerate("zero linear form".into()));
        }
        let n = a.len();
        let (g, u) = unimodular_column_reduction(a);
        let raw: Vec<Vec<i128>> = (1..n)
            .map(|j| (0..n).map(|i| to_i128(&u[i][j])).collect::<Result<_>>())
            .collect::<Result<_>>()?;
        let basis = lll_reduce_fast(&raw);
        let u0: Vec<i128> = (0..n).map(|i| to_i128(&u[i][0])).collect::<Result<_>>()?;
        let gs = float_gs(&basis);
        let mut star: Vec<Vec<f64>> = Vec::with_capacity(basis.len());
        for i in 0..basis.len() {
            let mut v: Vec<f64> = basis[i].iter().map(|&x| x as f64).collect();
            for j in 0..i {
                for t in 0..n {
                    v[t] -= gs.mu[i][j] * star[j][t];
                }
            }
            star.push(v);
        }
        Ok(HyperplaneEnumerator { g, basis, u0, gs_mu: gs.mu, gs_bsq: gs.bsq, star })
    }

    pub fn basis(&self) -> &[Vec<i128>] {
        &self.basis
    }

    /// Squared Gram–Schmidt lengths of the reduced kernel basis.
    pub fn gs_squared_lengths(&self) -> &[f64] {
        &self.gs_bsq
    }

    /// Size-reduced particular solution of ⟨a, x⟩ = −b, if one exists.
    fn particular(&self, b: &BigInt) -> Result<Option<Vec<i128>>> {
        if !(b % &self.g).is_zero() {
            return Ok(None);
        }
        let t = to_i128(&(-b / &self.g))?;
        let mut x: Vec<i128> = self.u0.iter().map(|&u| u * t).collect();
        let k = self.basis.len();
        for i in (0..k).rev() {
            let num: f64 = x.iter().zip(&self.star[i]).map(|(&a, &s)| a as f64 * s).sum();
            let q = (num / self.gs_bsq[i]).round() as i128;
            if q != 0 {
                for (xt, bt) in x.iter_mut().zip(&self.basis[i]) {
                    *xt -= q * bt;
                }
            }
        }
        Ok(Some(x))
    }

    /// Rough count of enumeration nodes above the innermost level.
    pub fn estimated_nodes(&self, r2: f64) -> f64 {
        let k = self.basis.len();
        let mut total = 1.0;
        let mut prod = 1.0;
        for i in (1..k).rev() {
            prod *= self.gs_bsq[i].sqrt();
            let d = k - i;
            total += unit_ball_volume_f64(d) * r2.sqrt().powi(d as i32) / prod + 1.0;
        }
        total
    }

    /// Number of x ∈ Z^n with ⟨a, x⟩ + b = 0 and ‖x‖² ≤ r2, optionally
    /// visiting each point.
    pub fn count(&self, b: &BigInt, r2: i128, mut visit: Option<&mut dyn FnMut(&[i128])>) -> Result<u128> {
        if r2 < 0 {
            return Ok(0);
        }
        let Some(x0) = self.particular(b)? else { return Ok(0) };
        let k = self.basis.len();
        if k == 0 {
            let s: i128 = x0.iter().map(|x| x * x).sum();
            if s <= r2 {
                if let Some(f) = visit.as_mut() {
                    f(&x0);
                }
                return Ok(1);
            }
            return Ok(0);
        }
        let n = x0.len();
        let mu0: Vec<f64> = (0..k)
            .map(|i| x0.iter().zip(&self.star[i]).map(|(&a, &s)| a as f64 * s).sum::<f64>() / self.gs_bsq[i])
            .collect();
        let perp: f64 = {
            let mut v: Vec<f64> = x0.iter().map(|&x| x as f64).collect();
            for i in 0..k {
                for t in 0..n {
                    v[t] -= mu0[i] * self.star[i][t];
                }
            }
            v.iter().map(|x| x * x).sum()
        };
        let mut c = vec![0i64; k];
        let mut total: u128 = 0;
        let slack = 1e-7 * (r2 as f64 + 1.0);
        self.rec(k - 1, perp, &mut c, &x0, &mu0, r2, slack, &mut total, &mut visit)?;
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        level: usize,
        partial: f64,
        c: &mut Vec<i64>,
        x0: &[i128],
        mu0: &[f64],
        r2: i128,
        slack: f64,
        total: &mut u128,
        visit: &mut Option<&mut dyn FnMut(&[i128])>,
    ) -> Result<()> {
        let k = self.basis.len();
        if level == 0 {
            // v = x0 + Σ_{j≥1} c_j b_j; count c0 with ‖v + c0 b0‖² ≤ r2 exactly.
            let n = x0.len();
            let mut v = x0.to_vec();
            for j in 1..k {
                let cj = c[j] as i128;
                if cj != 0 {
                    for t in 0..n {
                        v[t] += cj * self.basis[j][t];
                    }
                }
            }
            let b0 = &self.basis[0];
            let aa: i128 = b0.iter().map(|x| x * x).sum();
            let bb: i128 = v.iter().zip(b0).map(|(x, y)| x * y).sum();
            let cc: i128 = v.iter().map(|x| x * x).sum::<i128>() - r2;
            let disc = bb
                .checked_mul(bb)
                .and_then(|p| aa.checked_mul(cc).and_then(|q| p.checked_sub(q)))
                .ok_or_else(|| Error::Precondition("enumeration exceeds 128-bit range".into()))?;
            if disc < 0 {
                return Ok(());
            }
            let s = isqrt_i128(disc);
            let f = |t: i128| aa * t * t + 2 * bb * t + cc <= 0;
            let mut lo = Integer::div_floor(&(-bb - s), &aa);
            let mut hi = Integer::div_ceil(&(-bb + s), &aa);
            while !f(lo) && lo <= hi {
                lo += 1;
            }
            while hi >= lo && !f(hi) {
                hi -= 1;
            }
            while f(lo - 1) {
                lo -= 1;
            }
            while f(hi + 1) {
                hi += 1;
            }
            if hi >= lo {
                *total += (hi - lo + 1) as u128;
                if let Some(fv) = visit.as_mut() {
                    for t in lo..=hi {
                        let pt: Vec<i128> = v.iter().zip(b0).map(|(x, y)| x + t * y).collect();
                        fv(&pt);
                    }
                }
            }
            return Ok(());
        }
        let center = -mu0[level] - ((level + 1)..k).map(|j| c[j] as f64 * self.gs_mu[j][level]).sum::<f64>();
        let rem = r2 as f64 + slack - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let w = (rem / self.gs_bsq[level]).sqrt();
        let lo = (center - w - 1e-7).ceil() as i64;
        let hi = (center + w + 1e-7).floor() as i64;
        for ci in lo..=hi {
            c[level] = ci;
            let t = ci as f64 - center;
            let p = partial + t * t * self.gs_bsq[level];
            if p > r2 as f64 + slack {
                continue;
            }
            self.rec(level - 1, p, c, x0, mu0, r2, slack, total, visit)?;
        }
        c[level] = 0;
        Ok(())
    }
}

/// Squared-radius bound ⌊(B² − 1)/d²⌋ for a rational B.
fn radius_sq(big_b: &BigRational, d: &BigInt) -> Result<i128> {
    let v = (big_b * big_b - BigRational::one()) / BigRational::from_integer(d * d);
    to_i128(&v.floor().to_integer())
}

fn check_primitive(a: &[BigInt]) -> Result<()> {
    if !gcd_all(a.iter()).is_one() {
        return Err(Error::Precondition("linear form is not primitive".into()));
    }
    Ok(())
}

/// N(a, b, B) or, with g, N_g(a, b, B) = Σ_{d | (b, g)} μ(d) · #{x : ⟨a, x⟩ + b/d = 0, ‖x‖² ≤ (B² − 1)/d²}.
pub fn hyperplane_count_exact(a: &[BigInt], b: &BigInt, big_b: &BigRational, g: Option<&BigInt>) -> Result<u128> {
    check_primitive(a)?;
    let en = HyperplaneEnumerator::new(a)?;
    match g {
        None => en.count(b, radius_sq(big_b, &BigInt::one())?, None),
        Some(g) => {
            let common = b.gcd(g);
            let divs = if common.is_zero() { vec![(BigInt::one(), 1)] } else { squarefree_divisors(&common)? };
            let mut total: i128 = 0;
            for (d, mu) in divs {
                let c = en.count(&(b / &d), radius_sq(big_b, &d)?, None)? as i128;
                total += mu as i128 * c;
            }
            Ok(total as u128)
        }
    }
}

/// Reference count by scanning the box |x_i| ≤ √(B² − 1).
pub fn hyperplane_count_bruteforce(a: &[i64], b: i64, big_b: i64, g: Option<i64>) -> u128 {
    let r2 = big_b * big_b - 1;
    if r2 < 0 {
        return 0;
    }
    let r = isqrt_i128(r2 as i128) as i64;
    let n = a.len();
    let mut x = vec![-r; n];
    let mut count = 0;
    loop {
        let s: i64 = x.iter().map(|v| v * v).sum();
        let l: i64 = a.iter().zip(&x).map(|(p, q)| p * q).sum::<i64>() + b;
        if s <= r2 && l == 0 {
            let ok = match g {
                None => true,
                Some(g) => x.iter().fold(g, |acc, &v| num_integer::gcd(acc, v)).abs() == 1,
            };
            if ok {
                count += 1;
            }
        }
        let mut i = n;
        loop {
            if i == 0 {
                return count;
            }
            i -= 1;
            if x[i] < r {
                x[i] += 1;
                break;
            }
            x[i] = -r;
        }
    }
}

/// Main term and explicit error budgets for N(a, b, B).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneCount {
    pub exact: Option<u128>,
    pub main: f64,
    pub err_eta: f64,
    pub err_lambda: f64,
    pub lambda1_sq: BigInt,
    /// λ₁ is exact (rank ≤ 8) rather than an LLL lower bound.
    pub lambda1_exact: bool,
}

/// c_{n−1} B^{n−1} / ‖a‖ with budgets 2(n−1) c B^{n−1−η}/‖a‖ and
/// 2^n n! Σ_{j=0}^{n−2} (B/λ₁)^j.
pub fn hyperplane_count_asymptotic(a: &[BigInt], b: &BigInt, big_b: f64, eta: f64, with_exact: bool) -> Result<HyperplaneCount> {
    check_primitive(a)?;
    let n = a.len();
    if n < 2 {
        return Err(Error::Precondition("need at least two variables".into()));
    }
    let norm = dot(a, a).to_f64().unwrap().sqrt();
    let bf = b.abs().to_f64().unwrap();
    if !(eta > 0.0 && eta < 1.0) || big_b < (bf / norm).powf(1.0 / (1.0 - eta)) {
        return Err(Error::Precondition(format!(
            "B = {big_b} below (|b|/‖a‖)^(1/(1−η)) = {}",
            (bf / norm).powf(1.0 / (1.0 - eta))
        )));
    }
    let mut lat = kernel_lattice(a)?;
    let k = lat.rank();
    let (lambda1_sq, exact_l) = if k <= MAX_SVP_RANK {
        (lat.shortest_vector()?.1, true)
    } else {
        let first = &lat.reduce()[0];
        (dot(first, first), false)
    };
    let mut lambda1 = lambda1_sq.to_f64().unwrap().sqrt();
    if !exact_l {
        lambda1 /= 2f64.powf((k as f64 - 1.0) / 2.0);
    }
    let c = unit_ball_volume_f64(n - 1);
    let main = c * big_b.powi(n as i32 - 1) / norm;
    let err_eta = 2.0 * (n as f64 - 1.0) * c * big_b.powf(n as f64 - 1.0 - eta) / norm;
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let ratio = big_b / lambda1;
    let err_lambda = 2f64.powi(n as i32) * fact * (0..=n - 2).map(|j| ratio.powi(j as i32)).sum::<f64>();
    let exact = if with_exact {
        let bb = BigRational::from_float(big_b).ok_or_else(|| Error::Precondition("B not finite".into()))?;
        Some(hyperplane_count_exact(a, b, &bb, None)?)
    } else {
        None
    };
    Ok(HyperplaneCount { exact, main, err_eta, err_lambda, lambda1_sq, lambda1_exact: exact_l })
}

// ---------------------------------------------------------------------------
// Volume constants.

/// rational · π^{half_exponent / 2}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiMultiple {
    pub rational: BigRational,
    pub half_exponent: i32,
}

impl PiMultiple {
    pub fn one() -> Self {
        PiMultiple { rational: BigRational::one(), half_exponent: 0 }
    }

    pub fn mul(&self, o: &Self) -> Self {
        PiMultiple { rational: &self.rational * &o.rational, half_exponent: self.half_exponent + o.half_exponent }
    }

    /// self / o, valid when the π-power does not go negative.
    pub fn div(&self, o: &Self) -> Self {
        PiMultiple {
            rational: &self.rational / &o.rational,
            half_exponent: self.half_exponent - o.half_exponent,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.rational.to_f64().unwrap() * std::f64::consts::PI.powf(self.half_exponent as f64 / 2.0)
    }
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// Γ(k/2) for k ≥ 1.
pub fn gamma_half(k: u32) -> PiMultiple {
    assert!(k >= 1, "Γ(0) is undefined");
    if k % 2 == 0 {
        PiMultiple { rational: BigRational::from_integer(factorial((k / 2 - 1) as u64)), half_exponent: 0 }
    } else {
        let m = ((k - 1) / 2) as u64;
        let num = factorial(2 * m);
        let den = BigInt::from(4u32).pow(m as u32) * factorial(m);
        PiMultiple { rational: BigRational::new(num, den), half_exponent: 1 }
    }
}

/// c(l) = ∏_{j=0}^{l−2} Γ(1/2) Γ((j+1)/2) / Γ(j/2 + 1); c(0) = c(1) = 1.
pub fn beta_product(l: u32) -> PiMultiple {
    let mut acc = PiMultiple::one();
    for j in 0..l.saturating_sub(1) {
        acc = acc.mul(&gamma_half(1)).mul(&gamma_half(j + 1)).div(&gamma_half(j + 2));
    }
    acc
}

/// Exact volume π^{l/2} / Γ(l/2 + 1) of the unit l-ball.
pub fn unit_ball_volume(l: u32) -> PiMultiple {
    let pi = PiMultiple { rational: BigRational::one(), half_exponent: l as i32 };
    pi.div(&gamma_half(l + 2))
}

pub fn unit_ball_volume_f64(l: usize) -> f64 {
    unit_ball_volume(l as u32).to_f64()
}

/// Constants c(l) with the signed radial integration domain
/// ∫_{−ρ}^{ρ} |u|^{l−1} du, under which (2/l)·c(l) is the unit-ball volume.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeConstantTable {
    pub constants: Vec<PiMultiple>,
    pub provenance: String,
}

impl VolumeConstantTable {
    pub fn new(max_l: u32) -> Self {
        VolumeConstantTable {
            constants: (0..=max_l).map(beta_product).collect(),
            provenance: "beta product over a signed radial domain; (2/l)·c(l) equals π^{l/2}/Γ(l/2+1) for every l ≥ 1".into(),
        }
    }

    /// The closed form π^{(l−1)/2}/Γ(l/2), which differs from c(l) by √π.
    pub fn simplified_form(l: u32) -> PiMultiple {
        PiMultiple { rational: BigRational::one(), half_exponent: l as i32 - 1 }.div(&gamma_half(l))
    }
}

/// V(l, B) = c(l)·(2/l)·(B² − a²)^{l/2}, the volume of {x ∈ R^l : ‖x‖² + a² ≤ B²};
/// V(0, B) = 1.
pub fn ball_slice_volume(l: u32, big_b: f64, a: f64) -> Result<f64> {
    if l == 0 {
        return Ok(1.0);
    }
    let d = big_b * big_b - a * a;
    if d < 0.0 {
        return Err(Error::Precondition(format!("B² < a² for B = {big_b}, a = {a}")));
    }
    Ok(beta_product(l).to_f64() * 2.0 / l as f64 * d.powf(l as f64 / 2.0))
}
