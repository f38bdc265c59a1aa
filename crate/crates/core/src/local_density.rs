//! Local densities σ_p, the coefficients S_{p^k}, truncated singular
//! series, lower-bound certificates and p-adic solubility of quadrics.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime_u64, primes_up_to, valuation};
use crate::error::{Error, Result};
use crate::finite_field::{
    count_mod_q_bruteforce, count_quadric_mod_p_closed_form, find_padic_nonsingular,
    odometer_next, ModPolynomial, PadicWitness,
};
use crate::forms::QuadraticPolynomial;

/// Constant C in |σ_p − 1| ≤ C·p^{−3/2} for good primes, frozen after
/// calibration.
pub const TAIL_CONSTANT: u32 = 4;

/// σ_p^{(t)} with its stability gap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalDensityEstimate {
    pub p: u64,
    pub t: u32,
    /// N(p^k) for k = 0..=t (N(1) = 1).
    pub counts: Vec<BigInt>,
    pub sigma: BigRational,
    /// |σ^{(t)} − σ^{(t−1)}|.
    pub stability_gap: BigRational,
}

impl LocalDensityEstimate {
    pub fn sigma_at(&self, k: u32, m: usize) -> BigRational {
        sigma_from_count(&self.counts[k as usize], self.p, k, m)
    }

    /// Report record {p, t, numerator, denominator, stable}.
    pub fn record(&self) -> DensityRecord {
        DensityRecord {
            p: self.p,
            t: self.t,
            numerator: self.sigma.numer().to_string(),
            denominator: self.sigma.denom().to_string(),
            stable: self.stability_gap.is_zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub p: u64,
    pub t: u32,
    pub numerator: String,
    pub denominator: String,
    pub stable: bool,
}

fn sigma_from_count(n: &BigInt, p: u64, k: u32, m: usize) -> BigRational {
    let denom = BigInt::from(p).pow(k * (m as u32).saturating_sub(1));
    BigRational::new(n.clone(), denom)
}

/// #{u mod p^t : Q(u) ≡ w} for a quadratic form Q (given by 2Q) that is
/// nondegenerate modulo the odd prime p.
fn form_count_good(q2: &[Vec<BigInt>], p: u64, t: u32, w: &BigInt) -> Result<BigInt> {
    if t == 0 {
        return Ok(BigInt::one());
    }
    let m = q2.len() as u32;
    let bp = BigInt::from(p);
    let pt = bp.pow(t);
    let w = w.mod_floor(&pt);
    let shifted = QuadraticPolynomial::new(q2.to_vec(), vec![BigInt::zero(); q2.len()], -w.clone())?;
    let nonzero = count_quadric_mod_p_closed_form(&shifted, p)?.nonsingular;
    let mut total = nonzero * bp.pow((t - 1) * (m - 1));
    if t == 1 {
        if (&w % &bp).is_zero() {
            total += 1;
        }
    } else {
        let p2 = &bp * &bp;
        if (&w % &p2).is_zero() {
            total += bp.pow(m) * form_count_good(q2, p, t - 2, &(&w / &p2))?;
        }
    }
    Ok(total)
}

/// Number of zeros of F modulo p^t. Uses an exact recursion when p is odd
/// and Q is nondegenerate mod p, and enumeration otherwise.
pub fn count_mod_pt(f: &QuadraticPolynomial, p: u64, t: u32, budget: u128) -> Result<BigInt> {
    if !is_prime_u64(p) {
        return Err(Error::InvalidModulus(format!("{p} is not prime")));
    }
    if t == 0 {
        return Ok(BigInt::one());
    }
    if f.is_good_prime(p) {
        let pt = BigInt::from(p).pow(t);
        // c = −(2Q)^{-1} B mod p^t; then F(x) = Q(x − c) + F(c).
        let qm = crate::forms::RationalMatrix::from_int_rows(&f.q2)?;
        let (adj, det) = qm.adjugate_and_det()?;
        let det = det.to_integer();
        let inv = mod_inverse(&det, &pt)?;
        let c: Vec<BigInt> = (0..f.m)
            .map(|i| {
                let s = (0..f.m).fold(BigInt::zero(), |acc, j| acc + adj.get(i, j).to_integer() * &f.b[j]);
                (-s * &inv).mod_floor(&pt)
            })
            .collect();
        let fc = f.evaluate(&c)?;
        return form_count_good(&f.q2, p, t, &(-fc));
    }
    let q = p
        .checked_pow(t)
        .ok_or_else(|| Error::InvalidModulus("modulus overflows".into()))?;
    Ok(BigInt::from(count_mod_q_bruteforce(&f.to_polynomial(), q, false, budget)?))
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Result<BigInt> {
    let (g, x, _) = crate::arith::ext_gcd(&a.mod_floor(m), m);
    if !g.is_one() {
        return Err(Error::Precondition(format!("{a} is not invertible mod {m}")));
    }
    Ok(x.mod_floor(m))
}

/// σ_p^{(t)} = N(p^t)/p^{t(m−1)}.
pub fn sigma_p(f: &QuadraticPolynomial, p: u64, t: u32, budget: u128) -> Result<LocalDensityEstimate> {
    if t == 0 {
        return Err(Error::Precondition("truncation level must be at least 1".into()));
    }
    let mut counts = Vec::with_capacity(t as usize + 1);
    for k in 0..=t {
        counts.push(count_mod_pt(f, p, k, budget)?);
    }
    let sigma = sigma_from_count(&counts[t as usize], p, t, f.m);
    let prev = sigma_from_count(&counts[t as usize - 1], p, t - 1, f.m);
    let stability_gap = (&sigma - &prev).abs();
    Ok(LocalDensityEstimate { p, t, counts, sigma, stability_gap })
}

/// S_{p^k} = p^k N(p^k) − p^{m+k−1} N(p^{k−1}).
pub fn s_pk_from_counts(n_k: &BigInt, n_km1: &BigInt, p: u64, k: u32, m: usize) -> BigInt {
    let bp = BigInt::from(p);
    bp.pow(k) * n_k - bp.pow(m as u32 + k - 1) * n_km1
}

/// S_{p^k} for F computed from exact counts.
pub fn s_pk_extract(f: &QuadraticPolynomial, p: u64, k: u32, budget: u128) -> Result<BigInt> {
    if k == 0 {
        return Ok(BigInt::one());
    }
    let nk = count_mod_pt(f, p, k, budget)?;
    let nkm1 = count_mod_pt(f, p, k - 1, budget)?;
    Ok(s_pk_from_counts(&nk, &nkm1, p, k, f.m))
}

/// Σ_{k≤t} S_{p^k} p^{−km}, which equals σ_p^{(t)}.
pub fn sigma_from_s(est: &LocalDensityEstimate, m: usize) -> BigRational {
    let bp = BigInt::from(est.p);
    let mut acc = BigRational::one();
    for k in 1..=est.t {
        let s = s_pk_from_counts(&est.counts[k as usize], &est.counts[k as usize - 1], est.p, k, m);
        acc += BigRational::new(s, bp.pow(k * m as u32));
    }
    acc
}

/// Tail certificate for the omitted primes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCertificate {
    pub constant: u32,
    /// Upper bound on Σ_{p>P} C p^{−3/2}.
    pub tail_sum_bound: f64,
    /// Bounds on the product of omitted factors.
    pub lower_factor: f64,
    pub upper_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSeriesEstimate {
    pub p_max: u64,
    pub factors: Vec<LocalDensityEstimate>,
    pub product: BigRational,
    pub certificate: Option<TailCertificate>,
    pub notes: Vec<String>,
}

/// Default truncation: 2 at good primes, 2v+1 at bad primes with
/// v = ord_p(2·det 2Q) (v = 1 when the form is degenerate).
pub fn default_truncation(f: &QuadraticPolynomial, p: u64) -> u32 {
    if f.is_good_prime(p) {
        return 2;
    }
    let d: BigInt = f.det_2q() * BigInt::from(2);
    let v = if d.is_zero() { 1 } else { valuation(&d, p).max(1) };
    2 * v + 1
}

/// Truncated singular series ∏_{p ≤ P_max} σ_p^{(t_p)}.
pub fn singular_series(
    f: &QuadraticPolynomial,
    p_max: u64,
    t: Option<u32>,
    budget: u128,
) -> Result<SingularSeriesEstimate> {
    let mut factors = Vec::new();
    let mut notes = Vec::new();
    let mut product = BigRational::one();
    for p in primes_up_to(p_max) {
        let mut tp = t.unwrap_or_else(|| default_truncation(f, p));
        if !f.is_good_prime(p) {
            while tp > 1 {
                let need = (p as u128).checked_pow(tp * f.m as u32);
                if need.map(|v| v <= budget).unwrap_or(false) {
                    break;
                }
                tp -= 1;
            }
            if tp != t.unwrap_or_else(|| default_truncation(f, p)) {
                notes.push(format!("p = {p}: truncation reduced to t = {tp} by the budget"));
            }
        }
        let est = sigma_p(f, p, tp, budget)?;
        product *= &est.sigma;
        factors.push(est);
    }
    let det = f.det_2q();
    let rank = f.rank();
    let bad_ok = !det.is_zero()
        && crate::arith::prime_divisors(&(det * BigInt::from(2)))?
            .iter()
            .all(|q| q <= &BigInt::from(p_max));
    let certificate = (rank >= 5 && bad_ok).then(|| {
        let s = 2.0 * TAIL_CONSTANT as f64 / (p_max.max(1) as f64).sqrt();
        TailCertificate {
            constant: TAIL_CONSTANT,
            tail_sum_bound: s,
            lower_factor: (1.0 - s).max(0.0),
            upper_factor: s.exp(),
        }
    });
    if certificate.is_none() {
        notes.push("estimate only: rank < 5 or bad primes beyond the cutoff".into());
    }
    Ok(SingularSeriesEstimate { p_max, factors, product, certificate, notes })
}

/// One factor of the lower-bound certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateFactor {
    /// p | A: σ_p ≥ p^{−(2v−1)(m−1)} from a witness.
    Witness { p: u64, v: u32, value: BigRational },
    /// p divides the gcd of the top minors and rank mod p ≥ 3: 1 − 2/p.
    RankAtLeastThree { p: u64, value: BigRational },
    /// p divides the gcd of the top minors, explicit N*(p)/p^{m−1}.
    ExplicitCount { p: u64, value: BigRational },
}

impl CertificateFactor {
    pub fn value(&self) -> &BigRational {
        match self {
            CertificateFactor::Witness { value, .. }
            | CertificateFactor::RankAtLeastThree { value, .. }
            | CertificateFactor::ExplicitCount { value, .. } => value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesLowerBound {
    pub factors: Vec<CertificateFactor>,
    pub tail_constant: BigRational,
    pub bound: BigRational,
}

/// Lower bound for ∏_{p ≥ 3}(1 − C p^{−3/2}) rounded down to a rational.
pub fn tail_product_constant() -> BigRational {
    let cutoff = 100_000u64;
    let mut log_sum = 0.0f64;
    for p in primes_up_to(cutoff).into_iter().filter(|&p| p >= 3) {
        log_sum += (1.0 - TAIL_CONSTANT as f64 * (p as f64).powf(-1.5)).ln();
    }
    let rest = 1.0 - 2.0 * TAIL_CONSTANT as f64 / (cutoff as f64).sqrt();
    let value = log_sum.exp() * rest * (1.0 - 1e-9);
    let scale = 1_000_000_000_000i64;
    BigRational::new(BigInt::from((value * scale as f64).floor() as i64), BigInt::from(scale))
}

/// gcd of all k×k minors of an integer matrix.
pub fn minor_gcd(m: &[Vec<BigInt>], k: usize) -> BigInt {
    let n = m.len();
    let mut g = BigInt::zero();
    let subsets = k_subsets(n, k);
    for rows in &subsets {
        for cols in &subsets {
            let sub: Vec<Vec<BigInt>> =
                rows.iter().map(|&i| cols.iter().map(|&j| m[i][j].clone()).collect()).collect();
            g = g.gcd(&crate::forms::matrix::int_det(&sub));
            if g.is_one() {
                return g;
            }
        }
    }
    g
}

/// All k-element subsets of 0..n in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Three-factor lower bound 𝔖(F) ≥ L: witnesses at p | A, (1 − 2/p) or an
/// explicit count at primes dividing the gcd of the top-order minors, and
/// the tail constant for all remaining primes.
pub fn series_lower_bound_certificate(
    f: &QuadraticPolynomial,
    a_primes: &[u64],
    witnesses: &[PadicWitness],
    budget: u128,
) -> Result<SeriesLowerBound> {
    let rank = f.rank();
    if rank < 5 {
        return Err(Error::Precondition(format!("rank {rank} < 5")));
    }
    let m = f.m;
    let poly = f.to_polynomial();
    let mut a: Vec<u64> = a_primes.to_vec();
    if !a.contains(&2) {
        a.push(2);
    }
    a.sort_unstable();
    a.dedup();
    let mut factors = Vec::new();
    for &p in &a {
        let w = witnesses
            .iter()
            .find(|w| w.p == p)
            .ok_or(Error::NoWitness { p, v_max: 0 })?;
        if !w.verify(&poly) {
            return Err(Error::Precondition(format!("witness at p = {p} does not verify")));
        }
        let e = (2 * w.v - 1) * (m as u32 - 1);
        factors.push(CertificateFactor::Witness {
            p,
            v: w.v,
            value: BigRational::new(BigInt::one(), BigInt::from(p).pow(e)),
        });
    }
    let g = minor_gcd(&f.q2, rank);
    for q in crate::arith::prime_divisors(&g)? {
        let p = q.to_u64().ok_or_else(|| Error::Unresolved("huge prime in minor gcd".into()))?;
        if a.contains(&p) {
            continue;
        }
        let (q2p, _, _) = f.reduce_mod(p);
        let rank_mod_p = rank_mod_prime(&q2p, p);
        if rank_mod_p >= 3 {
            let value = BigRational::new(BigInt::from(p - 2), BigInt::from(p));
            let exact = count_quadric_mod_p_closed_form(f, p)?.nonsingular;
            let ratio = BigRational::new(exact, BigInt::from(p).pow(m as u32 - 1));
            if ratio < value {
                return Err(Error::Disagreement(format!(
                    "closed form below 1 − 2/p at p = {p}"
                )));
            }
            factors.push(CertificateFactor::RankAtLeastThree { p, value });
        } else {
            let ns = count_mod_q_bruteforce(&poly, p, true, budget)?;
            if ns == 0 {
                return Err(Error::Precondition(format!("no nonsingular point mod {p}")));
            }
            factors.push(CertificateFactor::ExplicitCount {
                p,
                value: BigRational::new(BigInt::from(ns), BigInt::from(p).pow(m as u32 - 1)),
            });
        }
    }
    let tail_constant = tail_product_constant();
    let bound = factors.iter().fold(tail_constant.clone(), |acc, f| acc * f.value());
    Ok(SeriesLowerBound { factors, tail_constant, bound })
}

/// Rank of an integer matrix over F_p.
pub fn rank_mod_prime(m: &[Vec<u64>], p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = m.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let rows = a.len();
    let cols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..rows).find(|&i| a[i][c] != 0) else { continue };
        a.swap(piv, r);
        let inv = crate::arith::pow_mod(a[r][c], p - 2, p);
        for i in 0..rows {
            if i != r && a[i][c] != 0 {
                let f = crate::arith::mul_mod(a[i][c], inv, p);
                for j in c..cols {
                    let t = crate::arith::mul_mod(f, a[r][j], p);
                    a[i][j] = (a[i][j] + p - t) % p;
                }
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Verdict of the p-adic solubility test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolubilityVerdict {
    Soluble(PadicWitness),
    /// No zeros at all modulo p^k.
    InsolubleCertified { k: u32 },
    Unknown { reason: String },
}

/// Decide solubility of F = 0 over Z_p by witness search and exhaustive
/// residue counts up to p^{2 v_max − 1}.
pub fn solubility_quadric_zp(
    f: &QuadraticPolynomial,
    p: u64,
    v_max: u32,
    budget: u128,
) -> Result<SolubilityVerdict> {
    let poly = f.to_polynomial();
    let all: Vec<usize> = (0..f.m).collect();
    if poly.gradient().iter().all(|g| g.is_zero()) {
        // Constant polynomial.
        return Ok(if f.n.is_zero() {
            SolubilityVerdict::Unknown { reason: "identically zero polynomial".into() }
        } else {
            SolubilityVerdict::InsolubleCertified { k: valuation(&f.n, p) + 1 }
        });
    }
    if p != 2 && f.rank() >= 3 {
        let (q2p, _, _) = f.reduce_mod(p);
        if rank_mod_prime(&q2p, p) >= 3 {
            let cf = count_quadric_mod_p_closed_form(f, p)?;
            if cf.nonsingular.is_positive() {
                let w = find_padic_nonsingular(&poly, &all, p, 1, budget)?;
                return Ok(SolubilityVerdict::Soluble(w));
            }
        }
    }
    let m = f.m;
    let grads: Vec<_> = poly.gradient();
    for k in 1..=(2 * v_max - 1) {
        let q = match p.checked_pow(k) {
            Some(q) => q,
            None => return Ok(SolubilityVerdict::Unknown { reason: "modulus overflow".into() }),
        };
        let need = (q as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if need > budget {
            return Ok(SolubilityVerdict::Unknown {
                reason: format!("budget exceeded at modulus {p}^{k}"),
            });
        }
        let fq = ModPolynomial::new(&poly, q);
        let witness_level = k % 2 == 1;
        let v = k.div_ceil(2);
        let pv = p.pow(v);
        let gq: Vec<ModPolynomial> = grads.iter().map(|g| ModPolynomial::new(g, pv)).collect();
        let mut x = vec![0u64; m];
        let mut xr = vec![0u64; m];
        let mut any = false;
        loop {
            if fq.eval(&x) == 0 {
                any = true;
                if witness_level {
                    for (a, b) in xr.iter_mut().zip(&x) {
                        *a = b % pv;
                    }
                    if let Some(i) = gq.iter().position(|g| g.eval(&xr) != 0) {
                        return Ok(SolubilityVerdict::Soluble(PadicWitness {
                            p,
                            v,
                            residue: x,
                            index: i,
                        }));
                    }
                } else {
                    break;
                }
            }
            if !odometer_next(&mut x, q) {
                break;
            }
        }
        if !any {
            return Ok(SolubilityVerdict::InsolubleCertified { k });
        }
    }
    Ok(SolubilityVerdict::Unknown { reason: format!("no witness with v ≤ {v_max}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_field::DEFAULT_BUDGET;
    use crate::forms::IntPolynomial;

    fn quad(n: usize, t: &[(&[u32], i64)]) -> QuadraticPolynomial {
        let p = IntPolynomial::from_terms(n, t.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap();
        QuadraticPolynomial::from_polynomial(&p).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let lin = quad(2, &[(&[1, 0], 1), (&[0, 0], 4)]);
        for p in [2, 3, 5] {
            for t in 1..=3 {
                assert_eq!(sigma_p(&lin, p, t, DEFAULT_BUDGET).unwrap().sigma, BigRational::one());
            }
        }
        let sq = quad(1, &[(&[2], 1)]);
        let e = sigma_p(&sq, 5, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(e.counts[2], BigInt::from(5));
        assert_eq!(e.sigma, BigRational::from_integer(5.into()));
        let five = quad(5, &[(&[2, 0, 0, 0, 0], 1), (&[0, 2, 0, 0, 0], 1), (&[0, 0, 2, 0, 0], 1), (&[0, 0, 0, 2, 0], 1), (&[0, 0, 0, 0, 2], 1), (&[0, 0, 0, 0, 0], -1)]);
        let e = sigma_p(&five, 7, 1, DEFAULT_BUDGET).unwrap();
        let brute = count_mod_q_bruteforce(&five.to_polynomial(), 7, false, DEFAULT_BUDGET).unwrap();
        assert_eq!(e.sigma, BigRational::new(BigInt::from(brute), BigInt::from(7u64.pow(4))));
    }

    #[test]
    fn s_coefficient_of_square() {
        let sq = quad(1, &[(&[2], 1)]);
        assert_eq!(s_pk_extract(&sq, 5, 1, DEFAULT_BUDGET).unwrap(), BigInt::zero());
        let lin = quad(1, &[(&[1], 1), (&[0], 2)]);
        for k in 1..=3 {
            assert_eq!(s_pk_extract(&lin, 3, k, DEFAULT_BUDGET).unwrap(), BigInt::zero());
        }
    }

    #[test]
    fn solubility_examples() {
        let one = quad(1, &[(&[2], 1), (&[0], -1)]);
        for p in [2, 3, 5, 7] {
            match solubility_quadric_zp(&one, p, 3, DEFAULT_BUDGET).unwrap() {
                SolubilityVerdict::Soluble(w) => assert_eq!(w.residue, vec![1]),
                v => panic!("unexpected {v:?}"),
            }
        }
        let no = quad(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -3)]);
        assert_eq!(
            solubility_quadric_zp(&no, 3, 3, DEFAULT_BUDGET).unwrap(),
            SolubilityVerdict::InsolubleCertified { k: 2 }
        );
    }
}
