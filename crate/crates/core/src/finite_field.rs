//! Point counts of quadratic polynomials modulo primes and prime powers,
//! Jacobi symbols, and p-adic nonsingular witness search.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime_big, is_prime_u64, mul_mod, pow_mod};
use crate::error::{Error, Result};
use crate::forms::{IntPolynomial, QuadraticPolynomial};

/// Default enumeration budget in evaluated points.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

/// An odd prime together with an optional exponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimeModulus {
    pub p: BigInt,
    pub t: u32,
}

impl PrimeModulus {
    pub fn new(p: impl Into<BigInt>, t: u32) -> Result<Self> {
        let p = p.into();
        if !is_prime_big(&p) {
            return Err(Error::InvalidModulus(format!("{p} is not prime")));
        }
        if p == BigInt::from(2) {
            return Err(Error::InvalidModulus("p = 2 is excluded".into()));
        }
        if t == 0 {
            return Err(Error::InvalidModulus("exponent must be positive".into()));
        }
        Ok(PrimeModulus { p, t })
    }

    pub fn modulus(&self) -> BigInt {
        num_traits::pow(self.p.clone(), self.t as usize)
    }
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi_symbol(a: &BigInt, n: &BigInt) -> Result<i32> {
    if !n.is_positive() || n.is_even() {
        return Err(Error::InvalidModulus(format!(
            "Jacobi symbol needs odd positive modulus, got {n}"
        )));
    }
    let mut a = a.mod_floor(n);
    let mut n = n.clone();
    let mut result = 1;
    let three = BigInt::from(3);
    let five = BigInt::from(5);
    let eight = BigInt::from(8);
    let four = BigInt::from(4);
    while !a.is_zero() {
        while a.is_even() {
            a >>= 1;
            let r = &n % &eight;
            if r == three || r == five {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if (&a % &four) == three && (&n % &four) == three {
            result = -result;
        }
        a = a.mod_floor(&n);
    }
    Ok(if n.is_one() { result } else { 0 })
}

/// Legendre symbol for an odd prime modulus in machine integers.
pub fn legendre_u64(a: u64, p: u64) -> i32 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if pow_mod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Symmetric diagonalization over F_p: returns (R, D) with RᵀQR = diag(D).
pub fn diagonalize_mod_p(q: &[Vec<u64>], p: u64) -> Result<(Vec<Vec<u64>>, Vec<u64>)> {
    if p == 2 || !is_prime_u64(p) {
        return Err(Error::InvalidModulus(format!("need an odd prime, got {p}")));
    }
    let n = q.len();
    let mut a: Vec<Vec<u64>> = q.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    for i in 0..n {
        for j in 0..n {
            if a[i][j] != a[j][i] {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut r: Vec<Vec<u64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u64).collect()).collect();
    // Column operation col_dst += f·col_src on both R and (symmetrically) A.
    let add = |a: &mut Vec<Vec<u64>>, r: &mut Vec<Vec<u64>>, dst: usize, src: usize, f: u64| {
        for row in a.iter_mut() {
            row[dst] = (row[dst] + mul_mod(f, row[src], p)) % p;
        }
        for j in 0..n {
            a[dst][j] = (a[dst][j] + mul_mod(f, a[src][j], p)) % p;
        }
        for row in r.iter_mut() {
            row[dst] = (row[dst] + mul_mod(f, row[src], p)) % p;
        }
    };
    for k in 0..n {
        if a[k][k] == 0 {
            if let Some(j) = ((k + 1)..n).find(|&j| a[j][j] != 0) {
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
                a.swap(k, j);
                for row in r.iter_mut() {
                    row.swap(k, j);
                }
            } else if let Some(j) = ((k + 1)..n).find(|&j| a[k][j] != 0) {
                add(&mut a, &mut r, k, j, 1);
            } else {
                continue;
            }
        }
        let inv = inv_mod(a[k][k], p);
        for j in (k + 1)..n {
            if a[k][j] == 0 {
                continue;
            }
            let f = (p - mul_mod(a[k][j], inv, p)) % p;
            add(&mut a, &mut r, j, k, f);
        }
    }
    Ok((r, (0..n).map(|i| a[i][i]).collect()))
}

/// Symbolic tag for ε_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsilonTag {
    One,
    I,
}

/// The K_r value: an integer for even r, and ε_p·(w/p)·√p for odd r.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KValue {
    Integer(BigInt),
    EpsJacobiSqrtP { jacobi_w: i32 },
}

/// Gauss-sum data assembled by the closed form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GaussSumData {
    pub epsilon: EpsilonTag,
    pub rank: usize,
    pub k_value: KValue,
    pub kappa: u8,
    pub jacobi_det: i32,
    /// w = 4c where c is the constant after completing squares.
    pub w_mod_p: u64,
}

/// Result of the closed-form count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedFormCount {
    pub nonsingular: BigInt,
    pub total: BigInt,
    /// `None` when a unit linear coefficient outside the active block made
    /// the count exactly p^{m-1}.
    pub gauss: Option<GaussSumData>,
}

/// Closed-form counts of zeros and nonsingular zeros of F mod an odd prime.
pub fn count_quadric_mod_p_closed_form(f: &QuadraticPolynomial, p: u64) -> Result<ClosedFormCount> {
    if p == 2 || !is_prime_u64(p) {
        return Err(Error::InvalidModulus(format!("closed form needs an odd prime, got {p}")));
    }
    let m = f.m;
    let (q2, b, n) = f.reduce_mod(p);
    let inv2 = inv_mod(2, p);
    let q: Vec<Vec<u64>> = q2.iter().map(|r| r.iter().map(|&v| mul_mod(v, inv2, p)).collect()).collect();
    let (r, d) = diagonalize_mod_p(&q, p)?;
    // D' = Rᵀ B.
    let dp: Vec<u64> = (0..m)
        .map(|i| (0..m).fold(0u64, |acc, k| (acc + mul_mod(r[k][i], b[k], p)) % p))
        .collect();
    let pm1 = BigInt::from(p).pow(m as u32 - if m > 0 { 1 } else { 0 });
    if m > 0 && (0..m).any(|i| d[i] == 0 && dp[i] != 0) {
        return Ok(ClosedFormCount { nonsingular: pm1.clone(), total: pm1, gauss: None });
    }
    let active: Vec<usize> = (0..m).filter(|&i| d[i] != 0).collect();
    let rk = active.len();
    // c = N − Σ D'_i² / (4 A_i).
    let mut c = n % p;
    for &i in &active {
        let t = mul_mod(mul_mod(dp[i], dp[i], p), inv_mod(mul_mod(4, d[i], p), p), p);
        c = (c + p - t) % p;
    }
    let w = mul_mod(4, c, p);
    let det = active.iter().fold(1u64, |acc, &i| mul_mod(acc, d[i], p));
    let chi_det = legendre_u64(det, p);
    let bp = BigInt::from(p);
    let free = BigInt::from(p).pow((m - rk) as u32);
    let minus_one_class = if p % 4 == 3 { -1 } else { 1 };
    let epsilon = if p % 4 == 1 { EpsilonTag::One } else { EpsilonTag::I };
    let kappa = (c == 0) as u8;
    // Count of Σ A_i v_i² = −c over F_p^r.
    let (core, k_value): (BigInt, KValue) = if rk == 0 {
        (if c == 0 { BigInt::one() } else { BigInt::zero() }, KValue::Integer(BigInt::zero()))
    } else if rk % 2 == 0 {
        let k = if c == 0 { BigInt::from(p - 1) } else { BigInt::from(-1) };
        let sign = if (rk / 2) % 2 == 1 { minus_one_class } else { 1 };
        let main = bp.pow(rk as u32 - 1);
        let corr = &k * bp.pow((rk as u32 - 2) / 2) * BigInt::from(sign * chi_det);
        (main + corr, KValue::Integer(k))
    } else {
        let chi_w = legendre_u64(w, p);
        let main = bp.pow(rk as u32 - 1);
        // χ((−1)^{(r+1)/2} c det); (w/p) = (c/p).
        let sign = if ((rk + 1) / 2) % 2 == 1 { minus_one_class } else { 1 };
        let corr = bp.pow((rk as u32 - 1) / 2) * BigInt::from(sign * chi_w * chi_det);
        (main + corr, KValue::EpsJacobiSqrtP { jacobi_w: chi_w })
    };
    let total = core * &free;
    let nonsingular = &total - BigInt::from(kappa) * &free;
    Ok(ClosedFormCount {
        nonsingular,
        total,
        gauss: Some(GaussSumData {
            epsilon,
            rank: rk,
            k_value,
            kappa,
            jacobi_det: chi_det,
            w_mod_p: w,
        }),
    })
}

/// Least non-negative residue of c modulo q.
pub fn reduce_big(c: &BigInt, q: u64) -> u64 {
    c.mod_floor(&BigInt::from(q)).to_u64().expect("residue fits")
}

/// A polynomial with coefficients reduced modulo q, for fast enumeration.
#[derive(Clone, Debug)]
pub struct ModPolynomial {
    pub modulus: u64,
    terms: Vec<(Vec<u32>, u64)>,
}

impl ModPolynomial {
    pub fn new(p: &IntPolynomial, modulus: u64) -> Self {
        let md = BigInt::from(modulus);
        let terms = p
            .terms()
            .filter_map(|(m, c)| {
                let v = c.mod_floor(&md).to_u64().unwrap();
                (v != 0).then(|| (m.0.clone(), v))
            })
            .collect();
        ModPolynomial { modulus, terms }
    }

    #[inline]
    pub fn eval(&self, x: &[u64]) -> u64 {
        let q = self.modulus;
        let mut acc = 0u64;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = mul_mod(t, *xi, q);
                }
            }
            acc += t;
            if acc >= q {
                acc -= q;
            }
        }
        acc
    }
}

/// Lexicographic odometer over (Z/q)^m; returns false after the last point.
#[inline]
pub fn odometer_next(x: &mut [u64], q: u64) -> bool {
    for i in (0..x.len()).rev() {
        x[i] += 1;
        if x[i] < q {
            return true;
        }
        x[i] = 0;
    }
    false
}

fn check_budget(q: u64, m: usize, budget: u128) -> Result<()> {
    let needed = (q as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// Smallest prime factor p of q, requiring q to be a power of p.
fn prime_power_base(q: u64) -> Option<u64> {
    if q < 2 {
        return None;
    }
    let p = crate::arith::factor_u64(q);
    (p.len() == 1).then(|| p[0].0)
}

/// Exact number of zeros of f modulo q by enumeration. With
/// `nonsingular_only`, zeros where every partial vanishes mod p are skipped
/// (q must be a power of the prime p).
pub fn count_mod_q_bruteforce(
    f: &IntPolynomial,
    q: u64,
    nonsingular_only: bool,
    budget: u128,
) -> Result<u64> {
    let m = f.num_vars();
    check_budget(q, m, budget)?;
    let fp = ModPolynomial::new(f, q);
    let grads: Vec<ModPolynomial> = if nonsingular_only {
        let p = prime_power_base(q)
            .ok_or_else(|| Error::InvalidModulus(format!("{q} is not a prime power")))?;
        f.gradient().iter().map(|g| ModPolynomial::new(g, p)).collect()
    } else {
        Vec::new()
    };
    let p = grads.first().map(|g| g.modulus).unwrap_or(q);
    let mut x = vec![0u64; m];
    let mut xr = vec![0u64; m];
    let mut count = 0u64;
    loop {
        if fp.eval(&x) == 0 {
            let ok = if nonsingular_only {
                for (a, b) in xr.iter_mut().zip(&x) {
                    *a = b % p;
                }
                grads.iter().any(|g| g.eval(&xr) != 0)
            } else {
                true
            };
            if ok {
                count += 1;
            }
        }
        if !odometer_next(&mut x, q) {
            break;
        }
    }
    Ok(count)
}

/// A residue (x, r) mod p^{2v−1} with C ≡ 0 mod p^{2v−1} and some partial in
/// the allowed variables nonzero mod p^v.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PadicWitness {
    pub p: u64,
    pub v: u32,
    /// Residues of all variables modulo p^{2v−1}.
    pub residue: Vec<u64>,
    /// Index of the nonvanishing partial derivative.
    pub index: usize,
}

impl PadicWitness {
    pub fn modulus(&self) -> u64 {
        self.p.pow(2 * self.v - 1)
    }

    /// Re-check both defining congruences.
    pub fn verify(&self, c: &IntPolynomial) -> bool {
        let point: Vec<BigInt> = self.residue.iter().map(|&v| BigInt::from(v)).collect();
        let Ok(val) = c.evaluate(&point) else { return false };
        let Ok(d) = c.derivative(self.index).evaluate(&point) else { return false };
        let q = BigInt::from(self.modulus());
        let pv = BigInt::from(self.p.pow(self.v));
        (val % q).is_zero() && !(d % pv).is_zero()
    }
}

/// Scan residues mod p^{2v−1} for v = 1..=v_max in lexicographic order and
/// return the first witness. `allowed` lists the variables whose partials
/// may certify nonsingularity.
pub fn find_padic_nonsingular(
    c: &IntPolynomial,
    allowed: &[usize],
    p: u64,
    v_max: u32,
    budget: u128,
) -> Result<PadicWitness> {
    if !is_prime_u64(p) {
        return Err(Error::InvalidModulus(format!("{p} is not prime")));
    }
    let grads: Vec<(usize, IntPolynomial)> = allowed
        .iter()
        .map(|&i| (i, c.derivative(i)))
        .filter(|(_, g)| !g.is_zero())
        .collect();
    if grads.is_empty() {
        return Err(Error::Precondition("all allowed partial derivatives vanish identically".into()));
    }
    let m = c.num_vars();
    for v in 1..=v_max {
        let q = p.pow(2 * v - 1);
        check_budget(q, m, budget)?;
        let pv = p.pow(v);
        let cq = ModPolynomial::new(c, q);
        let gq: Vec<(usize, ModPolynomial)> =
            grads.iter().map(|(i, g)| (*i, ModPolynomial::new(g, pv))).collect();
        let mut x = vec![0u64; m];
        let mut xr = vec![0u64; m];
        loop {
            if cq.eval(&x) == 0 {
                for (a, b) in xr.iter_mut().zip(&x) {
                    *a = b % pv;
                }
                if let Some((i, _)) = gq.iter().find(|(_, g)| g.eval(&xr) != 0) {
                    return Ok(PadicWitness { p, v, residue: x, index: *i });
                }
            }
            if !odometer_next(&mut x, q) {
                break;
            }
        }
    }
    Err(Error::NoWitness { p, v_max })
}

/// Exact and certified counts of zeros modulo p^t.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HenselCount {
    pub p: u64,
    pub t: u32,
    pub exact: Option<u64>,
    /// Lower bound p^{(t−(2v−1))(m−1)} · #(witness classes mod p^v).
    pub certified: Option<BigInt>,
    pub witness_v: Option<u32>,
    pub witness_classes: usize,
}

/// Witness classes modulo p^v at the smallest v ≤ v_max admitting one.
pub fn witness_classes(
    f: &IntPolynomial,
    p: u64,
    v_max: u32,
    budget: u128,
) -> Result<Option<(u32, usize)>> {
    let m = f.num_vars();
    let grads: Vec<IntPolynomial> = f.gradient();
    for v in 1..=v_max {
        let q = p.pow(2 * v - 1);
        check_budget(q, m, budget)?;
        let pv = p.pow(v);
        let fq = ModPolynomial::new(f, q);
        let gq: Vec<ModPolynomial> = grads.iter().map(|g| ModPolynomial::new(g, pv)).collect();
        let mut classes: BTreeSet<Vec<u64>> = BTreeSet::new();
        let mut x = vec![0u64; m];
        let mut xr = vec![0u64; m];
        loop {
            if fq.eval(&x) == 0 {
                for (a, b) in xr.iter_mut().zip(&x) {
                    *a = b % pv;
                }
                if gq.iter().any(|g| g.eval(&xr) != 0) {
                    classes.insert(xr.clone());
                }
            }
            if !odometer_next(&mut x, q) {
                break;
            }
        }
        if !classes.is_empty() {
            return Ok(Some((v, classes.len())));
        }
    }
    Ok(None)
}

/// Exact count of zeros mod p^t (when within budget) and the certified
/// Hensel lower bound (when a witness level 2v−1 ≤ t exists).
pub fn hensel_count(f: &IntPolynomial, p: u64, t: u32, budget: u128) -> Result<HenselCount> {
    if t == 0 {
        return Err(Error::Precondition("t must be at least 1".into()));
    }
    let m = f.num_vars() as u32;
    let q = p
        .checked_pow(t)
        .ok_or_else(|| Error::InvalidModulus("modulus overflows".into()))?;
    let exact = count_mod_q_bruteforce(f, q, false, budget).ok();
    let v_max = t.div_ceil(2);
    let found = witness_classes(f, p, v_max, budget)?;
    let (certified, witness_v, classes) = match found {
        Some((v, k)) if 2 * v - 1 <= t => {
            let e = (t - (2 * v - 1)) * m.saturating_sub(1);
            (Some(BigInt::from(p).pow(e) * BigInt::from(k)), Some(v), k)
        }
        _ => (None, None, 0),
    };
    if exact.is_none() && certified.is_none() {
        return Err(Error::NoWitness { p, v_max });
    }
    Ok(HenselCount { p, t, exact, certified, witness_v, witness_classes: classes })
}

/// Quadratic-residue value statistics of f over F_p.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidueValueCount {
    /// #{x : (f(x)/p) = 1}.
    pub count: u64,
    /// S = Σ_x (f(x)/p).
    pub char_sum: i64,
    /// #{x : f(x) ≡ 0}.
    pub zeros: u64,
}

pub fn quadratic_residue_value_count(f: &IntPolynomial, p: u64, budget: u128) -> Result<ResidueValueCount> {
    if p == 2 || !is_prime_u64(p) {
        return Err(Error::InvalidModulus(format!("need an odd prime, got {p}")));
    }
    let m = f.num_vars();
    check_budget(p, m, budget)?;
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    for a in 1..p {
        chi[mul_mod(a, a, p) as usize] = 1;
    }
    let fp = ModPolynomial::new(f, p);
    let mut x = vec![0u64; m];
    let (mut count, mut zeros, mut s) = (0u64, 0u64, 0i64);
    loop {
        match chi[fp.eval(&x) as usize] {
            1 => {
                count += 1;
                s += 1;
            }
            0 => zeros += 1,
            _ => s -= 1,
        }
        if !odometer_next(&mut x, p) {
            break;
        }
    }
    Ok(ResidueValueCount { count, char_sum: s, zeros })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, t: &[(&[u32], i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(n, t.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn jacobi_examples() {
        let j = |a: i64, n: i64| jacobi_symbol(&a.into(), &n.into());
        assert_eq!(j(1, 7).unwrap(), 1);
        assert_eq!(j(3, 9).unwrap(), 0);
        assert_eq!(j(2, 15).unwrap(), 1);
        assert!(j(2, 8).is_err());
        assert!(j(2, -3).is_err());
    }

    #[test]
    fn diagonalize_examples() {
        let (r, d) = diagonalize_mod_p(&[vec![2, 0], vec![0, 3]], 5).unwrap();
        assert_eq!(r, vec![vec![1, 0], vec![0, 1]]);
        assert_eq!(d, vec![2, 3]);
        let (_, d) = diagonalize_mod_p(&[vec![1, 2], vec![2, 4]], 7).unwrap();
        assert_eq!(d.iter().filter(|&&v| v != 0).count(), 1);
        assert!(diagonalize_mod_p(&[vec![1]], 2).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let f = QuadraticPolynomial::from_polynomial(&poly(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], 1), (&[0, 0, 2], 1)])).unwrap();
        let c = count_quadric_mod_p_closed_form(&f, 3).unwrap();
        assert_eq!(c.nonsingular, BigInt::from(8));
        assert_eq!(c.total, BigInt::from(9));
        let sq = QuadraticPolynomial::from_polynomial(&poly(1, &[(&[2], 1)])).unwrap();
        assert_eq!(count_quadric_mod_p_closed_form(&sq, 5).unwrap().nonsingular, BigInt::zero());
    }

    #[test]
    fn bruteforce_examples() {
        let lin = poly(2, &[(&[1, 0], 1)]);
        assert_eq!(count_mod_q_bruteforce(&lin, 7, false, DEFAULT_BUDGET).unwrap(), 7);
        let circ = poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -1)]);
        assert_eq!(count_mod_q_bruteforce(&circ, 3, false, DEFAULT_BUDGET).unwrap(), 4);
        let sq = poly(1, &[(&[2], 1)]);
        assert_eq!(count_mod_q_bruteforce(&sq, 5, true, DEFAULT_BUDGET).unwrap(), 0);
        assert!(count_mod_q_bruteforce(&circ, 1 << 20, false, 1000).is_err());
    }

    #[test]
    fn closed_form_matches_bruteforce_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let m = rng.gen_range(1..=4usize);
            let p = [3u64, 5, 7, 11, 13][rng.gen_range(0..5)];
            let mut q2 = vec![vec![BigInt::zero(); m]; m];
            for i in 0..m {
                q2[i][i] = BigInt::from(2 * rng.gen_range(-3..=3i64));
                for j in (i + 1)..m {
                    let v = BigInt::from(rng.gen_range(-3..=3i64));
                    q2[i][j] = v.clone();
                    q2[j][i] = v;
                }
            }
            let b = (0..m).map(|_| BigInt::from(rng.gen_range(-3..=3i64) * if rng.gen_bool(0.5) { p as i64 } else { 1 })).collect();
            let f = QuadraticPolynomial::new(q2, b, BigInt::from(rng.gen_range(-5..=5i64))).unwrap();
            let cf = count_quadric_mod_p_closed_form(&f, p).unwrap();
            let poly = f.to_polynomial();
            let t = count_mod_q_bruteforce(&poly, p, false, DEFAULT_BUDGET).unwrap();
            let ns = count_mod_q_bruteforce(&poly, p, true, DEFAULT_BUDGET).unwrap();
            assert_eq!(cf.total, BigInt::from(t), "{f:?} p={p}");
            assert_eq!(cf.nonsingular, BigInt::from(ns), "{f:?} p={p}");
        }
    }
}
