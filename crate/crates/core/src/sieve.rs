//! Local conditions on the parameter block, admissible parameter sets and
//! fibre solubility for the quadric-fibre map π and the linear-fibre map π′.
//!
//! A parameter vector y is admissible when it lies in Y·Ω∞, satisfies the
//! optional extra predicates, matches the residue class of a p-adic witness
//! at every bad prime and avoids the locus 𝓛 modulo every good prime. For π
//! the locus is cut out by the order-3 minors of M[y]; for π′ it is the
//! common zero set of the Q_i.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arith::{ext_gcd, factor_big, gcd_all, is_prime_u64, prime_divisors};
use crate::error::{Error, Result};
use crate::fibration::minors::nonzero_minors;
use crate::fibration::probes::growth_exponent;
use crate::fibration::{build_fibration, decompose_linear_fibre, RankConfig};
use crate::finite_field::{
    find_padic_nonsingular, jacobi_symbol, odometer_next, ModPolynomial, PadicWitness, DEFAULT_BUDGET,
};
use crate::forms::{FibrationMode, IntPolynomial, QuadraticPolynomial, RationalMatrix, VariableSplit};
use crate::local_density::{solubility_quadric_zp, SolubilityVerdict};

/// Polynomial with machine-size coefficients, evaluated with overflow checks.
#[derive(Clone, Debug)]
pub struct FastPoly {
    terms: Vec<(i128, Vec<u32>)>,
}

impl FastPoly {
    pub fn new(p: &IntPolynomial) -> Result<Self> {
        let terms = p
            .terms()
            .map(|(m, c)| {
                c.to_i128()
                    .map(|c| (c, m.0.clone()))
                    .ok_or_else(|| Error::Precondition("coefficient exceeds 128 bits".into()))
            })
            .collect::<Result<_>>()?;
        Ok(FastPoly { terms })
    }

    pub fn eval(&self, y: &[i64]) -> Option<i128> {
        let mut total: i128 = 0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (v, &k) in y.iter().zip(e) {
                for _ in 0..k {
                    t = t.checked_mul(*v as i128)?;
                }
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }

    /// Value modulo m, in 0..m.
    pub fn eval_mod(&self, y: &[i64], m: i128) -> i128 {
        let mut total: i128 = 0;
        for (c, e) in &self.terms {
            let mut t = c.rem_euclid(m);
            for (v, &k) in y.iter().zip(e) {
                let vm = (*v as i128).rem_euclid(m);
                for _ in 0..k {
                    t = t * vm % m;
                }
            }
            total = (total + t) % m;
        }
        total
    }
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Which good primes are checked explicitly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoodPrimeRule {
    /// All primes outside the bad set. Since y mod p ∈ 𝓛(F_p) exactly when p
    /// divides every locus value, this is decided by one gcd.
    Exact,
    /// Only good primes p ≤ cutoff.
    Cutoff(u64),
    /// An explicit list of primes.
    Primes(Vec<u64>),
}

/// Residue class Ω_p at a bad prime, taken from a p-adic witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BadPrimeClass {
    pub p: u64,
    pub v: u32,
    /// p^{2v−1}.
    pub modulus: u64,
    /// Residues of the y-block.
    pub residue: Vec<u64>,
    /// Full witness for C, when the class came from a witness search.
    pub witness: Option<PadicWitness>,
}

/// Estimate of the density ignored by a finite prime cutoff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailLoss {
    pub primes: Vec<u64>,
    /// Affine point counts of 𝓛 over F_p.
    pub counts: Vec<u64>,
    pub affine_dim: i64,
    /// max over the probe primes of count / p^dim.
    pub constant: f64,
    /// Bound on Σ_{p > P} #𝓛(F_p)/p^k; `None` when the series diverges.
    pub bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalConditionSet {
    pub mode: FibrationMode,
    /// Number of parameters k.
    pub k: usize,
    /// Polynomials in the parameters whose common zeros form 𝓛.
    pub locus: Vec<IntPolynomial>,
    pub bad: Vec<BadPrimeClass>,
    pub rule: GoodPrimeRule,
    pub tail: Option<TailLoss>,
}

impl LocalConditionSet {
    pub fn bad_primes(&self) -> Vec<u64> {
        self.bad.iter().map(|b| b.p).collect()
    }

    /// Re-check every stored witness against C.
    pub fn verify_witnesses(&self, c: &IntPolynomial, split: &VariableSplit) -> bool {
        self.bad.iter().all(|b| match &b.witness {
            None => true,
            Some(w) => {
                w.verify(c)
                    && b.modulus == w.modulus()
                    && split.y_indices.iter().zip(&b.residue).all(|(&i, &r)| w.residue[i] == r)
            }
        })
    }

    /// ∏_{p | M} p^{2v_p − 1}.
    pub fn bad_modulus_product(&self) -> BigInt {
        self.bad.iter().fold(BigInt::one(), |acc, b| acc * BigInt::from(b.modulus))
    }
}

/// Settings for [`build_conditions`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionConfig {
    /// Primes added to M beyond 2 and the primes of the locus content.
    pub extra_bad_primes: Vec<u64>,
    pub v_max: u32,
    pub budget: u128,
    pub rule: GoodPrimeRule,
    pub rank: RankConfig,
    /// Primes for the tail-loss probe under a cutoff rule.
    pub probe_primes: Vec<u64>,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        ConditionConfig {
            extra_bad_primes: Vec::new(),
            v_max: 2,
            budget: DEFAULT_BUDGET,
            rule: GoodPrimeRule::Exact,
            rank: RankConfig::default(),
            probe_primes: vec![5, 7, 11],
        }
    }
}

/// Locus polynomials (in the y-block) for the given mode.
pub fn locus_polynomials(c: &IntPolynomial, split: &VariableSplit, rank: RankConfig) -> Result<Vec<IntPolynomial>> {
    match split.mode {
        FibrationMode::Pi => {
            let fd = build_fibration(c, split, rank)?;
            if fd.r() < 3 {
                return Err(Error::Precondition(format!(
                    "order-3 minors vanish identically (rank {})",
                    fd.r()
                )));
            }
            Ok(nonzero_minors(&fd.m2.to_polys(), 3).into_iter().map(|(_, _, p)| p).collect())
        }
        FibrationMode::PiPrime => {
            let d = decompose_linear_fibre(c, split)?;
            let qs: Vec<IntPolynomial> = d.q.into_iter().filter(|q| !q.is_zero()).collect();
            if qs.is_empty() {
                return Err(Error::Precondition("no nonzero Q_i".into()));
            }
            Ok(qs)
        }
    }
}

/// Build Ω_p at the bad primes and the good-prime predicate.
///
/// M = 2·M′ with M′ the product of the primes dividing the content of the
/// locus polynomials and any configured extra primes. At each p | M the
/// witness search requires a nonvanishing x-partial, so every fibre over
/// the residue class has a smooth Z_p-point.
pub fn build_conditions(
    c: &IntPolynomial,
    split: &VariableSplit,
    mode: FibrationMode,
    cfg: &ConditionConfig,
) -> Result<LocalConditionSet> {
    if split.mode != mode {
        return Err(Error::InvalidSplit("split mode differs from the requested mode".into()));
    }
    split.validate(c)?;
    let k = split.y_indices.len();
    if mode == FibrationMode::PiPrime && (split.x_indices.len() < 2 || k < 2) {
        return Err(Error::Precondition(
            "linear-fibre conditions need at least two linear variables and two parameters".into(),
        ));
    }
    let locus = locus_polynomials(c, split, cfg.rank)?;
    let content = gcd_all(locus.iter().map(|p| p.content()).collect::<Vec<_>>().iter());
    let mut primes: BTreeSet<u64> = BTreeSet::new();
    primes.insert(2);
    for p in prime_divisors(&content)? {
        primes.insert(p.to_u64().ok_or_else(|| Error::Precondition("bad prime exceeds 64 bits".into()))?);
    }
    for &p in &cfg.extra_bad_primes {
        if !is_prime_u64(p) {
            return Err(Error::InvalidModulus(format!("{p} is not prime")));
        }
        primes.insert(p);
    }
    let mut bad = Vec::new();
    for p in primes {
        let w = find_padic_nonsingular(c, &split.x_indices, p, cfg.v_max, cfg.budget)?;
        let residue = split.y_indices.iter().map(|&i| w.residue[i]).collect();
        bad.push(BadPrimeClass { p, v: w.v, modulus: w.modulus(), residue, witness: Some(w) });
    }
    let tail = match cfg.rule {
        GoodPrimeRule::Cutoff(cut) => Some(tail_loss(&locus, k, cut, &cfg.probe_primes, cfg.budget)?),
        _ => None,
    };
    Ok(LocalConditionSet { mode, k, locus, bad, rule: cfg.rule.clone(), tail })
}

/// Affine counts of the common zeros of `polys` over F_p.
pub fn locus_counts(polys: &[IntPolynomial], k: usize, primes: &[u64], budget: u128) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for &p in primes {
        let need = (p as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
        if need > budget {
            return Err(Error::BudgetExceeded { needed: need, budget });
        }
        let mods: Vec<ModPolynomial> = polys.iter().map(|q| ModPolynomial::new(q, p)).collect();
        let mut y = vec![0u64; k];
        let mut count = 0u64;
        loop {
            if mods.iter().all(|m| m.eval(&y) == 0) {
                count += 1;
            }
            if !odometer_next(&mut y, p) {
                break;
            }
        }
        out.push(count);
    }
    Ok(out)
}

/// Bound Σ_{p > cutoff} #𝓛(F_p)/p^k ≤ A · cutoff^{1−e}/(e − 1) with
/// #𝓛(F_p) ≈ A p^d from the probe and e = k − d.
pub fn tail_loss(polys: &[IntPolynomial], k: usize, cutoff: u64, primes: &[u64], budget: u128) -> Result<TailLoss> {
    let counts = locus_counts(polys, k, primes, budget)?;
    let fc: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let dim = growth_exponent(primes, &fc).round() as i64;
    let constant = primes
        .iter()
        .zip(&fc)
        .map(|(&p, &c)| c / (p as f64).powi(dim as i32))
        .fold(0.0, f64::max);
    let e = k as i64 - dim;
    let bound = (e >= 2).then(|| constant * (cutoff.max(2) as f64).powi((1 - e) as i32) / (e - 1) as f64);
    Ok(TailLoss { primes: primes.to_vec(), counts, affine_dim: dim, constant, bound })
}

/// Region Ω∞ = {y : lo_i ≤ ℓ_i(y) ≤ hi_i} for linearly independent forms ℓ_i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaInfinity {
    pub forms: Vec<Vec<BigRational>>,
    pub intervals: Vec<(BigRational, BigRational)>,
    /// Largest gap between a stored endpoint and the real endpoint it
    /// replaces (endpoints are rounded inward).
    pub endpoint_error: BigRational,
}

impl OmegaInfinity {
    /// Coordinate box ∏ [lo_i, hi_i].
    pub fn coordinate_box(intervals: Vec<(BigRational, BigRational)>) -> Self {
        let k = intervals.len();
        let forms = (0..k)
            .map(|i| (0..k).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
            .collect();
        OmegaInfinity { forms, intervals, endpoint_error: BigRational::zero() }
    }

    /// The cube [lo, hi]^k.
    pub fn cube(k: usize, lo: i64, hi: i64) -> Self {
        let iv = (BigRational::from_integer(lo.into()), BigRational::from_integer(hi.into()));
        Self::coordinate_box(vec![iv; k])
    }

    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    pub fn contains_rational(&self, y: &[BigRational], big_y: &BigRational) -> bool {
        self.forms.iter().zip(&self.intervals).all(|(row, (lo, hi))| {
            let v: BigRational = row.iter().zip(y).map(|(a, b)| a * b).sum();
            &(lo * big_y) <= &v && v <= hi * big_y
        })
    }

    /// Integer bounding box of Y·Ω∞.
    pub fn bounding_box(&self, big_y: &BigRational) -> Result<Vec<(i64, i64)>> {
        let l = RationalMatrix::from_rows(self.forms.clone())?;
        let inv = l.inverse()?;
        let k = self.dim();
        (0..k)
            .map(|j| {
                let mut lo = BigRational::zero();
                let mut hi = BigRational::zero();
                for i in 0..k {
                    let a = inv.get(j, i);
                    let (u, v) = (&self.intervals[i].0 * big_y, &self.intervals[i].1 * big_y);
                    let (p, q) = (a * &u, a * &v);
                    if p <= q {
                        lo += p;
                        hi += q;
                    } else {
                        lo += q;
                        hi += p;
                    }
                }
                let a = lo.ceil().to_integer().to_i64();
                let b = hi.floor().to_integer().to_i64();
                match (a, b) {
                    (Some(a), Some(b)) => Ok((a, b)),
                    _ => Err(Error::Precondition("bounding box exceeds 64 bits".into())),
                }
            })
            .collect()
    }

    fn compile(&self, big_y: &BigRational) -> Result<CompiledOmega> {
        let mut rows = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (row, (a, b)) in self.forms.iter().zip(&self.intervals) {
            let den = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            let int_row: Vec<i128> = row
                .iter()
                .map(|v| (v * BigRational::from_integer(den.clone())).to_integer().to_i128())
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Precondition("form coefficients exceed 128 bits".into()))?;
            let d = BigRational::from_integer(den);
            let l = (a * big_y * &d).ceil().to_integer().to_i128();
            let h = (b * big_y * &d).floor().to_integer().to_i128();
            match (l, h) {
                (Some(l), Some(h)) => {
                    lo.push(l);
                    hi.push(h);
                }
                _ => return Err(Error::Precondition("interval bounds exceed 128 bits".into())),
            }
            rows.push(int_row);
        }
        Ok(CompiledOmega { rows, lo, hi, bbox: self.bounding_box(big_y)? })
    }
}

struct CompiledOmega {
    rows: Vec<Vec<i128>>,
    lo: Vec<i128>,
    hi: Vec<i128>,
    bbox: Vec<(i64, i64)>,
}

impl CompiledOmega {
    fn contains(&self, y: &[i64]) -> bool {
        self.rows.iter().zip(self.lo.iter().zip(&self.hi)).all(|(row, (&l, &h))| {
            let v: i128 = row.iter().zip(y).map(|(a, b)| a * *b as i128).sum();
            l <= v && v <= h
        })
    }
}

/// Extra per-point predicates used by the constructions of admissible sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtraPredicate {
    /// y_index is a prime in [lo·Y, hi·Y].
    PrimeInWindow { index: usize, lo: BigRational, hi: BigRational },
    /// gcd(a·y_i, b·y_j) = 1.
    Coprime { i: usize, j: usize, a: BigInt, b: BigInt },
    /// gcd(y_1, …, y_k) = 1.
    Primitive,
    /// Jacobi symbol (G(y) / y_index) equals `value`; y_index must be odd and positive.
    Jacobi { numerator: IntPolynomial, index: usize, value: i32 },
    /// G(y) ≢ 0 mod y_index.
    NonzeroModulo { numerator: IntPolynomial, index: usize },
    /// G(y) ≡ 0 mod y_index.
    DivisibleBy { numerator: IntPolynomial, index: usize },
}

/// First failed predicate of a membership test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Dimension,
    Box,
    Prime { index: usize },
    Coprime { i: usize, j: usize },
    Primitive,
    Jacobi { index: usize },
    NonzeroModulo { index: usize },
    DivisibleBy { index: usize },
    BadPrime { p: u64 },
    GoodPrime { p: u64 },
    Overflow,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub accepted: bool,
    /// Names of the predicates passed, in evaluation order.
    pub passed: Vec<String>,
    pub rejection: Option<Rejection>,
}

/// C_k(Y) = {y ∈ Z^k ∩ Y·Ω∞ : extras hold, y ∈ Ω_p for p | M, y mod p ∉ 𝓛(F_p) otherwise}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSetSpec {
    pub omega: OmegaInfinity,
    pub conditions: Option<LocalConditionSet>,
    pub extras: Vec<ExtraPredicate>,
}

enum CompiledExtra {
    Prime { index: usize, lo: i64, hi: i64 },
    Coprime { i: usize, j: usize, a: i128, b: i128 },
    Primitive,
    Jacobi { g: FastPoly, index: usize, value: i32 },
    Nonzero { g: FastPoly, index: usize },
    Divisible { g: FastPoly, index: usize },
}

/// A specification frozen at one value of Y for fast membership tests.
pub struct CompiledSpec {
    k: usize,
    omega: CompiledOmega,
    extras: Vec<CompiledExtra>,
    bad: Vec<(u64, i128, Vec<i128>)>,
    locus: Vec<FastPoly>,
    rule: GoodPrimeRule,
    bad_set: Vec<u64>,
}

impl AdmissibleSetSpec {
    pub fn new(omega: OmegaInfinity) -> Self {
        AdmissibleSetSpec { omega, conditions: None, extras: Vec::new() }
    }

    pub fn k(&self) -> usize {
        self.omega.dim()
    }

    pub fn compile(&self, big_y: &BigRational) -> Result<CompiledSpec> {
        let omega = self.omega.compile(big_y)?;
        let mut extras = Vec::new();
        for e in &self.extras {
            extras.push(match e {
                ExtraPredicate::PrimeInWindow { index, lo, hi } => CompiledExtra::Prime {
                    index: *index,
                    lo: (lo * big_y).ceil().to_integer().to_i64().unwrap_or(i64::MAX),
                    hi: (hi * big_y).floor().to_integer().to_i64().unwrap_or(i64::MIN),
                },
                ExtraPredicate::Coprime { i, j, a, b } => CompiledExtra::Coprime {
                    i: *i,
                    j: *j,
                    a: a.to_i128().ok_or_else(|| Error::Precondition("coefficient too large".into()))?,
                    b: b.to_i128().ok_or_else(|| Error::Precondition("coefficient too large".into()))?,
                },
                ExtraPredicate::Primitive => CompiledExtra::Primitive,
                ExtraPredicate::Jacobi { numerator, index, value } => {
                    CompiledExtra::Jacobi { g: FastPoly::new(numerator)?, index: *index, value: *value }
                }
                ExtraPredicate::NonzeroModulo { numerator, index } => {
                    CompiledExtra::Nonzero { g: FastPoly::new(numerator)?, index: *index }
                }
                ExtraPredicate::DivisibleBy { numerator, index } => {
                    CompiledExtra::Divisible { g: FastPoly::new(numerator)?, index: *index }
                }
            });
        }
        let (bad, locus, rule, bad_set) = match &self.conditions {
            None => (Vec::new(), Vec::new(), GoodPrimeRule::Primes(Vec::new()), Vec::new()),
            Some(cs) => (
                cs.bad
                    .iter()
                    .map(|b| (b.p, b.modulus as i128, b.residue.iter().map(|&r| r as i128).collect()))
                    .collect(),
                cs.locus.iter().map(FastPoly::new).collect::<Result<_>>()?,
                cs.rule.clone(),
                cs.bad_primes(),
            ),
        };
        Ok(CompiledSpec { k: self.k(), omega, extras, bad, locus, rule, bad_set })
    }
}

fn extra_name(e: &CompiledExtra) -> &'static str {
    match e {
        CompiledExtra::Prime { .. } => "prime",
        CompiledExtra::Coprime { .. } => "coprime",
        CompiledExtra::Primitive => "primitive",
        CompiledExtra::Jacobi { .. } => "jacobi",
        CompiledExtra::Nonzero { .. } => "nonzero_modulo",
        CompiledExtra::Divisible { .. } => "divisible_by",
    }
}

fn smallest_prime_outside(n: i128, bad: &[u64]) -> Option<u64> {
    let mut m = BigInt::from(n);
    for &p in bad {
        let bp = BigInt::from(p);
        while !m.is_zero() && (&m % &bp).is_zero() {
            m /= &bp;
        }
    }
    if m.abs().is_one() {
        return None;
    }
    let f = factor_big(&m).ok()?;
    f.iter().filter_map(|(p, _)| p.to_u64()).min()
}

impl CompiledSpec {
    pub fn bounding_box(&self) -> &[(i64, i64)] {
        &self.omega.bbox
    }

    fn check_extra(&self, e: &CompiledExtra, y: &[i64]) -> std::result::Result<(), Rejection> {
        match e {
            CompiledExtra::Prime { index, lo, hi } => {
                let v = y[*index];
                if v < *lo || v > *hi || v < 2 || !is_prime_u64(v as u64) {
                    return Err(Rejection::Prime { index: *index });
                }
            }
            CompiledExtra::Coprime { i, j, a, b } => {
                if gcd_i128(a * y[*i] as i128, b * y[*j] as i128) != 1 {
                    return Err(Rejection::Coprime { i: *i, j: *j });
                }
            }
            CompiledExtra::Primitive => {
                if y.iter().fold(0i128, |acc, &v| gcd_i128(acc, v as i128)) != 1 {
                    return Err(Rejection::Primitive);
                }
            }
            CompiledExtra::Jacobi { g, index, value } => {
                let n = y[*index];
                let fail = Rejection::Jacobi { index: *index };
                if n <= 0 || n % 2 == 0 {
                    return Err(fail);
                }
                let gv = g.eval_mod(y, n as i128);
                let j = jacobi_symbol(&BigInt::from(gv), &BigInt::from(n)).map_err(|_| fail.clone())?;
                if j != *value {
                    return Err(fail);
                }
            }
            CompiledExtra::Nonzero { g, index } => {
                let n = y[*index] as i128;
                if n == 0 || g.eval_mod(y, n.abs()) == 0 {
                    return Err(Rejection::NonzeroModulo { index: *index });
                }
            }
            CompiledExtra::Divisible { g, index } => {
                let n = y[*index] as i128;
                if n == 0 || g.eval_mod(y, n.abs()) != 0 {
                    return Err(Rejection::DivisibleBy { index: *index });
                }
            }
        }
        Ok(())
    }

    fn check_local(&self, y: &[i64]) -> std::result::Result<(), Rejection> {
        for (p, m, r) in &self.bad {
            if y.iter().zip(r).any(|(&v, &rv)| (v as i128 - rv).rem_euclid(*m) != 0) {
                return Err(Rejection::BadPrime { p: *p });
            }
        }
        if self.locus.is_empty() {
            return Ok(());
        }
        let mut g: i128 = 0;
        for q in &self.locus {
            let v = q.eval(y).ok_or(Rejection::Overflow)?;
            g = gcd_i128(g, v);
            if g == 1 {
                return Ok(());
            }
        }
        match &self.rule {
            GoodPrimeRule::Exact => {
                if g == 0 {
                    let p = (2u64..).find(|p| is_prime_u64(*p) && !self.bad_set.contains(p)).expect("primes exist");
                    return Err(Rejection::GoodPrime { p });
                }
                if let Some(p) = smallest_prime_outside(g, &self.bad_set) {
                    return Err(Rejection::GoodPrime { p });
                }
            }
            GoodPrimeRule::Cutoff(cut) => {
                for p in crate::arith::primes_up_to(*cut) {
                    if !self.bad_set.contains(&p) && g % p as i128 == 0 {
                        return Err(Rejection::GoodPrime { p });
                    }
                }
            }
            GoodPrimeRule::Primes(ps) => {
                for &p in ps {
                    if !self.bad_set.contains(&p) && g % p as i128 == 0 {
                        return Err(Rejection::GoodPrime { p });
                    }
                }
            }
        }
        Ok(())
    }

    /// Fast membership test returning the first failed predicate.
    pub fn accepts(&self, y: &[i64]) -> std::result::Result<(), Rejection> {
        if y.len() != self.k {
            return Err(Rejection::Dimension);
        }
        if !self.omega.contains(y) {
            return Err(Rejection::Box);
        }
        for e in &self.extras {
            self.check_extra(e, y)?;
        }
        self.check_local(y)
    }

    /// Membership with a trace of the predicates passed.
    pub fn membership(&self, y: &[i64]) -> Membership {
        let mut passed = Vec::new();
        let fail = |passed: Vec<String>, r: Rejection| Membership { accepted: false, passed, rejection: Some(r) };
        if y.len() != self.k {
            return fail(passed, Rejection::Dimension);
        }
        if !self.omega.contains(y) {
            return fail(passed, Rejection::Box);
        }
        passed.push("box".into());
        for e in &self.extras {
            if let Err(r) = self.check_extra(e, y) {
                return fail(passed, r);
            }
            passed.push(extra_name(e).into());
        }
        if let Err(r) = self.check_local(y) {
            return fail(passed, r);
        }
        if !self.bad.is_empty() {
            passed.push("bad_primes".into());
        }
        if !self.locus.is_empty() {
            passed.push("good_primes".into());
        }
        Membership { accepted: true, passed, rejection: None }
    }
}

/// Deterministic membership test of y in C_k(Y).
pub fn membership(y: &[i64], spec: &AdmissibleSetSpec, big_y: &BigRational) -> Result<Membership> {
    Ok(spec.compile(big_y)?.membership(y))
}

fn box_size(bbox: &[(i64, i64)]) -> u128 {
    bbox.iter()
        .map(|(a, b)| if b < a { 0 } else { (b - a + 1) as u128 })
        .fold(1u128, |acc, v| acc.saturating_mul(v))
}

/// Visit every y ∈ C_k(Y) in lexicographic order; returns the count.
pub fn enumerate_admissible(
    spec: &AdmissibleSetSpec,
    big_y: &BigRational,
    budget: u128,
    mut visit: impl FnMut(&[i64]),
) -> Result<u64> {
    let cs = spec.compile(big_y)?;
    let bbox = cs.bounding_box().to_vec();
    let size = box_size(&bbox);
    if size > budget {
        return Err(Error::BudgetExceeded { needed: size, budget });
    }
    if size == 0 {
        return Ok(0);
    }
    let k = bbox.len();
    let mut y: Vec<i64> = bbox.iter().map(|b| b.0).collect();
    let mut count = 0u64;
    loop {
        if cs.accepts(&y).is_ok() {
            count += 1;
            visit(&y);
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(count);
            }
            i -= 1;
            if y[i] < bbox[i].1 {
                y[i] += 1;
                break;
            }
            y[i] = bbox[i].0;
        }
    }
}

/// Collect C_k(Y).
pub fn admissible_points(spec: &AdmissibleSetSpec, big_y: &BigRational, budget: u128) -> Result<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    enumerate_admissible(spec, big_y, budget, |y| out.push(y.to_vec()))?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityRow {
    pub y: u64,
    pub count: u64,
    /// #C_k(Y) / Y^k, exact.
    pub density: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub rows: Vec<DensityRow>,
    /// Tail loss of a finite prime cutoff, when one applies.
    pub tail_bound: Option<f64>,
}

impl DensityReport {
    pub fn densities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.density.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// |σ(Y_{i+1}) − σ(Y_i)|.
    pub fn deltas(&self) -> Vec<f64> {
        let d = self.densities();
        d.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
    }

    /// CSV with columns Y, count, density, delta.
    pub fn to_csv(&self) -> String {
        let d = self.densities();
        let mut s = String::from("Y,count,density,delta\n");
        for (i, r) in self.rows.iter().enumerate() {
            let delta = if i == 0 { String::new() } else { format!("{:.12}", (d[i] - d[i - 1]).abs()) };
            s.push_str(&format!("{},{},{:.12},{}\n", r.y, r.count, d[i], delta));
        }
        s
    }
}

/// #C_k(Y)/Y^k for each Y in the list, by exhaustive enumeration.
pub fn density_estimate(spec: &AdmissibleSetSpec, ys: &[u64], budget: u128) -> Result<DensityReport> {
    let k = spec.k() as u32;
    let mut rows = Vec::new();
    for &y in ys {
        if y == 0 {
            return Err(Error::Precondition("Y must be positive".into()));
        }
        let big_y = BigRational::from_integer(y.into());
        let count = enumerate_admissible(spec, &big_y, budget, |_| {})?;
        let density = BigRational::new(BigInt::from(count), num_traits::pow(BigInt::from(y), k as usize));
        rows.push(DensityRow { y, count, density });
    }
    let tail_bound = spec.conditions.as_ref().and_then(|c| c.tail.as_ref()).and_then(|t| t.bound);
    Ok(DensityReport { rows, tail_bound })
}

/// Outcome of a fibre solubility test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FibreVerdict {
    /// An integer point x with C(x, y) = 0, verified exactly.
    ExplicitPoint { x: Vec<BigInt> },
    /// Local solubility verified at the listed primes and assured at all
    /// others; an integral point then exists by the Hasse principle.
    PrincipleInvoked { local: Vec<(u64, SolubilityVerdict)> },
    Insoluble { reason: String },
    Unknown { reason: String },
}

impl FibreVerdict {
    pub fn is_insoluble(&self) -> bool {
        matches!(self, FibreVerdict::Insoluble { .. })
    }

    pub fn is_soluble(&self) -> bool {
        matches!(self, FibreVerdict::ExplicitPoint { .. } | FibreVerdict::PrincipleInvoked { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibreConfig {
    /// Box radius for the explicit point search on quadric fibres.
    pub search_radius: i64,
    pub search_budget: u128,
    pub v_max: u32,
    pub local_budget: u128,
    /// Primes up to this bound are checked explicitly (at least 3).
    pub small_prime_cutoff: u64,
    /// Search for an explicit point even when the Hasse principle applies.
    pub want_point: bool,
}

impl Default for FibreConfig {
    fn default() -> Self {
        FibreConfig {
            search_radius: 6,
            search_budget: 2_000_000,
            v_max: 2,
            local_budget: 2_000_000,
            small_prime_cutoff: 5,
            want_point: true,
        }
    }
}

/// Assemble the full point (x, y) in the variable order of C.
pub fn assemble_point(split: &VariableSplit, x: &[BigInt], y: &[BigInt]) -> Vec<BigInt> {
    let mut pt = vec![BigInt::zero(); split.n()];
    for (&i, v) in split.x_indices.iter().zip(x) {
        pt[i] = v.clone();
    }
    for (&i, v) in split.y_indices.iter().zip(y) {
        pt[i] = v.clone();
    }
    pt
}

/// Some x with ⟨a, x⟩ = t, or `None` when gcd(a) ∤ t.
pub fn solve_linear(a: &[BigInt], t: &BigInt) -> Option<Vec<BigInt>> {
    let mut g = BigInt::zero();
    let mut coef: Vec<BigInt> = Vec::new();
    for ai in a {
        let (ng, s, u) = ext_gcd(&g, ai);
        for c in coef.iter_mut() {
            *c *= &s;
        }
        coef.push(u);
        g = ng;
    }
    if g.is_zero() {
        return t.is_zero().then(|| vec![BigInt::zero(); a.len()]);
    }
    let (q, r) = t.div_rem(&g);
    if !r.is_zero() {
        return None;
    }
    Some(coef.into_iter().map(|c| c * &q).collect())
}

/// Decide whether the fibre C(·, y) = 0 has an integer point.
pub fn fibre_solubility(
    y: &[BigInt],
    c: &IntPolynomial,
    split: &VariableSplit,
    mode: FibrationMode,
    cfg: &FibreConfig,
) -> Result<FibreVerdict> {
    if split.mode != mode {
        return Err(Error::InvalidSplit("split mode differs from the requested mode".into()));
    }
    split.validate(c)?;
    if y.len() != split.y_indices.len() {
        return Err(Error::DimensionMismatch { expected: split.y_indices.len(), got: y.len() });
    }
    match mode {
        FibrationMode::PiPrime => linear_fibre(y, c, split),
        FibrationMode::Pi => quadric_fibre(y, c, split, cfg),
    }
}

fn linear_fibre(y: &[BigInt], c: &IntPolynomial, split: &VariableSplit) -> Result<FibreVerdict> {
    let d = decompose_linear_fibre(c, split)?;
    let a: Vec<BigInt> = d.q.iter().map(|q| q.evaluate(y)).collect::<Result<_>>()?;
    let b = d.r.evaluate(y)?;
    let g = gcd_all(a.iter());
    match solve_linear(&a, &-&b) {
        None => Ok(FibreVerdict::Insoluble {
            reason: if g.is_zero() {
                format!("all Q_i(y) vanish and R(y) = {b}")
            } else {
                format!("gcd(Q_i(y)) = {g} does not divide R(y) = {b}")
            },
        }),
        Some(x) => {
            let pt = assemble_point(split, &x, y);
            if !c.evaluate(&pt)?.is_zero() {
                return Err(Error::Validation(vec!["linear solve produced a non-solution".into()]));
            }
            Ok(FibreVerdict::ExplicitPoint { x })
        }
    }
}

/// The quadratic polynomial F_y(x) = C(x, y) in the x-block.
pub fn fibre_quadratic(y: &[BigInt], c: &IntPolynomial, split: &VariableSplit) -> Result<QuadraticPolynomial> {
    let values: Vec<(usize, BigInt)> = split.y_indices.iter().cloned().zip(y.iter().cloned()).collect();
    let f = c.specialize(&values);
    QuadraticPolynomial::from_polynomial(&f)
}

fn search_point(f: &QuadraticPolynomial, radius: i64, budget: u128) -> Result<Option<Vec<BigInt>>> {
    let m = f.m;
    let side = (2 * radius + 1) as u128;
    if side.checked_pow(m as u32).map_or(true, |s| s > budget) {
        return Ok(None);
    }
    let fp = FastPoly::new(&f.to_polynomial())?;
    let mut x = vec![-radius; m];
    loop {
        if fp.eval(&x) == Some(0) {
            return Ok(Some(x.iter().map(|&v| BigInt::from(v)).collect()));
        }
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(None);
            }
            i -= 1;
            if x[i] < radius {
                x[i] += 1;
                break;
            }
            x[i] = -radius;
        }
    }
}

fn quadric_fibre(y: &[BigInt], c: &IntPolynomial, split: &VariableSplit, cfg: &FibreConfig) -> Result<FibreVerdict> {
    let f = fibre_quadratic(y, c, split)?;
    if !f.has_real_zero() {
        return Ok(FibreVerdict::Insoluble { reason: "no real point".into() });
    }
    let det = f.det_2q();
    let (rank, pos, neg) = f.signature();
    let principle = !det.is_zero() && rank >= 4 && pos > 0 && neg > 0;
    let mut local = Vec::new();
    if !det.is_zero() {
        let mut primes: BTreeSet<u64> = crate::arith::primes_up_to(cfg.small_prime_cutoff.max(3)).into_iter().collect();
        for p in prime_divisors(&(&det * 2))? {
            match p.to_u64() {
                Some(p) => {
                    primes.insert(p);
                }
                None => return Ok(FibreVerdict::Unknown { reason: "discriminant prime exceeds 64 bits".into() }),
            }
        }
        for p in primes {
            let v = solubility_quadric_zp(&f, p, cfg.v_max, cfg.local_budget)?;
            if let SolubilityVerdict::InsolubleCertified { k } = v {
                return Ok(FibreVerdict::Insoluble { reason: format!("no solutions modulo {p}^{k}") });
            }
            local.push((p, v));
        }
    }
    let locally_soluble = local.iter().all(|(_, v)| matches!(v, SolubilityVerdict::Soluble(_)));
    if cfg.want_point || !principle || !locally_soluble {
        if let Some(x) = search_point(&f, cfg.search_radius, cfg.search_budget)? {
            let pt = assemble_point(split, &x, y);
            if !c.evaluate(&pt)?.is_zero() {
                return Err(Error::Validation(vec!["search produced a non-solution".into()]));
            }
            return Ok(FibreVerdict::ExplicitPoint { x });
        }
    }
    if principle && locally_soluble {
        return Ok(FibreVerdict::PrincipleInvoked { local });
    }
    let reason = if det.is_zero() {
        "singular quadratic part and no point in the search box".into()
    } else if !locally_soluble {
        "local test inconclusive and no point in the search box".into()
    } else {
        format!("rank {rank} with signature ({pos}, {neg}) is outside the range of the Hasse principle and no point was found")
    };
    Ok(FibreVerdict::Unknown { reason })
}

/// C = y_k Σ α_i x_i y_{σ(i)} + R(y) under a linear-fibre split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducibleShape {
    pub h: usize,
    pub alpha: Vec<BigInt>,
    pub sigma: Vec<usize>,
    pub k: usize,
    pub r: IntPolynomial,
    /// gcd(α_1, α_2).
    pub g: BigInt,
    pub beta: [BigInt; 2],
}

/// Recognize the reducible shape from the Q_i of a linear-fibre split.
pub fn detect_reducible_shape(c: &IntPolynomial, split: &VariableSplit) -> Result<ReducibleShape> {
    let mismatch = |m: &str| Error::Precondition(format!("shape mismatch: {m}"));
    let d = decompose_linear_fibre(c, split)?;
    if d.q.len() < 2 {
        return Err(mismatch("need at least two linear variables"));
    }
    let h = split.y_indices.len();
    let mut alpha = Vec::new();
    let mut pairs = Vec::new();
    for q in &d.q {
        if q.num_terms() != 1 {
            return Err(mismatch("each Q_i must be a single monomial α_i y_j y_k"));
        }
        let (m, coef) = q.terms().next().expect("one term");
        let mut idx = Vec::new();
        for (i, &e) in m.0.iter().enumerate() {
            for _ in 0..e {
                idx.push(i);
            }
        }
        if idx.len() != 2 {
            return Err(mismatch("Q_i must be quadratic"));
        }
        alpha.push(coef.clone());
        pairs.push((idx[0], idx[1]));
    }
    // The common index k must occur in every Q_i.
    let candidates: Vec<usize> = (0..h).filter(|&k| pairs.iter().all(|&(a, b)| a == k || b == k)).collect();
    let k = *candidates.last().ok_or_else(|| mismatch("no common parameter y_k"))?;
    let sigma: Vec<usize> = pairs.iter().map(|&(a, b)| if a == k { b } else { a }).collect();
    let g = alpha[0].gcd(&alpha[1]);
    let beta = [&alpha[0] / &g, &alpha[1] / &g];
    Ok(ReducibleShape { h, alpha, sigma, k, r: d.r, g, beta })
}

/// Primes in [δY, 2δY].
pub fn prime_window(big_y: u64, delta: &BigRational) -> Vec<u64> {
    let y = BigRational::from_integer(big_y.into());
    let lo = (delta * &y).ceil().to_integer().to_u64().unwrap_or(0);
    let hi = (delta * &y * BigRational::from_integer(2.into())).floor().to_integer().to_u64().unwrap_or(0);
    crate::arith::primes_up_to(hi).into_iter().filter(|&p| p >= lo).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducibleCount {
    pub primes: Vec<u64>,
    /// Admissible parameter vectors y.
    pub y_count: u128,
    /// Tuples (x_3, …, x_m, y).
    pub count: u128,
}

fn residue_count(big_y: i64, c: i64, p: i64) -> i64 {
    // #{v ∈ [−Y, Y] : v ≡ c mod p}.
    Integer::div_floor(&(big_y - c), &p) - Integer::div_floor(&(-big_y - c - 1), &p)
}

/// |C(Y)| for the reducible shape, exactly. The congruence R_1 ≡ 0 mod y_k
/// only sees R(ŷ) with y_k set to zero, so the free coordinates are counted
/// by residue classes.
pub fn reducible_case_count(shape: &ReducibleShape, big_y: u64, delta: &BigRational) -> Result<ReducibleCount> {
    let primes = prime_window(big_y, delta);
    let yy = big_y as i64;
    let rp = FastPoly::new(&shape.r)?;
    let (s0, s1) = (shape.sigma[0], shape.sigma[1]);
    let pair: Vec<usize> = {
        let mut v: Vec<usize> = [s0, s1].into_iter().filter(|&i| i != shape.k).collect();
        v.dedup();
        v
    };
    let free: Vec<usize> = (0..shape.h).filter(|i| *i != shape.k && !pair.contains(i)).collect();
    let b0 = shape.beta[0].to_i128().ok_or_else(|| Error::Precondition("β too large".into()))?;
    let b1 = shape.beta[1].to_i128().ok_or_else(|| Error::Precondition("β too large".into()))?;
    let mut y_count: u128 = 0;
    for &p in &primes {
        let pi = p as i64;
        if pi > yy {
            continue;
        }
        let np = pair.len() as u32;
        let table_size = (p as usize).pow(np);
        let mut table = vec![0i128; table_size];
        let mut res_pair = vec![0u64; pair.len()];
        let mut point = vec![0i64; shape.h];
        loop {
            for (j, &i) in pair.iter().enumerate() {
                point[i] = res_pair[j] as i64;
            }
            point[shape.k] = 0;
            let mut res_free = vec![0u64; free.len()];
            let mut acc: i128 = 0;
            loop {
                for (j, &i) in free.iter().enumerate() {
                    point[i] = res_free[j] as i64;
                }
                if rp.eval_mod(&point, p as i128) == 0 {
                    acc += free
                        .iter()
                        .enumerate()
                        .map(|(j, _)| residue_count(yy, res_free[j] as i64, pi) as i128)
                        .product::<i128>();
                }
                if !odometer_next(&mut res_free, p) {
                    break;
                }
            }
            let idx = res_pair.iter().fold(0usize, |a, &r| a * p as usize + r as usize);
            table[idx] = acc;
            if !odometer_next(&mut res_pair, p) {
                break;
            }
        }
        // Sum over the actual pair coordinates with the coprimality condition.
        let mut vals = vec![-yy; pair.len()];
        loop {
            let get = |i: usize, vals: &[i64]| {
                if i == shape.k {
                    pi
                } else {
                    vals[pair.iter().position(|&j| j == i).expect("pair index")]
                }
            };
            let (v0, v1) = (get(s0, &vals), get(s1, &vals));
            if gcd_i128(b0 * v0 as i128, b1 * v1 as i128) == 1 {
                let idx = vals.iter().fold(0usize, |a, &v| a * p as usize + v.rem_euclid(pi) as usize);
                y_count += table[idx] as u128;
            }
            let mut i = vals.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                if vals[i] < yy {
                    vals[i] += 1;
                    done = false;
                    break;
                }
                vals[i] = -yy;
            }
            if done {
                break;
            }
        }
    }
    let xs = (2 * big_y as u128 + 1).pow((shape.alpha.len() - 2) as u32);
    Ok(ReducibleCount { primes, y_count, count: y_count * xs })
}

/// One admissible tuple with its verified integer point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReducibleTuple {
    pub x_tail: Vec<i64>,
    pub y: Vec<i64>,
    /// Point (x_1, x_2, g x_3, …, g y) of C = 0 in the split's variable order.
    pub point: Vec<BigInt>,
}

fn reducible_member(shape: &ReducibleShape, rp: &FastPoly, y: &[i64], yy: i64, primes: &[u64]) -> bool {
    let yk = y[shape.k];
    if yk < 2 || !primes.contains(&(yk as u64)) || y.iter().any(|v| v.abs() > yy) {
        return false;
    }
    let b0 = shape.beta[0].to_i128().unwrap_or(0);
    let b1 = shape.beta[1].to_i128().unwrap_or(0);
    if gcd_i128(b0 * y[shape.sigma[0]] as i128, b1 * y[shape.sigma[1]] as i128) != 1 {
        return false;
    }
    let mut hat = y.to_vec();
    hat[shape.k] = 0;
    rp.eval_mod(&hat, yk as i128) == 0
}

/// Solve y_k(β_1 x_1 y_{σ1} + β_2 x_2 y_{σ2}) + R_1 = 0 and scale to a point of C.
pub fn reducible_point(
    shape: &ReducibleShape,
    c: &IntPolynomial,
    split: &VariableSplit,
    x_tail: &[i64],
    y: &[i64],
) -> Result<Option<Vec<BigInt>>> {
    let yb: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
    let yk = &yb[shape.k];
    let mut r1 = shape.r.evaluate(&yb)?;
    for (i, &xv) in x_tail.iter().enumerate() {
        r1 += &shape.alpha[i + 2] * BigInt::from(xv) * &yb[shape.sigma[i + 2]] * yk;
    }
    if yk.is_zero() || !(&r1 % yk).is_zero() {
        return Ok(None);
    }
    let t = -(&r1 / yk);
    let a = [&shape.beta[0] * &yb[shape.sigma[0]], &shape.beta[1] * &yb[shape.sigma[1]]];
    let Some(x12) = solve_linear(&a, &t) else { return Ok(None) };
    let mut x: Vec<BigInt> = x12;
    x.extend(x_tail.iter().map(|&v| BigInt::from(v) * &shape.g));
    let ys: Vec<BigInt> = yb.iter().map(|v| v * &shape.g).collect();
    let pt = assemble_point(split, &x, &ys);
    Ok(c.evaluate(&pt)?.is_zero().then_some(pt))
}

/// Enumerate up to `limit` tuples of C(Y) in lexicographic order (y first,
/// then the tail x), each with an explicit verified point.
pub fn reducible_case_tuples(
    shape: &ReducibleShape,
    c: &IntPolynomial,
    split: &VariableSplit,
    big_y: u64,
    delta: &BigRational,
    limit: usize,
) -> Result<Vec<ReducibleTuple>> {
    let primes = prime_window(big_y, delta);
    let mut out = Vec::new();
    if primes.is_empty() {
        return Ok(out);
    }
    let yy = big_y as i64;
    let rp = FastPoly::new(&shape.r)?;
    let tail = shape.alpha.len() - 2;
    let mut y = vec![-yy; shape.h];
    'outer: loop {
        if reducible_member(shape, &rp, &y, yy, &primes) {
            let mut xt = vec![-yy; tail];
            loop {
                let pt = reducible_point(shape, c, split, &xt, &y)?
                    .ok_or_else(|| Error::Validation(vec![format!("no point for admissible tuple {y:?}")]))?;
                out.push(ReducibleTuple { x_tail: xt.clone(), y: y.clone(), point: pt });
                if out.len() >= limit {
                    break 'outer;
                }
                let mut i = tail;
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    if xt[i] < yy {
                        xt[i] += 1;
                        done = false;
                        break;
                    }
                    xt[i] = -yy;
                }
                if done {
                    break;
                }
            }
        }
        let mut i = shape.h;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            if y[i] < yy {
                y[i] += 1;
                break;
            }
            y[i] = -yy;
        }
    }
    Ok(out)
}

/// Count admissible y by direct enumeration of the parameter box.
pub fn reducible_case_count_bruteforce(shape: &ReducibleShape, big_y: u64, delta: &BigRational) -> Result<u128> {
    let primes = prime_window(big_y, delta);
    let yy = big_y as i64;
    let rp = FastPoly::new(&shape.r)?;
    let mut count = 0u128;
    for &p in &primes {
        let mut y = vec![-yy; shape.h];
        y[shape.k] = p as i64;
        loop {
            if reducible_member(shape, &rp, &y, yy, &primes) {
                count += 1;
            }
            let mut i = shape.h;
            let mut done = true;
            while i > 0 {
                i -= 1;
                if i == shape.k {
                    continue;
                }
                if y[i] < yy {
                    y[i] += 1;
                    done = false;
                    break;
                }
                y[i] = -yy;
            }
            if done {
                break;
            }
        }
    }
    Ok(count * (2 * big_y as u128 + 1).pow((shape.alpha.len() - 2) as u32))
}

/// Ω∞ on which |Q_1| ≥ c P² together with the sample check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeQBox {
    pub omega: OmegaInfinity,
    /// Q_1(P z) = Σ d_i z_i² for z = ℓ(y), with ℓ the rows of `omega.forms`.
    pub diagonal: Vec<BigRational>,
    /// +1, or −1 when −Q_1 was used because Q_1 has no positive part.
    pub sign: i32,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    /// 1 − |J|/(4k), valid on the whole region.
    pub c_theory: BigRational,
    pub p: u64,
    pub samples: usize,
    /// min |Q_1(y)|/P² over the sampled integer points.
    pub c_measured: Option<BigRational>,
    pub verified: bool,
}

/// Rational bounds lo ≤ √w ≤ hi with denominator `den`.
fn sqrt_bounds(w: &BigRational, den: u64) -> (BigRational, BigRational) {
    let d = BigInt::from(den);
    let scaled = w * BigRational::from_integer(&d * &d);
    let fl = scaled.floor().to_integer().sqrt();
    let ce = {
        let c = scaled.ceil().to_integer();
        let s = c.sqrt();
        if &s * &s < c {
            s + 1
        } else {
            s
        }
    };
    (BigRational::new(fl, d.clone()), BigRational::new(ce, d))
}

/// Endpoint denominator for the inward-rounded intervals.
pub const ENDPOINT_DENOMINATOR: u64 = 1_000_000;

/// Build Ω∞ for Q_1 following the 𝒰/𝒱 recipe: after diagonalizing
/// Q_1 = Σ d_i ℓ_i(y)², take ℓ_i ∈ [1, 2]/√|d_i| on the positive part,
/// ℓ_j ∈ [1/4, 1/2]/√(k|d_j|) on the negative part and [−1, 1] on the
/// kernel; then sample integer points of P·Ω∞ and record min |Q_1|/P².
pub fn box_with_large_q(q1: &IntPolynomial, p: u64, samples: usize, seed: u64) -> Result<LargeQBox> {
    if q1.is_zero() {
        return Err(Error::Degenerate("Q_1 is identically zero".into()));
    }
    if !q1.is_homogeneous() || q1.total_degree() != 2 {
        return Err(Error::Precondition("Q_1 must be a quadratic form".into()));
    }
    let k = q1.num_vars();
    let quad = QuadraticPolynomial::from_polynomial(q1)?;
    let cong = quad.q_matrix().congruence_diagonalize()?;
    let mut sign = 1;
    let mut diagonal = cong.diagonal.clone();
    if !diagonal.iter().any(|d| d.is_positive()) {
        sign = -1;
        diagonal = diagonal.iter().map(|d| -d).collect();
    }
    let forms = cong.p.inverse()?.to_rows();
    let positive: Vec<usize> = (0..k).filter(|&i| diagonal[i].is_positive()).collect();
    let negative: Vec<usize> = (0..k).filter(|&i| diagonal[i].is_negative()).collect();
    let one = BigRational::one();
    let kk = BigRational::from_integer(BigInt::from(k));
    let intervals: Vec<(BigRational, BigRational)> = (0..k)
        .map(|i| {
            let d = diagonal[i].abs();
            if d.is_zero() {
                (-one.clone(), one.clone())
            } else if diagonal[i].is_positive() {
                // [1/√d, 2/√d]: round the lower end up and the upper end down.
                let lo = sqrt_bounds(&(&one / &d), ENDPOINT_DENOMINATOR).1;
                let hi = sqrt_bounds(&(BigRational::from_integer(4.into()) / &d), ENDPOINT_DENOMINATOR).0;
                (lo, hi)
            } else {
                let w = &kk * &d;
                let lo = sqrt_bounds(&(&one / (BigRational::from_integer(16.into()) * &w)), ENDPOINT_DENOMINATOR).1;
                let hi = sqrt_bounds(&(&one / (BigRational::from_integer(4.into()) * &w)), ENDPOINT_DENOMINATOR).0;
                (lo, hi)
            }
        })
        .collect();
    let omega = OmegaInfinity {
        forms,
        intervals,
        endpoint_error: BigRational::new(BigInt::one(), BigInt::from(ENDPOINT_DENOMINATOR)),
    };
    let c_theory = &one - BigRational::new(BigInt::from(negative.len()), BigInt::from(4 * k));
    // Sample integer points of P·Ω∞.
    let big_p = BigRational::from_integer(p.into());
    let compiled = omega.compile(&big_p)?;
    let bbox = compiled.bbox.clone();
    let qf = FastPoly::new(q1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = box_size(&bbox);
    let value = |y: &[i64]| -> Result<Option<i128>> {
        if !compiled.contains(y) {
            return Ok(None);
        }
        qf.eval(y).map(|v| Some(v.abs())).ok_or_else(|| Error::Precondition("Q_1 value overflow".into()))
    };
    let mut values: Vec<i128> = Vec::new();
    if size > 0 && size <= samples as u128 {
        let mut y: Vec<i64> = bbox.iter().map(|b| b.0).collect();
        'all: loop {
            values.extend(value(&y)?);
            let mut i = k;
            loop {
                if i == 0 {
                    break 'all;
                }
                i -= 1;
                if y[i] < bbox[i].1 {
                    y[i] += 1;
                    break;
                }
                y[i] = bbox[i].0;
            }
        }
    } else if size > 0 {
        let mut attempts = 0usize;
        while values.len() < samples && attempts < 100 * samples {
            attempts += 1;
            let y: Vec<i64> = bbox.iter().map(|&(a, b)| rng.gen_range(a..=b)).collect();
            values.extend(value(&y)?);
        }
    }
    let taken = values.len();
    let min_val = values.iter().min().copied();
    let p2 = BigRational::from_integer(BigInt::from(p) * BigInt::from(p));
    let c_measured = min_val.map(|m| BigRational::from_integer(BigInt::from(m)) / &p2);
    let verified = c_measured.as_ref().map_or(false, |c| c >= &c_theory);
    Ok(LargeQBox {
        omega,
        diagonal,
        sign,
        positive,
        negative,
        c_theory,
        p,
        samples: taken,
        c_measured,
        verified,
    })
}
