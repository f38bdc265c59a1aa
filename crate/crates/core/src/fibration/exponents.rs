//! Growth exponents predicted for N(B) by the available lower-bound
//! theorems, as exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Structural shape of the cubic, selecting the theorem that applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeTag {
    /// Q_y = l(y) F(x) with F semidefinite of rank r.
    Hypothesis1,
    /// Q_y not of that form.
    General,
    /// C = Σ_{i≤k} x_i Q_i(y) + S(y), k the number of fibre variables.
    LinearFibre { k: usize },
    /// Nothing known beyond n, h.
    Unknown,
}

/// Which hypotheses of each theorem hold for the given parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TheoremFlags {
    /// r ≥ 5 with Hypothesis 1.
    pub thma1: bool,
    /// h ≥ 6, r ≥ min{5, n − h − 4}, Hypothesis 1 fails.
    pub thma2: bool,
    /// h ≥ 8 and n ≥ h + 17.
    pub thmlb: bool,
    /// h ≥ 8 and a linear-fibre shape with k ≥ 5.
    pub thmb: bool,
    /// n ≥ 39.
    pub thmw: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentPrediction {
    pub n: usize,
    pub h: usize,
    pub r: usize,
    pub epsilon: BigRational,
    pub gamma: BigRational,
    pub delta: BigRational,
    pub beta: BigRational,
    pub alpha: BigRational,
    /// r − 2 + 2(n − r − 1)/3.
    pub exponent_divisible_case: BigRational,
    /// n − h − 2 + (h − 1)/2.
    pub exponent_nondivisible_case: BigRational,
    pub shape: ShapeTag,
    /// Theorem selected by the shape: "thma1", "thma2", "thmb" or "thmlb".
    pub theorem: String,
    /// Exponent of B in the selected lower bound.
    pub exponent: BigRational,
    pub flags: TheoremFlags,
    pub warnings: Vec<String>,
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn min3(a: &BigRational, b: &BigRational, c: &BigRational) -> BigRational {
    a.clone().min(b.clone()).min(c.clone())
}

/// γ, δ, β, α and the exponent of the theorem matching `shape`.
pub fn predicted_exponents(n: usize, h: usize, r: usize, eps: &BigRational, shape: ShapeTag) -> Result<ExponentPrediction> {
    if h < 1 || n <= h || r > n - h {
        return Err(Error::Precondition(format!("need n > h ≥ 1 and r ≤ n − h, got n={n}, h={h}, r={r}")));
    }
    let (ni, hi, ri) = (n as i64, h as i64, r as i64);
    let m = ni - hi;
    let gamma = q(hi - 5, 2).min(q(ri - ni + 3 * hi - 8, 3));
    let two = BigRational::from_integer(BigInt::from(2));
    let delta = if ri % 2 == 0 && 2 * ri - m < 8 {
        q(2 * (ri - 4) * (hi - 1), ri + 2 * m) - &two - eps
    } else {
        q(2 * (ri - 3) * (hi - 1), ri + 2 * m + 1) - &two - eps
    };
    let beta = if m == 1 {
        return Err(Error::Precondition("β needs n − h ≠ 1".into()));
    } else {
        q(2 * (hi - 1) * (m - 7), 3 * m - 3) - &two - eps
    };
    let alpha = min3(&q(hi - 5, 2), &q(2 * hi - 12, 3), &beta);
    let exponent_divisible_case = BigRational::from_integer(BigInt::from(ri - 2)) + q(2 * (ni - ri - 1), 3);
    let exponent_nondivisible_case = BigRational::from_integer(BigInt::from(m - 2)) + q(hi - 1, 2);
    let flags = TheoremFlags {
        thma1: shape == ShapeTag::Hypothesis1 && r >= 5,
        thma2: shape == ShapeTag::General && h >= 6 && ri >= 5.min(m - 4),
        thmlb: h >= 8 && n >= h + 17,
        thmb: h >= 8 && matches!(shape, ShapeTag::LinearFibre { k } if k >= 5),
        thmw: n >= 39,
    };
    let base = BigRational::from_integer(BigInt::from(m));
    let (theorem, exponent, ok) = match shape {
        ShapeTag::Hypothesis1 => ("thma1", &base + &gamma, flags.thma1),
        ShapeTag::General => ("thma2", &base + &delta, flags.thma2),
        ShapeTag::LinearFibre { .. } => {
            ("thmb", BigRational::from_integer(BigInt::from(ni - 3)) - eps, flags.thmb)
        }
        ShapeTag::Unknown => ("thmlb", &base + &alpha, flags.thmlb),
    };
    let mut warnings = Vec::new();
    if !ok {
        warnings.push(format!("hypotheses of {theorem} not met for n={n}, h={h}, r={r}"));
    }
    if !flags.thmlb && h < 8 {
        warnings.push(format!("h = {h} < 8: thmlb requires h(C) ≥ 8"));
    }
    if eps.is_zero() && shape != ShapeTag::Hypothesis1 {
        warnings.push("ε = 0 is the limiting value; the bounds hold for each fixed ε > 0".into());
    }
    debug_assert!(eps >= &BigRational::zero() || eps < &BigRational::one());
    Ok(ExponentPrediction {
        n,
        h,
        r,
        epsilon: eps.clone(),
        gamma,
        delta,
        beta,
        alpha,
        exponent_divisible_case,
        exponent_nondivisible_case,
        shape,
        theorem: theorem.to_string(),
        exponent,
        flags,
        warnings,
    })
}

/// Exponent n − 9 of the unconditional bound for n ≥ 39.
pub fn wooley_exponent(n: usize) -> Result<i64> {
    if n < 39 {
        return Err(Error::Precondition(format!("n = {n} < 39")));
    }
    Ok(n as i64 - 9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plug_in_values() {
        let zero = BigRational::zero();
        let p = predicted_exponents(39, 13, 26, &zero, ShapeTag::Unknown).unwrap();
        assert_eq!(p.beta, q(102, 25));
        assert_eq!(p.alpha, q(4, 1));
        assert_eq!(p.exponent, q(30, 1));
        assert_eq!(p.exponent, q(wooley_exponent(39).unwrap(), 1));

        let p = predicted_exponents(20, 10, 10, &zero, ShapeTag::Hypothesis1).unwrap();
        assert_eq!(p.gamma, q(5, 2));

        let p = predicted_exponents(20, 8, 12, &zero, ShapeTag::General).unwrap();
        assert_eq!(p.delta, q(126, 37) - q(2, 1));
    }
}
