//! Invertible linear changes of variables with a common denominator.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::RationalMatrix;
use super::poly::{IntPolynomial, Monomial};
use crate::error::{Error, Result};

/// The change `x = T u / denominator` with T an integer matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearChange {
    pub matrix: Vec<Vec<BigInt>>,
    pub denominator: BigInt,
}

impl LinearChange {
    pub fn new(matrix: Vec<Vec<BigInt>>, denominator: BigInt) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("linear change must be square".into()));
        }
        if denominator.is_zero() {
            return Err(Error::Singular);
        }
        let c = LinearChange { matrix, denominator };
        if c.int_det().is_zero() {
            return Err(Error::Singular);
        }
        Ok(c)
    }

    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| BigInt::from((i == j) as i32)).collect())
            .collect();
        LinearChange { matrix, denominator: BigInt::one() }
    }

    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn int_det(&self) -> BigInt {
        super::matrix::int_det(&self.matrix)
    }

    pub fn as_rational(&self) -> RationalMatrix {
        RationalMatrix::from_int_rows(&self.matrix)
            .expect("square")
            .scale(&BigRational::new(BigInt::one(), self.denominator.clone()))
    }

    /// The inverse change `u = den·adj(T) x / det(T)`.
    pub fn inverse(&self) -> Result<Self> {
        let t = RationalMatrix::from_int_rows(&self.matrix)?;
        let (adj, det) = t.adjugate_and_det()?;
        if det.is_zero() {
            return Err(Error::Singular);
        }
        let mut det = det.to_integer();
        let mut sign = BigInt::one();
        if det.is_negative() {
            det = -det;
            sign = -sign;
        }
        let matrix = adj
            .to_rows()
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|v| v.to_integer() * &self.denominator * &sign)
                    .collect()
            })
            .collect();
        Ok(LinearChange { matrix, denominator: det })
    }

    /// Images of the variables as integer linear forms (rows of T).
    pub fn images(&self) -> Vec<IntPolynomial> {
        self.matrix.iter().map(|r| IntPolynomial::linear_form(r)).collect()
    }
}

/// `p(T u / den)` multiplied by `den^deg(p)`, an integer polynomial in u.
pub fn substitute_linear(p: &IntPolynomial, t: &LinearChange) -> Result<IntPolynomial> {
    if t.dim() != p.num_vars() {
        return Err(Error::DimensionMismatch { expected: p.num_vars(), got: t.dim() });
    }
    if t.int_det().is_zero() {
        return Err(Error::Singular);
    }
    let d = p.total_degree();
    let images = t.images();
    let mut out = IntPolynomial::zero(p.num_vars());
    for k in 0..=d {
        let comp = p.homogeneous_component(k);
        if comp.is_zero() {
            continue;
        }
        let scale = num_traits::pow(t.denominator.clone(), (d - k) as usize);
        out = &out + &comp.substitute(&images)?.scale(&scale);
    }
    Ok(out)
}

/// Substitute `x = T u` on a block of variables only (others fixed).
pub fn substitute_on_block(
    p: &IntPolynomial,
    block: &[usize],
    t: &[Vec<BigInt>],
) -> Result<IntPolynomial> {
    let n = p.num_vars();
    let mut images: Vec<IntPolynomial> = (0..n).map(|i| IntPolynomial::var(n, i)).collect();
    for (a, &i) in block.iter().enumerate() {
        let mut img = IntPolynomial::zero(n);
        for (b, &j) in block.iter().enumerate() {
            img.add_term(Monomial::var(n, j), t[a][b].clone());
        }
        images[i] = img;
    }
    p.substitute(&images)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
    }

    #[test]
    fn examples() {
        let p = IntPolynomial::from_terms(2, vec![(vec![1, 1], 1)]).unwrap();
        assert_eq!(substitute_linear(&p, &LinearChange::identity(2)).unwrap(), p);
        let t = LinearChange::new(m(&[&[1, 1], &[1, -1]]), BigInt::one()).unwrap();
        let r = substitute_linear(&p, &t).unwrap();
        let expect = IntPolynomial::from_terms(2, vec![(vec![2, 0], 1), (vec![0, 2], -1)]).unwrap();
        assert_eq!(r, expect);
        let back = substitute_linear(&r, &t.inverse().unwrap()).unwrap();
        // (u+v)(u-v) under the inverse returns a scalar multiple of xy.
        let lc = back.leading_term().unwrap().1.clone();
        assert_eq!(back, p.scale(&lc));
        assert!(LinearChange::new(m(&[&[1, 2], &[2, 4]]), BigInt::one()).is_err());
    }
}
