//! Quadratic polynomials `xᵀQx + Bᵀx + N` with half-integral Q.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::{int_det, RationalMatrix};
use super::poly::{IntPolynomial, Monomial};
use crate::error::{Error, Result};

/// Quadratic polynomial in `m` variables. The quadratic part is stored as
/// the integer matrix `2Q`, so `Q` itself has half-integral off-diagonal
/// entries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadraticPolynomial {
    pub m: usize,
    /// The symmetric integer matrix 2Q.
    pub q2: Vec<Vec<BigInt>>,
    pub b: Vec<BigInt>,
    pub n: BigInt,
}

impl QuadraticPolynomial {
    /// Extract (Q, B, N) from a polynomial of total degree at most 2.
    pub fn from_polynomial(p: &IntPolynomial) -> Result<Self> {
        let d = p.total_degree();
        if d > 2 {
            return Err(Error::DegreeTooLarge { max: 2, got: d });
        }
        let m = p.num_vars();
        let mut q2 = vec![vec![BigInt::zero(); m]; m];
        let mut b = vec![BigInt::zero(); m];
        let mut n = BigInt::zero();
        for (mono, c) in p.terms() {
            let idx: Vec<usize> = mono
                .0
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat(i).take(e as usize))
                .collect();
            match idx.as_slice() {
                [] => n = c.clone(),
                [i] => b[*i] = c.clone(),
                [i, j] if i == j => q2[*i][*i] = c * 2,
                [i, j] => {
                    q2[*i][*j] = c.clone();
                    q2[*j][*i] = c.clone();
                }
                _ => unreachable!(),
            }
        }
        Ok(QuadraticPolynomial { m, q2, b, n })
    }

    /// Rebuild the integer polynomial.
    pub fn to_polynomial(&self) -> IntPolynomial {
        let m = self.m;
        let mut p = IntPolynomial::zero(m);
        for i in 0..m {
            let mut e = vec![0; m];
            e[i] = 2;
            p.add_term(Monomial(e), &self.q2[i][i] / 2);
            for j in (i + 1)..m {
                let mut e = vec![0; m];
                e[i] = 1;
                e[j] = 1;
                p.add_term(Monomial(e), self.q2[i][j].clone());
            }
            p.add_term(Monomial::var(m, i), self.b[i].clone());
        }
        p.add_term(Monomial::one(m), self.n.clone());
        p
    }

    /// Build from the half-integral matrix 2Q, B and N; diagonal of 2Q must
    /// be even.
    pub fn new(q2: Vec<Vec<BigInt>>, b: Vec<BigInt>, n: BigInt) -> Result<Self> {
        let m = q2.len();
        if b.len() != m || q2.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: b.len() });
        }
        for i in 0..m {
            if (&q2[i][i] % 2u32) != BigInt::zero() {
                return Err(Error::Precondition("diagonal of 2Q must be even".into()));
            }
            for j in 0..m {
                if q2[i][j] != q2[j][i] {
                    return Err(Error::NotSymmetric);
                }
            }
        }
        Ok(QuadraticPolynomial { m, q2, b, n })
    }

    /// Q as a rational matrix.
    pub fn q_matrix(&self) -> RationalMatrix {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        RationalMatrix::from_int_rows(&self.q2)
            .expect("square matrix")
            .scale(&half)
    }

    pub fn evaluate(&self, x: &[BigInt]) -> Result<BigInt> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: x.len() });
        }
        let mut twice = BigInt::zero();
        for i in 0..self.m {
            for j in 0..self.m {
                twice += &self.q2[i][j] * &x[i] * &x[j];
            }
        }
        let mut v = twice / 2 + &self.n;
        for i in 0..self.m {
            v += &self.b[i] * &x[i];
        }
        Ok(v)
    }

    /// Gradient 2Qx + B.
    pub fn gradient_at(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: x.len() });
        }
        Ok((0..self.m)
            .map(|i| {
                (0..self.m).fold(self.b[i].clone(), |acc, j| acc + &self.q2[i][j] * &x[j])
            })
            .collect())
    }

    /// det(2Q) as an integer.
    pub fn det_2q(&self) -> BigInt {
        int_det(&self.q2)
    }

    /// disc(F) = det Q.
    pub fn disc(&self) -> BigRational {
        BigRational::new(self.det_2q(), BigInt::one() << self.m)
    }

    pub fn rank(&self) -> usize {
        super::matrix::int_rank(&self.q2)
    }

    /// (rank, positive, negative) of the real quadratic part.
    pub fn signature(&self) -> (usize, usize, usize) {
        self.q_matrix()
            .rank_signature()
            .expect("stored matrix is symmetric")
    }

    /// True for odd p not dividing det(2Q), i.e. p ∤ 2·disc.
    pub fn is_good_prime(&self, p: u64) -> bool {
        if p == 2 {
            return false;
        }
        let d = self.det_2q();
        !d.is_zero() && !(d % BigInt::from(p)).is_zero()
    }

    /// Real solubility of F(x) = 0.
    pub fn has_real_zero(&self) -> bool {
        let (r, pos, neg) = self.signature();
        if pos > 0 && neg > 0 {
            return true;
        }
        if r == 0 {
            return self.b.iter().any(|v| !v.is_zero()) || self.n.is_zero();
        }
        // Semidefinite: the extremum is attained iff B lies in the image of Q.
        let qm = self.q_matrix();
        let half_b: Vec<BigRational> = self
            .b
            .iter()
            .map(|v| BigRational::new(-v.clone(), BigInt::from(2)))
            .collect();
        match solve_consistent(&qm, &half_b) {
            None => true,
            Some(x) => {
                let v = self.evaluate_rational(&x);
                if pos > 0 {
                    !v.is_positive()
                } else {
                    !v.is_negative()
                }
            }
        }
    }

    pub fn evaluate_rational(&self, x: &[BigRational]) -> BigRational {
        let mut v = BigRational::from_integer(self.n.clone());
        for i in 0..self.m {
            v += BigRational::from_integer(self.b[i].clone()) * &x[i];
            for j in 0..self.m {
                v += BigRational::new(self.q2[i][j].clone(), BigInt::from(2)) * &x[i] * &x[j];
            }
        }
        v
    }

    /// Reduce all data modulo a positive integer, returning machine integers.
    pub fn reduce_mod(&self, modulus: u64) -> (Vec<Vec<u64>>, Vec<u64>, u64) {
        let md = BigInt::from(modulus);
        let r = |v: &BigInt| {
            let mut t = v % &md;
            if t.is_negative() {
                t += &md;
            }
            t.to_u64().expect("reduced value fits")
        };
        (
            self.q2.iter().map(|row| row.iter().map(r).collect()).collect(),
            self.b.iter().map(r).collect(),
            r(&self.n),
        )
    }
}

/// Some solution of a consistent linear system `A x = b` (A square), or
/// `None` if the system is inconsistent.
pub fn solve_consistent(a: &RationalMatrix, b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.rows();
    let m = a.cols();
    let mut rows: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut r = a.row(i);
            r.push(b[i].clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m {
        let Some(p) = (r..n).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(p, r);
        let piv = rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v /= &piv;
        }
        for i in 0..n {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..=m {
                    let t = &rows[r][j] * &f;
                    rows[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    if rows[r..].iter().any(|row| !row[m].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); m];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = rows[i][m].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, t: &[(&[u32], i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(n, t.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn quadratic_data_examples() {
        let f = QuadraticPolynomial::from_polynomial(&poly(2, &[(&[1, 1], 1)])).unwrap();
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(f.q_matrix().get(0, 1), &half);
        assert_eq!(f.q_matrix().get(0, 0), &BigRational::zero());
        assert!(f.b.iter().all(Zero::is_zero) && f.n.is_zero());

        let g = QuadraticPolynomial::from_polynomial(&poly(1, &[(&[2], 1), (&[1], 3), (&[0], 7)])).unwrap();
        assert_eq!(g.q2, vec![vec![BigInt::from(2)]]);
        assert_eq!(g.b, vec![BigInt::from(3)]);
        assert_eq!(g.n, BigInt::from(7));

        let h = QuadraticPolynomial::from_polynomial(&poly(2, &[(&[2, 0], 1), (&[1, 1], 2), (&[0, 2], 1)])).unwrap();
        assert_eq!(h.rank(), 1);

        assert!(QuadraticPolynomial::from_polynomial(&poly(1, &[(&[3], 1)])).is_err());
    }

    #[test]
    fn real_zero_detection() {
        let pos = QuadraticPolynomial::from_polynomial(&poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], 1)])).unwrap();
        assert!(!pos.has_real_zero());
        let neg = QuadraticPolynomial::from_polynomial(&poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -1)])).unwrap();
        assert!(neg.has_real_zero());
        let lin = QuadraticPolynomial::from_polynomial(&poly(2, &[(&[2, 0], 1), (&[0, 1], 1), (&[0, 0], 5)])).unwrap();
        assert!(lin.has_real_zero());
    }
}
