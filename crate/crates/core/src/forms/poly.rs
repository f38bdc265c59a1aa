//! Sparse multivariate polynomials with arbitrary-precision integer
//! coefficients, stored in graded lexicographic order.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector, ordered by total degree first and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Quotient of monomials; caller guarantees divisibility.
    pub fn div(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate polynomial over the integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntPolynomial {
    num_vars: usize,
    #[serde(with = "term_list")]
    terms: BTreeMap<Monomial, BigInt>,
}

/// Terms serialize as a list of (exponents, coefficient) pairs so that the
/// polynomial is representable in JSON.
mod term_list {
    use super::{BTreeMap, BigInt, Monomial};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(terms: &BTreeMap<Monomial, BigInt>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<(&Monomial, &BigInt)> = terms.iter().collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Monomial, BigInt>, D::Error> {
        let list: Vec<(Monomial, BigInt)> = Vec::deserialize(d)?;
        Ok(list.into_iter().collect())
    }
}

impl IntPolynomial {
    pub fn zero(num_vars: usize) -> Self {
        IntPolynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::one(num_vars), c.into());
        p
    }

    pub fn var(num_vars: usize, i: usize) -> Self {
        assert!(i < num_vars, "variable index out of range");
        let mut p = Self::zero(num_vars);
        p.add_term(Monomial::var(num_vars, i), BigInt::one());
        p
    }

    /// Single term `coef * x^exps`.
    pub fn monomial(exps: Vec<u32>, coef: impl Into<BigInt>) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(Monomial(exps), coef.into());
        p
    }

    /// Build from (exponent vector, coefficient) pairs; repeated monomials add.
    pub fn from_terms<I, C>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero(num_vars);
        for (e, c) in terms {
            if e.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    got: e.len(),
                });
            }
            p.add_term(Monomial(e), c.into());
        }
        Ok(p)
    }

    /// Linear form Σ c_i x_i.
    pub fn linear_form(coeffs: &[BigInt]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(n, i), c.clone());
        }
        p
    }

    /// Add `c * m` in place, dropping zero coefficients.
    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        debug_assert_eq!(m.0.len(), self.num_vars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u32]) -> BigInt {
        self.terms
            .get(&Monomial(exps.to_vec()))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Total degree; zero polynomial has degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest term in the monomial order.
    pub fn leading_term(&self) -> Option<(&Monomial, &BigInt)> {
        self.terms.iter().next_back()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.keys().map(Monomial::degree);
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    /// Degree of the polynomial in the given subset of variables.
    pub fn degree_in(&self, vars: &[usize]) -> u32 {
        self.terms
            .keys()
            .map(|m| vars.iter().map(|&i| m.0[i]).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn homogeneous_component(&self, d: u32) -> Self {
        let mut p = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            if m.degree() == d {
                p.terms.insert(m.clone(), c.clone());
            }
        }
        p
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        if k.is_zero() {
            return Self::zero(self.num_vars);
        }
        IntPolynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::constant(self.num_vars, 1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got,
            });
        }
        Ok(())
    }

    /// Exact value at an integer point.
    pub fn evaluate(&self, point: &[BigInt]) -> Result<BigInt> {
        self.check_dim(point.len())?;
        let mut total = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Convenience evaluation at a point of machine integers.
    pub fn evaluate_i64(&self, point: &[i64]) -> Result<BigInt> {
        let p: Vec<BigInt> = point.iter().map(|&v| BigInt::from(v)).collect();
        self.evaluate(&p)
    }

    /// Exact value at a rational point.
    pub fn evaluate_rational(&self, point: &[BigRational]) -> Result<BigRational> {
        self.check_dim(point.len())?;
        let mut total = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = BigRational::from_integer(c.clone());
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            total += t;
        }
        Ok(total)
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.num_vars);
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[i] -= 1;
            p.add_term(m2, c * BigInt::from(e));
        }
        p
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.num_vars).map(|i| self.derivative(i)).collect()
    }

    /// Composition: variable i is replaced by `images[i]` (all images share a
    /// common number of variables).
    pub fn substitute(&self, images: &[IntPolynomial]) -> Result<Self> {
        self.check_dim(images.len())?;
        let target = images.first().map(|p| p.num_vars).unwrap_or(0);
        if images.iter().any(|p| p.num_vars != target) {
            return Err(Error::Precondition(
                "substitution images have different arities".into(),
            ));
        }
        let mut cache: Vec<Vec<IntPolynomial>> = vec![vec![IntPolynomial::constant(target, 1)]; images.len()];
        let mut out = Self::zero(target);
        for (m, c) in &self.terms {
            let mut t = IntPolynomial::constant(target, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                while cache[i].len() <= e as usize {
                    let next = cache[i].last().unwrap() * &images[i];
                    cache[i].push(next);
                }
                if e > 0 {
                    t = &t * &cache[i][e as usize];
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Re-index into `new_n` variables, sending variable i to `map[i]`.
    pub fn embed(&self, new_n: usize, map: &[usize]) -> Result<Self> {
        self.check_dim(map.len())?;
        let mut p = Self::zero(new_n);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; new_n];
            for (i, &k) in m.0.iter().enumerate() {
                if k > 0 {
                    if map[i] >= new_n {
                        return Err(Error::DimensionMismatch {
                            expected: new_n,
                            got: map[i] + 1,
                        });
                    }
                    e[map[i]] += k;
                }
            }
            p.add_term(Monomial(e), c.clone());
        }
        Ok(p)
    }

    /// Keep only the variables listed in `vars` (in that order); fails if a
    /// term involves any other variable.
    pub fn restrict_to(&self, vars: &[usize]) -> Result<Self> {
        let mut p = Self::zero(vars.len());
        for (m, c) in &self.terms {
            let inside: u32 = vars.iter().map(|&i| m.0[i]).sum();
            if inside != m.degree() {
                return Err(Error::Precondition(
                    "polynomial involves variables outside the requested block".into(),
                ));
            }
            p.add_term(Monomial(vars.iter().map(|&i| m.0[i]).collect()), c.clone());
        }
        Ok(p)
    }

    /// Substitute fixed integer values for some variables, keeping the
    /// remaining ones (in increasing index order).
    pub fn specialize(&self, values: &[(usize, BigInt)]) -> Self {
        let fixed: Vec<Option<&BigInt>> = (0..self.num_vars)
            .map(|i| values.iter().find(|(j, _)| *j == i).map(|(_, v)| v))
            .collect();
        let keep: Vec<usize> = (0..self.num_vars).filter(|&i| fixed[i].is_none()).collect();
        let mut p = Self::zero(keep.len());
        for (m, c) in &self.terms {
            let mut coef = c.clone();
            for (i, f) in fixed.iter().enumerate() {
                if let Some(v) = f {
                    if m.0[i] > 0 {
                        coef *= num_traits::pow((*v).clone(), m.0[i] as usize);
                    }
                }
            }
            p.add_term(Monomial(keep.iter().map(|&i| m.0[i]).collect()), coef);
        }
        p
    }

    /// Non-negative gcd of the coefficients.
    pub fn content(&self) -> BigInt {
        self.terms
            .values()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    /// Divide by the content and normalize the leading coefficient to be
    /// positive.
    pub fn primitive_part(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut g = self.content();
        if self.leading_term().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            g = -g;
        }
        IntPolynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c / &g)).collect(),
        }
    }

    /// Exact quotient `self / d` over the integers, or `None` if `d` does
    /// not divide `self`.
    pub fn exact_div(&self, d: &IntPolynomial) -> Option<Self> {
        assert_eq!(self.num_vars, d.num_vars);
        let (lm, lc) = d.leading_term()?;
        let mut rem = self.clone();
        let mut q = Self::zero(self.num_vars);
        while let Some((rm, rc)) = rem.leading_term() {
            if !lm.divides(rm) {
                return None;
            }
            let (cq, cr) = rc.div_rem(lc);
            if !cr.is_zero() {
                return None;
            }
            let mq = rm.div(lm);
            let mut t = Self::zero(self.num_vars);
            t.add_term(mq.clone(), cq.clone());
            rem = &rem - &(&t * d);
            q.add_term(mq, cq);
        }
        Some(q)
    }

    /// Coefficients of a linear form (degree-1 homogeneous polynomial).
    pub fn linear_coefficients(&self) -> Option<Vec<BigInt>> {
        let mut v = vec![BigInt::zero(); self.num_vars];
        for (m, c) in &self.terms {
            if m.degree() != 1 {
                return None;
            }
            let i = m.0.iter().position(|&e| e == 1)?;
            v[i] = c.clone();
        }
        Some(v)
    }

    /// Evaluate with checked i128 arithmetic; `None` on overflow.
    pub fn evaluate_i128(&self, point: &[i128]) -> Option<i128> {
        if point.len() != self.num_vars {
            return None;
        }
        let mut total: i128 = 0;
        for (m, c) in &self.terms {
            let mut t = c.to_i128()?;
            for (x, &e) in point.iter().zip(&m.0) {
                for _ in 0..e {
                    t = t.checked_mul(*x)?;
                }
            }
            total = total.checked_add(t)?;
        }
        Some(total)
    }

    /// Canonical text form: one term per line, "coef e1 … ek", ascending in
    /// the monomial order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (m, c) in &self.terms {
            s.push_str(&c.to_string());
            for e in &m.0 {
                s.push(' ');
                s.push_str(&e.to_string());
            }
            s.push('\n');
        }
        s
    }

    /// Parse the canonical text form.
    pub fn from_text(num_vars: usize, text: &str) -> Result<Self> {
        let mut p = Self::zero(num_vars);
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let coef: BigInt = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Parse {
                    line: ln + 1,
                    message: "bad coefficient".into(),
                })?;
            let exps: std::result::Result<Vec<u32>, _> = parts.map(str::parse).collect();
            let exps = exps.map_err(|_| Error::Parse {
                line: ln + 1,
                message: "bad exponent".into(),
            })?;
            if exps.len() != num_vars {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected {num_vars} exponents, got {}", exps.len()),
                });
            }
            p.add_term(Monomial(exps), coef);
        }
        Ok(p)
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let vars: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("z{}", i + 1)
                    } else {
                        format!("z{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{}*{}", a, vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl Add for &IntPolynomial {
    type Output = IntPolynomial;
    fn add(self, rhs: &IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "arity mismatch in addition");
        let mut p = self.clone();
        for (m, c) in &rhs.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }
}

impl Sub for &IntPolynomial {
    type Output = IntPolynomial;
    fn sub(self, rhs: &IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "arity mismatch in subtraction");
        let mut p = self.clone();
        for (m, c) in &rhs.terms {
            p.add_term(m.clone(), -c);
        }
        p
    }
}

impl Neg for &IntPolynomial {
    type Output = IntPolynomial;
    fn neg(self) -> IntPolynomial {
        IntPolynomial {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &IntPolynomial {
    type Output = IntPolynomial;
    fn mul(self, rhs: &IntPolynomial) -> IntPolynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "arity mismatch in product");
        let mut p = IntPolynomial::zero(self.num_vars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                p.add_term(m1.mul(m2), c1 * c2);
            }
        }
        p
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for IntPolynomial {
            type Output = IntPolynomial;
            fn $f(self, rhs: IntPolynomial) -> IntPolynomial {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, terms: &[(&[u32], i64)]) -> IntPolynomial {
        IntPolynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let a = p(2, &[(&[3, 0], 1), (&[0, 3], -1)]);
        assert_eq!(a.evaluate_i64(&[2, 2]).unwrap(), BigInt::zero());
        let b = p(3, &[(&[1, 1, 1], 1)]);
        assert_eq!(b.evaluate_i64(&[1, 2, 3]).unwrap(), BigInt::from(6));
        let c = p(2, &[(&[2, 1], 1), (&[0, 0], 5)]);
        assert_eq!(c.evaluate_i64(&[3, 4]).unwrap(), BigInt::from(41));
        assert!(c.evaluate_i64(&[1]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let sq = p(1, &[(&[2], 1)]);
        assert_eq!(sq.gradient(), vec![p(1, &[(&[1], 2)])]);
        let xy = p(2, &[(&[1, 1], 1)]);
        assert_eq!(xy.gradient(), vec![p(2, &[(&[0, 1], 1)]), p(2, &[(&[1, 0], 1)])]);
        let cubes = p(2, &[(&[3, 0], 1), (&[0, 3], 1)]);
        let g: Vec<BigInt> = cubes
            .gradient()
            .iter()
            .map(|d| d.evaluate_i64(&[1, -1]).unwrap())
            .collect();
        assert_eq!(g, vec![BigInt::from(3), BigInt::from(3)]);
    }

    #[test]
    fn exact_division() {
        let l = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let m = p(2, &[(&[1, 0], 1), (&[0, 1], -1)]);
        let prod = &l * &m;
        assert_eq!(prod.exact_div(&l).unwrap(), m);
        assert!(prod.exact_div(&p(2, &[(&[1, 0], 1)])).is_none());
        assert!(p(1, &[(&[1], 3)]).exact_div(&p(1, &[(&[1], 2)])).is_none());
    }

    #[test]
    fn text_roundtrip() {
        let a = p(3, &[(&[1, 2, 0], -7), (&[0, 0, 0], 3), (&[3, 0, 0], 12)]);
        let t = a.to_text();
        assert_eq!(t, "3 0 0 0\n-7 1 2 0\n12 3 0 0\n");
        assert_eq!(IntPolynomial::from_text(3, &t).unwrap(), a);
    }

    #[test]
    fn substitution_and_specialization() {
        let xy = p(2, &[(&[1, 1], 1)]);
        let u_plus_v = p(2, &[(&[1, 0], 1), (&[0, 1], 1)]);
        let u_minus_v = p(2, &[(&[1, 0], 1), (&[0, 1], -1)]);
        let r = xy.substitute(&[u_plus_v, u_minus_v]).unwrap();
        assert_eq!(r, p(2, &[(&[2, 0], 1), (&[0, 2], -1)]));
        let s = xy.specialize(&[(0, BigInt::from(3))]);
        assert_eq!(s, p(1, &[(&[1], 3)]));
    }
}
