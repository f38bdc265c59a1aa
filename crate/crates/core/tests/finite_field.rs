//! Jacobi symbols, diagonalisation mod p, quadric counts, Hensel lifting,
//! p-adic witnesses and quadratic-residue value counts.

use cubic_fibration::arith::mul_mod;
use cubic_fibration::finite_field::{
    count_mod_q_bruteforce, count_quadric_mod_p_closed_form, diagonalize_mod_p, find_padic_nonsingular,
    hensel_count, jacobi_symbol, legendre_u64, quadratic_residue_value_count, KValue,
};
use cubic_fibration::forms::{IntPolynomial, QuadraticPolynomial};
use cubic_fibration::Error;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use proptest::prelude::*;

const BUDGET: u128 = 100_000_000;

fn poly(n: usize, terms: &[(&[u32], i64)]) -> IntPolynomial {
    IntPolynomial::from_terms(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
}

fn quad(n: usize, terms: &[(&[u32], i64)]) -> QuadraticPolynomial {
    QuadraticPolynomial::from_polynomial(&poly(n, terms)).unwrap()
}

fn jac(a: i64, n: i64) -> i32 {
    jacobi_symbol(&BigInt::from(a), &BigInt::from(n)).unwrap()
}

/// Legendre symbol by listing the squares mod p.
fn legendre_by_squares(a: i64, p: i64) -> i32 {
    let r = a.rem_euclid(p);
    if r == 0 {
        0
    } else if (1..p).any(|x| x * x % p == r) {
        1
    } else {
        -1
    }
}

fn mat_mod(a: &[Vec<u64>], b: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(0, |s, k| (s + mul_mod(a[i][k], b[k][j], p)) % p)).collect())
        .collect()
}

fn transpose(a: &[Vec<u64>]) -> Vec<Vec<u64>> {
    (0..a.len()).map(|i| a.iter().map(|r| r[i]).collect()).collect()
}

#[test]
fn jacobi_examples() {
    assert_eq!(jac(1, 9), 1);
    assert_eq!(jac(1, 1), 1);
    assert_eq!(jac(3, 9), 0);
    assert_eq!(jac(2, 15), legendre_by_squares(2, 3) * legendre_by_squares(2, 5));
    assert_eq!(jac(2, 15), 1);
    assert!(jacobi_symbol(&BigInt::from(2), &BigInt::from(8)).is_err());
    assert!(jacobi_symbol(&BigInt::from(2), &BigInt::from(-3)).is_err());
}

#[test]
fn jacobi_equals_legendre_for_primes() {
    for p in [3i64, 5, 7, 11, 13, 97] {
        for a in -20..40 {
            assert_eq!(jac(a, p), legendre_by_squares(a, p), "({a}/{p})");
        }
    }
}

#[test]
fn diagonalize_examples() {
    let q = vec![vec![2, 0], vec![0, 3]];
    let (r, d) = diagonalize_mod_p(&q, 5).unwrap();
    assert_eq!(r, vec![vec![1, 0], vec![0, 1]]);
    assert_eq!(d, vec![2, 3]);

    let q = vec![vec![0, 1], vec![1, 0]];
    let (r, d) = diagonalize_mod_p(&q, 5).unwrap();
    let rtqr = mat_mod(&mat_mod(&transpose(&r), &q, 5), &r, 5);
    assert_eq!(rtqr, vec![vec![d[0], 0], vec![0, d[1]]]);
    // Same square class as det Q = −1.
    assert_eq!(legendre_u64(mul_mod(d[0], d[1], 5), 5), legendre_u64(4, 5));

    let (_, d) = diagonalize_mod_p(&[vec![1, 2], vec![2, 4]], 7).unwrap();
    assert_eq!(d.iter().filter(|&&v| v != 0).count(), 1);
    assert!(matches!(diagonalize_mod_p(&[vec![1]], 2), Err(Error::InvalidModulus(_))));
}

#[test]
fn closed_form_examples() {
    let f = quad(3, &[(&[2, 0, 0], 1), (&[0, 2, 0], 1), (&[0, 0, 2], 1)]);
    let cf = count_quadric_mod_p_closed_form(&f, 3).unwrap();
    assert_eq!(cf.nonsingular, BigInt::from(8));
    assert_eq!(cf.total, BigInt::from(9));
    assert_eq!(count_mod_q_bruteforce(&f.to_polynomial(), 3, true, BUDGET).unwrap(), 8);

    let cf = count_quadric_mod_p_closed_form(&quad(1, &[(&[2], 1)]), 5).unwrap();
    assert_eq!(cf.nonsingular, BigInt::from(0));
    assert_eq!(cf.total, BigInt::from(1));

    // r even: K = p − 1 when p | w, −1 otherwise.
    let g = count_quadric_mod_p_closed_form(&quad(2, &[(&[2, 0], 1), (&[0, 2], 1)]), 7).unwrap().gauss.unwrap();
    assert_eq!(g.k_value, KValue::Integer(BigInt::from(6)));
    let g = count_quadric_mod_p_closed_form(&quad(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -1)]), 7)
        .unwrap()
        .gauss
        .unwrap();
    assert_eq!(g.k_value, KValue::Integer(BigInt::from(-1)));
    assert!(count_quadric_mod_p_closed_form(&quad(1, &[(&[2], 1)]), 2).is_err());
}

#[test]
fn closed_form_unit_linear_outside_block() {
    // x1² + x2: the linear unit forces exactly p^{m−1} points.
    let f = quad(2, &[(&[2, 0], 1), (&[0, 1], 1)]);
    for p in [3u64, 5, 7] {
        let cf = count_quadric_mod_p_closed_form(&f, p).unwrap();
        assert_eq!(cf.total, BigInt::from(p));
        assert!(cf.gauss.is_none());
        assert_eq!(count_mod_q_bruteforce(&f.to_polynomial(), p, false, BUDGET).unwrap(), p);
    }
}

#[test]
fn bruteforce_examples() {
    assert_eq!(count_mod_q_bruteforce(&poly(2, &[(&[1, 0], 1)]), 7, false, BUDGET).unwrap(), 7);
    let circle = poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -1)]);
    assert_eq!(count_mod_q_bruteforce(&circle, 3, false, BUDGET).unwrap(), 4);
    assert_eq!(count_mod_q_bruteforce(&poly(1, &[(&[2], 1)]), 5, true, BUDGET).unwrap(), 0);
    assert!(matches!(
        count_mod_q_bruteforce(&circle, 1000, false, 1000),
        Err(Error::BudgetExceeded { .. })
    ));
    assert!(count_mod_q_bruteforce(&circle, 6, true, BUDGET).is_err());
}

#[test]
fn hensel_examples() {
    let h = hensel_count(&poly(1, &[(&[1], 1), (&[0], 3)]), 5, 2, BUDGET).unwrap();
    assert_eq!(h.exact, Some(1));
    assert_eq!(h.certified, Some(BigInt::from(1)));

    let circle = poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -1)]);
    let h = hensel_count(&circle, 3, 2, BUDGET).unwrap();
    assert_eq!(h.exact, Some(12));
    assert_eq!(count_mod_q_bruteforce(&circle, 9, false, BUDGET).unwrap(), 12);
    // Four nonsingular roots mod 3, each lifting to three roots mod 9.
    assert_eq!(h.certified, Some(BigInt::from(12)));
    assert!(hensel_count(&circle, 3, 0, BUDGET).is_err());
}

#[test]
fn padic_witness_examples() {
    let w = find_padic_nonsingular(&poly(1, &[(&[1], 1)]), &[0], 7, 1, BUDGET).unwrap();
    assert_eq!((w.v, w.residue.clone(), w.index), (1, vec![0], 0));

    let c = poly(2, &[(&[3, 0], 1), (&[0, 1], 1)]);
    let w = find_padic_nonsingular(&c, &[0], 5, 2, BUDGET).unwrap();
    assert_eq!(w.v, 1);
    assert!(w.verify(&c));
    // The point (1, −1) satisfies both congruences directly.
    assert_eq!(c.evaluate(&[BigInt::from(1), BigInt::from(-1)]).unwrap(), BigInt::from(0));
    assert_eq!(c.derivative(0).evaluate(&[BigInt::from(1), BigInt::from(-1)]).unwrap(), BigInt::from(3));

    // x1² + x2² + 1 has the smooth zero (1, 1) mod 3.
    let c = poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], 1)]);
    let w = find_padic_nonsingular(&c, &[0, 1], 3, 3, BUDGET).unwrap();
    assert_eq!(w.v, 1);
    assert!(w.verify(&c));

    // x1² + x2² − 3: 3 is not a sum of two squares mod 9.
    let c = poly(2, &[(&[2, 0], 1), (&[0, 2], 1), (&[0, 0], -3)]);
    assert!(matches!(
        find_padic_nonsingular(&c, &[0, 1], 3, 3, BUDGET),
        Err(Error::NoWitness { p: 3, v_max: 3 })
    ));
    let sums: Vec<u64> = (0..9).flat_map(|a| (0..9).map(move |b| (a * a + b * b) % 9)).collect();
    assert!(!sums.contains(&3));
}

#[test]
fn residue_value_examples() {
    let r = quadratic_residue_value_count(&poly(1, &[(&[2], 1)]), 3, BUDGET).unwrap();
    assert_eq!(r.count, 2);
    let r = quadratic_residue_value_count(&poly(2, &[(&[0, 0], 1)]), 7, BUDGET).unwrap();
    assert_eq!(r.count, 49);

    let f = poly(2, &[(&[2, 0], 1), (&[0, 2], 1)]);
    let r = quadratic_residue_value_count(&f, 5, BUDGET).unwrap();
    let (mut count, mut zeros, mut s) = (0u64, 0u64, 0i64);
    for a in 0..5i64 {
        for b in 0..5i64 {
            match legendre_by_squares(a * a + b * b, 5) {
                1 => {
                    count += 1;
                    s += 1;
                }
                0 => zeros += 1,
                _ => s -= 1,
            }
        }
    }
    assert_eq!((r.count, r.zeros, r.char_sum), (count, zeros, s));
    assert_eq!(2 * r.count as i64, 25 + r.char_sum - r.zeros as i64);
}

fn arb_quadratic(m: usize) -> impl Strategy<Value = QuadraticPolynomial> {
    (
        prop::collection::vec(-6i64..=6, m * (m + 1) / 2),
        prop::collection::vec(-6i64..=6, m),
        -6i64..=6,
    )
        .prop_map(move |(q, b, n)| {
            let mut p = IntPolynomial::zero(m);
            let mut k = 0;
            for i in 0..m {
                for j in i..m {
                    let mut e = vec![0u32; m];
                    e[i] += 1;
                    e[j] += 1;
                    p = &p + &IntPolynomial::monomial(e, q[k]);
                    k += 1;
                }
                let mut e = vec![0u32; m];
                e[i] = 1;
                p = &p + &IntPolynomial::monomial(e, b[i]);
            }
            p = &p + &IntPolynomial::constant(m, n);
            QuadraticPolynomial::from_polynomial(&p).unwrap()
        })
}

fn small_odd_prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11, 13])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn jacobi_multiplicative(a in -500i64..500, b in -500i64..500, k in 0i64..200) {
        let n = 2 * k + 1;
        prop_assert_eq!(jac(a * b, n), jac(a, n) * jac(b, n));
    }

    #[test]
    fn closed_form_matches_oracle(f in (1usize..=3).prop_flat_map(arb_quadratic), p in small_odd_prime()) {
        let cf = count_quadric_mod_p_closed_form(&f, p).unwrap();
        let poly = f.to_polynomial();
        prop_assert_eq!(cf.total.to_u64().unwrap(), count_mod_q_bruteforce(&poly, p, false, BUDGET).unwrap());
        prop_assert_eq!(cf.nonsingular.to_u64().unwrap(), count_mod_q_bruteforce(&poly, p, true, BUDGET).unwrap());
    }

    #[test]
    fn hensel_monotone_and_certified(f in arb_quadratic(2), p in prop::sample::select(vec![3u64, 5, 7]), t in 1u32..=3) {
        let poly = f.to_polynomial();
        let h = hensel_count(&poly, p, t, BUDGET);
        if let Ok(h) = h {
            let exact = BigInt::from(h.exact.unwrap());
            if let Some(c) = &h.certified {
                prop_assert!(c <= &exact);
            }
            let next = count_mod_q_bruteforce(&poly, p.pow(t + 1), false, BUDGET).unwrap();
            prop_assert!(BigInt::from(next) <= exact * BigInt::from(p).pow(2));
        }
    }

    #[test]
    fn witnesses_reverify(f in arb_quadratic(3), p in small_odd_prime()) {
        let poly = f.to_polynomial();
        if let Ok(w) = find_padic_nonsingular(&poly, &[0, 1, 2], p, 2, BUDGET) {
            prop_assert!(w.verify(&poly));
            prop_assert!((w.residue.len() == 3) && w.residue.iter().all(|&r| r < w.modulus()));
        }
    }
}
