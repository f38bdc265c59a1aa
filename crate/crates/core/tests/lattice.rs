use cubic_fibration::lattice::*;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn rb(b: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(b))
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn kernel_examples() {
    let l = kernel_lattice(&big(&[1, 0, 0, 0])).unwrap();
    assert_eq!(l.rank(), 3);
    assert_eq!(l.gram_det, BigInt::one());
    for v in &l.basis {
        assert!(v[0].is_zero());
    }

    let l = kernel_lattice(&big(&[1, 1, 1])).unwrap();
    assert_eq!(l.gram_det, BigInt::from(3));
    assert!(l.contains(&big(&[1, -1, 0])));
    assert!(l.contains(&big(&[0, 1, -1])));
    assert!(!l.contains(&big(&[1, 0, 0])));

    let l2 = kernel_lattice(&big(&[2, 2])).unwrap();
    let l1 = kernel_lattice(&big(&[1, 1])).unwrap();
    assert_eq!(l2.gram_det, l1.gram_det);
    assert_eq!(l2.gram_det, BigInt::from(2));

    assert!(kernel_lattice(&big(&[0, 0])).is_err());
}

#[test]
fn reduction_and_svp_examples() {
    let std = vec![big(&[1, 0]), big(&[0, 1])];
    let (red, _) = lll_reduce(&std, &BigRational::new(3.into(), 4.into()));
    assert_eq!(red, std);
    assert_eq!(shortest_vector_exact(&std).unwrap().1, BigInt::one());

    let skew = vec![big(&[1, 0]), big(&[1_000_000, 1])];
    let (red, u) = lll_reduce(&skew, &BigRational::new(3.into(), 4.into()));
    let mut sorted: Vec<Vec<BigInt>> = red.iter().map(|v| v.iter().map(|x| x.clone() * x.clone()).collect()).collect();
    sorted.sort();
    assert_eq!(sorted, vec![big(&[0, 1]), big(&[1, 0])]);
    assert_eq!(cubic_fibration::forms::matrix::int_det(&u).abs(), BigInt::one());
    assert_eq!(shortest_vector_exact(&red).unwrap().1, BigInt::one());

    let mut l = kernel_lattice(&big(&[3, 4])).unwrap();
    assert_eq!(l.shortest_vector().unwrap().1, BigInt::from(25));
}

#[test]
fn exact_count_examples() {
    let a = big(&[1, 1]);
    assert_eq!(hyperplane_count_exact(&a, &BigInt::zero(), &rb(5), None).unwrap(), 7);
    assert_eq!(hyperplane_count_exact(&a, &BigInt::zero(), &rb(5), Some(&BigInt::one())).unwrap(), 7);
    // (b, g) = 1: only d = 1 contributes.
    let n = hyperplane_count_exact(&a, &BigInt::from(3), &rb(20), None).unwrap();
    let ng = hyperplane_count_exact(&a, &BigInt::from(3), &rb(20), Some(&BigInt::from(4))).unwrap();
    assert_eq!(n, ng);
    assert_eq!(n, hyperplane_count_bruteforce(&[1, 1], 3, 20, None));
}

#[test]
fn asymptotic_examples() {
    let c = hyperplane_count_asymptotic(&big(&[1, 1]), &BigInt::zero(), 5.0, 0.5, true).unwrap();
    assert!((c.main - 10.0 / 2f64.sqrt()).abs() < 1e-12);
    assert_eq!(c.exact, Some(7));

    let c = hyperplane_count_asymptotic(&big(&[1, 0, 0]), &BigInt::zero(), 100.0, 0.5, true).unwrap();
    let exact = c.exact.unwrap() as f64;
    assert!((exact - c.main).abs() <= c.err_eta + c.err_lambda);
    assert!((c.main - std::f64::consts::PI * 1e4).abs() < 1e-6);

    let r = hyperplane_count_asymptotic(&big(&[1, 1]), &BigInt::from(70), 50.0, 0.5, false);
    assert!(r.is_err());
}

#[test]
fn volume_examples() {
    assert_eq!(ball_slice_volume(0, 3.0, 1.0).unwrap(), 1.0);
    assert_eq!(ball_slice_volume(3, 2.0, 2.0).unwrap(), 0.0);
    assert!(ball_slice_volume(2, 1.0, 2.0).is_err());
    let table = VolumeConstantTable::new(10);
    for l in 1..=10u32 {
        let assembled = table.constants[l as usize].to_f64() * 2.0 / l as f64;
        let oracle = std::f64::consts::PI.powf(l as f64 / 2.0) / gamma_f64(l as f64 / 2.0 + 1.0);
        assert!((assembled / oracle - 1.0).abs() < 1e-9, "l = {l}");
        let sym = table.constants[l as usize].clone();
        let two_over_l = PiMultiple { rational: BigRational::new(2.into(), (l as i64).into()), half_exponent: 0 };
        assert_eq!(sym.mul(&two_over_l), unit_ball_volume(l));
        let v = ball_slice_volume(l, 3.0, 0.0).unwrap();
        assert!((v / (oracle * 3f64.powi(l as i32)) - 1.0).abs() < 1e-9);
    }
    // The simplified closed form is smaller by a factor √π.
    for l in 2..=10u32 {
        let ratio = VolumeConstantTable::new(l).constants[l as usize].to_f64() / VolumeConstantTable::simplified_form(l).to_f64();
        assert!((ratio - std::f64::consts::PI.sqrt()).abs() < 1e-9);
    }
}

/// Γ(x) for half-integers by recursion from Γ(1/2) = √π and Γ(1) = 1.
fn gamma_f64(x: f64) -> f64 {
    if (x - 0.5).abs() < 1e-12 {
        std::f64::consts::PI.sqrt()
    } else if (x - 1.0).abs() < 1e-12 {
        1.0
    } else {
        (x - 1.0) * gamma_f64(x - 1.0)
    }
}

fn primitive(mut v: Vec<i64>) -> Option<Vec<i64>> {
    let g = v.iter().fold(0i64, |acc, &x| acc.gcd(&x));
    if g == 0 {
        return None;
    }
    for x in v.iter_mut() {
        *x /= g;
    }
    Some(v)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gram_det_is_norm_squared(v in prop::collection::vec(-30i64..=30, 2..=6)) {
        let Some(a) = primitive(v) else { return Ok(()) };
        let l = kernel_lattice(&big(&a)).unwrap();
        prop_assert_eq!(l.gram_det.clone(), dot(&big(&a), &big(&a)));
        for b in &l.basis {
            prop_assert!(dot(b, &big(&a)).is_zero());
        }
    }

    #[test]
    fn svp_bounds(v in prop::collection::vec(-40i64..=40, 2..=6)) {
        let Some(a) = primitive(v) else { return Ok(()) };
        let mut l = kernel_lattice(&big(&a)).unwrap();
        let (sv, s2) = l.shortest_vector().unwrap();
        prop_assert!(dot(&sv, &big(&a)).is_zero());
        let first = l.reduced.as_ref().unwrap()[0].clone();
        prop_assert!(s2 <= dot(&first, &first));
        let k = l.rank() as f64;
        let lam = s2.to_f64().unwrap().sqrt();
        // Minkowski: λ₁ ≤ √k · covol^{1/k}; the slack 2 covers k ≤ 4.
        prop_assert!(lam <= 2.0f64.max(k.sqrt()) * l.covolume().powf(1.0 / k) + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn inclusion_exclusion_matches_filter(
        v in prop::collection::vec(-6i64..=6, 2..=3),
        b in -20i64..=20,
        bb in 2i64..=9,
        g in 1i64..=30,
    ) {
        let Some(a) = primitive(v) else { return Ok(()) };
        let got = hyperplane_count_exact(&big(&a), &BigInt::from(b), &rb(bb), Some(&BigInt::from(g))).unwrap();
        prop_assert_eq!(got, hyperplane_count_bruteforce(&a, b, bb, Some(g)));
        let plain = hyperplane_count_exact(&big(&a), &BigInt::from(b), &rb(bb), None).unwrap();
        prop_assert_eq!(plain, hyperplane_count_bruteforce(&a, b, bb, None));
    }
}

#[test]
fn asymptotic_error_budget_holds() {
    let mut rng_state = 12345u64;
    let mut next = |m: i64| {
        rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((rng_state >> 33) as i64 % (2 * m + 1)) - m
    };
    for n in 2..=4usize {
        for _ in 0..6 {
            let a = loop {
                let v: Vec<i64> = (0..n).map(|_| next(25)).collect();
                let norm2: i64 = v.iter().map(|x| x * x).sum();
                if norm2 == 0 || norm2 > 2500 {
                    continue;
                }
                if let Some(p) = primitive(v) {
                    break p;
                }
            };
            for bbig in [100.0f64, 1000.0] {
                let norm = (a.iter().map(|x| x * x).sum::<i64>() as f64).sqrt();
                let b = next(((norm * bbig.sqrt()).floor() as i64).min(50));
                let c = hyperplane_count_asymptotic(&big(&a), &BigInt::from(b), bbig, 0.5, true).unwrap();
                let exact = c.exact.unwrap() as f64;
                assert!(
                    (exact - c.main).abs() <= c.err_eta + c.err_lambda,
                    "a={a:?} b={b} B={bbig}: exact {exact} main {} budget {}",
                    c.main,
                    c.err_eta + c.err_lambda
                );
            }
        }
    }
}

#[test]
fn asymptotic_error_budget_n4_large_b() {
    for a in [vec![1i64, 2, 3, 4], vec![5, -7, 11, 13], vec![1, 0, 0, 0]] {
        let c = hyperplane_count_asymptotic(&big(&a), &BigInt::from(7), 1000.0, 0.5, true).unwrap();
        let exact = c.exact.unwrap() as f64;
        assert!((exact - c.main).abs() <= c.err_eta + c.err_lambda);
    }
}
