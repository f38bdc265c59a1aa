use cubic_fibration::arith::is_prime_u64;
use cubic_fibration::catalog::linear_fibre_family;
use cubic_fibration::fibration::minors::poly_det;
use cubic_fibration::fibration::probes::codim_probe;
use cubic_fibration::fibration::{build_fibration, RankConfig};
use cubic_fibration::finite_field::count_mod_q_bruteforce;
use cubic_fibration::forms::{FibrationMode, IntPolynomial, VariableSplit};
use cubic_fibration::sieve::*;
use cubic_fibration::Error;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

fn v(n: usize, i: usize) -> IntPolynomial {
    IntPolynomial::var(n, i)
}

fn m(n: usize, idx: &[usize]) -> IntPolynomial {
    idx.iter().fold(IntPolynomial::constant(n, 1), |acc, &i| &acc * &v(n, i))
}

fn k(c: i64, p: &IntPolynomial) -> IntPolynomial {
    p.scale(&BigInt::from(c))
}

fn sum(ps: &[IntPolynomial]) -> IntPolynomial {
    let n = ps[0].num_vars();
    ps.iter().fold(IntPolynomial::zero(n), |acc, p| &acc + p)
}

fn big(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

fn rat(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn full_point(split: &VariableSplit, x: &[BigInt], y: &[i64]) -> Vec<BigInt> {
    let mut pt = vec![BigInt::zero(); split.n()];
    for (&i, val) in split.x_indices.iter().zip(x) {
        pt[i] = val.clone();
    }
    for (&i, &val) in split.y_indices.iter().zip(y) {
        pt[i] = BigInt::from(val);
    }
    pt
}

/// Σ x_i Q_i(y) + R(y) with x first.
fn linear_fibre(nx: usize, h: usize, qs: &[IntPolynomial], r: &IntPolynomial) -> (IntPolynomial, VariableSplit) {
    let n = nx + h;
    let emb = |p: &IntPolynomial| p.embed(n, &(nx..n).collect::<Vec<_>>()).unwrap();
    let mut c = emb(r);
    for (i, q) in qs.iter().enumerate() {
        c = &c + &(&v(n, i) * &emb(q));
    }
    (c, VariableSplit::leading(nx, n, FibrationMode::PiPrime))
}

#[test]
fn good_prime_predicate_is_nonvanishing_of_some_q() {
    let h = 3;
    let qs = vec![m(h, &[0, 0]), m(h, &[1, 1]), m(h, &[2, 2]), m(h, &[0, 1]), m(h, &[1, 2])];
    let r = &m(h, &[0, 0, 0]) + &m(h, &[2, 2, 2]);
    let (c, split) = linear_fibre(5, h, &qs, &r);
    let cfg = ConditionConfig { rule: GoodPrimeRule::Primes(vec![3, 5, 7]), ..Default::default() };
    let cs = build_conditions(&c, &split, FibrationMode::PiPrime, &cfg).unwrap();
    assert_eq!(cs.locus, qs);
    assert_eq!(cs.bad_primes(), vec![2]);
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(h, -1, 1));
    spec.conditions = Some(cs);
    let big_y = BigRational::from_integer(12.into());
    let compiled = spec.compile(&big_y).unwrap();
    let bad = &spec.conditions.as_ref().unwrap().bad[0];
    for y0 in -12i64..=12 {
        for y1 in -12i64..=12 {
            for y2 in [-9i64, -6, 0, 3, 5, 7, 10] {
                let y = [y0, y1, y2];
                let res = compiled.accepts(&y);
                let in_class = y.iter().zip(&bad.residue).all(|(&a, &r)| (a - r as i64).rem_euclid(bad.modulus as i64) == 0);
                if !in_class {
                    assert_eq!(res, Err(Rejection::BadPrime { p: 2 }));
                    continue;
                }
                let failing = [3i64, 5, 7].into_iter().find(|&p| {
                    qs.iter().all(|q| q.evaluate(&big(&y)).unwrap().mod_floor(&BigInt::from(p)).is_zero())
                });
                match failing {
                    Some(p) => assert_eq!(res, Err(Rejection::GoodPrime { p: p as u64 })),
                    None => assert_eq!(res, Ok(())),
                }
            }
        }
    }
}

#[test]
fn bad_prime_two_gets_a_verified_witness() {
    let (c, split) = linear_fibre_family(1);
    let cs = build_conditions(&c, &split, FibrationMode::PiPrime, &ConditionConfig::default()).unwrap();
    assert_eq!(cs.bad_primes(), vec![2]);
    assert!(cs.verify_witnesses(&c, &split));
    let b = &cs.bad[0];
    let w = b.witness.as_ref().unwrap();
    let q = 1i64 << (2 * w.v - 1);
    let pv = 1i64 << w.v;
    let pt = big(&w.residue.iter().map(|&r| r as i64).collect::<Vec<_>>());
    assert!(c.evaluate(&pt).unwrap().mod_floor(&BigInt::from(q)).is_zero());
    assert!(split.x_indices.contains(&w.index));
    assert!(!c.derivative(w.index).evaluate(&pt).unwrap().mod_floor(&BigInt::from(pv)).is_zero());
}

/// Norm form of F_27 = F_3[t]/(t³ − t − 1) over Z, as det of multiplication.
fn norm_form(n: usize, y: [usize; 3]) -> IntPolynomial {
    let (a, b, c) = (v(n, y[0]), v(n, y[1]), v(n, y[2]));
    let mat = vec![
        vec![a.clone(), c.clone(), b.clone()],
        vec![b.clone(), &a + &c, &b + &c],
        vec![c.clone(), b.clone(), &a + &c],
    ];
    poly_det(&mat)
}

#[test]
fn witness_failure_at_three_is_surfaced() {
    let n = 6;
    let y = [3, 4, 5];
    let nf = norm_form(n, y);
    for a in 0..3i64 {
        for b in 0..3i64 {
            for cc in 0..3i64 {
                if (a, b, cc) != (0, 0, 0) {
                    let val = nf.evaluate(&big(&[0, 0, 0, a, b, cc])).unwrap();
                    assert!(!val.mod_floor(&BigInt::from(3)).is_zero());
                }
            }
        }
    }
    let mut c = nf.clone();
    for i in 0..3 {
        c = &c + &k(3, &m(n, &[i, y[i], y[i]]));
    }
    let split = VariableSplit::leading(3, n, FibrationMode::PiPrime);
    // Independent scan: no residue mod 3 is a zero with a nonvanishing x-partial.
    let mut found = false;
    let mut pt = [0i64; 6];
    for code in 0..729 {
        let mut t = code;
        for slot in pt.iter_mut() {
            *slot = t % 3;
            t /= 3;
        }
        let p = big(&pt);
        if c.evaluate(&p).unwrap().mod_floor(&BigInt::from(3)).is_zero()
            && (0..3).any(|i| !c.derivative(i).evaluate(&p).unwrap().mod_floor(&BigInt::from(3)).is_zero())
        {
            found = true;
        }
    }
    assert!(!found);
    let cfg = ConditionConfig { extra_bad_primes: vec![3], v_max: 1, ..Default::default() };
    let err = build_conditions(&c, &split, FibrationMode::PiPrime, &cfg).unwrap_err();
    assert_eq!(err, Error::NoWitness { p: 3, v_max: 1 });
}

#[test]
fn membership_examples() {
    let (c, split) = linear_fibre_family(1);
    let cs = build_conditions(&c, &split, FibrationMode::PiPrime, &ConditionConfig::default()).unwrap();
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(3, -1, 1));
    spec.conditions = Some(cs);
    spec.extras.push(ExtraPredicate::PrimeInWindow { index: 0, lo: rat(1, 10), hi: rat(1, 1) });
    let big_y = BigRational::from_integer(20.into());
    let out = membership(&[25, 1, 1], &spec, &big_y).unwrap();
    assert_eq!(out.rejection, Some(Rejection::Box));
    assert!(out.passed.is_empty());
    let out = membership(&[9, 1, 1], &spec, &big_y).unwrap();
    assert_eq!(out.rejection, Some(Rejection::Prime { index: 0 }));
    assert_eq!(out.passed, vec!["box".to_string()]);
    let points = admissible_points(&spec, &big_y, 1 << 20).unwrap();
    assert!(!points.is_empty());
    let y = &points[0];
    let out = membership(y, &spec, &big_y).unwrap();
    assert!(out.accepted);
    assert_eq!(out.passed, vec!["box", "prime", "bad_primes", "good_primes"]);
    let verdict = fibre_solubility(&big(y), &c, &split, FibrationMode::PiPrime, &FibreConfig::default()).unwrap();
    match verdict {
        FibreVerdict::ExplicitPoint { x } => assert!(c.evaluate(&full_point(&split, &x, y)).unwrap().is_zero()),
        other => panic!("expected a point, got {other:?}"),
    }
}

#[test]
fn linear_fibre_verdicts() {
    let h = 2;
    let qs = vec![m(h, &[0, 0]), m(h, &[1, 1])];
    let r = &m(h, &[0, 0, 1]) + &k(7, &m(h, &[1, 1, 1]));
    let (c, split) = linear_fibre(2, h, &qs, &r);
    let y = [3i64, 2];
    match fibre_solubility(&big(&y), &c, &split, FibrationMode::PiPrime, &FibreConfig::default()).unwrap() {
        FibreVerdict::ExplicitPoint { x } => {
            assert!(c.evaluate(&full_point(&split, &x, &y)).unwrap().is_zero());
        }
        other => panic!("{other:?}"),
    }
    let qs5 = vec![k(5, &m(h, &[0, 0])), k(5, &m(h, &[1, 1]))];
    let r5 = &m(h, &[0, 0, 0]) + &m(h, &[1, 1, 1]);
    let (c5, split5) = linear_fibre(2, h, &qs5, &r5);
    let y = [1i64, 1];
    // gcd(5, 5) = 5 and R(y) = 2.
    let verdict = fibre_solubility(&big(&y), &c5, &split5, FibrationMode::PiPrime, &FibreConfig::default()).unwrap();
    assert!(verdict.is_insoluble());
    let wrong = VariableSplit::leading(2, 4, FibrationMode::Pi);
    assert!(matches!(
        fibre_solubility(&big(&y), &c5, &wrong, FibrationMode::PiPrime, &FibreConfig::default()),
        Err(Error::InvalidSplit(_))
    ));
}

#[test]
fn quadric_fibre_of_rank_five_uses_the_principle() {
    // C = y1(x1² + x2² + x3² − x4² − x5²) + y2 x1 x2 − 3 y1³: over y = (1, 0) the
    // fibre is an indefinite rank-5 quadric with det(2Q) = 16.
    let n = 7;
    let (y1, y2) = (5, 6);
    let mut c = IntPolynomial::zero(n);
    for i in 0..5 {
        let s = if i < 3 { 1 } else { -1 };
        c = &c + &k(s, &m(n, &[i, i, y1]));
    }
    c = &c + &m(n, &[0, 1, y2]);
    c = &c - &k(3, &m(n, &[y1, y1, y1]));
    let split = VariableSplit::leading(5, n, FibrationMode::Pi);
    let y = big(&[1, 0]);
    let cfg = FibreConfig { want_point: false, ..Default::default() };
    let verdict = fibre_solubility(&y, &c, &split, FibrationMode::Pi, &cfg).unwrap();
    let FibreVerdict::PrincipleInvoked { local } = verdict else { panic!("{verdict:?}") };
    let primes: Vec<u64> = local.iter().map(|(p, _)| *p).collect();
    assert_eq!(primes, vec![2, 3, 5]);
    let f = fibre_quadratic(&y, &c, &split).unwrap().to_polynomial();
    for (p, v) in &local {
        let cubic_fibration::local_density::SolubilityVerdict::Soluble(w) = v else { panic!("p = {p}: {v:?}") };
        let q = BigInt::from(w.modulus());
        let pt = big(&w.residue.iter().map(|&r| r as i64).collect::<Vec<_>>());
        assert!(f.evaluate(&pt).unwrap().mod_floor(&q).is_zero());
        let pv = BigInt::from(p.pow(w.v));
        assert!(!f.derivative(w.index).evaluate(&pt).unwrap().mod_floor(&pv).is_zero());
    }
    let with_point = fibre_solubility(&y, &c, &split, FibrationMode::Pi, &FibreConfig::default()).unwrap();
    let FibreVerdict::ExplicitPoint { x } = with_point else { panic!() };
    assert!(c.evaluate(&full_point(&split, &x, &[1, 0])).unwrap().is_zero());
    // A definite fibre with a negative constant has no real point.
    let mut d = IntPolynomial::zero(n);
    for i in 0..5 {
        d = &d + &m(n, &[i, i, y1]);
    }
    d = &d + &m(n, &[y1, y1, y1]);
    let verdict = fibre_solubility(&y, &d, &split, FibrationMode::Pi, &cfg).unwrap();
    assert_eq!(verdict, FibreVerdict::Insoluble { reason: "no real point".into() });
}

#[test]
fn density_without_conditions_is_exact() {
    let spec = AdmissibleSetSpec::new(OmegaInfinity::cube(2, -1, 1));
    let ys = [5u64, 10, 20, 40];
    let rep = density_estimate(&spec, &ys, 1 << 24).unwrap();
    for row in &rep.rows {
        let expect = BigRational::new(BigInt::from((2 * row.y + 1).pow(2)), BigInt::from(row.y.pow(2)));
        assert_eq!(row.density, expect);
    }
    let d = rep.deltas();
    assert!(d.windows(2).all(|w| w[1] < w[0]));
    assert!((rep.densities().last().unwrap() - 4.0).abs() <= 4.0 / 40.0 + 1.0 / 1600.0);
    let csv = rep.to_csv();
    assert!(csv.starts_with("Y,count,density,delta\n5,121,"));
    assert_eq!(csv.lines().count(), 5);
}

fn single_prime_spec() -> AdmissibleSetSpec {
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(1, -1, 1));
    spec.conditions = Some(LocalConditionSet {
        mode: FibrationMode::PiPrime,
        k: 1,
        locus: vec![IntPolynomial::var(1, 0)],
        bad: Vec::new(),
        rule: GoodPrimeRule::Primes(vec![3]),
        tail: None,
    });
    spec
}

#[test]
fn single_prime_condition_density() {
    let spec = single_prime_spec();
    let ys = [10u64, 20, 40, 80, 160];
    let rep = density_estimate(&spec, &ys, 1 << 20).unwrap();
    for row in &rep.rows {
        let direct = (-(row.y as i64)..=row.y as i64).filter(|v| v % 3 != 0).count() as u64;
        assert_eq!(row.count, direct);
        let err = (row.density.to_f64().unwrap() - 4.0 / 3.0).abs();
        assert!(err <= 2.0 / row.y as f64, "Y = {}: {err}", row.y);
    }
    // Multiples of 3 hit 4/3 exactly.
    let rep = density_estimate(&spec, &[3, 6, 12, 24], 1 << 20).unwrap();
    assert!(rep.rows.iter().all(|r| r.density == rat(4, 3)));
}

#[test]
fn linear_fibre_family_density_is_positive_and_settles() {
    let (c, split) = linear_fibre_family(1);
    let cs = build_conditions(&c, &split, FibrationMode::PiPrime, &ConditionConfig::default()).unwrap();
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(3, -1, 1));
    spec.conditions = Some(cs);
    let rep = density_estimate(&spec, &[10, 20, 40, 80], 1 << 24).unwrap();
    let d = rep.densities();
    assert!(d.iter().all(|&x| x > 0.0));
    let deltas: Vec<f64> = rep.deltas().iter().map(|x| x.abs()).collect();
    assert!(deltas.last().unwrap() < &deltas[0], "{d:?}");
    assert!(deltas.last().unwrap() / d.last().unwrap() <= 0.01, "{d:?}");
    // Every accepted y has a soluble linear fibre.
    let big_y = BigRational::from_integer(10.into());
    let mut insoluble = 0;
    enumerate_admissible(&spec, &big_y, 1 << 20, |y| {
        let vd = fibre_solubility(&big(y), &c, &split, FibrationMode::PiPrime, &FibreConfig::default()).unwrap();
        if vd.is_insoluble() {
            insoluble += 1;
        }
    })
    .unwrap();
    assert_eq!(insoluble, 0);
}

#[test]
fn cutoff_rule_reports_tail_loss() {
    let (c, split) = linear_fibre_family(1);
    let cfg = ConditionConfig { rule: GoodPrimeRule::Cutoff(100), ..Default::default() };
    let cs = build_conditions(&c, &split, FibrationMode::PiPrime, &cfg).unwrap();
    let tail = cs.tail.clone().unwrap();
    // Only the origin is a common zero of the five quadrics modulo these primes.
    assert_eq!(tail.counts, vec![1, 1, 1]);
    assert_eq!(tail.affine_dim, 0);
    let bound = tail.bound.unwrap();
    assert!((bound - 1.0 / (2.0 * 100f64.powi(2))).abs() < 1e-12);
}

fn remgcd_bundle() -> (IntPolynomial, VariableSplit) {
    // y1(x1² + x2x3) + y2(x2² + x3x4 + x1x4) + y3(x3² + x4² + x1x2) + y1y2y3
    let n = 7;
    let (a, b, cc) = (4, 5, 6);
    let c = sum(&[
        m(n, &[0, 0, a]),
        m(n, &[1, 2, a]),
        m(n, &[1, 1, b]),
        m(n, &[2, 3, b]),
        m(n, &[0, 3, b]),
        m(n, &[2, 2, cc]),
        m(n, &[3, 3, cc]),
        m(n, &[0, 1, cc]),
        m(n, &[a, b, cc]),
    ]);
    (c, VariableSplit::leading(4, n, FibrationMode::Pi))
}

#[test]
fn gcd_of_admissible_parameters_is_bounded() {
    let (c, split) = remgcd_bundle();
    let fd = build_fibration(&c, &split, RankConfig::default()).unwrap();
    let probe = codim_probe(&fd.m2, &[5, 7, 11], 2, 100_000, 1).unwrap();
    assert!(probe.codim_estimate >= 2, "{probe:?}");
    let cs = build_conditions(&c, &split, FibrationMode::Pi, &ConditionConfig::default()).unwrap();
    assert!(cs.verify_witnesses(&c, &split));
    let bound = cs.bad_modulus_product();
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(3, -1, 1));
    spec.conditions = Some(cs);
    let mut max_gcd = BigInt::zero();
    let mut count = 0;
    enumerate_admissible(&spec, &BigRational::from_integer(12.into()), 1 << 20, |y| {
        count += 1;
        let g = y.iter().fold(BigInt::zero(), |acc, &v| acc.gcd(&BigInt::from(v)));
        if g > max_gcd {
            max_gcd = g;
        }
    })
    .unwrap();
    assert!(count > 0);
    assert!(max_gcd <= bound, "{max_gcd} > {bound}");
}

#[test]
fn jacobi_condition_gives_nonsingular_points_mod_y1() {
    // F_y ≡ y2 x1² + y3 x1x2 + y2 x2² + R mod y1 with discriminant D = y3² − 4y2².
    let n = 5;
    let (y1, y2, y3) = (2, 3, 4);
    let c = sum(&[
        m(n, &[0, 0, y2]),
        m(n, &[0, 1, y3]),
        m(n, &[1, 1, y2]),
        m(n, &[0, 0, y1]),
        k(-1, &m(n, &[1, 1, y1])),
        m(n, &[y2, y2, y2]),
        m(n, &[y3, y3, y3]),
        m(n, &[y1, y2, y3]),
    ]);
    let split = VariableSplit::leading(2, n, FibrationMode::Pi);
    let g = &m(3, &[2, 2]) - &k(4, &m(3, &[1, 1]));
    let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(3, -1, 1));
    spec.extras = vec![
        ExtraPredicate::PrimeInWindow { index: 0, lo: rat(1, 4), hi: rat(1, 2) },
        ExtraPredicate::Coprime { i: 1, j: 0, a: BigInt::one(), b: BigInt::one() },
        ExtraPredicate::NonzeroModulo { numerator: g.clone(), index: 0 },
        ExtraPredicate::Jacobi { numerator: g, index: 0, value: 1 },
    ];
    let pts = admissible_points(&spec, &BigRational::from_integer(40.into()), 1 << 22).unwrap();
    assert!(pts.len() > 1000);
    for y in &pts {
        let p = y[0] as u64;
        assert!(is_prime_u64(p));
        let f = fibre_quadratic(&big(y), &c, &split).unwrap().to_polynomial();
        let ns = count_mod_q_bruteforce(&f, p, true, 1 << 20).unwrap();
        assert!(ns >= 1, "y = {y:?}");
    }
}

/// C = y5(α1 x1 y1 + α2 x2 y2 + α3 x3 y3 + α4 x4 y4 + α5 x5 y5) + R(y) with n = 10.
fn reducible_instance() -> (IntPolynomial, VariableSplit) {
    let n = 10;
    let yk = 9;
    let alpha = [2, 4, 1, -1, 3];
    let mut c = IntPolynomial::zero(n);
    for i in 0..5 {
        c = &c + &k(alpha[i], &m(n, &[i, 5 + i, yk]));
    }
    let r = sum(&[m(n, &[5, 5, 5]), k(2, &m(n, &[6, 6, 7])), m(n, &[7, 8, 8]), k(-1, &m(n, &[5, 6, 8])), m(n, &[8, 8, 9])]);
    c = &c + &r;
    (c, VariableSplit::leading(5, n, FibrationMode::PiPrime))
}

#[test]
fn reducible_shape_detection() {
    let (c, split) = reducible_instance();
    let shape = detect_reducible_shape(&c, &split).unwrap();
    assert_eq!(shape.k, 4);
    assert_eq!(shape.sigma, vec![0, 1, 2, 3, 4]);
    assert_eq!(shape.g, BigInt::from(2));
    assert_eq!(shape.beta, [BigInt::from(1), BigInt::from(2)]);
    let (fam, fsplit) = linear_fibre_family(1);
    assert!(matches!(detect_reducible_shape(&fam, &fsplit), Err(Error::Precondition(_))));
}

#[test]
fn reducible_empty_window() {
    let (c, split) = reducible_instance();
    let shape = detect_reducible_shape(&c, &split).unwrap();
    let delta = rat(1, 20);
    assert!(prime_window(10, &delta).is_empty());
    assert_eq!(reducible_case_count(&shape, 10, &delta).unwrap().count, 0);
    assert!(reducible_case_tuples(&shape, &c, &split, 10, &delta, 10).unwrap().is_empty());
}

#[test]
fn reducible_small_instance_is_verified() {
    let (c, split) = reducible_instance();
    let shape = detect_reducible_shape(&c, &split).unwrap();
    let delta = rat(1, 10);
    let count = reducible_case_count(&shape, 30, &delta).unwrap();
    assert_eq!(count.primes, vec![3, 5]);
    assert_eq!(count.count, reducible_case_count_bruteforce(&shape, 30, &delta).unwrap());
    let tuples = reducible_case_tuples(&shape, &c, &split, 30, &delta, 3000).unwrap();
    assert_eq!(tuples.len(), 3000);
    for t in &tuples {
        let yk = t.y[4];
        assert!(yk == 3 || yk == 5);
        assert_eq!(num_integer::gcd(t.y[0], 2 * t.y[1]), 1);
        let mut hat = big(&t.y);
        hat[4] = BigInt::zero();
        let rv = shape.r.evaluate(&hat).unwrap();
        assert!(rv.mod_floor(&BigInt::from(yk)).is_zero());
        assert!(c.evaluate(&t.point).unwrap().is_zero());
        assert_eq!(t.point[2], BigInt::from(2 * t.x_tail[0]));
    }
}

#[test]
fn reducible_growth_trend() {
    let (c, split) = reducible_instance();
    let shape = detect_reducible_shape(&c, &split).unwrap();
    let delta = rat(1, 10);
    // Main term: Y^(n−3) · Σ_{p in window} 1/p.
    let runs: Vec<ReducibleCount> =
        [30u64, 60, 120].iter().map(|&y| reducible_case_count(&shape, y, &delta).unwrap()).collect();
    let inv = |r: &ReducibleCount| r.primes.iter().map(|&p| 1.0 / p as f64).sum::<f64>();
    for w in runs.windows(2) {
        let ratio = w[1].count as f64 / w[0].count as f64;
        let predicted = 2f64.powi(10 - 3) * inv(&w[1]) / inv(&w[0]);
        assert!(ratio / predicted > 0.5 && ratio / predicted < 2.0, "ratio {ratio}, predicted {predicted}");
    }
}

#[test]
fn large_q_box_examples() {
    let b = box_with_large_q(&m(1, &[0, 0]), 10, 1000, 3).unwrap();
    assert_eq!(b.omega.intervals, vec![(rat(1, 1), rat(2, 1))]);
    assert_eq!(b.c_theory, rat(1, 1));
    assert_eq!(b.c_measured, Some(rat(1, 1)));
    assert!(b.verified);

    // Q = y1² − y2² at P = 100: the whole region is enumerated.
    let q = &m(2, &[0, 0]) - &m(2, &[1, 1]);
    let b = box_with_large_q(&q, 100, 100_000, 3).unwrap();
    assert_eq!(b.c_theory, rat(7, 8));
    assert!(b.verified);
    let mut min: Option<i64> = None;
    for y1 in 100i64..=200 {
        for y2 in 0i64..=40 {
            let z2 = y2 as f64 / 100.0;
            if z2 >= 1.0 / (4.0 * 2f64.sqrt()) + 1e-6 && z2 <= 1.0 / (2.0 * 2f64.sqrt()) - 1e-6 {
                let v = y1 * y1 - y2 * y2;
                min = Some(min.map_or(v, |m: i64| m.min(v)));
            }
        }
    }
    let grid = rat(min.unwrap(), 10_000);
    assert!(grid >= rat(7, 8));
    assert_eq!(b.c_measured, Some(grid));

    // Q = y1 y2 is diagonalized first.
    let b = box_with_large_q(&m(2, &[0, 1]), 100, 2000, 3).unwrap();
    assert_eq!((b.positive.len(), b.negative.len()), (1, 1));
    assert!(b.verified);
    assert!(b.samples > 100);

    assert!(matches!(box_with_large_q(&IntPolynomial::zero(2), 10, 10, 0), Err(Error::Degenerate(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn accepted_linear_fibres_are_soluble(coefs in prop::collection::vec(-3i64..=3, 12..=12), rc in prop::collection::vec(-3i64..=3, 4..=4)) {
        // Two linear variables, two parameters: Q_i = a y1² + b y1y2 + c y2².
        let h = 2;
        let mons = [m(h, &[0, 0]), m(h, &[0, 1]), m(h, &[1, 1])];
        let q1 = sum(&[k(coefs[0], &mons[0]), k(coefs[1], &mons[1]), k(coefs[2], &mons[2])]);
        let q2 = sum(&[k(coefs[3], &mons[0]), k(coefs[4], &mons[1]), k(coefs[5], &mons[2])]);
        prop_assume!(!q1.is_zero() && !q2.is_zero());
        let r = sum(&[k(rc[0], &m(h, &[0, 0, 0])), k(rc[1], &m(h, &[0, 0, 1])), k(rc[2], &m(h, &[0, 1, 1])), k(rc[3], &m(h, &[1, 1, 1]))]);
        let (c, split) = linear_fibre(2, h, &[q1, q2], &r);
        let cfg = ConditionConfig { v_max: 3, ..Default::default() };
        let cs = match build_conditions(&c, &split, FibrationMode::PiPrime, &cfg) {
            Ok(cs) => cs,
            Err(Error::NoWitness { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let mut spec = AdmissibleSetSpec::new(OmegaInfinity::cube(2, -1, 1));
        spec.conditions = Some(cs);
        let mut bad = Vec::new();
        enumerate_admissible(&spec, &BigRational::from_integer(15.into()), 1 << 20, |y| {
            let vd = fibre_solubility(&big(y), &c, &split, FibrationMode::PiPrime, &FibreConfig::default()).unwrap();
            if vd.is_insoluble() {
                bad.push(y.to_vec());
            }
        }).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn compiled_box_agrees_with_rational_test(y in prop::collection::vec(-40i64..=40, 2..=2), num in 1i64..20) {
        let b = box_with_large_q(&(&m(2, &[0, 0]) - &k(3, &m(2, &[1, 1]))), 10, 10, 0).unwrap();
        let spec = AdmissibleSetSpec::new(b.omega.clone());
        let big_y = rat(num, 1);
        let yr: Vec<BigRational> = y.iter().map(|&v| rat(v, 1)).collect();
        let fast = spec.compile(&big_y).unwrap().accepts(&y).is_ok();
        prop_assert_eq!(fast, b.omega.contains_rational(&yr, &big_y));
    }
}
