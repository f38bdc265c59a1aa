//! Shape detectors for the bundle Q_y: linear blocks, the proportional
//! semidefinite case, indefinite witnesses, common linear factors, the
//! rank-two classification over Q(x), and common factors of 3×3 minors.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::minors::{first_nonzero_minor, for_each_minor, nonzero_minors};
use super::probes::{codim_probe, CodimProbe};
use super::{decompose_linear_fibre, fibration_rank, hessian_pencil, FibrationData, LinearFormMatrix, RankConfig};
use crate::arith::divisors;
use crate::error::{Error, Result};
use crate::forms::linear::substitute_on_block;
use crate::forms::matrix::{int_rank, int_rank_with_pivots};
use crate::forms::{FibrationMode, IntPolynomial, Monomial, QuadraticPolynomial, RationalMatrix, VariableSplit};

fn rat(v: &BigInt) -> BigRational {
    BigRational::from_integer(v.clone())
}

/// Scale a rational vector to a primitive integer vector whose first
/// nonzero entry is positive.
fn primitive_integer(v: &[BigRational]) -> Vec<BigInt> {
    let den = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * rat(&den)).to_integer()).collect();
    normalize_int(ints)
}

fn normalize_int(mut ints: Vec<BigInt>) -> Vec<BigInt> {
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return ints;
    }
    let neg = ints.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false);
    for x in ints.iter_mut() {
        *x = &*x / &g;
        if neg {
            *x = -&*x;
        }
    }
    ints
}

fn rank_of_vectors(vs: &[Vec<BigRational>]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    RationalMatrix::from_rows(vs.to_vec()).map(|m| m.rank()).unwrap_or(0)
}

/// Greedily extend `start` (assumed independent) by vectors from `pool`.
fn extend_basis(start: Vec<Vec<BigRational>>, pool: &[Vec<BigRational>], target: usize) -> Vec<Vec<BigRational>> {
    let mut basis = start;
    for v in pool {
        if basis.len() >= target {
            break;
        }
        let mut trial = basis.clone();
        trial.push(v.clone());
        if rank_of_vectors(&trial) > basis.len() {
            basis = trial;
        }
    }
    basis
}

fn unit_rat(n: usize, i: usize) -> Vec<BigRational> {
    (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect()
}

/// Coordinates of `v` in terms of the independent vectors `basis`.
fn coordinates(basis: &[Vec<BigRational>], v: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = v.len();
    let k = basis.len();
    let cols: Vec<Vec<BigRational>> = (0..n).map(|i| (0..k).map(|j| basis[j][i].clone()).collect()).collect();
    let a = RationalMatrix::from_rows(cols).ok()?;
    crate::forms::quadratic::solve_consistent(&a, v)
}

// ---------------------------------------------------------------------------
// Integer congruence diagonalization and linear blocks.

/// Integer T with Tᵀ A T diagonal, nonzero diagonal entries first.
pub fn int_congruence_diagonalize(a: &[Vec<BigInt>]) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
    let n = a.len();
    let mut t: Vec<Vec<BigInt>> = (0..n).map(|i| super::unit(n, i)).collect();
    let transform = |t: &Vec<Vec<BigInt>>| -> Vec<Vec<BigInt>> {
        let at: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).fold(BigInt::zero(), |s, k| s + &a[i][k] * &t[k][j])).collect())
            .collect();
        (0..n)
            .map(|i| (0..n).map(|j| (0..n).fold(BigInt::zero(), |s, k| s + &t[k][i] * &at[k][j])).collect())
            .collect()
    };
    let swap_cols = |t: &mut Vec<Vec<BigInt>>, x: usize, y: usize| {
        for row in t.iter_mut() {
            row.swap(x, y);
        }
    };
    let mut cur = transform(&t);
    for k in 0..n {
        if cur[k][k].is_zero() {
            if let Some(j) = ((k + 1)..n).find(|&j| !cur[j][j].is_zero()) {
                swap_cols(&mut t, k, j);
            } else if let Some(j) = ((k + 1)..n).find(|&j| !cur[k][j].is_zero()) {
                for row in t.iter_mut() {
                    let v = row[j].clone();
                    row[k] += v;
                }
            } else {
                continue;
            }
            cur = transform(&t);
        }
        let piv = cur[k][k].clone();
        let mut changed = false;
        for j in (k + 1)..n {
            if cur[k][j].is_zero() {
                continue;
            }
            let ckj = cur[k][j].clone();
            for row in t.iter_mut() {
                row[j] = &piv * &row[j] - &ckj * &row[k];
            }
            let g = t.iter().fold(BigInt::zero(), |acc, row| acc.gcd(&row[j]));
            if !g.is_zero() && !g.is_one() {
                for row in t.iter_mut() {
                    row[j] = &row[j] / &g;
                }
            }
            changed = true;
        }
        if changed {
            cur = transform(&t);
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| !cur[i][i].is_zero()).collect();
    order.extend((0..n).filter(|&i| cur[i][i].is_zero()));
    let t2: Vec<Vec<BigInt>> = t.iter().map(|row| order.iter().map(|&j| row[j].clone()).collect()).collect();
    let diag = order.iter().map(|&i| cur[i][i].clone()).collect();
    (t2, diag)
}

/// Change of fibre variables x = T u after which the last nx − r of the
/// u-variables occur at most linearly in C.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearBlock {
    pub change: Vec<Vec<BigInt>>,
    pub combination: Vec<BigInt>,
    pub diagonal: Vec<BigInt>,
    pub transformed: IntPolynomial,
    /// Global indices of the variables certified to occur linearly.
    pub linear_variables: Vec<usize>,
    pub second_partials_checked: usize,
}

/// Vectors of [−radius, radius]^h ordered by max-norm, then lexicographically.
pub(crate) fn small_combinations(h: usize, radius: i64, cap: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    if h == 0 {
        return out;
    }
    for s in 1..=radius {
        let mut v = vec![-s; h];
        'outer: loop {
            if v.iter().any(|x| x.abs() == s) {
                out.push(v.clone());
                if out.len() >= cap {
                    return out;
                }
            }
            let mut i = h;
            loop {
                if i == 0 {
                    break 'outer;
                }
                i -= 1;
                if v[i] < s {
                    v[i] += 1;
                    break;
                }
                v[i] = -s;
            }
        }
    }
    out
}

/// Find a combination Σ c_k F_k of rank r, diagonalize it, and certify that
/// all second partials in the trailing nx − r variables vanish.
pub fn extract_linear_block(fd: &FibrationData, search_radius: i64) -> Result<LinearBlock> {
    let nx = fd.nx();
    let h = fd.h();
    let r = fd.r();
    if r >= nx {
        return Ok(LinearBlock {
            change: (0..nx).map(|i| super::unit(nx, i)).collect(),
            combination: vec![BigInt::zero(); h],
            diagonal: vec![],
            transformed: fd.cubic.clone(),
            linear_variables: vec![],
            second_partials_checked: 0,
        });
    }
    let mut chosen = None;
    if r == 0 {
        chosen = Some(vec![BigInt::zero(); h]);
    } else {
        let units = (0..h).map(|i| (0..h).map(|j| i64::from(i == j)).collect());
        for c in units.chain(small_combinations(h, search_radius, 200_000)) {
            let cb: Vec<BigInt> = c.iter().map(|&v| BigInt::from(v)).collect();
            if int_rank(&fd.m2.combine(&cb)) == r {
                chosen = Some(cb);
                break;
            }
        }
    }
    let combination = chosen.ok_or_else(|| {
        Error::Unresolved(format!("no combination of rank {r} within radius {search_radius}"))
    })?;
    let a = fd.m2.combine(&combination);
    let (t, diag) = int_congruence_diagonalize(&a);
    let transformed = substitute_on_block(&fd.cubic, &fd.split.x_indices, &t)?;
    let mut checked = 0;
    for a_i in r..nx {
        for b_i in a_i..nx {
            let xa = fd.split.x_indices[a_i];
            let xb = fd.split.x_indices[b_i];
            let d2 = transformed.derivative(xa).derivative(xb);
            checked += 1;
            if !d2.is_zero() {
                let polys = fd.m2.to_polys();
                let detail = match first_nonzero_minor(&polys, r + 1) {
                    Some((ri, ci, m)) => format!("order-{} minor rows {ri:?} cols {ci:?} equals {m}", r + 1),
                    None => "no nonzero minor found".to_string(),
                };
                return Err(Error::RankContradiction(format!(
                    "second partial in variables {xa},{xb} is {d2}; {detail}"
                )));
            }
        }
    }
    Ok(LinearBlock {
        change: t,
        combination,
        diagonal: diag[..r].to_vec(),
        transformed,
        linear_variables: fd.split.x_indices[r..].to_vec(),
        second_partials_checked: checked,
    })
}

// ---------------------------------------------------------------------------
// Proportional bundles.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct H1Report {
    pub holds: bool,
    pub proportional: bool,
    pub l: Option<Vec<BigInt>>,
    /// F(x) in the fibre variables with Q_y(x) = l(y) F(x).
    pub f: Option<IntPolynomial>,
    pub signature: Option<(usize, usize, usize)>,
    pub semidefinite: bool,
    /// F is definite on the span of its support (rank equals nx).
    pub definite: bool,
    pub certificate_verified: bool,
}

/// Test whether Q_y = l(y) F(x) with F semidefinite of rank r.
pub fn detect_hypothesis_h1(fd: &FibrationData) -> Result<H1Report> {
    let nx = fd.nx();
    let entries = &fd.m2.entries;
    let mut report = H1Report {
        holds: false,
        proportional: false,
        l: None,
        f: None,
        signature: None,
        semidefinite: false,
        definite: false,
        certificate_verified: false,
    };
    let Some(first) = entries.iter().flatten().find(|e| e.iter().any(|c| !c.is_zero())) else {
        return Ok(report);
    };
    let l = normalize_int(first.clone());
    let piv = l.iter().position(|c| !c.is_zero()).expect("nonzero form");
    let mut lambda = vec![vec![BigInt::zero(); nx]; nx];
    for i in 0..nx {
        for j in 0..nx {
            let e = &entries[i][j];
            for a in 0..l.len() {
                for b in (a + 1)..l.len() {
                    if &e[a] * &l[b] != &e[b] * &l[a] {
                        return Ok(report);
                    }
                }
            }
            lambda[i][j] = &e[piv] / &l[piv];
        }
    }
    report.proportional = true;
    let mut f = IntPolynomial::zero(nx);
    for i in 0..nx {
        let mut e = vec![0u32; nx];
        e[i] = 2;
        f.add_term(Monomial(e), &lambda[i][i] / 2);
        for j in (i + 1)..nx {
            let mut e = vec![0u32; nx];
            e[i] = 1;
            e[j] = 1;
            f.add_term(Monomial(e), lambda[i][j].clone());
        }
    }
    let n = fd.split.n();
    let l_poly = IntPolynomial::linear_form(&l).embed(n, &fd.split.y_indices)?;
    let f_emb = f.embed(n, &fd.split.x_indices)?;
    let diff = &fd.q_y()? - &(&l_poly * &f_emb);
    report.certificate_verified = diff.is_zero();
    let sig = RationalMatrix::from_int_rows(&lambda)?.rank_signature()?;
    report.semidefinite = sig.1 == 0 || sig.2 == 0;
    report.definite = report.semidefinite && sig.0 == nx;
    report.holds = report.semidefinite && sig.0 == fd.r() && report.certificate_verified;
    report.signature = Some(sig);
    report.l = Some(l);
    report.f = Some(f);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Indefinite witnesses.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndefiniteWitness {
    pub point: Vec<BigInt>,
    pub inertia: (usize, usize, usize),
    pub minor_value: BigInt,
    /// Radius ρ such that the witness minor has the sign of its value at
    /// the point on every corner of the box of radius ρ around it. Not a
    /// proof for interior points.
    pub radius: BigRational,
    pub attempts: usize,
}

fn candidate_points(h: usize) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for i in 0..h {
        let mut v = vec![0; h];
        v[i] = 1;
        out.push(v);
    }
    for i in 0..h {
        for j in (i + 1)..h {
            for s in [-1, 1] {
                let mut v = vec![0; h];
                v[i] = 1;
                v[j] = s;
                out.push(v);
            }
        }
    }
    let mut alt = vec![0; h];
    for (i, a) in alt.iter_mut().enumerate() {
        *a = if i % 2 == 0 { 1 } else { -1 };
    }
    out.push(alt);
    out
}

fn corner_signs_agree(minor: &IntPolynomial, u: &[BigInt], d: &BigInt, sign: i32, rng: &mut ChaCha8Rng) -> bool {
    let h = u.len();
    let corners: Box<dyn Iterator<Item = Vec<i64>>> = if h <= 12 {
        Box::new((0..(1u64 << h)).map(move |mask| (0..h).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect()))
    } else {
        let picks: Vec<Vec<i64>> =
            (0..4096).map(|_| (0..h).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect()).collect();
        Box::new(picks.into_iter())
    };
    for s in corners {
        let pt: Vec<BigInt> = u.iter().zip(&s).map(|(ui, si)| ui * d + BigInt::from(*si)).collect();
        let v = minor.evaluate(&pt).expect("arity");
        let sv = if v.is_positive() { 1 } else if v.is_negative() { -1 } else { 0 };
        if sv != sign {
            return false;
        }
    }
    true
}

/// Search for y with rank M[y] = r and Q_y indefinite, then a box radius.
pub fn indefinite_witness(fd: &FibrationData, cfg: RankConfig) -> Result<IndefiniteWitness> {
    let r = fd.r();
    if r == 0 {
        return Err(Error::Precondition("rank must be at least one".into()));
    }
    if detect_hypothesis_h1(fd)?.holds {
        return Err(Error::Precondition("bundle is proportional and semidefinite".into()));
    }
    let h = fd.h();
    let minor = &fd.rank.witness_minor;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let budget = cfg.trials.max(1) * 1000;
    let mut cands = candidate_points(h).into_iter();
    for attempt in 0..budget {
        let u: Vec<i64> = match cands.next() {
            Some(c) => c,
            None => (0..h).map(|_| rng.gen_range(-10..=10)).collect(),
        };
        let ub: Vec<BigInt> = u.iter().map(|&v| BigInt::from(v)).collect();
        let mv = minor.evaluate(&ub)?;
        if mv.is_zero() {
            continue;
        }
        let mat = fd.m2.combine(&ub);
        let sig = RationalMatrix::from_int_rows(&mat)?.rank_signature()?;
        if sig.0 != r || sig.1 == 0 || sig.2 == 0 {
            continue;
        }
        let sign = if mv.is_positive() { 1 } else { -1 };
        let mut d = BigInt::from(2);
        let mut radius = None;
        for _ in 0..20 {
            if corner_signs_agree(minor, &ub, &d, sign, &mut rng) {
                radius = Some(BigRational::new(BigInt::one(), d.clone()));
                break;
            }
            d *= 2;
        }
        let Some(radius) = radius else { continue };
        return Ok(IndefiniteWitness { point: ub, inertia: sig, minor_value: mv, radius, attempts: attempt + 1 });
    }
    Err(Error::SearchExhausted(format!("no indefinite point after {budget} attempts")))
}

// ---------------------------------------------------------------------------
// Common linear factors of quadratic forms.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommonLinearFactor {
    pub l: Vec<BigInt>,
    /// Linear forms l_i with Q_i = l · l_i (zero where Q_i = 0).
    pub quotients: Vec<Vec<BigInt>>,
}

/// Primitive integer linear forms dividing a quadratic form over Q.
pub fn quadratic_linear_factors(q: &IntPolynomial) -> Result<Vec<Vec<BigInt>>> {
    if q.is_zero() {
        return Ok(vec![]);
    }
    let qp = QuadraticPolynomial::from_polynomial(q)?;
    let mat = qp.q_matrix();
    let (rank, _, _) = mat.rank_signature()?;
    let h = q.num_vars();
    let mut cands = Vec::new();
    match rank {
        1 => {
            let row = qp.q2.iter().find(|r| r.iter().any(|c| !c.is_zero())).expect("rank one");
            cands.push(normalize_int(row.clone()));
        }
        2 => {
            let cong = mat.congruence_diagonalize()?;
            let pinv = cong.p.inverse()?;
            let nz: Vec<usize> = (0..h).filter(|&i| !cong.diagonal[i].is_zero()).collect();
            let (i1, i2) = (nz[0], nz[1]);
            let ratio = -&cong.diagonal[i2] / &cong.diagonal[i1];
            if let (Some(a), Some(b)) =
                (crate::arith::exact_sqrt(ratio.numer()), crate::arith::exact_sqrt(ratio.denom()))
            {
                if !ratio.is_negative() {
                    let t = BigRational::new(a, b);
                    let z1 = pinv.row(i1);
                    let z2 = pinv.row(i2);
                    for s in [BigRational::one(), -BigRational::one()] {
                        let v: Vec<BigRational> =
                            z1.iter().zip(&z2).map(|(x, y)| x + &s * &t * y).collect();
                        cands.push(primitive_integer(&v));
                    }
                }
            }
        }
        _ => {}
    }
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    for c in cands {
        if out.contains(&c) {
            continue;
        }
        if q.exact_div(&IntPolynomial::linear_form(&c)).is_some() {
            out.push(c);
        }
    }
    Ok(out)
}

/// A linear form dividing every one of the given quadratic forms.
pub fn common_linear_factor(qs: &[IntPolynomial]) -> Result<Option<CommonLinearFactor>> {
    let Some(first) = qs.iter().find(|q| !q.is_zero()) else {
        return Err(Error::Degenerate("all quadratic forms vanish".into()));
    };
    for l in quadratic_linear_factors(first)? {
        let lp = IntPolynomial::linear_form(&l);
        let mut quotients = Vec::with_capacity(qs.len());
        let mut ok = true;
        for q in qs {
            if q.is_zero() {
                quotients.push(vec![BigInt::zero(); l.len()]);
                continue;
            }
            match q.exact_div(&lp).and_then(|d| d.linear_coefficients()) {
                Some(c) => quotients.push(c),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(Some(CommonLinearFactor { l, quotients }));
        }
    }
    Ok(None)
}

/// For C = Σ x_i Q_i(y) + R(y), a linear form l(y) dividing every Q_i.
pub fn detect_common_linear_factor_qi(c: &IntPolynomial, split: &VariableSplit) -> Result<Option<CommonLinearFactor>> {
    let d = decompose_linear_fibre(c, split)?;
    common_linear_factor(&d.q)
}

// ---------------------------------------------------------------------------
// Rank-two bundles over Q(x).

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rank2Shape {
    /// scale · Ψ = a11 z1² + a12 z1 z2 + a22 z2², z_i integer forms in y,
    /// a_ij integer forms in x.
    Option1 {
        z: [Vec<BigInt>; 2],
        scale: BigInt,
        a11: Vec<BigInt>,
        a12: Vec<BigInt>,
        a22: Vec<BigInt>,
    },
    /// In coordinates w = P y (rows of P), Ψ = (w1 + κ w2)(a11(x)(w1 − κ w2)
    /// + Σ_{i≥3} a1i(x) w_i). `a1` holds a11 followed by a13, a14, ….
    Exps2Psi {
        kappa: BigRational,
        coordinates: Vec<Vec<BigRational>>,
        a1: Vec<Vec<BigRational>>,
        kappa_recovered_directly: bool,
    },
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank2Report {
    pub rank_over_function_field: usize,
    pub shape: Rank2Shape,
    pub identity_verified: bool,
    pub delta_relations_verified: Option<bool>,
    pub geometrically_integral: bool,
}

/// Integer polynomial proportional to Σ_ij B_ij x_i y_j in v + h variables,
/// along with the scale applied.
fn bilinear_poly(b: &[Vec<BigRational>], v: usize, h: usize) -> (IntPolynomial, BigInt) {
    let den = b.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut p = IntPolynomial::zero(v + h);
    for i in 0..v {
        for j in 0..h {
            let c = (&b[i][j] * rat(&den)).to_integer();
            if c.is_zero() {
                continue;
            }
            let mut e = vec![0u32; v + h];
            e[i] = 1;
            e[v + j] = 1;
            p.add_term(Monomial(e), c);
        }
    }
    (p, den)
}

fn y_form_poly(l: &[BigRational], v: usize) -> (IntPolynomial, BigInt) {
    let den = l.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let h = l.len();
    let mut p = IntPolynomial::zero(v + h);
    for (j, c) in l.iter().enumerate() {
        let c = (c * rat(&den)).to_integer();
        if !c.is_zero() {
            p.add_term(Monomial::var(v + h, v + j), c);
        }
    }
    (p, den)
}

fn psi_poly(psi: &[IntPolynomial], h: usize) -> Result<IntPolynomial> {
    let v = psi.len();
    let ymap: Vec<usize> = (v..v + h).collect();
    let mut out = IntPolynomial::zero(v + h);
    for (i, q) in psi.iter().enumerate() {
        out = &out + &(&IntPolynomial::var(v + h, i) * &q.embed(v + h, &ymap)?);
    }
    Ok(out)
}

/// Check E_11 E_ij = E_1i E_1j for E_ij = A_00 A_ij − A_0i A_0j, i, j ≥ 1.
fn delta_relations(a: &[Vec<IntPolynomial>]) -> bool {
    let h = a.len();
    if h < 3 {
        return true;
    }
    let e = |i: usize, j: usize| &(&a[0][0] * &a[i][j]) - &(&a[0][i] * &a[0][j]);
    let e11 = e(1, 1);
    for i in 1..h {
        for j in i..h {
            let lhs = &e11 * &e(i, j);
            let rhs = &e(1, i) * &e(1, j);
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

fn option1_shape(pencil: &LinearFormMatrix, psi_full: &IntPolynomial) -> Result<Option<(Rank2Shape, bool)>> {
    let h = pencil.dim;
    let v = pencil.num_params;
    let stacked: Vec<Vec<BigInt>> = (0..h)
        .map(|i| (0..v).flat_map(|k| (0..h).map(move |j| (k, j))).map(|(k, j)| pencil.entries[i][j][k].clone()).collect())
        .collect();
    let (rank, _, cols) = int_rank_with_pivots(&stacked);
    if rank > 2 {
        return Ok(None);
    }
    let w: Vec<Vec<BigInt>> = cols.iter().map(|&c| normalize_int((0..h).map(|i| stacked[i][c].clone()).collect())).collect();
    if w.len() != 2 {
        return Ok(None);
    }
    let wm = RationalMatrix::from_int_rows(&(0..h).map(|i| vec![w[0][i].clone(), w[1][i].clone()]).collect::<Vec<_>>())?;
    let g_inv = wm.transpose().mul(&wm)?.inverse()?;
    let mut coeffs = [vec![BigRational::zero(); v], vec![BigRational::zero(); v], vec![BigRational::zero(); v]];
    for k in 0..v {
        let a = RationalMatrix::from_int_rows(&pencil.slice(k))?;
        let s = g_inv.mul(&wm.transpose())?.mul(&a)?.mul(&wm)?.mul(&g_inv)?;
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        coeffs[0][k] = s.get(0, 0) * &half;
        coeffs[1][k] = s.get(0, 1).clone();
        coeffs[2][k] = s.get(1, 1) * &half;
    }
    let den = coeffs.iter().flatten().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<Vec<BigInt>> =
        coeffs.iter().map(|c| c.iter().map(|x| (x * rat(&den)).to_integer()).collect()).collect();
    let ymap: Vec<usize> = (v..v + h).collect();
    let z1 = IntPolynomial::linear_form(&w[0]).embed(v + h, &ymap)?;
    let z2 = IntPolynomial::linear_form(&w[1]).embed(v + h, &ymap)?;
    let xmap: Vec<usize> = (0..v).collect();
    let a = |c: &Vec<BigInt>| IntPolynomial::linear_form(c).embed(v + h, &xmap);
    let rhs = &(&(&a(&ints[0])? * &z1) * &z1) + &(&(&(&a(&ints[1])? * &z1) * &z2) + &(&(&a(&ints[2])? * &z2) * &z2));
    let verified = rhs == psi_full.scale(&den);
    Ok(Some((
        Rank2Shape::Option1 {
            z: [w[0].clone(), w[1].clone()],
            scale: den,
            a11: ints[0].clone(),
            a12: ints[1].clone(),
            a22: ints[2].clone(),
        },
        verified,
    )))
}

fn exps2psi_shape(psi: &[IntPolynomial], h: usize, psi_full: &IntPolynomial) -> Result<(Rank2Shape, bool)> {
    let v = psi.len();
    let factor = common_linear_factor(psi)?
        .ok_or_else(|| Error::FalsificationAlarm("rank-two bundle matches neither shape: no common linear factor".into()))?;
    let l: Vec<BigRational> = factor.l.iter().map(rat).collect();
    let li: Vec<Vec<BigRational>> = factor.quotients.iter().map(|q| q.iter().map(rat).collect()).collect();
    let span_basis = extend_basis(vec![], &li, h);
    let dim_v = span_basis.len();
    let (kappa, coords, direct): (BigRational, Vec<Vec<BigRational>>, bool);
    let support_12 = h >= 2 && l[0] != BigRational::zero() && l.iter().skip(2).all(|c| c.is_zero());
    let direct_ok = support_12 && {
        let k = &l[1] / &l[0];
        li.iter().all(|f| f[1] == -&k * &f[0])
    };
    if direct_ok {
        kappa = &l[1] / &l[0];
        coords = (0..h).map(|i| unit_rat(h, i)).collect();
        direct = true;
    } else if dim_v >= h {
        return Err(Error::FalsificationAlarm(
            "rank-two bundle matches neither shape: quotient forms span every linear form".into(),
        ));
    } else if rank_of_vectors(&[span_basis.clone(), vec![l.clone()]].concat()) > dim_v {
        // l outside V: κ = 1 with w1 + w2 = l and w1 − w2 inside a hyperplane containing V.
        let units: Vec<Vec<BigRational>> = (0..h).map(|i| unit_rat(h, i)).collect();
        let with_l = extend_basis([span_basis.clone(), vec![l.clone()]].concat(), &units, h);
        let hyper: Vec<Vec<BigRational>> = with_l.iter().enumerate().filter(|(i, _)| *i != dim_v).map(|(_, b)| b.clone()).collect();
        let g = &hyper[0];
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let w1: Vec<BigRational> = l.iter().zip(g).map(|(a, b)| (a + b) * &half).collect();
        let w2: Vec<BigRational> = l.iter().zip(g).map(|(a, b)| (a - b) * &half).collect();
        let mut c = vec![w1, w2];
        c.extend(hyper[1..].iter().cloned());
        kappa = BigRational::one();
        coords = c;
        direct = false;
    } else {
        // l inside V: κ = 0, w1 = l, V inside span{w1, w3, …}.
        let units: Vec<Vec<BigRational>> = (0..h).map(|i| unit_rat(h, i)).collect();
        let hyper = extend_basis(extend_basis(vec![l.clone()], &span_basis, h), &units, h - 1);
        let full = extend_basis(hyper.clone(), &units, h);
        let mut c = vec![hyper[0].clone(), full[h - 1].clone()];
        c.extend(hyper[1..].iter().cloned());
        kappa = BigRational::zero();
        coords = c;
        direct = false;
    }
    // Express each quotient l_i = c · (w1 − κ w2) + Σ_{j≥3} c_j w_j.
    let scale_l = if direct { l[0].clone() } else { BigRational::one() };
    let mut basis = vec![coords[0].iter().zip(&coords[1]).map(|(a, b)| a - &kappa * b).collect::<Vec<_>>()];
    basis.extend(coords[2..].iter().cloned());
    let mut a1 = vec![vec![BigRational::zero(); v]; h - 1];
    for (i, f) in li.iter().enumerate() {
        let cf = coordinates(&basis, f).ok_or_else(|| {
            Error::FalsificationAlarm("quotient form outside the normalized hyperplane".into())
        })?;
        for (j, c) in cf.into_iter().enumerate() {
            a1[j][i] = c * &scale_l;
        }
    }
    // Verify Ψ = (w1 + κ w2)(a11 (w1 − κ w2) + Σ a1j w_j) exactly.
    let first: Vec<BigRational> = coords[0].iter().zip(&coords[1]).map(|(a, b)| a + &kappa * b).collect();
    let mut bil = vec![vec![BigRational::zero(); h]; v];
    for (j, bj) in basis.iter().enumerate() {
        for i in 0..v {
            for t in 0..h {
                bil[i][t] += &a1[j][i] * &bj[t];
            }
        }
    }
    let (p1, d1) = y_form_poly(&first, v);
    let (p2, d2) = bilinear_poly(&bil, v, h);
    let verified = &p1 * &p2 == psi_full.scale(&(d1 * d2));
    Ok((Rank2Shape::Exps2Psi { kappa, coordinates: coords, a1, kappa_recovered_directly: direct }, verified))
}

/// Rank of Ψ = Σ x_i ψ_i(y) over Q(x) and, in rank two, its shape.
pub fn classify_rank2_bundle(psi: &[IntPolynomial], cfg: RankConfig) -> Result<Rank2Report> {
    let v = psi.len();
    let h = psi.first().map(|q| q.num_vars()).unwrap_or(0);
    if psi.iter().any(|q| q.num_vars() != h || (!q.is_zero() && (!q.is_homogeneous() || q.total_degree() != 2))) {
        return Err(Error::Precondition("each ψ_i must be a quadratic form in the same y-variables".into()));
    }
    let psi_full = psi_poly(psi, h)?;
    let pencil = hessian_pencil(psi, h);
    let rank = fibration_rank(&pencil, cfg)?.rank;
    let mut report = Rank2Report {
        rank_over_function_field: rank,
        shape: Rank2Shape::None,
        identity_verified: false,
        delta_relations_verified: None,
        geometrically_integral: false,
    };
    if rank == 2 {
        report.delta_relations_verified = Some(delta_relations(&pencil.to_polys()));
        let (shape, verified) = match option1_shape(&pencil, &psi_full)? {
            Some(s) => s,
            None => exps2psi_shape(psi, h, &psi_full)?,
        };
        if !verified {
            return Err(Error::FalsificationAlarm("rank-two factorization identity failed".into()));
        }
        report.shape = shape;
        report.identity_verified = true;
    } else if rank >= 3 {
        let coeff_vectors: Vec<Vec<BigInt>> = psi
            .iter()
            .map(|q| {
                let qp = QuadraticPolynomial::from_polynomial(q).expect("quadratic");
                qp.q2.into_iter().flatten().collect()
            })
            .collect();
        let nondegenerate = v >= 2 && int_rank(&coeff_vectors) == v;
        let no_linear = common_linear_factor(psi)?.is_none();
        report.geometrically_integral = nondegenerate && no_linear;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Common factors of order-3 minors.

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order3Status {
    LinearFactor,
    NoCommonFactor,
    /// Restrictions to a random line share a root but no linear factor
    /// divides every minor.
    NonlinearSuspected,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order3Report {
    pub minors_nonzero: usize,
    pub status: Order3Status,
    pub factor: Option<Vec<BigInt>>,
    /// Rows of S with z = S y, first row the factor.
    pub change: Option<Vec<Vec<BigInt>>>,
    /// det(S) · M[S⁻¹ z] as a pencil in z.
    pub normalized_bundle: Option<LinearFormMatrix>,
    pub slice_rank_le2_verified: bool,
    pub probe: Option<CodimProbe>,
}

fn rational_horner(c: &[BigInt], x: &BigRational) -> BigRational {
    c.iter().rev().fold(BigRational::zero(), |acc, a| acc * x + rat(a))
}

/// Rational roots of Σ c_i s^i.
pub fn rational_roots(c: &[BigInt]) -> Result<Vec<BigRational>> {
    let mut c: Vec<BigInt> = c.to_vec();
    while c.last().map(|x| x.is_zero()).unwrap_or(false) {
        c.pop();
    }
    let mut out = Vec::new();
    if c.len() <= 1 {
        return Ok(out);
    }
    if c[0].is_zero() {
        out.push(BigRational::zero());
        while c[0].is_zero() {
            c.remove(0);
        }
    }
    if c.len() <= 1 {
        return Ok(out);
    }
    let ps = divisors(&c[0])?;
    let qs = divisors(c.last().unwrap())?;
    for p in &ps {
        for q in &qs {
            for s in [1i32, -1] {
                let x = BigRational::new(p * BigInt::from(s), q.clone());
                if !out.contains(&x) && rational_horner(&c, &x).is_zero() {
                    out.push(x);
                }
            }
        }
    }
    Ok(out)
}

/// Univariate coefficients of φ(s P + Q).
fn restrict_to_line(phi: &IntPolynomial, p: &[BigInt], q: &[BigInt]) -> Result<Vec<BigInt>> {
    let images: Vec<IntPolynomial> = p
        .iter()
        .zip(q)
        .map(|(a, b)| {
            let mut t = IntPolynomial::constant(1, b.clone());
            t.add_term(Monomial(vec![1]), a.clone());
            t
        })
        .collect();
    let u = phi.substitute(&images)?;
    let d = u.total_degree() as usize;
    Ok((0..=d).map(|k| u.coeff(&[k as u32])).collect())
}

/// Primitive integer linear forms dividing a homogeneous polynomial.
pub fn linear_factors(phi: &IntPolynomial) -> Result<Vec<Vec<BigInt>>> {
    let h = phi.num_vars();
    if phi.is_zero() || phi.total_degree() == 0 {
        return Ok(vec![]);
    }
    if h == 1 {
        return Ok(vec![vec![BigInt::one()]]);
    }
    // Base point with small nonzero value.
    let mut best: Option<(BigInt, Vec<BigInt>)> = None;
    for c in small_combinations(h, 2, 5000) {
        let pt: Vec<BigInt> = c.iter().map(|&v| BigInt::from(v)).collect();
        let val = phi.evaluate(&pt)?.abs();
        if val.is_zero() {
            continue;
        }
        if best.as_ref().map(|(b, _)| &val < b).unwrap_or(true) {
            best = Some((val, pt));
        }
    }
    let Some((_, p)) = best else { return Ok(vec![]) };
    let i0 = (0..h).filter(|&i| !p[i].is_zero()).min_by_key(|&i| p[i].abs()).expect("nonzero point");
    let others: Vec<usize> = (0..h).filter(|&i| i != i0).collect();
    let mut root_sets = Vec::with_capacity(others.len());
    for &k in &others {
        let q = super::unit(h, k);
        let roots = rational_roots(&restrict_to_line(phi, &p, &q)?)?;
        if roots.is_empty() {
            return Ok(vec![]);
        }
        root_sets.push(roots);
    }
    let total: usize = root_sets.iter().map(|r| r.len()).product();
    if total > 20_000 {
        return Err(Error::BudgetExceeded { needed: total as u128, budget: 20_000 });
    }
    let mut out: Vec<Vec<BigInt>> = Vec::new();
    let mut idx = vec![0usize; root_sets.len()];
    loop {
        let mut l = vec![BigRational::zero(); h];
        let mut acc = BigRational::one();
        for (t, &k) in others.iter().enumerate() {
            l[k] = -root_sets[t][idx[t]].clone();
            acc -= &l[k] * rat(&p[k]);
        }
        l[i0] = acc / rat(&p[i0]);
        let li = primitive_integer(&l);
        if !out.contains(&li) && phi.exact_div(&IntPolynomial::linear_form(&li)).is_some() {
            out.push(li);
        }
        let mut t = 0;
        loop {
            if t == idx.len() {
                return Ok(out);
            }
            idx[t] += 1;
            if idx[t] < root_sets[t].len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
        if idx.is_empty() {
            return Ok(out);
        }
    }
}

fn rat_poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db && !r.is_empty() {
        let lead = r.last().unwrap().clone() / b[db].clone();
        let shift = r.len() - 1 - db;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] -= &lead * bc;
        }
        r.pop();
        while r.last().map(|x| x.is_zero()).unwrap_or(false) {
            r.pop();
        }
    }
    r
}

/// Degree of the gcd of univariate rational polynomials.
fn univariate_gcd_degree(polys: &[Vec<BigInt>]) -> usize {
    let mut g: Option<Vec<BigRational>> = None;
    for p in polys {
        let mut b: Vec<BigRational> = p.iter().map(rat).collect();
        while b.last().map(|x| x.is_zero()).unwrap_or(false) {
            b.pop();
        }
        if b.is_empty() {
            continue;
        }
        g = Some(match g {
            None => b,
            Some(mut a) => {
                while !b.is_empty() {
                    let r = rat_poly_rem(&a, &b);
                    a = b;
                    b = r;
                }
                a
            }
        });
    }
    g.map(|x| x.len().saturating_sub(1)).unwrap_or(0)
}

/// Common linear factor of all order-3 minors of M[y], the normalized
/// bundle when one exists, and a point-count probe of {rank M[y] ≤ 2}.
pub fn order3_minor_common_factor(
    fd: &FibrationData,
    probe_primes: &[u64],
    cfg: RankConfig,
) -> Result<Order3Report> {
    let r = fd.r();
    if r < 3 {
        return Err(Error::Precondition(format!("rank {r} has no nonzero order-3 minors")));
    }
    let polys = fd.m2.to_polys();
    let minors = nonzero_minors(&polys, 3);
    let h = fd.h();
    let probe = if probe_primes.is_empty() {
        None
    } else {
        Some(codim_probe(&fd.m2, probe_primes, 2, 400_000, cfg.seed)?)
    };
    let mut report = Order3Report {
        minors_nonzero: minors.len(),
        status: Order3Status::NoCommonFactor,
        factor: None,
        change: None,
        normalized_bundle: None,
        slice_rank_le2_verified: false,
        probe,
    };
    let seed_minor = minors.iter().min_by_key(|(_, _, m)| m.num_terms()).map(|(_, _, m)| m.clone());
    let Some(seed_minor) = seed_minor else { return Ok(report) };
    for l in linear_factors(&seed_minor)? {
        let lp = IntPolynomial::linear_form(&l);
        if minors.iter().all(|(_, _, m)| m.exact_div(&lp).is_some()) {
            let i0 = (0..h).filter(|&i| !l[i].is_zero()).min_by_key(|&i| l[i].abs()).expect("nonzero");
            let mut s = vec![l.clone()];
            s.extend((0..h).filter(|&j| j != i0).map(|j| super::unit(h, j)));
            let (adj, _det) = RationalMatrix::from_int_rows(&s)?.adjugate_and_det()?;
            let adj_int: Vec<Vec<BigInt>> =
                adj.to_rows().iter().map(|row| row.iter().map(|x| x.to_integer()).collect()).collect();
            let normalized = fd.m2.reparametrize(&adj_int);
            let mut slice = LinearFormMatrix::zeros(normalized.dim, h - 1);
            for i in 0..normalized.dim {
                for j in 0..normalized.dim {
                    slice.entries[i][j] = normalized.entries[i][j][1..].to_vec();
                }
            }
            let mut vanish = true;
            for_each_minor(&slice.to_polys(), 3, |_, _, m| {
                vanish = m.is_zero();
                vanish
            });
            report.status = Order3Status::LinearFactor;
            report.factor = Some(l);
            report.change = Some(s);
            report.normalized_bundle = Some(normalized);
            report.slice_rank_le2_verified = vanish;
            return Ok(report);
        }
    }
    if minors.len() >= 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37);
        let p: Vec<BigInt> = (0..h).map(|_| BigInt::from(rng.gen_range(-50..=50))).collect();
        let q: Vec<BigInt> = (0..h).map(|_| BigInt::from(rng.gen_range(-50..=50))).collect();
        let restricted: Vec<Vec<BigInt>> =
            minors.iter().map(|(_, _, m)| restrict_to_line(m, &p, &q)).collect::<Result<_>>()?;
        if univariate_gcd_degree(&restricted) > 0 {
            if r >= 5 {
                return Err(Error::Unresolved(
                    "order-3 minors share a nonlinear factor, outside the analysed case".into(),
                ));
            }
            report.status = Order3Status::NonlinearSuspected;
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Aggregate classification.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeClassification {
    pub h1_semidefinite: bool,
    pub h1: Option<H1Report>,
    pub common_linear_factor_qi: Option<CommonLinearFactor>,
    pub order3: Option<Order3Report>,
    pub rank2: Option<Rank2Report>,
    pub linear_block_size: usize,
}

impl ShapeClassification {
    /// Run the detectors appropriate to the split's mode.
    pub fn analyze(c: &IntPolynomial, split: &VariableSplit, cfg: RankConfig) -> Result<(Option<FibrationData>, Self)> {
        match split.mode {
            FibrationMode::PiPrime => {
                let d = decompose_linear_fibre(c, split)?;
                let factor = if d.q.iter().all(|q| q.is_zero()) { None } else { common_linear_factor(&d.q)? };
                let rank2 = if d.q.iter().all(|q| q.is_zero()) { None } else { Some(classify_rank2_bundle(&d.q, cfg)?) };
                Ok((
                    None,
                    ShapeClassification {
                        h1_semidefinite: false,
                        h1: None,
                        common_linear_factor_qi: factor,
                        order3: None,
                        rank2,
                        linear_block_size: split.x_indices.len(),
                    },
                ))
            }
            FibrationMode::Pi => {
                let fd = super::build_fibration(c, split, cfg)?;
                let h1 = detect_hypothesis_h1(&fd)?;
                let order3 = if fd.r() >= 3 { Some(order3_minor_common_factor(&fd, &[], cfg)?) } else { None };
                let cls = ShapeClassification {
                    h1_semidefinite: h1.holds,
                    h1: Some(h1),
                    common_linear_factor_qi: None,
                    order3,
                    rank2: None,
                    linear_block_size: fd.nx() - fd.r(),
                };
                Ok((Some(fd), cls))
            }
        }
    }
}
