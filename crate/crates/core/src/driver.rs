//! End-to-end experiments: form documents, exact and fibration-based point
//! counts, coprime representation numbers, exponent fits and JSON reports.

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arith::{isqrt_i128, squarefree_divisors};
use crate::error::{Error, Result};
use crate::fibration::{decompose_linear_fibre, predicted_exponents, RankConfig, ShapeClassification, ShapeTag};
use crate::forms::{FibrationMode, IntPolynomial, Monomial, QuadraticPolynomial, VariableSplit};
use crate::lattice::{unit_ball_volume_f64, HyperplaneEnumerator};
use crate::sieve::{enumerate_admissible, fibre_quadratic, AdmissibleSetSpec, FastPoly};

// ---------------------------------------------------------------------------
// Form documents.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormTerm {
    pub exponents: Vec<u32>,
    /// Integer coefficient as a decimal string.
    pub coefficient: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub x_vars: Vec<usize>,
    pub y_vars: Vec<usize>,
    pub mode: FibrationMode,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_h: Option<usize>,
}

/// JSON description of a cubic form with an optional variable split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormDocument {
    pub n: usize,
    pub degree: u32,
    pub terms: Vec<FormTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<FormMetadata>,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

fn json_list<T: ToString>(v: &[T]) -> String {
    let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// 1-based line of the `k`-th occurrence of `needle`, if any.
fn line_of(text: &str, needle: &str, k: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .flat_map(|(i, l)| std::iter::repeat(i + 1).take(l.matches(needle).count()))
        .nth(k)
}

impl FormDocument {
    /// Document for `c`, terms in ascending monomial order.
    pub fn from_polynomial(c: &IntPolynomial, split: Option<&VariableSplit>, metadata: Option<FormMetadata>) -> Self {
        FormDocument {
            n: c.num_vars(),
            degree: c.total_degree(),
            terms: c
                .terms()
                .map(|(m, k)| FormTerm { exponents: m.0.clone(), coefficient: k.to_string() })
                .collect(),
            split: split.map(|s| SplitSpec { x_vars: s.x_indices.clone(), y_vars: s.y_indices.clone(), mode: s.mode }),
            metadata,
        }
    }

    /// Parse and validate; syntax errors and every validation failure carry
    /// the line they refer to.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: FormDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        let mut problems = Vec::new();
        let at = |needle: &str, k: usize| line_of(text, needle, k).unwrap_or(1);
        if doc.degree != 3 {
            problems.push(format!("line {}: degree is {}, expected 3", at("\"degree\"", 0), doc.degree));
        }
        if doc.terms.is_empty() {
            problems.push(format!("line {}: no terms", at("\"terms\"", 0)));
        }
        for (i, t) in doc.terms.iter().enumerate() {
            let line = at("\"exponents\"", i);
            if t.exponents.len() != doc.n {
                problems.push(format!("line {line}: term {} has {} exponents, expected {}", i + 1, t.exponents.len(), doc.n));
            }
            let d: u32 = t.exponents.iter().sum();
            if d != doc.degree || d != 3 {
                problems.push(format!("line {line}: term {} has degree {d}, form is not a homogeneous cubic", i + 1));
            }
            if t.coefficient.trim() != t.coefficient || t.coefficient.parse::<BigInt>().is_err() {
                problems.push(format!("line {line}: term {} coefficient {:?} is not an integer", i + 1, t.coefficient));
            }
        }
        if let Some(s) = &doc.split {
            let line = at("\"split\"", 0);
            let mut seen = vec![false; doc.n];
            for &i in s.x_vars.iter().chain(&s.y_vars) {
                if i >= doc.n {
                    problems.push(format!("line {line}: split index {i} out of range for n = {}", doc.n));
                } else if seen[i] {
                    problems.push(format!("line {line}: split index {i} repeated"));
                } else {
                    seen[i] = true;
                }
            }
            if seen.iter().any(|s| !s) && s.x_vars.len() + s.y_vars.len() <= doc.n {
                problems.push(format!("line {line}: split does not cover all {} variables", doc.n));
            }
        }
        if problems.is_empty() {
            if let (Some(split), Ok(c)) = (doc.variable_split(), doc.polynomial_unchecked()) {
                if let Err(e) = split.validate(&c) {
                    problems.push(format!("line {}: {e}", at("\"split\"", 0)));
                }
            }
        }
        if problems.is_empty() {
            Ok(doc)
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Canonical text: one term per line, two-space indent, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        s.push_str(&format!("  \"n\": {},\n  \"degree\": {},\n  \"terms\": [\n", self.n, self.degree));
        let terms: Vec<String> = self
            .terms
            .iter()
            .map(|t| format!("    {{\"exponents\": {}, \"coefficient\": {}}}", json_list(&t.exponents), json_str(&t.coefficient)))
            .collect();
        s.push_str(&terms.join(",\n"));
        s.push_str("\n  ]");
        if let Some(sp) = &self.split {
            let mode = serde_json::to_string(&sp.mode).expect("mode serialization");
            s.push_str(&format!(
                ",\n  \"split\": {{\"x_vars\": {}, \"y_vars\": {}, \"mode\": {mode}}}",
                json_list(&sp.x_vars),
                json_list(&sp.y_vars)
            ));
        }
        if let Some(m) = &self.metadata {
            s.push_str(&format!(",\n  \"metadata\": {}", serde_json::to_string(m).expect("metadata serialization")));
        }
        s.push_str("\n}\n");
        s
    }

    fn polynomial_unchecked(&self) -> Result<IntPolynomial> {
        let mut p = IntPolynomial::zero(self.n);
        for t in &self.terms {
            let c: BigInt =
                t.coefficient.parse().map_err(|_| Error::Precondition(format!("bad coefficient {}", t.coefficient)))?;
            p.add_term(Monomial(t.exponents.clone()), c);
        }
        Ok(p)
    }

    pub fn polynomial(&self) -> Result<IntPolynomial> {
        let p = self.polynomial_unchecked()?;
        if p.is_zero() || !p.is_homogeneous() || p.total_degree() != 3 {
            return Err(Error::Validation(vec!["terms do not form a homogeneous cubic".into()]));
        }
        Ok(p)
    }

    pub fn variable_split(&self) -> Option<VariableSplit> {
        self.split.as_ref().map(|s| VariableSplit::new(s.x_vars.clone(), s.y_vars.clone(), s.mode))
    }
}

/// Read and validate a form document from disk.
pub fn parse_form(path: &Path) -> Result<FormDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    FormDocument::parse(&text)
}

// ---------------------------------------------------------------------------
// Count series.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPoint {
    pub b: u64,
    pub count: u128,
    /// Fibres counted exactly and fibres replaced by a volume lower bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fibres: Option<FibreTally>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FibreTally {
    pub y_scale: u64,
    pub fibres: u64,
    pub exact: u64,
    pub bounded: u64,
    pub skipped: u64,
    pub samples_verified: u64,
}

/// N(B) for a list of B, together with the counting predicate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    /// "primitive": x ∈ Z^n primitive with |x_i| ≤ B.
    pub predicate: String,
    /// "exact", "lower_bound" or "sampled_lower_bound".
    pub kind: String,
    pub points: Vec<CountPoint>,
    pub config_hash: String,
}

impl CountSeries {
    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[0].b > w[1].b || w[0].count <= w[1].count)
    }

    /// Columns B, count, logB, logN; logN is empty when the count is zero.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("B,count,logB,logN\n");
        for p in &self.points {
            let logn = if p.count > 0 { format!("{:.9}", (p.count as f64).ln()) } else { String::new() };
            s.push_str(&format!("{},{},{:.9},{}\n", p.b, p.count, (p.b as f64).ln(), logn));
        }
        s
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.b as f64, p.count as f64)).collect()
    }
}

/// Hex SHA-256 of the canonical JSON of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let bytes = serde_json::to_vec(config).expect("config serialization");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    num_integer::gcd(a, b)
}

/// Exact counts of primitive zeros of `c` in B[−1, 1]^n for each B.
pub fn brute_force_n(c: &IntPolynomial, bounds: &[u64], budget: u128) -> Result<CountSeries> {
    let n = c.num_vars();
    let bmax = bounds.iter().copied().max().unwrap_or(0);
    let side = 2 * bmax as u128 + 1;
    let size = (0..n).try_fold(1u128, |acc, _| acc.checked_mul(side)).unwrap_or(u128::MAX);
    if size > budget {
        return Err(Error::BudgetExceeded { needed: size, budget });
    }
    let fp = FastPoly::new(c)?;
    let bm = bmax as i64;
    // by_norm[m] = primitive zeros with max |x_i| = m.
    let mut by_norm = vec![0u128; bmax as usize + 1];
    if n > 0 && bmax > 0 {
        let mut x = vec![-bm; n];
        loop {
            let g = x.iter().fold(0i64, |acc, &v| gcd_i64(acc, v));
            if g == 1 && fp.eval(&x).ok_or_else(|| Error::Precondition("value exceeds 128 bits".into()))? == 0 {
                let m = x.iter().map(|v| v.abs()).max().unwrap_or(0) as usize;
                by_norm[m] += 1;
            }
            let mut i = n;
            let done = loop {
                if i == 0 {
                    break true;
                }
                i -= 1;
                if x[i] < bm {
                    x[i] += 1;
                    break false;
                }
                x[i] = -bm;
            };
            if done {
                break;
            }
        }
    }
    let points = bounds
        .iter()
        .map(|&b| CountPoint { b, count: by_norm[..=b as usize].iter().sum(), fibres: None })
        .collect();
    Ok(CountSeries {
        predicate: "primitive".into(),
        kind: "exact".into(),
        points,
        config_hash: config_hash(&("brute_force", c.to_text(), bounds)),
    })
}

// ---------------------------------------------------------------------------
// Fibration lower bounds.

/// Y = ⌊B^{1 − 2ε}⌋, at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct YRule {
    pub epsilon: f64,
}

impl Default for YRule {
    fn default() -> Self {
        YRule { epsilon: 0.05 }
    }
}

impl YRule {
    pub fn scale(&self, b: u64) -> u64 {
        ((b as f64).powf(1.0 - 2.0 * self.epsilon).floor() as u64).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FibrationCountConfig {
    pub y_rule: YRule,
    /// Enumeration nodes allowed per fibre before switching to the volume bound.
    pub per_fibre_nodes: f64,
    /// Budget for the y-box and, in quadric mode, for x-boxes per fibre.
    pub budget: u128,
    /// Fibres per B whose points are re-checked against C = 0.
    pub sample_fibres: u64,
}

impl Default for FibrationCountConfig {
    fn default() -> Self {
        FibrationCountConfig { y_rule: YRule::default(), per_fibre_nodes: 20_000.0, budget: 1 << 26, sample_fibres: 4 }
    }
}

fn to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128().ok_or_else(|| Error::Precondition("value exceeds 128 bits".into()))
}

/// Volume lower (sign = −1) or upper (sign = +1) bound for lattice points of
/// the affine slice ⟨a, x⟩ + b = 0 in the ball of squared radius r2.
fn slice_volume_bound(en: &HyperplaneEnumerator, a_norm: f64, b: f64, r2: f64, sign: f64) -> f64 {
    let k = en.basis().len();
    let d0 = b.abs() / a_norm;
    let rem = r2 - d0 * d0;
    if rem <= 0.0 {
        return if sign > 0.0 { 1.0 } else { 0.0 };
    }
    let mu = 0.5 * en.gs_squared_lengths().iter().sum::<f64>().sqrt();
    let rad = rem.sqrt() + sign * mu;
    if rad <= 0.0 {
        return 0.0;
    }
    unit_ball_volume_f64(k) * rad.powi(k as i32) / a_norm
}

/// Points with ⟨a, x⟩ + b = 0, ‖x‖² ≤ r2, gcd(x, g) = 1, exact when the
/// enumeration is small and otherwise a certified lower bound.
fn fibre_count(
    a: &[BigInt],
    b: &BigInt,
    g: &BigInt,
    r2: i128,
    node_cap: f64,
    mut visit: Option<&mut dyn FnMut(&[i128])>,
) -> Result<(u128, bool)> {
    let en = HyperplaneEnumerator::new(a)?;
    let common = b.gcd(g);
    let divs = if common.is_zero() { vec![(BigInt::one(), 1)] } else { squarefree_divisors(&common)? };
    if en.estimated_nodes(r2 as f64) <= node_cap {
        let mut total: i128 = 0;
        for (d, mu) in divs {
            let d2 = to_i128(&(&d * &d))?;
            let v = if d.is_one() { visit.take() } else { None };
            let cnt = en.count(&(b / &d), Integer::div_floor(&r2, &d2), v)?;
            total += mu as i128 * cnt as i128;
        }
        return Ok((total.max(0) as u128, true));
    }
    let a_norm = a.iter().map(|v| v.to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt();
    let mut lb = 0.0;
    for (d, mu) in divs {
        let df = d.to_f64().unwrap_or(f64::INFINITY);
        let bd = (b / &d).to_f64().unwrap_or(f64::INFINITY);
        let r2d = r2 as f64 / (df * df);
        if mu > 0 {
            lb += slice_volume_bound(&en, a_norm, bd, r2d, -1.0);
        } else {
            lb -= slice_volume_bound(&en, a_norm, bd, r2d, 1.0);
        }
    }
    let lb = (lb * (1.0 - 1e-9)).floor();
    Ok((if lb > 0.0 { lb as u128 } else { 0 }, false))
}

/// Lower bound N(B) ≥ Σ_{y ∈ C(Y)} N_{y, gcd(y)}(B), with Y from the rule.
///
/// Linear-fibre mode counts each fibre exactly on the lattice ⟨Q(y), x⟩ +
/// R(y) = 0 inside ‖x‖² ≤ B² − 1, or by a volume lower bound when the
/// enumeration is too large. Quadric mode scans the x-box per fibre and
/// skips fibres over budget, so its series is a sampled lower bound.
pub fn fibration_count(
    c: &IntPolynomial,
    split: &VariableSplit,
    mode: FibrationMode,
    spec: &AdmissibleSetSpec,
    bounds: &[u64],
    cfg: &FibrationCountConfig,
) -> Result<CountSeries> {
    split.validate(c)?;
    if split.mode != mode {
        return Err(Error::InvalidSplit("split mode does not match the requested mode".into()));
    }
    if spec.k() != split.y_indices.len() {
        return Err(Error::DimensionMismatch { expected: split.y_indices.len(), got: spec.k() });
    }
    let mut points = Vec::with_capacity(bounds.len());
    match mode {
        FibrationMode::PiPrime => {
            let d = decompose_linear_fibre(c, split)?;
            let qs: Vec<FastPoly> = d.q.iter().map(FastPoly::new).collect::<Result<_>>()?;
            let rp = FastPoly::new(&d.r)?;
            for &b in bounds {
                let ys = cfg.y_rule.scale(b);
                let mut tally = FibreTally { y_scale: ys, ..Default::default() };
                let r2 = (b as i128) * (b as i128) - 1;
                let mut total: u128 = 0;
                let mut err: Option<Error> = None;
                let bi = b as i64;
                enumerate_admissible(spec, &BigRational::from_integer(ys.into()), cfg.budget, |y| {
                    if err.is_some() || y.iter().any(|v| v.abs() > bi) {
                        return;
                    }
                    let step = (|| -> Result<()> {
                        let overflow = || Error::Precondition("fibre coefficients exceed 128 bits".into());
                        let a: Vec<i128> = qs.iter().map(|q| q.eval(y).ok_or_else(overflow)).collect::<Result<_>>()?;
                        let rv = rp.eval(y).ok_or_else(overflow)?;
                        let ga = a.iter().fold(0i128, |acc, &v| num_integer::gcd(acc, v));
                        if ga == 0 || rv % ga != 0 {
                            tally.skipped += 1;
                            return Ok(());
                        }
                        let ab: Vec<BigInt> = a.iter().map(|&v| BigInt::from(v / ga)).collect();
                        let bb = BigInt::from(rv / ga);
                        let g = BigInt::from(y.iter().fold(0i64, |acc, &v| gcd_i64(acc, v)));
                        tally.fibres += 1;
                        let sample = tally.exact < cfg.sample_fibres;
                        let mut bad = 0u64;
                        let mut seen = 0u64;
                        let yb: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
                        let mut check = |x: &[i128]| {
                            if seen >= 64 {
                                return;
                            }
                            seen += 1;
                            let xb: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
                            let pt = crate::sieve::assemble_point(split, &xb, &yb);
                            if !c.evaluate(&pt).map(|v| v.is_zero()).unwrap_or(false) {
                                bad += 1;
                            }
                        };
                        let visit: Option<&mut dyn FnMut(&[i128])> = if sample { Some(&mut check) } else { None };
                        let (cnt, exact) = fibre_count(&ab, &bb, &g, r2, cfg.per_fibre_nodes, visit)?;
                        if bad > 0 {
                            return Err(Error::FalsificationAlarm(format!("fibre point off the cubic over y = {y:?}")));
                        }
                        if exact {
                            tally.exact += 1;
                            tally.samples_verified += seen;
                        } else {
                            tally.bounded += 1;
                        }
                        total += cnt;
                        Ok(())
                    })();
                    if let Err(e) = step {
                        err = Some(e);
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                points.push(CountPoint { b, count: total, fibres: Some(tally) });
            }
        }
        FibrationMode::Pi => {
            let nx = split.x_indices.len();
            for &b in bounds {
                let ys = cfg.y_rule.scale(b);
                let mut tally = FibreTally { y_scale: ys, ..Default::default() };
                let side = 2 * b as u128 + 1;
                let xbox = (0..nx).try_fold(1u128, |acc, _| acc.checked_mul(side)).unwrap_or(u128::MAX);
                let bi = b as i64;
                let mut total: u128 = 0;
                let mut err: Option<Error> = None;
                enumerate_admissible(spec, &BigRational::from_integer(ys.into()), cfg.budget, |y| {
                    if err.is_some() || y.iter().any(|v| v.abs() > bi) {
                        return;
                    }
                    if xbox > cfg.budget {
                        tally.skipped += 1;
                        return;
                    }
                    let yb: Vec<BigInt> = y.iter().map(|&v| BigInt::from(v)).collect();
                    let step = (|| -> Result<u128> {
                        let f = fibre_quadratic(&yb, c, split)?.to_polynomial();
                        let fp = FastPoly::new(&f)?;
                        let g = y.iter().fold(0i64, |acc, &v| gcd_i64(acc, v));
                        let mut x = vec![-bi; nx];
                        let mut cnt = 0u128;
                        loop {
                            if fp.eval(&x) == Some(0) && x.iter().fold(g, |acc, &v| gcd_i64(acc, v)) == 1 {
                                cnt += 1;
                            }
                            let mut i = nx;
                            loop {
                                if i == 0 {
                                    return Ok(cnt);
                                }
                                i -= 1;
                                if x[i] < bi {
                                    x[i] += 1;
                                    break;
                                }
                                x[i] = -bi;
                            }
                        }
                    })();
                    match step {
                        Ok(cnt) => {
                            tally.fibres += 1;
                            tally.exact += 1;
                            total += cnt;
                        }
                        Err(e) => err = Some(e),
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
                points.push(CountPoint { b, count: total, fibres: Some(tally) });
            }
        }
    }
    let kind = match mode {
        FibrationMode::PiPrime => "lower_bound",
        FibrationMode::Pi => "sampled_lower_bound",
    };
    Ok(CountSeries {
        predicate: "primitive".into(),
        kind: kind.into(),
        points,
        config_hash: config_hash(&("fibration_count", c.to_text(), split, bounds, cfg)),
    })
}

// ---------------------------------------------------------------------------
// Coprime representation numbers.

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoprimeRepresentation {
    /// #{x ∈ [−W, W]^m : gcd(x, 2Δ) = 1, F(x + ξ) = N}.
    pub count: u128,
    /// Δ = det(2A) for F = xᵀ A x.
    pub delta: BigInt,
    /// (d, μ(d), M_d) over squarefree d | 2Δ.
    pub decomposition: Vec<(BigInt, i32, u128)>,
    /// Whether F(ξ) ≡ N (mod 2Δ).
    pub precondition_holds: bool,
}

/// Exact coprime representation count of `n_target` by the definite form
/// `f` shifted by ξ, over the box window |x_i| ≤ `window`.
pub fn representation_count_coprime(
    f: &IntPolynomial,
    xi: &[BigInt],
    n_target: &BigInt,
    window: i64,
) -> Result<CoprimeRepresentation> {
    let m = f.num_vars();
    if xi.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: xi.len() });
    }
    if m == 0 || !f.is_homogeneous() || f.total_degree() != 2 {
        return Err(Error::Precondition("F must be a quadratic form".into()));
    }
    let q = QuadraticPolynomial::from_polynomial(f)?;
    let (_, pos, _) = q.signature();
    if pos != m {
        return Err(Error::Precondition("F is not positive definite".into()));
    }
    let delta = q.det_2q();
    let two_delta = &delta * 2;
    let f_xi = f.evaluate(xi)?;
    let precondition_holds = (&f_xi - n_target).mod_floor(&two_delta).is_zero();
    let divs = squarefree_divisors(&two_delta)?;
    let mut decomposition: Vec<(BigInt, i32, u128)> = divs.iter().map(|(d, mu)| (d.clone(), *mu, 0)).collect();
    let mut count: u128 = 0;
    if n_target.is_negative() || window < 0 {
        return Ok(CoprimeRepresentation { count, delta, decomposition, precondition_holds });
    }
    // G(x) = F(x + ξ) − N = A t² + L(x') t + K(x') in the last variable t.
    let shift: Vec<IntPolynomial> = (0..m)
        .map(|i| &IntPolynomial::var(m, i) + &IntPolynomial::constant(m, xi[i].clone()))
        .collect();
    let g = &f.substitute(&shift)? - &IntPolynomial::constant(m, n_target.clone());
    let last = m - 1;
    let mut a_coef = BigInt::zero();
    let mut lin = IntPolynomial::zero(m);
    let mut cst = IntPolynomial::zero(m);
    for (mono, c) in g.terms() {
        let e = mono.0[last];
        let mut base = mono.0.clone();
        base[last] = 0;
        match e {
            2 => a_coef += c,
            1 => lin.add_term(Monomial(base), c.clone()),
            _ => cst.add_term(Monomial(base), c.clone()),
        }
    }
    let a = to_i128(&a_coef)?;
    let lp = FastPoly::new(&lin)?;
    let kp = FastPoly::new(&cst)?;
    let dvals: Vec<i64> = divs.iter().map(|(d, _)| d.to_i64().unwrap_or(i64::MAX)).collect();
    let g2 = two_delta.to_i64().ok_or_else(|| Error::Precondition("2Δ exceeds 64 bits".into()))?;
    let overflow = || Error::Precondition("value exceeds 128 bits".into());
    let mut x = vec![-window; m];
    x[last] = 0;
    loop {
        let bl = lp.eval(&x).ok_or_else(overflow)?;
        let kc = kp.eval(&x).ok_or_else(overflow)?;
        let disc = bl * bl - 4 * a * kc;
        if disc >= 0 {
            let s = isqrt_i128(disc);
            if s * s == disc {
                let roots: &[i128] = if s == 0 { &[0] } else { &[1, -1] };
                for &sg in roots {
                    let num = -bl + sg * s;
                    if num % (2 * a) != 0 {
                        continue;
                    }
                    let t = num / (2 * a);
                    if t.abs() > window as i128 {
                        continue;
                    }
                    let gx = x[..last].iter().fold(t as i64, |acc, &v| gcd_i64(acc, v));
                    for (j, &d) in dvals.iter().enumerate() {
                        if gx % d == 0 {
                            decomposition[j].2 += 1;
                        }
                    }
                    if gcd_i64(gx, g2) == 1 {
                        count += 1;
                    }
                }
            }
        }
        let mut i = last;
        let done = loop {
            if i == 0 {
                break true;
            }
            i -= 1;
            if x[i] < window {
                x[i] += 1;
                break false;
            }
            x[i] = -window;
        };
        if done {
            break;
        }
    }
    let incl: i128 = decomposition.iter().map(|(_, mu, md)| *mu as i128 * *md as i128).sum();
    if incl != count as i128 {
        return Err(Error::FalsificationAlarm(format!("inclusion-exclusion gives {incl}, direct count {count}")));
    }
    Ok(CoprimeRepresentation { count, delta, decomposition, precondition_holds })
}

// ---------------------------------------------------------------------------
// Exponent fits.

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub points_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitVerdict {
    pub slope: f64,
    pub predicted: f64,
    pub slack: f64,
    pub pass: bool,
}

pub const DEFAULT_SLACK: f64 = 0.5;

/// Least squares of log N on log B over the points with N > 0.
pub fn fit_exponent(series: &[(f64, f64)]) -> Result<ExponentFit> {
    let pts: Vec<(f64, f64)> = series.iter().filter(|(b, n)| *n > 0.0 && *b > 0.0).map(|(b, n)| (b.ln(), n.ln())).collect();
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!("{} positive counts, need at least 4", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all B values coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals = pts.iter().map(|p| p.1 - (intercept + slope * p.0)).collect();
    Ok(ExponentFit { slope, intercept, residuals, points_used: pts.len() })
}

/// PASS iff slope ≥ predicted − slack.
pub fn compare(fit: &ExponentFit, predicted: f64, slack: f64) -> FitVerdict {
    FitVerdict { slope: fit.slope, predicted, slack, pass: fit.slope >= predicted - slack }
}

// ---------------------------------------------------------------------------
// Reports.

pub const REPORT_SCHEMA: &str = "cubicfib-report/v1";

/// Schema-versioned report; sections are keyed and ordered by name.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub config: BTreeMap<String, String>,
    pub config_hash: String,
    pub sections: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub tables: BTreeMap<String, String>,
}

impl Report {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        let config_hash = config_hash(&config);
        Report { schema: REPORT_SCHEMA.into(), config, config_hash, sections: BTreeMap::new(), tables: BTreeMap::new() }
    }

    pub fn add<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::Precondition(format!("serialization of {name}: {e}")))?;
        self.sections.insert(name.into(), v);
        Ok(())
    }

    pub fn add_table(&mut self, name: &str, csv: String) {
        self.tables.insert(name.into(), csv);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Report =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if r.schema != REPORT_SCHEMA {
            return Err(Error::Validation(vec![format!("unknown schema {}", r.schema)]));
        }
        Ok(r)
    }
}

/// Structural analysis of a form: fibration data (quadric mode), shape
/// classification and, when available, the predicted exponents.
pub fn analysis_report(c: &IntPolynomial, split: &VariableSplit, cfg: RankConfig, config: BTreeMap<String, String>) -> Result<Report> {
    let (fd, shapes) = ShapeClassification::analyze(c, split, cfg)?;
    let mut report = Report::new(config);
    let n = c.num_vars();
    let h = split.y_indices.len();
    let (r, tag) = match &fd {
        Some(fd) => (fd.r(), if shapes.h1_semidefinite { ShapeTag::Hypothesis1 } else { ShapeTag::General }),
        None => (split.x_indices.len(), ShapeTag::LinearFibre { k: split.x_indices.len() }),
    };
    if let Some(fd) = &fd {
        report.add("fibration", fd)?;
    } else {
        report.add("fibration", &decompose_linear_fibre(c, split)?)?;
    }
    report.add("shapes", &shapes)?;
    let eps = BigRational::new(1.into(), 100.into());
    if let Ok(pred) = predicted_exponents(n, h, r, &eps, tag) {
        report.add("prediction", &pred)?;
    }
    Ok(report)
}
