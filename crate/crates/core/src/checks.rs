//! Identity suites over seeded random instances: the exact algebra and the
//! Monte Carlo checks of the formality morphisms.

use std::sync::Arc;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::formality::{
    commutator_bracket_structure, conjecture_duflo_probe, conjecture_module_probe, forms_differential_square, mc_residual,
    tangent_chain_map, taylor_u, verify_chain_formality, Numeric, StarProduct, WeightBook, Weighted,
};
use crate::hochschild::{chain_action, chain_b, d_hoch, eval_op, gerstenhaber, hkr, mu, HochChain, PolyDiffOp};
use crate::lie::LieAlgebraData;
use crate::linfty::Graded;
use crate::polyvector::{lie_derivative, schouten, PolyVectorField};
use crate::random;
use crate::symbolic::{Poly, Rational};

/// Outcome of one identity over its instances.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Exact checks compare rationals; the others compare error bars.
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_sigmas: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn sign(e: i64) -> Rational {
    if e.rem_euclid(2) == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

fn exact_check(name: &str, cases: usize, mut holds: impl FnMut(&mut ChaCha8Rng) -> Result<bool>, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut failures = 0;
    for _ in 0..cases {
        if !holds(rng)? {
            failures += 1;
        }
    }
    Ok(CheckResult { name: name.into(), cases, failures, exact: true, max_sigmas: None, max_abs: None, passed: failures == 0 })
}

/// Accumulates numeric residuals that should vanish within error bars.
struct NumericCheck {
    name: String,
    k_sigma: f64,
    abs_bound: f64,
    cases: usize,
    failures: usize,
    max_sigmas: f64,
    max_abs: f64,
}

impl NumericCheck {
    fn new(name: &str, k_sigma: f64, abs_bound: f64) -> Self {
        NumericCheck { name: name.into(), k_sigma, abs_bound, cases: 0, failures: 0, max_sigmas: 0.0, max_abs: 0.0 }
    }

    fn add(&mut self, n: &Numeric) {
        self.cases += 1;
        self.max_sigmas = self.max_sigmas.max(n.max_sigmas());
        self.max_abs = self.max_abs.max(n.max_abs());
        if !n.consistent_with_zero(self.k_sigma, 1e-9) || n.max_abs() >= self.abs_bound {
            self.failures += 1;
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            exact: false,
            max_sigmas: Some(self.max_sigmas),
            max_abs: Some(self.max_abs),
            passed: self.failures == 0,
        }
    }
}

/// A negative control passes when the corrupted residual is loud.
fn control(name: &str, sigmas: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        cases: 1,
        failures: usize::from(sigmas <= threshold),
        exact: false,
        max_sigmas: Some(sigmas),
        max_abs: None,
        passed: sigmas > threshold,
    }
}

fn pv_deg(x: &PolyVectorField) -> i64 {
    x.arity() as i64 - 1
}

fn any_pv(rng: &mut ChaCha8Rng, dim: usize) -> PolyVectorField {
    let arity = rng.gen_range(0..=dim);
    random::polyvector(rng, dim, arity, 2)
}

fn any_op(rng: &mut ChaCha8Rng, dim: usize, max_arity: usize) -> PolyDiffOp {
    let arity = rng.gen_range(0..=max_arity);
    random::diff_op(rng, dim, arity, 2, 2)
}

fn action_commutator(p1: &PolyDiffOp, p2: &PolyDiffOp, c: &HochChain) -> Result<HochChain> {
    let a = chain_action(p1, &chain_action(p2, c)?)?;
    let b = chain_action(p2, &chain_action(p1, c)?)?;
    a.try_add(&b.scale(&-sign(p1.degree() * p2.degree())))
}

/// The exact identities of the polyvector and Hochschild algebra, each on
/// `cases` random instances (`2·cases` for the Schouten Jacobi identity) in
/// dimensions 1 to 3.
pub fn symbolic_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = |r: &mut ChaCha8Rng| r.gen_range(1..=3usize);
    let mut checks = vec![];
    checks.push(exact_check(
        "schouten graded Jacobi",
        2 * cases,
        |r| {
            let d = dim(r);
            let (x, y, z) = (any_pv(r, d), any_pv(r, d), any_pv(r, d));
            let lhs = schouten(&x, &schouten(&y, &z)?)?;
            let r1 = schouten(&schouten(&x, &y)?, &z)?;
            let r2 = schouten(&y, &schouten(&x, &z)?)?.scale(&sign(pv_deg(&x) * pv_deg(&y)));
            Ok(lhs == &r1 + &r2)
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "Lie derivative of a bracket",
        cases,
        |r| {
            let d = dim(r);
            let (x, y) = (any_pv(r, d), any_pv(r, d));
            let formdeg = r.gen_range(0..=d);
            let w = random::form(r, d, formdeg, 2);
            let lhs = lie_derivative(&schouten(&x, &y)?, &w)?;
            let lxy = lie_derivative(&x, &lie_derivative(&y, &w)?)?;
            let lyx = lie_derivative(&y, &lie_derivative(&x, &w)?)?;
            Ok(lhs == lxy.try_add(&lyx.scale(&-sign(pv_deg(&x) * pv_deg(&y))))?)
        },
        &mut rng,
    )?);
    checks.push(exact_check("d_hoch squares to zero", cases, |r| {
            let d = dim(r);
            Ok(d_hoch(&d_hoch(&any_op(r, d, 3))).is_zero())
        }, &mut rng)?);
    checks.push(exact_check(
        "b squares to zero",
        cases,
        |r| {
            let (d, len) = (dim(r), r.gen_range(0..=4));
            Ok(chain_b(&chain_b(&random::chain(r, d, len, 2))).is_zero())
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "Gerstenhaber Jacobi",
        cases,
        |r| {
            let d = dim(r);
            let (p, q, s) = (any_op(r, d, 2), any_op(r, d, 2), any_op(r, d, 2));
            let lhs = gerstenhaber(&p, &gerstenhaber(&q, &s)?)?;
            let r1 = gerstenhaber(&gerstenhaber(&p, &q)?, &s)?;
            let r2 = gerstenhaber(&q, &gerstenhaber(&p, &s)?)?.scale(&sign(p.degree() * q.degree()));
            Ok(lhs == r1.try_add(&r2)?)
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "[m, P] = d_hoch P",
        cases,
        |r| {
            let d = dim(r);
            let p = any_op(r, d, 3);
            Ok(gerstenhaber(&PolyDiffOp::product(d), &p)? == d_hoch(&p))
        },
        &mut rng,
    )?);
    checks.push(exact_check("d_hoch of hkr vanishes", cases, |r| {
            let d = dim(r);
            Ok(d_hoch(&hkr(&any_pv(r, d))).is_zero())
        }, &mut rng)?);
    checks.push(exact_check(
        "mu kills boundaries",
        cases,
        |r| {
            let (d, len) = (dim(r), r.gen_range(0..=4));
            Ok(mu(&chain_b(&random::chain(r, d, len, 2))).is_zero())
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "L_m = b",
        cases,
        |r| {
            let (d, len) = (dim(r), r.gen_range(0..=4));
            let c = random::chain(r, d, len, 2);
            Ok(chain_action(&PolyDiffOp::product(d), &c)? == chain_b(&c))
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "[L_P, L_Q] = L_[P,Q]",
        cases,
        |r| {
            let (d, len) = (dim(r), r.gen_range(0..=3));
            let (p, q) = (any_op(r, d, 2), any_op(r, d, 2));
            let c = random::chain(r, d, len, 2);
            Ok(action_commutator(&p, &q, &c)? == chain_action(&gerstenhaber(&p, &q)?, &c)?)
        },
        &mut rng,
    )?);
    checks.push(exact_check(
        "[b, L_P] = L_(d_hoch P)",
        cases,
        |r| {
            let (d, len) = (dim(r), r.gen_range(0..=4));
            let p = any_op(r, d, 3);
            let c = random::chain(r, d, len, 2);
            Ok(action_commutator(&PolyDiffOp::product(d), &p, &c)? == chain_action(&d_hoch(&p), &c)?)
        },
        &mut rng,
    )?);
    Ok(SuiteReport { suite: "symbolic".into(), checks })
}

fn fixed(dim: usize, s: &str) -> Result<Poly> {
    Poly::parse(dim, s)
}

fn fixed_pv(dim: usize, s: &str) -> Result<PolyVectorField> {
    PolyVectorField::parse(dim, s)
}

/// `U_1 = hkr` on `cases` random polyvectors and arguments (`d ≤ 3`).
pub fn calibration_suite(book: Arc<WeightBook>, seed: u64, cases: usize, k_sigma: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut check = NumericCheck::new("U_1 = hkr", k_sigma, f64::INFINITY);
    for _ in 0..cases {
        let dim = rng.gen_range(1..=3);
        let arity = rng.gen_range(0..=dim);
        let gamma = random::polyvector(&mut rng, dim, arity, 2);
        let fs: Vec<Poly> = (0..arity).map(|_| random::poly(&mut rng, dim, 3, 3)).collect();
        let u = taylor_u(&book, std::slice::from_ref(&gamma), &fs)?;
        let h = eval_op(&hkr(&gamma), &fs)?;
        check.add(&u.sub(&Weighted::exact(h))?.evaluate(&book)?);
    }
    Ok(SuiteReport { suite: "calibration".into(), checks: vec![check.finish()] })
}

/// Associativity of the star product modulo `ħ³` on random triples, for a
/// constant structure on R² (degrees ≤ 2 and ≤ 3) and the linear structure
/// of `affine2`, with a flipped `B_2` as the negative control.
pub fn associativity_suite(book: Arc<WeightBook>, seed: u64, cases: usize, k_sigma: f64, abs_bound: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let constant = fixed_pv(2, "d0^d1")?;
    let affine = LieAlgebraData::affine2().linear_poisson();
    let mut checks = vec![];
    // the absolute bound applies to the degree ≤ 2 inputs; the larger
    // degree-3 residuals are judged by their error bars alone
    for (name, pi, deg, bound) in [
        ("constant, degree ≤ 2", &constant, 2, abs_bound),
        ("constant, degree ≤ 3", &constant, 3, f64::INFINITY),
        ("affine2, degree ≤ 3", &affine, 3, f64::INFINITY),
    ] {
        let star = StarProduct::new(book.clone(), pi, 2)?;
        let mut check = NumericCheck::new(&format!("associativity mod ħ³: {name}"), k_sigma, bound);
        for _ in 0..cases {
            let mut f = || random::poly(&mut rng, 2, deg, 3);
            let (a, b, c) = (f(), f(), f());
            let defect = star.associativity_defect(&a, &b, &c)?;
            for d in &defect {
                check.add(&d.evaluate(&book)?);
            }
        }
        checks.push(check.finish());
    }
    let mut bad = StarProduct::new(book.clone(), &constant, 2)?;
    bad.b[2] = bad.b[2].scale(&-Rational::one());
    let defect = bad.associativity_defect(&fixed(2, "x0^3 + x1")?, &fixed(2, "x0*x1^2")?, &fixed(2, "x1^3 + x0^2")?)?;
    checks.push(control("flipped B_2 is detected", defect[2].evaluate(&book)?.max_sigmas(), 10.0));
    Ok(SuiteReport { suite: "associativity".into(), checks })
}

/// `(γ, ω)` pairs on R² for the chain identity at `k = −1`.
pub fn chain_instances() -> Result<Vec<(PolyVectorField, HochChain)>> {
    let raw: [(&str, &[&str]); 10] = [
        ("d0^d1", &["x0", "x1"]),
        ("x0*d0^d1", &["x0", "x1"]),
        ("x1*d0^d1", &["x0^2", "x1"]),
        ("x0*x1*d0^d1", &["x0^2", "x1"]),
        ("x0*d0^d1", &["x1", "x0", "x0*x1"]),
        ("d0^d1", &["x1^2", "x0", "x0"]),
        ("x1*d0", &["x0*x1", "x0^2"]),
        ("x0^2*d1", &["x0", "x1", "x1"]),
        ("x1", &["x0", "x1"]),
        ("x0*x1*d0 + d1", &["x0^2", "x1^2", "x0*x1"]),
    ];
    raw.iter()
        .map(|(g, w)| Ok((fixed_pv(2, g)?, HochChain::tensor(&w.iter().map(|s| fixed(2, s)).collect::<Result<Vec<_>>>()?))))
        .collect()
}

/// The chain formality identity: exactly zero at `k = −2`, within error
/// bars at `k = −1`, and loud with corrupted weights.
pub fn chain_suite(book: Arc<WeightBook>, seed: u64, cases: usize, k_sigma: f64, abs_bound: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = vec![exact_check(
        "chain identity k = -2",
        cases,
        |r| {
            let len = r.gen_range(0..=3);
            let c = random::chain(r, 2, len, 2);
            Ok(verify_chain_formality(book.clone(), -2, &[], &c)?.is_zero())
        },
        &mut rng,
    )?];
    let mut check = NumericCheck::new("chain identity k = -1", k_sigma, abs_bound);
    let mut residuals = vec![];
    for (gamma, chain) in chain_instances()? {
        let r = verify_chain_formality(book.clone(), -1, &[gamma], &chain)?;
        check.add(&r.evaluate(&book)?);
        residuals.push(r);
    }
    checks.push(check.finish());
    let corrupted = book.corrupted(0.05);
    let mut loudest = 0.0f64;
    for r in &residuals {
        loudest = loudest.max(r.evaluate(&corrupted)?.max_sigmas());
    }
    checks.push(control("corrupted weights are detected", loudest, 10.0));
    Ok(SuiteReport { suite: "chain".into(), checks })
}

/// `d_π² = 0` through `ħ²`, the tangent chain map at `π = 0`, and the
/// Maurer–Cartan residual of the image of `ħπ` through `ħ²`.
pub fn tangent_suite(book: Arc<WeightBook>, seed: u64, cases: usize, k_sigma: f64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let structures = [
        fixed_pv(2, "d0^d1")?,
        LieAlgebraData::affine2().linear_poisson(),
        LieAlgebraData::so3().linear_poisson(),
    ];
    let mut checks = vec![exact_check(
        "d_pi squares to zero",
        cases,
        |r| {
            let pi = &structures[r.gen_range(0..structures.len())];
            let d = pi.dim();
            let formdeg = r.gen_range(0..=d);
            let w = random::form(r, d, formdeg, 2);
            Ok(forms_differential_square(pi, &w, 2)?.iter().all(|f| f.is_zero()))
        },
        &mut rng,
    )?];
    let mut at_zero = NumericCheck::new("tangent chain map at pi = 0 is mu", k_sigma, f64::INFINITY);
    let mut higher_vanish = true;
    for _ in 0..cases.min(10) {
        let len = rng.gen_range(0..=2);
        let c = random::chain(&mut rng, 2, len, 2);
        let t = tangent_chain_map(book.clone(), &PolyVectorField::zero(2, 2), 2, &c)?;
        at_zero.add(&t[0].sub(&Weighted::exact(mu(&c)))?.evaluate(&book)?);
        higher_vanish &= t[1..].iter().all(|w| w.is_zero());
    }
    let mut at_zero = at_zero.finish();
    if !higher_vanish {
        at_zero.failures += 1;
        at_zero.passed = false;
    }
    checks.push(at_zero);
    let mut mc = NumericCheck::new("Maurer-Cartan residual through ħ²", k_sigma, f64::INFINITY);
    for pi in &structures {
        for r in mc_residual(book.clone(), pi, 2)? {
            mc.add(&r.evaluate(&book)?);
        }
    }
    checks.push(mc.finish());
    Ok(SuiteReport { suite: "tangent".into(), checks })
}

/// The commutator bracket structure for `so3` and `affine2`, the Duflo
/// compatibility in degree zero, and the module compatibility modulo
/// Poisson brackets.
pub fn probes_suite(book: Arc<WeightBook>, k_sigma: f64, degree_bound: u32) -> Result<SuiteReport> {
    let mut checks = vec![];
    let pairs = [
        (LieAlgebraData::so3(), "x0^2*x1", "x1*x2 + x0^3"),
        (LieAlgebraData::affine2(), "x0*x1^2", "x1^3 + x0"),
    ];
    let mut c1 = 0;
    let mut certified = 0;
    for (g, f, h) in &pairs {
        let r = commutator_bracket_structure(book.clone(), g, &fixed(g.dim(), f)?, &fixed(g.dim(), h)?, 2, degree_bound)?;
        c1 += usize::from(!r.c1_matches_bracket);
        certified += usize::from(!r.all_feasible());
    }
    let result = |name: &str, failures: usize| CheckResult {
        name: name.into(),
        cases: pairs.len(),
        failures,
        exact: true,
        max_sigmas: None,
        max_abs: None,
        passed: failures == 0,
    };
    checks.push(result("C_1 equals the Poisson bracket", c1));
    checks.push(result("commutator orders lie in the bracket span", certified));
    let so3 = LieAlgebraData::so3();
    let casimir = fixed(3, "x0^2 + x1^2 + x2^2")?;
    let etas = ["x0*x1", "x0^2", "x2^3*x1"];
    let mut duflo_failures = 0;
    for eta in etas {
        duflo_failures += usize::from(!conjecture_duflo_probe(&so3, &casimir, &fixed(3, eta)?)?.vanishes_in_coinvariants);
    }
    checks.push(CheckResult { cases: etas.len(), ..result("Duflo compatibility in coinvariants", duflo_failures) });
    let probe = conjecture_module_probe(
        book.clone(),
        &so3.linear_poisson(),
        &PolyVectorField::function(casimir),
        &HochChain::tensor(&[fixed(3, "x0*x1")?]),
        2,
        degree_bound,
    )?;
    let mut module = NumericCheck::new("module compatibility modulo brackets", k_sigma, f64::INFINITY);
    for n in probe.modulo_brackets.iter().flatten() {
        module.add(n);
    }
    checks.push(module.finish());
    Ok(SuiteReport { suite: "probes".into(), checks })
}
