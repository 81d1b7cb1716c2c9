//! Formality Taylor components assembled from graph sums, and their
//! applications: star products, the chain-level identities, tangent maps,
//! the trace map and the commutator structure.
//!
//! Graph weights are only known numerically, so every assembled object is a
//! [`Weighted`]: a polynomial in weight symbols (one per canonical graph
//! class) with exact coefficients. Numbers appear only at evaluation, where
//! the standard error is propagated by the delta method.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{enumerate, wheel, AdmissibleGraph, Flavor};
use crate::lie::{tr_k, Enveloping, LieAlgebraData};
use crate::hochschild::{chain_action, chain_b, d_hoch, eval_op, gerstenhaber, hkr, HochChain, PolyDiffOp};
use crate::linfty::{
    check_module_morphism_identity, mc_image, tangent_differential, tangent_map, tangent_map_algebra, tpoly, Graded, HSeries, LInftyAlgebraSpec, LInftyModuleSpec, ModuleMap, ModuleMorphismSpec,
    MorphismSpec, TaylorMap,
};
use crate::operators::{eval_disk_graph_chain, graph_operator};
use crate::polyvector::{contract, lie_derivative, poisson_bracket, schouten, DiffForm, PolyVectorField};
use crate::span::{SpanBasis, SparseVec};
use crate::symbolic::{monomials, rational_to_f64, Poly, Rational};
use crate::weights::{exact_weight, graph_weight, weight_representative, WeightCache};

/// Exact coefficients of an element, keyed by a printable basis label.
pub trait Flatten {
    fn flatten(&self) -> BTreeMap<String, Rational>;
}

fn exponent_label(e: &[u32]) -> String {
    let parts: Vec<String> = e.iter().map(u32::to_string).collect();
    format!("x^({})", parts.join(","))
}

impl Flatten for Poly {
    fn flatten(&self) -> BTreeMap<String, Rational> {
        self.terms().map(|(e, c)| (exponent_label(e), c.clone())).collect()
    }
}

impl Flatten for DiffForm {
    fn flatten(&self) -> BTreeMap<String, Rational> {
        let mut out = BTreeMap::new();
        for (idx, p) in self.coeffs() {
            for (e, c) in p.terms() {
                out.insert(format!("dx{idx:?} {}", exponent_label(e)), c.clone());
            }
        }
        out
    }
}

impl Flatten for PolyDiffOp {
    fn flatten(&self) -> BTreeMap<String, Rational> {
        let mut out = BTreeMap::new();
        for (d, p) in self.terms() {
            for (e, c) in p.terms() {
                out.insert(format!("d{d:?} {}", exponent_label(e)), c.clone());
            }
        }
        out
    }
}

impl Flatten for HochChain {
    fn flatten(&self) -> BTreeMap<String, Rational> {
        self.terms().iter().map(|(e, c)| (format!("{e:?}"), c.clone())).collect()
    }
}

/// Sorted list of weight symbols; empty for exact terms.
pub type Monomial = Vec<String>;

/// Polynomial in weight symbols with coefficients in `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weighted<T> {
    terms: BTreeMap<Monomial, T>,
}

impl<T: Graded> Weighted<T> {
    pub fn zero() -> Self {
        Weighted { terms: BTreeMap::new() }
    }

    pub fn exact(t: T) -> Self {
        let mut w = Self::zero();
        w.push(vec![], t).expect("single term");
        w
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, T> {
        &self.terms
    }

    /// Adds `t · monomial`.
    pub fn push(&mut self, mut mono: Monomial, t: T) -> Result<()> {
        if t.is_zero() {
            return Ok(());
        }
        mono.sort();
        let merged = match self.terms.remove(&mono) {
            Some(old) => old.add(&t)?,
            None => t,
        };
        if !merged.is_zero() {
            self.terms.insert(mono, merged);
        }
        Ok(())
    }

    /// `Σ_s coeff_s · s · t` for a linear weight expression.
    pub fn from_expr(expr: &WeightExpr, t: &T) -> Result<Self> {
        let mut w = Self::zero();
        for (sym, c) in &expr.terms {
            w.push(sym.iter().cloned().collect(), t.scale(c))?;
        }
        Ok(w)
    }

    /// Applies a linear map termwise.
    pub fn map<U: Graded>(&self, f: impl Fn(&T) -> Result<U>) -> Result<Weighted<U>> {
        let mut out = Weighted::zero();
        for (m, t) in &self.terms {
            out.push(m.clone(), f(t)?)?;
        }
        Ok(out)
    }

    /// Bilinear combination, multiplying the symbol monomials.
    pub fn combine<U: Graded, V: Graded>(&self, other: &Weighted<U>, f: impl Fn(&T, &U) -> Result<V>) -> Result<Weighted<V>> {
        let mut out = Weighted::zero();
        for (ma, a) in &self.terms {
            for (mb, b) in &other.terms {
                let mut m = ma.clone();
                m.extend(mb.iter().cloned());
                out.push(m, f(a, b)?)?;
            }
        }
        Ok(out)
    }

    /// Replaces the symbols that `value` knows by exact numbers.
    pub fn substitute(&self, value: &dyn Fn(&str) -> Option<Rational>) -> Result<Self> {
        let mut out = Self::zero();
        for (m, t) in &self.terms {
            let mut keep = vec![];
            let mut factor = Rational::one();
            for s in m {
                match value(s) {
                    Some(v) => factor *= v,
                    None => keep.push(s.clone()),
                }
            }
            if !factor.is_zero() {
                out.push(keep, t.scale(&factor))?;
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn is_exact(&self) -> bool {
        self.terms.keys().all(Vec::is_empty)
    }

    /// The symbol-free part.
    pub fn exact_part(&self) -> Option<&T> {
        self.terms.get(&Vec::new())
    }
}

impl<T: Graded> Graded for Weighted<T> {
    fn degree(&self) -> i64 {
        self.terms.values().next().map_or(0, Graded::degree)
    }
    fn is_zero(&self) -> bool {
        self.terms.values().all(Graded::is_zero)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (m, t) in &other.terms {
            out.push(m.clone(), t.clone())?;
        }
        Ok(out)
    }
    fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        Weighted { terms: self.terms.iter().map(|(m, t)| (m.clone(), t.scale(s))).collect() }
    }
}

/// Linear combination of weight symbols plus an exact constant (`None`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightExpr {
    pub terms: BTreeMap<Option<String>, Rational>,
}

impl WeightExpr {
    fn add(&mut self, sym: Option<String>, c: Rational) {
        let e = self.terms.entry(sym).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }
}

/// Where graph weights come from.
#[derive(Clone, Debug)]
pub struct WeightSource {
    pub samples: u64,
    pub seed: u64,
    pub cache: Option<WeightCache>,
    /// Only read the cache; a missing entry is an error.
    pub offline: bool,
}

impl WeightSource {
    pub fn new(samples: u64, seed: u64) -> Self {
        WeightSource { samples, seed, cache: None, offline: false }
    }

    pub fn with_cache(mut self, cache: WeightCache) -> Self {
        self.cache = Some(cache);
        self
    }

    /// Per-class seed, so that different weights use independent streams.
    fn graph_seed(&self, hash: &str) -> u64 {
        let head = u64::from_str_radix(&hash[..16], 16).unwrap_or(0);
        self.seed ^ head
    }
}

/// Numeric value of one weight symbol.
#[derive(Clone, Debug)]
pub struct SymbolValue {
    pub graph: AdmissibleGraph,
    pub value: f64,
    pub stderr: f64,
}

/// Symbols met while assembling, with their estimates.
pub struct WeightBook {
    source: WeightSource,
    values: Mutex<BTreeMap<String, SymbolValue>>,
}

impl WeightBook {
    pub fn new(source: WeightSource) -> Self {
        WeightBook { source, values: Mutex::new(BTreeMap::new()) }
    }

    pub fn source(&self) -> &WeightSource {
        &self.source
    }

    /// `W_g` as an expression in class symbols, estimating the class weight
    /// on first use.
    pub fn weight_expr(&self, g: &AdmissibleGraph) -> Result<WeightExpr> {
        let mut expr = WeightExpr::default();
        if let Some(w) = exact_weight(g) {
            if !w.is_zero() {
                expr.add(None, w);
            }
            return Ok(expr);
        }
        let (rep, sign) = weight_representative(g);
        if sign == 0 {
            return Ok(expr);
        }
        let hash = rep.canonical_hash()?;
        self.ensure(&hash, &rep)?;
        expr.add(Some(hash), Rational::from_integer(sign.into()));
        Ok(expr)
    }

    /// Estimates `W(rep)` unless already known.
    fn ensure(&self, hash: &str, rep: &AdmissibleGraph) -> Result<()> {
        if self.values.lock().expect("weight book lock").contains_key(hash) {
            return Ok(());
        }
        let seed = self.source.graph_seed(hash);
        let est = match &self.source.cache {
            Some(cache) if self.source.offline => {
                let key = WeightCache::key(hash, rep.flavor, self.source.samples, seed);
                let mut e = cache
                    .get(&key)?
                    .ok_or_else(|| Error::WeightsUnavailable(format!("no cached weight for {}", &hash[..12])))?;
                e.value *= f64::from(rep.canonical_form().1);
                e
            }
            Some(cache) => cache.weight(rep, self.source.samples, seed)?,
            None if self.source.offline => return Err(Error::WeightsUnavailable("offline without a cache".into())),
            None => graph_weight(rep, self.source.samples, seed)?,
        };
        let v = SymbolValue { graph: rep.clone(), value: est.value, stderr: est.stderr };
        self.values.lock().expect("weight book lock").insert(hash.to_string(), v);
        Ok(())
    }

    pub fn value(&self, hash: &str) -> Option<SymbolValue> {
        self.values.lock().expect("weight book lock").get(hash).cloned()
    }

    pub fn symbols(&self) -> BTreeMap<String, SymbolValue> {
        self.values.lock().expect("weight book lock").clone()
    }

    /// A copy whose estimates are shifted by `±delta`, alternating over the
    /// symbols (negative controls).
    pub fn corrupted(&self, delta: f64) -> WeightBook {
        let mut values = self.symbols();
        for (i, v) in values.values_mut().enumerate() {
            v.value += if i % 2 == 0 { delta } else { -delta };
        }
        WeightBook { source: WeightSource { offline: true, cache: None, ..self.source.clone() }, values: Mutex::new(values) }
    }

    /// Overrides the numeric value of a symbol (negative controls).
    pub fn set_value(&self, hash: &str, value: f64) {
        if let Some(v) = self.values.lock().expect("weight book lock").get_mut(hash) {
            v.value = value;
        }
    }
}

/// A number with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|value| / stderr`, infinite for a nonzero exact value.
    pub fn sigmas(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            self.value.abs() / self.stderr
        }
    }
}

/// Coefficientwise numeric evaluation of a `Weighted`.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct Numeric {
    pub coeffs: BTreeMap<String, Estimate>,
}

impl Numeric {
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|e| e.value.abs()).fold(0.0, f64::max)
    }

    pub fn max_stderr(&self) -> f64 {
        self.coeffs.values().map(|e| e.stderr).fold(0.0, f64::max)
    }

    pub fn max_sigmas(&self) -> f64 {
        self.coeffs.values().map(Estimate::sigmas).fold(0.0, f64::max)
    }

    /// Every coefficient within `k` standard errors of zero, allowing an
    /// absolute slack `abs` for coefficients with zero stderr.
    pub fn consistent_with_zero(&self, k: f64, abs: f64) -> bool {
        self.coeffs.values().all(|e| e.value.abs() <= k * e.stderr + abs)
    }
}

impl<T: Graded + Flatten> Weighted<T> {
    /// Values at the estimated weights; errors by first-order propagation
    /// over independent symbols.
    pub fn evaluate(&self, book: &WeightBook) -> Result<Numeric> {
        let symbols = book.symbols();
        let lookup = |s: &str| -> Result<&SymbolValue> {
            symbols.get(s).ok_or_else(|| Error::WeightsUnavailable(format!("symbol {} not in the book", &s[..12.min(s.len())])))
        };
        let mut value: BTreeMap<String, f64> = BTreeMap::new();
        let mut grad: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (mono, t) in &self.terms {
            let vals: Vec<f64> = mono.iter().map(|s| lookup(s).map(|v| v.value)).collect::<Result<_>>()?;
            let prod: f64 = vals.iter().product();
            for (key, c) in t.flatten() {
                let c = rational_to_f64(&c);
                *value.entry(key.clone()).or_default() += c * prod;
                let g = grad.entry(key).or_default();
                for (i, s) in mono.iter().enumerate() {
                    let others: f64 = vals.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v).product();
                    *g.entry(s.clone()).or_default() += c * others;
                }
            }
        }
        let mut out = Numeric::default();
        for (key, v) in value {
            let var: f64 = grad[&key].iter().map(|(s, d)| (d * lookup(s).map(|x| x.stderr).unwrap_or(0.0)).powi(2)).sum();
            out.coeffs.insert(key, Estimate { value: v, stderr: var.sqrt() });
        }
        Ok(out)
    }
}

/// `r` as an `f64` fraction, for reports.
pub fn rational_label(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn arities_match(g: &AdmissibleGraph, gammas: &[PolyVectorField]) -> bool {
    g.stars.iter().zip(gammas).all(|(s, gamma)| s.len() == gamma.arity())
}

fn common_dim(gammas: &[PolyVectorField], fallback: usize) -> Result<usize> {
    let dim = gammas.first().map_or(fallback, PolyVectorField::dim);
    match gammas.iter().find(|g| g.dim() != dim) {
        Some(g) => Err(Error::DimensionMismatch(g.dim(), dim)),
        None => Ok(dim),
    }
}

/// Output arity `m = Σ arity − 2n + 2` of `U_n(γ_1,…,γ_n)`, if nonnegative.
pub fn output_arity(gammas: &[PolyVectorField]) -> Option<usize> {
    let total: usize = gammas.iter().map(PolyVectorField::arity).sum();
    (total + 2).checked_sub(2 * gammas.len())
}

/// `U_n(γ_1,…,γ_n) = Σ_Γ W_Γ U_Γ(γ_1,…,γ_n)` as a weighted operator.
pub fn taylor_u_op(book: &WeightBook, gammas: &[PolyVectorField]) -> Result<Weighted<PolyDiffOp>> {
    let n = gammas.len();
    if n == 0 {
        return Err(Error::ArityMismatch { expected: 1, got: 0 });
    }
    let dim = common_dim(gammas, 1)?;
    let mut out = Weighted::zero();
    if gammas.iter().any(PolyVectorField::is_zero) {
        return Ok(out);
    }
    let Some(m) = output_arity(gammas) else {
        return Ok(out);
    };
    for g in enumerate(Flavor::Halfplane, n, m)? {
        if !arities_match(&g, gammas) {
            continue;
        }
        let op = graph_operator(&g, gammas, dim)?;
        if op.is_zero() {
            continue;
        }
        out = out.add(&Weighted::from_expr(&book.weight_expr(&g)?, &op)?)?;
    }
    Ok(out)
}

/// `U_n(γ_1,…,γ_n)(f_1,…,f_m)`.
pub fn taylor_u(book: &WeightBook, gammas: &[PolyVectorField], fs: &[Poly]) -> Result<Weighted<Poly>> {
    let op = taylor_u_op(book, gammas)?;
    if let Some(m) = output_arity(gammas) {
        if m != fs.len() {
            return Err(Error::ArityMismatch { expected: m, got: fs.len() });
        }
    }
    op.map(|o| eval_op(o, fs))
}

/// `Û_n(γ_1,…,γ_n)(chain) = Σ_Γ W_Γ Ω^Γ` over disk graphs with
/// `m = length + 1`.
pub fn taylor_uhat(book: &WeightBook, gammas: &[PolyVectorField], chain: &HochChain) -> Result<Weighted<DiffForm>> {
    let n = gammas.len();
    common_dim(gammas, chain.dim())?;
    let mut out = Weighted::zero();
    if chain.is_zero() || gammas.iter().any(PolyVectorField::is_zero) {
        return Ok(out);
    }
    let m = chain.length() + 1;
    for g in enumerate(Flavor::Disk, n, m)? {
        if !arities_match(&g, gammas) || g.marked.len() > chain.dim() {
            continue;
        }
        let form = eval_disk_graph_chain(&g, gammas, chain)?;
        if form.is_zero() {
            continue;
        }
        out = out.add(&Weighted::from_expr(&book.weight_expr(&g)?, &form)?)?;
    }
    Ok(out)
}

/// `φ_0 = b`, `φ_k = L_{U_k(γ_1,…,γ_k)}`: chains as an L∞-module over
/// `T_poly` through `U`.
pub fn chain_module_phi(book: &WeightBook, gammas: &[PolyVectorField], omega: &Weighted<HochChain>) -> Result<Weighted<HochChain>> {
    if gammas.is_empty() {
        return omega.map(|c| Ok(chain_b(c)));
    }
    let op = taylor_u_op(book, gammas)?;
    op.combine(omega, chain_action)
}

/// `U` as an L∞-morphism `T_poly → D_poly` with weighted values.
pub fn formality_morphism(book: Arc<WeightBook>, max_order: usize) -> MorphismSpec<PolyVectorField, Weighted<PolyDiffOp>> {
    let mut taylor: BTreeMap<usize, TaylorMap<PolyVectorField, Weighted<PolyDiffOp>>> = BTreeMap::new();
    for n in 1..=max_order {
        let book = book.clone();
        taylor.insert(n, Arc::new(move |xs: &[PolyVectorField]| taylor_u_op(&book, xs)));
    }
    MorphismSpec { max_order, taylor }
}

/// `D_poly` on weighted operators.
pub fn weighted_dpoly() -> LInftyAlgebraSpec<Weighted<PolyDiffOp>> {
    LInftyAlgebraSpec::dgla(
        Some(Arc::new(|xs: &[Weighted<PolyDiffOp>]| xs[0].map(|p| Ok(d_hoch(p))))),
        Arc::new(|xs: &[Weighted<PolyDiffOp>]| xs[0].combine(&xs[1], gerstenhaber)),
    )
}

/// Chains over `T_poly` via [`chain_module_phi`], components up to `max_order`.
pub fn weighted_chain_module(book: Arc<WeightBook>, max_order: usize) -> LInftyModuleSpec<PolyVectorField, Weighted<HochChain>> {
    let mut taylor: BTreeMap<usize, ModuleMap<PolyVectorField, Weighted<HochChain>, Weighted<HochChain>>> = BTreeMap::new();
    for k in 0..=max_order {
        let book = book.clone();
        taylor.insert(k, Arc::new(move |xs: &[PolyVectorField], c: &Weighted<HochChain>| chain_module_phi(&book, xs, c)));
    }
    LInftyModuleSpec { max_order, taylor }
}

/// Forms over `T_poly` via `L_γ`, on weighted forms.
pub fn weighted_forms_module() -> LInftyModuleSpec<PolyVectorField, Weighted<DiffForm>> {
    let mut taylor: BTreeMap<usize, ModuleMap<PolyVectorField, Weighted<DiffForm>, Weighted<DiffForm>>> = BTreeMap::new();
    taylor.insert(1, Arc::new(|xs: &[PolyVectorField], w: &Weighted<DiffForm>| w.map(|f| lie_derivative(&xs[0], f))));
    LInftyModuleSpec { max_order: 1, taylor }
}

/// `Û` as a module morphism, components up to `max_order`.
pub fn uhat_morphism(
    book: Arc<WeightBook>,
    max_order: usize,
) -> ModuleMorphismSpec<PolyVectorField, Weighted<HochChain>, Weighted<DiffForm>> {
    let mut taylor: BTreeMap<usize, ModuleMap<PolyVectorField, Weighted<HochChain>, Weighted<DiffForm>>> = BTreeMap::new();
    for k in 0..=max_order {
        let book = book.clone();
        taylor.insert(
            k,
            Arc::new(move |xs: &[PolyVectorField], c: &Weighted<HochChain>| {
                let mut out = Weighted::zero();
                for (mono, chain) in c.terms() {
                    for (inner, f) in taylor_uhat(&book, xs, chain)?.terms {
                        let mut m = mono.clone();
                        m.extend(inner);
                        out.push(m, f)?;
                    }
                }
                Ok(out)
            }),
        );
    }
    ModuleMorphismSpec { max_order, taylor }
}

/// Residual of the module-morphism identity for `Û` with `k + 2` polyvectors.
pub fn verify_chain_formality(
    book: Arc<WeightBook>,
    k: i64,
    gammas: &[PolyVectorField],
    omega: &HochChain,
) -> Result<Weighted<DiffForm>> {
    let order = (k + 2).max(0) as usize;
    let mor = uhat_morphism(book.clone(), order);
    let source = weighted_chain_module(book, order);
    let target = weighted_forms_module();
    let r = check_module_morphism_identity(&mor, &tpoly(), &source, &target, k, gammas, &Weighted::exact(omega.clone()))?;
    Ok(r.unwrap_or_else(Weighted::zero))
}

/// `f * g = Σ_n ħⁿ B_n(f, g)` with `B_0 = m` and `B_n = U_n(π,…,π)/n!`.
#[derive(Clone, Debug)]
pub struct StarProduct {
    pub dim: usize,
    pub poisson: PolyVectorField,
    pub order: usize,
    /// `B_0 … B_order`.
    pub b: Vec<Weighted<PolyDiffOp>>,
}

fn require_poisson(pi: &PolyVectorField) -> Result<()> {
    if pi.arity() != 2 && !pi.is_zero() {
        return Err(Error::NotMaurerCartan(format!("expected a bivector, got arity {}", pi.arity())));
    }
    if !schouten(pi, pi)?.is_zero() {
        return Err(Error::NotMaurerCartan("[π,π] ≠ 0".into()));
    }
    Ok(())
}

fn series_of(pi: &PolyVectorField) -> HSeries<PolyVectorField> {
    vec![None, Some(pi.clone())]
}

impl StarProduct {
    pub fn new(book: Arc<WeightBook>, pi: &PolyVectorField, order: usize) -> Result<Self> {
        require_poisson(pi)?;
        let dim = pi.dim();
        let u = formality_morphism(book, order);
        let image = mc_image(&u, &series_of(pi), order)?;
        let mut b = vec![Weighted::exact(PolyDiffOp::product(dim))];
        b.extend(image.into_iter().skip(1).map(|t| t.unwrap_or_else(Weighted::zero)));
        Ok(StarProduct { dim, poisson: pi.clone(), order, b })
    }

    fn apply(op: &Weighted<PolyDiffOp>, f: &Weighted<Poly>, g: &Weighted<Poly>) -> Result<Weighted<Poly>> {
        let mut out = Weighted::zero();
        for (mo, o) in op.terms() {
            for (mf, a) in f.terms() {
                for (mg, b) in g.terms() {
                    let m: Monomial = mo.iter().chain(mf).chain(mg).cloned().collect();
                    out.push(m, eval_op(o, &[a.clone(), b.clone()])?)?;
                }
            }
        }
        Ok(out)
    }

    /// Coefficients of `ħ⁰ … ħ^order` in `f * g`.
    pub fn multiply(&self, f: &Poly, g: &Poly) -> Result<Vec<Weighted<Poly>>> {
        self.multiply_series(&[Weighted::exact(f.clone())], &[Weighted::exact(g.clone())])
    }

    /// Star product of two truncated ħ-series.
    pub fn multiply_series(&self, f: &[Weighted<Poly>], g: &[Weighted<Poly>]) -> Result<Vec<Weighted<Poly>>> {
        let mut out = vec![Weighted::zero(); self.order + 1];
        for (i, fi) in f.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                for (k, bk) in self.b.iter().enumerate() {
                    let t = i + j + k;
                    if t <= self.order {
                        out[t] = out[t].add(&Self::apply(bk, fi, gj)?)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `(f*g)*h − f*(g*h)` order by order.
    pub fn associativity_defect(&self, f: &Poly, g: &Poly, h: &Poly) -> Result<Vec<Weighted<Poly>>> {
        let ex = |p: &Poly| vec![Weighted::exact(p.clone())];
        let left = self.multiply_series(&self.multiply(f, g)?, &ex(h))?;
        let right = self.multiply_series(&ex(f), &self.multiply(g, h)?)?;
        left.iter().zip(&right).map(|(a, b)| a.sub(b)).collect()
    }

    /// `f*g − g*f` order by order.
    pub fn commutator(&self, f: &Poly, g: &Poly) -> Result<Vec<Weighted<Poly>>> {
        let a = self.multiply(f, g)?;
        let b = self.multiply(g, f)?;
        a.iter().zip(&b).map(|(x, y)| x.sub(y)).collect()
    }
}


/// MC residual `d π̃ + ½[π̃, π̃]` of `π̃ = Σ_n ħⁿ U_n(π,…,π)/n!` in `D_poly`,
/// order by order.
pub fn mc_residual(book: Arc<WeightBook>, pi: &PolyVectorField, order: usize) -> Result<Vec<Weighted<PolyDiffOp>>> {
    require_poisson(pi)?;
    let image = mc_image(&formality_morphism(book, order), &series_of(pi), order)?;
    // the ħ⁰ product m is the base point of the deformation: B = m + π̃
    let mut shifted = image.clone();
    shifted[0] = Some(Weighted::exact(PolyDiffOp::product(pi.dim())));
    let mut out = vec![Weighted::zero(); order + 1];
    let bracket = |a: &Weighted<PolyDiffOp>, b: &Weighted<PolyDiffOp>| a.combine(b, gerstenhaber);
    for (t, slot) in out.iter_mut().enumerate() {
        for i in 0..=t {
            if let (Some(a), Some(b)) = (&shifted[i], &shifted[t - i]) {
                *slot = slot.add(&bracket(a, b)?.scale(&Rational::new(1.into(), 2.into())))?;
            }
        }
    }
    Ok(out)
}

/// `T_{ħπ}Û(chain) = Σ_k ħ^k/k! Û_k(π,…,π; chain)` through `ħ^order`.
pub fn tangent_chain_map(book: Arc<WeightBook>, pi: &PolyVectorField, order: usize, chain: &HochChain) -> Result<Vec<Weighted<DiffForm>>> {
    require_poisson(pi)?;
    let mor = uhat_morphism(book, order);
    let a = vec![Some(Weighted::exact(chain.clone()))];
    let out = tangent_map(&mor, &series_of(pi), &a, order)?;
    Ok(out.into_iter().map(|t| t.unwrap_or_else(Weighted::zero)).collect())
}

/// `d_π ∘ d_π` on forms through `ħ^order`, `d_π = L_{ħπ}`.
pub fn forms_differential_square(pi: &PolyVectorField, omega: &DiffForm, order: usize) -> Result<Vec<DiffForm>> {
    let module = crate::linfty::forms_module();
    let once = tangent_differential(&module, &series_of(pi), &vec![Some(omega.clone())], order)?;
    let twice = tangent_differential(&module, &series_of(pi), &once, order)?;
    Ok(twice.into_iter().map(|t| t.unwrap_or_else(|| DiffForm::zero(omega.dim(), omega.formdeg()))).collect())
}

/// `ρ_k` with `Σ_{Γ ≅ wheel_k} W_Γ U_Γ(π,…,π)/k! = ρ_k W(wheel_k) Tr_k` for
/// a linear Poisson structure: `(k−1)!` relabelings, `2^k` edge orders, and
/// the sign `(−1)^k` from `c^a_{bc} = −(ad e_b)^a_c` at each vertex.
pub fn wheel_rho(k: usize) -> Rational {
    let two_k = Rational::from_integer(num_bigint::BigInt::from(2).pow(k as u32));
    let r = two_k / Rational::from_integer((k as i64).into());
    if k % 2 == 1 {
        -r
    } else {
        r
    }
}

/// `w_k = ρ_k W(wheel_k)` as a weight expression.
pub fn wheel_weight(book: &WeightBook, k: usize) -> Result<WeightExpr> {
    let expr = book.weight_expr(&wheel(k)?)?;
    let rho = wheel_rho(k);
    let mut out = WeightExpr::default();
    for (s, c) in expr.terms {
        out.add(s, c * &rho);
    }
    Ok(out)
}

fn apply_tr(g: &LieAlgebraData, k: usize, w: &Weighted<Poly>) -> Result<Weighted<Poly>> {
    w.map(|p| Ok(tr_k(g, k, p)))
}

/// `exp(Σ_k ħ^k w_k Tr_k) a` through `ħ^order`, with one factor of `w_k`
/// per wheel (exponential of connected graphs). Odd wheels enter with
/// their exact zero weights.
pub fn trace_map(book: &WeightBook, g: &LieAlgebraData, a: &Poly, order: usize) -> Result<Vec<Weighted<Poly>>> {
    let weights: Vec<Option<WeightExpr>> =
        (0..=order).map(|k| if k >= 2 { wheel_weight(book, k).map(Some) } else { Ok(None) }).collect::<Result<_>>()?;
    // X(s) = Σ_k ħ^k w_k Tr_k s, applied j times with 1/j!
    let mut term: Vec<Weighted<Poly>> = vec![Weighted::zero(); order + 1];
    term[0] = Weighted::exact(a.clone());
    let mut out = term.clone();
    for j in 1..=order / 2 {
        let mut next = vec![Weighted::zero(); order + 1];
        for (o, t) in term.iter().enumerate() {
            if t.is_zero() {
                continue;
            }
            for (k, w) in weights.iter().enumerate() {
                let Some(w) = w else { continue };
                if o + k > order || w.terms.is_empty() {
                    continue;
                }
                let lifted = Weighted::from_expr(w, &Poly::one(a.dim()))?;
                let applied = lifted.combine(&apply_tr(g, k, t)?, |c, p| Ok(&(*c) * p))?;
                next[o + k] = next[o + k].add(&applied)?;
            }
        }
        let inv = Rational::new(1.into(), (j as i64).into());
        term = next.iter().map(|t| t.scale(&inv)).collect();
        for (o, t) in term.iter().enumerate() {
            out[o] = out[o].add(t)?;
        }
    }
    Ok(out)
}

/// The same series from the disk graph sum `T_{ħπ}Û` on the 0-chain `a`.
pub fn trace_map_direct(book: Arc<WeightBook>, g: &LieAlgebraData, a: &Poly, order: usize) -> Result<Vec<Weighted<Poly>>> {
    let chain = HochChain::tensor(std::slice::from_ref(a));
    let forms = tangent_chain_map(book, &g.linear_poisson(), order, &chain)?;
    forms.iter().map(|w| w.map(|f| Ok(f.coeff(&[])))).collect()
}

/// Cup product on `T_poly`: the wedge product.
pub fn cup_tpoly(a: &PolyVectorField, b: &PolyVectorField) -> Result<PolyVectorField> {
    a.wedge(b)
}

/// Cup product of a polyvector with a form: the contraction `i_γ ω`.
pub fn cup_forms(gamma: &PolyVectorField, omega: &DiffForm) -> Result<DiffForm> {
    contract(gamma, omega)
}

/// `(Ψ_1 ∪ Ψ_2)(a_1,…,a_{k+l}) = Ψ_1(a_1,…,a_k) * Ψ_2(a_{k+1},…,a_{k+l})`.
pub fn cup_dpoly(star: &StarProduct, psi1: &PolyDiffOp, psi2: &PolyDiffOp, args: &[Poly]) -> Result<Vec<Weighted<Poly>>> {
    let (k, l) = (psi1.arity(), psi2.arity());
    if args.len() != k + l {
        return Err(Error::ArityMismatch { expected: k + l, got: args.len() });
    }
    star.multiply(&eval_op(psi1, &args[..k])?, &eval_op(psi2, &args[k..])?)
}

/// `Ψ(a_0⊗…⊗a_n) = (a_0 * Ψ(a_1,…,a_k)) ⊗ a_{k+1} ⊗ … ⊗ a_n`.
pub fn cup_chain(star: &StarProduct, psi: &Weighted<PolyDiffOp>, omega: &Weighted<HochChain>) -> Result<Vec<Weighted<HochChain>>> {
    let mut out = vec![Weighted::zero(); star.order + 1];
    for (mp, op) in psi.terms() {
        let k = op.arity();
        for (mw, chain) in omega.terms() {
            if k > chain.length() {
                return Err(Error::Grading(format!("arity {k} exceeds chain length {}", chain.length())));
            }
            for (slots, w) in chain.tensors() {
                let inner = eval_op(op, &slots[1..=k])?;
                for (o, prod) in star.multiply(&slots[0], &inner)?.into_iter().enumerate() {
                    for (ms, p) in prod.terms() {
                        let mut tensor = vec![p.clone()];
                        tensor.extend(slots[k + 1..].iter().cloned());
                        let m: Monomial = mp.iter().chain(mw).chain(ms).cloned().collect();
                        out[o].push(m, HochChain::tensor(&tensor).scale(&w))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact symbol values forced by `U_1 = hkr` on polyvectors of arity
/// `1..=max_arity` in dimension `dim`.
pub fn calibrate_u1(book: &WeightBook, dim: usize, max_arity: usize) -> Result<BTreeMap<String, Rational>> {
    let mut equations: Vec<(SparseVec<String>, Rational)> = vec![];
    for arity in 1..=max_arity.min(dim) {
        let idx: Vec<usize> = (0..arity).collect();
        let gamma = PolyVectorField::term(dim, &idx, Poly::one(dim));
        let diff = taylor_u_op(book, std::slice::from_ref(&gamma))?.sub(&Weighted::exact(hkr(&gamma)))?;
        // one equation per basis label: Σ_s coeff_s · s + const = 0
        let mut rows: BTreeMap<String, (SparseVec<String>, Rational)> = BTreeMap::new();
        for (mono, op) in diff.terms() {
            if mono.len() > 1 {
                return Err(Error::Degenerate("calibration expects linear symbols".into()));
            }
            for (label, c) in op.flatten() {
                let row = rows.entry(label).or_insert_with(|| (SparseVec::new(), Rational::zero()));
                match mono.first() {
                    Some(s) => *row.0.entry(s.clone()).or_insert_with(Rational::zero) += c,
                    None => row.1 -= c,
                }
            }
        }
        equations.extend(rows.into_values());
    }
    // unknowns as columns of the transposed system
    let mut symbols: Vec<String> = equations.iter().flat_map(|(r, _)| r.keys().cloned()).collect();
    symbols.sort();
    symbols.dedup();
    let mut basis = SpanBasis::new();
    for s in &symbols {
        let col: SparseVec<usize> =
            equations.iter().enumerate().filter_map(|(i, (r, _))| r.get(s).map(|c| (i, c.clone()))).filter(|(_, c)| !c.is_zero()).collect();
        basis.push(col);
    }
    let rhs: SparseVec<usize> = equations.iter().enumerate().filter(|(_, (_, b))| !b.is_zero()).map(|(i, (_, b))| (i, b.clone())).collect();
    let red = basis.reduce(&rhs);
    if !red.in_span() || basis.rank() != symbols.len() {
        return Err(Error::Degenerate("U_1 = hkr does not determine the weights".into()));
    }
    Ok(symbols.into_iter().enumerate().map(|(i, s)| (s, red.coefficients.get(&i).cloned().unwrap_or_else(Rational::zero))).collect())
}

/// Certificate that `target = Σ c_i {F_i, G_i}` over monomials `F_i, G_i`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BracketCertificate {
    pub feasible: bool,
    pub degree_bound: u32,
    /// `(F, G, c)` as printable monomials and coefficient.
    pub terms: Vec<(String, String, String)>,
    /// Part of the target outside the span (empty when feasible).
    pub remainder: String,
}

fn poly_vec(p: &Poly) -> SparseVec<Vec<u32>> {
    p.terms().map(|(e, c)| (e.clone(), c.clone())).collect()
}

fn vec_poly(dim: usize, v: &SparseVec<Vec<u32>>) -> Poly {
    let mut p = Poly::zero(dim);
    for (e, c) in v {
        p.add_assign_ref(&Poly::monomial(e.clone(), c.clone()));
    }
    p
}

/// Brackets `{F, G}` of monomial pairs with bracket degree at most
/// `degree_bound`, as an echelon basis, with the pairs.
fn bracket_basis(pi: &PolyVectorField, degree_bound: u32) -> (SpanBasis<Vec<u32>>, Vec<(Poly, Poly)>) {
    let dim = pi.dim();
    let mut basis = SpanBasis::new();
    let mut labels = vec![];
    let mut all: Vec<Vec<u32>> = vec![];
    for d in 1..=degree_bound + 1 {
        all.extend(monomials(dim, d));
    }
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            let fa = Poly::monomial(a.clone(), Rational::one());
            let fb = Poly::monomial(b.clone(), Rational::one());
            let br = poisson_bracket(pi, &fa, &fb);
            if br.is_zero() || br.degree().unwrap_or(0) > degree_bound {
                continue;
            }
            basis.push(poly_vec(&br));
            labels.push((fa, fb));
        }
    }
    (basis, labels)
}

/// Decides `target ∈ span{F, G}` over monomial pairs whose bracket has
/// degree at most `degree_bound`.
pub fn bracket_span_certificate(pi: &PolyVectorField, target: &Poly, degree_bound: u32) -> BracketCertificate {
    let (basis, labels) = bracket_basis(pi, degree_bound);
    let red = basis.reduce(&poly_vec(target));
    let terms = red
        .coefficients
        .iter()
        .map(|(i, c)| (labels[*i].0.to_string(), labels[*i].1.to_string(), rational_label(c)))
        .collect();
    BracketCertificate {
        feasible: red.in_span(),
        degree_bound,
        terms,
        remainder: vec_poly(pi.dim(), &red.remainder).to_string(),
    }
}

/// One ħ-order of the star commutator.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CommutatorOrder {
    pub order: usize,
    pub value: Numeric,
    /// True when the coefficient vanishes identically in the weights.
    pub exact_zero: bool,
    /// Span certificates for the exact part and each symbol coefficient.
    pub certificates: Vec<BracketCertificate>,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct CommutatorReport {
    pub orders: Vec<CommutatorOrder>,
    /// `C_1(f,h) = {f,h}` after substituting the `U_1 = hkr` calibration.
    pub c1_matches_bracket: bool,
    pub calibration: BTreeMap<String, String>,
}

impl CommutatorReport {
    /// Every certificate found a decomposition.
    pub fn all_feasible(&self) -> bool {
        self.orders.iter().all(|o| o.certificates.iter().all(|c| c.feasible))
    }
}

/// Splits `f*h − h*f = Σ ħⁿ C_n(f,h)` for the linear Poisson structure of
/// `g` and certifies each `C_n` against the span of Poisson brackets.
pub fn commutator_bracket_structure(
    book: Arc<WeightBook>,
    g: &LieAlgebraData,
    f: &Poly,
    h: &Poly,
    order: usize,
    degree_bound: u32,
) -> Result<CommutatorReport> {
    let pi = g.linear_poisson();
    let star = StarProduct::new(book.clone(), &pi, order)?;
    let comm = star.commutator(f, h)?;
    let calibration = calibrate_u1(&book, pi.dim(), 2)?;
    let c1 = comm.get(1).cloned().unwrap_or_else(Weighted::zero).substitute(&|s| calibration.get(s).cloned())?;
    let bracket = poisson_bracket(&pi, f, h);
    let c1_matches_bracket = c1.is_exact() && c1.exact_part().map_or(bracket.is_zero(), |p| *p == bracket);
    let mut orders = vec![];
    for (n, c) in comm.iter().enumerate() {
        let certificates = c.terms().values().map(|p| bracket_span_certificate(&pi, p, degree_bound)).collect();
        orders.push(CommutatorOrder { order: n, value: c.evaluate(&book)?, exact_zero: c.is_zero(), certificates });
    }
    Ok(CommutatorReport {
        orders,
        c1_matches_bracket,
        calibration: calibration.iter().map(|(s, v)| (s.clone(), rational_label(v))).collect(),
    })
}

/// Residual of the module compatibility
/// `T Û((T U)(η) ∪ ω) − η ∪ T Û(ω)` at the level of representatives.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ModuleProbe {
    /// Per ħ-order residual values with error bars.
    pub residual: Vec<Numeric>,
    /// For 0-form residuals: the part left after removing Poisson brackets
    /// (the image of `L_{ħπ}` on 1-forms), per order.
    pub modulo_brackets: Vec<Option<Numeric>>,
}

/// Measures the module compatibility residual through `ħ^order`.
pub fn conjecture_module_probe(
    book: Arc<WeightBook>,
    pi: &PolyVectorField,
    eta: &PolyVectorField,
    omega: &HochChain,
    order: usize,
    degree_bound: u32,
) -> Result<ModuleProbe> {
    require_poisson(pi)?;
    let star = StarProduct::new(book.clone(), pi, order)?;
    let u = formality_morphism(book.clone(), order + 1);
    let tu = tangent_map_algebra(&u, &series_of(pi), &vec![Some(eta.clone())], order)?;
    // (T U)(η) ∪ ω as an ħ-series of weighted chains
    let mut cupped: Vec<Weighted<HochChain>> = vec![Weighted::zero(); order + 1];
    let om = Weighted::exact(omega.clone());
    for (i, t) in tu.iter().enumerate() {
        let Some(t) = t else { continue };
        for (j, c) in cup_chain(&star, t, &om)?.into_iter().enumerate() {
            if i + j <= order {
                cupped[i + j] = cupped[i + j].add(&c)?;
            }
        }
    }
    let mor = uhat_morphism(book.clone(), order);
    let lhs = tangent_map(&mor, &series_of(pi), &cupped.into_iter().map(Some).collect::<Vec<_>>(), order)?;
    let rhs = tangent_map(&mor, &series_of(pi), &vec![Some(om)], order)?;
    let mut residual = vec![];
    let mut modulo_brackets = vec![];
    for k in 0..=order {
        let l = lhs[k].clone().unwrap_or_else(Weighted::zero);
        let r = match &rhs[k] {
            Some(r) => r.map(|f| cup_forms(eta, f))?,
            None => Weighted::zero(),
        };
        let res = l.sub(&r)?;
        residual.push(res.evaluate(&book)?);
        let zero_forms = res.terms().values().all(|f| f.formdeg() == 0);
        modulo_brackets.push(if zero_forms {
            let mut reduced = Weighted::zero();
            for (m, f) in res.terms() {
                let cert = bracket_remainder(pi, &f.coeff(&[]), degree_bound);
                reduced.push(m.clone(), DiffForm::function(cert))?;
            }
            Some(reduced.evaluate(&book)?)
        } else {
            None
        });
    }
    Ok(ModuleProbe { residual, modulo_brackets })
}

fn bracket_remainder(pi: &PolyVectorField, p: &Poly, degree_bound: u32) -> Poly {
    let (basis, _) = bracket_basis(pi, degree_bound);
    vec_poly(pi.dim(), &basis.reduce(&poly_vec(p)).remainder)
}

/// Degree-zero form of the Duflo module compatibility:
/// `φ_D(ω·η) − φ_D(ω)·φ_D(η)` in `U(g)` modulo `[g, U(g)]`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DufloProbe {
    /// The difference in `U(g)` (PBW normal order).
    pub residual: String,
    /// Its image in the coinvariants, reduced against the commutators
    /// `[e_i, u]` with PBW monomials `u` up to the residual's degree.
    pub coinvariant_remainder: String,
    pub vanishes_in_coinvariants: bool,
}

/// Exact probe of the degree-zero compatibility for invariant `omega`.
pub fn conjecture_duflo_probe(g: &LieAlgebraData, omega: &Poly, eta: &Poly) -> Result<DufloProbe> {
    if !g.is_invariant(omega) {
        return Err(Error::InvalidArgument("ω must be invariant".into()));
    }
    let dim = g.dim();
    let mut u = Enveloping::new(g);
    let lhs = u.phi_d(&(omega * eta))?;
    let rhs = {
        let a = u.phi_d(omega)?;
        let b = u.phi_d(eta)?;
        u.multiply(&a, &b)?
    };
    let residual = lhs.try_add(&rhs.scale(&-Rational::one()))?;
    let top = residual.degree().unwrap_or(0);
    let mut basis = SpanBasis::new();
    for d in 0..=top {
        for m in monomials(dim, d) {
            let mono = Poly::monomial(m, Rational::one());
            for i in 0..dim {
                let x = Poly::var(dim, i);
                let c = u.multiply(&x, &mono)?.try_add(&u.multiply(&mono, &x)?.scale(&-Rational::one()))?;
                if !c.is_zero() {
                    basis.push(poly_vec(&c));
                }
            }
        }
    }
    let rem = vec_poly(dim, &basis.reduce(&poly_vec(&residual)).remainder);
    Ok(DufloProbe { residual: residual.to_string(), vanishes_in_coinvariants: rem.is_zero(), coinvariant_remainder: rem.to_string() })
}

/// `b_*(Ψ∪ω) − (d_*Ψ)∪ω − (−1)^k Ψ∪(b_*ω)` order by order, with
/// `b_* = L_B`, `d_* = [B, ·]` and `B = Σ ħⁿ B_n` the star product.
pub fn cup_chain_map_residual(star: &StarProduct, psi: &PolyDiffOp, omega: &HochChain) -> Result<Vec<Weighted<HochChain>>> {
    let n = star.order;
    let k = psi.arity();
    let psi_w = Weighted::exact(psi.clone());
    let om = Weighted::exact(omega.clone());
    let mut out = vec![Weighted::zero(); n + 1];
    let mut add = |o: usize, w: Weighted<HochChain>, s: i64| -> Result<()> {
        if o <= n {
            out[o] = out[o].add(&w.scale(&Rational::from_integer(s.into())))?;
        }
        Ok(())
    };
    let sign = if k % 2 == 0 { 1 } else { -1 };
    let cupped = cup_chain(star, &psi_w, &om)?;
    for (i, bi) in star.b.iter().enumerate() {
        for (j, c) in cupped.iter().enumerate() {
            add(i + j, bi.combine(c, chain_action)?, 1)?;
        }
        let d_psi = bi.combine(&psi_w, gerstenhaber)?;
        if d_psi.terms().values().all(|op| op.arity() <= omega.length()) {
            for (j, c) in cup_chain(star, &d_psi, &om)?.into_iter().enumerate() {
                add(i + j, c, -1)?;
            }
        }
        let b_om = bi.combine(&om, chain_action)?;
        if k <= omega.length().saturating_sub(1) {
            for (j, c) in cup_chain(star, &psi_w, &b_om)?.into_iter().enumerate() {
                add(i + j, c, -sign)?;
            }
        }
    }
    Ok(out)
}
