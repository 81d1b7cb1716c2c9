//! Polyvector fields and differential forms on R^d with polynomial
//! coefficients.
//!
//! Both are stored as maps from strictly increasing index tuples to
//! coefficients. A polyvector of arity `a` has degree `a - 1` in the graded
//! Lie algebra of polyvectors; a `p`-form has degree `-p`.
//!
//! Sign conventions (all checked by the identity suites):
//! - `i_{X1^..^Xa} w` inserts `X1..Xa` into the first slots of `w`, so
//!   `i_{d0^d1}(dx0^dx1) = 1`.
//! - `L_g = i_g o d - (-1)^a d o i_g`, the graded commutator `[i_g, d]`.
//! - The bracket is the Schouten-Nijenhuis bracket normalized so that
//!   `[X, f] = X(f)` and `[X0^X1, h] = X0(h) X1 - X1(h) X0`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::symbolic::{Poly, Rational};
use num_traits::{One, Zero};

/// Strictly increasing index tuple.
pub type IndexSet = Vec<usize>;

type ExtTerms = BTreeMap<IndexSet, Poly>;

fn add_ext(terms: &mut ExtTerms, idx: IndexSet, c: Poly) {
    if c.is_zero() {
        return;
    }
    match terms.entry(idx) {
        std::collections::btree_map::Entry::Vacant(v) => {
            v.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut o) => {
            let s = o.get() + &c;
            if s.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = s;
            }
        }
    }
}

/// Sorts an index list, returning the permutation sign, or `None` on a repeat.
pub fn sort_sign(idx: &[usize]) -> Option<(IndexSet, i32)> {
    let mut v = idx.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// `θ_I θ_J` in the exterior algebra.
fn wedge_idx(a: &[usize], b: &[usize]) -> Option<(IndexSet, i32)> {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    sort_sign(&v)
}

fn wedge_terms(a: &ExtTerms, b: &ExtTerms) -> ExtTerms {
    let mut out = ExtTerms::new();
    for (ia, ca) in a {
        for (ib, cb) in b {
            if let Some((idx, s)) = wedge_idx(ia, ib) {
                let c = ca * cb;
                add_ext(&mut out, idx, if s > 0 { c } else { -c });
            }
        }
    }
    out
}

fn scale_terms(a: &ExtTerms, s: &Rational) -> ExtTerms {
    let mut out = ExtTerms::new();
    for (i, c) in a {
        add_ext(&mut out, i.clone(), c.scale(s));
    }
    out
}

fn sum_terms(a: &ExtTerms, b: &ExtTerms) -> ExtTerms {
    let mut out = a.clone();
    for (i, c) in b {
        add_ext(&mut out, i.clone(), c.clone());
    }
    out
}

/// Right derivative `← ∂/∂θ_i`.
fn right_deriv(a: &ExtTerms, i: usize) -> ExtTerms {
    let mut out = ExtTerms::new();
    for (idx, c) in a {
        if let Some(k) = idx.iter().position(|&j| j == i) {
            let mut rest = idx.clone();
            rest.remove(k);
            let sign_neg = (idx.len() - 1 - k) % 2 == 1;
            add_ext(&mut out, rest, if sign_neg { -c } else { c.clone() });
        }
    }
    out
}

fn partial_terms(a: &ExtTerms, i: usize) -> ExtTerms {
    let mut out = ExtTerms::new();
    for (idx, c) in a {
        add_ext(&mut out, idx.clone(), c.partial(i).expect("index in range"));
    }
    out
}

fn fmt_ext(f: &mut fmt::Formatter<'_>, terms: &ExtTerms, sym: &str, sep: &str) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    let parts: Vec<String> = terms
        .iter()
        .map(|(idx, c)| {
            if idx.is_empty() {
                format!("({c})")
            } else {
                let w: Vec<String> = idx.iter().map(|i| format!("{sym}{i}")).collect();
                format!("({c}) * {}", w.join(sep))
            }
        })
        .collect();
    write!(f, "{}", parts.join(" + "))
}

/// A polyvector field `Σ c_I ∂_{I1}∧…∧∂_{Ia}`.
#[derive(Clone)]
pub struct PolyVectorField {
    dim: usize,
    arity: usize,
    coeffs: ExtTerms,
}

// Zero elements compare equal regardless of their nominal grading.
impl PartialEq for PolyVectorField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.coeffs == other.coeffs
            && (self.coeffs.is_empty() || self.arity == other.arity)
    }
}

impl Eq for PolyVectorField {}

impl std::hash::Hash for PolyVectorField {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        if !self.coeffs.is_empty() {
            self.arity.hash(state);
        }
        self.coeffs.hash(state);
    }
}

/// A differential form `Σ c_J dx^{J1}∧…∧dx^{Jp}`.
#[derive(Clone)]
pub struct DiffForm {
    dim: usize,
    formdeg: usize,
    coeffs: ExtTerms,
}

// Zero elements compare equal regardless of their nominal grading.
impl PartialEq for DiffForm {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.coeffs == other.coeffs
            && (self.coeffs.is_empty() || self.formdeg == other.formdeg)
    }
}

impl Eq for DiffForm {}

impl std::hash::Hash for DiffForm {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        if !self.coeffs.is_empty() {
            self.formdeg.hash(state);
        }
        self.coeffs.hash(state);
    }
}

impl PolyVectorField {
    pub fn zero(dim: usize, arity: usize) -> Self {
        Self { dim, arity, coeffs: ExtTerms::new() }
    }

    pub fn function(f: Poly) -> Self {
        let mut v = Self::zero(f.dim(), 0);
        add_ext(&mut v.coeffs, vec![], f);
        v
    }

    /// `c * ∂_{idx[0]} ∧ … ` for an arbitrary (not necessarily sorted) index list.
    pub fn term(dim: usize, idx: &[usize], c: Poly) -> Self {
        assert_eq!(c.dim(), dim);
        let mut v = Self::zero(dim, idx.len());
        assert!(idx.iter().all(|&i| i < dim), "index out of range");
        if let Some((s, sign)) = sort_sign(idx) {
            add_ext(&mut v.coeffs, s, if sign > 0 { c } else { -c });
        }
        v
    }

    pub fn from_terms(dim: usize, arity: usize, terms: impl IntoIterator<Item = (IndexSet, Poly)>) -> Self {
        let mut v = Self::zero(dim, arity);
        for (idx, c) in terms {
            assert_eq!(idx.len(), arity);
            v = &v + &Self::term(dim, &idx, c);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Degree in the graded Lie algebra of polyvectors.
    pub fn degree(&self) -> i64 {
        self.arity as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &BTreeMap<IndexSet, Poly> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &[usize]) -> Poly {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| Poly::zero(self.dim))
    }

    /// Component of the fully antisymmetric coefficient tensor `γ^{i1…ia}`.
    pub fn tensor_component(&self, idx: &[usize]) -> Poly {
        match sort_sign(idx) {
            None => Poly::zero(self.dim),
            Some((s, sign)) => {
                let c = self.coeff(&s);
                if sign > 0 {
                    c
                } else {
                    -c
                }
            }
        }
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { dim: self.dim, arity: self.arity, coeffs: scale_terms(&self.coeffs, s) }
    }

    pub fn mul_poly(&self, f: &Poly) -> Self {
        let mut out = Self::zero(self.dim, self.arity);
        for (i, c) in &self.coeffs {
            add_ext(&mut out.coeffs, i.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            arity: self.arity + other.arity,
            coeffs: wedge_terms(&self.coeffs, &other.coeffs),
        })
    }

    /// Applies the vector field (arity 1) to a function.
    pub fn apply_to(&self, f: &Poly) -> Poly {
        assert_eq!(self.arity, 1);
        let mut out = Poly::zero(self.dim);
        for (idx, c) in &self.coeffs {
            out.add_assign_ref(&(c * &f.partial(idx[0]).unwrap()));
        }
        out
    }

    pub fn parse(dim: usize, s: &str) -> Result<Self> {
        parse_graded(dim, s, 'd').map(|(arity, coeffs)| Self { dim, arity, coeffs })
    }
}

impl DiffForm {
    pub fn zero(dim: usize, formdeg: usize) -> Self {
        Self { dim, formdeg, coeffs: ExtTerms::new() }
    }

    pub fn function(f: Poly) -> Self {
        let mut w = Self::zero(f.dim(), 0);
        add_ext(&mut w.coeffs, vec![], f);
        w
    }

    pub fn term(dim: usize, idx: &[usize], c: Poly) -> Self {
        assert_eq!(c.dim(), dim);
        assert!(idx.iter().all(|&i| i < dim), "index out of range");
        let mut w = Self::zero(dim, idx.len());
        if let Some((s, sign)) = sort_sign(idx) {
            add_ext(&mut w.coeffs, s, if sign > 0 { c } else { -c });
        }
        w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn formdeg(&self) -> usize {
        self.formdeg
    }

    pub fn degree(&self) -> i64 {
        -(self.formdeg as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &BTreeMap<IndexSet, Poly> {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &[usize]) -> Poly {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| Poly::zero(self.dim))
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { dim: self.dim, formdeg: self.formdeg, coeffs: scale_terms(&self.coeffs, s) }
    }

    pub fn mul_poly(&self, f: &Poly) -> Self {
        let mut out = Self::zero(self.dim, self.formdeg);
        for (i, c) in &self.coeffs {
            add_ext(&mut out.coeffs, i.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            formdeg: self.formdeg + other.formdeg,
            coeffs: wedge_terms(&self.coeffs, &other.coeffs),
        }
    }

    /// Exact differential `d f` of a function.
    pub fn exact(f: &Poly) -> Self {
        de_rham(&Self::function(f.clone()))
    }

    /// Sums forms of (possibly) different degrees; mixed degrees are an error.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.formdeg != other.formdeg {
            return Err(Error::Grading(format!(
                "cannot add forms of degree {} and {}",
                self.formdeg, other.formdeg
            )));
        }
        Ok(Self { dim: self.dim, formdeg: self.formdeg, coeffs: sum_terms(&self.coeffs, &other.coeffs) })
    }

    /// Numeric coefficients at a point, keyed by index set.
    pub fn eval_f64(&self, x: &[f64]) -> BTreeMap<IndexSet, f64> {
        self.coeffs.iter().map(|(k, c)| (k.clone(), c.eval_f64(x))).collect()
    }

    pub fn parse(dim: usize, s: &str) -> Result<Self> {
        parse_graded(dim, s, 'd').map(|(formdeg, coeffs)| Self { dim, formdeg, coeffs })
    }
}

/// Parses `coeffPoly * d0^d1 + ...`; a bare polynomial is arity 0.
fn parse_graded(dim: usize, s: &str, sym: char) -> Result<(usize, ExtTerms)> {
    let mut terms = ExtTerms::new();
    let mut arity: Option<usize> = None;
    // split on top-level '+' / '-' is fragile with polynomial coefficients, so
    // the grammar requires each term to be `(poly) * d..` or `poly * d..`
    // separated by ` + `.
    for raw in split_top_level(s) {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(Error::Parse { pos: 0, msg: "empty term".into() });
        }
        let (coeff_src, wedge_src) = match find_wedge(raw, sym) {
            Some(pos) => (raw[..pos].trim().trim_end_matches('*').trim(), Some(&raw[pos..])),
            None => (raw, None),
        };
        let coeff = if coeff_src.is_empty() { Poly::one(dim) } else { Poly::parse(dim, coeff_src)? };
        let idx: Vec<usize> = match wedge_src {
            None => vec![],
            Some(w) => w
                .split('^')
                .map(|t| {
                    let t = t.trim();
                    t.strip_prefix(sym)
                        .and_then(|n| n.parse::<usize>().ok())
                        .filter(|&i| i < dim)
                        .ok_or(Error::Parse { pos: 0, msg: format!("bad wedge factor '{t}'") })
                })
                .collect::<Result<_>>()?,
        };
        match arity {
            None => arity = Some(idx.len()),
            Some(a) if a != idx.len() => {
                return Err(Error::Parse { pos: 0, msg: "mixed arities in one element".into() })
            }
            _ => {}
        }
        if let Some((sorted, sign)) = sort_sign(&idx) {
            add_ext(&mut terms, sorted, if sign > 0 { coeff } else { -coeff });
        }
    }
    Ok((arity.unwrap_or(0), terms))
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = vec![];
    let mut depth = 0i32;
    let mut start = 0;
    let b = s.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn find_wedge(term: &str, sym: char) -> Option<usize> {
    let b = term.as_bytes();
    let mut depth = 0i32;
    for (i, &c) in b.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            c if depth == 0 && c as char == sym => {
                let next_digit = b.get(i + 1).is_some_and(|n| n.is_ascii_digit());
                let prev_ok = i == 0 || matches!(b[i - 1], b' ' | b'*' | b'^');
                if next_digit && prev_ok {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ext(f, &self.coeffs, "d", "^")
    }
}

impl fmt::Debug for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyVectorField[dim={}, arity={}](", self.dim, self.arity)?;
        fmt::Display::fmt(self, f)?;
        write!(f, ")")
    }
}

impl fmt::Display for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_ext(f, &self.coeffs, "dx", "^")
    }
}

impl fmt::Debug for DiffForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DiffForm[dim={}, deg={}](", self.dim, self.formdeg)?;
        fmt::Display::fmt(self, f)?;
        write!(f, ")")
    }
}

impl std::ops::Add<&PolyVectorField> for &PolyVectorField {
    type Output = PolyVectorField;
    fn add(self, rhs: &PolyVectorField) -> PolyVectorField {
        assert_eq!(self.dim, rhs.dim);
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        assert_eq!(self.arity, rhs.arity, "adding polyvectors of different arity");
        PolyVectorField { dim: self.dim, arity: self.arity, coeffs: sum_terms(&self.coeffs, &rhs.coeffs) }
    }
}

impl std::ops::Sub<&PolyVectorField> for &PolyVectorField {
    type Output = PolyVectorField;
    fn sub(self, rhs: &PolyVectorField) -> PolyVectorField {
        self + &rhs.scale(&-Rational::one())
    }
}

impl std::ops::Add<&DiffForm> for &DiffForm {
    type Output = DiffForm;
    fn add(self, rhs: &DiffForm) -> DiffForm {
        self.try_add(rhs).expect("adding incompatible forms")
    }
}

impl std::ops::Sub<&DiffForm> for &DiffForm {
    type Output = DiffForm;
    fn sub(self, rhs: &DiffForm) -> DiffForm {
        self.try_add(&rhs.scale(&-Rational::one())).expect("subtracting incompatible forms")
    }
}

/// The textbook Schouten bracket
/// `Σ_i (P ←∂_{θ_i}) ∂_i Q − (−1)^{(p−1)(q−1)} (Q ←∂_{θ_i}) ∂_i P`.
fn schouten_textbook(xi: &PolyVectorField, eta: &PolyVectorField) -> ExtTerms {
    let (p, q) = (xi.arity as i64, eta.arity as i64);
    let sign_neg = ((p - 1) * (q - 1)).rem_euclid(2) == 1;
    let mut out = ExtTerms::new();
    for i in 0..xi.dim {
        let t1 = wedge_terms(&right_deriv(&xi.coeffs, i), &partial_terms(&eta.coeffs, i));
        let t2 = wedge_terms(&right_deriv(&eta.coeffs, i), &partial_terms(&xi.coeffs, i));
        out = sum_terms(&out, &t1);
        let s = if sign_neg { Rational::one() } else { -Rational::one() };
        out = sum_terms(&out, &scale_terms(&t2, &s));
    }
    out
}

/// Schouten–Nijenhuis bracket. Result arity is `ξ.arity + η.arity − 1`; two
/// functions bracket to the zero function.
pub fn schouten(xi: &PolyVectorField, eta: &PolyVectorField) -> Result<PolyVectorField> {
    if xi.dim != eta.dim {
        return Err(Error::DimensionMismatch(xi.dim, eta.dim));
    }
    if xi.arity + eta.arity == 0 {
        return Ok(PolyVectorField::zero(xi.dim, 0));
    }
    let (p, q) = (xi.arity as i64, eta.arity as i64);
    let mut coeffs = schouten_textbook(xi, eta);
    if ((p - 1) * (q - 1)).rem_euclid(2) == 1 {
        coeffs = scale_terms(&coeffs, &-Rational::one());
    }
    Ok(PolyVectorField { dim: xi.dim, arity: xi.arity + eta.arity - 1, coeffs })
}

/// `i_γ ω`: inserts the polyvector into the leading slots of the form.
pub fn contract(gamma: &PolyVectorField, omega: &DiffForm) -> Result<DiffForm> {
    if gamma.dim != omega.dim {
        return Err(Error::DimensionMismatch(gamma.dim, omega.dim));
    }
    if gamma.arity > omega.formdeg {
        return Ok(DiffForm::zero(omega.dim, 0));
    }
    let mut out = DiffForm::zero(omega.dim, omega.formdeg - gamma.arity);
    for (i, cg) in &gamma.coeffs {
        for (j, cw) in &omega.coeffs {
            if !i.iter().all(|x| j.contains(x)) {
                continue;
            }
            let rest: Vec<usize> = j.iter().copied().filter(|x| !i.contains(x)).collect();
            let mut order = i.clone();
            order.extend_from_slice(&rest);
            let (_, sign) = sort_sign(&order).expect("distinct");
            let c = cg * cw;
            add_ext(&mut out.coeffs, rest, if sign > 0 { c } else { -c });
        }
    }
    Ok(out)
}

pub fn de_rham(omega: &DiffForm) -> DiffForm {
    let mut out = DiffForm::zero(omega.dim, omega.formdeg + 1);
    for (j, c) in &omega.coeffs {
        for i in 0..omega.dim {
            if let Some((idx, sign)) = wedge_idx(&[i], j) {
                let dc = c.partial(i).unwrap();
                add_ext(&mut out.coeffs, idx, if sign > 0 { dc } else { -dc });
            }
        }
    }
    out
}

/// Lie derivative `L_γ = i_γ∘d − (−1)^{arity} d∘i_γ`.
pub fn lie_derivative(gamma: &PolyVectorField, omega: &DiffForm) -> Result<DiffForm> {
    if gamma.dim != omega.dim {
        return Err(Error::DimensionMismatch(gamma.dim, omega.dim));
    }
    let target = (omega.formdeg + 1).checked_sub(gamma.arity);
    let Some(target) = target else {
        return Ok(DiffForm::zero(omega.dim, 0));
    };
    let a = contract(gamma, &de_rham(omega))?;
    let b = de_rham(&contract(gamma, omega)?);
    let mut out = DiffForm::zero(omega.dim, target);
    if a.formdeg == target {
        out = &out + &a;
    }
    if gamma.arity <= omega.formdeg && b.formdeg == target {
        let s = if gamma.arity % 2 == 0 { -Rational::one() } else { Rational::one() };
        out = &out + &b.scale(&s);
    }
    Ok(out)
}

/// Poisson bracket `π(df ∧ dg)` of a bivector.
pub fn poisson_bracket(pi: &PolyVectorField, f: &Poly, g: &Poly) -> Poly {
    assert_eq!(pi.arity, 2);
    let w = DiffForm::exact(f).wedge(&DiffForm::exact(g));
    contract(pi, &w).unwrap().coeff(&[])
}

/// Linear combination helper used by the identity suites.
pub fn pv_lincomb(items: &[(Rational, &PolyVectorField)]) -> Option<PolyVectorField> {
    let mut acc: Option<PolyVectorField> = None;
    for (c, v) in items {
        if c.is_zero() {
            continue;
        }
        let t = v.scale(c);
        acc = Some(match acc {
            None => t,
            Some(a) => &a + &t,
        });
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::int;

    fn p(dim: usize, s: &str) -> Poly {
        Poly::parse(dim, s).unwrap()
    }

    fn pv(dim: usize, s: &str) -> PolyVectorField {
        PolyVectorField::parse(dim, s).unwrap()
    }

    fn so3() -> PolyVectorField {
        pv(3, "x2 * d0^d1 + x0 * d1^d2 + x1 * d2^d0")
    }

    #[test]
    fn schouten_examples() {
        let r = schouten(&pv(1, "d0"), &pv(1, "x0 * d0")).unwrap();
        assert_eq!(r, pv(1, "d0"));
        let r = schouten(&pv(2, "d0^d1"), &PolyVectorField::function(p(2, "x0"))).unwrap();
        assert_eq!(r, pv(2, "d1"));
        let g = so3();
        assert!(schouten(&g, &g).unwrap().is_zero());
        let f = PolyVectorField::function(p(2, "x0"));
        let z = schouten(&f, &f).unwrap();
        assert!(z.is_zero() && z.arity() == 0);
    }

    #[test]
    fn schouten_function_rule() {
        // [X0^X1, h] = X0(h) X1 - X1(h) X0 for polynomial vector fields
        let x0 = pv(2, "x1 * d0 + d1");
        let x1 = pv(2, "x0^2 * d1");
        let h = p(2, "x0*x1 + x1^2");
        let lhs = schouten(&x0.wedge(&x1).unwrap(), &PolyVectorField::function(h.clone())).unwrap();
        let rhs = &x1.mul_poly(&x0.apply_to(&h)).wedge(&PolyVectorField::function(Poly::one(2))).unwrap()
            - &x0.mul_poly(&x1.apply_to(&h));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn contract_examples() {
        let w = DiffForm::term(2, &[0], p(2, "x1"));
        assert_eq!(contract(&pv(2, "d0"), &w).unwrap(), DiffForm::function(p(2, "x1")));
        let vol = DiffForm::term(2, &[0, 1], Poly::one(2));
        assert_eq!(contract(&pv(2, "d0^d1"), &vol).unwrap(), DiffForm::function(Poly::one(2)));
        assert!(contract(&pv(2, "d0"), &DiffForm::term(2, &[1], Poly::one(2))).unwrap().is_zero());
        assert!(contract(&pv(2, "d0^d1"), &w).unwrap().is_zero());
    }

    #[test]
    fn de_rham_examples() {
        assert_eq!(DiffForm::exact(&p(2, "x0")), DiffForm::term(2, &[0], Poly::one(2)));
        let w = DiffForm::term(2, &[1], p(2, "x0"));
        assert_eq!(de_rham(&w), DiffForm::term(2, &[0, 1], Poly::one(2)));
        assert!(de_rham(&DiffForm::term(2, &[0, 1], Poly::one(2))).is_zero());
    }

    #[test]
    fn lie_derivative_examples() {
        let f = DiffForm::function(p(1, "x0"));
        assert_eq!(lie_derivative(&pv(1, "d0"), &f).unwrap(), DiffForm::function(Poly::one(1)));
        let w = DiffForm::term(2, &[1], p(2, "x0"));
        let r = lie_derivative(&pv(2, "d0^d1"), &w).unwrap();
        assert_eq!(r, DiffForm::function(Poly::one(2)));
        let c = DiffForm::term(3, &[0, 2], Poly::constant(3, int(5)));
        assert!(lie_derivative(&pv(3, "2 * d1"), &c).unwrap().is_zero());
        // L_π(f dg) = {f, g}
        let pi = so3();
        let (f, g) = (p(3, "x0^2 + x1"), p(3, "x1*x2"));
        let fdg = DiffForm::exact(&g).mul_poly(&f);
        let lhs = lie_derivative(&pi, &fdg).unwrap();
        assert_eq!(lhs, DiffForm::function(poisson_bracket(&pi, &f, &g)));
    }

    #[test]
    fn parse_and_display() {
        let g = pv(3, "x2 * d0^d1 + (x0 + 1) * d2^d1");
        assert_eq!(g.arity(), 2);
        assert_eq!(g.coeff(&[1, 2]), p(3, "-x0 - 1"));
        assert_eq!(pv(3, &g.to_string()), g);
        assert!(PolyVectorField::parse(3, "d0 + d0^d1").is_err());
        assert!(PolyVectorField::parse(2, "d5").is_err());
    }
}
