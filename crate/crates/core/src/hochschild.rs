//! Polydifferential Hochschild cochains and polynomial Hochschild chains.
//!
//! Sign conventions (degrees `k = arity − 1`):
//! - Gerstenhaber bracket `[φ1, φ2] = φ1∘φ2 − (−1)^{k1 k2} φ2∘φ1` with
//!   `φ1∘φ2 = Σ_i (−1)^{i k2} φ1(.., φ2(a_i..), ..)`.
//! - `d_hoch = [m, ·]`. On an arity-`k` cochain this is `(−1)^{k−1}` times the
//!   textbook `a_1Ψ(a_2..) − Ψ(a_1a_2, ..) + … + (−1)^{k+1} Ψ(..)a_{k+1}`.
//! - `chain_action` applies Ψ to blocks `a_{i+1}..a_{i+k}` with sign
//!   `(−1)^{(k−1)(i+1)}`, and to blocks wrapping through `a_0`
//!   (`a_{j+1}..a_n, a_0..`, `j = n−k+1..=n`) with sign `(−1)^{n(j+1)}`.
//!   Then `L_m = b` and `[L_Ψ1, L_Ψ2] = L_{[Ψ1, Ψ2]}` (graded commutator).
//! - `hkr` intertwines the Schouten bracket with this bracket on cohomology.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polyvector::{sort_sign, DiffForm, PolyVectorField};
use crate::symbolic::{factorial, int, Exponent, Poly, Rational};

/// Multi-index list, one exponent vector per argument slot.
pub type Derivs = Vec<Exponent>;

/// `a_1⊗…⊗a_k ↦ Σ coeff · Π_j ∂^{derivs_j} a_j`.
#[derive(Clone)]
pub struct PolyDiffOp {
    dim: usize,
    arity: usize,
    terms: BTreeMap<Derivs, Poly>,
}

// Zero elements compare equal regardless of their nominal grading.
impl PartialEq for PolyDiffOp {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.terms == other.terms
            && (self.terms.is_empty() || self.arity == other.arity)
    }
}

impl Eq for PolyDiffOp {}

impl std::hash::Hash for PolyDiffOp {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        if !self.terms.is_empty() {
            self.arity.hash(state);
        }
        self.terms.hash(state);
    }
}

fn add_op_term(terms: &mut BTreeMap<Derivs, Poly>, key: Derivs, c: Poly) {
    use std::collections::btree_map::Entry;
    if c.is_zero() {
        return;
    }
    match terms.entry(key) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            o.get_mut().add_assign_ref(&c);
            if o.get().is_zero() {
                o.remove();
            }
        }
    }
}

fn sign_rat(neg: bool) -> Rational {
    if neg {
        -Rational::one()
    } else {
        Rational::one()
    }
}

/// All ways to write `alpha` as an ordered sum of `parts` multi-indices,
/// with multinomial weights `alpha! / Π δ!`.
fn leibniz_splits(alpha: &[u32], parts: usize) -> Vec<(Rational, Vec<Exponent>)> {
    let d = alpha.len();
    // distribute each coordinate independently, then take the product
    let mut acc: Vec<(Rational, Vec<Exponent>)> = vec![(Rational::one(), vec![vec![0; d]; parts])];
    for (coord, &a) in alpha.iter().enumerate() {
        let mut comps = vec![];
        compositions(a, parts, &mut vec![], &mut comps);
        let mut next = Vec::with_capacity(acc.len() * comps.len());
        for (w, split) in &acc {
            for comp in &comps {
                let mut coef = factorial(a as usize);
                for &c in comp {
                    coef /= factorial(c as usize);
                }
                let mut s = split.clone();
                for (p, &c) in comp.iter().enumerate() {
                    s[p][coord] = c;
                }
                next.push((w * &coef, s));
            }
        }
        acc = next;
    }
    acc
}

fn compositions(total: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for first in 0..=total {
        cur.push(first);
        compositions(total - first, parts - 1, cur, out);
        cur.pop();
    }
}

fn add_exp(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl PolyDiffOp {
    pub fn zero(dim: usize, arity: usize) -> Self {
        Self { dim, arity, terms: BTreeMap::new() }
    }

    /// Arity-0 cochain: the constant `f`.
    pub fn constant(f: Poly) -> Self {
        let mut op = Self::zero(f.dim(), 0);
        add_op_term(&mut op.terms, vec![], f);
        op
    }

    pub fn identity(dim: usize) -> Self {
        Self::term(Poly::one(dim), vec![vec![0; dim]])
    }

    /// The product `m(a, b) = a·b`.
    pub fn product(dim: usize) -> Self {
        Self::term(Poly::one(dim), vec![vec![0; dim]; 2])
    }

    pub fn term(coeff: Poly, derivs: Derivs) -> Self {
        let dim = coeff.dim();
        assert!(derivs.iter().all(|e| e.len() == dim), "exponent length must equal dim");
        let mut op = Self::zero(dim, derivs.len());
        add_op_term(&mut op.terms, derivs, coeff);
        op
    }

    pub fn from_terms(dim: usize, arity: usize, terms: impl IntoIterator<Item = (Derivs, Poly)>) -> Self {
        let mut op = Self::zero(dim, arity);
        for (d, c) in terms {
            assert_eq!(d.len(), arity);
            add_op_term(&mut op.terms, d, c);
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Degree in the shifted complex: `arity − 1`.
    pub fn degree(&self) -> i64 {
        self.arity as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<Derivs, Poly> {
        &self.terms
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Self::zero(self.dim, self.arity);
        for (d, c) in &self.terms {
            add_op_term(&mut out.terms, d.clone(), c.scale(s));
        }
        out
    }

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
        if self.arity != other.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: other.arity });
        }
        let mut out = self.clone();
        for (d, c) in &other.terms {
            add_op_term(&mut out.terms, d.clone(), c.clone());
        }
        Ok(out)
    }

    /// Largest total derivative order over all slots.
    pub fn order(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|d| d.iter().map(|e| e.iter().sum::<u32>()))
            .max()
            .unwrap_or(0)
    }

    /// `φ1(a_0, …, a_{i−1}, φ2(a_i, …), …)` as a polydifferential operator.
    pub fn insert(&self, slot: usize, inner: &Self) -> Result<Self> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch(self.dim, inner.dim));
        }
        if slot >= self.arity {
            return Err(Error::IndexOutOfRange { index: slot, dim: self.arity });
        }
        let arity = self.arity + inner.arity - 1;
        let mut out = Self::zero(self.dim, arity);
        for (d1, c1) in &self.terms {
            let splits = leibniz_splits(&d1[slot], inner.arity + 1);
            for (d2, c2) in &inner.terms {
                for (w, split) in &splits {
                    let mut key: Derivs = Vec::with_capacity(arity);
                    key.extend_from_slice(&d1[..slot]);
                    for (j, e) in d2.iter().enumerate() {
                        key.push(add_exp(e, &split[j + 1]));
                    }
                    key.extend_from_slice(&d1[slot + 1..]);
                    let c = (c1 * &c2.derivative(&split[0])).scale(w);
                    add_op_term(&mut out.terms, key, c);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PolyDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(d, c)| {
                let slots: Vec<String> = d
                    .iter()
                    .map(|e| {
                        let ds: Vec<String> = e
                            .iter()
                            .enumerate()
                            .filter(|(_, &k)| k > 0)
                            .map(|(i, &k)| if k == 1 { format!("d{i}") } else { format!("d{i}^{k}") })
                            .collect();
                        if ds.is_empty() {
                            "1".to_string()
                        } else {
                            ds.join("*")
                        }
                    })
                    .collect();
                format!("({c})[{}]", slots.join(" ⊗ "))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for PolyDiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyDiffOp[dim={}, arity={}]({self})", self.dim, self.arity)
    }
}

pub fn eval_op(psi: &PolyDiffOp, args: &[Poly]) -> Result<Poly> {
    if args.len() != psi.arity {
        return Err(Error::ArityMismatch { expected: psi.arity, got: args.len() });
    }
    if let Some(a) = args.iter().find(|a| a.dim() != psi.dim) {
        return Err(Error::DimensionMismatch(psi.dim, a.dim()));
    }
    let mut out = Poly::zero(psi.dim);
    for (d, c) in &psi.terms {
        let mut t = c.clone();
        for (e, a) in d.iter().zip(args) {
            if t.is_zero() {
                break;
            }
            t = &t * &a.derivative(e);
        }
        out.add_assign_ref(&t);
    }
    Ok(out)
}

/// Hochschild differential `[m, Ψ]`, arity `k → k+1`.
pub fn d_hoch(psi: &PolyDiffOp) -> PolyDiffOp {
    let k = psi.arity;
    let dim = psi.dim;
    let m = PolyDiffOp::product(dim);
    let mut out = PolyDiffOp::zero(dim, k + 1);
    // a_1 · Ψ(a_2..)
    out = out.try_add(&m.insert(1, psi).unwrap()).unwrap();
    for i in 0..k {
        let merged = psi.insert(i, &m).unwrap();
        out = out.try_add(&merged.scale(&sign_rat(i % 2 == 0))).unwrap();
    }
    // (−1)^{k+1} Ψ(a_1..a_k) · a_{k+1}
    let last = m.insert(0, psi).unwrap();
    out = out.try_add(&last.scale(&sign_rat((k + 1) % 2 == 1))).unwrap();
    if k % 2 == 0 {
        out.scale(&-Rational::one())
    } else {
        out
    }
}

/// Gerstenhaber composition `φ1∘φ2 = Σ_i (-1)^{i k2} φ1(.., φ2(a_i..), ..)`.
pub fn gerstenhaber_compose(phi1: &PolyDiffOp, phi2: &PolyDiffOp) -> Result<PolyDiffOp> {
    if phi1.dim != phi2.dim {
        return Err(Error::DimensionMismatch(phi1.dim, phi2.dim));
    }
    let k2 = phi2.degree();
    let arity = (phi1.arity + phi2.arity).saturating_sub(1);
    let mut out = PolyDiffOp::zero(phi1.dim, arity);
    for i in 0..phi1.arity {
        let t = phi1.insert(i, phi2)?;
        out = out.try_add(&t.scale(&sign_rat((i as i64 * k2).rem_euclid(2) == 1)))?;
    }
    Ok(out)
}

/// Gerstenhaber bracket `φ1∘φ2 − (−1)^{k1 k2} φ2∘φ1`.
pub fn gerstenhaber(phi1: &PolyDiffOp, phi2: &PolyDiffOp) -> Result<PolyDiffOp> {
    let e = (phi1.degree() * phi2.degree()).rem_euclid(2) == 1;
    let a = gerstenhaber_compose(phi1, phi2)?;
    let b = gerstenhaber_compose(phi2, phi1)?;
    a.try_add(&b.scale(&sign_rat(!e)))
}

/// `γ ↦ (1/k!) Alt Π ξ_i(f_i)`; functions map to constant cochains.
pub fn hkr(gamma: &PolyVectorField) -> PolyDiffOp {
    let dim = gamma.dim();
    let k = gamma.arity();
    if k == 0 {
        return PolyDiffOp::constant(gamma.coeff(&[]));
    }
    let inv = Rational::one() / factorial(k);
    let perms = permutations(k);
    let mut out = PolyDiffOp::zero(dim, k);
    for (idx, c) in gamma.coeffs() {
        for perm in &perms {
            let permuted: Vec<usize> = perm.iter().map(|&p| idx[p]).collect();
            let (_, sign) = sort_sign(&permuted).expect("distinct indices");
            let derivs: Derivs = permuted
                .iter()
                .map(|&j| {
                    let mut e = vec![0; dim];
                    e[j] = 1;
                    e
                })
                .collect();
            let coef = c.scale(&(&inv * int(sign as i64)));
            add_op_term(&mut out.terms, derivs, coef);
        }
    }
    out
}

pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur: Vec<usize> = (0..k).collect();
    heap_permute(k, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if k <= 1 {
        out.push(a.clone());
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, a, out);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, a, out);
}

/// A formal sum of tensors `a_0⊗…⊗a_k`, stored fully expanded over monomial
/// tensors so that equality is exact.
#[derive(Clone)]
pub struct HochChain {
    dim: usize,
    length: usize,
    terms: BTreeMap<Vec<Exponent>, Rational>,
}

// Zero elements compare equal regardless of their nominal grading.
impl PartialEq for HochChain {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.terms == other.terms
            && (self.terms.is_empty() || self.length == other.length)
    }
}

impl Eq for HochChain {}

impl std::hash::Hash for HochChain {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        if !self.terms.is_empty() {
            self.length.hash(state);
        }
        self.terms.hash(state);
    }
}

impl HochChain {
    pub fn zero(dim: usize, length: usize) -> Self {
        Self { dim, length, terms: BTreeMap::new() }
    }

    /// The single tensor `slots[0]⊗…⊗slots[k]`; needs at least one slot.
    pub fn tensor(slots: &[Poly]) -> Self {
        assert!(!slots.is_empty(), "a chain tensor has at least the a_0 slot");
        let dim = slots[0].dim();
        assert!(slots.iter().all(|s| s.dim() == dim));
        let mut c = Self::zero(dim, slots.len() - 1);
        c.add_tensor(slots, &Rational::one());
        c
    }

    fn add_monomial_tensor(&mut self, key: Vec<Exponent>, c: Rational) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Adds `w · slots[0]⊗…` expanded multilinearly.
    pub fn add_tensor(&mut self, slots: &[Poly], w: &Rational) {
        assert_eq!(slots.len(), self.length + 1);
        let mut acc: Vec<(Vec<Exponent>, Rational)> = vec![(vec![], w.clone())];
        for s in slots {
            let mut next = Vec::with_capacity(acc.len() * s.len());
            for (key, c) in &acc {
                for (e, sc) in s.terms() {
                    let mut k = key.clone();
                    k.push(e.clone());
                    next.push((k, c * sc));
                }
            }
            acc = next;
        }
        for (k, c) in acc {
            self.add_monomial_tensor(k, c);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Homological degree `−length`.
    pub fn degree(&self) -> i64 {
        -(self.length as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Monomial tensors with multiplicities.
    pub fn terms(&self) -> &BTreeMap<Vec<Exponent>, Rational> {
        &self.terms
    }

    /// Terms as tuples of monomial polynomials.
    pub fn tensors(&self) -> Vec<(Vec<Poly>, Rational)> {
        self.terms
            .iter()
            .map(|(k, c)| (k.iter().map(|e| Poly::monomial(e.clone(), Rational::one())).collect(), c.clone()))
            .collect()
    }

    pub fn scale(&self, s: &Rational) -> Self {
        let mut out = Self::zero(self.dim, self.length);
        if s.is_zero() {
            return out;
        }
        for (k, c) in &self.terms {
            out.terms.insert(k.clone(), c * s);
        }
        out
    }

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
        if self.length != other.length {
            return Err(Error::Grading(format!(
                "cannot add chains of length {} and {}",
                self.length, other.length
            )));
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_monomial_tensor(k.clone(), c.clone());
        }
        Ok(out)
    }
}

impl fmt::Display for HochChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .tensors()
            .iter()
            .map(|(slots, c)| {
                let s: Vec<String> = slots.iter().map(|p| p.to_string()).collect();
                format!("{c}*({})", s.join(" ⊗ "))
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for HochChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HochChain[dim={}, length={}]({self})", self.dim, self.length)
    }
}

/// Hochschild boundary `b`, length `k → k−1`.
pub fn chain_b(c: &HochChain) -> HochChain {
    chain_action(&PolyDiffOp::product(c.dim), c).expect("product has arity 2")
}

/// `μ(a_0⊗…⊗a_k) = (1/k!) a_0 da_1∧…∧da_k`.
pub fn mu(c: &HochChain) -> DiffForm {
    let k = c.length;
    let inv = Rational::one() / factorial(k);
    let mut out = DiffForm::zero(c.dim, k);
    for (slots, w) in c.tensors() {
        let mut form = DiffForm::function(slots[0].clone());
        for s in &slots[1..] {
            form = form.wedge(&DiffForm::exact(s));
            if form.is_zero() {
                break;
            }
        }
        if form.formdeg() == k {
            out = &out + &form.scale(&(&inv * &w));
        }
    }
    out
}

/// `L_Ψ` on chains: Ψ applied to each block of `k` cyclically consecutive
/// slots, the result placed where the block stood (blocks through `a_0`
/// put the value in the `a_0` slot).
pub fn chain_action(psi: &PolyDiffOp, c: &HochChain) -> Result<HochChain> {
    if psi.dim != c.dim {
        return Err(Error::DimensionMismatch(psi.dim, c.dim));
    }
    let k = psi.arity;
    let n = c.length;
    if k > n + 1 {
        return Ok(HochChain::zero(c.dim, 0));
    }
    let out_len = n + 1 - k;
    let mut out = HochChain::zero(c.dim, out_len);
    let kk = k as i64;
    let nn = n as i64;
    for (slots, w) in c.tensors() {
        // blocks a_{i+1}..a_{i+k}, i = 0..=n−k
        for i in 0..=(nn - kk) {
            let iu = i as usize;
            let val = eval_op(psi, &slots[iu + 1..iu + 1 + k])?;
            if val.is_zero() {
                continue;
            }
            let mut t: Vec<Poly> = slots[..=iu].to_vec();
            t.push(val);
            t.extend_from_slice(&slots[iu + 1 + k..]);
            let s = sign_rat(((kk - 1) * (i + 1)).rem_euclid(2) == 1);
            out.add_tensor(&t, &(&w * s));
        }
        // blocks a_{j+1}..a_n, a_0..a_{k+j−n−1}, j = n−k+1..=n
        for j in (nn - kk + 1)..=nn {
            let ju = j as usize;
            let tail = (kk + j - nn) as usize;
            let mut args: Vec<Poly> = slots[ju + 1..].to_vec();
            args.extend_from_slice(&slots[..tail]);
            let val = eval_op(psi, &args)?;
            if val.is_zero() {
                continue;
            }
            let mut t = vec![val];
            t.extend_from_slice(&slots[tail..=ju]);
            let s = sign_rat((nn * (j + 1)).rem_euclid(2) == 1);
            out.add_tensor(&t, &(&w * s));
        }
    }
    Ok(out)
}
