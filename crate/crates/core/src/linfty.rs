//! Residual checkers for L∞ algebras, morphisms, modules and module
//! morphisms, plus Maurer–Cartan elements and tangent complexes.
//!
//! Structures are supplied in the unshifted form: `l_k` of degree `2−k`,
//! morphism components of degree `1−k`, module maps `φ_k(x_1..x_k, m)` of
//! degree `1−k`, module-morphism maps of degree `−k`. Internally each
//! `k`-ary map is converted to the suspended (graded-symmetric) picture by
//!
//! ```text
//! Q_k(x_1..x_k) = (−1)^{k(k−1)/2 + Σ_i (k−i)|x_i|} l_k(x_1..x_k)
//! ```
//!
//! (the module element counts as the last argument). The identities are
//! then the Koszul-signed sums over unshuffles and set partitions. With this
//! normalization the Maurer–Cartan equation reads `dπ + ½[π,π] + … = 0`,
//! the MC image of a morphism is `Σ U_n(π^n)/n!`, and tangent maps are
//! `Σ φ_{k+1}(π^k, a)/k!`, all without extra signs.
//!
//! Residuals are `Option<E>`; `None` means no term survived.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;

use crate::error::{Error, Result};
use crate::hochschild::{HochChain, PolyDiffOp};
use crate::polyvector::{DiffForm, PolyVectorField};
use crate::symbolic::{factorial, Poly, Rational};

/// Graded vector-space element usable by the checkers.
pub trait Graded: Clone + Send + Sync {
    fn degree(&self) -> i64;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Result<Self>;
    fn scale(&self, s: &Rational) -> Self;
}

impl Graded for PolyVectorField {
    fn degree(&self) -> i64 {
        PolyVectorField::degree(self)
    }
    fn is_zero(&self) -> bool {
        PolyVectorField::is_zero(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        if !self.is_zero() && !other.is_zero() && self.arity() != other.arity() {
            return Err(Error::Grading(format!("arity {} vs {}", self.arity(), other.arity())));
        }
        Ok(self + other)
    }
    fn scale(&self, s: &Rational) -> Self {
        PolyVectorField::scale(self, s)
    }
}

impl Graded for Poly {
    fn degree(&self) -> i64 {
        0
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        self.try_add(other)
    }
    fn scale(&self, s: &Rational) -> Self {
        Poly::scale(self, s)
    }
}

impl Graded for DiffForm {
    fn degree(&self) -> i64 {
        DiffForm::degree(self)
    }
    fn is_zero(&self) -> bool {
        DiffForm::is_zero(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        self.try_add(other)
    }
    fn scale(&self, s: &Rational) -> Self {
        DiffForm::scale(self, s)
    }
}

impl Graded for PolyDiffOp {
    fn degree(&self) -> i64 {
        PolyDiffOp::degree(self)
    }
    fn is_zero(&self) -> bool {
        PolyDiffOp::is_zero(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        self.try_add(other)
    }
    fn scale(&self, s: &Rational) -> Self {
        PolyDiffOp::scale(self, s)
    }
}

impl Graded for HochChain {
    fn degree(&self) -> i64 {
        HochChain::degree(self)
    }
    fn is_zero(&self) -> bool {
        HochChain::is_zero(self)
    }
    fn add(&self, other: &Self) -> Result<Self> {
        self.try_add(other)
    }
    fn scale(&self, s: &Rational) -> Self {
        HochChain::scale(self, s)
    }
}

/// `k`-ary multilinear map on algebra elements.
pub type TaylorMap<A, B> = Arc<dyn Fn(&[A]) -> Result<B> + Send + Sync>;
/// `k`-ary map with a trailing module argument.
pub type ModuleMap<A, M, N> = Arc<dyn Fn(&[A], &M) -> Result<N> + Send + Sync>;

/// Components `l_k`, keyed by `k ≥ 1`; absent keys are zero maps.
pub struct LInftyAlgebraSpec<E> {
    pub max_order: usize,
    pub taylor: BTreeMap<usize, TaylorMap<E, E>>,
}

/// Components `φ_k: Λ^k g ⊗ M → M`, keyed by `k ≥ 0`.
pub struct LInftyModuleSpec<A, M> {
    pub max_order: usize,
    pub taylor: BTreeMap<usize, ModuleMap<A, M, M>>,
}

/// Algebra-morphism components `U_n`, keyed by `n ≥ 1`.
pub struct MorphismSpec<A, B> {
    pub max_order: usize,
    pub taylor: BTreeMap<usize, TaylorMap<A, B>>,
}

/// Module-morphism components `Û_k: Λ^k g ⊗ M → N`, keyed by `k ≥ 0`.
pub struct ModuleMorphismSpec<A, M, N> {
    pub max_order: usize,
    pub taylor: BTreeMap<usize, ModuleMap<A, M, N>>,
}

impl<E> LInftyAlgebraSpec<E> {
    pub fn dgla(d: Option<TaylorMap<E, E>>, bracket: TaylorMap<E, E>) -> Self {
        let mut taylor = BTreeMap::new();
        if let Some(d) = d {
            taylor.insert(1, d);
        }
        taylor.insert(2, bracket);
        Self { max_order: 2, taylor }
    }
}

/// Either an algebra element or a module element.
#[derive(Clone, Debug)]
enum Slot<A, M> {
    L(A),
    M(M),
}

impl<A: Graded, M: Graded> Slot<A, M> {
    fn degree(&self) -> i64 {
        match self {
            Slot::L(a) => a.degree(),
            Slot::M(m) => m.degree(),
        }
    }
    fn is_zero(&self) -> bool {
        match self {
            Slot::L(a) => a.is_zero(),
            Slot::M(m) => m.is_zero(),
        }
    }
    fn scale(&self, s: &Rational) -> Self {
        match self {
            Slot::L(a) => Slot::L(a.scale(s)),
            Slot::M(m) => Slot::M(m.scale(s)),
        }
    }
    fn add(&self, other: &Self) -> Result<Self> {
        match (self, other) {
            (Slot::L(a), Slot::L(b)) => Ok(Slot::L(a.add(b)?)),
            (Slot::M(a), Slot::M(b)) => Ok(Slot::M(a.add(b)?)),
            (x, y) if y.is_zero() => Ok(x.clone()),
            (x, y) if x.is_zero() => Ok(y.clone()),
            _ => Err(Error::Grading("adding algebra and module elements".into())),
        }
    }
}

fn neg_if(neg: bool) -> Rational {
    if neg {
        -Rational::one()
    } else {
        Rational::one()
    }
}

/// Koszul sign of listing elements in the order `perm` (suspended degrees).
fn koszul_odd(perm: &[usize], sdeg: &[i64]) -> bool {
    let mut odd = false;
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if perm[a] > perm[b] && (sdeg[perm[a]] * sdeg[perm[b]]).rem_euclid(2) == 1 {
                odd = !odd;
            }
        }
    }
    odd
}

/// `(−1)^{k(k−1)/2 + Σ (k−i)|x_i|}` for unshifted degrees.
fn decalage_odd(degs: &[i64]) -> bool {
    let k = degs.len() as i64;
    let mut e = k * (k - 1) / 2;
    for (i, d) in degs.iter().enumerate() {
        e += (k - 1 - i as i64) * d;
    }
    e.rem_euclid(2) == 1
}

fn accumulate<E, F>(acc: &mut Option<E>, term: E, add: F) -> Result<()>
where
    F: Fn(&E, &E) -> Result<E>,
{
    *acc = Some(match acc.take() {
        None => term,
        Some(a) => add(&a, &term)?,
    });
    Ok(())
}

type SlotOp<'a, A, M> = dyn Fn(&[Slot<A, M>]) -> Result<Option<Slot<A, M>>> + 'a;

/// `Σ_{I⊔J} ε Q(Q(x_I), x_J)`.
fn relation_residual<A: Graded, M: Graded>(q: &SlotOp<'_, A, M>, args: &[Slot<A, M>]) -> Result<Option<Slot<A, M>>> {
    let n = args.len();
    let sdeg: Vec<i64> = args.iter().map(|x| x.degree() - 1).collect();
    let mut acc = None;
    for mask in 1u32..(1 << n) {
        let inner: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let outer: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        let Some(qi) = q(&inner.iter().map(|&i| args[i].clone()).collect::<Vec<_>>())? else {
            continue;
        };
        if qi.is_zero() {
            continue;
        }
        let mut oargs = vec![qi];
        oargs.extend(outer.iter().map(|&i| args[i].clone()));
        let Some(qo) = q(&oargs)? else {
            continue;
        };
        let perm: Vec<usize> = inner.iter().chain(&outer).copied().collect();
        let term = qo.scale(&neg_if(koszul_odd(&perm, &sdeg)));
        accumulate(&mut acc, term, |a, b| a.add(b))?;
    }
    Ok(acc)
}

/// Set partitions of `0..n`, blocks ordered by their least element.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = vec![];
    let mut labels = vec![0usize; n];
    fn rec(i: usize, n: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let nb = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut blocks = vec![vec![]; nb];
            for (j, &l) in labels.iter().enumerate() {
                blocks[l].push(j);
            }
            out.push(blocks);
            return;
        }
        let limit = if i == 0 { 0 } else { max + 1 };
        for l in 0..=limit {
            labels[i] = l;
            rec(i + 1, n, max.max(l), labels, out);
        }
    }
    if n > 0 {
        rec(0, n, 0, &mut labels, &mut out);
    }
    out
}

/// `Σ ε F(Q(x_I), x_J) − Σ_partitions ε Q'(F(x_B1), …, F(x_Bt))`.
fn morphism_residual<A: Graded, M: Graded, B: Graded, N: Graded>(
    q_src: &SlotOp<'_, A, M>,
    q_dst: &SlotOp<'_, B, N>,
    f: &dyn Fn(&[Slot<A, M>]) -> Result<Option<Slot<B, N>>>,
    args: &[Slot<A, M>],
) -> Result<Option<Slot<B, N>>> {
    let n = args.len();
    let sdeg: Vec<i64> = args.iter().map(|x| x.degree() - 1).collect();
    let mut acc: Option<Slot<B, N>> = None;
    for mask in 1u32..(1 << n) {
        let inner: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let outer: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
        let Some(qi) = q_src(&inner.iter().map(|&i| args[i].clone()).collect::<Vec<_>>())? else {
            continue;
        };
        if qi.is_zero() {
            continue;
        }
        let mut fargs = vec![qi];
        fargs.extend(outer.iter().map(|&i| args[i].clone()));
        let Some(fo) = f(&fargs)? else {
            continue;
        };
        let perm: Vec<usize> = inner.iter().chain(&outer).copied().collect();
        accumulate(&mut acc, fo.scale(&neg_if(koszul_odd(&perm, &sdeg))), |a, b| a.add(b))?;
    }
    'parts: for blocks in set_partitions(n) {
        let mut images = Vec::with_capacity(blocks.len());
        for b in &blocks {
            match f(&b.iter().map(|&i| args[i].clone()).collect::<Vec<_>>())? {
                Some(v) if !v.is_zero() => images.push(v),
                _ => continue 'parts,
            }
        }
        let Some(qo) = q_dst(&images)? else {
            continue;
        };
        let perm: Vec<usize> = blocks.concat();
        let s = neg_if(!koszul_odd(&perm, &sdeg));
        accumulate(&mut acc, qo.scale(&s), |a, b| a.add(b))?;
    }
    Ok(acc)
}

fn algebra_op<E: Graded>(alg: &LInftyAlgebraSpec<E>, args: &[E]) -> Result<Option<E>> {
    let k = args.len();
    if k == 0 || k > alg.max_order {
        return Ok(None);
    }
    let Some(l) = alg.taylor.get(&k) else {
        return Ok(None);
    };
    let degs: Vec<i64> = args.iter().map(|x| x.degree()).collect();
    Ok(Some(l(args)?.scale(&neg_if(decalage_odd(&degs)))))
}

/// Moves the single module slot to the end; returns the Koszul parity.
fn module_last<A: Graded, M: Graded>(args: &[Slot<A, M>]) -> Option<(Vec<A>, M, bool)> {
    let pos: Vec<usize> = args.iter().enumerate().filter(|(_, s)| matches!(s, Slot::M(_))).map(|(i, _)| i).collect();
    if pos.len() != 1 {
        return None;
    }
    let p = pos[0];
    let sdeg: Vec<i64> = args.iter().map(|x| x.degree() - 1).collect();
    let mut perm: Vec<usize> = (0..args.len()).filter(|&i| i != p).collect();
    perm.push(p);
    let odd = koszul_odd(&perm, &sdeg);
    let xs = perm[..perm.len() - 1]
        .iter()
        .map(|&i| match &args[i] {
            Slot::L(a) => a.clone(),
            Slot::M(_) => unreachable!(),
        })
        .collect();
    let Slot::M(m) = &args[p] else { unreachable!() };
    Some((xs, m.clone(), odd))
}

fn module_op<A: Graded, M: Graded>(
    alg: &LInftyAlgebraSpec<A>,
    module: &LInftyModuleSpec<A, M>,
    args: &[Slot<A, M>],
) -> Result<Option<Slot<A, M>>> {
    if args.iter().all(|s| matches!(s, Slot::L(_))) {
        let xs: Vec<A> = args.iter().map(|s| if let Slot::L(a) = s { a.clone() } else { unreachable!() }).collect();
        return Ok(algebra_op(alg, &xs)?.map(Slot::L));
    }
    let Some((xs, m, odd)) = module_last(args) else {
        return Ok(None);
    };
    let k = xs.len();
    if k > module.max_order {
        return Ok(None);
    }
    let Some(phi) = module.taylor.get(&k) else {
        return Ok(None);
    };
    let mut degs: Vec<i64> = xs.iter().map(|x| x.degree()).collect();
    degs.push(m.degree());
    let v = phi(&xs, &m)?;
    Ok(Some(Slot::M(v.scale(&neg_if(odd ^ decalage_odd(&degs))))))
}

fn unwrap_l<A, M>(r: Option<Slot<A, M>>) -> Option<A> {
    match r {
        Some(Slot::L(a)) => Some(a),
        _ => None,
    }
}

fn unwrap_m<A, M>(r: Option<Slot<A, M>>) -> Option<M> {
    match r {
        Some(Slot::M(m)) => Some(m),
        _ => None,
    }
}

/// Left side of the L∞ relation on `k − 1` arguments (`k = 2` is `l_1² = 0`).
pub fn check_dgla_identity<E: Graded>(alg: &LInftyAlgebraSpec<E>, k: usize, args: &[E]) -> Result<Option<E>> {
    if k < 2 || args.len() != k - 1 {
        return Err(Error::ArityMismatch { expected: k.saturating_sub(1), got: args.len() });
    }
    let q = |xs: &[Slot<E, E>]| -> Result<Option<Slot<E, E>>> {
        let ys: Vec<E> = xs.iter().map(|s| if let Slot::L(a) = s { a.clone() } else { unreachable!() }).collect();
        Ok(algebra_op(alg, &ys)?.map(Slot::L))
    };
    let slots: Vec<Slot<E, E>> = args.iter().cloned().map(Slot::L).collect();
    Ok(unwrap_l(relation_residual(&q, &slots)?))
}

/// Residual of the L∞-morphism identity on `n = args.len()` arguments.
pub fn check_morphism_identity<A: Graded, B: Graded>(
    u: &MorphismSpec<A, B>,
    src: &LInftyAlgebraSpec<A>,
    dst: &LInftyAlgebraSpec<B>,
    n: usize,
    args: &[A],
) -> Result<Option<B>> {
    if args.len() != n || n == 0 {
        return Err(Error::ArityMismatch { expected: n, got: args.len() });
    }
    let qs = |xs: &[Slot<A, A>]| -> Result<Option<Slot<A, A>>> {
        let ys: Vec<A> = xs.iter().map(|s| if let Slot::L(a) = s { a.clone() } else { unreachable!() }).collect();
        Ok(algebra_op(src, &ys)?.map(Slot::L))
    };
    let qd = |xs: &[Slot<B, B>]| -> Result<Option<Slot<B, B>>> {
        let ys: Vec<B> = xs.iter().map(|s| if let Slot::L(a) = s { a.clone() } else { unreachable!() }).collect();
        Ok(algebra_op(dst, &ys)?.map(Slot::L))
    };
    let f = |xs: &[Slot<A, A>]| -> Result<Option<Slot<B, B>>> {
        let ys: Vec<A> = xs.iter().map(|s| if let Slot::L(a) = s { a.clone() } else { unreachable!() }).collect();
        let k = ys.len();
        if k > u.max_order {
            return Ok(None);
        }
        let Some(uk) = u.taylor.get(&k) else {
            return Ok(None);
        };
        let degs: Vec<i64> = ys.iter().map(|x| x.degree()).collect();
        Ok(Some(Slot::L(uk(&ys)?.scale(&neg_if(decalage_odd(&degs))))))
    };
    let slots: Vec<Slot<A, A>> = args.iter().cloned().map(Slot::L).collect();
    Ok(unwrap_l(morphism_residual(&qs, &qd, &f, &slots)?))
}

/// Residual of the module identity with `k = args.len()` algebra arguments.
pub fn check_module_identity<A: Graded, M: Graded>(
    module: &LInftyModuleSpec<A, M>,
    alg: &LInftyAlgebraSpec<A>,
    k: usize,
    args: &[A],
    m: &M,
) -> Result<Option<M>> {
    if args.len() != k {
        return Err(Error::ArityMismatch { expected: k, got: args.len() });
    }
    let q = |xs: &[Slot<A, M>]| module_op(alg, module, xs);
    let mut slots: Vec<Slot<A, M>> = args.iter().cloned().map(Slot::L).collect();
    slots.push(Slot::M(m.clone()));
    Ok(unwrap_m(relation_residual(&q, &slots)?))
}

/// Residual of the module-morphism identity with `k + 2` algebra
/// arguments (`k = −2` is `Û_0 ∘ φ_0 = φ'_0 ∘ Û_0`).
pub fn check_module_morphism_identity<A: Graded, M: Graded, N: Graded>(
    mor: &ModuleMorphismSpec<A, M, N>,
    alg: &LInftyAlgebraSpec<A>,
    source: &LInftyModuleSpec<A, M>,
    target: &LInftyModuleSpec<A, N>,
    k: i64,
    gammas: &[A],
    omega: &M,
) -> Result<Option<N>> {
    if k < -2 || gammas.len() as i64 != k + 2 {
        return Err(Error::ArityMismatch { expected: (k + 2).max(0) as usize, got: gammas.len() });
    }
    let qs = |xs: &[Slot<A, M>]| module_op(alg, source, xs);
    let qd = |xs: &[Slot<A, N>]| module_op(alg, target, xs);
    let f = |xs: &[Slot<A, M>]| -> Result<Option<Slot<A, N>>> {
        if xs.iter().all(|s| matches!(s, Slot::L(_))) {
            // identity on the algebra part
            if xs.len() == 1 {
                if let Slot::L(a) = &xs[0] {
                    return Ok(Some(Slot::L(a.clone())));
                }
            }
            return Ok(None);
        }
        let Some((ys, m, odd)) = module_last(xs) else {
            return Ok(None);
        };
        let kk = ys.len();
        if kk > mor.max_order {
            return Ok(None);
        }
        let Some(uk) = mor.taylor.get(&kk) else {
            return Ok(None);
        };
        let mut degs: Vec<i64> = ys.iter().map(|x| x.degree()).collect();
        degs.push(m.degree());
        Ok(Some(Slot::M(uk(&ys, &m)?.scale(&neg_if(odd ^ decalage_odd(&degs))))))
    };
    let mut slots: Vec<Slot<A, M>> = gammas.iter().cloned().map(Slot::L).collect();
    slots.push(Slot::M(omega.clone()));
    Ok(unwrap_m(morphism_residual(&qs, &qd, &f, &slots)?))
}

/// `Σ_k l_k(π, …, π)/k!`, i.e. `dπ + ½[π,π] + …`.
pub fn maurer_cartan_residual<E: Graded>(alg: &LInftyAlgebraSpec<E>, pi: &E) -> Result<Option<E>> {
    let mut acc = None;
    for k in 1..=alg.max_order {
        let args = vec![pi.clone(); k];
        if let Some(v) = algebra_op(alg, &args)? {
            accumulate(&mut acc, v.scale(&(Rational::one() / factorial(k))), |a, b| a.add(b))?;
        }
    }
    Ok(acc)
}

/// Truncated formal series in ħ with coefficients in a graded space;
/// `None` entries are zero.
pub type HSeries<E> = Vec<Option<E>>;

/// Ordered tuples of positive ħ-orders summing to `total`, one per slot.
fn order_splits(slots: usize, total: usize, min: usize) -> Vec<Vec<usize>> {
    if slots == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = vec![];
    for first in min..=total {
        for mut rest in order_splits(slots - 1, total - first, min) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn check_formal<E: Graded>(pi: &HSeries<E>) -> Result<()> {
    if pi.first().is_some_and(|p| p.as_ref().is_some_and(|p| !p.is_zero())) {
        return Err(Error::NotMaurerCartan(
            "π must be a formal series with vanishing ħ^0 term".into(),
        ));
    }
    Ok(())
}

/// Shared expansion of `Σ_k F_{k+1}(π^k, a)/k!` through ħ^`order`.
fn twisted_sum<E: Graded, T: Graded, U: Graded>(
    pi: &HSeries<E>,
    a: &HSeries<T>,
    order: usize,
    max_k: usize,
    apply: &dyn Fn(&[E], &T) -> Result<Option<U>>,
) -> Result<HSeries<U>> {
    check_formal(pi)?;
    let mut out: HSeries<U> = vec![None; order + 1];
    for (ao, av) in a.iter().enumerate().take(order + 1) {
        let Some(av) = av else { continue };
        if av.is_zero() {
            continue;
        }
        for k in 0..=max_k.min(order - ao) {
            let inv = Rational::one() / factorial(k);
            for total in k..=(order - ao) {
                for split in order_splits(k, total, 1) {
                    let mut args = Vec::with_capacity(k);
                    let mut ok = true;
                    for &o in &split {
                        match pi.get(o).and_then(|p| p.as_ref()) {
                            Some(p) if !p.is_zero() => args.push(p.clone()),
                            _ => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    if let Some(v) = apply(&args, av)? {
                        accumulate(&mut out[ao + total], v.scale(&inv), |x, y| x.add(y))?;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `d_π(m) = Σ_k φ_k(π, …, π, m)/k!` through ħ^`order`.
pub fn tangent_differential<A: Graded, M: Graded>(
    module: &LInftyModuleSpec<A, M>,
    pi: &HSeries<A>,
    m: &HSeries<M>,
    order: usize,
) -> Result<HSeries<M>> {
    let apply = |xs: &[A], m: &M| -> Result<Option<M>> {
        match module.taylor.get(&xs.len()) {
            Some(phi) if xs.len() <= module.max_order => Ok(Some(phi(xs, m)?)),
            _ => Ok(None),
        }
    };
    twisted_sum(pi, m, order, module.max_order, &apply)
}

/// `(T_π φ)(a) = Σ_k φ_{k+1}(π, …, π, a)/k!` for a module morphism.
pub fn tangent_map<A: Graded, M: Graded, N: Graded>(
    mor: &ModuleMorphismSpec<A, M, N>,
    pi: &HSeries<A>,
    a: &HSeries<M>,
    order: usize,
) -> Result<HSeries<N>> {
    let apply = |xs: &[A], m: &M| -> Result<Option<N>> {
        match mor.taylor.get(&xs.len()) {
            Some(u) if xs.len() <= mor.max_order => Ok(Some(u(xs, m)?)),
            _ => Ok(None),
        }
    };
    twisted_sum(pi, a, order, mor.max_order, &apply)
}

/// Algebra-morphism tangent map `a ↦ Σ_k U_{k+1}(π^k, a)/k!`.
pub fn tangent_map_algebra<A: Graded, B: Graded>(
    u: &MorphismSpec<A, B>,
    pi: &HSeries<A>,
    a: &HSeries<A>,
    order: usize,
) -> Result<HSeries<B>> {
    let apply = |xs: &[A], x: &A| -> Result<Option<B>> {
        let mut all = xs.to_vec();
        all.push(x.clone());
        match u.taylor.get(&all.len()) {
            Some(f) if all.len() <= u.max_order => Ok(Some(f(&all)?)),
            _ => Ok(None),
        }
    };
    twisted_sum(pi, a, order, u.max_order.saturating_sub(1), &apply)
}

/// MC image `π̃ = Σ_n U_n(π, …, π)/n!` through ħ^`order`.
pub fn mc_image<A: Graded, B: Graded>(u: &MorphismSpec<A, B>, pi: &HSeries<A>, order: usize) -> Result<HSeries<B>> {
    check_formal(pi)?;
    let mut out: HSeries<B> = vec![None; order + 1];
    for n in 1..=u.max_order.min(order) {
        let Some(un) = u.taylor.get(&n) else { continue };
        let inv = Rational::one() / factorial(n);
        for total in n..=order {
            for split in order_splits(n, total, 1) {
                let args: Option<Vec<A>> =
                    split.iter().map(|&o| pi.get(o).and_then(|p| p.clone()).filter(|p| !p.is_zero())).collect();
                let Some(args) = args else { continue };
                let v = un(&args)?;
                accumulate(&mut out[total], v.scale(&inv), |x, y| x.add(y))?;
            }
        }
    }
    Ok(out)
}

/// MC residual of an ħ-series, order by order.
pub fn maurer_cartan_residual_series<E: Graded>(
    alg: &LInftyAlgebraSpec<E>,
    pi: &HSeries<E>,
    order: usize,
) -> Result<HSeries<E>> {
    check_formal(pi)?;
    let mut out: HSeries<E> = vec![None; order + 1];
    for k in 1..=alg.max_order.min(order) {
        let inv = Rational::one() / factorial(k);
        for total in k..=order {
            for split in order_splits(k, total, 1) {
                let args: Option<Vec<E>> =
                    split.iter().map(|&o| pi.get(o).and_then(|p| p.clone()).filter(|p| !p.is_zero())).collect();
                let Some(args) = args else { continue };
                if let Some(v) = algebra_op(alg, &args)? {
                    accumulate(&mut out[total], v.scale(&inv), |x, y| x.add(y))?;
                }
            }
        }
    }
    Ok(out)
}

/// True when every entry of a residual series is absent or zero.
pub fn series_is_zero<E: Graded>(s: &HSeries<E>) -> bool {
    s.iter().all(|e| e.as_ref().is_none_or(|v| v.is_zero()))
}

/// `true` when the residual is absent or zero.
pub fn residual_is_zero<E: Graded>(r: &Option<E>) -> bool {
    r.as_ref().is_none_or(|v| v.is_zero())
}

/// `T_poly`: zero differential, Schouten bracket.
pub fn tpoly() -> LInftyAlgebraSpec<PolyVectorField> {
    LInftyAlgebraSpec::dgla(None, Arc::new(|xs: &[PolyVectorField]| crate::polyvector::schouten(&xs[0], &xs[1])))
}

/// `D_poly`: Hochschild differential and Gerstenhaber bracket.
pub fn dpoly() -> LInftyAlgebraSpec<PolyDiffOp> {
    LInftyAlgebraSpec::dgla(
        Some(Arc::new(|xs: &[PolyDiffOp]| Ok(crate::hochschild::d_hoch(&xs[0])))),
        Arc::new(|xs: &[PolyDiffOp]| crate::hochschild::gerstenhaber(&xs[0], &xs[1])),
    )
}

/// Differential forms as a strict `T_poly`-module via `L_γ`.
pub fn forms_module() -> LInftyModuleSpec<PolyVectorField, DiffForm> {
    let mut taylor: BTreeMap<usize, ModuleMap<PolyVectorField, DiffForm, DiffForm>> = BTreeMap::new();
    taylor.insert(1, Arc::new(|xs: &[PolyVectorField], w: &DiffForm| crate::polyvector::lie_derivative(&xs[0], w)));
    LInftyModuleSpec { max_order: 1, taylor }
}

/// Hochschild chains as a strict `D_poly`-module: `φ_0 = b`, `φ_1 = L_Ψ`.
pub fn chains_over_dpoly() -> LInftyModuleSpec<PolyDiffOp, HochChain> {
    let mut taylor: BTreeMap<usize, ModuleMap<PolyDiffOp, HochChain, HochChain>> = BTreeMap::new();
    taylor.insert(0, Arc::new(|_: &[PolyDiffOp], c: &HochChain| Ok(crate::hochschild::chain_b(c))));
    taylor.insert(1, Arc::new(|xs: &[PolyDiffOp], c: &HochChain| crate::hochschild::chain_action(&xs[0], c)));
    LInftyModuleSpec { max_order: 1, taylor }
}
