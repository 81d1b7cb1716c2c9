//! Graph evaluation: the polydifferential operator `U_Γ` of a half-plane
//! graph and the differential form `Ω^Γ_l` of a disk graph.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{AdmissibleGraph, Flavor, Vertex};
use crate::hochschild::{Derivs, HochChain, PolyDiffOp};
use crate::polyvector::{DiffForm, PolyVectorField};
use crate::symbolic::Poly;

/// Upper bound on the number of index assignments `d^{#E}` one evaluation
/// may visit.
pub const DEFAULT_INDEX_BUDGET: u64 = 50_000_000;

fn check_inputs(g: &AdmissibleGraph, gammas: &[PolyVectorField], dim: usize) -> Result<()> {
    if gammas.len() != g.n {
        return Err(Error::ArityMismatch { expected: g.n, got: gammas.len() });
    }
    for (s, gamma) in g.stars.iter().zip(gammas) {
        if gamma.arity() != s.len() {
            return Err(Error::ArityMismatch { expected: s.len(), got: gamma.arity() });
        }
        if gamma.dim() != dim {
            return Err(Error::DimensionMismatch(gamma.dim(), dim));
        }
    }
    let free = (g.edge_count() - g.marked.len()) as u32;
    if (dim as u64).checked_pow(free).map_or(true, |c| c > DEFAULT_INDEX_BUDGET) {
        return Err(Error::Resource(format!("{dim}^{free} index assignments exceed the budget")));
    }
    Ok(())
}

/// Walks every index assignment of the interior stars (the center star is
/// fixed to `marked_idx`) whose interior vertex factors are all nonzero and
/// calls `emit` with the derivative multi-index landing on each boundary
/// vertex and the product of the interior factors.
fn for_each_assignment(
    g: &AdmissibleGraph,
    gammas: &[PolyVectorField],
    dim: usize,
    marked_idx: &[usize],
    emit: &mut dyn FnMut(&[Vec<u32>], &Poly),
) {
    let mut star_idx: Vec<Vec<usize>> = g.stars.iter().map(|s| vec![0; s.len()]).collect();
    let mut component_cache: HashMap<(usize, Vec<usize>), Poly> = HashMap::new();
    let mut factor_cache: HashMap<(usize, Vec<usize>, Vec<u32>), Poly> = HashMap::new();

    fn rec(
        v: usize,
        g: &AdmissibleGraph,
        gammas: &[PolyVectorField],
        dim: usize,
        marked_idx: &[usize],
        star_idx: &mut Vec<Vec<usize>>,
        component_cache: &mut HashMap<(usize, Vec<usize>), Poly>,
        factor_cache: &mut HashMap<(usize, Vec<usize>, Vec<u32>), Poly>,
        emit: &mut dyn FnMut(&[Vec<u32>], &Poly),
    ) {
        if v == g.n {
            let mut interior = vec![vec![0u32; dim]; g.n];
            let mut boundary = vec![vec![0u32; dim]; g.m];
            let mut hit = |t: Vertex, i: usize| match t {
                Vertex::Interior(k) => interior[k][i] += 1,
                Vertex::Boundary(k) => boundary[k][i] += 1,
                Vertex::Marked => {}
            };
            for (s, &t) in g.marked.iter().enumerate() {
                hit(t, marked_idx[s]);
            }
            for (k, s) in g.stars.iter().enumerate() {
                for (e, &t) in s.iter().enumerate() {
                    hit(t, star_idx[k][e]);
                }
            }
            let mut prod = Poly::one(dim);
            for k in 0..g.n {
                let key = (k, star_idx[k].clone(), interior[k].clone());
                let f = factor_cache
                    .entry(key)
                    .or_insert_with(|| component_cache[&(k, star_idx[k].clone())].derivative(&interior[k]));
                if f.is_zero() {
                    return;
                }
                prod = &prod * &*f;
            }
            emit(&boundary, &prod);
            return;
        }
        let k = g.stars[v].len();
        let total = dim.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for e in 0..k {
                star_idx[v][e] = c % dim;
                c /= dim;
            }
            let key = (v, star_idx[v].clone());
            let comp = component_cache.entry(key).or_insert_with(|| gammas[v].tensor_component(&star_idx[v]));
            if comp.is_zero() {
                continue;
            }
            rec(v + 1, g, gammas, dim, marked_idx, star_idx, component_cache, factor_cache, emit);
        }
    }
    rec(0, g, gammas, dim, marked_idx, &mut star_idx, &mut component_cache, &mut factor_cache, emit);
}

/// `U_Γ(γ_1,…,γ_n)` as a polydifferential operator in the `m` boundary slots.
pub fn graph_operator(g: &AdmissibleGraph, gammas: &[PolyVectorField], dim: usize) -> Result<PolyDiffOp> {
    if g.flavor != Flavor::Halfplane {
        return Err(Error::InvalidGraph("graph_operator takes a half-plane graph".into()));
    }
    check_inputs(g, gammas, dim)?;
    let mut terms: Vec<(Derivs, Poly)> = vec![];
    for_each_assignment(g, gammas, dim, &[], &mut |b, c| terms.push((b.to_vec(), c.clone())));
    Ok(PolyDiffOp::from_terms(dim, g.m, terms))
}

/// `U_Γ(γ_1,…,γ_n)(f_1,…,f_m)` evaluated directly from the index sum.
pub fn eval_halfplane_graph(g: &AdmissibleGraph, gammas: &[PolyVectorField], fs: &[Poly]) -> Result<Poly> {
    if g.flavor != Flavor::Halfplane {
        return Err(Error::InvalidGraph("eval_halfplane_graph takes a half-plane graph".into()));
    }
    if fs.len() != g.m {
        return Err(Error::ArityMismatch { expected: g.m, got: fs.len() });
    }
    let dim = fs.first().map(Poly::dim).or_else(|| gammas.first().map(PolyVectorField::dim)).unwrap_or(1);
    if let Some(f) = fs.iter().find(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch(f.dim(), dim));
    }
    check_inputs(g, gammas, dim)?;
    let mut out = Poly::zero(dim);
    for_each_assignment(g, gammas, dim, &[], &mut |b, c| {
        let mut t = c.clone();
        for (f, e) in fs.iter().zip(b) {
            if t.is_zero() {
                break;
            }
            t = &t * &f.derivative(e);
        }
        out.add_assign_ref(&t);
    });
    Ok(out)
}

/// `Ω^Γ_l(γ_1,…,γ_n; a_1⊗…⊗a_m)` with `l = #Star(c)`. The coefficient of
/// `dx^{α_1}∧…∧dx^{α_l}` is `Σ_σ sgn(σ) Ω^{α_σ(1)…α_σ(l)}`, i.e. the value of
/// the index sum on `∂_{α_1}∧…∧∂_{α_l}` read as an alternating tensor.
pub fn eval_disk_graph(g: &AdmissibleGraph, gammas: &[PolyVectorField], slots: &[Poly]) -> Result<DiffForm> {
    if g.flavor != Flavor::Disk {
        return Err(Error::InvalidGraph("eval_disk_graph takes a disk graph".into()));
    }
    if slots.len() != g.m {
        return Err(Error::ArityMismatch { expected: g.m, got: slots.len() });
    }
    let dim = slots.first().map(Poly::dim).or_else(|| gammas.first().map(PolyVectorField::dim)).unwrap_or(1);
    if let Some(f) = slots.iter().find(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch(f.dim(), dim));
    }
    check_inputs(g, gammas, dim)?;
    let l = g.marked.len();
    let mut out = DiffForm::zero(dim, l);
    if l > dim {
        return Ok(out);
    }
    let mut derived: HashMap<(usize, Vec<u32>), Poly> = HashMap::new();
    for code in 0..dim.pow(l as u32) {
        let mut c = code;
        let alpha: Vec<usize> = (0..l)
            .map(|_| {
                let a = c % dim;
                c /= dim;
                a
            })
            .collect();
        if (1..l).any(|i| alpha[..i].contains(&alpha[i])) {
            continue;
        }
        let mut value = Poly::zero(dim);
        for_each_assignment(g, gammas, dim, &alpha, &mut |b, coeff| {
            let mut t = coeff.clone();
            for (j, e) in b.iter().enumerate() {
                if t.is_zero() {
                    break;
                }
                let d = derived.entry((j, e.clone())).or_insert_with(|| slots[j].derivative(e));
                t = &t * &*d;
            }
            value.add_assign_ref(&t);
        });
        if !value.is_zero() {
            out = &out + &DiffForm::term(dim, &alpha, value);
        }
    }
    Ok(out)
}

/// `Ω^Γ` extended linearly over the tensors of a Hochschild chain with
/// `m = length + 1` slots.
pub fn eval_disk_graph_chain(g: &AdmissibleGraph, gammas: &[PolyVectorField], chain: &HochChain) -> Result<DiffForm> {
    if chain.length() + 1 != g.m {
        return Err(Error::ArityMismatch { expected: g.m, got: chain.length() + 1 });
    }
    let mut out = DiffForm::zero(chain.dim(), g.marked.len());
    for (slots, w) in chain.tensors() {
        out = &out + &eval_disk_graph(g, gammas, &slots)?.scale(&w);
    }
    Ok(out)
}
