//! Seeded random instances of the exact objects, for checks and reports.

use rand::Rng;

use crate::hochschild::{HochChain, PolyDiffOp};
use crate::polyvector::{DiffForm, PolyVectorField};
use crate::symbolic::{int, Poly};

/// Up to `terms` monomials of degree `≤ max_deg` with coefficients in `-3..=3`.
pub fn poly<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_deg: u32, terms: usize) -> Poly {
    let mut out = Poly::zero(dim);
    for _ in 0..rng.gen_range(1..=terms.max(1)) {
        let mut e = vec![0u32; dim];
        for _ in 0..rng.gen_range(0..=max_deg) {
            e[rng.gen_range(0..dim)] += 1;
        }
        let c = rng.gen_range(-3i64..=3);
        out.add_term(e, int(c));
    }
    out
}

fn index_set<R: Rng + ?Sized>(rng: &mut R, dim: usize, k: usize) -> Option<Vec<usize>> {
    let mut idx: Vec<usize> = (0..dim).collect();
    for i in 0..k.min(dim) {
        let j = rng.gen_range(i..dim);
        idx.swap(i, j);
    }
    (k <= dim).then(|| idx[..k].to_vec())
}

pub fn polyvector<R: Rng + ?Sized>(rng: &mut R, dim: usize, arity: usize, max_deg: u32) -> PolyVectorField {
    let terms: Vec<_> =
        (0..rng.gen_range(1..=2)).filter_map(|_| Some((index_set(rng, dim, arity)?, poly(rng, dim, max_deg, 2)))).collect();
    PolyVectorField::from_terms(dim, arity, terms)
}

pub fn form<R: Rng + ?Sized>(rng: &mut R, dim: usize, formdeg: usize, max_deg: u32) -> DiffForm {
    let mut out = DiffForm::zero(dim, formdeg);
    for _ in 0..rng.gen_range(1..=2) {
        if let Some(idx) = index_set(rng, dim, formdeg) {
            out = &out + &DiffForm::term(dim, &idx, poly(rng, dim, max_deg, 2));
        }
    }
    out
}

/// A polydifferential operator with derivatives of order `≤ max_order` per slot.
pub fn diff_op<R: Rng + ?Sized>(rng: &mut R, dim: usize, arity: usize, max_order: u32, max_deg: u32) -> PolyDiffOp {
    let terms: Vec<_> = (0..rng.gen_range(1..=2))
        .map(|_| {
            let derivs = (0..arity)
                .map(|_| {
                    let mut e = vec![0u32; dim];
                    for _ in 0..rng.gen_range(0..=max_order) {
                        e[rng.gen_range(0..dim)] += 1;
                    }
                    e
                })
                .collect();
            (derivs, poly(rng, dim, max_deg, 2))
        })
        .collect();
    PolyDiffOp::from_terms(dim, arity, terms)
}

/// A single tensor `a_0 ⊗ … ⊗ a_length`.
pub fn chain<R: Rng + ?Sized>(rng: &mut R, dim: usize, length: usize, max_deg: u32) -> HochChain {
    let slots: Vec<Poly> = (0..=length).map(|_| poly(rng, dim, max_deg, 2)).collect();
    HochChain::tensor(&slots)
}
