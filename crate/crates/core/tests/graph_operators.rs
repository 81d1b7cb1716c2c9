use formality::graph::{enumerate, wheel, AdmissibleGraph, Flavor, Vertex};
use formality::hochschild::{eval_op, hkr, mu, HochChain, PolyDiffOp};
use formality::operators::*;
use formality::polyvector::{DiffForm, PolyVectorField};
use formality::symbolic::{int, rat, Poly, Rational};
use proptest::prelude::*;

const DIM: usize = 2;

fn x(i: usize) -> Poly {
    Poly::var(DIM, i)
}

fn wedge(first: usize) -> AdmissibleGraph {
    let b = [Vertex::Boundary(first), Vertex::Boundary(1 - first)];
    AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![b.to_vec()]).unwrap()
}

fn mu_graph() -> AdmissibleGraph {
    AdmissibleGraph::new(Flavor::Disk, 0, 2, vec![Vertex::Boundary(1)], vec![]).unwrap()
}

#[test]
fn halfplane_examples() {
    let empty = AdmissibleGraph::new(Flavor::Halfplane, 0, 2, vec![], vec![]).unwrap();
    let (f, g) = (&x(0) * &x(1), &x(0) + &x(1));
    assert_eq!(eval_halfplane_graph(&empty, &[], &[f.clone(), g.clone()]).unwrap(), &f * &g);
    assert_eq!(graph_operator(&empty, &[], DIM).unwrap(), PolyDiffOp::product(DIM));

    let pi = PolyVectorField::term(DIM, &[0, 1], Poly::one(DIM));
    assert_eq!(eval_halfplane_graph(&wedge(0), &[pi.clone()], &[x(0), x(1)]).unwrap(), Poly::one(DIM));
    let op = graph_operator(&wedge(0), &[pi.clone()], DIM).unwrap();
    let expect = PolyDiffOp::from_terms(
        DIM,
        2,
        [(vec![vec![1, 0], vec![0, 1]], Poly::one(DIM)), (vec![vec![0, 1], vec![1, 0]], -Poly::one(DIM))],
    );
    assert_eq!(op, expect);
    assert!(eval_halfplane_graph(&wedge(0), &[pi.clone()], &[Poly::zero(DIM), x(1)]).unwrap().is_zero());
    assert!(graph_operator(&wedge(0), &[PolyVectorField::zero(DIM, 2)], DIM).unwrap().is_zero());
    assert!(graph_operator(&wedge(0), &[PolyVectorField::term(DIM, &[0], x(1))], DIM).is_err());
}

#[test]
fn disk_examples() {
    let (a1, a2) = (&x(0) * &x(0), &x(0) * &x(1));
    let out = eval_disk_graph(&mu_graph(), &[], &[a1.clone(), a2.clone()]).unwrap();
    assert_eq!(out, DiffForm::exact(&a2).mul_poly(&a1));
    let lone = AdmissibleGraph::new(Flavor::Disk, 0, 1, vec![], vec![]).unwrap();
    assert_eq!(eval_disk_graph(&lone, &[], &[a1.clone()]).unwrap(), DiffForm::function(a1));
}

#[test]
fn two_wheel_on_so3() {
    // γ = x2 ∂0∧∂1 + x0 ∂1∧∂2 + x1 ∂2∧∂0, a = x0^2: hand expansion of
    // Σ γ^{i j}_{,k} γ^{k l}_{,i} ∂_j ∂_l a
    let gamma = PolyVectorField::parse(3, "x2 * d0^d1 + x0 * d1^d2 + x1 * d2^d0").unwrap();
    let a = Poly::parse(3, "x0^2").unwrap();
    let out = eval_disk_graph(&wheel(2).unwrap(), &[gamma.clone(), gamma.clone()], &[a.clone()]).unwrap();
    // only j = l = 0 survives: Σ_{i,k} ∂_k γ^{i0} ∂_i γ^{k0} · 2
    let mut expect = Poly::zero(3);
    for i in 0..3 {
        for k in 0..3 {
            let mut ek = vec![0; 3];
            ek[k] = 1;
            let mut ei = vec![0; 3];
            ei[i] = 1;
            let t = &gamma.tensor_component(&[i, 0]).derivative(&ek) * &gamma.tensor_component(&[k, 0]).derivative(&ei);
            expect = &expect + &t;
        }
    }
    expect = expect.scale(&int(2));
    assert_eq!(out, DiffForm::function(expect.clone()));
    assert_eq!(expect, Poly::constant(3, int(-4)));
}

/// Weighted sum over the `k!` labelings of the one-vertex graph with `k`
/// boundary targets, each weighted `sgn(σ)/(k!)^2`, reproduces `hkr`.
#[test]
fn labeling_sum_with_factorial_prefactor_is_hkr() {
    for k in 0..=3usize {
        let dim = 3;
        let gamma = match k {
            0 => PolyVectorField::function(Poly::parse(dim, "x0*x1 + 2").unwrap()),
            1 => PolyVectorField::parse(dim, "x1 * d0 + x2^2 * d2").unwrap(),
            2 => PolyVectorField::parse(dim, "x2 * d0^d1 + x0 * d1^d2").unwrap(),
            _ => PolyVectorField::parse(dim, "(x0 + x1) * d0^d1^d2").unwrap(),
        };
        let kfact: i64 = (1..=k as i64).product();
        let mut total = PolyDiffOp::zero(dim, k);
        for g in enumerate(Flavor::Halfplane, 1, k).unwrap() {
            let targets: Vec<usize> = g.stars[0].iter().map(|v| if let Vertex::Boundary(j) = v { *j } else { 99 }).collect();
            let (_, sign) = formality::polyvector::sort_sign(&targets).unwrap();
            let w: Rational = rat(sign as i64, kfact * kfact);
            total = total.try_add(&graph_operator(&g, &[gamma.clone()], dim).unwrap().scale(&w)).unwrap();
        }
        assert_eq!(total, hkr(&gamma), "arity {k}");
    }
}

/// Sum over the `(m-1)!` labelings of the center star with the simplex
/// weights `sgn(σ)/((m-1)!)^2` reproduces `μ`.
#[test]
fn center_star_sum_is_mu() {
    for m in 1..=4usize {
        let dim = 3;
        let slots: Vec<Poly> = (0..m).map(|j| Poly::parse(dim, ["x0 + 1", "x1*x0", "x2^2", "x0*x2 + x1"][j]).unwrap()).collect();
        let chain = HochChain::tensor(&slots);
        let l = m - 1;
        let lf: i64 = (1..=l as i64).product();
        let mut total = DiffForm::zero(dim, l);
        for g in enumerate(Flavor::Disk, 0, m).unwrap() {
            if g.has_constant_angle_edge() {
                continue;
            }
            let targets: Vec<usize> = g.marked.iter().map(|v| if let Vertex::Boundary(j) = v { *j } else { 99 }).collect();
            let (_, sign) = formality::polyvector::sort_sign(&targets).unwrap();
            let w = rat(sign as i64, lf * lf);
            total = &total + &eval_disk_graph_chain(&g, &[], &chain).unwrap().scale(&w);
        }
        assert_eq!(total, mu(&chain), "m = {m}");
    }
}

#[test]
fn disk_output_degree_follows_the_grading() {
    // deg γ_1 + … + deg γ_n + (1 - m) - n = -l for every graph
    for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for g in enumerate(Flavor::Disk, n, m).unwrap() {
            let gammas: Vec<PolyVectorField> = g
                .arities()
                .iter()
                .map(|&a| PolyVectorField::term(3, &(0..a).collect::<Vec<_>>(), Poly::parse(3, "x0 + x1*x2").unwrap()))
                .collect();
            if g.arities().iter().any(|&a| a > 3) {
                continue;
            }
            let slots = vec![Poly::parse(3, "x0*x1*x2 + x1^2").unwrap(); m];
            let out = eval_disk_graph(&g, &gammas, &slots).unwrap();
            let lhs: i64 = gammas.iter().map(|c| c.degree()).sum::<i64>() + 1 - m as i64 - n as i64;
            assert_eq!(lhs, -(g.marked.len() as i64));
            assert_eq!(out.formdeg(), g.marked.len());
        }
    }
}

fn small_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0u32..3, DIM), -3i64..4), 1..4)
        .prop_map(|ts| Poly::from_terms(DIM, ts.into_iter().map(|(e, c)| (e, int(c)))))
}

fn bivector() -> impl Strategy<Value = PolyVectorField> {
    small_poly().prop_map(|c| PolyVectorField::term(DIM, &[0, 1], c))
}

/// `γ'(y)` for `x = A y`: components transform with `A^{-1}` and
/// coefficients are pulled back.
fn pull_back_pv(g: &PolyVectorField, a: [[i64; 2]; 2], ainv: [[i64; 2]; 2]) -> PolyVectorField {
    let images: Vec<Poly> = (0..DIM).map(|i| &x(0).scale(&int(a[i][0])) + &x(1).scale(&int(a[i][1]))).collect();
    let k = g.arity();
    let mut out = PolyVectorField::zero(DIM, k);
    let sets: Vec<Vec<usize>> = match k {
        0 => vec![vec![]],
        1 => vec![vec![0], vec![1]],
        _ => vec![vec![0, 1]],
    };
    for js in sets {
        let mut c = Poly::zero(DIM);
        for code in 0..DIM.pow(k as u32) {
            let is: Vec<usize> = (0..k).map(|p| (code / DIM.pow(p as u32)) % DIM).collect();
            let f: i64 = js.iter().zip(&is).map(|(&j, &i)| ainv[j][i]).product();
            if f != 0 {
                c = &c + &g.tensor_component(&is).substitute(&images).scale(&int(f));
            }
        }
        out = &out + &PolyVectorField::term(DIM, &js, c);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_then_eval_matches_direct(idx in 0usize..100, p1 in bivector(), p2 in bivector(), f in small_poly(), g in small_poly()) {
        let graphs = enumerate(Flavor::Halfplane, 2, 2).unwrap();
        let gr = &graphs[idx % graphs.len()];
        prop_assume!(gr.arities() == vec![2, 2]);
        let op = graph_operator(gr, &[p1.clone(), p2.clone()], DIM).unwrap();
        let direct = eval_halfplane_graph(gr, &[p1, p2], &[f.clone(), g.clone()]).unwrap();
        prop_assert_eq!(eval_op(&op, &[f, g]).unwrap(), direct);
    }

    #[test]
    fn multilinearity(p1 in bivector(), p2 in bivector(), f in small_poly(), g in small_poly(), h in small_poly()) {
        let gr = &enumerate(Flavor::Halfplane, 2, 2).unwrap()[7];
        let ev = |a: &PolyVectorField, b: &Poly| eval_halfplane_graph(gr, &[a.clone(), p2.clone()], &[b.clone(), h.clone()]).unwrap();
        let sum = &p1 + &PolyVectorField::term(DIM, &[0, 1], g.clone());
        let lhs = ev(&sum, &f);
        let rhs = &ev(&p1, &f) + &ev(&PolyVectorField::term(DIM, &[0, 1], g.clone()), &f);
        prop_assert_eq!(lhs, rhs);
        let lhs = ev(&p1, &(&f + &g));
        prop_assert_eq!(lhs, &ev(&p1, &f) + &ev(&p1, &g));
    }

    #[test]
    fn linear_coordinate_change(idx in 0usize..100, p1 in bivector(), v in small_poly(), f in small_poly(), g in small_poly()) {
        let (a, ainv) = ([[1, 1], [0, 1]], [[1, -1], [0, 1]]);
        let images: Vec<Poly> = (0..DIM).map(|i| &x(0).scale(&int(a[i][0])) + &x(1).scale(&int(a[i][1]))).collect();
        let graphs = enumerate(Flavor::Halfplane, 2, 1).unwrap();
        let gr = &graphs[idx % graphs.len()];
        let gammas: Vec<PolyVectorField> = gr.arities().iter().map(|&k| match k {
            0 => PolyVectorField::function(v.clone()),
            1 => PolyVectorField::term(DIM, &[0], v.clone()),
            _ => p1.clone(),
        }).collect();
        prop_assume!(gr.arities().iter().all(|&k| k <= 2));
        let _ = g;
        let before = eval_halfplane_graph(gr, &gammas, &[f.clone()]).unwrap().substitute(&images);
        let moved: Vec<PolyVectorField> = gammas.iter().map(|c| pull_back_pv(c, a, ainv)).collect();
        let after = eval_halfplane_graph(gr, &moved, &[f.substitute(&images)]).unwrap();
        prop_assert_eq!(before, after);
    }
}
