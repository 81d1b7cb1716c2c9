use formality::lie::*;
use formality::polyvector::schouten;
use formality::symbolic::{factorial, int, rat, Poly, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn casimir() -> Poly {
    Poly::parse(3, "x0^2 + x1^2 + x2^2").unwrap()
}

/// Bernoulli numbers from `Σ_{j<=n} C(n+1, j) B_j = 0`.
fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=n {
        let mut s = Rational::zero();
        let mut binom = Rational::one();
        for (j, bj) in b.iter().enumerate() {
            s += &binom * bj;
            binom = binom * int((m + 1 - j) as i64) / int((j + 1) as i64);
        }
        b.push(-s / int((m + 1) as i64));
    }
    b
}

#[test]
fn alpha_matches_bernoulli_oracle() {
    assert_eq!(alpha(2).unwrap(), rat(1, 48));
    assert_eq!(alpha(4).unwrap(), rat(-1, 5760));
    let b = bernoulli(12);
    for k in 1..=6 {
        let expected = &b[2 * k] / (int(4 * k as i64) * factorial(2 * k));
        assert_eq!(alpha(2 * k).unwrap(), expected, "k = {k}");
    }
    assert!(alpha(3).is_err() && alpha(0).is_err());
}

#[test]
fn presets_and_json() {
    for g in [LieAlgebraData::so3(), LieAlgebraData::heisenberg3(), LieAlgebraData::affine2()] {
        assert!(schouten(&g.linear_poisson(), &g.linear_poisson()).unwrap().is_zero());
        assert_eq!(LieAlgebraData::from_json(&g.to_json()).unwrap(), g);
    }
    let text = r#"{"dim":3,"c":{"01":{"2":1},"12":{"0":1},"20":{"1":1}}}"#;
    let parsed = LieAlgebraData::from_json(&serde_json::from_str(text).unwrap()).unwrap();
    assert_eq!(parsed, LieAlgebraData::so3());
    let p = LieAlgebraData::so3().linear_poisson();
    let x = |i| Poly::var(3, i);
    assert_eq!(formality::polyvector::poisson_bracket(&p, &x(0), &x(1)), x(2));
    // [e0,e1] = e1, [e0,e2] = e2, [e1,e2] = e0 breaks Jacobi
    let bad = r#"{"dim":3,"c":{"01":{"1":1},"02":{"2":1},"12":{"0":1}}}"#;
    assert!(matches!(
        LieAlgebraData::from_json(&serde_json::from_str(bad).unwrap()),
        Err(formality::Error::InvalidLieAlgebra(_))
    ));
    let mut c = vec![vec![vec![Rational::zero(); 2]; 2]; 2];
    c[0][1][1] = int(1);
    assert!(LieAlgebraData::new(2, c).is_err());
    assert!(LieAlgebraData::preset("sl2").is_err());
}

#[test]
fn tr2_is_the_killing_form() {
    for g in [LieAlgebraData::so3(), LieAlgebraData::heisenberg3(), LieAlgebraData::affine2()] {
        let d = g.dim();
        // K_ij = Σ_{k,l} c_{ik}^l c_{jl}^k
        let killing = |i: usize, j: usize| {
            let mut s = Rational::zero();
            for k in 0..d {
                for l in 0..d {
                    s += g.structure_constant(i, k, l) * g.structure_constant(j, l, k);
                }
            }
            s
        };
        for (i, j) in [(0, 0), (0, 1), (1, 1), (d - 1, d - 1)] {
            let mut e = vec![0u32; d];
            e[i] += 1;
            e[j] += 1;
            let mono = Poly::monomial(e, Rational::one());
            // ∂_i∂_j(x_i x_j) picks up K_ij + K_ji, ∂_i²(x_i²) gives 2K_ii
            let expected = int(2) * killing(i, j);
            assert_eq!(tr_k(&g, 2, &mono), Poly::constant(d, expected), "{i}{j}");
        }
    }
    assert_eq!(tr_k(&LieAlgebraData::so3(), 2, &casimir()), Poly::constant(3, int(-12)));
}

#[test]
fn enveloping_relations() {
    let g = LieAlgebraData::so3();
    let mut u = Enveloping::new(&g);
    let e = |i| Poly::var(3, i);
    for i in 0..3 {
        for j in 0..3 {
            let comm = u.multiply(&e(i), &e(j)).unwrap().try_sub(&u.multiply(&e(j), &e(i)).unwrap()).unwrap();
            let mut expected = Poly::zero(3);
            for k in 0..3 {
                expected.add_scaled(&e(k), g.structure_constant(i, j, k));
            }
            assert_eq!(comm, expected);
        }
    }
    // the image of the Casimir is central
    let c = u.phi_pbw(&casimir()).unwrap();
    for i in 0..3 {
        assert_eq!(u.multiply(&c, &e(i)).unwrap(), u.multiply(&e(i), &c).unwrap());
    }
}

fn small_poly(dim: usize, seeds: &[i64]) -> Poly {
    let mut p = Poly::zero(dim);
    for (n, &s) in seeds.iter().enumerate() {
        let mut e = vec![0u32; dim];
        e[n % dim] += (s.unsigned_abs() % 3) as u32;
        e[(n + 1) % dim] += (n % 2) as u32;
        p.add_term(e, int(s % 5));
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn enveloping_product_is_associative(a in prop::collection::vec(-9i64..9, 3), b in prop::collection::vec(-9i64..9, 3), c in prop::collection::vec(-9i64..9, 3), which in 0usize..3) {
        let g = [LieAlgebraData::so3(), LieAlgebraData::heisenberg3(), LieAlgebraData::affine2()][which].clone();
        let d = g.dim();
        let (a, b, c) = (small_poly(d, &a), small_poly(d, &b), small_poly(d, &c));
        let mut u = Enveloping::new(&g);
        let ab = u.multiply(&a, &b).unwrap();
        let bc = u.multiply(&b, &c).unwrap();
        prop_assert_eq!(u.multiply(&ab, &c).unwrap(), u.multiply(&a, &bc).unwrap());
    }

    #[test]
    fn phi_strange_commutes_with_the_coadjoint_action(a in prop::collection::vec(-9i64..9, 4), which in 0usize..3) {
        let g = [LieAlgebraData::so3(), LieAlgebraData::heisenberg3(), LieAlgebraData::affine2()][which].clone();
        let a = small_poly(g.dim(), &a);
        for i in 0..g.dim() {
            let lhs = phi_strange(&g, &g.coadjoint(i, &a)).unwrap();
            let rhs = g.coadjoint(i, &phi_strange(&g, &a).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn phi_strange_is_identity_for_abelian() {
    let g = LieAlgebraData::abelian(3);
    let a = Poly::parse(3, "x0^4*x1 + 3*x2^2 - x1").unwrap();
    assert_eq!(phi_strange(&g, &a).unwrap(), a);
}

/// Invariants of degree ≤ 4 whose products stay in degree ≤ 4.
fn invariant_pairs(g: &LieAlgebraData, generator: &Poly) -> Vec<(Poly, Poly)> {
    let powers: Vec<Poly> = (0..=4).map(|k| generator.pow(k)).filter(|p| p.degree().unwrap_or(0) <= 4).collect();
    let mut out = vec![];
    for a in &powers {
        for b in &powers {
            if a.try_mul(b).unwrap().degree().unwrap_or(0) <= 4 {
                assert!(g.is_invariant(a) && g.is_invariant(b));
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

#[test]
fn duflo_is_multiplicative_on_invariants() {
    let so3 = LieAlgebraData::so3();
    let heis = LieAlgebraData::heisenberg3();
    for (g, generator) in [(&so3, casimir()), (&heis, Poly::var(3, 2))] {
        let mut u = Enveloping::new(g);
        for (a, b) in invariant_pairs(g, &generator) {
            let lhs = u.phi_d(&a.try_mul(&b).unwrap()).unwrap();
            let (da, db) = (u.phi_d(&a).unwrap(), u.phi_d(&b).unwrap());
            assert_eq!(lhs, u.multiply(&da, &db).unwrap(), "{a} * {b}");
        }
    }
    // φ_PBW alone is not multiplicative on the so(3) Casimir
    let mut u = Enveloping::new(&so3);
    let c = casimir();
    let pbw = u.phi_pbw(&c).unwrap();
    assert_ne!(u.phi_pbw(&c.try_mul(&c).unwrap()).unwrap(), u.multiply(&pbw, &pbw).unwrap());
}

#[test]
fn invariant_bases() {
    let so3 = LieAlgebraData::so3();
    for d in 0..=6u32 {
        let inv = so3.invariants(d);
        assert!(inv.iter().all(|p| so3.is_invariant(p) && !p.is_zero()));
        // S(so3)^so3 is generated by the Casimir
        assert_eq!(inv.len(), usize::from(d % 2 == 0), "degree {d}");
    }
    let c2 = &so3.invariants(2)[0];
    let ratio = c2.coeff(&[2, 0, 0]);
    assert_eq!(c2.scale(&(Rational::from_integer(1.into()) / ratio)), casimir());
    // the Heisenberg center x2 generates
    let heis = LieAlgebraData::heisenberg3();
    assert_eq!(heis.invariants(1).len(), 1);
    assert_eq!(heis.invariants(3).len(), 1);
    assert_eq!(LieAlgebraData::abelian(2).invariants(3).len(), 4);
}

#[test]
fn multiplicativity_report() {
    for g in [LieAlgebraData::so3(), LieAlgebraData::heisenberg3()] {
        let checks = duflo_multiplicativity(&g, 4).unwrap();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c.holds), "{checks:?}");
    }
}
