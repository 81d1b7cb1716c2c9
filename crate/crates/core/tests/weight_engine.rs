use std::f64::consts::PI;

use formality::graph::*;
use formality::weights::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use Vertex::*;

mod common;
use common::{wedge, wedge_quadrature};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mu(m: usize) -> AdmissibleGraph {
    AdmissibleGraph::new(Flavor::Disk, 0, m, (1..m).map(Boundary).collect(), vec![]).unwrap()
}

#[test]
fn angle_examples() {
    assert!(harmonic_angle(c(0.0, 1.0), c(0.0, 2.0)).unwrap().abs() < 1e-15);
    assert!(harmonic_angle(c(0.0, 1.0), c(0.0, 0.0)).unwrap().abs() < 1e-15);
    assert!((harmonic_angle(c(0.0, 1.0), c(1.0, 0.0)).unwrap() - PI / 2.0).abs() < 1e-15);
    assert!(harmonic_angle(c(0.0, 0.0), c(1.0, 0.0)).is_err());
    assert!(harmonic_angle(c(0.0, 1.0), c(0.0, 1.0)).is_err());
    assert!((disk_angle_c1(c(0.3, 0.0), c(0.8, 0.0)).unwrap() - PI).abs() < 1e-12);
    let a = disk_angle_c1(c(0.5, 0.0), c(-1.0, 0.0)).unwrap();
    assert!(a.min(2.0 * PI - a) < 1e-12);
    assert!(disk_angle_c1(c(0.0, 0.0), c(0.5, 0.0)).is_err());
    assert_eq!(disk_angle_c2(c(0.3, 0.0), c(1.0, 0.0)).unwrap(), 0.0);
    let q = Complex64::from_polar(0.7, PI / 3.0);
    assert!((disk_angle_c2(q, c(1.0, 0.0)).unwrap() - PI / 3.0).abs() < 1e-15);
}

fn mod_pi_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

fn mod_2pi_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

proptest! {
    #[test]
    fn harmonic_angle_is_affine_invariant(
        px in -3.0f64..3.0, py in 0.1f64..3.0, qx in -3.0f64..3.0, qy in 0.0f64..3.0,
        a in 0.2f64..5.0, b in -5.0f64..5.0,
    ) {
        let (p, q) = (c(px, py), c(qx, qy));
        prop_assume!((p - q).norm() > 1e-3);
        let t = |z: Complex64| z * a + b;
        let d = mod_pi_dist(harmonic_angle(p, q).unwrap(), harmonic_angle(t(p), t(q)).unwrap());
        prop_assert!(d < 1e-12, "{}", d);
    }

    #[test]
    fn disk_angles_are_rotation_invariant(
        pr in 0.05f64..0.95, pa in 0.0f64..6.3, qr in 0.05f64..1.0, qa in 0.0f64..6.3, rot in 0.0f64..6.3,
    ) {
        let (p, q) = (Complex64::from_polar(pr, pa), Complex64::from_polar(qr, qa));
        prop_assume!((p - q).norm() > 1e-3);
        let r = Complex64::from_polar(1.0, rot);
        let d1 = mod_2pi_dist(disk_angle_c1(p, q).unwrap(), disk_angle_c1(r * p, r * q).unwrap());
        prop_assert!(d1 < 1e-12, "{}", d1);
        let a1 = Complex64::from_polar(1.0, pa);
        let d2 = mod_2pi_dist(disk_angle_c2(q, a1).unwrap(), disk_angle_c2(r * q, r * a1).unwrap());
        prop_assert!(d2 < 1e-12, "{}", d2);
    }
}

/// Edge angles straight from the public angle functions.
fn edge_angles(g: &AdmissibleGraph, cfg: &ConfigPoint) -> Vec<f64> {
    let pos = |v: Vertex| match v {
        Interior(i) => cfg.interior[i],
        Boundary(j) => cfg.boundary_position(j),
        Marked => c(0.0, 0.0),
    };
    g.edges()
        .iter()
        .map(|e| match (g.flavor, e.source) {
            (Flavor::Halfplane, s) => harmonic_angle(pos(s), pos(e.target)).unwrap(),
            (Flavor::Disk, Marked) => {
                let reference = if g.m == 0 { cfg.interior[0] } else { cfg.boundary_position(0) };
                disk_angle_c2(pos(e.target), reference).unwrap()
            }
            (Flavor::Disk, s) => disk_angle_c1(pos(s), pos(e.target)).unwrap(),
        })
        .collect()
}

fn min_separation(cfg: &ConfigPoint) -> f64 {
    let mut pts: Vec<Complex64> = cfg.interior.clone();
    pts.extend((0..cfg.boundary.len()).map(|j| cfg.boundary_position(j)));
    if cfg.flavor == Flavor::Disk {
        pts.push(c(0.0, 0.0));
    }
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            best = best.min((pts[i] - pts[j]).norm());
        }
        if cfg.flavor == Flavor::Halfplane && i < cfg.interior.len() {
            best = best.min(pts[i].im);
        }
    }
    best
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shapes = [
        (Flavor::Halfplane, 1, 1),
        (Flavor::Halfplane, 1, 2),
        (Flavor::Halfplane, 2, 0),
        (Flavor::Halfplane, 2, 1),
        (Flavor::Halfplane, 2, 3),
        (Flavor::Disk, 1, 0),
        (Flavor::Disk, 1, 1),
        (Flavor::Disk, 2, 0),
        (Flavor::Disk, 2, 2),
    ];
    let h = 1e-6;
    for (flavor, n, m) in shapes {
        let graphs = enumerate(flavor, n, m).unwrap();
        let mut checked = 0;
        for (k, g) in graphs.iter().enumerate().filter(|(_, g)| !g.has_constant_angle_edge()).take(6) {
            let cfg = loop {
                let (cfg, _) = sample_config(flavor, n, m, &mut rng).unwrap();
                if min_separation(&cfg) > 0.05 {
                    break cfg;
                }
            };
            let jac = angle_jacobian(g, &cfg).unwrap();
            let t = cfg.coordinates();
            for j in 0..t.len() {
                let (mut tp, mut tm) = (t.clone(), t.clone());
                tp[j] += h;
                tm[j] -= h;
                let (ap, am) = (edge_angles(g, &cfg.with_coordinates(&tp)), edge_angles(g, &cfg.with_coordinates(&tm)));
                for e in 0..ap.len() {
                    let period = if flavor == Flavor::Halfplane { PI } else { 2.0 * PI };
                    let mut d = ap[e] - am[e];
                    d -= period * (d / period).round();
                    let fd = d / (2.0 * h);
                    let an = jac[(e, j)];
                    assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "{flavor:?} {n} {m} graph {k} edge {e} coord {j}: {fd} vs {an}");
                }
            }
            checked += 1;
        }
        assert!(checked > 0, "{flavor:?} {n} {m}");
    }
}

#[test]
fn wedge_integrand_closed_form() {
    // for real q the harmonic angle is 2 arg(q - p), whose gradient in (x, y)
    // is -2 (y, q - x) / |p - q|^2; the determinant is 4y / (|p|^2 |p-1|^2)
    let g = wedge();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (cfg, _) = sample_config(Flavor::Halfplane, 1, 2, &mut rng).unwrap();
        let p = cfg.interior[0];
        let expected = 4.0 * p.im / (p.norm_sqr() * (p - 1.0).norm_sqr());
        let got = integrand(&g, &cfg).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{got} vs {expected}");
    }
}

#[test]
fn sampler_examples_and_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (cfg, d) = sample_config(Flavor::Halfplane, 1, 2, &mut rng).unwrap();
    assert_eq!((cfg.boundary[0], cfg.boundary[1]), (0.0, 1.0));
    assert_eq!(cfg.gauge, Gauge::TwoBoundary);
    assert!(d > 0.0 && cfg.interior[0].im > 0.0);
    let (cfg, d) = sample_config(Flavor::Disk, 1, 1, &mut rng).unwrap();
    assert_eq!(cfg.boundary[0], 0.0);
    assert!((d - 1.0 / PI).abs() < 1e-15 && cfg.interior[0].norm() < 1.0);
    for _ in 0..100 {
        let (cfg, d) = sample_config(Flavor::Disk, 0, 3, &mut rng).unwrap();
        assert!((d - 2.0 / (2.0 * PI).powi(2)).abs() < 1e-15);
        assert!(0.0 < cfg.boundary[1] && cfg.boundary[1] < cfg.boundary[2] && cfg.boundary[2] < 2.0 * PI);
    }
    assert!(matches!(sample_config(Flavor::Halfplane, 0, 2, &mut rng), Err(formality::Error::Degenerate(_))));
    assert!(matches!(sample_config(Flavor::Disk, 0, 1, &mut rng), Err(formality::Error::Degenerate(_))));
    // E[1_A / density] = area(A) for the unit square A in the half-plane and
    // the quarter disk, for both samplers
    for sampler in [Sampler::Uniform, Sampler::Anchored] {
        let trials = 400_000;
        let (mut hp, mut dk) = (0.0, 0.0);
        for _ in 0..trials {
            let (cfg, d) = sample_config_with(sampler, Flavor::Halfplane, 1, 2, &mut rng).unwrap();
            let p = cfg.interior[0];
            if (0.0..1.0).contains(&p.re) && p.im < 1.0 {
                hp += 1.0 / d;
            }
            let (cfg, d) = sample_config_with(sampler, Flavor::Disk, 1, 1, &mut rng).unwrap();
            let p = cfg.interior[0];
            if p.re > 0.0 && p.im > 0.0 {
                dk += 1.0 / d;
            }
        }
        let (hp, dk) = (hp / trials as f64, dk / trials as f64);
        assert!((hp - 1.0).abs() < 0.03, "{sampler:?} half-plane area {hp}");
        assert!((dk - PI / 4.0).abs() < 0.02, "{sampler:?} disk area {dk}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_labels_in_a_star_negates_the_integrand(idx in 0usize..10_000, seed in 0u64..1000) {
        let graphs = enumerate(Flavor::Halfplane, 2, 2).unwrap();
        let g = &graphs[idx % graphs.len()];
        let Some(k) = (0..g.n).find(|&k| g.stars[k].len() >= 2) else { return Ok(()) };
        let mut swapped = g.clone();
        swapped.stars[k].swap(0, 1);
        let (cfg, _) = sample_config(Flavor::Halfplane, 2, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (a, b) = (integrand(g, &cfg).unwrap(), integrand(&swapped, &cfg).unwrap());
        prop_assert!((a + b).abs() <= 1e-9 * a.abs().max(1.0), "{} {}", a, b);
    }

    #[test]
    fn mirror_reverses_the_integrand(idx in 0usize..10_000, seed in 0u64..1000, shape in 0usize..5) {
        let (flavor, n, m) = [(Flavor::Halfplane, 2, 2), (Flavor::Disk, 2, 0), (Flavor::Disk, 2, 1), (Flavor::Disk, 2, 2), (Flavor::Disk, 1, 3)][shape];
        let disk = flavor == Flavor::Disk;
        let graphs = enumerate(flavor, n, m).unwrap();
        let g = &graphs[idx % graphs.len()];
        prop_assume!(!g.has_constant_angle_edge());
        let (cfg, _) = sample_config(flavor, n, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let t = cfg.coordinates();
        // z -> 1 - conj(z) swaps q1 = 0 and q2 = 1; on the disk z -> conj(z)
        // with the free boundary angles 2π - θ listed in reversed order
        let gauge = usize::from(disk && m == 0);
        let reflect = |t: &[f64]| -> Vec<f64> {
            let mut r = t.to_vec();
            for i in 0..n - gauge {
                let at = gauge + 2 * i;
                if disk {
                    r[at + 1] = -t[at + 1];
                } else {
                    r[at] = 1.0 - t[at];
                }
            }
            if disk && m >= 2 {
                let b = 2 * n;
                for j in 0..m - 1 {
                    r[b + j] = 2.0 * PI - t[b + (m - 2 - j)];
                }
            }
            r
        };
        let mirrored = cfg.with_coordinates(&reflect(&t));
        // sign of the chart map's determinant from its action on a basis
        let dim = t.len();
        let base = reflect(&vec![0.0; dim]);
        let mut jac = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let mut e = vec![0.0; dim];
            e[j] = 1.0;
            let image = reflect(&e);
            for i in 0..dim {
                jac[i][j] = image[i] - base[i];
            }
        }
        let perm_sign = |m: &Vec<Vec<f64>>| -> f64 {
            // a signed permutation matrix
            let cols: Vec<usize> = m.iter().map(|row| row.iter().position(|v| *v != 0.0).unwrap()).collect();
            let mut s: f64 = m.iter().zip(&cols).map(|(row, &c)| row[c].signum()).product();
            for a in 0..cols.len() {
                for b in a + 1..cols.len() {
                    if cols[a] > cols[b] {
                        s = -s;
                    }
                }
            }
            s
        };
        let det = perm_sign(&jac);
        let a = integrand(g, &cfg).unwrap();
        let b = integrand(&g.mirror(), &mirrored).unwrap();
        let edges = if g.edge_count() % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((b - edges * det * a).abs() <= 1e-9 * a.abs().max(1.0), "{} {}", a, b);
        prop_assert_eq!(mirror_sign(flavor, n, m), Some((edges * det) as i32));
    }
}

#[test]
fn parallel_edges_give_a_zero_integrand() {
    let cases = [
        AdmissibleGraph { flavor: Flavor::Halfplane, n: 2, m: 1, marked: vec![], stars: vec![vec![Boundary(0), Boundary(0)], vec![Boundary(0)]] },
        AdmissibleGraph { flavor: Flavor::Disk, n: 2, m: 1, marked: vec![], stars: vec![vec![Interior(1), Interior(1)], vec![Boundary(0), Interior(0)]] },
        AdmissibleGraph { flavor: Flavor::Disk, n: 1, m: 2, marked: vec![Interior(0), Interior(0)], stars: vec![vec![Boundary(1)]] },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for g in &cases {
        assert_eq!(g.edge_count() as i64, g.flavor.edge_count(g.n, g.m));
        for _ in 0..1000 {
            let (cfg, _) = sample_config_with(Sampler::Anchored, g.flavor, g.n, g.m, &mut rng).unwrap();
            let v = integrand(g, &cfg).unwrap();
            assert!(v.abs() < 1e-12, "{v} for {g:?}");
        }
    }
}

#[test]
fn weights_are_reproducible_and_thread_independent() {
    let g = AdmissibleGraph::new(Flavor::Halfplane, 2, 1, vec![], vec![vec![Boundary(0), Interior(1)], vec![Boundary(0)]]).unwrap();
    let a = graph_weight(&g, 20_000, 9).unwrap();
    let b = graph_weight(&g, 20_000, 9).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = pool.install(|| graph_weight(&g, 20_000, 9).unwrap());
    assert_eq!(a.value.to_bits(), c.value.to_bits());
    assert_eq!(a.stderr.to_bits(), c.stderr.to_bits());
    assert_ne!(a.value, graph_weight(&g, 20_000, 10).unwrap().value);
    assert_eq!(a.integrand_version, INTEGRAND_VERSION);
    assert_eq!(a.graph, g.canonical_hash().unwrap());
    assert!(graph_weight(&g, 0, 1).is_err());
}

#[test]
fn mu_graph_weight_is_one() {
    let w = graph_weight(&mu(2), 1_000_000, 1).unwrap();
    assert!((w.value - 1.0).abs() < 1e-2 && (w.value - 1.0).abs() <= 3.0 * w.stderr, "{w:?}");
    // a point has weight one; edges ending at a1 have constant angle
    assert_eq!(graph_weight(&mu(1), 10, 1).unwrap().value, 1.0);
    let constant = AdmissibleGraph::new(Flavor::Disk, 0, 2, vec![Boundary(0)], vec![]).unwrap();
    assert_eq!(graph_weight(&constant, 10, 1).unwrap().value, 0.0);
}

#[test]
fn wedge_weight_matches_quadrature() {
    let oracle = wedge_quadrature();
    assert!((oracle - 0.25).abs() < 1e-6, "{oracle}");
    let w = graph_weight(&wedge(), 1_000_000, 2).unwrap();
    assert!((w.value - oracle).abs() < 1e-3, "{w:?} vs {oracle}");
}

#[test]
fn two_wheel_vanishes() {
    let w = graph_weight(&wheel(2).unwrap(), 1_000_000, 3).unwrap();
    assert!(w.value.abs() <= 3.0 * w.stderr, "{w:?}");
}

#[test]
fn relabeling_interior_vertices_keeps_the_weight() {
    let g = AdmissibleGraph::new(Flavor::Halfplane, 2, 2, vec![], vec![vec![Boundary(0), Boundary(1)], vec![Interior(0), Boundary(1)]]).unwrap();
    let (h, sign) = g.relabel(&[1, 0]);
    let (a, b) = (graph_weight(&g, 400_000, 4).unwrap(), graph_weight(&h, 400_000, 5).unwrap());
    let tol = 4.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!((b.value - sign as f64 * a.value).abs() <= tol, "{a:?} {b:?} sign {sign}");
}
