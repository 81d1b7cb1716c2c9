#![allow(dead_code)]

use std::collections::BTreeSet;
use std::f64::consts::PI;

use formality::graph::{AdmissibleGraph, Flavor, Vertex, Vertex::Boundary};
use formality::weights::{integrand, sample_config, weight_prefactor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn wedge() -> AdmissibleGraph {
    AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![vec![Boundary(0), Boundary(1)]]).unwrap()
}

/// Composite 5-point Gauss-Legendre with bisection until the two levels agree.
pub fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let g = |a: f64, b: f64| {
        let (h, m) = ((b - a) / 2.0, (a + b) / 2.0);
        h * X.iter().zip(W).map(|(x, w)| w * f(m + h * x)).sum::<f64>()
    };
    let mid = (a + b) / 2.0;
    let whole = g(a, b);
    let halves = g(a, mid) + g(mid, b);
    if depth == 0 || (whole - halves).abs() < tol {
        halves
    } else {
        adaptive_gauss(f, a, mid, tol / 2.0, depth - 1) + adaptive_gauss(f, mid, b, tol / 2.0, depth - 1)
    }
}

/// Wedge weight by deterministic quadrature of the library integrand.
pub fn wedge_quadrature() -> f64 {
    let g = wedge();
    let (template, _) = sample_config(Flavor::Halfplane, 1, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    // polar coordinates around q1 = 0, r = s / (1 - s)
    let inner = |theta: f64| {
        let f = |s: f64| {
            let r = s / (1.0 - s);
            let cfg = template.with_coordinates(&[r * theta.cos(), r * theta.sin()]);
            integrand(&g, &cfg).unwrap() * r / (1.0 - s).powi(2)
        };
        adaptive_gauss(&f, 0.0, 1.0, 1e-10, 40)
    };
    weight_prefactor(&g) * adaptive_gauss(&inner, 0.0, PI, 1e-9, 40)
}

/// Every star-size split, every target tuple over all vertices (loops,
/// center and parallel edges included), filtered by `validate`.
pub fn brute_force(flavor: Flavor, n: usize, m: usize) -> BTreeSet<AdmissibleGraph> {
    let e = flavor.edge_count(n, m);
    let mut out = BTreeSet::new();
    if e < 0 {
        return out;
    }
    let mut all: Vec<Vertex> = (0..n).map(Vertex::Interior).collect();
    all.extend((0..m).map(Vertex::Boundary));
    all.push(Vertex::Marked);
    let sources = n + usize::from(flavor == Flavor::Disk);
    for sizes in compositions(e as usize, sources) {
        let total: usize = sizes.iter().sum();
        let combos = all.len().pow(total as u32);
        for code in 0..combos {
            let mut c = code;
            let mut flat = vec![];
            for _ in 0..total {
                flat.push(all[c % all.len()]);
                c /= all.len();
            }
            let mut lists = vec![];
            let mut at = 0;
            for &s in &sizes {
                lists.push(flat[at..at + s].to_vec());
                at += s;
            }
            let (marked, stars) = match flavor {
                Flavor::Disk => (lists[0].clone(), lists[1..].to_vec()),
                Flavor::Halfplane => (vec![], lists),
            };
            let g = AdmissibleGraph { flavor, n, m, marked, stars };
            if g.is_valid() {
                out.insert(g);
            }
        }
    }
    out
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = vec![];
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}
