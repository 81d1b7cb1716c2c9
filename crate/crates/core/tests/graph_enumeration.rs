use std::collections::{BTreeMap, BTreeSet};

use formality::graph::*;
use proptest::prelude::*;

mod common;
use common::brute_force;

#[test]
fn enumeration_matches_brute_force() {
    let cases = (0..=2).flat_map(|n| (0..=3).map(move |m| (Flavor::Halfplane, n, m)));
    let disk = (0..=2).flat_map(|n| (0..=2).map(move |m| (Flavor::Disk, n, m)));
    for (flavor, n, m) in cases.chain(disk) {
        let oracle = brute_force(flavor, n, m);
        match enumerate(flavor, n, m) {
            Ok(list) => {
                let set: BTreeSet<_> = list.iter().cloned().collect();
                assert_eq!(set.len(), list.len(), "duplicates for {flavor:?} {n} {m}");
                assert_eq!(set, oracle, "{flavor:?} n={n} m={m}");
                assert_eq!(count_graphs(flavor, n, m), list.len() as u128);
                assert!(list.windows(2).all(|w| w[0] < w[1]), "order for {flavor:?} {n} {m}");
                assert!(list.iter().all(|g| g.edge_count() as i64 == flavor.edge_count(n, m)));
            }
            Err(_) => assert!(oracle.is_empty(), "{flavor:?} n={n} m={m}"),
        }
    }
}

#[test]
fn small_counts() {
    assert_eq!(enumerate(Flavor::Halfplane, 1, 2).unwrap().len(), 2);
    assert_eq!(enumerate(Flavor::Halfplane, 0, 2).unwrap().len(), 1);
    let disk = enumerate(Flavor::Disk, 0, 2).unwrap();
    assert_eq!(disk.len(), 2);
    assert_eq!(disk.iter().filter(|g| g.has_constant_angle_edge()).count(), 1);
    assert!(disk.iter().any(|g| g.marked == vec![Vertex::Boundary(1)]));
}

#[test]
fn resource_guard() {
    assert!(matches!(
        enumerate_bounded(Flavor::Halfplane, 4, 3, 1000),
        Err(formality::Error::Resource(_))
    ));
}

#[test]
fn validation_examples() {
    let wedge = AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![vec![Vertex::Boundary(0), Vertex::Boundary(1)]]);
    assert!(wedge.is_ok());
    let looped = AdmissibleGraph {
        flavor: Flavor::Halfplane,
        n: 1,
        m: 2,
        marked: vec![],
        stars: vec![vec![Vertex::Interior(0), Vertex::Boundary(1)]],
    };
    assert!(looped.validate().iter().any(|v| v.rule == "no loops"));
    let into_center = AdmissibleGraph {
        flavor: Flavor::Disk,
        n: 1,
        m: 0,
        marked: vec![],
        stars: vec![vec![Vertex::Marked]],
    };
    assert!(into_center.validate().iter().any(|v| v.rule == "1 not an end-point"));
    let parallel = AdmissibleGraph {
        flavor: Flavor::Halfplane,
        n: 1,
        m: 2,
        marked: vec![],
        stars: vec![vec![Vertex::Boundary(0), Vertex::Boundary(0)]],
    };
    assert!(parallel.validate().iter().any(|v| v.rule == "zero-weight parallel edge"));
    let short = AdmissibleGraph { flavor: Flavor::Halfplane, n: 1, m: 2, marked: vec![], stars: vec![vec![Vertex::Boundary(0)]] };
    assert!(short.validate().iter().any(|v| v.rule == "edge count"));
}

#[test]
fn odd_automorphisms_force_zero_sign() {
    // swapping the two vertices exchanges two blocks of odd size
    let g = AdmissibleGraph::new(
        Flavor::Halfplane,
        2,
        0,
        vec![],
        vec![vec![Vertex::Interior(1)], vec![Vertex::Interior(0)]],
    )
    .unwrap();
    assert_eq!(g.canonical_form().1, 0);
    assert_ne!(wheel(2).unwrap().canonical_form().1, 0);
}

#[test]
fn wheels() {
    assert!(wheel(1).is_err());
    let w2 = wheel(2).unwrap();
    assert_eq!(w2.edge_count(), 4);
    assert!(is_wheel(&w2));
    let w4 = wheel(4).unwrap();
    assert_eq!(w4.edge_count(), 8);
    assert!(w4.is_valid() && is_wheel(&w4));
    let (relabeled, _) = w4.relabel(&[2, 0, 3, 1]);
    assert!(is_wheel(&relabeled));
    // two 2-cycles are several wheels, not one
    let split = AdmissibleGraph::new(
        Flavor::Disk,
        4,
        1,
        vec![],
        vec![
            vec![Vertex::Interior(1), Vertex::Boundary(0)],
            vec![Vertex::Interior(0), Vertex::Boundary(0)],
            vec![Vertex::Interior(3), Vertex::Boundary(0)],
            vec![Vertex::Interior(2), Vertex::Boundary(0)],
        ],
    )
    .unwrap();
    assert!(!is_wheel(&split));
}

#[test]
fn json_format() {
    let text = r#"{"flavor":"disk","n":2,"m":1,"stars":{"1":[2,"b1"],"2":[1,"b1"]}}"#;
    let g = AdmissibleGraph::from_json(&serde_json::from_str(text).unwrap()).unwrap();
    assert_eq!(g, wheel(2).unwrap());
    assert_eq!(AdmissibleGraph::from_json(&g.to_json()).unwrap(), g);
    let mu = r#"{"flavor":"disk","n":0,"m":2,"stars":{"c":["b2"]}}"#;
    let g = AdmissibleGraph::from_json(&serde_json::from_str(mu).unwrap()).unwrap();
    assert_eq!(g.marked, vec![Vertex::Boundary(1)]);
    let bad = r#"{"flavor":"disk","n":1,"m":1,"stars":{"1":["c","b1"]}}"#;
    assert!(AdmissibleGraph::from_json(&serde_json::from_str(bad).unwrap()).is_err());
}

#[test]
fn hash_examples() {
    let list = enumerate(Flavor::Halfplane, 1, 2).unwrap();
    assert_ne!(list[0].canonical_hash().unwrap(), list[1].canonical_hash().unwrap());
    let disk_shape = wheel(2).unwrap();
    let half_shape = AdmissibleGraph { flavor: Flavor::Halfplane, m: 2, ..disk_shape.clone() };
    assert_ne!(disk_shape.canonical_hash().unwrap(), half_shape.canonical_hash().unwrap());
}

#[test]
fn hash_is_injective_modulo_relabeling() {
    for (flavor, n, m) in [(Flavor::Halfplane, 2, 2), (Flavor::Halfplane, 3, 0), (Flavor::Disk, 2, 1), (Flavor::Disk, 2, 2)] {
        let list = enumerate(flavor, n, m).unwrap();
        let mut classes: BTreeMap<String, Vec<AdmissibleGraph>> = BTreeMap::new();
        for g in &list {
            classes.entry(g.canonical_hash().unwrap()).or_default().push(g.clone());
        }
        let perms = all_perms(n);
        for members in classes.values() {
            let orbit: BTreeSet<AdmissibleGraph> = perms.iter().map(|p| members[0].relabel(p).0).collect();
            assert!(members.iter().all(|g| orbit.contains(g)));
            assert_eq!(members.len(), orbit.len());
        }
    }
}

fn all_perms(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = vec![];
    for p in all_perms(k - 1) {
        for pos in 0..k {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

proptest! {
    #[test]
    fn hash_invariant_under_relabeling(idx in 0usize..1000, perm_seed in 0usize..24) {
        let list = enumerate(Flavor::Disk, 3, 1).unwrap();
        let g = &list[idx % list.len()];
        let perm = all_perms(3)[perm_seed % 6].clone();
        let (h, s) = g.relabel(&perm);
        prop_assert_eq!(g.canonical_hash().unwrap(), h.canonical_hash().unwrap());
        let (c1, s1) = g.canonical_form();
        let (c2, s2) = h.canonical_form();
        prop_assert_eq!(c1, c2);
        // W(g) = s1 W(c) and W(h) = s2 W(c) = s W(g)
        prop_assert_eq!(s2, s * s1);
        prop_assert_eq!(s1 == 0, g.relabel(&perm).0.canonical_form().1 == 0);
    }

    #[test]
    fn mirror_is_an_involution(idx in 0usize..1000) {
        let list = enumerate(Flavor::Halfplane, 2, 3).unwrap();
        let g = &list[idx % list.len()];
        prop_assert_eq!(g.mirror().mirror(), g.clone());
        prop_assert!(g.mirror().is_valid());
    }
}
