use formality::graph::*;
use formality::weights::*;
use Vertex::*;

fn sample_graph() -> AdmissibleGraph {
    AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![vec![Boundary(0), Boundary(1)]]).unwrap()
}

#[test]
fn put_get_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cache = WeightCache::new(dir.path());
    let w = graph_weight(&sample_graph(), 5000, 3).unwrap();
    let key = WeightCache::key(&w.graph, Flavor::Halfplane, 5000, 3);
    assert_eq!(cache.get(&key).unwrap(), None);
    cache.put(&key, &w).unwrap();
    let back = cache.get(&key).unwrap().unwrap();
    assert_eq!(back.value.to_bits(), w.value.to_bits());
    assert_eq!(back.stderr.to_bits(), w.stderr.to_bits());
    assert_eq!(back, w);
    let text = std::fs::read_to_string(dir.path().join(format!("{key}.json"))).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut fields: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    fields.sort();
    assert_eq!(fields, ["graph", "integrandVersion", "samples", "seed", "stderr", "value"]);
}

#[test]
fn keys_separate_parameters() {
    let h = sample_graph().canonical_hash().unwrap();
    let k = WeightCache::key(&h, Flavor::Halfplane, 100, 1);
    assert_ne!(k, WeightCache::key(&h, Flavor::Halfplane, 100, 2));
    assert_ne!(k, WeightCache::key(&h, Flavor::Halfplane, 101, 1));
    assert_ne!(k, WeightCache::key(&h, Flavor::Disk, 100, 1));
}

#[test]
fn second_lookup_is_a_hit() {
    let dir = tempfile::tempdir().unwrap();
    let cache = WeightCache::new(dir.path());
    let g = sample_graph();
    let a = cache.weight(&g, 4000, 8).unwrap();
    let b = cache.weight(&g, 4000, 8).unwrap();
    assert_eq!(a, b);
    let files = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(files, 1);
    // a relabeled copy lands on the same entry with the relabeling sign
    let swapped = AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![vec![Boundary(1), Boundary(0)]]).unwrap();
    let c = cache.weight(&swapped, 4000, 8).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    assert!(c.value != 0.0);
}

#[test]
fn corrupt_entry_is_recomputed_and_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let cache = WeightCache::new(dir.path());
    let g = sample_graph();
    let good = cache.weight(&g, 3000, 2).unwrap();
    let key = WeightCache::key(&good.graph, Flavor::Halfplane, 3000, 2);
    let path = dir.path().join(format!("{key}.json"));
    std::fs::write(&path, "{\"value\": 1.0, \"stderr\"").unwrap();
    assert_eq!(cache.get(&key).unwrap(), None);
    let again = cache.weight(&g, 3000, 2).unwrap();
    assert_eq!(again, good);
    assert_eq!(cache.get(&key).unwrap().unwrap(), good);
}

#[test]
fn concurrent_puts_leave_one_whole_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cache = WeightCache::new(dir.path());
    let w = graph_weight(&sample_graph(), 2000, 1).unwrap();
    let key = "concurrent";
    std::thread::scope(|s| {
        for i in 0..8 {
            let (cache, mut w) = (cache.clone(), w.clone());
            s.spawn(move || {
                w.seed = i;
                for _ in 0..20 {
                    cache.put(key, &w).unwrap();
                }
            });
        }
    });
    let back = cache.get(key).unwrap().unwrap();
    assert!(back.seed < 8);
    assert_eq!(back.value, w.value);
    let names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names, vec!["concurrent.json".to_string()]);
}
