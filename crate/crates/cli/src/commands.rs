//! One function per subcommand, each returning a run report.

use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use formality::formality::{
    trace_map, trace_map_direct, wheel_weight, StarProduct, WeightBook, WeightSource, Weighted,
};
use formality::graph::{count_graphs, enumerate, wheel, AdmissibleGraph, Flavor, Vertex};
use formality::lie::{alpha, duflo_multiplicativity, LieAlgebraData};
use formality::linfty::Graded;
use formality::polyvector::PolyVectorField;
use formality::weights::{exact_weight, graph_weight_detailed, weight_representative, WeightCache, WeightOptions};
use formality::Poly;

use crate::report::{self, RunReport};
use crate::{suites, CliError, CliResult, Command, Config, FlavorArg};

pub fn dispatch(cmd: &Command, cfg: &Config) -> CliResult<RunReport> {
    match cmd {
        Command::Graphs { flavor, n, m, wheels } => graphs(*flavor, *n, *m, *wheels, cfg),
        Command::Weight { graph, id } => {
            let g = match (graph, id) {
                (Some(path), _) => graph_from_file(path)?,
                (None, Some(id)) => named_graph(id)?,
                (None, None) => return Err(CliError::Validation("give --graph or --id".into())),
            };
            weight(&g, cfg)
        }
        Command::Star { dim, poisson, order, f, g } => star(*dim, poisson, *order, f, g, cfg),
        Command::Verify { suite, cases } => suites::run(*suite, *cases, cfg),
        Command::Duflo { algebra, degree } => duflo(&parse_algebra(algebra)?, algebra, *degree, cfg),
        Command::Trace { algebra, a, order, direct } => trace(algebra, a, *order, *direct, cfg),
    }
}

fn flavor(f: FlavorArg) -> Flavor {
    match f {
        FlavorArg::Halfplane => Flavor::Halfplane,
        FlavorArg::Disk => Flavor::Disk,
    }
}

/// The weight book of a run: per-class seeds derived from the run seed.
pub fn book(cfg: &Config) -> Arc<WeightBook> {
    let mut source = WeightSource::new(cfg.samples, cfg.seed);
    if cfg.use_cache {
        source = source.with_cache(WeightCache::new(&cfg.cache_root));
    }
    Arc::new(WeightBook::new(source))
}

pub fn parse_algebra(spec: &str) -> CliResult<LieAlgebraData> {
    if let Some(d) = spec.strip_prefix("abelian") {
        let dim = d.parse().map_err(|_| CliError::Validation(format!("bad abelian dimension in {spec:?}")))?;
        return Ok(LieAlgebraData::abelian(dim));
    }
    if Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec).map_err(|e| CliError::Io(format!("{spec}: {e}")))?;
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{spec}: {e}")))?;
        return Ok(LieAlgebraData::from_json(&v)?);
    }
    Ok(LieAlgebraData::preset(spec)?)
}

/// Named Poisson structures or a literal bivector.
pub fn parse_poisson(dim: usize, spec: &str) -> CliResult<PolyVectorField> {
    let check = |pi: PolyVectorField| {
        if pi.dim() != dim {
            Err(CliError::Validation(format!("{spec} lives in dimension {}, not {dim}", pi.dim())))
        } else {
            Ok(pi)
        }
    };
    match spec {
        "zero" => Ok(PolyVectorField::zero(dim, 2)),
        "const01" if dim >= 2 => Ok(PolyVectorField::parse(dim, "d0^d1")?),
        "const01" => Err(CliError::Validation("const01 needs dimension ≥ 2".into())),
        "so3" | "affine2" | "heisenberg3" => check(LieAlgebraData::preset(spec)?.linear_poisson()),
        _ => {
            let pi = PolyVectorField::parse(dim, spec)?;
            if pi.arity() != 2 {
                return Err(CliError::Validation(format!("{spec} is not a bivector")));
            }
            Ok(pi)
        }
    }
}

pub fn graph_from_file(path: &Path) -> CliResult<AdmissibleGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(AdmissibleGraph::from_json(&v)?)
}

/// `mu` (disk, center to b2), `wedge` (1 → b1, b2), `vector` (1 → b1), `wheelK`.
pub fn named_graph(id: &str) -> CliResult<AdmissibleGraph> {
    let g = match id {
        "mu" => AdmissibleGraph::new(Flavor::Disk, 0, 2, vec![Vertex::Boundary(1)], vec![]),
        "wedge" => AdmissibleGraph::new(Flavor::Halfplane, 1, 2, vec![], vec![vec![Vertex::Boundary(0), Vertex::Boundary(1)]]),
        "vector" => AdmissibleGraph::new(Flavor::Halfplane, 1, 1, vec![], vec![vec![Vertex::Boundary(0)]]),
        _ => match id.strip_prefix("wheel").and_then(|k| k.parse().ok()) {
            Some(k) => wheel(k),
            None => return Err(CliError::Validation(format!("unknown graph id {id:?}"))),
        },
    };
    Ok(g?)
}

fn zero_weight_reason(g: &AdmissibleGraph) -> Option<&'static str> {
    if exact_weight(g).is_some_and(|w| num_traits::Zero::is_zero(&w)) {
        return Some("structural");
    }
    (weight_representative(g).1 == 0).then_some("odd symmetry")
}

fn graph_entry(g: &AdmissibleGraph) -> CliResult<Value> {
    let reason = zero_weight_reason(g);
    Ok(json!({
        "graph": g.to_json(),
        "hash": g.canonical_hash()?,
        "zero_weight": reason.is_some(),
        "zero_reason": reason,
    }))
}

fn graphs(f: FlavorArg, n: usize, m: usize, wheels: Option<usize>, cfg: &Config) -> CliResult<RunReport> {
    let (params, list) = match wheels {
        Some(k) => (json!({ "flavor": "disk", "wheels": k }), vec![wheel(k)?]),
        None => (json!({ "flavor": flavor(f).name(), "n": n, "m": m }), enumerate(flavor(f), n, m)?),
    };
    let entries = list.iter().map(graph_entry).collect::<CliResult<Vec<_>>>()?;
    let zero = entries.iter().filter(|e| e["zero_weight"] == true).count();
    let total = match wheels {
        Some(_) => 1,
        None => count_graphs(flavor(f), n, m),
    };
    let results = json!({ "count": total.to_string(), "zero_weight_count": zero, "graphs": entries });
    Ok(RunReport::new("graphs", params, cfg.seed, results))
}

fn weight(g: &AdmissibleGraph, cfg: &Config) -> CliResult<RunReport> {
    let hash = g.canonical_hash()?;
    let params = json!({ "graph": g.to_json(), "samples": cfg.samples });
    let mut results = json!({ "hash": hash });
    if let Some(w) = exact_weight(g) {
        results["exact"] = report::exact(&w);
    }
    let (canon, sign) = g.canonical_form();
    let key = WeightCache::key(&hash, g.flavor, cfg.samples, cfg.seed);
    let cache = cfg.use_cache.then(|| WeightCache::new(&cfg.cache_root));
    let cached = match &cache {
        Some(c) => c.get(&key)?,
        None => None,
    };
    let (stored, hit, nonconverged) = match cached {
        Some(w) => (w, true, false),
        None => {
            let run = graph_weight_detailed(&canon, cfg.samples, cfg.seed, &WeightOptions::default())?;
            if let Some(c) = &cache {
                c.put(&key, &run.estimate)?;
            }
            results["rejected_samples"] = json!(run.rejected);
            (run.estimate, false, run.nonconverged)
        }
    };
    let s = f64::from(sign);
    let value = s * stored.value;
    let stderr = s.abs() * stored.stderr;
    results["value"] = report::mc(value, stderr, stored.samples);
    results["cache_hit"] = json!(hit);
    results["nonconverged"] = json!(nonconverged);
    results["sigmas_from_zero"] = json!(if stderr > 0.0 { value.abs() / stderr } else { f64::INFINITY });
    Ok(RunReport::new("weight", params, cfg.seed, results))
}

fn parse_poly(dim: usize, s: &str) -> CliResult<Poly> {
    Ok(Poly::parse(dim, s)?)
}

fn series_json<T>(book: &WeightBook, s: &[Weighted<T>], samples: u64) -> CliResult<Value>
where
    T: std::fmt::Display + Graded + formality::formality::Flatten,
{
    let items = s
        .iter()
        .enumerate()
        .map(|(k, w)| Ok(json!({ "order": k, "value": report::weighted(w, &w.evaluate(book)?, samples) })))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Value::Array(items))
}

pub fn symbols_json(book: &WeightBook) -> Value {
    Value::Object(
        book.symbols()
            .into_iter()
            .map(|(h, v)| {
                let entry = json!({ "graph": v.graph.to_json(), "value": report::mc(v.value, v.stderr, book.source().samples) });
                (h, entry)
            })
            .collect(),
    )
}

fn star(dim: usize, poisson: &str, order: usize, f: &str, g: &str, cfg: &Config) -> CliResult<RunReport> {
    let pi = parse_poisson(dim, poisson)?;
    let (fp, gp) = (parse_poly(dim, f)?, parse_poly(dim, g)?);
    let book = book(cfg);
    let star = StarProduct::new(book.clone(), &pi, order)?;
    let product = star.multiply(&fp, &gp)?;
    let commutator = star.commutator(&fp, &gp)?;
    let params = json!({ "dim": dim, "poisson": pi.to_string(), "order": order, "f": fp.to_string(), "g": gp.to_string(), "samples": cfg.samples });
    let results = json!({
        "product": series_json(&book, &product, cfg.samples)?,
        "commutator": series_json(&book, &commutator, cfg.samples)?,
        "symbols": symbols_json(&book),
    });
    Ok(RunReport::new("star", params, cfg.seed, results))
}

fn duflo(g: &LieAlgebraData, name: &str, degree: u32, cfg: &Config) -> CliResult<RunReport> {
    let checks = duflo_multiplicativity(g, degree)?;
    let invariants: Vec<Value> =
        (1..=degree).map(|d| json!({ "degree": d, "basis": g.invariants(d).iter().map(Poly::to_string).collect::<Vec<_>>() })).collect();
    let alphas = (1..=degree / 2)
        .map(|k| Ok(json!({ "k": 2 * k, "alpha": report::exact(&alpha(2 * k as usize)?) })))
        .collect::<CliResult<Vec<_>>>()?;
    let passed = checks.iter().all(|c| c.holds);
    let results = json!({ "invariants": invariants, "alpha": alphas, "checks": checks, "multiplicative": passed });
    Ok(RunReport::new("duflo", json!({ "algebra": name, "degree": degree }), cfg.seed, results).with_passed(passed))
}

fn trace(algebra: &str, a: &str, order: usize, direct: bool, cfg: &Config) -> CliResult<RunReport> {
    let g = parse_algebra(algebra)?;
    let a = parse_poly(g.dim(), a)?;
    let book = book(cfg);
    let series = trace_map(&book, &g, &a, order)?;
    let mut wheels = vec![];
    for k in 2..=order {
        let w = wheel_weight(&book, k)?;
        let lifted = Weighted::from_expr(&w, &Poly::one(1))?;
        let n = lifted.evaluate(&book)?;
        wheels.push(json!({ "k": k, "w": report::weighted(&lifted, &n, cfg.samples) }));
    }
    let mut results = json!({ "series": series_json(&book, &series, cfg.samples)?, "wheel_weights": wheels });
    if direct {
        let d = trace_map_direct(book.clone(), &g, &a, order)?;
        let agree = series.iter().zip(&d).all(|(x, y)| x.sub(y).map(|r| r.is_zero()).unwrap_or(false));
        results["direct_agrees"] = json!(agree);
    }
    results["symbols"] = symbols_json(&book);
    let params = json!({ "algebra": algebra, "a": a.to_string(), "order": order, "samples": cfg.samples, "direct": direct });
    Ok(RunReport::new("trace", params, cfg.seed, results))
}
