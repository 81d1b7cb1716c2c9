//! Admissible graphs in the upper-half-plane and disk-with-center flavors.

use std::fmt;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    Halfplane,
    Disk,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Halfplane => "halfplane",
            Flavor::Disk => "disk",
        }
    }

    pub fn parse(s: &str) -> Result<Flavor> {
        match s {
            "halfplane" => Ok(Flavor::Halfplane),
            "disk" => Ok(Flavor::Disk),
            _ => Err(Error::InvalidGraph(format!("unknown flavor {s:?}"))),
        }
    }

    /// Edge count forced by the grading: `2n+m-2` or `2n+m-1`.
    pub fn edge_count(self, n: usize, m: usize) -> i64 {
        let base = 2 * n as i64 + m as i64;
        match self {
            Flavor::Halfplane => base - 2,
            Flavor::Disk => base - 1,
        }
    }
}

/// Vertex names. Interior and boundary indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vertex {
    Interior(usize),
    Boundary(usize),
    Marked,
}

impl Vertex {
    pub fn name(self) -> String {
        match self {
            Vertex::Interior(i) => (i + 1).to_string(),
            Vertex::Boundary(j) => format!("b{}", j + 1),
            Vertex::Marked => "c".into(),
        }
    }

    fn to_json(self) -> Value {
        match self {
            Vertex::Interior(i) => json!(i + 1),
            v => json!(v.name()),
        }
    }

    fn from_json(v: &Value) -> Result<Vertex> {
        let bad = || Error::InvalidGraph(format!("bad vertex {v}"));
        match v {
            Value::Number(x) => {
                let i = x.as_u64().filter(|&i| i >= 1).ok_or_else(bad)?;
                Ok(Vertex::Interior(i as usize - 1))
            }
            Value::String(s) => Vertex::from_name(s).ok_or_else(bad),
            _ => Err(bad()),
        }
    }

    pub fn from_name(s: &str) -> Option<Vertex> {
        if s == "c" {
            return Some(Vertex::Marked);
        }
        if let Some(rest) = s.strip_prefix('b') {
            let j: usize = rest.parse().ok()?;
            return (j >= 1).then(|| Vertex::Boundary(j - 1));
        }
        let i: usize = s.parse().ok()?;
        (i >= 1).then(|| Vertex::Interior(i - 1))
    }
}

/// A labeled directed graph. `stars[i]` lists the targets of the edges
/// leaving interior vertex `i` in label order; `marked` does the same for
/// the center in the disk flavor and is empty for the half-plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdmissibleGraph {
    pub flavor: Flavor,
    pub n: usize,
    pub m: usize,
    pub marked: Vec<Vertex>,
    pub stars: Vec<Vec<Vertex>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// An edge with its source; `label` is the position inside the source star.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: Vertex,
    pub target: Vertex,
    pub label: usize,
}

impl AdmissibleGraph {
    pub fn new(flavor: Flavor, n: usize, m: usize, marked: Vec<Vertex>, stars: Vec<Vec<Vertex>>) -> Result<Self> {
        let g = AdmissibleGraph { flavor, n, m, marked, stars };
        let v = g.validate();
        if v.is_empty() {
            Ok(g)
        } else {
            let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::InvalidGraph(msgs.join("; ")))
        }
    }

    pub fn star(&self, v: Vertex) -> &[Vertex] {
        match v {
            Vertex::Interior(i) => &self.stars[i],
            Vertex::Marked => &self.marked,
            Vertex::Boundary(_) => &[],
        }
    }

    /// Edges in the order of the weight form: the center star first, then
    /// the stars of `1..n`, each in label order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = vec![];
        for (label, &t) in self.marked.iter().enumerate() {
            out.push(Edge { source: Vertex::Marked, target: t, label });
        }
        for (i, s) in self.stars.iter().enumerate() {
            for (label, &t) in s.iter().enumerate() {
                out.push(Edge { source: Vertex::Interior(i), target: t, label });
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.marked.len() + self.stars.iter().map(Vec::len).sum::<usize>()
    }

    /// Out-degrees of the interior vertices; the arities of the polyvectors
    /// the graph accepts.
    pub fn arities(&self) -> Vec<usize> {
        self.stars.iter().map(Vec::len).collect()
    }

    pub fn in_degree(&self, v: Vertex) -> usize {
        self.edges().iter().filter(|e| e.target == v).count()
    }

    /// Disk edges `c -> b1` carry an identically zero angle.
    pub fn has_constant_angle_edge(&self) -> bool {
        self.flavor == Flavor::Disk && self.m >= 1 && self.marked.contains(&Vertex::Boundary(0))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = vec![];
        let mut push = |rule: &'static str, detail: String| out.push(Violation { rule, detail });
        if self.stars.len() != self.n {
            push("vertex set", format!("{} stars for n = {}", self.stars.len(), self.n));
        }
        let expected = self.flavor.edge_count(self.n, self.m);
        if expected < 0 {
            push("vertex set", format!("edge count law gives {expected} for n = {}, m = {}", self.n, self.m));
        }
        if self.flavor == Flavor::Halfplane && !self.marked.is_empty() {
            push("edges start at first-type vertices", "half-plane graph with edges from c".into());
        }
        for e in self.edges() {
            let in_range = match e.target {
                Vertex::Interior(i) => i < self.n,
                Vertex::Boundary(j) => j < self.m,
                Vertex::Marked => true,
            };
            if !in_range {
                push("vertex set", format!("target {} out of range", e.target.name()));
            }
            if e.source == e.target {
                push("no loops", format!("edge ({0},{0})", e.source.name()));
            }
            if e.target == Vertex::Marked {
                let rule = if self.flavor == Flavor::Disk { "1 not an end-point" } else { "vertex set" };
                push(rule, format!("edge ({},c)", e.source.name()));
            }
        }
        let mut sources: Vec<(Vertex, &Vec<Vertex>)> = vec![(Vertex::Marked, &self.marked)];
        sources.extend(self.stars.iter().enumerate().map(|(i, s)| (Vertex::Interior(i), s)));
        for (src, s) in sources {
            for a in 0..s.len() {
                if s[..a].contains(&s[a]) {
                    push("zero-weight parallel edge", format!("repeated edge ({},{})", src.name(), s[a].name()));
                }
            }
        }
        if expected >= 0 && self.edge_count() as i64 != expected {
            push("edge count", format!("{} edges, grading requires {expected}", self.edge_count()));
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// Default bound on the raw search space of [`enumerate`].
pub const DEFAULT_ENUMERATION_BOUND: u128 = 5_000_000;

fn falling(a: usize, k: usize) -> u128 {
    if k > a {
        return 0;
    }
    (0..k).map(|i| (a - i) as u128).product()
}

/// Number of admissible graphs, by counting ordered injective stars over
/// all splittings of the edge count among the sources.
pub fn count_graphs(flavor: Flavor, n: usize, m: usize) -> u128 {
    let e = flavor.edge_count(n, m);
    if e < 0 {
        return 0;
    }
    let mut choices = vec![n.saturating_sub(1) + m; n];
    if flavor == Flavor::Disk {
        choices.insert(0, n + m);
    }
    // ways[r] = number of ways to place r edges on the sources seen so far
    let mut ways = vec![0u128; e as usize + 1];
    ways[0] = 1;
    for &c in &choices {
        let mut next = vec![0u128; ways.len()];
        for (r, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for k in 0..=c.min(ways.len() - 1 - r) {
                next[r + k] += w * falling(c, k);
            }
        }
        ways = next;
    }
    ways[e as usize]
}

fn ordered_stars(targets: &[Vertex], k: usize) -> Vec<Vec<Vertex>> {
    let mut out = vec![];
    let mut cur = vec![];
    fn rec(targets: &[Vertex], k: usize, cur: &mut Vec<Vertex>, out: &mut Vec<Vec<Vertex>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for &t in targets {
            if !cur.contains(&t) {
                cur.push(t);
                rec(targets, k, cur, out);
                cur.pop();
            }
        }
    }
    rec(targets, k, &mut cur, &mut out);
    out
}

/// All admissible graphs with the flavor's edge count, without parallel
/// edges, in lexicographic order of the star lists (center first).
pub fn enumerate(flavor: Flavor, n: usize, m: usize) -> Result<Vec<AdmissibleGraph>> {
    enumerate_bounded(flavor, n, m, DEFAULT_ENUMERATION_BOUND)
}

pub fn enumerate_bounded(flavor: Flavor, n: usize, m: usize, bound: u128) -> Result<Vec<AdmissibleGraph>> {
    let e = flavor.edge_count(n, m);
    if e < 0 {
        return Err(Error::InvalidGraph(format!("no edge count for {} n = {n}, m = {m}", flavor.name())));
    }
    let total = count_graphs(flavor, n, m);
    if total > bound {
        return Err(Error::Resource(format!("{total} graphs exceed the enumeration bound {bound}")));
    }
    let boundary: Vec<Vertex> = (0..m).map(Vertex::Boundary).collect();
    let mut sources: Vec<Vec<Vertex>> = vec![];
    if flavor == Flavor::Disk {
        let mut t: Vec<Vertex> = (0..n).map(Vertex::Interior).collect();
        t.extend(&boundary);
        sources.push(t);
    }
    for i in 0..n {
        let mut t: Vec<Vertex> = (0..n).filter(|&j| j != i).map(Vertex::Interior).collect();
        t.extend(&boundary);
        sources.push(t);
    }
    // all stars of every size per source, sorted so the output is lexicographic
    let options: Vec<Vec<Vec<Vertex>>> = sources
        .iter()
        .map(|t| {
            let mut all: Vec<Vec<Vertex>> = (0..=t.len().min(e as usize)).flat_map(|k| ordered_stars(t, k)).collect();
            all.sort();
            all
        })
        .collect();
    let mut out = Vec::with_capacity(total as usize);
    let mut pick: Vec<Vec<Vertex>> = vec![];
    fn rec(
        options: &[Vec<Vec<Vertex>>],
        left: usize,
        pick: &mut Vec<Vec<Vertex>>,
        emit: &mut dyn FnMut(&[Vec<Vertex>]),
    ) {
        let idx = pick.len();
        if idx == options.len() {
            if left == 0 {
                emit(pick);
            }
            return;
        }
        let capacity: usize = options[idx + 1..].iter().map(|o| o.last().map_or(0, Vec::len)).sum();
        for s in &options[idx] {
            if s.len() > left || left - s.len() > capacity {
                continue;
            }
            pick.push(s.clone());
            rec(options, left - s.len(), pick, emit);
            pick.pop();
        }
    }
    let mut emit = |p: &[Vec<Vertex>]| {
        let (marked, stars) = if flavor == Flavor::Disk { (p[0].clone(), p[1..].to_vec()) } else { (vec![], p.to_vec()) };
        out.push(AdmissibleGraph { flavor, n, m, marked, stars });
    };
    rec(&options, e as usize, &mut pick, &mut emit);
    Ok(out)
}

/// Sign of reordering edge blocks of sizes `sizes` by the permutation
/// `perm` (block `i` moves to position `perm[i]`).
fn block_sign(perm: &[usize], sizes: &[usize]) -> i32 {
    let mut parity = 0usize;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                parity += sizes[i] * sizes[j];
            }
        }
    }
    if parity % 2 == 0 {
        1
    } else {
        -1
    }
}

impl AdmissibleGraph {
    /// Renames interior vertex `i` to `perm[i]`. Returns the relabeled graph
    /// and the sign relating the two ordered edge forms.
    pub fn relabel(&self, perm: &[usize]) -> (AdmissibleGraph, i32) {
        let map = |v: Vertex| match v {
            Vertex::Interior(i) => Vertex::Interior(perm[i]),
            v => v,
        };
        let mut stars = vec![vec![]; self.n];
        for (i, s) in self.stars.iter().enumerate() {
            stars[perm[i]] = s.iter().map(|&v| map(v)).collect();
        }
        let marked = self.marked.iter().map(|&v| map(v)).collect();
        let g = AdmissibleGraph { flavor: self.flavor, n: self.n, m: self.m, marked, stars };
        (g, block_sign(perm, &self.arities()))
    }

    /// Smallest relabeling of the interior vertices, with the sign `s` such
    /// that `W(self) = s * W(canonical)`. The sign is 0 when the graph has an
    /// automorphism that reverses the edge form, which forces `W = 0`.
    pub fn canonical_form(&self) -> (AdmissibleGraph, i32) {
        let mut best: Option<(AdmissibleGraph, i32)> = None;
        for perm in crate::hochschild::permutations(self.n) {
            let (g, s) = self.relabel(&perm);
            match &mut best {
                Some((b, bs)) if g == *b => {
                    if *bs != s {
                        *bs = 0;
                    }
                }
                Some((b, _)) if g > *b => {}
                _ => best = Some((g, s)),
            }
        }
        best.expect("at least the identity permutation")
    }

    /// Each star (center included) sorted, with the sign of the edge
    /// permutation.
    pub fn sorted_stars(&self) -> (AdmissibleGraph, i32) {
        let mut sign = 1;
        let mut sort = |s: &[Vertex]| {
            let mut v = s.to_vec();
            for i in 1..v.len() {
                let mut j = i;
                while j > 0 && v[j - 1] > v[j] {
                    v.swap(j - 1, j);
                    sign = -sign;
                    j -= 1;
                }
            }
            v
        };
        let marked = sort(&self.marked);
        let stars = self.stars.iter().map(|s| sort(s)).collect();
        (AdmissibleGraph { flavor: self.flavor, n: self.n, m: self.m, marked, stars }, sign)
    }

    /// Smallest graph reachable by relabeling interior vertices and
    /// reordering edges within stars, with `W(self) = s * W(class)`; `s = 0`
    /// when an odd symmetry forces `W = 0`.
    pub fn weight_class(&self) -> (AdmissibleGraph, i32) {
        let mut best: Option<(AdmissibleGraph, i32)> = None;
        for perm in crate::hochschild::permutations(self.n) {
            let (g, s) = self.relabel(&perm);
            let (g, t) = g.sorted_stars();
            let s = s * t;
            match &mut best {
                Some((b, bs)) if g == *b => {
                    if *bs != s {
                        *bs = 0;
                    }
                }
                Some((b, _)) if g > *b => {}
                _ => best = Some((g, s)),
            }
        }
        best.expect("at least the identity permutation")
    }

    fn key_string(&self) -> String {
        let star = |s: &[Vertex]| s.iter().map(|v| v.name()).collect::<Vec<_>>().join(",");
        let stars: Vec<String> = self.stars.iter().map(|s| star(s)).collect();
        format!("{}|{}|{}|c:{}|{}", self.flavor.name(), self.n, self.m, star(&self.marked), stars.join("|"))
    }

    /// SHA-256 of the canonical form; equal iff the graphs agree up to a
    /// relabeling of the interior vertices.
    pub fn canonical_hash(&self) -> Result<String> {
        let v = self.validate();
        if !v.is_empty() {
            return Err(Error::InvalidGraph(v[0].to_string()));
        }
        Ok(hex::encode(Sha256::digest(self.canonical_form().0.key_string().as_bytes())))
    }

    /// Reflection of the boundary order: `b_j -> b_{m+1-j}` in the half-plane,
    /// `b_1` fixed and `b_j -> b_{m+2-j}` on the disk.
    pub fn mirror(&self) -> AdmissibleGraph {
        let m = self.m;
        let map = |v: Vertex| match (v, self.flavor) {
            (Vertex::Boundary(j), Flavor::Halfplane) => Vertex::Boundary(m - 1 - j),
            (Vertex::Boundary(j), Flavor::Disk) if j > 0 => Vertex::Boundary(m - j),
            (v, _) => v,
        };
        AdmissibleGraph {
            flavor: self.flavor,
            n: self.n,
            m,
            marked: self.marked.iter().map(|&v| map(v)).collect(),
            stars: self.stars.iter().map(|s| s.iter().map(|&v| map(v)).collect()).collect(),
        }
    }
}

/// The disk wheel with `k` spokes: vertex `i` points to `i+1 mod k` along
/// the rim and to `b1`; no edges leave the center.
pub fn wheel(k: usize) -> Result<AdmissibleGraph> {
    if k < 2 {
        return Err(Error::InvalidGraph(format!("a wheel with {k} spoke(s) needs a loop")));
    }
    let stars = (0..k).map(|i| vec![Vertex::Interior((i + 1) % k), Vertex::Boundary(0)]).collect();
    AdmissibleGraph::new(Flavor::Disk, k, 1, vec![], stars)
}

/// Whether `g` is a single wheel: every interior vertex has one rim edge
/// and one edge to `b1`, and the rim edges form one cycle through all of them.
pub fn is_wheel(g: &AdmissibleGraph) -> bool {
    if g.flavor != Flavor::Disk || g.m != 1 || !g.marked.is_empty() || g.n < 2 {
        return false;
    }
    let mut next = vec![usize::MAX; g.n];
    for (i, s) in g.stars.iter().enumerate() {
        if s.len() != 2 {
            return false;
        }
        let rims: Vec<usize> = s.iter().filter_map(|v| if let Vertex::Interior(j) = v { Some(*j) } else { None }).collect();
        if rims.len() != 1 || !s.contains(&Vertex::Boundary(0)) {
            return false;
        }
        next[i] = rims[0];
    }
    let (mut v, mut steps) = (0, 0);
    loop {
        v = next[v];
        steps += 1;
        if v == 0 || steps > g.n {
            break;
        }
    }
    v == 0 && steps == g.n
}

impl AdmissibleGraph {
    pub fn to_json(&self) -> Value {
        let mut stars = Map::new();
        if self.flavor == Flavor::Disk && !self.marked.is_empty() {
            stars.insert("c".into(), Value::Array(self.marked.iter().map(|v| v.to_json()).collect()));
        }
        for (i, s) in self.stars.iter().enumerate() {
            stars.insert((i + 1).to_string(), Value::Array(s.iter().map(|v| v.to_json()).collect()));
        }
        json!({"flavor": self.flavor.name(), "n": self.n, "m": self.m, "stars": stars})
    }

    /// Reads the graph JSON format and validates the result.
    pub fn from_json(v: &Value) -> Result<AdmissibleGraph> {
        let bad = |msg: &str| Error::InvalidGraph(msg.to_string());
        let flavor = Flavor::parse(v["flavor"].as_str().ok_or_else(|| bad("missing flavor"))?)?;
        let n = v["n"].as_u64().ok_or_else(|| bad("missing n"))? as usize;
        let m = v["m"].as_u64().ok_or_else(|| bad("missing m"))? as usize;
        let mut stars = vec![vec![]; n];
        let mut marked = vec![];
        if let Some(obj) = v.get("stars") {
            let obj = obj.as_object().ok_or_else(|| bad("stars must be an object"))?;
            for (k, list) in obj {
                let src = Vertex::from_name(k).ok_or_else(|| bad(&format!("bad source {k:?}")))?;
                let targets = list
                    .as_array()
                    .ok_or_else(|| bad("star must be a list"))?
                    .iter()
                    .map(Vertex::from_json)
                    .collect::<Result<Vec<_>>>()?;
                match src {
                    Vertex::Marked => marked = targets,
                    Vertex::Interior(i) if i < n => stars[i] = targets,
                    _ => return Err(bad(&format!("source {k:?} is not a first-type vertex or c"))),
                }
            }
        }
        AdmissibleGraph::new(flavor, n, m, marked, stars)
    }
}

impl fmt::Display for AdmissibleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}
