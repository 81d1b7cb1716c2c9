//! Finite-dimensional Lie algebras, the universal enveloping algebra in PBW
//! normal order, and the Duflo isomorphism.
//!
//! Elements of `S(g)` are polynomials in the coordinates `x_i` (the basis
//! `e_i` read as linear functions on `g*`). Elements of `U(g)` are stored as
//! `Poly` too: the exponent `(a_0,…,a_{d-1})` stands for the ordered PBW
//! monomial `e_0^{a_0}⋯e_{d-1}^{a_{d-1}}`.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, ToPrimitive, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::polyvector::{poisson_bracket, PolyVectorField};
use crate::span::SpanBasis;
use crate::symbolic::{factorial, int, monomials, Poly, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebraData {
    dim: usize,
    /// `c[i][j][k] = c_{ij}^k`, `[e_i, e_j] = Σ_k c_{ij}^k e_k`.
    c: Vec<Vec<Vec<Rational>>>,
}

impl LieAlgebraData {
    /// Validates antisymmetry and the Jacobi identity.
    pub fn new(dim: usize, c: Vec<Vec<Vec<Rational>>>) -> Result<Self> {
        if c.len() != dim || c.iter().any(|r| r.len() != dim || r.iter().any(|v| v.len() != dim)) {
            return Err(Error::InvalidLieAlgebra(format!("structure constants are not {dim}×{dim}×{dim}")));
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    if c[i][j][k] != -c[j][i][k].clone() {
                        return Err(Error::InvalidLieAlgebra(format!("c_{i}{j}^{k} is not antisymmetric")));
                    }
                }
            }
        }
        let g = LieAlgebraData { dim, c };
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    // [[e_i,e_j],e_k] + cyclic
                    for l in 0..dim {
                        let mut s = Rational::zero();
                        for (a, b, cc) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for m in 0..dim {
                                s += &g.c[a][b][m] * &g.c[m][cc][l];
                            }
                        }
                        if !s.is_zero() {
                            return Err(Error::InvalidLieAlgebra(format!("Jacobi fails on e{i}, e{j}, e{k}")));
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    fn from_brackets(dim: usize, brackets: &[(usize, usize, usize, i64)]) -> Self {
        let mut c = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        for &(i, j, k, v) in brackets {
            c[i][j][k] = int(v);
            c[j][i][k] = int(-v);
        }
        LieAlgebraData::new(dim, c).expect("preset is a Lie algebra")
    }

    /// `[e0,e1] = e2`, `[e1,e2] = e0`, `[e2,e0] = e1`.
    pub fn so3() -> Self {
        Self::from_brackets(3, &[(0, 1, 2, 1), (1, 2, 0, 1), (2, 0, 1, 1)])
    }

    /// `[e0,e1] = e2`.
    pub fn heisenberg3() -> Self {
        Self::from_brackets(3, &[(0, 1, 2, 1)])
    }

    /// The 2d non-abelian algebra, `[e0,e1] = e1`.
    pub fn affine2() -> Self {
        Self::from_brackets(2, &[(0, 1, 1, 1)])
    }

    pub fn abelian(dim: usize) -> Self {
        Self::from_brackets(dim, &[])
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "so3" => Ok(Self::so3()),
            "heisenberg3" => Ok(Self::heisenberg3()),
            "affine2" => Ok(Self::affine2()),
            _ => Err(Error::InvalidArgument(format!("unknown Lie algebra preset {name:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.c[i][j][k]
    }

    /// `{"dim":3,"c":{"01":{"2":1},…}}`; pair keys are two digits or `"i,j"`,
    /// values are integers or `"p/q"` strings.
    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::Parse { pos: 0, msg: format!("Lie algebra JSON: {m}") };
        let dim = v.get("dim").and_then(Value::as_u64).ok_or_else(|| bad("missing dim"))? as usize;
        let mut c = vec![vec![vec![Rational::zero(); dim]; dim]; dim];
        let table = v.get("c").and_then(Value::as_object).ok_or_else(|| bad("missing c"))?;
        let index = |s: &str| -> Result<usize> {
            let i: usize = s.trim().parse().map_err(|_| bad(&format!("bad index {s:?}")))?;
            if i >= dim {
                return Err(bad(&format!("index {i} out of range")));
            }
            Ok(i)
        };
        for (pair, images) in table {
            let (i, j) = match pair.split_once(',') {
                Some((a, b)) => (index(a)?, index(b)?),
                None if pair.len() == 2 => (index(&pair[..1])?, index(&pair[1..])?),
                None => return Err(bad(&format!("bad pair key {pair:?}"))),
            };
            let images = images.as_object().ok_or_else(|| bad("bracket image must be an object"))?;
            for (k, val) in images {
                let k = index(k)?;
                let r = parse_rational(val).ok_or_else(|| bad(&format!("bad coefficient {val}")))?;
                if !c[i][j][k].is_zero() && c[i][j][k] != r {
                    return Err(Error::InvalidLieAlgebra(format!("conflicting entries for [{i},{j}]")));
                }
                c[i][j][k] = r.clone();
                c[j][i][k] = -r;
            }
        }
        LieAlgebraData::new(dim, c)
    }

    pub fn to_json(&self) -> Value {
        let mut table = Map::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let mut images = Map::new();
                for k in 0..self.dim {
                    let r = &self.c[i][j][k];
                    if !r.is_zero() {
                        let v = match r.to_integer().to_i64() {
                            Some(i) if r.is_integer() => Value::from(i),
                            _ => Value::from(r.to_string()),
                        };
                        images.insert(k.to_string(), v);
                    }
                }
                if !images.is_empty() {
                    let key = if self.dim <= 10 { format!("{i}{j}") } else { format!("{i},{j}") };
                    table.insert(key, Value::Object(images));
                }
            }
        }
        serde_json::json!({ "dim": self.dim, "c": table })
    }

    /// `π = Σ_{i<j} c_{ij}^k x_k ∂_i∧∂_j`, so `{x_i, x_j} = Σ_k c_{ij}^k x_k`.
    pub fn linear_poisson(&self) -> PolyVectorField {
        let d = self.dim;
        let mut terms = vec![];
        for i in 0..d {
            for j in i + 1..d {
                let mut coeff = Poly::zero(d);
                for k in 0..d {
                    coeff.add_scaled(&Poly::var(d, k), &self.c[i][j][k]);
                }
                if !coeff.is_zero() {
                    terms.push((vec![i, j], coeff));
                }
            }
        }
        PolyVectorField::from_terms(d, 2, terms)
    }

    /// Matrix of `ad e_i`: `(ad e_i)[k][j] = c_{ij}^k`.
    pub fn ad(&self, i: usize) -> Vec<Vec<Rational>> {
        (0..self.dim).map(|k| (0..self.dim).map(|j| self.c[i][j][k].clone()).collect()).collect()
    }

    /// Coadjoint action `e_i · a = {x_i, a}` on `S(g)`.
    pub fn coadjoint(&self, i: usize, a: &Poly) -> Poly {
        poisson_bracket(&self.linear_poisson(), &Poly::var(self.dim, i), a)
    }

    /// `a` is invariant when every `{x_i, a}` vanishes.
    pub fn is_invariant(&self, a: &Poly) -> bool {
        (0..self.dim).all(|i| self.coadjoint(i, a).is_zero())
    }

    /// A basis of the homogeneous invariants of degree `degree`, as the
    /// kernel of the coadjoint action on monomials.
    pub fn invariants(&self, degree: u32) -> Vec<Poly> {
        let monos = monomials(self.dim, degree);
        let mut basis = SpanBasis::new();
        let mut out = vec![];
        for m in &monos {
            let p = Poly::monomial(m.clone(), Rational::one());
            let image = (0..self.dim)
                .flat_map(|i| self.coadjoint(i, &p).terms().map(move |(e, c)| ((i, e.clone()), c.clone())).collect::<Vec<_>>())
                .collect();
            if let Some(rel) = basis.push_relation(image) {
                out.push(Poly::from_terms(self.dim, rel.into_iter().map(|(j, c)| (monos[j].clone(), c))));
            }
        }
        out
    }
}

fn parse_rational(v: &Value) -> Option<Rational> {
    if let Some(i) = v.as_i64() {
        return Some(int(i));
    }
    let s = v.as_str()?.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0).then(|| Rational::new(p.into(), q.into()))
        }
        None => s.parse::<i64>().ok().map(int),
    }
}

fn mat_mul(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).fold(Rational::zero(), |s, k| s + &a[i][k] * &b[k][j])).collect())
        .collect()
}

fn unit_exponent(dim: usize, idx: &[usize]) -> Vec<u32> {
    let mut e = vec![0u32; dim];
    for &i in idx {
        e[i] += 1;
    }
    e
}

/// `Tr_k` as a constant-coefficient operator: the map from derivative
/// multi-indices `∂^α` (`|α| = k`) to `Σ_{ordered i with multiset α} Tr(ad e_{i_1}⋯ad e_{i_k})`.
pub fn tr_symbol(g: &LieAlgebraData, k: usize) -> BTreeMap<Vec<u32>, Rational> {
    let d = g.dim();
    let ads: Vec<_> = (0..d).map(|i| g.ad(i)).collect();
    let mut out: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    if k == 0 {
        out.insert(vec![0; d], int(d as i64));
        return out;
    }
    // products of ad matrices over all ordered index tuples, built level by level
    let mut level: Vec<(Vec<usize>, Vec<Vec<Rational>>)> = (0..d).map(|i| (vec![i], ads[i].clone())).collect();
    for _ in 1..k {
        let mut next = Vec::with_capacity(level.len() * d);
        for (idx, m) in &level {
            for (i, a) in ads.iter().enumerate() {
                let mut id = idx.clone();
                id.push(i);
                next.push((id, mat_mul(m, a)));
            }
        }
        level = next;
    }
    for (idx, m) in level {
        let tr = (0..d).fold(Rational::zero(), |s, i| s + &m[i][i]);
        if !tr.is_zero() {
            *out.entry(unit_exponent(d, &idx)).or_insert_with(Rational::zero) += tr;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// `Tr_k(∂) a`.
pub fn tr_k(g: &LieAlgebraData, k: usize, a: &Poly) -> Poly {
    apply_symbol(&tr_symbol(g, k), a)
}

fn apply_symbol(symbol: &BTreeMap<Vec<u32>, Rational>, a: &Poly) -> Poly {
    let mut out = Poly::zero(a.dim());
    for (alpha, c) in symbol {
        out.add_scaled(&a.derivative(alpha), c);
    }
    out
}

/// Truncated power series with rational coefficients.
fn series_log(s: &[Rational]) -> Vec<Rational> {
    // log(1 + u) = Σ (-1)^{n+1} u^n / n with u = s - 1
    let n = s.len();
    let mut u = s.to_vec();
    u[0] = Rational::zero();
    let mut out = vec![Rational::zero(); n];
    let mut power = u.clone();
    for k in 1..n {
        let sign = if k % 2 == 1 { Rational::one() } else { -Rational::one() };
        for i in 0..n {
            out[i] += &sign * &power[i] / int(k as i64);
        }
        let mut next = vec![Rational::zero(); n];
        for i in 0..n {
            for j in 0..n - i {
                next[i + j] += &power[i] * &u[j];
            }
        }
        power = next;
    }
    out
}

/// `α_{2k}`: `Σ α_{2k} x^{2k} = ½ log((e^{x/2} − e^{−x/2}) / x)`.
pub fn alpha(two_k: usize) -> Result<Rational> {
    if two_k == 0 || two_k % 2 == 1 {
        return Err(Error::InvalidArgument(format!("alpha is indexed by positive even integers, got {two_k}")));
    }
    // sinh(x/2)/(x/2) = Σ (x/2)^{2n} / (2n+1)!
    let n = two_k + 1;
    let mut s = vec![Rational::zero(); n];
    for m in (0..n).step_by(2) {
        s[m] = Rational::one() / (factorial(m + 1) * int(2).pow(m as i32));
    }
    Ok(series_log(&s)[two_k].clone() / int(2))
}

/// `exp(Σ_{k≥1} α_{2k} Tr_{2k}) a`, exact: each `Tr_{2k}` lowers the degree
/// by `2k`, so the series stops.
pub fn phi_strange(g: &LieAlgebraData, a: &Poly) -> Result<Poly> {
    let deg = a.degree().unwrap_or(0) as usize;
    let mut symbol: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
    for two_k in (2..=deg).step_by(2) {
        let al = alpha(two_k)?;
        for (e, c) in tr_symbol(g, two_k) {
            *symbol.entry(e).or_insert_with(Rational::zero) += c * &al;
        }
    }
    symbol.retain(|_, v| !v.is_zero());
    let mut out = a.clone();
    let mut term = a.clone();
    let mut n = 1;
    loop {
        term = apply_symbol(&symbol, &term).scale(&(Rational::one() / int(n)));
        if term.is_zero() {
            break;
        }
        out.add_assign_ref(&term);
        n += 1;
    }
    Ok(out)
}

/// Normal-ordering engine for `U(g)` with a memo of straightened words.
pub struct Enveloping<'a> {
    g: &'a LieAlgebraData,
    memo: HashMap<Vec<usize>, BTreeMap<Vec<u32>, Rational>>,
}

impl<'a> Enveloping<'a> {
    pub fn new(g: &'a LieAlgebraData) -> Self {
        Enveloping { g, memo: HashMap::new() }
    }

    /// The word `e_{w_1}⋯e_{w_n}` in PBW normal order, by repeatedly
    /// replacing `e_b e_a` (`b > a`) with `e_a e_b + [e_b, e_a]`.
    pub fn normal_order(&mut self, word: &[usize]) -> BTreeMap<Vec<u32>, Rational> {
        if let Some(r) = self.memo.get(word) {
            return r.clone();
        }
        let d = self.g.dim();
        let out = match (0..word.len().saturating_sub(1)).find(|&i| word[i] > word[i + 1]) {
            None => BTreeMap::from([(unit_exponent(d, word), Rational::one())]),
            Some(i) => {
                let (b, a) = (word[i], word[i + 1]);
                let mut swapped = word.to_vec();
                swapped.swap(i, i + 1);
                let mut acc = self.normal_order(&swapped);
                for k in 0..d {
                    let c = self.g.structure_constant(b, a, k).clone();
                    if c.is_zero() {
                        continue;
                    }
                    let mut shorter = word[..i].to_vec();
                    shorter.push(k);
                    shorter.extend_from_slice(&word[i + 2..]);
                    for (e, v) in self.normal_order(&shorter) {
                        *acc.entry(e).or_insert_with(Rational::zero) += v * &c;
                    }
                }
                acc.retain(|_, v| !v.is_zero());
                acc
            }
        };
        self.memo.insert(word.to_vec(), out.clone());
        out
    }

    fn word(exp: &[u32]) -> Vec<usize> {
        exp.iter().enumerate().flat_map(|(i, &n)| std::iter::repeat(i).take(n as usize)).collect()
    }

    /// Product in `U(g)` of two PBW-ordered elements.
    pub fn multiply(&mut self, a: &Poly, b: &Poly) -> Result<Poly> {
        let d = self.g.dim();
        if a.dim() != d || b.dim() != d {
            return Err(Error::DimensionMismatch(a.dim().max(b.dim()), d));
        }
        let mut out = Poly::zero(d);
        for (ea, ca) in a.terms() {
            for (eb, cb) in b.terms() {
                let mut w = Self::word(ea);
                w.extend(Self::word(eb));
                let coeff = ca * cb;
                for (e, v) in self.normal_order(&w) {
                    out.add_term(e, v * &coeff);
                }
            }
        }
        Ok(out)
    }

    /// `φ_PBW`: symmetrization `g_1⋯g_k ↦ (1/k!) Σ_σ g_σ(1)⋯g_σ(k)`.
    pub fn phi_pbw(&mut self, a: &Poly) -> Result<Poly> {
        let d = self.g.dim();
        if a.dim() != d {
            return Err(Error::DimensionMismatch(a.dim(), d));
        }
        let mut out = Poly::zero(d);
        for (e, c) in a.terms() {
            let k: u32 = e.iter().sum();
            // each distinct arrangement of the multiset occurs Π e_i! times
            let mult = e.iter().fold(Rational::one(), |s, &n| s * factorial(n as usize));
            let weight = c * mult / factorial(k as usize);
            let mut arrangements = vec![];
            distinct_arrangements(&mut e.clone(), &mut vec![], k as usize, &mut arrangements);
            for w in arrangements {
                for (ne, v) in self.normal_order(&w) {
                    out.add_term(ne, v * &weight);
                }
            }
        }
        Ok(out)
    }

    /// Duflo map `φ_D = φ_PBW ∘ φ_strange`.
    pub fn phi_d(&mut self, a: &Poly) -> Result<Poly> {
        let s = phi_strange(self.g, a)?;
        self.phi_pbw(&s)
    }
}

fn distinct_arrangements(counts: &mut Vec<u32>, prefix: &mut Vec<usize>, left: usize, out: &mut Vec<Vec<usize>>) {
    if left == 0 {
        out.push(prefix.clone());
        return;
    }
    for i in 0..counts.len() {
        if counts[i] > 0 {
            counts[i] -= 1;
            prefix.push(i);
            distinct_arrangements(counts, prefix, left - 1, out);
            prefix.pop();
            counts[i] += 1;
        }
    }
}

/// One product checked by [`duflo_multiplicativity`].
#[derive(Clone, Debug, serde::Serialize)]
pub struct DufloCheck {
    pub a: String,
    pub b: String,
    /// `φ_D(ab) − φ_D(a)·φ_D(b)` in PBW normal order.
    pub residual: String,
    pub holds: bool,
}

/// `φ_D(ab) = φ_D(a)·φ_D(b)` for all pairs of basis invariants `a, b` of
/// positive degree with `deg a + deg b ≤ max_degree`.
pub fn duflo_multiplicativity(g: &LieAlgebraData, max_degree: u32) -> Result<Vec<DufloCheck>> {
    let basis: Vec<(u32, Poly)> = (1..max_degree).flat_map(|d| g.invariants(d).into_iter().map(move |p| (d, p))).collect();
    let mut u = Enveloping::new(g);
    let mut out = vec![];
    for (i, (da, a)) in basis.iter().enumerate() {
        for (db, b) in &basis[i..] {
            if da + db > max_degree {
                continue;
            }
            let lhs = u.phi_d(&a.try_mul(b)?)?;
            let rhs = {
                let (x, y) = (u.phi_d(a)?, u.phi_d(b)?);
                u.multiply(&x, &y)?
            };
            let residual = lhs.try_sub(&rhs)?;
            out.push(DufloCheck { a: a.to_string(), b: b.to_string(), holds: residual.is_zero(), residual: residual.to_string() });
        }
    }
    Ok(out)
}
