//! Angle forms on the two configuration spaces and Monte Carlo graph weights.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{AdmissibleGraph, Flavor, Vertex};
use crate::symbolic::{factorial, Rational};

pub const INTEGRAND_VERSION: &str = "angle-jacobian-v1";

fn arg(z: Complex64) -> f64 {
    z.im.atan2(z.re)
}

/// `d arg(w) = Im(dw / w)`.
fn darg(w: Complex64, dw: Complex64) -> f64 {
    (dw / w).im
}

/// Harmonic angle `(1/2i) Log((q-p)(q̄-p) / ((q-p̄)(q̄-p̄)))`, principal branch.
/// The value is defined modulo π and returned in `[0, π)`; only its
/// differential enters the weights.
pub fn harmonic_angle(p: Complex64, q: Complex64) -> Result<f64> {
    if p.im <= 0.0 {
        return Err(Error::Degenerate(format!("source {p} is not in the upper half-plane")));
    }
    if q == p {
        return Err(Error::Degenerate("coincident points".into()));
    }
    let ratio = (q - p) * (q.conj() - p) / ((q - p.conj()) * (q.conj() - p.conj()));
    Ok((ratio.ln().im / 2.0).rem_euclid(PI))
}

/// Hyperbolic angle at `p` from the diameter through `p` (towards the
/// center) to the geodesic towards `q`, counterclockwise, in `[0, 2π)`.
pub fn disk_angle_c1(p: Complex64, q: Complex64) -> Result<f64> {
    if p == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate("source at the center".into()));
    }
    if p.norm() >= 1.0 || q.norm() > 1.0 + 1e-12 || q == p {
        return Err(Error::Degenerate(format!("bad disk points {p}, {q}")));
    }
    // z ↦ (z-p)/(1-p̄z) fixes directions at p and straightens geodesics through it
    let toward_q = (q - p) / (Complex64::new(1.0, 0.0) - p.conj() * q);
    Ok((arg(toward_q) - arg(-p)).rem_euclid(2.0 * PI))
}

/// Angle at the center from the ray to `a1` to the ray to `q`, in `[0, 2π)`.
pub fn disk_angle_c2(q: Complex64, a1: Complex64) -> Result<f64> {
    if q == Complex64::new(0.0, 0.0) {
        return Err(Error::Degenerate("target at the center".into()));
    }
    Ok((arg(q) - arg(a1)).rem_euclid(2.0 * PI))
}

/// Differential of the edge angle given the positions and the tangent
/// vectors `dz/dt_j` of source and target.
fn angle_gradient(
    kind: AngleKind,
    p: Complex64,
    q: Complex64,
    dp: &[Complex64],
    dq: &[Complex64],
    out: &mut [f64],
) {
    let one = Complex64::new(1.0, 0.0);
    for j in 0..out.len() {
        let (dpj, dqj) = (dp[j], dq[j]);
        out[j] = match kind {
            AngleKind::Harmonic => {
                let (pc, qc) = (p.conj(), q.conj());
                let (dpc, dqc) = (dpj.conj(), dqj.conj());
                0.5 * (darg(q - p, dqj - dpj) + darg(qc - p, dqc - dpj)
                    - darg(q - pc, dqj - dpc)
                    - darg(qc - pc, dqc - dpc))
            }
            AngleKind::Geodesic => {
                darg(q - p, dqj - dpj) - darg(one - p.conj() * q, -(dpj.conj() * q + p.conj() * dqj)) - darg(-p, -dpj)
            }
            AngleKind::Central => darg(q, dqj) - darg(p, dpj),
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AngleKind {
    /// Half-plane edge.
    Harmonic,
    /// Disk edge from an interior point.
    Geodesic,
    /// Disk edge from the center; `p` is then the reference point `a1`.
    Central,
}

/// Which coordinates the gauge slice freezes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gauge {
    /// Half-plane, `q1 = 0`, `q2 = 1`.
    TwoBoundary,
    /// Half-plane, `q1 = 0` and `p1 = e^{iα}` on the unit half-circle.
    BoundaryAndCircle,
    /// Half-plane without boundary points, `p1 = i`.
    FirstInterior,
    /// Disk, `q1` at angle 0.
    FirstBoundary,
    /// Disk without boundary points, `arg p1 = 0`.
    FirstInteriorRay,
}

/// A point of the gauge slice together with the tangent vectors `dz/dt_j`
/// of every point along the slice coordinates `t_j`.
#[derive(Clone, Debug)]
pub struct ConfigPoint {
    pub flavor: Flavor,
    pub interior: Vec<Complex64>,
    /// Real coordinates (half-plane) or angles (disk).
    pub boundary: Vec<f64>,
    pub gauge: Gauge,
    dim: usize,
    tangent_interior: Vec<Vec<Complex64>>,
    tangent_boundary: Vec<Vec<Complex64>>,
}

impl ConfigPoint {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn boundary_position(&self, j: usize) -> Complex64 {
        match self.flavor {
            Flavor::Halfplane => Complex64::new(self.boundary[j], 0.0),
            Flavor::Disk => Complex64::from_polar(1.0, self.boundary[j]),
        }
    }

    fn position(&self, v: Vertex) -> Complex64 {
        match v {
            Vertex::Interior(i) => self.interior[i],
            Vertex::Boundary(j) => self.boundary_position(j),
            Vertex::Marked => Complex64::new(0.0, 0.0),
        }
    }

    fn tangent(&self, v: Vertex) -> Vec<Complex64> {
        match v {
            Vertex::Interior(i) => self.tangent_interior[i].clone(),
            Vertex::Boundary(j) => self.tangent_boundary[j].clone(),
            Vertex::Marked => vec![Complex64::new(0.0, 0.0); self.dim],
        }
    }

    /// Slice coordinates in orientation order: the gauge coordinate of `p1`
    /// if any, then `(Re, Im)` of each free interior point, then the free
    /// boundary coordinates.
    pub fn coordinates(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.dim];
        let unit = |v: &Vec<Complex64>| v.iter().position(|z| z.norm() > 0.0);
        for (i, tan) in self.tangent_interior.iter().enumerate() {
            if let Some(j) = unit(tan) {
                match self.gauge {
                    Gauge::BoundaryAndCircle if i == 0 => t[j] = arg(self.interior[0]),
                    Gauge::FirstInteriorRay if i == 0 => t[j] = self.interior[0].re,
                    _ => {
                        t[j] = self.interior[i].re;
                        t[j + 1] = self.interior[i].im;
                    }
                }
            }
        }
        for (b, tan) in self.tangent_boundary.iter().enumerate() {
            if let Some(j) = unit(tan) {
                t[j] = self.boundary[b];
            }
        }
        t
    }

    /// Rebuilds a configuration of the same layout from slice coordinates.
    pub fn with_coordinates(&self, t: &[f64]) -> ConfigPoint {
        let mut c = self.clone();
        let unit = |v: &Vec<Complex64>| v.iter().position(|z| z.norm() > 0.0);
        for i in 0..c.interior.len() {
            if let Some(j) = unit(&self.tangent_interior[i]) {
                match self.gauge {
                    Gauge::BoundaryAndCircle if i == 0 => {
                        c.interior[0] = Complex64::from_polar(1.0, t[j]);
                        c.tangent_interior[0][j] = Complex64::i() * c.interior[0];
                    }
                    Gauge::FirstInteriorRay if i == 0 => c.interior[0] = Complex64::new(t[j], 0.0),
                    _ => c.interior[i] = Complex64::new(t[j], t[j + 1]),
                }
            }
        }
        for b in 0..c.boundary.len() {
            if let Some(j) = unit(&self.tangent_boundary[b]) {
                c.boundary[b] = t[j];
                if c.flavor == Flavor::Disk {
                    c.tangent_boundary[b][j] = Complex64::i() * c.boundary_position(b);
                }
            }
        }
        c
    }
}

/// Sampling strategy for the free points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampler {
    /// Cayley-mapped uniform disk in the half-plane, uniform on the disk.
    Uniform,
    /// Equal mixture of the uniform density and heavy-tailed densities
    /// centered at every previously placed point (importance sampling of the
    /// `1/r` collision singularities).
    Anchored,
}

const ANCHOR_SCALE_HALFPLANE: f64 = 1.0;
const ANCHOR_SCALE_DISK: f64 = 0.3;

fn anchor_plane_density(z: Complex64, a: Complex64, s: f64) -> f64 {
    let r = (z - a).norm();
    if r == 0.0 {
        return f64::INFINITY;
    }
    s / ((s + r) * (s + r)) / (2.0 * PI * r)
}

/// Density of the anchored component after folding into the domain.
fn anchor_density(flavor: Flavor, z: Complex64, a: Complex64) -> f64 {
    match flavor {
        Flavor::Halfplane => {
            let s = ANCHOR_SCALE_HALFPLANE;
            anchor_plane_density(z, a, s) + anchor_plane_density(z.conj(), a, s)
        }
        Flavor::Disk => {
            let s = ANCHOR_SCALE_DISK;
            let inv = Complex64::new(1.0, 0.0) / z.conj();
            anchor_plane_density(z, a, s) + anchor_plane_density(inv, a, s) / z.norm_sqr().powi(2)
        }
    }
}

fn base_density(flavor: Flavor, z: Complex64) -> f64 {
    match flavor {
        Flavor::Halfplane => 4.0 / (PI * (z + Complex64::i()).norm_sqr().powi(2)),
        Flavor::Disk => 1.0 / PI,
    }
}

fn sample_base<R: Rng + ?Sized>(flavor: Flavor, rng: &mut R) -> Complex64 {
    let w = Complex64::from_polar(rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
    match flavor {
        Flavor::Halfplane => Complex64::i() * (Complex64::new(1.0, 0.0) + w) / (Complex64::new(1.0, 0.0) - w),
        Flavor::Disk => w,
    }
}

fn sample_anchor<R: Rng + ?Sized>(flavor: Flavor, a: Complex64, rng: &mut R) -> Complex64 {
    let s = match flavor {
        Flavor::Halfplane => ANCHOR_SCALE_HALFPLANE,
        Flavor::Disk => ANCHOR_SCALE_DISK,
    };
    let u: f64 = rng.gen();
    let r = s * u / (1.0 - u);
    let z = a + Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>());
    match flavor {
        Flavor::Halfplane if z.im < 0.0 => z.conj(),
        Flavor::Disk if z.norm() > 1.0 => Complex64::new(1.0, 0.0) / z.conj(),
        _ => z,
    }
}

fn in_domain(flavor: Flavor, z: Complex64) -> bool {
    z.re.is_finite()
        && z.im.is_finite()
        && match flavor {
            Flavor::Halfplane => z.im > 0.0,
            Flavor::Disk => z.norm() < 1.0 && z.norm() > 0.0,
        }
}

fn factorial_f64(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Draws a gauge-fixed configuration in the `+` component with the uniform
/// sampler; returns it with the sampler density at that point.
pub fn sample_config<R: Rng + ?Sized>(flavor: Flavor, n: usize, m: usize, rng: &mut R) -> Result<(ConfigPoint, f64)> {
    sample_config_with(Sampler::Uniform, flavor, n, m, rng)
}

pub fn sample_config_with<R: Rng + ?Sized>(
    sampler: Sampler,
    flavor: Flavor,
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<(ConfigPoint, f64)> {
    let dim = flavor.edge_count(n, m);
    if dim < 1 {
        return Err(Error::Degenerate(format!("{} configuration space with n = {n}, m = {m} has dimension {dim}", flavor.name())));
    }
    let dim = dim as usize;
    let zero = Complex64::new(0.0, 0.0);
    let gauge = match (flavor, m) {
        (Flavor::Halfplane, 0) => Gauge::FirstInterior,
        (Flavor::Halfplane, 1) => Gauge::BoundaryAndCircle,
        (Flavor::Halfplane, _) => Gauge::TwoBoundary,
        (Flavor::Disk, 0) => Gauge::FirstInteriorRay,
        (Flavor::Disk, _) => Gauge::FirstBoundary,
    };
    let mut c = ConfigPoint {
        flavor,
        interior: vec![zero; n],
        boundary: vec![0.0; m],
        gauge,
        dim,
        tangent_interior: vec![vec![zero; dim]; n],
        tangent_boundary: vec![vec![zero; dim]; m],
    };
    let mut density = 1.0;
    let mut next = 0;
    let mut first_free = 0;
    match gauge {
        Gauge::BoundaryAndCircle => {
            let alpha = PI * rng.gen::<f64>();
            c.interior[0] = Complex64::from_polar(1.0, alpha);
            c.tangent_interior[0][0] = Complex64::i() * c.interior[0];
            density /= PI;
            next = 1;
            first_free = 1;
        }
        Gauge::FirstInterior => {
            c.interior[0] = Complex64::i();
            first_free = 1;
        }
        Gauge::FirstInteriorRay => {
            c.interior[0] = Complex64::new(rng.gen::<f64>(), 0.0);
            c.tangent_interior[0][0] = Complex64::new(1.0, 0.0);
            next = 1;
            first_free = 1;
        }
        _ => {}
    }
    let boundary_start = next + 2 * (n - first_free);
    match flavor {
        Flavor::Halfplane => {
            if m >= 2 {
                c.boundary[1] = 1.0;
                let mut qs: Vec<f64> = (2..m).map(|_| 1.0 / (1.0 - rng.gen::<f64>())).collect();
                qs.sort_by(f64::total_cmp);
                density *= factorial_f64(m - 2) * qs.iter().map(|q| 1.0 / (q * q)).product::<f64>();
                for (k, q) in qs.into_iter().enumerate() {
                    c.boundary[k + 2] = q;
                    c.tangent_boundary[k + 2][boundary_start + k] = Complex64::new(1.0, 0.0);
                }
            }
        }
        Flavor::Disk => {
            if m >= 2 {
                let mut ts: Vec<f64> = (1..m).map(|_| 2.0 * PI * rng.gen::<f64>()).collect();
                ts.sort_by(f64::total_cmp);
                density *= factorial_f64(m - 1) / (2.0 * PI).powi(m as i32 - 1);
                for (k, t) in ts.into_iter().enumerate() {
                    c.boundary[k + 1] = t;
                    c.tangent_boundary[k + 1][boundary_start + k] = Complex64::i() * Complex64::from_polar(1.0, t);
                }
            }
        }
    }
    let mut anchors: Vec<Complex64> = (0..m).map(|j| c.boundary_position(j)).collect();
    if flavor == Flavor::Disk {
        anchors.push(zero);
    }
    anchors.extend(c.interior[..first_free].iter().copied());
    for i in first_free..n {
        let components = match sampler {
            Sampler::Uniform => 1,
            Sampler::Anchored => anchors.len() + 1,
        };
        let z = loop {
            let pick = rng.gen_range(0..components);
            let z = if pick == 0 { sample_base(flavor, rng) } else { sample_anchor(flavor, anchors[pick - 1], rng) };
            if in_domain(flavor, z) && anchors.iter().all(|a| *a != z) {
                break z;
            }
        };
        let mut dens = base_density(flavor, z);
        if sampler == Sampler::Anchored {
            dens += anchors.iter().map(|&a| anchor_density(flavor, z, a)).sum::<f64>();
            dens /= components as f64;
        }
        density *= dens;
        c.interior[i] = z;
        c.tangent_interior[i][next] = Complex64::new(1.0, 0.0);
        c.tangent_interior[i][next + 1] = Complex64::i();
        next += 2;
        anchors.push(z);
    }
    Ok((c, density))
}

fn edge_kind(g: &AdmissibleGraph, source: Vertex) -> AngleKind {
    match (g.flavor, source) {
        (Flavor::Halfplane, _) => AngleKind::Harmonic,
        (Flavor::Disk, Vertex::Marked) => AngleKind::Central,
        (Flavor::Disk, _) => AngleKind::Geodesic,
    }
}

/// The Jacobian matrix `[∂φ_e/∂t_j]`, edges in weight-form order.
pub fn angle_jacobian(g: &AdmissibleGraph, c: &ConfigPoint) -> Result<DMatrix<f64>> {
    if g.flavor != c.flavor || g.n != c.interior.len() || g.m != c.boundary.len() {
        return Err(Error::InvalidGraph("graph and configuration do not match".into()));
    }
    let edges = g.edges();
    if edges.len() != c.dim {
        return Err(Error::InvalidGraph(format!("{} edges on a {}-dimensional slice", edges.len(), c.dim)));
    }
    // the center measures angles from a1, or from the ray through p1 when m = 0
    let reference = if c.boundary.is_empty() { Vertex::Interior(0) } else { Vertex::Boundary(0) };
    let mut jac = DMatrix::zeros(c.dim, c.dim);
    let mut row = vec![0.0; c.dim];
    for (r, e) in edges.iter().enumerate() {
        let kind = edge_kind(g, e.source);
        let from = if kind == AngleKind::Central { reference } else { e.source };
        angle_gradient(kind, c.position(from), c.position(e.target), &c.tangent(from), &c.tangent(e.target), &mut row);
        for (j, v) in row.iter().enumerate() {
            jac[(r, j)] = *v;
        }
    }
    Ok(jac)
}

/// Pull-back of `∧_e dφ_e` to the slice, as a density in the slice
/// coordinates (raw: no prefactors, no orientation).
pub fn integrand(g: &AdmissibleGraph, c: &ConfigPoint) -> Result<f64> {
    Ok(determinant(angle_jacobian(g, c)?))
}

/// Gaussian elimination with partial pivoting. Multipliers are formed by
/// division so that repeated rows cancel exactly.
fn determinant(mut a: DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs())).unwrap();
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in col + 1..n {
            let l = a[(r, col)] / p;
            if l != 0.0 {
                for k in col..n {
                    a[(r, k)] -= l * a[(col, k)];
                }
            }
        }
    }
    det
}

/// Orientation of the slice chart relative to the ordered coordinate list
/// `[gauge coordinate], (x_i, y_i)…, boundary…`.
fn slice_orientation(flavor: Flavor, m: usize) -> f64 {
    match (flavor, m) {
        (Flavor::Disk, 0) => -1.0,
        _ => 1.0,
    }
}

/// Global orientation of the `+` component as `c · σ^n · τ^m`, calibrated
/// per flavor (see the tests).
fn orientation(flavor: Flavor, n: usize, m: usize) -> f64 {
    let (c, sigma, tau): (f64, f64, f64) = match flavor {
        Flavor::Halfplane => (HALFPLANE_ORIENTATION.0, HALFPLANE_ORIENTATION.1, HALFPLANE_ORIENTATION.2),
        Flavor::Disk => (DISK_ORIENTATION.0, DISK_ORIENTATION.1, DISK_ORIENTATION.2),
    };
    c * sigma.powi(n as i32) * tau.powi(m as i32)
}

const HALFPLANE_ORIENTATION: (f64, f64, f64) = (1.0, 1.0, 1.0);
const DISK_ORIENTATION: (f64, f64, f64) = (1.0, 1.0, 1.0);

/// The weight when it is known without integration: zero for graphs with a
/// constant-angle edge or an odd symmetry (relabeling, edge reordering or
/// reflection), `±Π 1/(#Star)!` when the
/// configuration space is a point.
pub fn exact_weight(g: &AdmissibleGraph) -> Option<Rational> {
    if g.has_constant_angle_edge() || weight_representative(g).1 == 0 {
        return Some(Rational::zero());
    }
    if g.flavor.edge_count(g.n, g.m) != 0 {
        return None;
    }
    let stars = g.stars.iter().map(Vec::len).chain(std::iter::once(g.marked.len()));
    let fact = stars.fold(Rational::one(), |acc, k| acc * factorial(k));
    let sign = orientation(g.flavor, g.n, g.m) * slice_orientation(g.flavor, g.m);
    Some(Rational::from_integer((sign as i64).into()) / fact)
}

/// `s` with `W(mirror Γ) = s·W(Γ)` for every graph of the given shape, where
/// the reflection acts on the slice by an explicit chart map: `z ↦ 1 − z̄`
/// on the half-plane with `m = 2`, `z ↦ z̄` on the disk.
pub fn mirror_sign(flavor: Flavor, n: usize, m: usize) -> Option<i32> {
    let edges = flavor.edge_count(n, m);
    if edges < 1 {
        return None;
    }
    // every angle changes sign; the chart map reflects each free interior
    // point and reverses the free boundary coordinates
    let chart = match (flavor, m) {
        (Flavor::Halfplane, 2) => n as i64,
        (Flavor::Halfplane, _) => return None,
        (Flavor::Disk, 0) => n as i64 - 1,
        (Flavor::Disk, _) => {
            let k = m as i64 - 1;
            n as i64 + k + k * (k - 1) / 2
        }
    };
    Some(if (edges + chart) % 2 == 0 { 1 } else { -1 })
}

/// Representative for `W`: the smaller of the weight classes of `g` and of
/// its mirror, with `W(g) = s·W(rep)`; `s = 0` when the symmetries force
/// `W = 0`.
pub fn weight_representative(g: &AdmissibleGraph) -> (AdmissibleGraph, i32) {
    let (c, s) = g.weight_class();
    if s == 0 {
        return (c, 0);
    }
    let Some(ms) = mirror_sign(g.flavor, g.n, g.m) else {
        return (c, s);
    };
    // W(mirror c) = ms·W(c) = sm·W(cm)
    let (cm, sm) = c.mirror().weight_class();
    if sm == 0 || (cm == c && ms != sm) {
        return (c, 0);
    }
    if cm < c {
        (cm, s * ms * sm)
    } else {
        (c, s)
    }
}

/// `Π 1/(#Star)!` over all stars (the center included), `(2π)^{-dim}`, and
/// the orientation sign.
pub fn weight_prefactor(g: &AdmissibleGraph) -> f64 {
    let stars = g.stars.iter().map(Vec::len).chain(std::iter::once(g.marked.len()));
    let fact: f64 = stars.map(factorial_f64).product();
    let dim = g.edge_count() as i32;
    orientation(g.flavor, g.n, g.m) * slice_orientation(g.flavor, g.m) / fact / (2.0 * PI).powi(dim)
}

/// A Monte Carlo estimate of one graph weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Canonical hash of the graph.
    pub graph: String,
    #[serde(rename = "integrandVersion")]
    pub integrand_version: String,
}

/// A weight run with its diagnostics.
#[derive(Clone, Debug)]
pub struct WeightRun {
    pub estimate: WeightEstimate,
    /// Samples resampled because the configuration was singular.
    pub rejected: u64,
    pub nonconverged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct WeightOptions {
    pub sampler: Sampler,
    /// Runs whose stderr exceeds this are flagged as nonconverged.
    pub stderr_threshold: f64,
}

impl Default for WeightOptions {
    fn default() -> Self {
        WeightOptions { sampler: Sampler::Anchored, stderr_threshold: 5e-2 }
    }
}

const MAX_BATCH: u64 = 4096;
const MIN_BATCHES: u64 = 32;

fn batch_sizes(samples: u64) -> Vec<u64> {
    let size = (samples / MIN_BATCHES).clamp(1, MAX_BATCH);
    let count = samples.div_ceil(size);
    (0..count).map(|b| size.min(samples - b * size)).collect()
}

/// `W_Γ` by Monte Carlo. Batch `b` draws from the ChaCha8 stream `b` of
/// `seed`, so the result does not depend on the thread count.
pub fn graph_weight(g: &AdmissibleGraph, samples: u64, seed: u64) -> Result<WeightEstimate> {
    Ok(graph_weight_detailed(g, samples, seed, &WeightOptions::default())?.estimate)
}

pub fn graph_weight_detailed(g: &AdmissibleGraph, samples: u64, seed: u64, opts: &WeightOptions) -> Result<WeightRun> {
    if let Some(v) = g.validate().into_iter().next() {
        return Err(Error::InvalidGraph(format!("{}: {}", v.rule, v.detail)));
    }
    if samples == 0 {
        return Err(Error::Degenerate("zero samples".into()));
    }
    let hash = g.canonical_hash()?;
    let exact = |value: f64| WeightRun {
        estimate: WeightEstimate {
            value,
            stderr: 0.0,
            samples,
            seed,
            graph: hash.clone(),
            integrand_version: INTEGRAND_VERSION.into(),
        },
        rejected: 0,
        nonconverged: false,
    };
    if g.has_constant_angle_edge() {
        return Ok(exact(0.0));
    }
    if g.flavor.edge_count(g.n, g.m) == 0 {
        // a point: the empty wedge integrates to 1
        return Ok(exact(weight_prefactor(g)));
    }
    if g.canonical_form().1 == 0 {
        return Ok(exact(0.0));
    }
    let prefactor = weight_prefactor(g);
    let batches = batch_sizes(samples);
    let results: Vec<Result<(f64, u64)>> = batches
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (mut sum, mut carry) = (0.0f64, 0.0f64);
            let mut rejected = 0;
            let mut k = 0;
            while k < size {
                let (c, density) = sample_config_with(opts.sampler, g.flavor, g.n, g.m, &mut rng)?;
                let value = integrand(g, &c)? / density;
                if !value.is_finite() || !(density > 0.0) {
                    rejected += 1;
                    if rejected > 1000 + size {
                        return Err(Error::Nonconvergence(format!("batch {b}: too many singular samples")));
                    }
                    continue;
                }
                let y = value - carry;
                let t = sum + y;
                carry = (t - sum) - y;
                sum = t;
                k += 1;
            }
            Ok((sum, rejected))
        })
        .collect();
    let mut sums = Vec::with_capacity(batches.len());
    let mut rejected = 0;
    for r in results {
        let (s, rej) = r?;
        sums.push(s);
        rejected += rej;
    }
    let total = samples as f64;
    let mean = sums.iter().sum::<f64>() / total;
    let stderr = if sums.len() < 2 {
        f64::INFINITY
    } else {
        let var: f64 = sums
            .iter()
            .zip(&batches)
            .map(|(s, &n)| {
                let n = n as f64;
                (n / total).powi(2) * (s / n - mean).powi(2)
            })
            .sum();
        (var * sums.len() as f64 / (sums.len() - 1) as f64).sqrt()
    };
    // floor for the rounding error of the accumulation
    let stderr = stderr.max(total.sqrt() * f64::EPSILON * mean.abs());
    let value = prefactor * mean;
    let stderr = prefactor.abs() * stderr;
    if rejected > 0 {
        log::info!("{rejected} singular configurations resampled for {}", &hash[..12]);
    }
    let nonconverged = !(stderr <= opts.stderr_threshold);
    if nonconverged {
        log::warn!("weight of {} did not converge: stderr {stderr:.3e}", &hash[..12]);
    }
    Ok(WeightRun {
        estimate: WeightEstimate { value, stderr, samples, seed, graph: hash, integrand_version: INTEGRAND_VERSION.into() },
        rejected,
        nonconverged,
    })
}

/// Environment variable naming the cache root.
pub const CACHE_ENV: &str = "FORMALITY_WEIGHT_CACHE";

/// Content-addressed on-disk store of weight estimates, one JSON file per key.
/// Entries hold the weight of the canonical representative of a graph class.
#[derive(Clone, Debug)]
pub struct WeightCache {
    root: PathBuf,
}

impl WeightCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WeightCache { root: root.into() }
    }

    /// The root from the environment, else `.formality-cache/weights`.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) => WeightCache::new(dir),
            None => WeightCache::new(".formality-cache/weights"),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn key(canonical_hash: &str, flavor: Flavor, samples: u64, seed: u64) -> String {
        let text = format!("{canonical_hash}|{}|{samples}|{seed}|{INTEGRAND_VERSION}", flavor.name());
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.json"))
    }

    /// `None` on a miss. A corrupt entry is reported as a miss with a warning.
    pub fn get(&self, key: &str) -> Result<Option<WeightEstimate>> {
        let text = match fs::read_to_string(self.path(key)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match serde_json::from_str::<WeightEstimate>(&text) {
            Ok(w) => Ok(Some(w)),
            Err(e) => {
                log::warn!("corrupt cache entry {key}: {e}; recomputing");
                Ok(None)
            }
        }
    }

    /// Writes to a unique temporary file in the cache directory and renames
    /// it into place, so readers never see a torn entry.
    pub fn put(&self, key: &str, w: &WeightEstimate) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let tmp = self.root.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(serde_json::to_string_pretty(w)?.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    /// Weight of `g` through its canonical representative, computing and
    /// storing it on a miss.
    pub fn weight(&self, g: &AdmissibleGraph, samples: u64, seed: u64) -> Result<WeightEstimate> {
        let (canon, sign) = g.canonical_form();
        let hash = g.canonical_hash()?;
        let key = Self::key(&hash, g.flavor, samples, seed);
        let stored = match self.get(&key)? {
            Some(w) => w,
            None => {
                let w = graph_weight(&canon, samples, seed)?;
                self.put(&key, &w)?;
                w
            }
        };
        let s = sign as f64;
        Ok(WeightEstimate { value: s * stored.value, stderr: s.abs() * stored.stderr, ..stored })
    }
}
