//! Smooth nested approximations of a compact planar set from sublevel sets
//! of a mollified distance function, and the stability of spectral-norm
//! ratios along the resulting domains.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::calculus::{gamma_values, CalculusError, MatrixOperand};
use crate::cauchy::{sup_norm, BoundarySamples, Generator, Poly};
use crate::contour::{make_contour, winding_number, Contour, ContourError, ContourSpec, CurveFamily, FourierMode};
use crate::geometry::{convex_hull, point_in_polygon, segment_distance, signed_area};
use crate::linalg::{CMatrix, LinalgError};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Relative nudges of `t_n` tried after the midpoint, as fractions of the
/// admissible interval.
const NUDGES: [f64; 8] = [0.025, -0.025, 0.05, -0.05, 0.075, -0.075, 0.1, -0.1];
pub const CONVEXITY_TOL: f64 = 1e-6;
pub const HOMOMORPHISM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SmoothingError {
    #[error("invalid point set: {0}")]
    InvalidPoints(String),
    #[error("invalid smoothing parameters: {0}")]
    InvalidParams(String),
    #[error("level {level}: no regular value found near the midpoint (gradient floor {floor})")]
    LevelNotRegular { level: usize, floor: f64 },
    #[error("level {level}: level set has {components} components; refine the grid")]
    GridTooCoarse { level: usize, components: usize },
    #[error("nesting violated: {}", .0.join("; "))]
    NestingViolated(Vec<String>),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Finite set `X`; in hull mode it stands for its convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Complex64>,
    hull: Option<Vec<Complex64>>,
}

impl PointSet {
    pub fn new(points: Vec<Complex64>, hull_mode: bool) -> Result<Self, SmoothingError> {
        if points.is_empty() {
            return Err(SmoothingError::InvalidPoints("point set is empty".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(SmoothingError::InvalidPoints("point set has a non-finite point".into()));
        }
        let hull = hull_mode.then(|| convex_hull(&points));
        Ok(Self { points, hull })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn hull_mode(&self) -> bool {
        self.hull.is_some()
    }

    /// Distance from `z` to `X` (or to its hull).
    pub fn distance(&self, z: Complex64) -> f64 {
        match &self.hull {
            Some(h) if h.len() >= 3 => {
                if point_in_polygon(z, h) {
                    return 0.0;
                }
                (0..h.len())
                    .map(|k| segment_distance(z, h[k], h[(k + 1) % h.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
            Some(h) if h.len() == 2 => segment_distance(z, h[0], h[1]),
            _ => self.points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min),
        }
    }

    /// Points on the boundary of `X⁻`: the hull polygon sampled with
    /// `per_edge` points per edge, or the points themselves.
    pub fn boundary_samples(&self, per_edge: usize) -> Vec<Complex64> {
        match &self.hull {
            Some(h) if h.len() >= 2 => {
                let m = h.len();
                (0..m)
                    .flat_map(|k| {
                        let (a, b) = (h[k], h[(k + 1) % m]);
                        (0..per_edge).map(move |s| a + (b - a) * (s as f64 / per_edge as f64))
                    })
                    .collect()
            }
            _ => self.points.clone(),
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let fold = |f: fn(&Complex64) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            self.points.iter().map(f).fold(init, pick)
        };
        (
            fold(|p| p.re, f64::INFINITY, f64::min),
            fold(|p| p.re, f64::NEG_INFINITY, f64::max),
            fold(|p| p.im, f64::INFINITY, f64::min),
            fold(|p| p.im, f64::NEG_INFINITY, f64::max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothingParams {
    pub epsilon: f64,
    pub levels: usize,
    /// Grid spacing.
    pub h: f64,
    /// Fourier modes in the boundary fit.
    pub modes: usize,
    /// Nodes of each fitted contour. The support-function fit spends few
    /// parameter values on flat stretches, hence the generous default.
    pub nodes: usize,
}

impl SmoothingParams {
    pub fn new(epsilon: f64, levels: usize, h: f64) -> Result<Self, SmoothingError> {
        let p = Self { epsilon, levels, h, modes: 32, nodes: 1024 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SmoothingError> {
        let bad = |m: String| Err(SmoothingError::InvalidParams(m));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.levels == 0 {
            return bad("at least one level is required".into());
        }
        if !(self.h > 0.0 && self.h <= self.mollifier_radius(1) / 4.0) {
            return bad(format!("grid spacing {} must lie in (0, s_1/4 = {}]", self.h, self.mollifier_radius(1) / 4.0));
        }
        if self.modes < 2 {
            return bad("at least two Fourier modes are required".into());
        }
        if self.nodes < 32 || !self.nodes.is_power_of_two() || self.nodes < 4 * self.modes {
            return bad(format!("contour nodes {} must be a power of two ≥ max(32, 4·modes)", self.nodes));
        }
        Ok(())
    }

    /// `ε/n − ε/(n+1)`.
    pub fn gap(&self, n: usize) -> f64 {
        self.epsilon / (n * (n + 1)) as f64
    }

    /// `s_n`, a quarter of the gap.
    pub fn mollifier_radius(&self, n: usize) -> f64 {
        self.gap(n) / 4.0
    }

    /// Open interval `(s_n, gap/2)` for the level value `t_n`.
    pub fn level_interval(&self, n: usize) -> (f64, f64) {
        (self.mollifier_radius(n), self.gap(n) / 2.0)
    }
}

/// Uniform grid `origin + (i h, j h)`, row-major in `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Complex64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// Covers the bounding box of `X` padded by `2ε`.
    pub fn covering(x: &PointSet, epsilon: f64, h: f64) -> Self {
        let (x0, x1, y0, y1) = x.bounds();
        let pad = 2.0 * epsilon;
        let nx = ((x1 - x0 + 2.0 * pad) / h).ceil() as usize + 1;
        let ny = ((y1 - y0 + 2.0 * pad) / h).ceil() as usize + 1;
        Self { origin: Complex64::new(x0 - pad, y0 - pad), h, nx, ny }
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        self.origin + Complex64::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `dist(X, ·)` at every grid point.
pub fn distance_field(x: &PointSet, grid: &Grid) -> Vec<f64> {
    (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|j| (0..grid.nx).map(move |i| x.distance(grid.point(i, j))))
        .collect()
}

/// Grid weights of the standard mollifier `exp(−1/(1−|x|²))` at radius `s`,
/// normalized to unit mass. Returns `(di, dj, weight)` triples.
fn mollifier(s: f64, h: f64) -> Vec<(isize, isize, f64)> {
    let r = (s / h).floor() as isize;
    let mut w = Vec::new();
    for dj in -r..=r {
        for di in -r..=r {
            let q = ((di * di + dj * dj) as f64 * h * h) / (s * s);
            if q < 1.0 {
                w.push((di, dj, (-1.0 / (1.0 - q)).exp()));
            }
        }
    }
    if w.is_empty() {
        w.push((0, 0, 1.0));
    }
    let total: f64 = w.iter().map(|t| t.2).sum();
    w.iter().map(|&(a, b, v)| (a, b, v / total)).collect()
}

/// `ψ_n = θ_{s_n} * max(dist − ε/(n+1), 0)` on the grid; grid points whose
/// stencil leaves the grid keep the unmollified value.
pub fn mollified_field(dist: &[f64], grid: &Grid, shift: f64, s: f64) -> Vec<f64> {
    let base: Vec<f64> = dist.iter().map(|d| (d - shift).max(0.0)).collect();
    let w = mollifier(s, grid.h);
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let r = w.iter().map(|t| t.0.abs()).max().unwrap_or(0);
    (0..ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let base = &base;
            let w = &w;
            (0..nx).map(move |i| {
                if i < r || j < r || i >= nx - r || j >= ny - r {
                    return base[(j * nx + i) as usize];
                }
                w.iter().map(|&(di, dj, v)| v * base[((j + dj) * nx + i + di) as usize]).sum()
            })
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

/// Closed polylines of `{v = level}` by marching squares, inside = `v < level`,
/// each oriented counter-clockwise.
pub fn marching_squares(v: &[f64], grid: &Grid, level: f64) -> Vec<Vec<Complex64>> {
    let (nx, ny) = (grid.nx, grid.ny);
    let val = |i: usize, j: usize| v[j * nx + i] - level;
    let crossing = |e: EdgeId| -> Complex64 {
        let (p, q, vp, vq) = match e {
            EdgeId::H(i, j) => (grid.point(i, j), grid.point(i + 1, j), val(i, j), val(i + 1, j)),
            EdgeId::V(i, j) => (grid.point(i, j), grid.point(i, j + 1), val(i, j), val(i, j + 1)),
        };
        p + (q - p) * (vp / (vp - vq))
    };
    let mut segments: Vec<(EdgeId, EdgeId)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (a, b, c, d) = (val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1));
            let ins = [a < 0.0, b < 0.0, c < 0.0, d < 0.0];
            let bottom = EdgeId::H(i, j);
            let right = EdgeId::V(i + 1, j);
            let top = EdgeId::H(i, j + 1);
            let left = EdgeId::V(i, j);
            let cut = [
                (ins[0] != ins[1], bottom),
                (ins[1] != ins[2], right),
                (ins[2] != ins[3], top),
                (ins[3] != ins[0], left),
            ];
            let edges: Vec<EdgeId> = cut.iter().filter(|t| t.0).map(|t| t.1).collect();
            match edges.len() {
                2 => segments.push((edges[0], edges[1])),
                4 => {
                    let center_in = (a + b + c + d) / 4.0 < 0.0;
                    // separate the corners that are not joined through the center
                    let cut_bd = (ins[0] && center_in) || (!ins[0] && !center_in);
                    if cut_bd {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    let mut by_edge: HashMap<EdgeId, Vec<usize>> = HashMap::new();
    for (k, s) in segments.iter().enumerate() {
        by_edge.entry(s.0).or_default().push(k);
        by_edge.entry(s.1).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let first = segments[start].0;
        let mut edge = segments[start].1;
        let mut pts = vec![crossing(first)];
        while edge != first {
            pts.push(crossing(edge));
            let next = by_edge[&edge].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            edge = if segments[k].0 == edge { segments[k].1 } else { segments[k].0 };
        }
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        loops.push(pts);
    }
    loops
}

/// Fourier coefficients of the Jackson kernel of degree ≤ `2(k − 1)`,
/// normalized to 1 at frequency 0.
fn jackson_weights(k: usize) -> Vec<f64> {
    let k = k as isize;
    let fejer = |m: isize| if m.abs() < k { 1.0 - m.abs() as f64 / k as f64 } else { 0.0 };
    let deg = 2 * (k - 1);
    let raw: Vec<f64> = (0..=deg).map(|m| ((-k + 1)..k).map(|l| fejer(l) * fejer(m - l)).sum()).collect();
    raw.iter().map(|v| v / raw[0]).collect()
}

fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    let n = buf.len() as f64;
    buf.iter().map(|v| v / n).collect()
}

fn polygon_centroid(p: &[Complex64]) -> Complex64 {
    let n = p.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (u, w) = (p[k], p[(k + 1) % n]);
        let cr = u.re * w.im - w.re * u.im;
        a += cr;
        cx += (u.re + w.re) * cr;
        cy += (u.im + w.im) * cr;
    }
    Complex64::new(cx, cy) / (3.0 * a)
}

/// Convex fit: support function of the polyline, Jackson-smoothed to
/// `modes` harmonics, lowered by its largest overshoot and turned back into
/// the curve `(h + i h') e^{iθ}`. The radius of curvature of the fit is a
/// positive-kernel average of the polygon's minus that shift. Returns the
/// modes and the max support error.
fn support_fit(poly: &[Complex64], modes: usize) -> (Vec<FourierMode>, f64) {
    let c = polygon_centroid(poly);
    let p = 1024.max(8 * modes.next_power_of_two());
    let h: Vec<f64> = (0..p)
        .map(|j| {
            let rot = Complex64::from_polar(1.0, -TAU * j as f64 / p as f64);
            poly.iter().map(|z| (rot * (z - c)).re).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let a = dft(&h.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>());
    let jw = jackson_weights(modes / 2 + 1);
    let weight = |m: usize| match m {
        0 | 1 => 1.0,
        k if k < jw.len() => jw[k],
        _ => 0.0,
    };
    let mut smoothed = vec![ZERO; p];
    for (m, v) in a.iter().enumerate() {
        let f = if m <= p / 2 { m } else { p - m };
        smoothed[m] = v * weight(f);
    }
    let mut back = smoothed.clone();
    FftPlanner::new().plan_fft_inverse(p).process(&mut back);
    let shift = back.iter().zip(&h).map(|(s, x)| s.re - x).fold(0.0, f64::max);
    smoothed[0] -= shift;
    let residual = back.iter().zip(&h).map(|(s, x)| (s.re - shift - x).abs()).fold(0.0, f64::max);
    let coef = |m: isize| smoothed[m.rem_euclid(p as isize) as usize];
    let mut out = Vec::new();
    let mut center = c;
    for m in -(modes as isize)..=(modes as isize) {
        if weight(m.unsigned_abs()) == 0.0 {
            continue;
        }
        let cm = coef(m) * (1.0 - m as f64);
        if m == -1 {
            center += cm;
        } else {
            out.push(FourierMode { k: (m + 1) as i32, c: cm });
        }
    }
    out.push(FourierMode { k: 0, c: center });
    (out, residual)
}

/// Least-squares fit in arc length: equispaced arc-length resampling, then
/// the lowest `modes` harmonics. Returns modes and the RMS residual.
fn arclength_fit(poly: &[Complex64], modes: usize) -> (Vec<FourierMode>, f64) {
    let n = poly.len();
    let mut cum = vec![0.0; n + 1];
    for k in 0..n {
        cum[k + 1] = cum[k] + (poly[(k + 1) % n] - poly[k]).norm();
    }
    let total = cum[n];
    let p = 1024.max(8 * modes.next_power_of_two());
    let mut samples = Vec::with_capacity(p);
    let mut seg = 0;
    for j in 0..p {
        let s = total * j as f64 / p as f64;
        while cum[seg + 1] < s {
            seg += 1;
        }
        let t = (s - cum[seg]) / (cum[seg + 1] - cum[seg]).max(1e-300);
        samples.push(poly[seg] + (poly[(seg + 1) % n] - poly[seg]) * t);
    }
    let a = dft(&samples);
    let mut out = Vec::new();
    for m in -(modes as isize)..=(modes as isize) {
        out.push(FourierMode { k: m as i32, c: a[m.rem_euclid(p as isize) as usize] });
    }
    let fitted = |t: f64| out.iter().map(|md| md.c * Complex64::from_polar(1.0, md.k as f64 * t)).sum::<Complex64>();
    let rms = (samples
        .iter()
        .enumerate()
        .map(|(j, z)| (fitted(TAU * j as f64 / p as f64) - z).norm_sqr())
        .sum::<f64>()
        / p as f64)
        .sqrt();
    (out, rms)
}

/// One smoothed domain `Ω_n`.
#[derive(Debug, Clone)]
pub struct SmoothDomain {
    pub level: usize,
    pub s: f64,
    pub t: f64,
    pub gradient_min: f64,
    pub fit_residual: f64,
    pub polyline: Vec<Complex64>,
    pub spec: ContourSpec,
    pub contour: Contour,
}

fn band_gradient_min(psi: &[f64], grid: &Grid, t: f64) -> f64 {
    let (nx, ny) = (grid.nx, grid.ny);
    let at = |i: usize, j: usize| psi[j * nx + i];
    let mut best = f64::INFINITY;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = at(i, j) - t;
            // cells adjacent to the level set
            let crosses = [(1, 0), (0, 1)].iter().any(|&(di, dj)| (at(i + di, j + dj) - t) * v <= 0.0);
            if !crosses {
                continue;
            }
            let gx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * grid.h);
            let gy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * grid.h);
            best = best.min(gx.hypot(gy));
        }
    }
    best
}

/// Domains `Ω_n = {ψ_n < t_n}` for `n = 1..levels`, each fitted by a
/// Fourier curve.
pub fn build_domains(x: &PointSet, p: &SmoothingParams) -> Result<Vec<SmoothDomain>, SmoothingError> {
    p.validate()?;
    let grid = Grid::covering(x, p.epsilon, p.h);
    let dist = distance_field(x, &grid);
    let convex_fit = x.hull_mode() || x.points().len() == 1;
    (1..=p.levels)
        .map(|n| {
            let s = p.mollifier_radius(n);
            let shift = p.epsilon / (n + 1) as f64;
            let psi = mollified_field(&dist, &grid, shift, s);
            let (lo, hi) = p.level_interval(n);
            let mid = 0.5 * (lo + hi);
            let floor = mid / (4.0 * s);
            let mut chosen = None;
            for nudge in std::iter::once(0.0).chain(NUDGES) {
                let t = mid + nudge * (hi - lo);
                let g = band_gradient_min(&psi, &grid, t);
                if g > t / (4.0 * s) {
                    chosen = Some((t, g));
                    break;
                }
            }
            let (t, gradient_min) = chosen.ok_or(SmoothingError::LevelNotRegular { level: n, floor })?;
            let loops = marching_squares(&psi, &grid, t);
            if loops.len() != 1 {
                return Err(SmoothingError::GridTooCoarse { level: n, components: loops.len() });
            }
            let polyline = loops.into_iter().next().unwrap();
            let (modes, fit_residual) =
                if convex_fit { support_fit(&polyline, p.modes) } else { arclength_fit(&polyline, p.modes) };
            let spec = ContourSpec { family: CurveFamily::Fourier { modes }, nodes: p.nodes };
            let contour = make_contour(&spec)?;
            Ok(SmoothDomain { level: n, s, t, gradient_min, fit_residual, polyline, spec, contour })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub x_inside: bool,
    /// `Ω_n⁻ ⊆ Ω_{n−1}`; true at the first level.
    pub nested: bool,
    pub hausdorff: f64,
    pub hausdorff_bound: f64,
    pub min_curvature: f64,
    /// Only required in hull mode.
    pub convex: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestingReport {
    pub levels: Vec<LevelCheck>,
    pub hull_mode: bool,
}

impl NestingReport {
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for l in &self.levels {
            if !l.x_inside {
                out.push(format!("level {}: X not inside", l.level));
            }
            if !l.nested {
                out.push(format!("level {}: not nested in level {}", l.level, l.level - 1));
            }
            if l.hausdorff > l.hausdorff_bound {
                out.push(format!("level {}: Hausdorff {} > {}", l.level, l.hausdorff, l.hausdorff_bound));
            }
            if self.hull_mode && !l.convex {
                out.push(format!("level {}: min curvature {}", l.level, l.min_curvature));
            }
        }
        out
    }

    pub fn verify(&self) -> Result<(), SmoothingError> {
        let f = self.failures();
        if f.is_empty() {
            Ok(())
        } else {
            Err(SmoothingError::NestingViolated(f))
        }
    }
}

fn inside(c: &Contour, polygon: &[Complex64], z: Complex64) -> bool {
    match winding_number(c, z) {
        Ok(w) => w == 1,
        Err(_) => point_in_polygon(z, polygon),
    }
}

/// Checks the inclusion chain of the smoothed domains against `X`.
pub fn nesting_report(domains: &[SmoothDomain], x: &PointSet, p: &SmoothingParams) -> Result<NestingReport, SmoothingError> {
    if domains.len() < 2 {
        return Err(SmoothingError::InvalidParams("nesting needs at least two levels".into()));
    }
    let fine: Vec<Vec<Complex64>> = domains.iter().map(|d| d.contour.resampled(4 * d.contour.len()).points).collect();
    let mut levels = Vec::new();
    for (k, d) in domains.iter().enumerate() {
        let c = &d.contour;
        let x_inside = x.points().iter().all(|&z| inside(c, &fine[k], z));
        let nested = k == 0 || fine[k].iter().all(|&z| point_in_polygon(z, &fine[k - 1]));
        let mut hausdorff = fine[k].iter().map(|&z| x.distance(z)).fold(0.0, f64::max);
        if !x.hull_mode() {
            // dist(X, ·) need not peak on the boundary of a non-convex set
            let grid = Grid::covering(x, p.epsilon, p.h);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let z = grid.point(i, j);
                    if point_in_polygon(z, &fine[k]) {
                        hausdorff = hausdorff.max(x.distance(z));
                    }
                }
            }
        }
        let min_curvature = c.min_curvature();
        levels.push(LevelCheck {
            level: d.level,
            x_inside,
            nested,
            hausdorff,
            hausdorff_bound: p.epsilon / d.level as f64 + 2.0 * p.h,
            min_curvature,
            convex: min_curvature >= -CONVEXITY_TOL,
        });
    }
    Ok(NestingReport { levels, hull_mode: x.hull_mode() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub level: usize,
    pub sup_boundary: f64,
    pub norm_fa: f64,
    pub ratio: f64,
    /// `‖γ_{Ω_n}(f) − f(A)‖`.
    pub homomorphism_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    /// `sup |f|` over a fine sampling of the boundary of `X⁻`.
    pub sup_x: f64,
    pub sup_monotone: bool,
    pub ratio_monotone: bool,
    /// `|sup_last − sup_X| ≤ 5%·(sup_first − sup_last) + 1e-9`.
    pub converged: bool,
    pub homomorphism_ok: bool,
}

impl StabilityTable {
    pub fn limit_ratio(&self) -> f64 {
        self.rows.last().map(|r| r.ratio).unwrap_or(f64::NAN)
    }
}

/// `f(A)` by Horner's rule in matrix arithmetic.
pub fn poly_of_matrix(p: &Poly, a: &CMatrix) -> CMatrix {
    let n = a.dim();
    let mut shifted = a.clone();
    for k in 0..n {
        shifted[(k, k)] -= p.center;
    }
    let mut out = CMatrix::zeros(n);
    for c in p.coeffs.iter().rev() {
        out = &out * &shifted;
        for k in 0..n {
            out[(k, k)] += c;
        }
    }
    out
}

/// Tabulates `sup_{∂Ω_n}|f|`, `‖f(A)‖` and their ratio along the domains,
/// with the homomorphism cross-check `γ_{Ω_n}(f) = f(A)`.
pub fn spectral_stability(
    a: &CMatrix,
    f: &Poly,
    domains: &[SmoothDomain],
    x: &PointSet,
) -> Result<StabilityTable, SmoothingError> {
    let fa = poly_of_matrix(f, a);
    let norm_fa = fa.spectral_norm()?;
    let g = Generator::Polynomial(f.clone());
    let mut rows = Vec::new();
    for d in domains {
        let op = MatrixOperand::new(a.clone(), &d.contour).map_err(|e| match e {
            CalculusError::SpectrumOutside { .. } | CalculusError::ResolventSingular { .. } => {
                SmoothingError::HypothesisViolated(format!("level {}: {e}", d.level))
            }
            other => SmoothingError::Calculus(other),
        })?;
        let samples = BoundarySamples::from_generator(&d.contour, &g);
        let sup_boundary = sup_norm(&d.contour, &samples);
        let homomorphism_err = (&gamma_values(&op, &samples.values) - &fa).spectral_norm()?;
        let ratio = if sup_boundary > 0.0 { norm_fa / sup_boundary } else { f64::NAN };
        rows.push(StabilityRow { level: d.level, sup_boundary, norm_fa, ratio, homomorphism_err });
    }
    let sup_x = x.boundary_samples(256).iter().map(|&z| g.eval(z).norm()).fold(0.0, f64::max);
    let sup_monotone = rows.windows(2).all(|w| w[1].sup_boundary <= w[0].sup_boundary + 1e-9);
    let ratio_monotone = rows.windows(2).all(|w| w[1].ratio >= w[0].ratio - 1e-9);
    let converged = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) => {
            (last.sup_boundary - sup_x).abs() <= 0.05 * (first.sup_boundary - last.sup_boundary) + 1e-9
        }
        _ => false,
    };
    let homomorphism_ok = rows.iter().all(|r| r.homomorphism_err <= HOMOMORPHISM_TOL);
    Ok(StabilityTable { rows, sup_x, sup_monotone, ratio_monotone, converged, homomorphism_ok })
}

/// Grid field as CSV `x,y,value`.
pub fn write_field_csv<W: std::io::Write>(grid: &Grid, field: &[f64], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "value"])?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let z = grid.point(i, j);
            out.write_record([format!("{:.16e}", z.re), format!("{:.16e}", z.im), format!("{:.16e}", field[j * grid.nx + i])])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Disk-boundary sample `{r e^{2πik/m}}`.
pub fn circle_sample(m: usize, radius: f64) -> Vec<Complex64> {
    (0..m).map(|k| Complex64::from_polar(radius, TAU * k as f64 / m as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params() -> SmoothingParams {
        SmoothingParams::new(0.4, 4, 0.4 / 64.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let one = PointSet::new(vec![c(0.0, 0.0)], false).unwrap();
        assert_eq!(one.distance(c(3.0, 0.0)), 3.0);
        let two = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], false).unwrap();
        assert_eq!(two.distance(c(0.5, 0.0)), 0.5);
        let tri = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], true).unwrap();
        assert!((tri.distance(c(1.0, 1.0)) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(tri.distance(c(0.2, 0.2)), 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(SmoothingParams::new(0.4, 4, 0.2).is_err());
        assert!(SmoothingParams::new(-1.0, 4, 0.001).is_err());
        assert!(SmoothingParams::new(0.4, 0, 0.001).is_err());
        let p = params();
        let (lo, hi) = p.level_interval(2);
        assert!(p.mollifier_radius(2) < hi && lo < hi);
    }

    #[test]
    fn mollifier_has_unit_mass() {
        let w = mollifier(0.05, 0.00625);
        assert!((w.iter().map(|t| t.2).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(w.len() > 100);
        assert_eq!(mollifier(0.001, 0.01), vec![(0, 0, 1.0)]);
    }

    #[test]
    fn mollified_field_stays_within_s() {
        let x = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], true).unwrap();
        let p = params();
        let grid = Grid::covering(&x, p.epsilon, p.h);
        let dist = distance_field(&x, &grid);
        let s = p.mollifier_radius(1);
        let psi = mollified_field(&dist, &grid, 0.2, s);
        for (d, v) in dist.iter().zip(&psi) {
            assert!((v - (d - 0.2).max(0.0)).abs() <= s + 1e-12);
        }
    }

    #[test]
    fn marching_squares_circle() {
        let x = PointSet::new(vec![c(0.0, 0.0)], false).unwrap();
        let grid = Grid::covering(&x, 0.5, 0.01);
        let dist = distance_field(&x, &grid);
        let loops = marching_squares(&dist, &grid, 0.3);
        assert_eq!(loops.len(), 1);
        assert!(signed_area(&loops[0]) > 0.0);
        assert!(loops[0].iter().all(|z| (z.norm() - 0.3).abs() < 1e-3));
    }

    #[test]
    fn marching_squares_counts_components() {
        let x = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], false).unwrap();
        let grid = Grid::covering(&x, 0.5, 0.01);
        let dist = distance_field(&x, &grid);
        assert_eq!(marching_squares(&dist, &grid, 0.3).len(), 2);
        assert_eq!(marching_squares(&dist, &grid, 0.6).len(), 1);
    }

    #[test]
    fn jackson_kernel_is_positive() {
        let w = jackson_weights(9);
        assert_eq!(w[0], 1.0);
        for t in 0..200 {
            let th = TAU * t as f64 / 200.0;
            let v: f64 = 1.0 + 2.0 * w[1..].iter().enumerate().map(|(m, x)| x * ((m + 1) as f64 * th).cos()).sum::<f64>();
            assert!(v >= -1e-12);
        }
    }

    #[test]
    fn single_point_gives_circles() {
        let x = PointSet::new(vec![c(0.0, 0.0)], false).unwrap();
        let p = params();
        let doms = build_domains(&x, &p).unwrap();
        let r1 = doms[0].contour.points.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(r1 > 0.2 && r1 < 0.4, "{r1}");
        let report = nesting_report(&doms, &x, &p).unwrap();
        assert!(report.verify().is_ok(), "{:?}", report.failures());
    }

    #[test]
    fn triangle_hull_is_convex_and_nested() {
        let x = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], true).unwrap();
        let p = params();
        let doms = build_domains(&x, &p).unwrap();
        let report = nesting_report(&doms, &x, &p).unwrap();
        assert!(report.verify().is_ok(), "{:?}", report.failures());
    }

    #[test]
    fn two_points_need_hull_mode() {
        let p = SmoothingParams { levels: 3, ..params() };
        let bare = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], false).unwrap();
        assert!(matches!(build_domains(&bare, &p), Err(SmoothingError::GridTooCoarse { level: 1, components: 2 })));
        let hull = PointSet::new(vec![c(0.0, 0.0), c(1.0, 0.0)], true).unwrap();
        let doms = build_domains(&hull, &p).unwrap();
        assert!(nesting_report(&doms, &hull, &p).unwrap().verify().is_ok());
    }

    #[test]
    fn stability_for_diagonal_matrix() {
        let x = PointSet::new(vec![c(0.1, 0.0), c(-0.1, 0.0)], true).unwrap();
        let p = params();
        let doms = build_domains(&x, &p).unwrap();
        let a = CMatrix::from_diagonal(&[c(0.1, 0.0), c(-0.1, 0.0)]);
        let sq = Poly::new(vec![ZERO, ZERO, c(1.0, 0.0)]);
        let t = spectral_stability(&a, &sq, &doms, &x).unwrap();
        assert!((t.rows[0].norm_fa - 0.01).abs() < 1e-15);
        assert!(t.sup_monotone && t.ratio_monotone && t.homomorphism_ok, "{t:?}");
        let one = Poly::new(vec![c(1.0, 0.0)]);
        let t1 = spectral_stability(&a, &one, &doms, &x).unwrap();
        assert!(t1.rows.iter().all(|r| (r.ratio - 1.0).abs() < 1e-12));
    }

    #[test]
    fn poly_of_matrix_matches_products() {
        let a = CMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.5]]).unwrap();
        let p = Poly::centered(c(0.5, 0.0), vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let mut shifted = a.clone();
        shifted[(0, 0)] -= 0.5;
        shifted[(1, 1)] -= 0.5;
        let want = &CMatrix::identity(2) + &(&shifted * &shifted).scale(c(2.0, 0.0));
        assert!((&poly_of_matrix(&p, &a) - &want).norm_fro() < 1e-14);
    }
}
