//! Discretized smooth, positively oriented closed curves.
//!
//! Every curve is parameterized over `t ∈ [0, 2π)` and sampled at the uniform
//! nodes `t_j = 2πj/N`, so the trapezoid rule on the nodes integrates smooth
//! periodic integrands spectrally. `N` is a power of two so that refinement
//! studies share nodes.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::BoundarySamples;
use crate::geometry;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContourError {
    #[error("degenerate contour specification: {0}")]
    DegenerateSpec(String),
    #[error("fourier curve is self-intersecting")]
    SelfIntersecting,
    #[error("point {z} is within {distance:e} of the boundary (minimum standoff {standoff:e})")]
    TooCloseToBoundary { z: Complex64, distance: f64, standoff: f64 },
}

/// One term `c·e^{ikt}` of a Fourier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: i32,
    pub c: Complex64,
}

/// Curve family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CurveFamily {
    Circle { center: Complex64, radius: f64 },
    Ellipse { center: Complex64, a: f64, b: f64 },
    /// `r(t) = base_radius·(1 + amplitude·cos(lobes·t))` around the origin.
    Star { base_radius: f64, amplitude: f64, lobes: u32 },
    Fourier { modes: Vec<FourierMode> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    pub family: CurveFamily,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn circle(center: Complex64, radius: f64, nodes: usize) -> Self {
        Self { family: CurveFamily::Circle { center, radius }, nodes }
    }

    pub fn unit_circle(nodes: usize) -> Self {
        Self::circle(Complex64::new(0.0, 0.0), 1.0, nodes)
    }

    pub fn ellipse(center: Complex64, a: f64, b: f64, nodes: usize) -> Self {
        Self { family: CurveFamily::Ellipse { center, a, b }, nodes }
    }

    pub fn star(base_radius: f64, amplitude: f64, lobes: u32, nodes: usize) -> Self {
        Self { family: CurveFamily::Star { base_radius, amplitude, lobes }, nodes }
    }

    pub fn fourier(modes: Vec<FourierMode>, nodes: usize) -> Self {
        Self { family: CurveFamily::Fourier { modes }, nodes }
    }
}

impl CurveFamily {
    /// Position, first and second derivative at parameter `t`.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64, Complex64) {
        match *self {
            CurveFamily::Circle { center, radius } => {
                let e = Complex64::from_polar(radius, t);
                (center + e, I * e, -e)
            }
            CurveFamily::Ellipse { center, a, b } => {
                let (s, c) = t.sin_cos();
                (
                    center + Complex64::new(a * c, b * s),
                    Complex64::new(-a * s, b * c),
                    Complex64::new(-a * c, -b * s),
                )
            }
            CurveFamily::Star { base_radius, amplitude, lobes } => {
                let k = lobes as f64;
                let (s, c) = (k * t).sin_cos();
                let r = base_radius * (1.0 + amplitude * c);
                let dr = -base_radius * amplitude * k * s;
                let ddr = -base_radius * amplitude * k * k * c;
                let e = Complex64::from_polar(1.0, t);
                (
                    e * r,
                    e * Complex64::new(dr, r),
                    e * Complex64::new(ddr - r, 2.0 * dr),
                )
            }
            CurveFamily::Fourier { ref modes } => {
                let mut p = Complex64::new(0.0, 0.0);
                let mut d1 = p;
                let mut d2 = p;
                for m in modes {
                    let k = m.k as f64;
                    let term = m.c * Complex64::from_polar(1.0, k * t);
                    p += term;
                    d1 += term * I * k;
                    d2 -= term * k * k;
                }
                (p, d1, d2)
            }
        }
    }

    fn validate(&self) -> Result<(), ContourError> {
        let bad = |msg: &str| Err(ContourError::DegenerateSpec(msg.to_string()));
        match *self {
            CurveFamily::Circle { center, radius } => {
                if !(radius > 0.0 && radius.is_finite() && center.is_finite()) {
                    return bad("circle radius must be positive and finite");
                }
            }
            CurveFamily::Ellipse { center, a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && center.is_finite()) {
                    return bad("ellipse semi-axes must be positive and finite");
                }
            }
            CurveFamily::Star { base_radius, amplitude, lobes } => {
                if !(base_radius > 0.0 && base_radius.is_finite()) {
                    return bad("star base radius must be positive");
                }
                if !(0.0..1.0).contains(&amplitude) {
                    return bad("star amplitude must lie in [0, 1)");
                }
                if lobes < 2 {
                    return bad("star needs at least two lobes");
                }
            }
            CurveFamily::Fourier { ref modes } => {
                if modes.is_empty() || modes.iter().any(|m| !m.c.is_finite()) {
                    return bad("fourier curve needs finite coefficients");
                }
                if modes.iter().all(|m| m.k == 0 || m.c == Complex64::new(0.0, 0.0)) {
                    return bad("fourier curve is a single point");
                }
            }
        }
        Ok(())
    }
}

/// A sampled closed curve with its differential geometry cached per node.
#[derive(Debug, Clone)]
pub struct Contour {
    family: CurveFamily,
    pub points: Vec<Complex64>,
    pub velocity: Vec<Complex64>,
    pub acceleration: Vec<Complex64>,
    /// Outward unit normal `-i σ'/|σ'|`.
    pub normals: Vec<Complex64>,
    /// Signed curvature, positive on convex arcs of a counter-clockwise curve.
    pub curvature: Vec<f64>,
    /// Trapezoid arc-length weights `|σ'_j|·2π/N`.
    pub weights: Vec<f64>,
    diameter: f64,
    area: f64,
    length: f64,
}

/// Builds the sampled contour, validating the specification.
pub fn make_contour(spec: &ContourSpec) -> Result<Contour, ContourError> {
    let n = spec.nodes;
    if n < 32 || !n.is_power_of_two() {
        return Err(ContourError::DegenerateSpec(format!(
            "node count {n} must be a power of two and at least 32"
        )));
    }
    spec.family.validate()?;
    let mut family = spec.family.clone();
    if let CurveFamily::Fourier { ref mut modes } = family {
        let scan: Vec<Complex64> = (0..4 * n).map(|j| family_point(modes, TAU * j as f64 / (4 * n) as f64)).collect();
        if geometry::signed_area(&scan) < 0.0 {
            // clockwise input: reverse the parameter direction
            modes.iter_mut().for_each(|m| m.k = -m.k);
        }
        let scan: Vec<Complex64> = (0..4 * n).map(|j| family_point(modes, TAU * j as f64 / (4 * n) as f64)).collect();
        if geometry::signed_area(&scan).abs() < 1e-14 {
            return Err(ContourError::DegenerateSpec("fourier curve encloses no area".into()));
        }
        if geometry::polyline_self_intersects(&scan) {
            return Err(ContourError::SelfIntersecting);
        }
    }
    let c = Contour::sample(family, n);
    if c.velocity.iter().any(|v| v.norm() < 1e-12) {
        return Err(ContourError::DegenerateSpec("curve has a stationary point".into()));
    }
    Ok(c)
}

fn family_point(modes: &[FourierMode], t: f64) -> Complex64 {
    modes.iter().map(|m| m.c * Complex64::from_polar(1.0, m.k as f64 * t)).sum()
}

impl Contour {
    fn sample(family: CurveFamily, n: usize) -> Self {
        let mut points = Vec::with_capacity(n);
        let mut velocity = Vec::with_capacity(n);
        let mut acceleration = Vec::with_capacity(n);
        for j in 0..n {
            let (p, d1, d2) = family.eval(TAU * j as f64 / n as f64);
            points.push(p);
            velocity.push(d1);
            acceleration.push(d2);
        }
        let normals: Vec<Complex64> = velocity.iter().map(|v| -I * v / v.norm()).collect();
        let curvature: Vec<f64> = velocity
            .iter()
            .zip(&acceleration)
            .map(|(v, a)| (a * v.conj()).im / v.norm().powi(3))
            .collect();
        let weights: Vec<f64> = velocity.iter().map(|v| v.norm() * TAU / n as f64).collect();
        let length = weights.iter().sum();
        // area = ½ ∮ Re(conj(n)·σ) |dσ|
        let area = 0.5
            * weights
                .iter()
                .zip(&normals)
                .zip(&points)
                .map(|((w, nrm), p)| w * (nrm.conj() * p).re)
                .sum::<f64>();
        let diameter = geometry::diameter(&points);
        Self { family, points, velocity, acceleration, normals, curvature, weights, diameter, area, length }
    }

    /// Same curve at a different node count; skips re-validation.
    pub fn resampled(&self, nodes: usize) -> Contour {
        assert!(nodes.is_power_of_two() && nodes >= 32);
        Contour::sample(self.family.clone(), nodes)
    }

    pub fn family(&self) -> &CurveFamily {
        &self.family
    }

    pub fn spec(&self) -> ContourSpec {
        ContourSpec { family: self.family.clone(), nodes: self.len() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn param(&self, j: usize) -> f64 {
        TAU * j as f64 / self.len() as f64
    }

    /// Unit tangent at node `j`.
    pub fn tangent(&self, j: usize) -> Complex64 {
        self.velocity[j] / self.velocity[j].norm()
    }

    /// `w_j·T_j = σ'_j·2π/N`, the complex quadrature weight for `dσ`.
    pub fn dsigma(&self, j: usize) -> Complex64 {
        self.velocity[j] * (TAU / self.len() as f64)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Minimum distance an evaluation point must keep from the nodes.
    pub fn standoff(&self) -> f64 {
        TAU * self.diameter / self.len() as f64
    }

    pub fn min_node_distance(&self, z: Complex64) -> f64 {
        self.points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn check_standoff(&self, z: Complex64) -> Result<(), ContourError> {
        let distance = self.min_node_distance(z);
        let standoff = self.standoff();
        if distance < standoff {
            return Err(ContourError::TooCloseToBoundary { z, distance, standoff });
        }
        Ok(())
    }

    /// Area centroid from Green's theorem.
    pub fn centroid(&self) -> Complex64 {
        let h = TAU / self.len() as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for (p, v) in self.points.iter().zip(&self.velocity) {
            mx += 0.5 * p.re * p.re * v.im * h;
            my -= 0.5 * p.im * p.im * v.re * h;
        }
        Complex64::new(mx, my) / self.area
    }

    /// `Some((center, radius))` for circle families.
    pub fn as_circle(&self) -> Option<(Complex64, f64)> {
        match self.family {
            CurveFamily::Circle { center, radius } => Some((center, radius)),
            _ => None,
        }
    }

    pub fn min_curvature(&self) -> f64 {
        self.curvature.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Support function `max_t Re(e^{-iθ} σ(t))`, refined off the nodes by
    /// Newton steps on the continuous parameterization.
    pub fn support(&self, theta: f64) -> f64 {
        let rot = Complex64::from_polar(1.0, -theta);
        let n = self.len();
        let (best, _) = self
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| (j, (rot * p).re))
            .fold((0, f64::NEG_INFINITY), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let h = TAU / n as f64;
        let mut t = self.param(best);
        let (lo, hi) = (t - h, t + h);
        let mut value = (rot * self.points[best]).re;
        for _ in 0..20 {
            let (p, d1, d2) = self.family.eval(t);
            let g1 = (rot * d1).re;
            let g2 = (rot * d2).re;
            value = value.max((rot * p).re);
            if g2 >= 0.0 || g1.abs() < 1e-15 {
                break;
            }
            let next = (t - g1 / g2).clamp(lo, hi);
            if (next - t).abs() < 1e-15 {
                break;
            }
            t = next;
        }
        value.max((rot * self.family.eval(t).0).re)
    }

    /// Maximum of `|g(σ(t))|` over the continuous curve: a fine scan at
    /// `8N` parameters followed by golden-section refinement of the best
    /// few local maxima.
    pub fn continuous_sup<F: Fn(Complex64) -> f64>(&self, g: F) -> f64 {
        let m = 8 * self.len();
        let step = TAU / m as f64;
        let vals: Vec<f64> = (0..m).map(|j| g(self.family.eval(step * j as f64).0)).collect();
        let mut peaks: Vec<usize> = (0..m)
            .filter(|&j| vals[j] >= vals[(j + m - 1) % m] && vals[j] >= vals[(j + 1) % m])
            .collect();
        peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        peaks.truncate(4);
        let mut best = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let f = |t: f64| g(self.family.eval(t).0);
        for j in peaks {
            let t0 = step * j as f64;
            best = best.max(golden_max(&f, t0 - step, t0 + step));
        }
        best
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if (b - a).abs() < 1e-14 {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// Argument-principle winding number `(1/2πi) Σ w_j T_j / (σ_j − z)`.
pub fn winding_number(c: &Contour, z: Complex64) -> Result<i64, ContourError> {
    c.check_standoff(z)?;
    Ok(winding_sum(c, z).re.round() as i64)
}

pub(crate) fn winding_sum(c: &Contour, z: Complex64) -> Complex64 {
    let s: Complex64 = (0..c.len()).map(|j| c.dsigma(j) / (c.points[j] - z)).sum();
    s / (TAU * I)
}

/// `max_j |φ_j|` over the nodes.
pub fn boundary_sup(phi: &BoundarySamples) -> f64 {
    phi.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Half-angle helper for the polar families, used by tests and plots.
pub fn node_params(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
}
