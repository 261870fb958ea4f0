//! Double-layer potential, the Nyström matrix of the Neumann–Poincaré
//! operator, and the convexity and norm tests built on it.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cauchy::{cauchy_singular_all, richardson, BoundarySamples, NearBoundary};
use crate::contour::{winding_sum, Contour, ContourError};
use crate::linalg::{CMatrix, LinalgError, LuFactors};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DlayerError {
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("probe {z} has winding number {winding}, inconsistent with the requested region")]
    RegionMismatch { z: Complex64, winding: i64 },
    #[error(
        "convexity tests disagree: kernel {kernel}, norm {norm}, curvature {curvature}; refine the discretization"
    )]
    InconsistentClassification { kernel: bool, norm: bool, curvature: bool },
    #[error("I + K is singular: {0}")]
    SingularOperator(LinalgError),
    #[error("boundary samples have length {got}, contour has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

/// Kernel tolerances for the convexity classifiers.
pub const KERNEL_TOL: f64 = 1e-8;
pub const NORM_TOL: f64 = 1e-6;
pub const CURVATURE_TOL: f64 = 1e-8;

/// `P(σ_j, z) = (1/π) Re(n_j/(σ_j − z))`, with the curvature limit
/// `κ_j/(2π)` when `z` is the node itself.
pub fn dl_kernel(c: &Contour, j: usize, z: Complex64) -> f64 {
    let s = c.points[j];
    if z == s {
        return c.curvature[j] / TAU;
    }
    (c.normals[j] / (s - z)).re / PI
}

/// Row-major Nyström matrix `K[i][j] = w_j P(σ_j, σ_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NpMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl NpMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    /// `max_i Σ_j |K[i][j]|`.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, phi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(phi.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(phi).map(|(k, v)| v * *k).sum())
            .collect()
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = Complex64::new(self.get(i, j), 0.0);
            }
        }
        m
    }

    /// CSV dump with a header row and 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record((0..self.n).map(|j| format!("k{j}")))?;
        for i in 0..self.n {
            out.write_record(self.row(i).iter().map(|x| format!("{x:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn np_matrix(c: &Contour) -> NpMatrix {
    let n = c.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| c.weights[j] * dl_kernel(c, j, c.points[i])).collect())
        .collect();
    NpMatrix { n, entries: rows.concat() }
}

/// Where the double-layer transform is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Interior(Complex64),
    Exterior(Complex64),
    Boundary(usize),
}

fn potential(c: &Contour, phi: &BoundarySamples, z: Complex64) -> Complex64 {
    (0..c.len()).map(|j| phi.values[j] * (c.weights[j] * dl_kernel(c, j, z))).sum()
}

/// `Σ_j w_j φ_j P(σ_j, z)` off the curve, or the Nyström row at a node.
pub fn dl_evaluate(c: &Contour, phi: &BoundarySamples, region: Region) -> Result<Complex64, DlayerError> {
    if phi.len() != c.len() {
        return Err(DlayerError::LengthMismatch { expected: c.len(), got: phi.len() });
    }
    match region {
        Region::Interior(z) | Region::Exterior(z) => {
            c.check_standoff(z)?;
            let winding = winding_sum(c, z).re.round() as i64;
            let want = if matches!(region, Region::Interior(_)) { 1 } else { 0 };
            if winding != want {
                return Err(DlayerError::RegionMismatch { z, winding });
            }
            Ok(potential(c, phi, z))
        }
        Region::Boundary(i) => {
            let s = c.points[i];
            Ok((0..c.len()).map(|j| phi.values[j] * (c.weights[j] * dl_kernel(c, j, s))).sum())
        }
    }
}

pub fn np_norm(c: &Contour) -> f64 {
    np_matrix(c).norm_inf()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityReport {
    pub is_convex: bool,
    /// `min_{i≠j} P(σ_j, σ_i)`.
    pub min_kernel: f64,
    pub np_norm: f64,
    pub min_curvature: f64,
}

/// Classifies the domain three ways (kernel sign, operator norm, curvature
/// sign) and insists they agree.
pub fn convexity_report(c: &Contour) -> Result<ConvexityReport, DlayerError> {
    let n = c.len();
    let min_kernel = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| dl_kernel(c, j, c.points[i]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let norm = np_norm(c);
    let min_curvature = c.min_curvature();
    let kernel = min_kernel >= -KERNEL_TOL;
    let by_norm = norm <= 1.0 + NORM_TOL;
    let curvature = min_curvature >= -CURVATURE_TOL;
    if kernel != by_norm || kernel != curvature {
        return Err(DlayerError::InconsistentClassification { kernel, norm: by_norm, curvature });
    }
    Ok(ConvexityReport { is_convex: kernel, min_kernel, np_norm: norm, min_curvature })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticImage {
    pub kf: BoundarySamples,
    /// `max_i |Kf_i − conj(Φ(f̄)(σ_i) + f̄_i/2)|`.
    pub antianalytic_residual: f64,
    /// `max_i |Kf_i − f(center)|` on circles.
    pub disk_residual: Option<f64>,
}

/// `K(f)` for analytic boundary data, cross-checked against the
/// conjugated interior Cauchy transform of `f̄`.
pub fn analytic_image(c: &Contour, f: &BoundarySamples) -> Result<AnalyticImage, DlayerError> {
    analytic_image_with(c, &np_matrix(c), f)
}

pub fn analytic_image_with(c: &Contour, k: &NpMatrix, f: &BoundarySamples) -> Result<AnalyticImage, DlayerError> {
    if f.len() != c.len() {
        return Err(DlayerError::LengthMismatch { expected: c.len(), got: f.len() });
    }
    let values = k.apply(&f.values);
    let fbar = f.conj(c);
    let singular = cauchy_singular_all(c, &fbar);
    let antianalytic_residual = (0..c.len())
        .map(|i| (values[i] - (singular[i] + fbar.values[i] * 0.5).conj()).norm())
        .fold(0.0, f64::max);
    let disk_residual = c.as_circle().map(|(center, _)| {
        let f_center = match &f.source {
            Some(g) => g.eval(center),
            None => f.values.iter().sum::<Complex64>() / c.len() as f64,
        };
        values.iter().map(|v| (v - f_center).norm()).fold(0.0, f64::max)
    });
    Ok(AnalyticImage { kf: BoundarySamples::from_values(values), antianalytic_residual, disk_residual })
}

/// A contour with its Nyström matrix and convexity verdict, shared by the
/// calculus-level verifiers.
#[derive(Debug, Clone)]
pub struct Domain {
    pub contour: Contour,
    pub np: NpMatrix,
    pub convexity: ConvexityReport,
}

impl Domain {
    pub fn new(contour: Contour) -> Result<Self, DlayerError> {
        let convexity = convexity_report(&contour)?;
        let np = np_matrix(&contour);
        Ok(Self { contour, np, convexity })
    }

    pub fn is_convex(&self) -> bool {
        self.convexity.is_convex
    }

    /// `K(f)` on the nodes through the cached matrix.
    pub fn k_apply(&self, f: &BoundarySamples) -> BoundarySamples {
        BoundarySamples::from_values(self.np.apply(&f.values))
    }
}

/// `½(3 + (2π d²/a)³)`.
pub fn delyon_bound(diameter: f64, area: f64) -> f64 {
    0.5 * (3.0 + (TAU * diameter * diameter / area).powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseNorm {
    pub inv_norm: f64,
    pub delyon_bound: f64,
}

/// `‖(I + K)⁻¹‖∞` next to the a-priori bound from diameter and area.
pub fn interior_inverse_norm(c: &Contour) -> Result<InverseNorm, DlayerError> {
    let mut m = np_matrix(c).to_cmatrix();
    for i in 0..c.len() {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let inv = LuFactors::new(&m).map_err(DlayerError::SingularOperator)?.inverse();
    Ok(InverseNorm { inv_norm: inv.norm_inf(), delyon_bound: delyon_bound(c.diameter(), c.area()) })
}

/// `max_i |Kⁱ(φ) − Kᵉ(φ) − 2φ|` with both one-sided limits extrapolated to
/// the boundary from `σ_i ∓ h·n_i`.
pub fn jump_residual(c: &Contour, phi: &BoundarySamples) -> f64 {
    let near = NearBoundary::new(c, phi);
    let fine = &near.fine;
    let dens: Vec<Complex64> = (0..fine.len())
        .map(|j| near.values[j] * fine.weights[j] / PI)
        .collect();
    let eval = |z: Complex64| -> Complex64 {
        (0..fine.len()).map(|j| dens[j] * (fine.normals[j] / (fine.points[j] - z)).re).sum()
    };
    let hs = &near.offsets;
    (0..c.len())
        .into_par_iter()
        .map(|i| {
            let (p, nrm) = (c.points[i], c.normals[i]);
            let inner: Vec<Complex64> = hs.iter().map(|&h| eval(p - nrm * h)).collect();
            let outer: Vec<Complex64> = hs.iter().map(|&h| eval(p + nrm * h)).collect();
            (richardson(hs, &inner) - richardson(hs, &outer) - phi.values[i] * 2.0).norm()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::Generator;
    use crate::contour::{make_contour, ContourSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(n: usize) -> Contour {
        make_contour(&ContourSpec::unit_circle(n)).unwrap()
    }

    fn ellipse(n: usize) -> Contour {
        make_contour(&ContourSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, n)).unwrap()
    }

    fn star(n: usize) -> Contour {
        make_contour(&ContourSpec::star(1.0, 0.3, 3, n)).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let k = unit(64);
        assert!((dl_kernel(&k, 0, c(0.0, 0.0)) - 1.0 / PI).abs() < 1e-15);
        assert!((dl_kernel(&k, 0, c(0.0, 1.0)) - 0.5 / PI).abs() < 1e-15);
        assert!((dl_kernel(&k, 0, c(1.0, 0.0)) - 0.5 / PI).abs() < 1e-15);
    }

    #[test]
    fn diagonal_matches_extrapolated_limit() {
        // oracle: P(σ_j, σ(h)) along the curve for shrinking h, extrapolated
        for k in [ellipse(64), star(64)] {
            for j in [0, 5, 11] {
                let t = k.param(j);
                let hs = [1e-2, 5e-3, 2.5e-3];
                let vals: Vec<Complex64> = hs
                    .iter()
                    .map(|h| c(dl_kernel(&k, j, k.family().eval(t + h).0), 0.0))
                    .collect();
                let limit = richardson(&hs, &vals).re;
                assert!((limit - dl_kernel(&k, j, k.points[j])).abs() < 1e-6, "j = {j}");
            }
        }
    }

    #[test]
    fn circle_matrix_is_uniform() {
        let k = np_matrix(&unit(64));
        assert!(k.entries().iter().all(|x| (x - 1.0 / 64.0).abs() < 1e-15));
    }

    #[test]
    fn row_sums_are_one() {
        for k in [ellipse(256), star(256)] {
            let m = np_matrix(&k);
            assert!(m.row_sums().iter().all(|s| (s - 1.0).abs() < 5e-8));
        }
    }

    #[test]
    fn star_has_negative_entries() {
        let m = np_matrix(&star(256));
        assert!(m.entries().iter().any(|&x| x < 0.0));
    }

    #[test]
    fn partition_of_unity() {
        let k = ellipse(256);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        let inside = dl_evaluate(&k, &one, Region::Interior(c(0.3, 0.2))).unwrap();
        let outside = dl_evaluate(&k, &one, Region::Exterior(c(2.5, 0.0))).unwrap();
        let on = dl_evaluate(&k, &one, Region::Boundary(7)).unwrap();
        assert!((inside - 2.0).norm() < 1e-8);
        assert!(outside.norm() < 1e-8);
        assert!((on - 1.0).norm() < 1e-8);
        assert!(matches!(
            dl_evaluate(&k, &one, Region::Interior(c(2.5, 0.0))),
            Err(DlayerError::RegionMismatch { winding: 0, .. })
        ));
    }

    #[test]
    fn convexity_examples() {
        let circle = convexity_report(&unit(256)).unwrap();
        assert!(circle.is_convex);
        assert!((circle.min_kernel - 1.0 / TAU).abs() < 1e-12);
        assert!((circle.np_norm - 1.0).abs() < 1e-12);
        let e = convexity_report(&ellipse(512)).unwrap();
        assert!(e.is_convex && (e.np_norm - 1.0).abs() < 1e-6);
        let s = convexity_report(&star(256)).unwrap();
        assert!(!s.is_convex && s.min_kernel < 0.0 && s.np_norm > 1.0);
    }

    #[test]
    fn disk_collapse() {
        let k = unit(128);
        let f = BoundarySamples::from_generator(&k, &Generator::polynomial(vec![c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
        let img = analytic_image(&k, &f).unwrap();
        assert!(img.kf.values.iter().all(|v| (v - 2.0).norm() < 1e-12));
        assert!(img.disk_residual.unwrap() < 1e-12);
        for deg in 1..5 {
            let f = BoundarySamples::from_generator(&k, &Generator::monomial(deg));
            assert!(analytic_image(&k, &f).unwrap().kf.node_sup() < 1e-12);
        }
    }

    #[test]
    fn ellipse_image_two_routes_agree() {
        let k = ellipse(256);
        let f = BoundarySamples::from_generator(&k, &Generator::monomial(2));
        let img = analytic_image(&k, &f).unwrap();
        assert!(img.antianalytic_residual <= 1e-6);
        assert!(img.disk_residual.is_none());
        // closed form K(z²) = conj(z²/9 + 4/3) on the ellipse with foci ±√3
        for (v, z) in img.kf.values.iter().zip(&k.points) {
            assert!((v - (z * z / 9.0 + 4.0 / 3.0).conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn disk_inverse_norm() {
        let r = interior_inverse_norm(&unit(256)).unwrap();
        // (I + K)⁻¹ = I − K/2 when K is the averaging projection
        assert!((r.inv_norm - (1.5 - 1.0 / 256.0)).abs() < 1e-10);
        assert!((r.delyon_bound - 257.5).abs() < 1e-9);
        let e = interior_inverse_norm(&ellipse(256)).unwrap();
        assert!(e.inv_norm <= e.delyon_bound);
    }

    #[test]
    fn jump_of_double_layer() {
        let k = star(256);
        let f = BoundarySamples::from_generator(&k, &Generator::polynomial(vec![c(0.5, 0.0), c(0.0, 1.0), c(0.3, 0.0)]));
        assert!(jump_residual(&k, &f) < 1e-5);
    }

    #[test]
    fn csv_round_trip() {
        let m = np_matrix(&unit(32));
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("k0,k1"));
        let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(first.len(), 32);
        assert_eq!(first[3], m.get(0, 3));
    }
}
