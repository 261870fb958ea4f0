//! Mapping theorems for the analytic calculus on convex domains: numerical
//! range of `γ(f)` for kernel functions, the norm-2 bound, the teardrop
//! region on disks, and the two triangle-inequality estimates.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{gamma_values, inclusion_unchecked, nrange_support, periodic_min, CalculusError, MatrixOperand, SUPPORT_ANGLES};
use crate::cauchy::{cauchy_interior, sup_norm, BoundarySamples, CauchyError, Generator, Poly};
use crate::contour::Contour;
use crate::dlayer::{Domain, DlayerError};
use crate::linalg::{CMatrix, LinalgError};
use crate::random::{random_coeffs, scaled_matrix, stream_rng};
use rand::Rng;

pub const KERNEL_TOL: f64 = 1e-6;
pub const ASSERT_TOL: f64 = 1e-6;
pub const UNIT_TOL: f64 = 1e-9;
/// Angles in the first numerical-radius sweep; a second sweep doubles it.
pub const RADIUS_ANGLES: usize = 720;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MappingError {
    #[error("hypothesis violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("{check} failed: {value} exceeds {bound}")]
    AssertionFailed { check: &'static str, value: f64, bound: f64 },
    #[error("polynomial vanishes identically")]
    ZeroFunction,
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Dlayer(#[from] DlayerError),
    #[error(transparent)]
    Cauchy(#[from] CauchyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Samples of `p / sup_{∂Ω}|p|`.
pub fn normalize_unit_ball(c: &Contour, p: &Poly) -> Result<BoundarySamples, MappingError> {
    if p.is_zero() {
        return Err(MappingError::ZeroFunction);
    }
    let f = BoundarySamples::from_generator(c, &Generator::Polynomial(p.clone()));
    let s = sup_norm(c, &f);
    Ok(f.scale(Complex64::new(1.0 / s, 0.0)))
}

/// `max_θ λ_max(Re(e^{-iθ} M))`: a 720-angle sweep and its doubling, each
/// refined by golden section.
pub fn numerical_radius(m: &CMatrix) -> f64 {
    let neg = |t: f64| -nrange_support(m, t).unwrap_or(f64::NEG_INFINITY);
    let a = -periodic_min(neg, RADIUS_ANGLES);
    let b = -periodic_min(neg, 2 * RADIUS_ANGLES);
    a.max(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MappingReport {
    /// `‖K(f)‖∞` on the nodes.
    pub kernel_residual: f64,
    pub numerical_radius: f64,
    /// `‖γ(f)‖`.
    pub okubo_norm: f64,
    pub teardrop_slack: Option<f64>,
    pub crouzeix07_slack: f64,
    pub rs18_slack: f64,
    /// Whether the radius and norm bounds were asserted (kernel functions only).
    pub asserted: bool,
}

fn check_hypotheses(domain: &Domain, op: &MatrixOperand, f: &BoundarySamples, exact_unit: bool) -> Result<(), MappingError> {
    let mut failed = Vec::new();
    if op.contour().len() != domain.contour.len() || f.len() != domain.contour.len() {
        failed.push("operand, domain and samples must share the node set".to_string());
    }
    if !domain.is_convex() {
        failed.push("domain is not convex".to_string());
    } else if !inclusion_unchecked(op, SUPPORT_ANGLES)?.included {
        failed.push("numerical range is not contained in the closed domain".to_string());
    }
    let s = sup_norm(&domain.contour, f);
    if exact_unit && (s - 1.0).abs() > UNIT_TOL {
        failed.push(format!("sup norm of f is {s}, expected 1"));
    }
    if !exact_unit && s > 1.0 + UNIT_TOL {
        failed.push(format!("sup norm of f is {s}, expected at most 1"));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(MappingError::HypothesisViolated(failed))
    }
}

fn assert_le(check: &'static str, value: f64, bound: f64) -> Result<(), MappingError> {
    if value > bound {
        return Err(MappingError::AssertionFailed { check, value, bound });
    }
    Ok(())
}

/// For `f` in the unit ball with `K(f) = 0` (up to 1e-6): `W(γ(f)) ⊆ 𝔻⁻`
/// and `‖γ(f)‖ ≤ 2`. Other `f` are only reported.
pub fn putinar_sandberg_verify(domain: &Domain, op: &MatrixOperand, f: &BoundarySamples) -> Result<MappingReport, MappingError> {
    check_hypotheses(domain, op, f, true)?;
    let kf = domain.k_apply(f);
    let kernel_residual = kf.node_sup();
    let g = gamma_values(op, &f.values);
    let radius = numerical_radius(&g);
    let norm = g.spectral_norm()?;
    let asserted = kernel_residual <= KERNEL_TOL;
    if asserted {
        assert_le("numerical radius", radius, 1.0 + ASSERT_TOL)?;
        assert_le("norm", norm, 2.0 + ASSERT_TOL)?;
    }
    let (c07, rs18) = inequality_slacks(op, f, &kf, norm)?;
    let teardrop_slack = match domain.contour.as_circle() {
        Some(_) => Some(teardrop_slack(domain, f, &g)?),
        None => None,
    };
    Ok(MappingReport {
        kernel_residual,
        numerical_radius: radius,
        okubo_norm: norm,
        teardrop_slack,
        crouzeix07_slack: c07,
        rs18_slack: rs18,
        asserted,
    })
}

/// Teardrop support `max(1, Re(e^{-iθ} a) + 1 − |a|²)` for `a = f(center)`.
pub fn teardrop_support(a: Complex64, theta: f64) -> f64 {
    let shifted = (Complex64::from_polar(1.0, -theta) * a).re + 1.0 - a.norm_sqr();
    shifted.max(1.0)
}

fn teardrop_slack(domain: &Domain, f: &BoundarySamples, g: &CMatrix) -> Result<f64, MappingError> {
    let (center, _) = domain.contour.as_circle().expect("circle checked by caller");
    let a = cauchy_interior(&domain.contour, f, center)?;
    Ok(periodic_min(
        |t| teardrop_support(a, t) - nrange_support(g, t).unwrap_or(f64::INFINITY),
        RADIUS_ANGLES,
    ))
}

/// On a disk: `W(γ(f))` lies in the convex hull of the unit disk and the
/// disk about `f(center)` of radius `1 − |f(center)|²`. Returns the support
/// slack, asserted ≥ −1e-6.
pub fn drury_teardrop_verify(domain: &Domain, op: &MatrixOperand, f: &BoundarySamples) -> Result<f64, MappingError> {
    if domain.contour.as_circle().is_none() {
        return Err(MappingError::HypothesisViolated(vec!["teardrop region needs a disk domain".into()]));
    }
    check_hypotheses(domain, op, f, true)?;
    let g = gamma_values(op, &f.values);
    let slack = teardrop_slack(domain, f, &g)?;
    assert_le("teardrop containment", -slack, ASSERT_TOL)?;
    Ok(slack)
}

fn inequality_slacks(op: &MatrixOperand, f: &BoundarySamples, kf: &BoundarySamples, g: f64) -> Result<(f64, f64), MappingError> {
    let conj_kf: Vec<Complex64> = kf.values.iter().map(|v| v.conj()).collect();
    let c07 = 2.0 + gamma_values(op, &conj_kf).spectral_norm()? - g;
    let h: Vec<Complex64> = (0..f.len()).map(|j| f.values[j] * conj_kf[j] * f.values[j]).collect();
    let gh = gamma_values(op, &h).spectral_norm()?;
    let rs18 = 2.0 * g.powi(3) + gh * g - g.powi(4);
    Ok((c07, rs18))
}

/// Slacks of `‖γ(f)‖ ≤ 2 + ‖γ(K(f)*)‖` and
/// `‖γ(f)‖⁴ ≤ 2‖γ(f)‖³ + ‖γ(f K(f)* f)‖ ‖γ(f)‖`, both asserted ≥ −1e-6.
pub fn calc_inequalities(domain: &Domain, op: &MatrixOperand, f: &BoundarySamples) -> Result<(f64, f64), MappingError> {
    check_hypotheses(domain, op, f, false)?;
    let kf = domain.k_apply(f);
    let g = gamma_values(op, &f.values).spectral_norm()?;
    let (c07, rs18) = inequality_slacks(op, f, &kf, g)?;
    assert_le("crouzeix07", -c07, ASSERT_TOL)?;
    assert_le("rs18", -rs18, ASSERT_TOL)?;
    Ok((c07, rs18))
}

/// Random trial settings for the mapping ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleConfig {
    pub trials: usize,
    pub min_dim: usize,
    pub max_dim: usize,
    pub degree: usize,
    pub seed: u64,
    /// Force `f(center) = 0` so that `K(f) = 0` on disks.
    pub vanish_at_center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub dim: usize,
    pub degree: usize,
    pub kernel_residual: f64,
    pub numerical_radius: f64,
    pub okubo_norm: f64,
    pub teardrop_slack: Option<f64>,
    pub crouzeix07_slack: f64,
    pub rs18_slack: f64,
}

/// One seeded trial: a random operand with `W(A)` strictly inside, and a
/// random normalized polynomial.
pub fn ensemble_trial(domain: &Domain, cfg: &EnsembleConfig, trial: usize) -> Result<TrialRow, MappingError> {
    let mut rng = stream_rng(cfg.seed, trial as u64);
    let dim = rng.random_range(cfg.min_dim..=cfg.max_dim);
    let factor = rng.random_range(0.3..0.999);
    let a = scaled_matrix(&mut rng, &domain.contour, dim, factor, 0.8);
    let op = MatrixOperand::new(a, &domain.contour)?;
    let center = domain.contour.as_circle().map(|(c, _)| c).unwrap_or_else(|| domain.contour.centroid());
    let mut coeffs = random_coeffs(&mut rng, cfg.degree);
    if cfg.vanish_at_center {
        coeffs[0] = Complex64::new(0.0, 0.0);
    }
    if coeffs.iter().all(|c| c.norm() == 0.0) {
        coeffs.push(Complex64::new(1.0, 0.0));
    }
    let f = normalize_unit_ball(&domain.contour, &Poly::centered(center, coeffs))?;
    let r = putinar_sandberg_verify(domain, &op, &f)?;
    Ok(TrialRow {
        trial,
        seed: cfg.seed,
        dim,
        degree: cfg.degree,
        kernel_residual: r.kernel_residual,
        numerical_radius: r.numerical_radius,
        okubo_norm: r.okubo_norm,
        teardrop_slack: r.teardrop_slack,
        crouzeix07_slack: r.crouzeix07_slack,
        rs18_slack: r.rs18_slack,
    })
}

/// All trials, merged in trial order.
pub fn run_ensemble(domain: &Domain, cfg: &EnsembleConfig) -> Vec<Result<TrialRow, MappingError>> {
    (0..cfg.trials).into_par_iter().map(|t| ensemble_trial(domain, cfg, t)).collect()
}

/// Ensemble table as CSV, 17 significant digits.
pub fn write_ensemble_csv<W: Write>(rows: &[TrialRow], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "trial",
        "seed",
        "dim",
        "degree",
        "kernel_residual",
        "numerical_radius",
        "okubo_norm",
        "teardrop_slack",
        "crouzeix07_slack",
        "rs18_slack",
    ])?;
    let g = |x: f64| format!("{x:.16e}");
    for r in rows {
        out.write_record([
            r.trial.to_string(),
            r.seed.to_string(),
            r.dim.to_string(),
            r.degree.to_string(),
            g(r.kernel_residual),
            g(r.numerical_radius),
            g(r.okubo_norm),
            r.teardrop_slack.map(g).unwrap_or_default(),
            g(r.crouzeix07_slack),
            g(r.rs18_slack),
        ])?;
    }
    out.flush()?;
    Ok(())
}
