//! Extremal-pair search for the analytic calculus, the pairing `ρ(f₀, x₀)`
//! and the spectral-constant bounds derived from it.

use std::f64::consts::{SQRT_2, TAU};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{gamma_values, inclusion_unchecked, CalculusError, MatrixOperand, SUPPORT_ANGLES};
use crate::cauchy::{BoundarySamples, Generator, Poly};
use crate::contour::Contour;
use crate::dlayer::Domain;
use crate::geometry::min_enclosing_circle;
use crate::linalg::{hermitian_eigen, inner, top_singular, CMatrix, HermitianMatrix, LinalgError};
use crate::mapping::normalize_unit_ball;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::random::{random_coeffs, stream_rng};

pub const MAX_DEGREE: usize = 16;
pub const BOUND_TOL: f64 = 1e-6;
/// Improvement over the affine start below which a search counts as stalled.
pub const STALL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExtremalError {
    #[error("hypothesis violated: {}", .0.join("; "))]
    HypothesisViolated(Vec<String>),
    #[error("bound {check} violated with slack {slack:e}")]
    BoundViolated { check: &'static str, slack: f64 },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalResult {
    #[serde(skip)]
    pub f0: BoundarySamples,
    /// Coefficients of `f₀` in powers of `z − center`.
    pub coeffs: Vec<Complex64>,
    pub center: Complex64,
    pub x0: Vec<Complex64>,
    /// `‖γ(f₀)‖`.
    pub gamma_lb: f64,
    pub rho: f64,
    /// `1 + √(1 − ρ)`.
    pub bound: f64,
    /// `⟨γ(f₀)x₀, x₀⟩`.
    pub pairing: Complex64,
    pub degree: usize,
    pub restarts: usize,
    pub seed: u64,
    /// No restart beat the affine start by more than 1e-12.
    pub stalled: bool,
    pub np_norm: f64,
    pub disk: bool,
    #[serde(skip)]
    pub trace: Vec<(usize, f64)>,
}

/// Sup of a centered polynomial over the continuous boundary: an `8N`
/// parameter grid, then golden-section refinement of the top peaks.
struct PolySup<'a> {
    contour: &'a Contour,
    center: Complex64,
    grid: Vec<Complex64>,
}

impl<'a> PolySup<'a> {
    fn new(contour: &'a Contour, center: Complex64) -> Self {
        let m = 8 * contour.len();
        let grid = (0..m).map(|j| contour.family().eval(TAU * j as f64 / m as f64).0 - center).collect();
        Self { contour, center, grid }
    }

    fn eval(a: &[Complex64], w: Complex64) -> Complex64 {
        a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c)
    }

    fn sup(&self, a: &[Complex64]) -> f64 {
        let m = self.grid.len();
        let vals: Vec<f64> = self.grid.iter().map(|&w| Self::eval(a, w).norm()).collect();
        let mut peaks: Vec<usize> = (0..m)
            .filter(|&j| vals[j] >= vals[(j + m - 1) % m] && vals[j] >= vals[(j + 1) % m])
            .collect();
        peaks.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
        peaks.truncate(3);
        let step = TAU / m as f64;
        let mut best = vals.iter().copied().fold(0.0, f64::max);
        for j in peaks {
            let f = |t: f64| Self::eval(a, self.contour.family().eval(t).0 - self.center).norm();
            let t0 = step * j as f64;
            best = best.max(golden_max(f, t0 - step, t0 + step));
        }
        best
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    -crate::calculus::golden_min(|t| -f(t), a, b, 1e-12).1
}

fn unpack(x: &[f64], degree: usize) -> Vec<Complex64> {
    let mut a: Vec<Complex64> = (0..degree).map(|k| Complex64::new(x[2 * k], x[2 * k + 1])).collect();
    a.push(Complex64::new(x[2 * degree], 0.0));
    a
}

fn pack(a: &[Complex64]) -> Vec<f64> {
    let degree = a.len() - 1;
    // rotate so the leading coefficient is real and nonnegative
    let lead = a[degree];
    let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { Complex64::new(1.0, 0.0) };
    let mut x = Vec::with_capacity(2 * degree + 1);
    for c in &a[..degree] {
        let r = c * phase;
        x.push(r.re);
        x.push(r.im);
    }
    x.push((lead * phase).re);
    x
}

fn combine(moments: &[CMatrix], a: &[Complex64]) -> CMatrix {
    let mut out = CMatrix::zeros(moments[0].dim());
    for (m, c) in moments.iter().zip(a) {
        out.axpy(*c, m);
    }
    out
}

fn check_hypotheses(domain: &Domain, op: &MatrixOperand) -> Result<(), ExtremalError> {
    let mut failed = Vec::new();
    if op.contour().len() != domain.contour.len() {
        failed.push("operand and domain must share the node set".to_string());
    }
    if !domain.is_convex() {
        failed.push("domain is not convex".to_string());
    } else if !inclusion_unchecked(op, SUPPORT_ANGLES)?.included {
        failed.push("numerical range is not contained in the closed domain".to_string());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(ExtremalError::HypothesisViolated(failed))
    }
}

struct Run {
    value: f64,
    coeffs: Vec<Complex64>,
    trace: Vec<(usize, f64)>,
}

/// Maximizes `‖γ(p)‖ / sup_{∂Ω}|p|` over polynomials of the given degree by
/// Nelder–Mead, from the affine start `z − centroid` and `restarts` random
/// starts, each re-polished at two smaller simplex sizes.
pub fn search_extremal(
    domain: &Domain,
    op: &MatrixOperand,
    degree: usize,
    restarts: usize,
    seed: u64,
) -> Result<ExtremalResult, ExtremalError> {
    let mut bad = Vec::new();
    if degree > MAX_DEGREE {
        bad.push(format!("degree {degree} exceeds {MAX_DEGREE}"));
    }
    if restarts == 0 {
        bad.push("at least one restart is required".to_string());
    }
    if !bad.is_empty() {
        return Err(ExtremalError::HypothesisViolated(bad));
    }
    check_hypotheses(domain, op)?;
    let c = &domain.contour;
    let center = c.as_circle().map(|(z, _)| z).unwrap_or_else(|| c.centroid());
    let moments: Vec<CMatrix> = (0..=degree)
        .map(|k| {
            let vals: Vec<Complex64> = c.points.iter().map(|z| (z - center).powu(k as u32)).collect();
            gamma_values(op, &vals)
        })
        .collect();
    let sup = PolySup::new(c, center);
    let objective = |x: &[f64]| -> f64 {
        let a = unpack(x, degree);
        let s = sup.sup(&a);
        if s <= 1e-300 {
            return 0.0;
        }
        let g = combine(&moments, &a).spectral_norm().unwrap_or(0.0);
        -g / s
    };

    let mut affine = vec![Complex64::new(0.0, 0.0); degree + 1];
    affine[degree.min(1)] = Complex64::new(1.0, 0.0);
    let affine_value = -objective(&pack(&affine));

    let opts = NelderMeadOptions { step: 0.25, max_evals: 3000 * (degree + 1), ftol: 1e-15, xtol: 1e-11 };
    let runs: Vec<Run> = (0..=restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                affine.clone()
            } else {
                random_coeffs(&mut stream_rng(seed, r as u64), degree)
            };
            if degree == 0 {
                return Run { value: -objective(&pack(&start)), coeffs: start, trace: vec![] };
            }
            let res = nelder_mead(objective, &pack(&start), &opts);
            let mut x = res.x;
            let mut value = res.value;
            let mut trace = res.trace;
            // polish every run so that adding restarts can only raise the best
            for step in [0.05, 0.01] {
                let polish = nelder_mead(objective, &x, &NelderMeadOptions { step, ..opts });
                let offset = trace.last().map(|t| t.0).unwrap_or(0);
                trace.extend(polish.trace.iter().map(|(e, v)| (e + offset, *v)));
                if polish.value < value {
                    x = polish.x;
                    value = polish.value;
                }
            }
            Run { value: -value, coeffs: unpack(&x, degree), trace }
        })
        .collect();
    // best value, earliest restart on ties
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, r)| if r.value > runs[b].value { i } else { b });
    let stalled = runs[best].value <= affine_value + STALL_TOL;
    let coeffs = runs[best].coeffs.clone();
    let trace = runs[best].trace.clone();
    let trace: Vec<(usize, f64)> = trace.into_iter().map(|(e, v)| (e, v.abs())).collect();

    let s = sup.sup(&coeffs);
    let coeffs: Vec<Complex64> = coeffs.iter().map(|a| a / s).collect();
    let poly = Poly::centered(center, coeffs.clone());
    let f0 = normalize_unit_ball(c, &poly).map_err(|e| ExtremalError::HypothesisViolated(vec![e.to_string()]))?;
    let g = gamma_values(op, &f0.values);
    let gamma_lb = g.spectral_norm()?;
    let x0 = extremal_vector(&g, seed)?;
    let rho = rho_of(domain, op, &f0, &x0)?;
    let pairing = inner(&g.matvec(&x0), &x0);
    Ok(ExtremalResult {
        f0,
        coeffs,
        center,
        x0,
        gamma_lb,
        rho,
        bound: 1.0 + (1.0 - rho).max(0.0).sqrt(),
        pairing,
        degree,
        restarts,
        seed,
        stalled,
        np_norm: domain.convexity.np_norm,
        disk: c.as_circle().is_some(),
        trace,
    })
}

/// Unit right-singular vector for the top singular value: power iteration,
/// falling back to the Jacobi eigenvector of `M*M`.
fn extremal_vector(g: &CMatrix, seed: u64) -> Result<Vec<Complex64>, ExtremalError> {
    match top_singular(g, seed) {
        Ok(t) => Ok(t.vector),
        Err(LinalgError::ZeroMatrix) => {
            let mut e = vec![Complex64::new(0.0, 0.0); g.dim()];
            e[0] = Complex64::new(1.0, 0.0);
            Ok(e)
        }
        Err(_) => {
            let eig = hermitian_eigen(&HermitianMatrix::gram(g))?;
            Ok(eig.vector(g.dim() - 1))
        }
    }
}

/// `ρ(f₀, x₀) = Re⟨γ(conj(K f₀)·f₀) x₀, x₀⟩`.
pub fn rho_of(domain: &Domain, op: &MatrixOperand, f0: &BoundarySamples, x0: &[Complex64]) -> Result<f64, ExtremalError> {
    let mut bad = Vec::new();
    let norm_x = x0.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if (norm_x - 1.0).abs() > 1e-12 {
        bad.push(format!("|x0| = {norm_x}, expected 1"));
    }
    let s = crate::cauchy::sup_norm(&domain.contour, f0);
    if (s - 1.0).abs() > 1e-9 {
        bad.push(format!("sup norm of f0 is {s}, expected 1"));
    }
    if x0.len() != op.dim() || f0.len() != domain.contour.len() {
        bad.push("dimension mismatch".to_string());
    }
    if !bad.is_empty() {
        return Err(ExtremalError::HypothesisViolated(bad));
    }
    let kf = domain.k_apply(f0);
    let h: Vec<Complex64> = kf.values.iter().zip(&f0.values).map(|(k, f)| k.conj() * f).collect();
    let gh = gamma_values(op, &h);
    Ok(inner(&gh.matvec(x0), x0).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// `1 + √(1 − ρ) − gamma_lb`.
    pub slack_rho_bound: f64,
    /// `1 + √2 − gamma_lb`.
    pub slack_cp: f64,
    /// `2 − gamma_lb` on disks.
    pub slack_disk: Option<f64>,
    /// `(gamma_lb − 1)·|pairing|`, reported only.
    pub measure_residual: f64,
}

/// Checks the spectral-constant bounds implied by a search result.
pub fn bound_check(r: &ExtremalResult) -> Result<BoundCheck, ExtremalError> {
    let slack_rho_bound = r.bound - r.gamma_lb;
    let slack_cp = 1.0 + SQRT_2 - r.gamma_lb;
    let slack_disk = r.disk.then(|| 2.0 - r.gamma_lb);
    let measure_residual = (r.gamma_lb - 1.0) * r.pairing.norm();
    if slack_rho_bound < -BOUND_TOL {
        return Err(ExtremalError::BoundViolated { check: "1 + sqrt(1 - rho)", slack: slack_rho_bound });
    }
    if slack_cp < -BOUND_TOL {
        return Err(ExtremalError::BoundViolated { check: "1 + sqrt(2)", slack: slack_cp });
    }
    if let Some(s) = slack_disk {
        if s < -BOUND_TOL {
            return Err(ExtremalError::BoundViolated { check: "disk constant 2", slack: s });
        }
    }
    Ok(BoundCheck { slack_rho_bound, slack_cp, slack_disk, measure_residual })
}

/// Empirical sample of the analytic configuration: for each seeded random
/// normalized polynomial `f`, the Chebyshev radius of the boundary range of
/// `K(f)`, maximized over the samples.
pub fn analytic_config_lower(domain: &Domain, degree: usize, samples: usize, seed: u64) -> f64 {
    let c = &domain.contour;
    let center = c.centroid();
    (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let mut coeffs = random_coeffs(&mut rng, degree);
            if coeffs.iter().all(|a| a.norm() == 0.0) {
                coeffs[0] = Complex64::new(1.0, 0.0);
            }
            let f = normalize_unit_ball(c, &Poly::centered(center, coeffs)).expect("nonzero polynomial");
            let kf = domain.k_apply(&f);
            min_enclosing_circle(&kf.values, s as u64).radius
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// Optimizer trace as CSV `(evaluation, value)`.
pub fn write_trace_csv<W: Write>(trace: &[(usize, f64)], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["evaluation", "value"])?;
    for (e, v) in trace {
        out.write_record([e.to_string(), format!("{v:.16e}")])?;
    }
    out.flush()?;
    Ok(())
}

/// Samples of `f` given centered coefficients, for callers holding only
/// the coefficient vector.
pub fn samples_from_coeffs(c: &Contour, center: Complex64, coeffs: &[Complex64]) -> BoundarySamples {
    BoundarySamples::from_generator(c, &Generator::Polynomial(Poly::centered(center, coeffs.to_vec())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{make_contour, ContourSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn domain(spec: ContourSpec) -> Domain {
        Domain::new(make_contour(&spec).unwrap()).unwrap()
    }

    fn nilpotent(x: f64) -> CMatrix {
        CMatrix::from_real_rows(&[vec![0.0, x], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn nilpotent_disk() {
        let d = domain(ContourSpec::unit_circle(256));
        let op = MatrixOperand::new(nilpotent(2.0), &d.contour).unwrap();
        let r = search_extremal(&d, &op, 3, 8, 1).unwrap();
        assert!((r.gamma_lb - 2.0).abs() < 1e-6, "{}", r.gamma_lb);
        assert!(r.rho.abs() < 1e-4, "{}", r.rho);
        assert!(r.x0[1].norm() > 1.0 - 1e-6);
        let b = bound_check(&r).unwrap();
        assert!(b.slack_rho_bound.abs() < 1e-4);
        assert!((b.slack_cp - (SQRT_2 - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn normal_matrix_has_constant_one() {
        let d = domain(ContourSpec::unit_circle(256));
        let op = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.5, 0.0), c(-0.5, 0.0)]), &d.contour).unwrap();
        let r = search_extremal(&d, &op, 3, 4, 2).unwrap();
        assert!((r.gamma_lb - 1.0).abs() < 1e-6, "{}", r.gamma_lb);
        assert!((bound_check(&r).unwrap().slack_cp - SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn small_disk_nilpotent() {
        let d = domain(ContourSpec::circle(c(0.0, 0.0), 0.5, 256));
        let op = MatrixOperand::new(nilpotent(1.0), &d.contour).unwrap();
        let r = search_extremal(&d, &op, 3, 4, 3).unwrap();
        assert!((r.gamma_lb - 2.0).abs() < 1e-4);
    }

    #[test]
    fn rho_examples() {
        let d = domain(ContourSpec::unit_circle(256));
        let op = MatrixOperand::new(nilpotent(2.0), &d.contour).unwrap();
        let x = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let z = BoundarySamples::from_generator(&d.contour, &Generator::monomial(1));
        assert!(rho_of(&d, &op, &z, &x).unwrap().abs() < 1e-12);
        let one = BoundarySamples::constant(&d.contour, c(1.0, 0.0));
        assert!((rho_of(&d, &op, &one, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_scalar_on_ellipse() {
        let d = domain(ContourSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, 256));
        let op = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.3, 0.0)]), &d.contour).unwrap();
        let f = BoundarySamples::from_generator(&d.contour, &Generator::polynomial(vec![c(0.0, 0.0), c(0.5, 0.0)]));
        // K(z) = conj(z)/3, so h = |z|²/6 on the boundary, analytic extension z²/12
        let rho = rho_of(&d, &op, &f, &[c(1.0, 0.0)]).unwrap();
        assert!((rho - 0.0075).abs() < 1e-10, "{rho}");
    }

    #[test]
    fn bound_violation_is_reported() {
        let d = domain(ContourSpec::unit_circle(64));
        let op = MatrixOperand::new(nilpotent(2.0), &d.contour).unwrap();
        let mut r = search_extremal(&d, &op, 1, 1, 0).unwrap();
        r.gamma_lb = 2.5;
        assert!(matches!(bound_check(&r), Err(ExtremalError::BoundViolated { .. })));
    }

    #[test]
    fn config_estimates() {
        let disk = domain(ContourSpec::unit_circle(256));
        assert!(analytic_config_lower(&disk, 4, 20, 5) < 1e-8);
        let e = domain(ContourSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, 256));
        assert!(analytic_config_lower(&e, 0, 10, 5) < 1e-12);
        let a = analytic_config_lower(&e, 6, 50, 5);
        assert!(a > 0.0 && a < 1.0, "{a}");
    }

    #[test]
    fn trace_csv_has_header() {
        let mut buf = Vec::new();
        write_trace_csv(&[(3, 1.5)], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("evaluation,value\n3,1.5"));
    }
}
