//! Matrix-valued contour integrals: the analytic calculus `γ`, its harmonic
//! extension `γ̂`, the operator double-layer potential `P(σ, A)` and the
//! numerical-range inclusion tests.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cauchy::BoundarySamples;
use crate::contour::Contour;
use crate::dlayer::{convexity_report, DlayerError};
use crate::linalg::{hermitian_eigen, CMatrix, HermitianMatrix, LinalgError, LuFactors};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest allowed distance of the argument-principle sum from an integer.
pub const COUNT_TOL: f64 = 1e-6;
pub const INCLUSION_EIG_TOL: f64 = 1e-8;
pub const INCLUSION_SUPPORT_TOL: f64 = 1e-6;
pub const DECOMPOSITION_TOL: f64 = 1e-7;
/// Angles in the numerical-range support sweep.
pub const SUPPORT_ANGLES: usize = 360;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalculusError {
    #[error("resolvent is singular at node {node}: {source}")]
    ResolventSingular { node: usize, source: LinalgError },
    #[error("argument-principle count {0} is not within 1e-6 of an integer; refine the contour")]
    NonIntegerCount(Complex64),
    #[error("only {inside} of {dim} eigenvalues lie inside the contour")]
    SpectrumOutside { inside: i64, dim: usize },
    #[error("domain is not convex")]
    NonConvexDomain,
    #[error("kernel test says {kernel}, support test says {support} (min eigenvalue {min_eig:e}, slack {slack:e})")]
    InconsistentInclusion { kernel: bool, support: bool, min_eig: f64, slack: f64 },
    #[error("decomposition mismatch {0:e} exceeds 1e-7")]
    DecompositionMismatch(f64),
    #[error("boundary samples have length {got}, contour has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Dlayer(#[from] DlayerError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn resolvents(a: &CMatrix, c: &Contour) -> Result<Vec<CMatrix>, CalculusError> {
    let n = a.dim();
    (0..c.len())
        .into_par_iter()
        .map(|j| {
            let mut m = a.scale(Complex64::new(-1.0, 0.0));
            for k in 0..n {
                m[(k, k)] += c.points[j];
            }
            LuFactors::new(&m)
                .map(|lu| lu.inverse())
                .map_err(|source| CalculusError::ResolventSingular { node: j, source })
        })
        .collect()
}

fn count_from(c: &Contour, rs: &[CMatrix]) -> Result<i64, CalculusError> {
    let s: Complex64 = rs.iter().enumerate().map(|(j, r)| c.dsigma(j) * r.trace()).sum::<Complex64>() / (TAU * I);
    let rounded = s.re.round();
    if (s - rounded).norm() > COUNT_TOL {
        return Err(CalculusError::NonIntegerCount(s));
    }
    Ok(rounded as i64)
}

/// Number of eigenvalues inside the contour, `(1/2πi) ∮ tr (σ − A)⁻¹ dσ`.
pub fn spectrum_inside_count(a: &CMatrix, c: &Contour) -> Result<i64, CalculusError> {
    count_from(c, &resolvents(a, c)?)
}

/// A matrix whose spectrum is certified inside a contour, with the nodal
/// resolvents `R_j = (σ_j − A)⁻¹` cached.
#[derive(Debug, Clone)]
pub struct MatrixOperand {
    a: CMatrix,
    contour: Contour,
    resolvents: Vec<CMatrix>,
    inside_count: usize,
}

impl MatrixOperand {
    pub fn new(a: CMatrix, contour: &Contour) -> Result<Self, CalculusError> {
        let resolvents = resolvents(&a, contour)?;
        let inside = count_from(contour, &resolvents)?;
        if inside != a.dim() as i64 {
            return Err(CalculusError::SpectrumOutside { inside, dim: a.dim() });
        }
        Ok(Self { inside_count: a.dim(), a, contour: contour.clone(), resolvents })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    pub fn resolvent(&self, j: usize) -> &CMatrix {
        &self.resolvents[j]
    }

    fn check(&self, f: &BoundarySamples) -> Result<(), CalculusError> {
        if f.len() != self.contour.len() {
            return Err(CalculusError::LengthMismatch { expected: self.contour.len(), got: f.len() });
        }
        Ok(())
    }
}

/// `γ(f) = (1/2πi) Σ_j f_j R_j σ'_j (2π/N)`, summed in node order.
pub fn gamma_apply(op: &MatrixOperand, f: &BoundarySamples) -> Result<CMatrix, CalculusError> {
    op.check(f)?;
    Ok(gamma_values(op, &f.values))
}

pub(crate) fn gamma_values(op: &MatrixOperand, values: &[Complex64]) -> CMatrix {
    let c = &op.contour;
    let mut out = CMatrix::zeros(op.dim());
    for (j, r) in op.resolvents.iter().enumerate() {
        out.axpy(c.dsigma(j) * values[j] / (TAU * I), r);
    }
    out
}

/// `γ̂(f + ḡ) = γ(f) + γ(g)*`.
pub fn hat_gamma_apply(op: &MatrixOperand, f: &BoundarySamples, g: &BoundarySamples) -> Result<CMatrix, CalculusError> {
    let gf = gamma_apply(op, f)?;
    let gg = gamma_apply(op, g)?;
    Ok(&gf + &gg.adjoint())
}

/// `P(σ_j, A) = (1/2π)(n_j R_j + (n_j R_j)*)`.
pub fn op_dl_potential(op: &MatrixOperand, j: usize) -> HermitianMatrix {
    let nr = op.resolvents[j].scale(op.contour.normals[j]);
    let sum = (&nr + &nr.adjoint()).scale(Complex64::new(1.0 / TAU, 0.0));
    HermitianMatrix::new(sum).expect("Hermitian by construction")
}

/// `Σ_j w_j φ_j P(σ_j, A)`, the symmetrized calculus `γ̂∘Kⁱ` applied to φ.
pub fn sym_calculus_apply(op: &MatrixOperand, phi: &BoundarySamples) -> Result<CMatrix, CalculusError> {
    op.check(phi)?;
    let c = &op.contour;
    let mut out = CMatrix::zeros(op.dim());
    for j in 0..c.len() {
        let p = op_dl_potential(op, j);
        out.axpy(phi.values[j] * c.weights[j], p.as_matrix());
    }
    Ok(out)
}

/// For analytic `f` with boundary image `kf = K(f)`: the symmetrized
/// calculus together with its Frobenius distance from `γ(conj Kf)* + γ(f)`.
pub fn sym_calculus_analytic(
    op: &MatrixOperand,
    f: &BoundarySamples,
    kf: &BoundarySamples,
) -> Result<(CMatrix, f64), CalculusError> {
    let sym = sym_calculus_apply(op, f)?;
    op.check(kf)?;
    let conj_kf: Vec<Complex64> = kf.values.iter().map(|v| v.conj()).collect();
    let other = &gamma_values(op, &conj_kf).adjoint() + &gamma_values(op, &f.values);
    let mismatch = (&sym - &other).norm_fro();
    if mismatch > DECOMPOSITION_TOL {
        return Err(CalculusError::DecompositionMismatch(mismatch));
    }
    Ok((sym, mismatch))
}

/// Support function of the numerical range, `λ_max((e^{-iθ}A + e^{iθ}A*)/2)`.
pub fn nrange_support(a: &CMatrix, theta: f64) -> Result<f64, LinalgError> {
    let rotated = a.scale(Complex64::from_polar(1.0, -theta));
    let eig = hermitian_eigen(&rotated.hermitian_part())?;
    Ok(*eig.values.last().expect("nonempty matrix"))
}

/// Golden-section minimum of `f` on `[a, b]`.
pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > tol {
        if f1 > f2 {
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
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Minimum over θ of a periodic function: `m`-angle sweep, then golden
/// refinement of the lowest few local minima.
pub(crate) fn periodic_min<F: Fn(f64) -> f64>(f: F, m: usize) -> f64 {
    let step = TAU / m as f64;
    let vals: Vec<f64> = (0..m).map(|k| f(step * k as f64)).collect();
    let mut lows: Vec<usize> = (0..m)
        .filter(|&k| vals[k] <= vals[(k + m - 1) % m] && vals[k] <= vals[(k + 1) % m])
        .collect();
    lows.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    lows.truncate(3);
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    for k in lows {
        let t = step * k as f64;
        best = best.min(golden_min(&f, t - step, t + step, 1e-10).1);
    }
    best
}

/// `min_θ (h_Ω(θ) − h_{W(A)}(θ))`: nonnegative iff `W(A) ⊆ Ω⁻` for convex Ω.
pub fn support_slack(a: &CMatrix, c: &Contour, angles: usize) -> f64 {
    periodic_min(|t| c.support(t) - nrange_support(a, t).unwrap_or(f64::INFINITY), angles)
}

/// Smallest `s` for which `W(center + s(A − center))` touches ∂Ω, where the
/// center is the area centroid.
pub fn critical_scale(a: &CMatrix, c: &Contour) -> f64 {
    let center = c.centroid();
    let mut b = a.clone();
    for k in 0..b.dim() {
        b[(k, k)] -= center;
    }
    let rot = |t: f64| c.support(t) - (Complex64::from_polar(1.0, -t) * center).re;
    let worst = -periodic_min(|t| -nrange_support(&b, t).unwrap_or(0.0) / rot(t), SUPPORT_ANGLES);
    1.0 / worst
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OperandReport {
    pub min_eig_p: f64,
    pub support_slack: f64,
    pub sym_norm_at_one: f64,
    pub included: bool,
}

/// Decides `W(A) ⊆ Ω⁻` two ways: positivity of `P(σ_j, A)` at every node
/// and the support-function comparison. The verdicts must agree.
pub fn nrange_inclusion(op: &MatrixOperand) -> Result<OperandReport, CalculusError> {
    let c = &op.contour;
    if !convexity_report(c)?.is_convex {
        return Err(CalculusError::NonConvexDomain);
    }
    inclusion_unchecked(op, SUPPORT_ANGLES)
}

pub(crate) fn inclusion_unchecked(op: &MatrixOperand, angles: usize) -> Result<OperandReport, CalculusError> {
    let c = &op.contour;
    let min_eig_p = (0..c.len())
        .map(|j| hermitian_eigen(&op_dl_potential(op, j)).map(|e| e.values[0]))
        .collect::<Result<Vec<f64>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let slack = support_slack(&op.a, c, angles);
    let one = BoundarySamples::from_values(vec![Complex64::new(1.0, 0.0); c.len()]);
    let sym_norm_at_one = sym_calculus_apply(op, &one)?.spectral_norm()?;
    let kernel = min_eig_p >= -INCLUSION_EIG_TOL;
    let support = slack >= -INCLUSION_SUPPORT_TOL;
    if kernel != support {
        return Err(CalculusError::InconsistentInclusion { kernel, support, min_eig: min_eig_p, slack });
    }
    Ok(OperandReport { min_eig_p, support_slack: slack, sym_norm_at_one, included: kernel })
}

/// `(1/π) Re(n/(σ − z))` for a scalar, the 1×1 case of the operator potential.
pub fn scalar_potential(n: Complex64, sigma: Complex64, z: Complex64) -> f64 {
    (n / (sigma - z)).re / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::Generator;
    use crate::contour::{make_contour, ContourSpec};
    use crate::dlayer::analytic_image;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(n: usize) -> Contour {
        make_contour(&ContourSpec::unit_circle(n)).unwrap()
    }

    fn nilpotent(x: f64) -> CMatrix {
        CMatrix::from_real_rows(&[vec![0.0, x], vec![0.0, 0.0]]).unwrap()
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm_fro() <= tol
    }

    #[test]
    fn inside_counts() {
        let k = unit(256);
        let d = |x: f64, y: f64| CMatrix::from_diagonal(&[c(x, 0.0), c(y, 0.0)]);
        assert_eq!(spectrum_inside_count(&d(0.5, -0.5), &k).unwrap(), 2);
        assert_eq!(spectrum_inside_count(&d(0.5, 2.0), &k).unwrap(), 1);
        assert_eq!(spectrum_inside_count(&nilpotent(2.0), &k).unwrap(), 2);
        assert!(matches!(
            MatrixOperand::new(d(0.5, 2.0), &k),
            Err(CalculusError::SpectrumOutside { inside: 1, dim: 2 })
        ));
    }

    #[test]
    fn singular_resolvent_reported() {
        let k = unit(64);
        let a = CMatrix::from_diagonal(&[c(1.0, 0.0)]);
        assert!(matches!(spectrum_inside_count(&a, &k), Err(CalculusError::ResolventSingular { node: 0, .. })));
    }

    #[test]
    fn gamma_examples() {
        let k = unit(256);
        let sq = BoundarySamples::from_generator(&k, &Generator::monomial(2));
        let a = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.5, 0.0), c(0.0, -0.5)]), &k).unwrap();
        let want = CMatrix::from_diagonal(&[c(0.25, 0.0), c(-0.25, 0.0)]);
        assert!(close(&gamma_apply(&a, &sq).unwrap(), &want, 1e-12));
        let nil = MatrixOperand::new(nilpotent(2.0), &k).unwrap();
        assert!(gamma_apply(&nil, &sq).unwrap().norm_fro() < 1e-12);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        assert!(close(&gamma_apply(&nil, &one).unwrap(), &CMatrix::identity(2), 1e-12));
        let id = BoundarySamples::from_generator(&k, &Generator::monomial(1));
        assert!(close(&gamma_apply(&nil, &id).unwrap(), &nilpotent(2.0), 1e-12));
    }

    #[test]
    fn hat_gamma_examples() {
        let k = unit(256);
        let zero = BoundarySamples::constant(&k, c(0.0, 0.0));
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        let id = BoundarySamples::from_generator(&k, &Generator::monomial(1));
        let a = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.0, 0.5), c(0.0, -0.5)]), &k).unwrap();
        assert!(close(&hat_gamma_apply(&a, &one, &zero).unwrap(), &CMatrix::identity(2), 1e-12));
        let adj = CMatrix::from_diagonal(&[c(0.0, -0.5), c(0.0, 0.5)]);
        assert!(close(&hat_gamma_apply(&a, &zero, &id).unwrap(), &adj, 1e-12));
        let h = CMatrix::from_rows(&[vec![c(0.2, 0.0), c(0.1, 0.1)], vec![c(0.1, -0.1), c(-0.3, 0.0)]]).unwrap();
        let op = MatrixOperand::new(h.clone(), &k).unwrap();
        assert!(close(&hat_gamma_apply(&op, &id, &id).unwrap(), &h.scale(c(2.0, 0.0)), 1e-12));
    }

    #[test]
    fn operator_potential_examples() {
        let k = unit(64);
        let scalar = MatrixOperand::new(CMatrix::zeros(1), &k).unwrap();
        assert!((op_dl_potential(&scalar, 0).as_matrix()[(0, 0)].re - 1.0 / PI).abs() < 1e-15);
        let z2 = MatrixOperand::new(CMatrix::zeros(2), &k).unwrap();
        assert!(close(op_dl_potential(&z2, 0).as_matrix(), &CMatrix::identity(2).scale(c(1.0 / PI, 0.0)), 1e-15));
        let nil = MatrixOperand::new(nilpotent(2.0), &k).unwrap();
        let eig = hermitian_eigen(&op_dl_potential(&nil, 0)).unwrap();
        assert!(eig.values[0] >= -1e-12);
        assert!((scalar_potential(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn sym_calculus_examples() {
        let k = unit(256);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        let nil = MatrixOperand::new(nilpotent(2.0), &k).unwrap();
        let mass = sym_calculus_apply(&nil, &one).unwrap();
        assert!(close(&mass, &CMatrix::identity(2).scale(c(2.0, 0.0)), 1e-12));
        let id = BoundarySamples::from_generator(&k, &Generator::monomial(1));
        let kf = analytic_image(&k, &id).unwrap().kf;
        let (sym, mismatch) = sym_calculus_analytic(&nil, &id, &kf).unwrap();
        assert!(mismatch < 1e-10);
        assert!(close(&sym, &nilpotent(2.0), 1e-10));
        let s = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.5, 0.0)]), &k).unwrap();
        assert!((sym_calculus_apply(&s, &id).unwrap()[(0, 0)] - 0.5).norm() < 1e-12);
    }

    #[test]
    fn support_examples() {
        for theta in [0.0, 0.7, 2.0, 4.5] {
            assert!((nrange_support(&nilpotent(2.0), theta).unwrap() - 1.0).abs() < 1e-12);
        }
        let d = CMatrix::from_diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!((nrange_support(&d, 0.0).unwrap() - 1.0).abs() < 1e-14);
        let three = CMatrix::identity(2).scale(c(3.0, 0.0));
        assert!((nrange_support(&three, PI).unwrap() + 3.0).abs() < 1e-14);
    }

    #[test]
    fn inclusion_examples() {
        let k = unit(256);
        let nil = MatrixOperand::new(nilpotent(2.0), &k).unwrap();
        let r = nrange_inclusion(&nil).unwrap();
        assert!(r.included && r.min_eig_p >= -1e-8);
        assert!((r.sym_norm_at_one - 2.0).abs() < 1e-8);
        let d = MatrixOperand::new(CMatrix::from_diagonal(&[c(0.9, 0.0), c(-0.9, 0.0)]), &k).unwrap();
        assert!(nrange_inclusion(&d).unwrap().included);
        let big = MatrixOperand::new(nilpotent(4.0), &k).unwrap();
        let r = nrange_inclusion(&big).unwrap();
        assert!(!r.included && r.min_eig_p < 0.0);
    }

    #[test]
    fn inclusion_needs_convex_domain() {
        let star = make_contour(&ContourSpec::star(1.0, 0.3, 3, 256)).unwrap();
        let op = MatrixOperand::new(CMatrix::zeros(2), &star).unwrap();
        assert_eq!(nrange_inclusion(&op).unwrap_err(), CalculusError::NonConvexDomain);
    }

    #[test]
    fn critical_scale_of_nilpotent() {
        // W([[0, x], [0, 0]]) is the disk of radius x/2
        let k = unit(128);
        assert!((critical_scale(&nilpotent(1.0), &k) - 2.0).abs() < 1e-9);
        let e = make_contour(&ContourSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, 128)).unwrap();
        assert!((critical_scale(&nilpotent(1.0), &e) - 2.0).abs() < 1e-9);
    }
}
