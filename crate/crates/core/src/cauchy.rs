//! Boundary data and the interior, exterior and singular Cauchy transforms.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::contour::{winding_number, Contour, ContourError};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CauchyError {
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error("point {0} is not inside the contour")]
    OutsideRegion(Complex64),
    #[error("point {0} is not outside the contour")]
    InsideRegion(Complex64),
    #[error("boundary samples have length {got}, contour has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
}

/// Polynomial `Σ a_k (z − center)^k`, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub center: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { center: ZERO, coeffs }
    }

    pub fn centered(center: Complex64, coeffs: Vec<Complex64>) -> Self {
        Self { center, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == ZERO)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let w = z - self.center;
        self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * w + c)
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let w = z - self.center;
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(ZERO, |acc, (k, c)| acc * w + c * k as f64)
    }
}

/// Closed-form holomorphic boundary data.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Polynomial(Poly),
    Rational { num: Poly, den: Poly },
    /// `exp(scale·z)`.
    Exp { scale: Complex64 },
}

impl Generator {
    pub fn constant(c: Complex64) -> Self {
        Generator::Polynomial(Poly::new(vec![c]))
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        Generator::Polynomial(Poly::new(coeffs))
    }

    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        Generator::Polynomial(Poly::new(coeffs))
    }

    /// `z ↦ 1/(z − pole)`.
    pub fn simple_pole(pole: Complex64) -> Self {
        Generator::Rational {
            num: Poly::new(vec![Complex64::new(1.0, 0.0)]),
            den: Poly::new(vec![-pole, Complex64::new(1.0, 0.0)]),
        }
    }

    pub fn exp(scale: Complex64) -> Self {
        Generator::Exp { scale }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Generator::Polynomial(p) => p.eval(z),
            Generator::Rational { num, den } => num.eval(z) / den.eval(z),
            Generator::Exp { scale } => (scale * z).exp(),
        }
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        match self {
            Generator::Polynomial(p) => p.deriv(z),
            Generator::Rational { num, den } => {
                let d = den.eval(z);
                (num.deriv(z) * d - num.eval(z) * den.deriv(z)) / (d * d)
            }
            Generator::Exp { scale } => scale * (scale * z).exp(),
        }
    }
}

/// Complex values at the contour nodes.
///
/// `slope` holds `(dφ/dt)/(dσ/dt)` per node when known; for holomorphic data
/// this is the complex derivative, and it supplies the diagonal term of the
/// singular transform.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySamples {
    pub values: Vec<Complex64>,
    pub slope: Option<Vec<Complex64>>,
    pub source: Option<Generator>,
}

impl BoundarySamples {
    pub fn from_values(values: Vec<Complex64>) -> Self {
        Self { values, slope: None, source: None }
    }

    pub fn from_generator(c: &Contour, g: &Generator) -> Self {
        let values = c.points.iter().map(|&z| g.eval(z)).collect();
        let slope = c.points.iter().map(|&z| g.deriv(z)).collect();
        Self { values, slope: Some(slope), source: Some(g.clone()) }
    }

    pub fn constant(c: &Contour, value: Complex64) -> Self {
        Self::from_generator(c, &Generator::constant(value))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_len(&self, c: &Contour) -> Result<(), CauchyError> {
        if self.len() != c.len() {
            return Err(CauchyError::LengthMismatch { expected: c.len(), got: self.len() });
        }
        Ok(())
    }

    /// Pointwise conjugate. The slope transforms as
    /// `conj(φ')·conj(σ')/σ'`; the generator is dropped.
    pub fn conj(&self, c: &Contour) -> Self {
        let values = self.values.iter().map(|v| v.conj()).collect();
        let slope = self.slope.as_ref().map(|s| {
            s.iter()
                .zip(&c.velocity)
                .map(|(d, v)| d.conj() * v.conj() / v)
                .collect()
        });
        Self { values, slope, source: None }
    }

    pub fn scale(&self, k: Complex64) -> Self {
        let source = self.source.as_ref().and_then(|g| match g {
            Generator::Polynomial(p) => Some(Generator::Polynomial(Poly {
                center: p.center,
                coeffs: p.coeffs.iter().map(|a| a * k).collect(),
            })),
            Generator::Rational { num, den } => Some(Generator::Rational {
                num: Poly { center: num.center, coeffs: num.coeffs.iter().map(|a| a * k).collect() },
                den: den.clone(),
            }),
            Generator::Exp { .. } => None,
        });
        Self {
            values: self.values.iter().map(|v| v * k).collect(),
            slope: self.slope.as_ref().map(|s| s.iter().map(|v| v * k).collect()),
            source,
        }
    }

    /// Pointwise product; slopes combine by the product rule.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        let slope = match (&self.slope, &other.slope) {
            (Some(sa), Some(sb)) => Some(
                (0..self.len())
                    .map(|j| sa[j] * other.values[j] + self.values[j] * sb[j])
                    .collect(),
            ),
            _ => None,
        };
        Self { values, slope, source: None }
    }

    pub fn node_sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Boundary sup-norm of the samples. With a generator attached the maximum
/// is taken over the continuous curve, otherwise over the nodes.
pub fn sup_norm(c: &Contour, phi: &BoundarySamples) -> f64 {
    match &phi.source {
        Some(g) => c.continuous_sup(|z| g.eval(z).norm()).max(phi.node_sup()),
        None => phi.node_sup(),
    }
}

fn quadrature(c: &Contour, phi: &BoundarySamples, z: Complex64) -> Complex64 {
    let s: Complex64 = (0..c.len()).map(|j| c.dsigma(j) * phi.values[j] / (c.points[j] - z)).sum();
    s / (TAU * I)
}

/// `Φⁱ(φ)(z)` for `z` inside the contour.
pub fn cauchy_interior(c: &Contour, phi: &BoundarySamples, z: Complex64) -> Result<Complex64, CauchyError> {
    phi.check_len(c)?;
    if winding_number(c, z)? != 1 {
        return Err(CauchyError::OutsideRegion(z));
    }
    Ok(quadrature(c, phi, z))
}

/// `Φᵉ(φ)(z)` for `z` outside the contour.
pub fn cauchy_exterior(c: &Contour, phi: &BoundarySamples, z: Complex64) -> Result<Complex64, CauchyError> {
    phi.check_len(c)?;
    if winding_number(c, z)? != 0 {
        return Err(CauchyError::InsideRegion(z));
    }
    Ok(quadrature(c, phi, z))
}

/// Principal-value transform `Φ(φ)(σ_i)` by singularity subtraction.
pub fn cauchy_singular(c: &Contour, phi: &BoundarySamples, i: usize) -> Complex64 {
    let (si, fi) = (c.points[i], phi.values[i]);
    let mut s = ZERO;
    for j in 0..c.len() {
        if j == i {
            if let Some(slope) = &phi.slope {
                s += c.dsigma(i) * slope[i];
            }
        } else {
            s += c.dsigma(j) * (phi.values[j] - fi) / (c.points[j] - si);
        }
    }
    s / (TAU * I) + fi * 0.5
}

/// The singular transform at every node.
pub fn cauchy_singular_all(c: &Contour, phi: &BoundarySamples) -> Vec<Complex64> {
    (0..c.len()).into_par_iter().map(|i| cauchy_singular(c, phi, i)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlemeljResiduals {
    pub jump_err: f64,
    pub interior_err: f64,
    pub exterior_err: f64,
}

impl PlemeljResiduals {
    pub fn max(&self) -> f64 {
        self.jump_err.max(self.interior_err).max(self.exterior_err)
    }
}

/// Number of Richardson levels; offsets are `0.01·d_Ω / 2^k`.
const RICHARDSON_LEVELS: usize = 5;
const RICHARDSON_H0: f64 = 0.01;

/// Trigonometric interpolation of equispaced periodic samples onto `m`
/// equispaced points.
pub fn upsample(values: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = values.len();
    assert!(m >= n);
    let mut planner = FftPlanner::new();
    let mut spec = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![ZERO; m];
    let half = n / 2;
    for k in 0..half {
        padded[k] = spec[k];
    }
    for k in (half + 1)..n {
        padded[m - n + k] = spec[k];
    }
    // split the Nyquist bin between ±n/2
    padded[half] += spec[half] * 0.5;
    padded[m - half] += spec[half] * 0.5;
    planner.plan_fft_inverse(m).process(&mut padded);
    padded.iter().map(|v| v / n as f64).collect()
}

/// Refined copy of a contour and its data, for evaluating potentials at the
/// Richardson offsets `σ_i ∓ h·n_i`.
pub struct NearBoundary {
    pub offsets: Vec<f64>,
    pub fine: Contour,
    pub values: Vec<Complex64>,
}

impl NearBoundary {
    pub fn new(c: &Contour, phi: &BoundarySamples) -> Self {
        let d = c.diameter();
        let offsets: Vec<f64> =
            (0..RICHARDSON_LEVELS).map(|k| RICHARDSON_H0 * d / (1u64 << k) as f64).collect();
        let h_min = offsets[RICHARDSON_LEVELS - 1];
        let speed = c.velocity.iter().map(|v| v.norm()).fold(0.0, f64::max);
        // trapezoid error at distance h decays like exp(-h·M/|σ'|)
        let m = ((40.0 * speed / h_min).ceil() as usize).next_power_of_two().max(c.len());
        let fine = c.resampled(m);
        let values = match &phi.source {
            Some(g) => fine.points.iter().map(|&z| g.eval(z)).collect(),
            None => upsample(&phi.values, m),
        };
        Self { offsets, fine, values }
    }
}

/// Boundary limits of `Φⁱ` and `Φᵉ` against the Plemelj relations.
///
/// Off-curve values at `σ_i ∓ h·n_i` are taken on a refined copy of the
/// contour fine enough for the smallest offset, then extrapolated to `h = 0`
/// with a Neville table.
pub fn plemelj_residuals(c: &Contour, phi: &BoundarySamples) -> PlemeljResiduals {
    let n = c.len();
    let near = NearBoundary::new(c, phi);
    let hs = &near.offsets;
    let dsig: Vec<Complex64> =
        (0..near.fine.len()).map(|j| near.fine.dsigma(j) * near.values[j] / (TAU * I)).collect();
    let eval = |z: Complex64| -> Complex64 {
        dsig.iter().zip(&near.fine.points).map(|(a, p)| a / (p - z)).sum()
    };
    let singular = cauchy_singular_all(c, phi);
    let per_node: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (p, nrm) = (c.points[i], c.normals[i]);
            let inner: Vec<Complex64> = hs.iter().map(|&h| eval(p - nrm * h)).collect();
            let outer: Vec<Complex64> = hs.iter().map(|&h| eval(p + nrm * h)).collect();
            let fi = richardson(hs, &inner);
            let fe = richardson(hs, &outer);
            let half = phi.values[i] * 0.5;
            (
                (fi - fe - phi.values[i]).norm(),
                (fi - singular[i] - half).norm(),
                (fe - singular[i] + half).norm(),
            )
        })
        .collect();
    let fold = |k: fn(&(f64, f64, f64)) -> f64| per_node.iter().map(k).fold(0.0, f64::max);
    PlemeljResiduals {
        jump_err: fold(|r| r.0),
        interior_err: fold(|r| r.1),
        exterior_err: fold(|r| r.2),
    }
}

/// Neville extrapolation of `values[k] ≈ F(hs[k])` to `F(0)`.
pub fn richardson(hs: &[f64], values: &[Complex64]) -> Complex64 {
    let mut t = values.to_vec();
    let k = t.len();
    for level in 1..k {
        for i in 0..(k - level) {
            let (ha, hb) = (hs[i], hs[i + level]);
            t[i] = (t[i + 1] * ha - t[i] * hb) / (ha - hb);
        }
    }
    t[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{make_contour, ContourSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit(n: usize) -> Contour {
        make_contour(&ContourSpec::unit_circle(n)).unwrap()
    }

    #[test]
    fn poly_eval_and_derivative() {
        let p = Poly::centered(c(1.0, 0.0), vec![c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)]);
        let z = c(0.5, -0.25);
        let w = z - 1.0;
        assert!((p.eval(z) - (1.0 + c(0.0, 2.0) * w + 3.0 * w * w)).norm() < 1e-15);
        assert!((p.deriv(z) - (c(0.0, 2.0) + 6.0 * w)).norm() < 1e-15);
    }

    #[test]
    fn interior_examples() {
        let k = unit(256);
        let sq = BoundarySamples::from_generator(&k, &Generator::monomial(2));
        assert!((cauchy_interior(&k, &sq, c(0.0, 0.3)).unwrap() - c(-0.09, 0.0)).norm() < 1e-12);
        let inv = BoundarySamples::from_generator(&k, &Generator::simple_pole(c(0.0, 0.0)));
        assert!(cauchy_interior(&k, &inv, c(0.5, 0.0)).unwrap().norm() < 1e-12);
        let e = make_contour(&ContourSpec::ellipse(c(0.0, 0.0), 2.0, 1.0, 256)).unwrap();
        let id = BoundarySamples::from_generator(&e, &Generator::monomial(1));
        assert!(cauchy_interior(&e, &id, c(0.0, 0.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn exterior_examples() {
        let k = unit(256);
        let inv = BoundarySamples::from_generator(&k, &Generator::simple_pole(c(0.0, 0.0)));
        assert!((cauchy_exterior(&k, &inv, c(2.0, 0.0)).unwrap() + 0.5).norm() < 1e-12);
        let sq = BoundarySamples::from_generator(&k, &Generator::monomial(2));
        assert!(cauchy_exterior(&k, &sq, c(3.0, 0.0)).unwrap().norm() < 1e-12);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        assert!(cauchy_exterior(&k, &one, c(2.0, 0.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn region_errors() {
        let k = unit(64);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        assert_eq!(cauchy_interior(&k, &one, c(2.0, 0.0)), Err(CauchyError::OutsideRegion(c(2.0, 0.0))));
        assert_eq!(cauchy_exterior(&k, &one, c(0.0, 0.0)), Err(CauchyError::InsideRegion(c(0.0, 0.0))));
        assert!(matches!(
            cauchy_interior(&k, &one, c(0.999, 0.0)),
            Err(CauchyError::Contour(ContourError::TooCloseToBoundary { .. }))
        ));
    }

    #[test]
    fn singular_examples() {
        let k = unit(128);
        for deg in 1..4 {
            let f = BoundarySamples::from_generator(&k, &Generator::monomial(deg));
            for i in [0, 17, 101] {
                let want = f.values[i] * 0.5;
                assert!((cauchy_singular(&k, &f, i) - want).norm() < 1e-12, "deg {deg}");
            }
        }
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        assert!((cauchy_singular(&k, &one, 5) - 0.5).norm() < 1e-14);
        let inv = BoundarySamples::from_generator(&k, &Generator::simple_pole(c(0.0, 0.0)));
        for i in [0, 33] {
            let want = -inv.values[i] * 0.5;
            assert!((cauchy_singular(&k, &inv, i) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn upsample_reproduces_band_limited_data() {
        let n = 32;
        let vals: Vec<Complex64> = (0..n)
            .map(|j| {
                let t = TAU * j as f64 / n as f64;
                Complex64::from_polar(1.0, 3.0 * t) + Complex64::from_polar(0.5, -5.0 * t)
            })
            .collect();
        let up = upsample(&vals, 128);
        for (j, v) in up.iter().enumerate() {
            let t = TAU * j as f64 / 128.0;
            let want = Complex64::from_polar(1.0, 3.0 * t) + Complex64::from_polar(0.5, -5.0 * t);
            assert!((v - want).norm() < 1e-13);
        }
    }

    #[test]
    fn richardson_exact_on_polynomials() {
        let hs = [0.4, 0.2, 0.1, 0.05];
        let vals: Vec<Complex64> = hs.iter().map(|h| c(2.0 + h - 3.0 * h * h + h * h * h, 0.0)).collect();
        assert!((richardson(&hs, &vals) - 2.0).norm() < 1e-12);
    }

    #[test]
    fn plemelj_circle_cubic() {
        let k = unit(256);
        let f = BoundarySamples::from_generator(&k, &Generator::monomial(3));
        let r = plemelj_residuals(&k, &f);
        assert!(r.max() <= 1e-6, "{r:?}");
    }

    #[test]
    fn plemelj_constant_jump() {
        let k = unit(256);
        let one = BoundarySamples::constant(&k, c(1.0, 0.0));
        assert!(plemelj_residuals(&k, &one).jump_err <= 1e-10);
    }

    #[test]
    fn sup_norm_refines_between_nodes() {
        let k = unit(32);
        // |z + 3e^{iφ}| peaks off the nodes
        let shift = Complex64::from_polar(3.0, 0.5 * TAU / 32.0);
        let g = Generator::polynomial(vec![shift, c(1.0, 0.0)]);
        let f = BoundarySamples::from_generator(&k, &g);
        assert!(f.node_sup() < 4.0 - 1e-4);
        assert!((sup_norm(&k, &f) - 4.0).abs() < 1e-12);
    }
}
