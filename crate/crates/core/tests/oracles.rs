//! Values checked against formulas and quadratures written out here,
//! independent of the library's own routines.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use spectral_contour::calculus::{gamma_apply, nrange_support, MatrixOperand};
use spectral_contour::cauchy::{cauchy_interior, BoundarySamples, Generator};
use spectral_contour::contour::{make_contour, ContourSpec};
use spectral_contour::dlayer::{analytic_image, delyon_bound, interior_inverse_norm};
use spectral_contour::linalg::CMatrix;
use spectral_contour::mapping::numerical_radius;
use spectral_contour::random::{complex_gaussian, stream_rng};

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Ellipse perimeter by the Gauss–Kummer series in `((a−b)/(a+b))²`.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let h = ((a - b) / (a + b)).powi(2);
    let (mut sum, mut binom, mut hp) = (1.0, 1.0, 1.0);
    for n in 1..200 {
        // binom(1/2, n)
        binom *= (0.5 - (n - 1) as f64) / n as f64;
        hp *= h;
        sum += binom * binom * hp;
    }
    PI * (a + b) * sum
}

#[test]
fn ellipse_area_and_perimeter() {
    for (a, b) in [(2.0, 1.0), (3.0, 0.5), (1.0, 1.0)] {
        let c = make_contour(&ContourSpec::ellipse(cx(0.3, -0.2), a, b, 256)).unwrap();
        assert!((c.area() - PI * a * b).abs() < 1e-10, "{a} {b}");
        assert!((c.length() - ellipse_perimeter(a, b)).abs() < 1e-10, "{a} {b}");
    }
}

#[test]
fn star_area_and_polygon_perimeter() {
    let (alpha, k) = (0.3, 3u32);
    let c = make_contour(&ContourSpec::star(1.0, alpha, k, 256)).unwrap();
    // ½∫r² dt with r = 1 + α cos kt
    assert!((c.area() - PI * (1.0 + alpha * alpha / 2.0)).abs() < 1e-10);
    let m = 1 << 16;
    let pt = |j: usize| {
        let t = TAU * j as f64 / m as f64;
        Complex64::from_polar(1.0 + alpha * (k as f64 * t).cos(), t)
    };
    let perimeter: f64 = (0..m).map(|j| (pt(j + 1) - pt(j)).norm()).sum();
    assert!((c.length() - perimeter).abs() < 1e-7, "{} vs {perimeter}", c.length());
}

/// Nyström sum of the double-layer kernel straight from the ellipse
/// parameterization, with the curvature limit on the diagonal.
fn ellipse_k(a: f64, b: f64, n: usize, f: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
    let t = |j: usize| TAU * j as f64 / n as f64;
    let pos = |j: usize| cx(a * t(j).cos(), b * t(j).sin());
    let vel = |j: usize| cx(-a * t(j).sin(), b * t(j).cos());
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let speed = vel(j).norm();
                    let kernel = if i == j {
                        let kappa = a * b / speed.powi(3);
                        kappa / TAU
                    } else {
                        // outward normal is −i·σ'/|σ'|
                        let normal = cx(0.0, -1.0) * vel(j) / speed;
                        (normal / (pos(j) - pos(i))).re / PI
                    };
                    f(pos(j)) * kernel * speed * TAU / n as f64
                })
                .sum()
        })
        .collect()
}

#[test]
fn ellipse_image_of_identity_is_scaled_conjugate() {
    let (a, b, n) = (2.0, 1.0, 256);
    let c = make_contour(&ContourSpec::ellipse(cx(0.0, 0.0), a, b, n)).unwrap();
    let f = BoundarySamples::from_generator(&c, &Generator::monomial(1));
    let lib = analytic_image(&c, &f).unwrap().kf.values;
    let ours = ellipse_k(a, b, n, |z| z);
    let q = (a - b) / (a + b);
    for i in 0..n {
        let closed = c.points[i].conj() * q;
        assert!((ours[i] - closed).norm() < 1e-10, "oracle vs closed form at {i}");
        assert!((lib[i] - closed).norm() < 1e-10, "library vs closed form at {i}");
    }
}

#[test]
fn disk_inverse_norm_closed_form() {
    // K = J/N on the circle, so (I + K)⁻¹ = I − J/(2N)
    for n in [64usize, 256] {
        let c = make_contour(&ContourSpec::unit_circle(n)).unwrap();
        let r = interior_inverse_norm(&c).unwrap();
        assert!((r.inv_norm - (1.5 - 1.0 / n as f64)).abs() < 1e-10, "N={n}: {}", r.inv_norm);
        assert!((r.delyon_bound - 257.5).abs() < 1e-9);
    }
    assert_eq!(delyon_bound(2.0, PI), 0.5 * (3.0 + 512.0));
}

#[test]
fn cauchy_formula_for_exp_on_star() {
    let c = make_contour(&ContourSpec::star(1.0, 0.3, 3, 256)).unwrap();
    let scale = cx(0.7, 0.4);
    let f = BoundarySamples::from_generator(&c, &Generator::exp(scale));
    for z in [cx(0.0, 0.0), cx(0.3, 0.2), cx(-0.4, 0.1)] {
        let v = cauchy_interior(&c, &f, z).unwrap();
        // trapezoid sum of the Cauchy integral, written out here
        let ours: Complex64 = (0..c.len())
            .map(|j| f.values[j] / (c.points[j] - z) * c.velocity[j] * (TAU / c.len() as f64))
            .sum::<Complex64>()
            / cx(0.0, TAU);
        let exact = (scale * z).exp();
        assert!((v - exact).norm() < 1e-10, "{v} vs {exact}");
        assert!((ours - exact).norm() < 1e-10);
    }
}

#[test]
fn exponential_of_jordan_block() {
    let lambda = cx(0.2, -0.1);
    let a = CMatrix::from_rows(&[vec![lambda, cx(1.0, 0.0)], vec![cx(0.0, 0.0), lambda]]).unwrap();
    let c = make_contour(&ContourSpec::circle(cx(0.0, 0.0), 1.5, 256)).unwrap();
    let op = MatrixOperand::new(a, &c).unwrap();
    let g = gamma_apply(&op, &BoundarySamples::from_generator(&c, &Generator::exp(cx(1.0, 0.0)))).unwrap();
    let e = lambda.exp();
    let want = CMatrix::from_rows(&[vec![e, e], vec![cx(0.0, 0.0), e]]).unwrap();
    assert!((&g - &want).norm_fro() < 1e-10);
}

/// Support function of the elliptical numerical range of a 2×2 matrix:
/// foci at the eigenvalues, minor half-axis ½√(tr A*A − |λ₁|² − |λ₂|²).
fn nrange_ellipse_support(a: &CMatrix, theta: f64) -> f64 {
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (tr * tr - det * 4.0).sqrt();
    let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
    let fro2: f64 = a.entries().iter().map(|z| z.norm_sqr()).sum();
    let minor = 0.5 * (fro2 - l1.norm_sqr() - l2.norm_sqr()).max(0.0).sqrt();
    let major = (minor * minor + (l1 - l2).norm_sqr() / 4.0).sqrt();
    let phi = (l2 - l1).arg();
    let center = (l1 + l2) / 2.0;
    let d = theta - phi;
    (Complex64::from_polar(1.0, -theta) * center).re + (major.powi(2) * d.cos().powi(2) + minor.powi(2) * d.sin().powi(2)).sqrt()
}

#[test]
fn two_by_two_numerical_range() {
    for seed in 0..20u64 {
        let mut rng = stream_rng(seed, 0);
        let rows: Vec<Vec<Complex64>> = (0..2).map(|_| (0..2).map(|_| complex_gaussian(&mut rng)).collect()).collect();
        let a = CMatrix::from_rows(&rows).unwrap();
        for k in 0..720 {
            let t = TAU * k as f64 / 720.0;
            let want = nrange_ellipse_support(&a, t);
            let got = nrange_support(&a, t).unwrap();
            assert!((got - want).abs() < 1e-10, "seed {seed}, θ={t}: {got} vs {want}");
        }
        let m = 1 << 16;
        let radius = (0..m).map(|k| nrange_ellipse_support(&a, TAU * k as f64 / m as f64)).fold(0.0, f64::max);
        let w = numerical_radius(&a);
        assert!((w - radius).abs() <= 1e-6, "seed {seed}: {w} vs {radius}");
    }
}
