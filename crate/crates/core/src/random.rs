//! Seeded random ensembles: complex Gaussians, unitaries, polynomials and
//! test matrices whose numerical range sits at a prescribed scale relative
//! to a domain.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::calculus::critical_scale;
use crate::contour::Contour;
use crate::linalg::{inner, normalize, CMatrix};

/// Independent stream `stream` of the master seed.
pub fn stream_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-ish unitary from Gram–Schmidt on Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        for _ in 0..2 {
            for u in &cols {
                let p = inner(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
            }
        }
        if crate::linalg::vec_norm(&v) < 1e-8 {
            continue;
        }
        normalize(&mut v);
        cols.push(v);
    }
    let mut u = CMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            u[(i, j)] = *x;
        }
    }
    u
}

pub fn random_coeffs<R: Rng + ?Sized>(rng: &mut R, degree: usize) -> Vec<Complex64> {
    (0..=degree).map(|_| complex_gaussian(rng)).collect()
}

/// `U (D + N) U*` with eigenvalues `D` in the disk of radius `eig_radius` and
/// a Gaussian strictly upper-triangular `N`. Returns the matrix and its
/// eigenvalues.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R, dim: usize, eig_radius: f64) -> (CMatrix, Vec<Complex64>) {
    let eigs: Vec<Complex64> = (0..dim)
        .map(|_| {
            let r = eig_radius * rng.random::<f64>().sqrt();
            Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    let mut t = CMatrix::from_diagonal(&eigs);
    let strength = rng.random_range(0.3..1.5);
    for i in 0..dim {
        for j in (i + 1)..dim {
            t[(i, j)] = complex_gaussian(rng) * strength;
        }
    }
    let u = random_unitary(rng, dim);
    (&(&u * &t) * &u.adjoint(), eigs)
}

/// A random matrix `center + s·B` whose numerical range is `factor` times
/// the critical size for the domain (inside for `factor < 1`, straddling
/// the boundary otherwise), with every eigenvalue in the `eig_fraction`
/// dilate of the domain about its centroid.
pub fn scaled_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    c: &Contour,
    dim: usize,
    factor: f64,
    eig_fraction: f64,
) -> CMatrix {
    let center = c.centroid();
    let angles: Vec<f64> = (0..90).map(|k| std::f64::consts::TAU * k as f64 / 90.0).collect();
    let h: Vec<f64> = angles
        .iter()
        .map(|&t| c.support(t) - (Complex64::from_polar(1.0, -t) * center).re)
        .collect();
    loop {
        let (b, eigs) = random_shape(rng, dim, 0.3);
        let mut shifted = b.clone();
        for k in 0..dim {
            shifted[(k, k)] += center;
        }
        let s = factor * critical_scale(&shifted, c);
        let fits = eigs.iter().all(|l| {
            angles
                .iter()
                .zip(&h)
                .all(|(&t, &ht)| (Complex64::from_polar(1.0, -t) * l * s).re <= eig_fraction * ht)
        });
        if !fits {
            continue;
        }
        let mut a = b.scale(Complex64::new(s, 0.0));
        for k in 0..dim {
            a[(k, k)] += center;
        }
        return a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::nrange_support;
    use crate::contour::{make_contour, ContourSpec};

    #[test]
    fn unitary_is_unitary() {
        let mut rng = stream_rng(3, 0);
        let u = random_unitary(&mut rng, 5);
        assert!((&(&u.adjoint() * &u) - &CMatrix::identity(5)).norm_fro() < 1e-12);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: f64 = stream_rng(7, 1).random();
        let b: f64 = stream_rng(7, 2).random();
        let again: f64 = stream_rng(7, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, again);
    }

    #[test]
    fn scaled_matrix_touches_at_factor_one() {
        let k = make_contour(&ContourSpec::unit_circle(128)).unwrap();
        let mut rng = stream_rng(11, 0);
        let a = scaled_matrix(&mut rng, &k, 3, 1.0, 0.9);
        let w = (0..2000)
            .map(|i| nrange_support(&a, std::f64::consts::TAU * i as f64 / 2000.0).unwrap())
            .fold(f64::MIN, f64::max);
        assert!((w - 1.0).abs() < 1e-5, "w = {w}");
    }
}
