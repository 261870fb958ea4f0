//! Dense complex linear algebra for the small matrices this crate works with:
//! resolvents, Hermitian eigenproblems and spectral norms.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative pivot threshold for [`lu_solve`].
pub const PIVOT_THRESHOLD: f64 = 1e-13;
const HERMITIAN_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 100_000;
const POWER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular at pivot {pivot} (|pivot| = {magnitude:e})")]
    SingularMatrix { pivot: usize, magnitude: f64 },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not square ({rows} rows, row of length {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("{method} did not converge after {iterations} iterations")]
    NoConvergence { method: &'static str, iterations: usize },
    #[error("zero matrix has no dominant singular direction")]
    ZeroMatrix,
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged, empty or non-finite input.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(LinalgError::NotSquare { rows: 0, cols: 0 });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(LinalgError::NotSquare { rows: dim, cols: row.len() });
            }
            entries.extend_from_slice(row);
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, entries })
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|&z| z * s).collect() }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &CMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, &b) in self.entries.iter_mut().zip(&other.entries) {
            *a += s * b;
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .fold(ZERO, |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|i| self.entries[i * n..(i + 1) * n].iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Hermitian part `(M + M*)/2`.
    pub fn hermitian_part(&self) -> HermitianMatrix {
        let mut h = (self + &self.adjoint()).scale(Complex64::new(0.5, 0.0));
        h.symmetrize();
        HermitianMatrix(h)
    }

    /// Spectral norm via the Hermitian eigenproblem for `M*M`.
    pub fn spectral_norm(&self) -> Result<f64, LinalgError> {
        let gram = HermitianMatrix::gram(self);
        let eig = hermitian_eigen(&gram)?;
        Ok(eig.values.last().copied().unwrap_or(0.0).max(0.0).sqrt())
    }

    fn symmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self[(i, i)] = Complex64::new(self[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            entries: self.entries.iter().zip(&rhs.entries).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        out
    }
}

/// Hermitian matrix. Construction checks `H[i][j] = conj(H[j][i])` to 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self, LinalgError> {
        let n = m.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL {
            return Err(LinalgError::NotHermitian(worst));
        }
        let mut m = m;
        m.symmetrize();
        Ok(Self(m))
    }

    /// `M* M`, Hermitian by construction.
    pub fn gram(m: &CMatrix) -> Self {
        let mut g = &m.adjoint() * m;
        g.symmetrize();
        Self(g)
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// unitary whose columns are the matching eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.vectors.dim();
        (0..n).map(|i| self.vectors[(i, k)]).collect()
    }
}

/// Cyclic complex Jacobi iteration.
///
/// Each rotation acts in a coordinate plane `(p, q)`; the off-diagonal entry
/// `h_pq = |h_pq| e^{iφ}` is first made real by a phase on column `q`, then
/// annihilated by a real Givens rotation. Sweeps stop once the off-diagonal
/// Frobenius mass drops below `1e-12 ‖H‖_F`.
pub fn hermitian_eigen(h: &HermitianMatrix) -> Result<HermitianEigen, LinalgError> {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = CMatrix::identity(n);
    let total = a.norm_fro();
    let threshold = JACOBI_TOL * total;

    let off_mass = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while total > 0.0 && off_mass(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { method: "Jacobi", iterations: sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s·conj(phase), c·conj(phase)]] in the (p, q) plane.
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = -phase.conj() * s;
                let jqq = phase.conj() * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A <- J* A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    pivots: Vec<usize>,
}

impl LuFactors {
    pub fn new(a: &CMatrix) -> Result<Self, LinalgError> {
        let n = a.dim();
        let threshold = PIVOT_THRESHOLD * a.max_abs();
        let mut lu = a.clone();
        let mut pivots: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (prow, pmag) = (col..n)
                .map(|r| (r, lu[(r, col)].norm()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmag <= threshold || pmag == 0.0 {
                return Err(LinalgError::SingularMatrix { pivot: col, magnitude: pmag });
            }
            if prow != col {
                pivots.swap(prow, col);
                for k in 0..n {
                    let tmp = lu[(prow, k)];
                    lu[(prow, k)] = lu[(col, k)];
                    lu[(col, k)] = tmp;
                }
            }
            let pivot = lu[(col, col)];
            for r in (col + 1)..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                if factor != ZERO {
                    for k in (col + 1)..n {
                        let u = lu[(col, k)];
                        lu[(r, k)] -= factor * u;
                    }
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
        let n = self.lu.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, actual: b.len() });
        }
        let mut y: Vec<Complex64> = self.pivots.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let yk = y[k];
                y[i] -= l * yk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                let yk = y[k];
                y[i] -= u * yk;
            }
            y[i] /= self.lu[(i, i)];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.lu.dim();
        let mut inv = CMatrix::zeros(n);
        let mut e = vec![ZERO; n];
        for col in 0..n {
            e.fill(ZERO);
            e[col] = ONE;
            let x = self.solve(&e).expect("dimension checked");
            for row in 0..n {
                inv[(row, col)] = x[row];
            }
        }
        inv
    }
}

/// Solves `A x = b` by partially pivoted LU.
pub fn lu_solve(a: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    LuFactors::new(a)?.solve(b)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    Ok(LuFactors::new(a)?.inverse())
}

/// Largest singular value and a unit right-singular vector.
#[derive(Debug, Clone)]
pub struct TopSingular {
    pub value: f64,
    pub vector: Vec<Complex64>,
}

/// Power iteration on `M*M` from a seeded Gaussian start.
pub fn top_singular(m: &CMatrix, seed: u64) -> Result<TopSingular, LinalgError> {
    let n = m.dim();
    if m.max_abs() == 0.0 {
        return Err(LinalgError::ZeroMatrix);
    }
    let gram = HermitianMatrix::gram(m).into_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    normalize(&mut x);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut y = gram.matvec(&x);
        let next = y.iter().zip(&x).map(|(a, b)| (b.conj() * a).re).sum::<f64>();
        let norm = vec_norm(&y);
        if norm == 0.0 {
            // start landed in the kernel; any nonzero column direction will do
            return Err(LinalgError::NoConvergence { method: "power iteration", iterations: 0 });
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let converged = (next - lambda).abs() <= POWER_TOL * next.abs();
        lambda = next;
        x = y;
        if converged {
            let value = vec_norm(&m.matvec(&x));
            return Ok(TopSingular { value, vector: x });
        }
    }
    Err(LinalgError::NoConvergence { method: "power iteration", iterations: POWER_MAX_ITERS })
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(x: &mut [Complex64]) {
    let n = vec_norm(x);
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// `<x, y> = Σ x_i conj(y_i)`
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lu_identity() {
        let b = vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)];
        let x = lu_solve(&CMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn lu_diagonal() {
        let a = CMatrix::from_diagonal(&[c(2.0, 0.0), c(0.0, 1.0)]);
        let x = lu_solve(&a, &[c(2.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert!(close(x[0], c(1.0, 0.0), 1e-15));
        assert!(close(x[1], c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn lu_back_substitution() {
        let a = CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let x = lu_solve(&a, &[c(3.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(close(x[0], c(2.0, 0.0), 1e-15));
        assert!(close(x[1], c(1.0, 0.0), 1e-15));
    }

    #[test]
    fn lu_singular() {
        let a = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            lu_solve(&a, &[ONE, ONE]),
            Err(LinalgError::SingularMatrix { pivot: 1, .. })
        ));
    }

    #[test]
    fn lu_dimension_mismatch() {
        let err = lu_solve(&CMatrix::identity(2), &[ONE]).unwrap_err();
        assert_eq!(err, LinalgError::DimensionMismatch { expected: 2, actual: 1 });
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, LinalgError::NotSquare { .. }));
    }

    #[test]
    fn eigen_pauli_x() {
        let h = HermitianMatrix::new(
            CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        )
        .unwrap();
        let e = hermitian_eigen(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_diagonal_sorted() {
        let h = HermitianMatrix::new(CMatrix::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]))
            .unwrap();
        let e = hermitian_eigen(&h).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigen_pauli_y() {
        let m = CMatrix::from_rows(&[vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]).unwrap();
        let e = hermitian_eigen(&HermitianMatrix::new(m.clone()).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        for k in 0..2 {
            let v = e.vector(k);
            let hv = m.matvec(&v);
            for i in 0..2 {
                assert!(close(hv[i], v[i] * e.values[k], 1e-13));
            }
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(HermitianMatrix::new(m), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn top_singular_diagonal() {
        let m = CMatrix::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0)]);
        let s = top_singular(&m, 1).unwrap();
        assert!((s.value - 3.0).abs() < 1e-10);
        assert!((s.vector[0].norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn top_singular_nilpotent() {
        let m = CMatrix::from_real_rows(&[vec![0.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let s = top_singular(&m, 3).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
        assert!((s.vector[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top_singular_identity() {
        let s = top_singular(&CMatrix::identity(2), 9).unwrap();
        assert!((s.value - 1.0).abs() < 1e-14);
        assert!((vec_norm(&s.vector) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn top_singular_zero() {
        assert_eq!(top_singular(&CMatrix::zeros(2), 0).unwrap_err(), LinalgError::ZeroMatrix);
    }
}
