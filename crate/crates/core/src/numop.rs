//! Dense complex linear algebra: Hermitian eigendecomposition, SVD and the
//! thresholded functional calculus behind polar partial isometries.
//!
//! The Hermitian eigensolver is nalgebra's (Householder tridiagonalization
//! plus implicit QR). The SVD is a one-sided Jacobi iteration written here,
//! so the polar factor computed through `T (T*T)^{-1/2}` can be checked
//! against `U V*` from an independent algorithm.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num::complex::Complex64;
use num::Zero;
use thiserror::Error;

pub type Vector = DVector<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumopError {
    #[error("matrix is not Hermitian: ||A - A*|| = {defect:e}, ||A|| = {norm:e}")]
    NotHermitian { defect: f64, norm: f64 },
    #[error("matrix is not positive semidefinite: eigenvalue {value:e} below -{tol:e}")]
    NegativeEigenvalue { value: f64, tol: f64 },
    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
}

/// A square complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(DMatrix<Complex64>);

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "DenseOperator must be square");
        DenseOperator(m)
    }

    pub fn zeros(n: usize) -> Self {
        DenseOperator(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        DenseOperator(DMatrix::identity(n, n))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        DenseOperator(DMatrix::from_fn(n, n, f))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        Self::from_fn(n, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        DenseOperator(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    pub fn real_diagonal(values: &[f64]) -> Self {
        let v: Vec<Complex64> = values.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        Self::diagonal(&v)
    }

    /// `sum_k |a_k><b_k|` for equal-length lists of vectors.
    pub fn from_outer_products(n: usize, pairs: &[(&Vector, &Vector)]) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for (a, b) in pairs {
            m += *a * b.adjoint();
        }
        DenseOperator(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator(self.0.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        DenseOperator(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `self + s * I`
    pub fn shift(&self, s: f64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += s;
        }
        DenseOperator(m)
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.0 * v
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Top-left `rows x cols` corner, as a plain matrix.
    pub fn corner(&self, rows: usize, cols: usize) -> DMatrix<Complex64> {
        self.0.view((0, 0), (rows, cols)).into_owned()
    }

    /// Frobenius norm of the top-left `k x k` corner.
    pub fn corner_frobenius(&self, k: usize) -> f64 {
        self.0.view((0, 0), (k, k)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of the top-left `k x k` corner.
    pub fn corner_max_abs(&self, k: usize) -> f64 {
        self.0.view((0, 0), (k, k)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Operator norm, via the largest eigenvalue of `A*A`.
    pub fn op_norm(&self) -> f64 {
        let gram = DenseOperator(self.0.adjoint() * &self.0);
        let eig = SymmetricEigen::new(hermitian_part(gram.matrix()));
        eig.eigenvalues.iter().cloned().fold(0.0, f64::max).max(0.0).sqrt()
    }

    pub fn hermitian_defect(&self) -> f64 {
        DenseOperator(&self.0 - self.0.adjoint()).frobenius()
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::identity(self.dim());
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Conjugation `D A D*` by a diagonal unitary.
    pub fn conjugate_by_diagonal(&self, diag: &[Complex64]) -> Self {
        let n = self.dim();
        Self::from_fn(n, |i, j| diag[i] * self.0[(i, j)] * diag[j].conj())
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

impl<'a> Mul<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn mul(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn add(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a DenseOperator> for &'a DenseOperator {
    type Output = DenseOperator;

    fn sub(self, rhs: &DenseOperator) -> DenseOperator {
        DenseOperator(&self.0 - &rhs.0)
    }
}

impl fmt::Display for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `<u, v>`, antilinear in `u`.
pub fn inner(u: &Vector, v: &Vector) -> Complex64 {
    u.dotc(v)
}

/// Eigenvalues ascending, eigenvectors as matching columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

impl HermitianEig {
    pub fn eigenvector(&self, i: usize) -> Vector {
        self.eigenvectors.column(i).into_owned()
    }

    /// `V f(Λ) V*`
    pub fn apply_function(&self, f: impl Fn(f64) -> f64) -> DenseOperator {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let fj = f(*lambda);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        DenseOperator(scaled * self.eigenvectors.adjoint())
    }

    pub fn reconstruct(&self) -> DenseOperator {
        self.apply_function(|x| x)
    }
}

/// Singular values descending; `a = u * diag(s) * v*`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub singular_values: Vec<f64>,
    pub u: DMatrix<Complex64>,
    pub v: DMatrix<Complex64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DenseOperator {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        DenseOperator(us * self.v.adjoint())
    }

    /// `U 1[s^2 > threshold] V*`
    pub fn isometric_part(&self, threshold: f64) -> DenseOperator {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            if s * s <= threshold {
                us.column_mut(j).fill(Complex64::zero());
            }
        }
        DenseOperator(us * self.v.adjoint())
    }

    /// Number of singular values with `s^2 <= tol * s_max^2`.
    pub fn numerical_kernel_dim(&self, tol: f64) -> usize {
        let smax = self.singular_values.first().copied().unwrap_or(0.0);
        self.singular_values.iter().filter(|s| **s * **s <= tol * smax * smax).count()
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn hermitian_eig(a: &DenseOperator) -> Result<HermitianEig, NumopError> {
    let norm = a.frobenius();
    let defect = a.hermitian_defect();
    if defect > 1e-10 * norm {
        return Err(NumopError::NotHermitian { defect, norm });
    }
    if !a.is_finite() {
        return Err(NumopError::NonFinite("hermitian_eig input"));
    }
    // Householder norms are formed from squares, which underflow for the
    // vanishing entries deep truncations at large q produce and then yield
    // NaN; entries that small are flushed.
    let floor = 1e-60 * a.max_abs();
    let mut h = hermitian_part(a.matrix());
    h.iter_mut().filter(|z| z.norm() < floor).for_each(|z| *z = Complex64::zero());
    let eig = SymmetricEigen::new(h);
    if !eig.eigenvalues.iter().all(|l| l.is_finite()) || !eig.eigenvectors.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(NumopError::NonFinite("hermitian_eig"));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(HermitianEig { eigenvalues, eigenvectors })
}

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
pub fn svd_factor(a: &DenseOperator) -> Svd {
    let n = a.dim();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| a.matrix().column(j).iter().copied().collect()).collect();
    let mut vcols: Vec<Vec<Complex64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::zero() }).collect())
        .collect();

    const EPS: f64 = 1e-15;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, g) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut g = Complex64::zero();
                    for (x, y) in cp.iter().zip(cq) {
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        g += x.conj() * y;
                    }
                    (alpha, beta, g)
                };
                let gabs = g.norm();
                if gabs == 0.0 || gabs <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate column q by the phase of g so the pair becomes a real 2x2 problem.
                let phase = (g / gabs).conj();
                let zeta = (beta - alpha) / (2.0 * gabs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut cols, &mut vcols] {
                    let (left, right) = m.split_at_mut(q);
                    let (cp, cq) = (&mut left[p], &mut right[0]);
                    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
                        let yq = *y * phase;
                        let xp = *x;
                        *x = xp * c - yq * s;
                        *y = xp * s + yq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let zero_cut = 1e-300 * smax.max(1.0);

    let mut u = DMatrix::<Complex64>::zeros(n, n);
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        singular_values.push(s);
        for i in 0..n {
            v[(i, k)] = vcols[j][i];
        }
        if s > zero_cut {
            for i in 0..n {
                u[(i, k)] = cols[j][i] / s;
            }
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Svd { singular_values, u, v }
}

/// Fills the listed columns with unit vectors orthogonal to all other columns.
fn complete_orthonormal(u: &mut DMatrix<Complex64>, missing: &[usize]) {
    let n = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &k in missing {
        while candidate < n {
            let mut w = Vector::zeros(n);
            w[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let col = u.column(j).into_owned();
                    let proj = inner(&col, &w);
                    w -= col * proj;
                }
            }
            let norm = w.norm();
            if norm > 1e-8 {
                u.set_column(k, &(w / Complex64::new(norm, 0.0)));
                filled.push(k);
                break;
            }
        }
    }
}

/// `f(A)` with `f(λ) = λ^{-1/2}` for `λ > tol` and `f(λ) = 0` otherwise.
pub fn truncated_inverse_sqrt(a: &DenseOperator, tol: f64) -> Result<DenseOperator, NumopError> {
    let eig = hermitian_eig(a)?;
    if let Some(&lo) = eig.eigenvalues.first() {
        if lo < -tol {
            return Err(NumopError::NegativeEigenvalue { value: lo, tol });
        }
    }
    let out = eig.apply_function(|l| if l > tol { l.powf(-0.5) } else { 0.0 });
    if !out.is_finite() {
        return Err(NumopError::NonFinite("truncated_inverse_sqrt"));
    }
    Ok(out)
}

/// Partial isometry `T (T*T)^{-1/2}` together with the number of discarded eigenvalues of `T*T`.
#[derive(Debug, Clone)]
pub struct PolarPart {
    pub isometry: DenseOperator,
    /// Eigenvalues of `T*T` at or below the cut, i.e. the numerical kernel dimension of `T`.
    pub kernel_dim: usize,
    /// Orthonormal basis of the numerical kernel, one column per discarded eigenvalue.
    pub kernel_basis: DMatrix<Complex64>,
    /// Absolute cut applied to the spectrum of `T*T`.
    pub threshold: f64,
}

/// Polar partial isometry. Eigenvalues of `T*T` at or below `tol * λ_max(T*T)`
/// count as zero.
pub fn polar_part(t: &DenseOperator, tol: f64) -> Result<PolarPart, NumopError> {
    let gram = &t.adjoint() * t;
    let eig = hermitian_eig(&gram)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = tol * lmax;
    if let Some(&lo) = eig.eigenvalues.first() {
        if lo < -threshold {
            return Err(NumopError::NegativeEigenvalue { value: lo, tol: threshold });
        }
    }
    let kernel_dim = eig.eigenvalues.iter().filter(|l| **l <= threshold).count();
    let kernel_basis = eig.eigenvectors.columns(0, kernel_dim).into_owned();
    let inv_sqrt = eig.apply_function(|l| if l > threshold { l.powf(-0.5) } else { 0.0 });
    let isometry = t * &inv_sqrt;
    if !isometry.is_finite() {
        return Err(NumopError::NonFinite("polar_partial_isometry"));
    }
    Ok(PolarPart { isometry, kernel_dim, kernel_basis, threshold })
}

pub fn polar_partial_isometry(t: &DenseOperator, tol: f64) -> Result<DenseOperator, NumopError> {
    polar_part(t, tol).map(|p| p.isometry)
}
