//! Truncated operators of the quantum complex projective line on
//! `ℓ²(ℤ≥0)`, their polar parts, the invariant-subspace decomposition and
//! the gauge redundancy of the circle parameter.
//!
//! Every numerical statement is checked on the trusted block, the first
//! `N - margin` coordinates, where corner truncation agrees with the
//! infinite operators up to superexponentially small defects.

mod decompose;
mod eigen;
mod gauge;
mod operators;

pub use decompose::{
    build_v_basis, h0_probe, measure_decomposition, seed_vectors, Decomposition, DecompositionReport, H0Probe,
    MatrixUnitCheck, Seeds, SpectralRow, VBasis, WoldSummary,
};
pub use eigen::{rational_from_f64, AffineContraction, ContractionKind, EigenSequence};
pub use gauge::{gauge_check, gauge_diagonal, GaugeReport, GaugeRow};
pub use operators::{
    build_alpha_gamma, build_tilde_pair, build_x_pair, fixed_gauge_generators, kernel_residual, kernel_vector_x1,
    realize, relation_suite, KernelCount, RelationCheck, TildePair,
};

use num::complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::laurent::DomainError;
use crate::numop::{NumopError, Vector};

/// Verification pass threshold on the trusted block.
pub const PASS_TOL: f64 = 1e-8;
/// Residuals above this abort the pipeline.
pub const HARD_FAIL_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum QcpError {
    #[error("invalid parameters: {0}")]
    InvalidContext(String),
    #[error("degenerate truncation: {operator} has {found} trusted near-zero singular values, expected {expected}; raise N")]
    Degenerate { operator: &'static str, found: usize, expected: usize },
    #[error("decomposition failure: trace({projection}) = {trace}, expected 1")]
    Decomposition { projection: &'static str, trace: f64 },
    #[error("truncation too small: {what} = {value:e}; raise N or lower K")]
    TruncationTooSmall { what: &'static str, value: f64 },
    #[error("verification failure: {check} at k = {k}, residual {residual:e}")]
    Verification { check: &'static str, k: usize, residual: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Numop(#[from] NumopError),
}

/// Parameter bundle for one numerical run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationContext {
    pub q: f64,
    pub c: f64,
    #[serde(serialize_with = "crate::serialize_complex")]
    pub t1: Complex64,
    pub n: usize,
    pub tol: f64,
    pub margin: usize,
}

impl TruncationContext {
    pub fn new(q: f64, c: f64, t1: Complex64, n: usize, tol: f64, margin: usize) -> Result<Self, QcpError> {
        let bad = |msg: String| Err(QcpError::InvalidContext(msg));
        if !(q.is_finite() && q > 1.0) {
            return bad(format!("q must be > 1, got {q}"));
        }
        if !(c.is_finite() && c > 0.0) {
            return bad(format!("c must be > 0, got {c}"));
        }
        let drift = (t1.norm() - 1.0).abs();
        if drift.is_nan() || drift > 1e-12 {
            return bad(format!("|t1| must be 1, got {}", t1.norm()));
        }
        if !(tol.is_finite() && tol > 0.0 && tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {tol}"));
        }
        if margin == 0 || 2 * margin >= n {
            return bad(format!("margin must satisfy 0 < margin < N/2, got margin {margin} with N {n}"));
        }
        Ok(TruncationContext { q, c, t1, n, tol, margin })
    }

    /// `t1 = exp(i angle)`
    pub fn from_angle(q: f64, c: f64, angle: f64, n: usize, tol: f64, margin: usize) -> Result<Self, QcpError> {
        Self::new(q, c, Complex64::from_polar(1.0, angle), n, tol, margin)
    }

    /// q = 2, c = 1, t1 = 1, N = 256, tol = 1e-10, margin = 64.
    pub fn reference() -> Self {
        Self::new(2.0, 1.0, Complex64::new(1.0, 0.0), 256, 1e-10, 64).expect("reference parameters are valid")
    }

    pub fn with_t1(&self, t1: Complex64) -> Result<Self, QcpError> {
        Self::new(self.q, self.c, t1, self.n, self.tol, self.margin)
    }

    pub fn t2(&self) -> Complex64 {
        self.t1.conj()
    }

    pub fn sqrt_c(&self) -> f64 {
        self.c.sqrt()
    }

    /// Size of the trusted block.
    pub fn trusted(&self) -> usize {
        self.n - self.margin
    }

    /// Norm of the part of `v` on the untrusted coordinates.
    pub fn tail_norm(&self, v: &Vector) -> f64 {
        v.rows(self.trusted(), self.margin).norm()
    }

    pub fn t1_angle(&self) -> f64 {
        self.t1.arg()
    }
}
