use num::complex::Complex64;
use serde::Serialize;

use super::operators::build_x_pair;
use super::{QcpError, TruncationContext};
use crate::numop::{hermitian_eig, svd_factor};

/// `D = diag(t̄^{2k})`, so that `D α D* = t² α` and `D γ D* = γ`.
pub fn gauge_diagonal(t: Complex64, n: usize) -> Vec<Complex64> {
    let theta = t.arg();
    (0..n).map(|k| Complex64::from_polar(1.0, -2.0 * k as f64 * theta)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeRow {
    pub angle: f64,
    /// Largest eigenvalue difference of `x1*x1` against `t1 = 1`.
    pub spectrum_dev: f64,
    /// Largest singular value difference of `x1*x2` against `t1 = 1`.
    pub singular_dev: f64,
    /// `‖x1*x1(t) - D x1*x1(1) D*‖_max`
    pub x1s_x1_conjugation: f64,
    /// `‖x1*x2(t) - t² D x1*x2(1) D*‖_max`
    pub x1s_x2_conjugation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub rows: Vec<GaugeRow>,
    pub spectrum_max_dev: f64,
    pub singular_max_dev: f64,
    pub conjugation_max_residual: f64,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Compares the `t1`-dependent operators against `t1 = 1` for every `t` in `ts`.
pub fn gauge_check(ctx: &TruncationContext, ts: &[Complex64]) -> Result<GaugeReport, QcpError> {
    let base = ctx.with_t1(Complex64::new(1.0, 0.0))?;
    let (x1, x2) = build_x_pair(&base);
    let a0 = &x1.adjoint() * &x1;
    let w0 = &x1.adjoint() * &x2;
    let eig0 = hermitian_eig(&a0)?.eigenvalues;
    let sv0 = svd_factor(&w0).singular_values;

    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let ctx_t = ctx.with_t1(t)?;
        let (y1, y2) = build_x_pair(&ctx_t);
        let a = &y1.adjoint() * &y1;
        let w = &y1.adjoint() * &y2;
        let d = gauge_diagonal(t, ctx.n);
        rows.push(GaugeRow {
            angle: t.arg(),
            spectrum_dev: max_diff(&hermitian_eig(&a)?.eigenvalues, &eig0),
            singular_dev: max_diff(&svd_factor(&w).singular_values, &sv0),
            x1s_x1_conjugation: (&a - &a0.conjugate_by_diagonal(&d)).max_abs(),
            x1s_x2_conjugation: (&w - &w0.conjugate_by_diagonal(&d).scale(t * t)).max_abs(),
        });
    }
    let fold = |f: fn(&GaugeRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(GaugeReport {
        spectrum_max_dev: fold(|r| r.spectrum_dev),
        singular_max_dev: fold(|r| r.singular_dev),
        conjugation_max_residual: fold(|r| r.x1s_x1_conjugation.max(r.x1s_x2_conjugation)),
        rows,
    })
}
