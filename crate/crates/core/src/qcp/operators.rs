use std::collections::HashMap;

use num::complex::Complex64;
use num::Zero;
use serde::Serialize;

use super::{QcpError, TruncationContext};
use crate::ncwords::{self, Expansion, NCElement, NormalWord};
use crate::numop::{polar_part, DenseOperator, PolarPart, Vector};

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `√(1 - q^{-2(n+1)})`
fn ladder_weight(q: f64, n: usize) -> f64 {
    (1.0 - q.powi(-2 * (n as i32 + 1))).sqrt()
}

/// Truncated `α` (superdiagonal) and `γ` (diagonal).
pub fn build_alpha_gamma(ctx: &TruncationContext) -> (DenseOperator, DenseOperator) {
    let n = ctx.n;
    let alpha = DenseOperator::from_fn(n, |i, j| if j == i + 1 { re(ladder_weight(ctx.q, i)) } else { Complex64::zero() });
    let gamma = DenseOperator::from_fn(n, |i, j| if i == j { re(ctx.q.powi(-(i as i32))) } else { Complex64::zero() });
    (alpha, gamma)
}

/// Truncated `x1 = √c t1 α + t2 γ` and `x2 = -q^{-1} √c t1 γ + t2 α*`, entry by entry.
pub fn build_x_pair(ctx: &TruncationContext) -> (DenseOperator, DenseOperator) {
    let (n, q, s, t1, t2) = (ctx.n, ctx.q, ctx.sqrt_c(), ctx.t1, ctx.t2());
    let x1 = DenseOperator::from_fn(n, |i, j| {
        if i == j {
            t2 * q.powi(-(i as i32))
        } else if j == i + 1 {
            t1 * (s * ladder_weight(q, i))
        } else {
            Complex64::zero()
        }
    });
    let x2 = DenseOperator::from_fn(n, |i, j| {
        if i == j {
            -t1 * (s * q.powi(-(i as i32 + 1)))
        } else if i == j + 1 {
            t2 * ladder_weight(q, j)
        } else {
            Complex64::zero()
        }
    });
    (x1, x2)
}

/// `X1 = √c α + γ`, `X2 = -q^{-1} √c γ + α*`: the pair at `t1 = 1`.
pub fn fixed_gauge_generators(q: f64, c: f64, n: usize) -> Result<(DenseOperator, DenseOperator), QcpError> {
    let ctx = TruncationContext::new(q, c, re(1.0), n, 1e-10, (n / 4).max(1))?;
    Ok(build_x_pair(&ctx))
}

/// Closed-form kernel vector of `x1` with `z_0 = 1`, first `len` coordinates.
pub fn kernel_vector_x1(ctx: &TruncationContext, len: usize) -> Vector {
    let (q, s) = (ctx.q, ctx.sqrt_c());
    // phase of z_n is (-1)^n t2^n t1^{-n} = (-t2^2)^n
    let step_phase = -(ctx.t2() * ctx.t2());
    let mut log_mag = 0.0;
    let mut phase = re(1.0);
    let mut z = Vector::zeros(len);
    for n in 0..len {
        if n > 0 {
            let j = n as f64;
            log_mag += -(j - 1.0) * q.ln() - s.ln() - 0.5 * (-(q.powi(-2 * n as i32))).ln_1p();
            phase *= step_phase;
        }
        z[n] = phase * log_mag.exp();
    }
    z
}

/// `‖x1 z‖ / ‖z‖` with `z` zero-padded to the truncation size.
pub fn kernel_residual(x1: &DenseOperator, z: &Vector) -> f64 {
    let mut padded = Vector::zeros(x1.dim());
    padded.rows_mut(0, z.len()).copy_from(z);
    x1.apply(&padded).norm() / z.norm()
}

/// Numerical kernel of a truncated operator, split by where its vectors live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KernelCount {
    pub raw: usize,
    /// Kernel vectors with most of their mass in the trusted block.
    pub trusted: usize,
    /// Kernel vectors concentrated on the truncation boundary.
    pub boundary: usize,
}

impl KernelCount {
    fn classify(ctx: &TruncationContext, polar: &PolarPart) -> (Self, Vec<Vector>) {
        let mut trusted = Vec::new();
        let mut boundary = 0;
        for j in 0..polar.kernel_dim {
            let v: Vector = polar.kernel_basis.column(j).into_owned();
            let tail = ctx.tail_norm(&v);
            if tail * tail < 0.5 {
                trusted.push(v);
            } else {
                boundary += 1;
            }
        }
        (KernelCount { raw: polar.kernel_dim, trusted: trusted.len(), boundary }, trusted)
    }
}

/// Polar parts `x̃i = xi (xi* xi)^{-1/2}` with their kernel bookkeeping.
#[derive(Debug, Clone)]
pub struct TildePair {
    pub x1t: DenseOperator,
    pub x2t: DenseOperator,
    pub x1_kernel: KernelCount,
    pub x2_kernel: KernelCount,
    /// The trusted kernel vector of `x1`, as found by the eigensolver.
    pub x1_kernel_vector: Vector,
}

/// Builds both polar parts. Truncated `x2` always carries one spurious
/// near-zero singular value on the boundary; only trusted kernels count.
pub fn build_tilde_pair(ctx: &TruncationContext, x1: &DenseOperator, x2: &DenseOperator) -> Result<TildePair, QcpError> {
    let p1 = polar_part(x1, ctx.tol)?;
    let p2 = polar_part(x2, ctx.tol)?;
    let (x1_kernel, mut trusted1) = KernelCount::classify(ctx, &p1);
    let (x2_kernel, _) = KernelCount::classify(ctx, &p2);
    if x1_kernel.trusted != 1 {
        return Err(QcpError::Degenerate { operator: "x1", found: x1_kernel.trusted, expected: 1 });
    }
    if x2_kernel.trusted != 0 {
        return Err(QcpError::Degenerate { operator: "x2", found: x2_kernel.trusted, expected: 0 });
    }
    Ok(TildePair {
        x1t: p1.isometry,
        x2t: p2.isometry,
        x1_kernel,
        x2_kernel,
        x1_kernel_vector: trusted1.remove(0),
    })
}

/// Substitutes truncated matrices into a normal-form element.
pub fn realize(
    ctx: &TruncationContext,
    elem: &NCElement,
    alpha: &DenseOperator,
    gamma: &DenseOperator,
) -> Result<DenseOperator, QcpError> {
    let alpha_star = alpha.adjoint();
    let mut gamma_pows: HashMap<u32, DenseOperator> = HashMap::new();
    let mut ladder_pows: HashMap<i32, DenseOperator> = HashMap::new();
    let mut out = DenseOperator::zeros(ctx.n);
    for (word, coeff) in elem.terms() {
        let NormalWord { gamma_pow, ladder } = *word;
        let z = coeff.eval(ctx.q, ctx.c, ctx.t1)?;
        let g = gamma_pows.entry(gamma_pow).or_insert_with(|| gamma.pow(gamma_pow)).clone();
        let l = ladder_pows
            .entry(ladder)
            .or_insert_with(|| if ladder >= 0 { alpha.pow(ladder as u32) } else { alpha_star.pow((-ladder) as u32) })
            .clone();
        out = &out + &(&g * &l).scale(z);
    }
    Ok(out)
}

/// One cross-engine comparison on the trusted block.
#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    pub max_dev: f64,
}

/// Evaluates the normal forms of the six products and the linear identities
/// numerically and compares them with direct matrix arithmetic.
pub fn relation_suite(ctx: &TruncationContext) -> Result<Vec<RelationCheck>, QcpError> {
    let (alpha, gamma) = build_alpha_gamma(ctx);
    let (x1, x2) = build_x_pair(ctx);
    let (x1s, x2s) = (x1.adjoint(), x2.adjoint());
    let trusted = ctx.trusted();
    let dev = |a: &DenseOperator, b: &DenseOperator| (a - b).corner_max_abs(trusted);
    let mut out = Vec::new();

    let (nx1, nx2) = ncwords::nc_build_generators();
    out.push(RelationCheck { relation: "x1 entries".into(), max_dev: dev(&realize(ctx, &nx1, &alpha, &gamma)?, &x1) });
    out.push(RelationCheck { relation: "x2 entries".into(), max_dev: dev(&realize(ctx, &nx2, &alpha, &gamma)?, &x2) });

    for which in Expansion::ALL {
        let direct = match which {
            Expansion::X1sX1 => &x1s * &x1,
            Expansion::X2sX2 => &x2s * &x2,
            Expansion::X1sX2 => &x1s * &x2,
            Expansion::X2sX1 => &x2s * &x1,
            Expansion::X1X1s => &x1 * &x1s,
            Expansion::X2X2s => &x2 * &x2s,
        };
        let symbolic = realize(ctx, &ncwords::nc_expand_canonical(which), &alpha, &gamma)?;
        out.push(RelationCheck { relation: which.label().to_string(), max_dev: dev(&symbolic, &direct) });
    }

    let q2 = ctx.q * ctx.q;
    let lhs = &(&x1s * &x1) + &(&x2s * &x2).scale_real(q2);
    out.push(RelationCheck {
        relation: "x1*x1 + q^2 x2*x2 = q^2 + c".into(),
        max_dev: dev(&lhs, &DenseOperator::identity(ctx.n).scale_real(q2 + ctx.c)),
    });
    let lhs = &(&x1 * &x1s) + &(&x2 * &x2s);
    out.push(RelationCheck {
        relation: "x1 x1* + x2 x2* = 1 + c".into(),
        max_dev: dev(&lhs, &DenseOperator::identity(ctx.n).scale_real(1.0 + ctx.c)),
    });
    let id = DenseOperator::identity(ctx.n);
    let g2 = &gamma * &gamma;
    out.push(RelationCheck {
        relation: "a*a + g^2 = 1".into(),
        max_dev: dev(&(&(&alpha.adjoint() * &alpha) + &g2), &id),
    });
    out.push(RelationCheck {
        relation: "a a* + q^-2 g^2 = 1".into(),
        max_dev: dev(&(&(&alpha * &alpha.adjoint()) + &g2.scale_real(1.0 / q2)), &id),
    });
    out.push(RelationCheck {
        relation: "a g - q^-1 g a = 0".into(),
        max_dev: (&(&alpha * &gamma) - &(&gamma * &alpha).scale_real(1.0 / ctx.q)).corner_max_abs(trusted),
    });
    Ok(out)
}
