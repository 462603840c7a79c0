use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::Serialize;

use super::operators::{build_tilde_pair, build_x_pair, kernel_residual, kernel_vector_x1, KernelCount, TildePair};
use super::{EigenSequence, QcpError, TruncationContext, HARD_FAIL_TOL};
use crate::numop::{hermitian_eig, inner, DenseOperator, Vector};

/// Rotates `v` so its first non-negligible coordinate is real positive.
fn fix_phase(v: Vector) -> Vector {
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-8 * peak) {
        Some(first) => {
            let phase = first.conj() / first.norm();
            v * phase
        }
        None => v,
    }
}

fn dominant_eigenvector(p: &DenseOperator) -> Result<Vector, QcpError> {
    let eig = hermitian_eig(p)?;
    Ok(fix_phase(eig.eigenvector(eig.eigenvalues.len() - 1)))
}

/// Rank-one projections onto the two wandering directions and their unit vectors.
#[derive(Debug, Clone)]
pub struct Seeds {
    /// `1 - x̃1* x̃1`
    pub p1: DenseOperator,
    /// `x̃1* (1 - x̃2 x̃2*) x̃1`
    pub p2: DenseOperator,
    pub v1: Vector,
    pub v2: Vector,
    pub trace_p1: f64,
    pub trace_p2: f64,
    pub idempotency_p1: f64,
    pub idempotency_p2: f64,
    pub overlap: f64,
}

pub fn seed_vectors(ctx: &TruncationContext, x1t: &DenseOperator, x2t: &DenseOperator) -> Result<Seeds, QcpError> {
    let id = DenseOperator::identity(ctx.n);
    let x1ts = x1t.adjoint();
    let p1 = &id - &(&x1ts * x1t);
    let cokernel = &id - &(x2t * &x2t.adjoint());
    let p2 = &(&x1ts * &cokernel) * x1t;
    let trace_p1 = p1.trace().re;
    let trace_p2 = p2.trace().re;
    for (projection, trace) in [("p1", trace_p1), ("p2", trace_p2)] {
        if (trace - 1.0).abs() > 1e-3 {
            return Err(QcpError::Decomposition { projection, trace });
        }
    }
    let idempotency = |p: &DenseOperator| (&(p * p) - p).frobenius();
    let v1 = dominant_eigenvector(&p1)?;
    let v2 = dominant_eigenvector(&p2)?;
    Ok(Seeds {
        idempotency_p1: idempotency(&p1),
        idempotency_p2: idempotency(&p2),
        overlap: inner(&v1, &v2).norm(),
        p1,
        p2,
        v1,
        v2,
        trace_p1,
        trace_p2,
    })
}

/// Orthonormal vectors `v_{i+2n} = (x̃1* x̃2)^n v_i`, stored 1-based via [`VBasis::v`].
#[derive(Debug, Clone)]
pub struct VBasis {
    pub vectors: Vec<Vector>,
    pub gram_max_dev: f64,
    /// Largest norm any `v_k` carries on the untrusted coordinates.
    pub boundary_mass_max: f64,
}

impl VBasis {
    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn v(&self, k: usize) -> &Vector {
        &self.vectors[k - 1]
    }

    /// All vectors as columns.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_columns(&self.vectors)
    }

    /// Columns `v_i, v_{i+2}, v_{i+4}, ...` spanning the truncated `ℋ_i`.
    pub fn chain(&self, i: usize) -> DMatrix<Complex64> {
        let cols: Vec<Vector> = self.vectors.iter().skip(i - 1).step_by(2).cloned().collect();
        DMatrix::from_columns(&cols)
    }
}

pub fn build_v_basis(
    ctx: &TruncationContext,
    shift: &DenseOperator,
    v1: &Vector,
    v2: &Vector,
    k: usize,
) -> Result<VBasis, QcpError> {
    if k < 2 || k > ctx.trusted() {
        return Err(QcpError::InvalidContext(format!("K must lie in [2, N - margin], got {k}")));
    }
    let mut vectors = vec![v1.clone(), v2.clone()];
    while vectors.len() < k {
        let next = shift.apply(&vectors[vectors.len() - 2]);
        vectors.push(next);
    }
    let m = DMatrix::from_columns(&vectors);
    let gram = m.adjoint() * &m;
    let gram_max_dev = DenseOperator::from_matrix(gram - DMatrix::identity(k, k)).max_abs();
    let boundary_mass_max = vectors.iter().map(|v| ctx.tail_norm(v)).fold(0.0, f64::max);
    if gram_max_dev > HARD_FAIL_TOL {
        return Err(QcpError::TruncationTooSmall { what: "v-basis Gram deviation", value: gram_max_dev });
    }
    if boundary_mass_max > HARD_FAIL_TOL {
        return Err(QcpError::TruncationTooSmall { what: "v-basis boundary mass", value: boundary_mass_max });
    }
    Ok(VBasis { vectors, gram_max_dev, boundary_mass_max })
}

/// Every intermediate object of one decomposition run.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub ctx: TruncationContext,
    pub x1: DenseOperator,
    pub x2: DenseOperator,
    pub x1s_x1: DenseOperator,
    pub x2s_x2: DenseOperator,
    pub x1s_x2: DenseOperator,
    pub tilde: TildePair,
    /// `x̃1* x̃2`
    pub shift: DenseOperator,
    pub seeds: Seeds,
    pub basis: VBasis,
    pub eigseq: EigenSequence,
}

impl Decomposition {
    pub fn run(ctx: &TruncationContext, k: usize) -> Result<Self, QcpError> {
        let (x1, x2) = build_x_pair(ctx);
        Self::from_generators(ctx, x1, x2, k)
    }

    /// Runs the pipeline on explicitly supplied generators.
    pub fn from_generators(ctx: &TruncationContext, x1: DenseOperator, x2: DenseOperator, k: usize) -> Result<Self, QcpError> {
        let tilde = build_tilde_pair(ctx, &x1, &x2)?;
        let shift = &tilde.x1t.adjoint() * &tilde.x2t;
        let seeds = seed_vectors(ctx, &tilde.x1t, &tilde.x2t)?;
        let basis = build_v_basis(ctx, &shift, &seeds.v1, &seeds.v2, k)?;
        let x1s = x1.adjoint();
        Ok(Decomposition {
            ctx: *ctx,
            x1s_x1: &x1s * &x1,
            x2s_x2: &x2.adjoint() * &x2,
            x1s_x2: &x1s * &x2,
            x1,
            x2,
            tilde,
            shift,
            seeds,
            basis,
            eigseq: EigenSequence::new(ctx.q, ctx.c, k),
        })
    }
}

/// One measured quantity against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRow {
    pub k: usize,
    pub formula: f64,
    pub measured: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixUnitCheck {
    /// `‖ε v1 - v3‖`
    pub maps_v1_to_v3: f64,
    /// `‖ε v2‖`
    pub annihilates_v2: f64,
    /// `‖ε v4‖`
    pub annihilates_v4: f64,
}

/// Evidence about the orthogonal complement of the v-basis; not a model of `ℋ0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H0Probe {
    pub complement_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_deviation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WoldSummary {
    /// Trace of `1 - UU*` on the trusted block, `U = x̃1* x̃2`.
    pub wandering_dim: f64,
    /// Number of chain vectors `U^n v_i` that stay inside the trusted block.
    pub chain_capacity: usize,
    /// Trusted dimension not reached by the chains.
    pub unitary_dim_estimate: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub k: usize,
    /// `⟨v_k, x1*x1 v_k⟩` against `c_k`; residual is `‖x1*x1 v_k - c_k v_k‖`.
    pub eigenvalues: Vec<SpectralRow>,
    /// `⟨v_k, x2*x2 v_k⟩` against `1 + q^{-2} c - q^{-2} c_k`.
    pub companion_eigenvalues: Vec<SpectralRow>,
    /// `⟨v_{k+2}, x1*x2 v_k⟩` against the weight formula.
    pub weights: Vec<SpectralRow>,
    pub weight_imag_max: f64,
    /// `‖x1*x2 v_k - w_k v_{k+2}‖` per k.
    pub leakage: Vec<f64>,
    pub gram_max_dev: f64,
    pub boundary_mass_max: f64,
    pub intertwine_residual: f64,
    pub x2t_isometry_defect: f64,
    pub x1t_coisometry_defect: f64,
    pub trace_p1: f64,
    pub trace_p2: f64,
    pub idempotency_p1: f64,
    pub idempotency_p2: f64,
    pub seed_overlap: f64,
    pub kernel_overlap: f64,
    pub kernel_residual: f64,
    pub kernel_x1: KernelCount,
    pub kernel_x2: KernelCount,
    pub matrix_unit: MatrixUnitCheck,
    pub h0_probe: H0Probe,
    pub wold: WoldSummary,
    #[serde(skip)]
    pub v_basis: Vec<Vector>,
}

impl DecompositionReport {
    pub fn eigen_residual_max(&self) -> f64 {
        self.eigenvalues.iter().map(|r| r.residual.max((r.measured - r.formula).abs())).fold(0.0, f64::max)
    }

    pub fn weight_dev_max(&self) -> f64 {
        self.weights.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn leakage_max(&self) -> f64 {
        self.leakage.iter().cloned().fold(0.0, f64::max)
    }
}

fn check(check: &'static str, k: usize, residual: f64) -> Result<(), QcpError> {
    if residual > HARD_FAIL_TOL || residual.is_nan() {
        Err(QcpError::Verification { check, k, residual })
    } else {
        Ok(())
    }
}

pub fn measure_decomposition(d: &Decomposition) -> Result<DecompositionReport, QcpError> {
    let ctx = &d.ctx;
    let basis = &d.basis;
    let kk = basis.k();
    let seq = &d.eigseq;
    let mut eigenvalues = Vec::new();
    let mut companion_eigenvalues = Vec::new();
    let mut weights = Vec::new();
    let mut leakage = Vec::new();
    let mut weight_imag_max: f64 = 0.0;

    for k in 1..=kk.saturating_sub(2) {
        let v = basis.v(k);
        let av = d.x1s_x1.apply(v);
        let ck = seq.c(k);
        let row = SpectralRow {
            k,
            formula: ck,
            measured: inner(v, &av).re,
            residual: (&av - v * Complex64::new(ck, 0.0)).norm(),
        };
        check("x1*x1 eigen-residual", k, row.residual.max((row.measured - ck).abs()))?;
        eigenvalues.push(row);

        let bv = d.x2s_x2.apply(v);
        let ck2 = seq.companion(k);
        let row = SpectralRow {
            k,
            formula: ck2,
            measured: inner(v, &bv).re,
            residual: (&bv - v * Complex64::new(ck2, 0.0)).norm(),
        };
        check("x2*x2 eigen-residual", k, row.residual)?;
        companion_eigenvalues.push(row);

        let target = basis.v(k + 2);
        let wv = d.x1s_x2.apply(v);
        let w = inner(target, &wv);
        weight_imag_max = weight_imag_max.max(w.im.abs());
        let formula = seq.weight(k);
        let row = SpectralRow { k, formula, measured: w.re, residual: (w - formula).norm() };
        check("weight", k, row.residual)?;
        weights.push(row);
        let leak = (&wv - target * w).norm();
        check("off-shift leakage", k, leak)?;
        leakage.push(leak);
    }

    let trusted = ctx.trusted();
    let id = DenseOperator::identity(ctx.n);
    let lhs = &d.x1s_x1 * &d.shift;
    let rhs = &d.shift * &(&id.scale_real(1.0 + ctx.c) - &d.x2s_x2);
    let intertwine_residual = (&lhs - &rhs).corner_frobenius(trusted);
    check("intertwining", 0, intertwine_residual)?;

    let x1t = &d.tilde.x1t;
    let x2t = &d.tilde.x2t;
    let x2t_isometry_defect = (&(&x2t.adjoint() * x2t) - &id).corner_frobenius(trusted);
    let x1t_coisometry_defect = (&(x1t * &x1t.adjoint()) - &id).corner_frobenius(trusted);

    let z = kernel_vector_x1(ctx, ctx.n);
    let zn = &z / Complex64::new(z.norm(), 0.0);
    let kernel_overlap = inner(&d.seeds.v1, &zn).norm();

    let matrix_unit = if kk >= 4 {
        let unit = &d.shift * &d.seeds.p1;
        MatrixUnitCheck {
            maps_v1_to_v3: (unit.apply(basis.v(1)) - basis.v(3)).norm(),
            annihilates_v2: unit.apply(basis.v(2)).norm(),
            annihilates_v4: unit.apply(basis.v(4)).norm(),
        }
    } else {
        MatrixUnitCheck { maps_v1_to_v3: f64::NAN, annihilates_v2: f64::NAN, annihilates_v4: f64::NAN }
    };

    Ok(DecompositionReport {
        k: kk,
        eigenvalues,
        companion_eigenvalues,
        weights,
        weight_imag_max,
        leakage,
        gram_max_dev: basis.gram_max_dev,
        boundary_mass_max: basis.boundary_mass_max,
        intertwine_residual,
        x2t_isometry_defect,
        x1t_coisometry_defect,
        trace_p1: d.seeds.trace_p1,
        trace_p2: d.seeds.trace_p2,
        idempotency_p1: d.seeds.idempotency_p1,
        idempotency_p2: d.seeds.idempotency_p2,
        seed_overlap: d.seeds.overlap,
        kernel_overlap,
        kernel_residual: kernel_residual(&d.x1, &z),
        kernel_x1: d.tilde.x1_kernel,
        kernel_x2: d.tilde.x2_kernel,
        matrix_unit,
        h0_probe: h0_probe(ctx, basis, &d.x1s_x1)?,
        wold: wold_summary(ctx, &d.shift, basis),
        v_basis: basis.vectors.clone(),
    })
}

/// Complement of the v-basis inside the trusted block, and how far
/// `x1*x1 - c` is from vanishing on it.
pub fn h0_probe(ctx: &TruncationContext, basis: &VBasis, x1s_x1: &DenseOperator) -> Result<H0Probe, QcpError> {
    let t = ctx.trusted();
    let vt = basis.matrix().rows(0, t).into_owned();
    let complement = DenseOperator::from_matrix(DMatrix::identity(t, t) - &vt * vt.adjoint());
    let eig = hermitian_eig(&complement)?;
    let cols: Vec<usize> = (0..t).filter(|&j| eig.eigenvalues[j] > 0.5).collect();
    if cols.is_empty() {
        return Ok(H0Probe { complement_dim: 0, max_deviation: None, mean_deviation: None });
    }
    let u = eig.eigenvectors.select_columns(cols.iter());
    let a = x1s_x1.corner(t, t);
    let au = &a * &u;
    let devs: Vec<f64> = (0..cols.len())
        .map(|j| (u.column(j).dotc(&au.column(j)) - Complex64::new(ctx.c, 0.0)).norm())
        .collect();
    Ok(H0Probe {
        complement_dim: cols.len(),
        max_deviation: Some(devs.iter().cloned().fold(0.0, f64::max)),
        mean_deviation: Some(devs.iter().sum::<f64>() / devs.len() as f64),
    })
}

fn wold_summary(ctx: &TruncationContext, shift: &DenseOperator, basis: &VBasis) -> WoldSummary {
    let t = ctx.trusted();
    let id = DenseOperator::identity(ctx.n);
    let wandering_dim = (&id - &(shift * &shift.adjoint())).corner(t, t).trace().re;
    let mut chain_capacity = 0;
    for i in 1..=2 {
        let mut v = basis.v(i).clone();
        while chain_capacity < ctx.n && ctx.tail_norm(&v) <= 1e-10 {
            chain_capacity += 1;
            v = shift.apply(&v);
        }
    }
    WoldSummary { wandering_dim, chain_capacity, unitary_dim_estimate: t.saturating_sub(chain_capacity) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(q: f64, c: f64, angle: f64, n: usize, k: usize) -> (Decomposition, DecompositionReport) {
        let ctx = TruncationContext::from_angle(q, c, angle, n, 1e-10, n / 4).unwrap();
        let d = Decomposition::run(&ctx, k).unwrap();
        let r = measure_decomposition(&d).unwrap();
        (d, r)
    }

    #[test]
    fn reference_run_small() {
        let (d, r) = run(2.0, 1.0, 0.0, 128, 24);
        assert!(r.eigen_residual_max() < 1e-8, "{}", r.eigen_residual_max());
        assert!(r.weight_dev_max() < 1e-8);
        assert!(r.leakage_max() < 1e-8);
        assert!(r.gram_max_dev < 1e-8);
        assert!(r.intertwine_residual < 1e-8, "{}", r.intertwine_residual);
        assert!((r.trace_p1 - 1.0).abs() < 1e-6 && (r.trace_p2 - 1.0).abs() < 1e-6);
        assert!(r.seed_overlap < 1e-8);
        assert!(r.kernel_overlap > 1.0 - 1e-8);
        assert!((r.weights[0].measured - 0.968246).abs() < 1e-6);
        assert!((r.weights[2].measured - 0.998045).abs() < 1e-6);
        assert!((r.companion_eigenvalues[0].measured - 1.25).abs() < 1e-8);
        assert!(r.matrix_unit.maps_v1_to_v3 < 1e-8);
        assert!(r.matrix_unit.annihilates_v2 < 1e-8 && r.matrix_unit.annihilates_v4 < 1e-8);
        // v3 is the shift of v1 by construction
        assert!((d.shift.apply(d.basis.v(1)) - d.basis.v(3)).norm() == 0.0);
        assert!(d.basis.boundary_mass_max < 1e-10);
    }

    #[test]
    fn phases_make_weights_positive() {
        let (_, r) = run(1.6, 0.7, 1.0, 96, 16);
        for w in &r.weights {
            assert!(w.measured > 0.0);
        }
        assert!(r.weight_imag_max < 1e-10);
    }

    #[test]
    fn fixed_gauge_pipeline_reproduces_report() {
        let ctx = TruncationContext::from_angle(2.0, 1.0, 0.0, 96, 1e-10, 24).unwrap();
        let (x1, x2) = super::super::fixed_gauge_generators(2.0, 1.0, 96).unwrap();
        let a = measure_decomposition(&Decomposition::from_generators(&ctx, x1, x2, 16).unwrap()).unwrap();
        let b = measure_decomposition(&Decomposition::run(&ctx, 16).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn probe_and_wold_are_reported() {
        let (_, r) = run(2.0, 1.0, 0.0, 96, 16);
        assert_eq!(r.h0_probe.complement_dim, 72 - 16);
        assert!(r.h0_probe.max_deviation.is_some());
        assert!((r.wold.wandering_dim - 2.0).abs() < 1e-6);
    }

    #[test]
    fn full_basis_leaves_empty_complement() {
        let ctx = TruncationContext::from_angle(3.0, 1.0, 0.0, 24, 1e-10, 4).unwrap();
        let (x1, _) = build_x_pair(&ctx);
        let vectors = (0..20).map(|j| DMatrix::<Complex64>::identity(24, 24).column(j).into_owned()).collect();
        let basis = VBasis { vectors, gram_max_dev: 0.0, boundary_mass_max: 0.0 };
        let probe = h0_probe(&ctx, &basis, &(&x1.adjoint() * &x1)).unwrap();
        assert_eq!(probe.complement_dim, 0);
        assert!(probe.max_deviation.is_none());
        let json = serde_json::to_string(&probe).unwrap();
        assert!(!json.contains("deviation"));
    }

    #[test]
    fn too_large_k_is_rejected() {
        let ctx = TruncationContext::from_angle(1.2, 1.0, 0.0, 32, 1e-10, 8).unwrap();
        let err = Decomposition::run(&ctx, 24).unwrap_err();
        assert!(matches!(err, QcpError::TruncationTooSmall { .. }), "{err}");
    }
}
