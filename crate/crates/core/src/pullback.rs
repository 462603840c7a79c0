//! Toeplitz symbols of operators restricted to the chains `ℋ1`, `ℋ2` of the
//! decomposition, winding-number indices, and the pullback condition that
//! both restrictions share one symbol.
//!
//! A symbol is estimated from the band structure of the matrix elements
//! `⟨u_{n+d}, T u_n⟩` along a chain `u`, averaged over a window of large `n`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use nalgebra::DMatrix;
use num::complex::Complex64;
use num::Zero;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::numop::DenseOperator;
use crate::qcp::{TruncationContext, VBasis};

/// Acceptance tolerance for symbol coefficients.
pub const SYMBOL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Subspace {
    #[serde(rename = "ambient")]
    Ambient,
    H1,
    H2,
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subspace::Ambient => "ambient",
            Subspace::H1 => "H1",
            Subspace::H2 => "H2",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PullbackError {
    #[error("unreliable symbol on {subspace}: coefficient {freq} scatters by {scatter:e} (limit {limit:e})")]
    Unreliable { subspace: Subspace, freq: i32, scatter: f64, limit: f64 },
    #[error("index undefined: symbol modulus drops to {min_modulus:e} (limit {limit:e})")]
    IndexUndefined { min_modulus: f64, limit: f64 },
    #[error("empty sampling window on {0}; raise K")]
    EmptyWindow(Subspace),
}

/// An orthonormal sequence `u_0, u_1, ...` with the window of source indices used for sampling.
#[derive(Debug, Clone)]
pub struct Chain {
    pub subspace: Subspace,
    pub vectors: DMatrix<Complex64>,
    pub window: (usize, usize),
}

impl Chain {
    /// Standard basis vectors of the trusted block.
    pub fn ambient(ctx: &TruncationContext, max_freq: usize) -> Self {
        let t = ctx.trusted();
        let vectors = DMatrix::identity(ctx.n, t);
        Chain { subspace: Subspace::Ambient, vectors, window: (t / 2, t.saturating_sub(1 + max_freq)) }
    }

    /// `v_i, v_{i+2}, ...`; the window covers v-indices `[K/2, K-2]`.
    pub fn from_basis(basis: &VBasis, i: usize, max_freq: usize) -> Self {
        assert!(i == 1 || i == 2, "chains are indexed by 1 or 2");
        let k = basis.k();
        let vectors = basis.chain(i);
        let len = vectors.ncols();
        let lo = (k / 2).saturating_sub(i).div_ceil(2).max(max_freq);
        let hi = ((k.saturating_sub(2 + i)) / 2).min(len.saturating_sub(1 + max_freq));
        let subspace = if i == 1 { Subspace::H1 } else { Subspace::H2 };
        Chain { subspace, vectors, window: (lo, hi) }
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// `M[m, n] = ⟨u_m, T u_n⟩`
    pub fn matrix_elements(&self, t: &DenseOperator) -> DMatrix<Complex64> {
        self.vectors.adjoint() * (t.matrix() * &self.vectors)
    }
}

/// Estimated Fourier coefficients of a symbol, `σ(z) = Σ_d a_d z^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSample {
    pub subspace: Subspace,
    pub window: (usize, usize),
    pub coeffs: BTreeMap<i32, Complex64>,
    /// Largest deviation of a single sample from its mean, per frequency.
    pub scatter: BTreeMap<i32, f64>,
}

impl SymbolSample {
    /// A symbol given directly by its coefficients.
    pub fn from_coeffs(coeffs: impl IntoIterator<Item = (i32, Complex64)>) -> Self {
        let coeffs: BTreeMap<i32, Complex64> = coeffs.into_iter().collect();
        let scatter = coeffs.keys().map(|d| (*d, 0.0)).collect();
        SymbolSample { subspace: Subspace::Ambient, window: (0, 0), coeffs, scatter }
    }

    pub fn coeff(&self, d: i32) -> Complex64 {
        self.coeffs.get(&d).copied().unwrap_or_else(Complex64::zero)
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.coeffs.iter().map(|(d, a)| a * Complex64::from_polar(1.0, *d as f64 * theta)).sum()
    }

    pub fn max_scatter(&self) -> f64 {
        self.scatter.values().cloned().fold(0.0, f64::max)
    }

    /// Largest coefficient difference over the union of frequencies.
    pub fn max_diff(&self, other: &SymbolSample) -> f64 {
        self.coeffs.keys().chain(other.coeffs.keys()).map(|d| (self.coeff(*d) - other.coeff(*d)).norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut out = self.clone();
        out.coeffs.values_mut().for_each(|z| *z *= a);
        out
    }

    pub fn add(&self, other: &SymbolSample) -> Self {
        let mut out = self.clone();
        for (d, z) in &other.coeffs {
            *out.coeffs.entry(*d).or_insert_with(Complex64::zero) += z;
            out.scatter.entry(*d).or_insert(0.0);
        }
        out
    }

    /// Product of symbols, truncated to frequencies in `[-max_freq, max_freq]`.
    pub fn convolve(&self, other: &SymbolSample, max_freq: i32) -> Self {
        let mut coeffs = BTreeMap::new();
        for (d1, a) in &self.coeffs {
            for (d2, b) in &other.coeffs {
                let d = d1 + d2;
                if d.abs() <= max_freq {
                    *coeffs.entry(d).or_insert_with(Complex64::zero) += a * b;
                }
            }
        }
        let mut out = SymbolSample::from_coeffs(coeffs);
        out.subspace = self.subspace;
        out.window = self.window;
        out
    }
}

impl Serialize for SymbolSample {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.coeffs.len()))?;
        for (d, z) in &self.coeffs {
            m.serialize_entry(&d.to_string(), &[z.re, z.im])?;
        }
        m.end()
    }
}

/// Averages the band `d` of the chain matrix elements over the window.
pub fn symbol_estimate(t: &DenseOperator, chain: &Chain, max_freq: usize, tol: f64) -> Result<SymbolSample, PullbackError> {
    let (lo, hi) = chain.window;
    if lo > hi || chain.is_empty() {
        return Err(PullbackError::EmptyWindow(chain.subspace));
    }
    let m = chain.matrix_elements(t);
    let limit = 10.0 * tol;
    let mut coeffs = BTreeMap::new();
    let mut scatter = BTreeMap::new();
    let d_max = max_freq as i32;
    for d in -d_max..=d_max {
        let samples: Vec<Complex64> = (lo..=hi).map(|n| m[((n as i32 + d) as usize, n)]).collect();
        let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
        let spread = samples.iter().map(|z| (z - mean).norm()).fold(0.0, f64::max);
        if spread > limit {
            return Err(PullbackError::Unreliable { subspace: chain.subspace, freq: d, scatter: spread, limit });
        }
        coeffs.insert(d, mean);
        scatter.insert(d, spread);
    }
    Ok(SymbolSample { subspace: chain.subspace, window: chain.window, coeffs, scatter })
}

/// Winding number of the symbol around 0 over `grid` equally spaced points.
pub fn winding_number(sample: &SymbolSample, grid: usize, tol: f64) -> Result<i32, PullbackError> {
    let values: Vec<Complex64> = (0..grid).map(|j| sample.eval(TAU * j as f64 / grid as f64)).collect();
    let min_modulus = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let limit = 10.0 * tol;
    if min_modulus.is_nan() || min_modulus <= limit {
        return Err(PullbackError::IndexUndefined { min_modulus, limit });
    }
    let total: f64 = (0..grid).map(|j| (values[(j + 1) % grid] / values[j]).arg()).sum();
    Ok((total / TAU).round() as i32)
}

/// Fredholm index of a Toeplitz-type operator: minus the winding of its symbol.
pub fn winding_index(sample: &SymbolSample, grid: usize, tol: f64) -> Result<i32, PullbackError> {
    winding_number(sample, grid, tol).map(|w| -w)
}

#[derive(Debug, Clone, Serialize)]
pub struct PullbackEntry {
    pub operator: String,
    #[serde(rename = "H1")]
    pub h1: SymbolSample,
    #[serde(rename = "H2")]
    pub h2: SymbolSample,
    pub max_coeff_diff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PullbackReport {
    pub entries: Vec<PullbackEntry>,
    pub pass: bool,
}

/// Each operator's symbols on `ℋ1` and `ℋ2` must agree coefficient-wise.
pub fn pullback_check(
    ops: &[(&str, &DenseOperator)],
    basis: &VBasis,
    max_freq: usize,
    tol: f64,
) -> Result<PullbackReport, PullbackError> {
    let c1 = Chain::from_basis(basis, 1, max_freq);
    let c2 = Chain::from_basis(basis, 2, max_freq);
    let mut entries = Vec::with_capacity(ops.len());
    for (name, t) in ops {
        let h1 = symbol_estimate(t, &c1, max_freq, tol)?;
        let h2 = symbol_estimate(t, &c2, max_freq, tol)?;
        let max_coeff_diff = h1.max_diff(&h2);
        entries.push(PullbackEntry { operator: name.to_string(), h1, h2, max_coeff_diff, pass: max_coeff_diff < tol });
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(PullbackReport { entries, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactRemainder {
    pub corner_size: usize,
    /// Largest `|⟨u_m, T u_n⟩ - a_{m-n}|` with `m` or `n` outside the corner.
    pub outside_max: f64,
    pub inside_max: f64,
}

/// Compares `T` on the chain with the Toeplitz model built from `sample`.
pub fn compact_remainder_check(t: &DenseOperator, chain: &Chain, sample: &SymbolSample, corner_size: usize) -> CompactRemainder {
    let m = chain.matrix_elements(t);
    let len = chain.len();
    let mut outside_max: f64 = 0.0;
    let mut inside_max: f64 = 0.0;
    for a in 0..len {
        for b in 0..len {
            let r = (m[(a, b)] - sample.coeff(a as i32 - b as i32)).norm();
            if a >= corner_size || b >= corner_size {
                outside_max = outside_max.max(r);
            } else {
                inside_max = inside_max.max(r);
            }
        }
    }
    CompactRemainder { corner_size, outside_max, inside_max }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcp::{measure_decomposition, Decomposition};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> &'static Decomposition {
        static D: OnceLock<Decomposition> = OnceLock::new();
        D.get_or_init(|| Decomposition::run(&TruncationContext::reference(), 40).unwrap())
    }

    #[test]
    fn winding_of_simple_symbols() {
        let constant = SymbolSample::from_coeffs([(0, c(1.0, 0.0))]);
        assert_eq!(winding_index(&constant, 64, 1e-6), Ok(0));
        let t2 = Complex64::from_polar(1.0, -0.4);
        let shift = SymbolSample::from_coeffs([(1, t2)]);
        assert_eq!(winding_number(&shift, 64, 1e-6), Ok(1));
        assert_eq!(winding_index(&shift, 64, 1e-6), Ok(-1));
        let double = SymbolSample::from_coeffs([(2, c(0.5, 0.0)), (0, c(0.1, 0.0))]);
        assert_eq!(winding_index(&double, 128, 1e-6), Ok(-2));
        let adjoint = SymbolSample::from_coeffs([(-1, c(1.0, 0.0))]);
        assert_eq!(winding_index(&adjoint, 64, 1e-6), Ok(1));
    }

    #[test]
    fn vanishing_symbol_has_no_index() {
        let s = SymbolSample::from_coeffs([(0, c(1.0, 0.0)), (1, c(1.0, 0.0))]);
        assert!(matches!(winding_index(&s, 64, 1e-6), Err(PullbackError::IndexUndefined { .. })));
    }

    #[test]
    fn reference_symbols() {
        let d = reference();
        let c1 = Chain::from_basis(&d.basis, 1, 2);
        let c2 = Chain::from_basis(&d.basis, 2, 2);
        for chain in [&c1, &c2] {
            let s = symbol_estimate(&d.x1s_x1, chain, 2, SYMBOL_TOL).unwrap();
            assert!((s.coeff(0) - c(1.0, 0.0)).norm() < 1e-6);
            let s = symbol_estimate(&d.x2s_x2, chain, 2, SYMBOL_TOL).unwrap();
            assert!((s.coeff(0) - c(1.0, 0.0)).norm() < 1e-6);
            let s = symbol_estimate(&d.shift, chain, 2, SYMBOL_TOL).unwrap();
            assert!((s.coeff(1) - c(1.0, 0.0)).norm() < 1e-6);
            for dd in [-2, -1, 0, 2] {
                assert!(s.coeff(dd).norm() < 1e-6);
            }
            let s = symbol_estimate(&d.x1s_x2, chain, 2, SYMBOL_TOL).unwrap();
            assert!((s.coeff(1).norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn ambient_indices() {
        let d = reference();
        let amb = Chain::ambient(&d.ctx, 2);
        let x2 = symbol_estimate(&d.x2, &amb, 2, SYMBOL_TOL).unwrap();
        assert_eq!(winding_index(&x2, 256, SYMBOL_TOL), Ok(-1));
        let x1 = symbol_estimate(&d.x1, &amb, 2, SYMBOL_TOL).unwrap();
        assert_eq!(winding_index(&x1, 256, SYMBOL_TOL), Ok(1));
        let w = symbol_estimate(&d.x1s_x2, &amb, 2, SYMBOL_TOL).unwrap();
        assert_eq!(winding_index(&w, 256, SYMBOL_TOL), Ok(-2));
        let u = symbol_estimate(&d.shift, &amb, 2, SYMBOL_TOL).unwrap();
        assert_eq!(winding_index(&u, 256, SYMBOL_TOL), Ok(-2));
    }

    #[test]
    fn generators_satisfy_pullback() {
        let d = reference();
        let ops = [("x1~*x2~", &d.shift), ("x1*x1", &d.x1s_x1), ("x2*x2", &d.x2s_x2)];
        let r = pullback_check(&ops, &d.basis, 2, SYMBOL_TOL).unwrap();
        assert!(r.pass, "{:?}", r.entries.iter().map(|e| e.max_coeff_diff).collect::<Vec<_>>());
    }

    /// Shift on ℋ1 and shift squared on ℋ2.
    fn mismatched(d: &Decomposition) -> DenseOperator {
        let b = &d.basis;
        let mut pairs = Vec::new();
        for k in (1..=b.k()).step_by(2) {
            if k + 2 <= b.k() {
                pairs.push((b.v(k + 2).clone(), b.v(k).clone()));
            }
        }
        for k in (2..=b.k()).step_by(2) {
            if k + 4 <= b.k() {
                pairs.push((b.v(k + 4).clone(), b.v(k).clone()));
            }
        }
        let refs: Vec<_> = pairs.iter().map(|(a, b)| (a, b)).collect();
        DenseOperator::from_outer_products(d.ctx.n, &refs)
    }

    #[test]
    fn mismatched_symbols_fail() {
        let d = reference();
        let t = mismatched(d);
        let r = pullback_check(&[("mismatch", &t)], &d.basis, 2, SYMBOL_TOL).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn compact_perturbation_keeps_pass() {
        let d = reference();
        let t = &d.shift + &d.seeds.p1;
        let r = pullback_check(&[("shift + p1", &t)], &d.basis, 2, SYMBOL_TOL).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn compact_remainders() {
        let d = reference();
        let chain = Chain::from_basis(&d.basis, 1, 2);
        let s = symbol_estimate(&d.x1s_x1, &chain, 2, SYMBOL_TOL).unwrap();
        let r = compact_remainder_check(&d.x1s_x1, &chain, &s, 10);
        assert!(r.outside_max < 1e-6, "{}", r.outside_max);
        assert!(r.inside_max > 0.5);
        let s = symbol_estimate(&d.shift, &chain, 2, SYMBOL_TOL).unwrap();
        let r = compact_remainder_check(&d.shift, &chain, &s, 0);
        assert!(r.outside_max < 1e-12);
        let zero = DenseOperator::zeros(d.ctx.n);
        let s = symbol_estimate(&zero, &chain, 2, SYMBOL_TOL).unwrap();
        assert_eq!(compact_remainder_check(&zero, &chain, &s, 0).outside_max, 0.0);
    }

    #[test]
    fn symbol_identities() {
        let d = reference();
        let q2 = d.ctx.q * d.ctx.q;
        let chain = Chain::from_basis(&d.basis, 2, 2);
        let a = symbol_estimate(&d.x1s_x1, &chain, 2, SYMBOL_TOL).unwrap();
        let b = symbol_estimate(&d.x2s_x2, &chain, 2, SYMBOL_TOL).unwrap();
        let sum = a.add(&b.scale(c(q2, 0.0)));
        let expected = SymbolSample::from_coeffs([(0, c(q2 + d.ctx.c, 0.0))]);
        assert!(sum.max_diff(&expected) < 1e-6);
        // multiplicativity: σ(U*U) = σ(U*) σ(U) = 1
        let ustar = symbol_estimate(&d.shift.adjoint(), &chain, 2, SYMBOL_TOL).unwrap();
        let u = symbol_estimate(&d.shift, &chain, 2, SYMBOL_TOL).unwrap();
        let uu = symbol_estimate(&(&d.shift.adjoint() * &d.shift), &chain, 2, SYMBOL_TOL).unwrap();
        assert!(uu.max_diff(&ustar.convolve(&u, 2)) < 1e-6);
        let prod = symbol_estimate(&(&d.x1s_x1 * &d.shift), &chain, 2, SYMBOL_TOL).unwrap();
        assert!(prod.max_diff(&a.convolve(&u, 2)) < 1e-6);
    }

    #[test]
    fn report_still_measures() {
        let r = measure_decomposition(reference()).unwrap();
        assert_eq!(r.k, 40);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn symbol_is_linear(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0) {
            let d = reference();
            let chain = Chain::from_basis(&d.basis, 1, 2);
            let (a, b) = (c(ar, ai), c(br, bi));
            let combo = &d.x1s_x1.scale(a) + &d.shift.scale(b);
            let lhs = symbol_estimate(&combo, &chain, 2, SYMBOL_TOL * 10.0).unwrap();
            let s1 = symbol_estimate(&d.x1s_x1, &chain, 2, SYMBOL_TOL).unwrap();
            let s2 = symbol_estimate(&d.shift, &chain, 2, SYMBOL_TOL).unwrap();
            prop_assert!(lhs.max_diff(&s1.scale(a).add(&s2.scale(b))) < 1e-12);
        }

        #[test]
        fn winding_ignores_positive_scale(scale in 0.01f64..100.0, d in -3i32..=3, theta in 0.0f64..6.0) {
            let s = SymbolSample::from_coeffs([(d, Complex64::from_polar(1.0, theta)), (d + 7, c(0.2, 0.0))]);
            let scaled = s.scale(c(scale, 0.0));
            prop_assert_eq!(winding_number(&s, 256, 1e-6), winding_number(&scaled, 256, 1e-6));
            prop_assert_eq!(winding_number(&s, 256, 1e-6), Ok(d));
        }
    }
}
