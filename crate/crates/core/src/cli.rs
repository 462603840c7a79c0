//! Command-line front end: parameter parsing, the report document, and its
//! JSON and CSV encodings.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::ncwords::{identity_suite, IdentityCheck};
use crate::numop::hermitian_eig;
use crate::pullback::{
    compact_remainder_check, pullback_check, symbol_estimate, winding_number, Chain, CompactRemainder, PullbackError,
    PullbackReport, SymbolSample, Subspace, SYMBOL_TOL,
};
use crate::qcp::{
    build_x_pair, gauge_check, measure_decomposition, rational_from_f64, Decomposition, DecompositionReport,
    EigenSequence, GaugeReport, H0Probe, QcpError, SpectralRow, TruncationContext, WoldSummary, PASS_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_IO: i32 = 4;

const WINDING_GRID: usize = 512;
const REMAINDER_CORNER: usize = 10;
const DIRECT_SPECTRUM_TERMS: usize = 6;
const DIRECT_SPECTRUM_TOL: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "qcpline", version, about = "Exact and numerical checks for the nonstandard quantum CP^1")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Exact normal-form identity suite
    VerifySymbolic(RunArgs),
    /// Invariant-subspace decomposition with all residuals
    Decompose(RunArgs),
    /// Weights of the double shift x1*x2 on the v-basis
    Weights(RunArgs),
    /// Eigenvalue recursion, closed forms and direct diagonalization
    Spectrum(RunArgs),
    /// Toeplitz symbols on H1 and H2 and the pullback condition
    Symbol(RunArgs),
    /// Winding-number indices and truncated kernel counts
    Index(RunArgs),
    /// Invariance under the circle parameter t1
    Gauge(RunArgs),
    /// Probe of the complement of the v-basis
    H0Probe(RunArgs),
    /// Everything above
    Report(RunArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Deformation parameter q > 1; a comma list runs a grid
    #[arg(long, default_value = "2")]
    pub q: String,
    /// Parameter c > 0; a comma list runs a grid
    #[arg(long, default_value = "1")]
    pub c: String,
    /// t1 = exp(i angle)
    #[arg(long = "t1-angle", default_value_t = 0.0, allow_negative_numbers = true)]
    pub t1_angle: f64,
    /// Truncation size
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Number of v-basis vectors
    #[arg(long, default_value_t = 40)]
    pub k: usize,
    /// Relative spectral threshold
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Boundary rows excluded from every check
    #[arg(long, default_value_t = 64)]
    pub margin: usize,
    /// Largest symbol frequency
    #[arg(long, default_value_t = 2)]
    pub max_freq: usize,
    /// Angles compared against t1 = 1 by the gauge check
    #[arg(long, default_value = "1.0471975511965976,2.5", allow_hyphen_values = true)]
    pub gauge_angles: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; stdout when absent
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    VerifySymbolic,
    Decompose,
    Weights,
    Spectrum,
    Symbol,
    Index,
    Gauge,
    H0Probe,
    Report,
}

impl Task {
    fn wants(self, part: Task) -> bool {
        self == Task::Report || self == part
    }

    fn numerical(self) -> bool {
        self != Task::VerifySymbolic
    }

    fn needs_decomposition(self) -> bool {
        !matches!(self, Task::VerifySymbolic | Task::Gauge)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("encoding: {0}")]
    Encoding(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) | CliError::Encoding(_) => EXIT_IO,
        }
    }
}

/// Validated parameters of one invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: Task,
    pub qs: Vec<f64>,
    pub cs: Vec<f64>,
    pub t1_angle: f64,
    pub n: usize,
    pub k: usize,
    pub tol: f64,
    pub margin: usize,
    pub max_freq: usize,
    pub gauge_angles: Vec<f64>,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Grid points in `q`-major order.
    pub grid: Vec<TruncationContext>,
}

fn parse_list(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| CliError::Usage(format!("--{name}: cannot parse {t:?}"))))
        .collect()
}

impl RunConfig {
    pub fn new(task: Task, args: &RunArgs) -> Result<Self, CliError> {
        let qs = parse_list("q", &args.q)?;
        let cs = parse_list("c", &args.c)?;
        let gauge_angles = parse_list("gauge-angles", &args.gauge_angles)?;
        if !args.t1_angle.is_finite() || gauge_angles.iter().any(|a| !a.is_finite()) {
            return Err(CliError::Usage("angles must be finite".into()));
        }
        let mut grid = Vec::with_capacity(qs.len() * cs.len());
        for &q in &qs {
            for &c in &cs {
                let ctx = TruncationContext::from_angle(q, c, args.t1_angle, args.n, args.tol, args.margin)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                grid.push(ctx);
            }
        }
        if task.needs_decomposition() && (args.k < 4 || args.k > args.n.saturating_sub(args.margin)) {
            return Err(CliError::Usage(format!("K must satisfy 4 <= K <= N - margin, got K {}", args.k)));
        }
        Ok(RunConfig {
            task,
            qs,
            cs,
            t1_angle: args.t1_angle,
            n: args.n,
            k: args.k,
            tol: args.tol,
            margin: args.margin,
            max_freq: args.max_freq,
            gauge_angles,
            format: args.format,
            output: args.output.clone(),
            grid,
        })
    }

    pub fn from_command(command: &Command) -> Result<Self, CliError> {
        let (task, args) = match command {
            Command::VerifySymbolic(a) => (Task::VerifySymbolic, a),
            Command::Decompose(a) => (Task::Decompose, a),
            Command::Weights(a) => (Task::Weights, a),
            Command::Spectrum(a) => (Task::Spectrum, a),
            Command::Symbol(a) => (Task::Symbol, a),
            Command::Index(a) => (Task::Index, a),
            Command::Gauge(a) => (Task::Gauge, a),
            Command::H0Probe(a) => (Task::H0Probe, a),
            Command::Report(a) => (Task::Report, a),
        };
        Self::new(task, args)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckClass {
    Symbolic,
    Numerical,
    Degeneracy,
}

impl CheckClass {
    fn exit_code(self) -> i32 {
        match self {
            CheckClass::Symbolic | CheckClass::Numerical => EXIT_CHECK,
            CheckClass::Degeneracy => EXIT_DEGENERATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub class: CheckClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    pub t1_angle: f64,
    pub n: usize,
    pub k: usize,
    pub tol: f64,
    pub margin: usize,
    pub max_freq: usize,
    pub gauge_angles: Vec<f64>,
}

/// A spectral row tagged with its grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub q: f64,
    pub c: f64,
    pub k: usize,
    pub formula: f64,
    pub measured: f64,
    pub residual: f64,
}

impl GridRow {
    fn new(ctx: &TruncationContext, r: &SpectralRow) -> Self {
        GridRow { q: ctx.q, c: ctx.c, k: r.k, formula: r.formula, measured: r.measured, residual: r.residual }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSymbols {
    pub operator: String,
    pub subspaces: BTreeMap<Subspace, SymbolSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingEntry {
    pub operator: String,
    pub subspace: Subspace,
    pub winding: i32,
    pub index: i32,
    pub expected_index: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolBlock {
    pub q: f64,
    pub c: f64,
    pub operators: Vec<OperatorSymbols>,
    pub pullback: PullbackReport,
    pub compact_remainder: CompactRemainder,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingBlock {
    pub q: f64,
    pub c: f64,
    pub entries: Vec<WindingEntry>,
    /// Index of `x̃1*x̃2` as minus the total winding over H1 and H2.
    pub shift_index_from_chains: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct H0Block {
    pub q: f64,
    pub c: f64,
    pub probe: H0Probe,
    pub wold: WoldSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeBlock {
    pub q: f64,
    pub c: f64,
    #[serde(flatten)]
    pub report: GaugeReport,
}

/// Eigenvalues of the full truncated `x1*x1` nearest to `c_1..c_6`.
#[derive(Debug, Clone, Serialize)]
pub struct DirectSpectrum {
    pub q: f64,
    pub c: f64,
    pub n: usize,
    pub rows: Vec<SpectralRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub q: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The report document; field order is the serialization order.
#[derive(Debug, Clone, Serialize)]
pub struct Document {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Task,
    pub params: Params,
    pub symbolic: Vec<IdentityCheck>,
    pub eigenvalues: Vec<GridRow>,
    pub companion_eigenvalues: Vec<GridRow>,
    pub weights: Vec<GridRow>,
    pub direct_spectrum: Vec<DirectSpectrum>,
    pub gram_max_dev: Option<f64>,
    pub intertwine_residual: Option<f64>,
    pub symbols: Vec<SymbolBlock>,
    pub winding: Vec<WindingBlock>,
    pub pullback_pass: Option<bool>,
    pub h0_probe: Vec<H0Block>,
    pub gauge: Vec<GaugeBlock>,
    pub runs: Vec<RunRecord>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub exit_code: i32,
}

#[derive(Default)]
struct GridOutput {
    record: Option<RunRecord>,
    eigenvalues: Vec<GridRow>,
    companion: Vec<GridRow>,
    weights: Vec<GridRow>,
    direct: Option<DirectSpectrum>,
    symbols: Option<SymbolBlock>,
    winding: Option<WindingBlock>,
    h0: Option<H0Block>,
    gauge: Option<GaugeBlock>,
    gram: Option<f64>,
    intertwine: Option<f64>,
    checks: Vec<Check>,
}

struct Checker<'a> {
    ctx: &'a TruncationContext,
    out: &'a mut Vec<Check>,
}

impl Checker<'_> {
    fn below(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, CheckClass::Numerical, value, threshold, value < threshold);
    }

    fn above(&mut self, name: &str, value: f64, threshold: f64) {
        self.push(name, CheckClass::Numerical, value, threshold, value > threshold);
    }

    fn equals(&mut self, name: &str, value: i64, expected: i64) {
        self.push(name, CheckClass::Numerical, value as f64, expected as f64, value == expected);
    }

    fn push(&mut self, name: &str, class: CheckClass, value: f64, threshold: f64, pass: bool) {
        self.out.push(Check {
            name: name.to_string(),
            class,
            q: Some(self.ctx.q),
            c: Some(self.ctx.c),
            value: Some(value),
            threshold: Some(threshold),
            detail: None,
            pass,
        });
    }

    fn failure(&mut self, name: &str, class: CheckClass, detail: String) {
        self.out.push(Check {
            name: name.to_string(),
            class,
            q: Some(self.ctx.q),
            c: Some(self.ctx.c),
            value: None,
            threshold: None,
            detail: Some(detail),
            pass: false,
        });
    }
}

fn qcp_class(e: &QcpError) -> CheckClass {
    match e {
        QcpError::Verification { .. } => CheckClass::Numerical,
        _ => CheckClass::Degeneracy,
    }
}

fn decomposition_checks(ck: &mut Checker<'_>, r: &DecompositionReport) {
    ck.below("x1*x1 eigenvalues match c_k", r.eigen_residual_max(), PASS_TOL);
    let companion = r.companion_eigenvalues.iter().map(|x| x.residual).fold(0.0, f64::max);
    ck.below("x2*x2 eigenvalues match c'_k", companion, PASS_TOL);
    ck.below("gram deviation", r.gram_max_dev, PASS_TOL);
    ck.below("intertwining residual", r.intertwine_residual, PASS_TOL);
    ck.below("x2~ isometry defect", r.x2t_isometry_defect, 1e-10);
    ck.below("|trace p1 - 1|", (r.trace_p1 - 1.0).abs(), 1e-6);
    ck.below("|trace p2 - 1|", (r.trace_p2 - 1.0).abs(), 1e-6);
    ck.above("kernel oracle overlap", r.kernel_overlap, 1.0 - 1e-8);
    ck.below("kernel oracle residual", r.kernel_residual, 1e-10);
    ck.equals("x1 trusted kernel dimension", r.kernel_x1.trusted as i64, 1);
    ck.equals("x2 trusted kernel dimension", r.kernel_x2.trusted as i64, 0);
    let mu = &r.matrix_unit;
    let unit = mu.maps_v1_to_v3.max(mu.annihilates_v2).max(mu.annihilates_v4);
    ck.below("matrix unit e(1)_{1,0}", unit, PASS_TOL);
}

fn weight_checks(ck: &mut Checker<'_>, r: &DecompositionReport) {
    ck.below("weights match formula", r.weight_dev_max(), PASS_TOL);
    ck.below("weights real", r.weight_imag_max, PASS_TOL);
    ck.below("off-shift leakage", r.leakage_max(), PASS_TOL);
}

fn spectrum_checks(ck: &mut Checker<'_>, ctx: &TruncationContext, k: usize) -> Result<DirectSpectrum, QcpError> {
    let (q, c) = (rational_from_f64(ctx.q), rational_from_f64(ctx.c));
    let exact = EigenSequence::exact(&q, &c, k);
    let matches = exact.recursion_matches_closed_form(&q, &c) == Some(true);
    ck.push("recursion equals closed form (exact)", CheckClass::Symbolic, 0.0, 0.0, matches);
    ck.below("float recursion vs closed form", EigenSequence::new(ctx.q, ctx.c, k).closed_form_deviation(), 1e-14 * (1.0 + ctx.c));

    let (x1, _) = build_x_pair(ctx);
    let eig = hermitian_eig(&(&x1.adjoint() * &x1))?;
    let seq = EigenSequence::new(ctx.q, ctx.c, DIRECT_SPECTRUM_TERMS.min(k));
    let rows: Vec<SpectralRow> = (1..=seq.len())
        .map(|j| {
            let target = seq.c(j);
            let nearest = eig.eigenvalues.iter().cloned().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs())).unwrap_or(f64::NAN);
            SpectralRow { k: j, formula: target, measured: nearest, residual: (nearest - target).abs() }
        })
        .collect();
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    ck.below("direct spectrum contains c_1..c_6", worst, DIRECT_SPECTRUM_TOL);
    Ok(DirectSpectrum { q: ctx.q, c: ctx.c, n: ctx.n, rows })
}

fn constant(d: i32, value: Complex64) -> SymbolSample {
    SymbolSample::from_coeffs([(d, value)])
}

fn symbol_block(ck: &mut Checker<'_>, d: &Decomposition, max_freq: usize) -> Result<SymbolBlock, PullbackError> {
    let ctx = &d.ctx;
    let one = Complex64::new(1.0, 0.0);
    let generators = [("x1~*x2~", &d.shift), ("x1*x1", &d.x1s_x1), ("x2*x2", &d.x2s_x2)];
    let pullback = pullback_check(&generators, &d.basis, max_freq, SYMBOL_TOL)?;
    let expected = [constant(1, one), constant(0, Complex64::new(ctx.c, 0.0)), constant(0, one)];
    let mut operators = Vec::new();
    for (entry, target) in pullback.entries.iter().zip(&expected) {
        let dev = entry.h1.max_diff(target).max(entry.h2.max_diff(target));
        ck.below(&format!("symbol of {}", entry.operator), dev, SYMBOL_TOL);
        ck.below(&format!("{} symbols agree on H1 and H2", entry.operator), entry.max_coeff_diff, SYMBOL_TOL);
        let subspaces = BTreeMap::from([(Subspace::H1, entry.h1.clone()), (Subspace::H2, entry.h2.clone())]);
        operators.push(OperatorSymbols { operator: entry.operator.clone(), subspaces });
    }

    let c1 = Chain::from_basis(&d.basis, 1, max_freq);
    let c2 = Chain::from_basis(&d.basis, 2, max_freq);
    let amb = Chain::ambient(ctx, max_freq);
    let mut subspaces = BTreeMap::new();
    for chain in [&c1, &c2, &amb] {
        subspaces.insert(chain.subspace, symbol_estimate(&d.x1s_x2, chain, max_freq, SYMBOL_TOL)?);
    }
    let modulus_dev = [Subspace::H1, Subspace::H2]
        .iter()
        .map(|s| (subspaces[s].coeff(1).norm() - ctx.sqrt_c()).abs())
        .fold(0.0, f64::max);
    ck.below("|symbol of x1*x2| = sqrt c", modulus_dev, SYMBOL_TOL);
    operators.push(OperatorSymbols { operator: "x1*x2".into(), subspaces });
    for (name, t) in [("x1", &d.x1), ("x2", &d.x2)] {
        let s = symbol_estimate(t, &amb, max_freq, SYMBOL_TOL)?;
        operators.push(OperatorSymbols { operator: name.into(), subspaces: BTreeMap::from([(Subspace::Ambient, s)]) });
    }

    let s = &pullback.entries[1].h1;
    let compact_remainder = compact_remainder_check(&d.x1s_x1, &c1, s, REMAINDER_CORNER);
    ck.below("x1*x1 on H1 is Toeplitz plus corner", compact_remainder.outside_max, SYMBOL_TOL);
    ck.push("pullback", CheckClass::Numerical, 0.0, 0.0, pullback.pass);
    Ok(SymbolBlock { q: ctx.q, c: ctx.c, operators, pullback, compact_remainder })
}

fn winding_block(ck: &mut Checker<'_>, d: &Decomposition, max_freq: usize) -> Result<WindingBlock, PullbackError> {
    let ctx = &d.ctx;
    let amb = Chain::ambient(ctx, max_freq);
    let mut entries = Vec::new();
    for (name, t, expected) in [("x2", &d.x2, -1i32), ("x1", &d.x1, 1), ("x1*x2", &d.x1s_x2, -2), ("x1~*x2~", &d.shift, -2)] {
        let w = winding_number(&symbol_estimate(t, &amb, max_freq, SYMBOL_TOL)?, WINDING_GRID, SYMBOL_TOL)?;
        ck.equals(&format!("index of {name}"), -w as i64, expected as i64);
        entries.push(WindingEntry { operator: name.into(), subspace: Subspace::Ambient, winding: w, index: -w, expected_index: expected });
    }
    let mut total = 0;
    for i in [1, 2] {
        let chain = Chain::from_basis(&d.basis, i, max_freq);
        let w = winding_number(&symbol_estimate(&d.shift, &chain, max_freq, SYMBOL_TOL)?, WINDING_GRID, SYMBOL_TOL)?;
        total += w;
        entries.push(WindingEntry { operator: "x1~*x2~".into(), subspace: chain.subspace, winding: w, index: -w, expected_index: -1 });
    }
    ck.equals("index of x1~*x2~ from H1 and H2", -total as i64, -2);
    Ok(WindingBlock { q: ctx.q, c: ctx.c, entries, shift_index_from_chains: -total })
}

fn run_point(config: &RunConfig, ctx: &TruncationContext) -> GridOutput {
    let task = config.task;
    let mut out = GridOutput::default();
    let mut checks = Vec::new();
    let mut ck = Checker { ctx, out: &mut checks };

    if task.wants(Task::Gauge) {
        let ts: Vec<Complex64> = config.gauge_angles.iter().map(|a| Complex64::from_polar(1.0, *a)).collect();
        match gauge_check(ctx, &ts) {
            Ok(report) => {
                ck.below("gauge: spectra of x1*x1", report.spectrum_max_dev, 1e-10);
                ck.below("gauge: singular values of x1*x2", report.singular_max_dev, 1e-10);
                ck.below("gauge: diagonal conjugation", report.conjugation_max_residual, 1e-10);
                out.gauge = Some(GaugeBlock { q: ctx.q, c: ctx.c, report });
            }
            Err(e) => ck.failure("gauge", qcp_class(&e), e.to_string()),
        }
    }

    if task.wants(Task::Spectrum) {
        match spectrum_checks(&mut ck, ctx, config.k) {
            Ok(direct) => out.direct = Some(direct),
            Err(e) => ck.failure("direct spectrum", qcp_class(&e), e.to_string()),
        }
    }

    if task.needs_decomposition() {
        let measured = Decomposition::run(ctx, config.k).and_then(|d| measure_decomposition(&d).map(|r| (d, r)));
        match measured {
            Ok((d, r)) => {
                if task.wants(Task::Decompose) {
                    decomposition_checks(&mut ck, &r);
                }
                if task.wants(Task::Decompose) || task.wants(Task::Weights) {
                    weight_checks(&mut ck, &r);
                }
                if task.wants(Task::Decompose) || task.wants(Task::Spectrum) {
                    out.eigenvalues = r.eigenvalues.iter().map(|x| GridRow::new(ctx, x)).collect();
                    out.companion = r.companion_eigenvalues.iter().map(|x| GridRow::new(ctx, x)).collect();
                    if task == Task::Spectrum {
                        ck.below("x1*x1 eigenvalues match c_k", r.eigen_residual_max(), PASS_TOL);
                    }
                }
                if task.wants(Task::Decompose) || task.wants(Task::Weights) {
                    out.weights = r.weights.iter().map(|x| GridRow::new(ctx, x)).collect();
                }
                if task.wants(Task::Symbol) {
                    match symbol_block(&mut ck, &d, config.max_freq) {
                        Ok(b) => out.symbols = Some(b),
                        Err(e) => ck.failure("symbol", CheckClass::Numerical, e.to_string()),
                    }
                }
                if task.wants(Task::Index) {
                    match winding_block(&mut ck, &d, config.max_freq) {
                        Ok(b) => out.winding = Some(b),
                        Err(e) => ck.failure("index", CheckClass::Numerical, e.to_string()),
                    }
                }
                if task.wants(Task::H0Probe) {
                    out.h0 = Some(H0Block { q: ctx.q, c: ctx.c, probe: r.h0_probe.clone(), wold: r.wold });
                }
                out.gram = Some(r.gram_max_dev);
                out.intertwine = Some(r.intertwine_residual);
                let keep = task.wants(Task::Decompose);
                out.record = Some(RunRecord { q: ctx.q, c: ctx.c, decomposition: keep.then_some(r), error: None });
            }
            Err(e) => {
                ck.failure("decomposition", qcp_class(&e), e.to_string());
                out.record = Some(RunRecord { q: ctx.q, c: ctx.c, decomposition: None, error: Some(e.to_string()) });
            }
        }
    }
    out.checks = checks;
    out
}

fn max_option(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    values.flatten().fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
}

/// Runs every requested check and assembles the document.
pub fn run_report(config: &RunConfig) -> Document {
    let mut checks = Vec::new();
    let symbolic = if config.task.wants(Task::VerifySymbolic) {
        let suite = identity_suite();
        for s in &suite {
            checks.push(Check {
                name: s.identity.clone(),
                class: CheckClass::Symbolic,
                q: None,
                c: None,
                value: None,
                threshold: None,
                detail: None,
                pass: s.proven,
            });
        }
        suite
    } else {
        Vec::new()
    };

    let outputs: Vec<GridOutput> = if config.task.numerical() {
        config.grid.par_iter().map(|ctx| run_point(config, ctx)).collect()
    } else {
        Vec::new()
    };

    let mut doc = Document {
        tool: "qcpline",
        version: env!("CARGO_PKG_VERSION"),
        command: config.task,
        params: Params {
            q: config.qs.clone(),
            c: config.cs.clone(),
            t1_angle: config.t1_angle,
            n: config.n,
            k: config.k,
            tol: config.tol,
            margin: config.margin,
            max_freq: config.max_freq,
            gauge_angles: config.gauge_angles.clone(),
        },
        symbolic,
        eigenvalues: Vec::new(),
        companion_eigenvalues: Vec::new(),
        weights: Vec::new(),
        direct_spectrum: Vec::new(),
        gram_max_dev: max_option(outputs.iter().map(|o| o.gram)),
        intertwine_residual: max_option(outputs.iter().map(|o| o.intertwine)),
        symbols: Vec::new(),
        winding: Vec::new(),
        pullback_pass: None,
        h0_probe: Vec::new(),
        gauge: Vec::new(),
        runs: Vec::new(),
        checks: Vec::new(),
        pass: true,
        exit_code: EXIT_OK,
    };
    for o in outputs {
        doc.eigenvalues.extend(o.eigenvalues);
        doc.companion_eigenvalues.extend(o.companion);
        doc.weights.extend(o.weights);
        doc.direct_spectrum.extend(o.direct);
        doc.symbols.extend(o.symbols);
        doc.winding.extend(o.winding);
        doc.h0_probe.extend(o.h0);
        doc.gauge.extend(o.gauge);
        doc.runs.extend(o.record);
        checks.extend(o.checks);
    }
    if config.task.wants(Task::Symbol) {
        let certified = checks.iter().filter(|c| c.name == "pullback" || c.name == "symbol").all(|c| c.pass);
        doc.pullback_pass = Some(certified);
    }
    doc.exit_code = checks.iter().find(|c| !c.pass).map_or(EXIT_OK, |c| c.class.exit_code());
    doc.pass = doc.exit_code == EXIT_OK;
    doc.checks = checks;
    doc
}

/// Writes every float as `{:.16e}` so output is byte-stable and keeps 17 significant digits.
struct FixedFloat<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloat<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json(doc: &Document) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(PrettyFormatter::with_indent(b"  ")));
    doc.serialize(&mut ser).map_err(|e| CliError::Encoding(e.to_string()))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| CliError::Encoding(e.to_string()))
}

/// One flat table of eigenvalue, companion and weight rows.
pub fn to_csv(doc: &Document) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| CliError::Encoding(e.to_string());
    w.write_record(["table", "q", "c", "t1_angle", "k", "formula", "measured", "residual"]).map_err(enc)?;
    let angle = format!("{:.16e}", doc.params.t1_angle);
    let tables = [("eigenvalue", &doc.eigenvalues), ("companion", &doc.companion_eigenvalues), ("weight", &doc.weights)];
    for (table, rows) in tables {
        for r in rows {
            let fields = [
                table.to_string(),
                format!("{:.16e}", r.q),
                format!("{:.16e}", r.c),
                angle.clone(),
                r.k.to_string(),
                format!("{:.16e}", r.formula),
                format!("{:.16e}", r.measured),
                format!("{:.16e}", r.residual),
            ];
            w.write_record(&fields).map_err(enc)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Encoding(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Encoding(e.to_string()))
}

pub fn emit(doc: &Document, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(doc),
        Format::Csv => to_csv(doc),
    }
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let config = match RunConfig::from_command(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qcpline: {e}");
            return e.exit_code();
        }
    };
    let doc = run_report(&config);
    let written = emit(&doc, config.format).and_then(|text| match &config.output {
        Some(path) => std::fs::write(path, text).map_err(CliError::from),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(CliError::from),
    });
    if let Err(e) = written {
        eprintln!("qcpline: {e}");
        return e.exit_code();
    }
    for c in doc.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}{}", c.name, c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default());
    }
    doc.exit_code
}
