//! Monte-Carlo harness for error tables and mean-error-versus-λ curves.
//!
//! Realization `i` of a cell perturbs the clean spectrum with seed
//! `base_seed ^ i`. Each realization is computed sequentially and results are
//! folded in index order, so output does not depend on the thread count.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::drt::{ProcessKind, SimulationSet};
use crate::error::{Error, Result};
use crate::forward::{
    add_noise_with, assemble_operator, synthesize_spectrum, DiscreteOperator, FrequencyGrid,
    NoiseModel, QuadratureScheme, Resolution, DEFAULT_S_RANGE,
};
use crate::nlsfit::mean_std;
use crate::param_choice::{
    geometric_mean, lcurve_corner, ncp_select, oracle_select, sweep, LambdaGrid, NcpNorm,
    SweepResult, SweepSpec,
};
use crate::regsolve::{build_regularizer, GramCache, RegularizerKind, SbbOptions, SolveMethod};

/// Parameter-choice rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Criterion {
    Lc,
    Ncp,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Lc => "lc",
            Criterion::Ncp => "ncp",
        })
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lc" | "l-curve" | "lcurve" => Ok(Criterion::Lc),
            "ncp" => Ok(Criterion::Ncp),
            other => Err(Error::Config(format!("unknown criterion `{other}`, expected lc or ncp"))),
        }
    }
}

/// Numerical settings shared by all cells of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub resolution: Resolution,
    pub scheme: QuadratureScheme,
    pub freq_grid: FrequencyGrid,
    pub s_range: (f64, f64),
    pub lambda_grid: LambdaGrid,
    pub noise_model: NoiseModel,
    pub sbb: SbbOptions,
    pub ncp_norm: NcpNorm,
}

impl Setup {
    pub fn new(resolution: Resolution) -> Self {
        Setup {
            resolution,
            scheme: QuadratureScheme::TSpacePreconditioned,
            freq_grid: FrequencyGrid::default_grid(),
            s_range: DEFAULT_S_RANGE,
            lambda_grid: LambdaGrid::default_grid(),
            noise_model: NoiseModel::Proportional,
            sbb: SbbOptions::default(),
            ncp_norm: NcpNorm::L2,
        }
    }

    pub fn operator(&self) -> Result<DiscreteOperator> {
        assemble_operator(&self.freq_grid, self.s_range, self.resolution, self.scheme)
    }
}

/// A Monte-Carlo table: every simulation × (method, L) row × noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub simulations: Vec<SimulationSet>,
    pub rows: Vec<(SolveMethod, RegularizerKind)>,
    pub criterion: Criterion,
    pub noise_levels: Vec<f64>,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub setup: Setup,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.simulations.is_empty() || self.rows.is_empty() {
            return Err(Error::Config("experiment needs a simulation and a method".into()));
        }
        if self.noise_levels.is_empty() || self.noise_levels.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Config("noise levels must be positive".into()));
        }
        if self.n_realizations == 0 {
            return Err(Error::Config("need at least one realization".into()));
        }
        Ok(())
    }
}

/// Named table layouts.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let nnls = |l| (SolveMethod::NnlsActiveSet, l);
    let nnls_rows = RegularizerKind::ALL.iter().map(|&l| nnls(l)).collect::<Vec<_>>();
    let ls_rows = RegularizerKind::ALL.iter().map(|&l| (SolveMethod::Ls, l)).collect::<Vec<_>>();
    let high = vec![0.001, 0.01, 0.05];
    let (rows, criterion, resolution, noise) = match name {
        "lc-a4-highnoise" => (nnls_rows, Criterion::Lc, Resolution::A4, high),
        "ncp-a4-highnoise" => (nnls_rows, Criterion::Ncp, Resolution::A4, high),
        "lc-a3-highnoise" => (nnls_rows, Criterion::Lc, Resolution::A3, high),
        "ncp-a3-highnoise" => (nnls_rows, Criterion::Ncp, Resolution::A3, high),
        "ncp-a4-lownoise" => (nnls_rows, Criterion::Ncp, Resolution::A4, vec![0.001, 0.003, 0.01]),
        "lc-a4-lownoise" => (nnls_rows, Criterion::Lc, Resolution::A4, vec![0.0003, 0.001, 0.01]),
        "lc-a3-lownoise" => (nnls_rows, Criterion::Lc, Resolution::A3, vec![0.0003, 0.001, 0.01]),
        "ncp-a3-lownoise" => (nnls_rows, Criterion::Ncp, Resolution::A3, vec![0.0003, 0.001, 0.01]),
        "ls-a3" => (ls_rows, Criterion::Lc, Resolution::A3, high),
        "ls-a4" => (ls_rows, Criterion::Lc, Resolution::A4, high),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(ExperimentConfig {
        simulations: SimulationSet::ALL.to_vec(),
        rows,
        criterion,
        noise_levels: noise,
        n_realizations: 100,
        base_seed: 0,
        setup: Setup::new(resolution),
    })
}

pub const PRESETS: [&str; 10] = [
    "lc-a4-highnoise",
    "ncp-a4-highnoise",
    "lc-a3-highnoise",
    "ncp-a3-highnoise",
    "lc-a4-lownoise",
    "ncp-a4-lownoise",
    "lc-a3-lownoise",
    "ncp-a3-lownoise",
    "ls-a3",
    "ls-a4",
];

/// `100 ‖x − x_true‖₂ / ‖x_true‖₂`.
pub fn relative_error_percent(x: &[f64], x_true: &[f64]) -> Result<f64> {
    if x.len() != x_true.len() {
        return Err(Error::dim(format!("{} vs {} samples", x.len(), x_true.len())));
    }
    let tn = x_true.iter().map(|v| v * v).sum::<f64>().sqrt();
    if tn == 0.0 {
        return Err(Error::domain("relative error against a zero truth"));
    }
    let d = x.iter().zip(x_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(100.0 * d / tn)
}

/// Aggregate of relative errors with the `< 100 %` rejection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    /// Sample standard deviation over kept realizations.
    pub std: f64,
    pub n_kept: usize,
    pub n_rejected: usize,
    pub n_failed: usize,
}

impl ErrorStats {
    /// `None` marks a failed realization.
    pub fn from_errors(errors: &[Option<f64>]) -> Self {
        let kept: Vec<f64> = errors.iter().flatten().copied().filter(|&e| e < 100.0).collect();
        let n_failed = errors.iter().filter(|e| e.is_none()).count();
        let (mean, std) = mean_std(&kept);
        ErrorStats {
            mean,
            std,
            n_kept: kept.len(),
            n_rejected: errors.len() - n_failed - kept.len(),
            n_failed,
        }
    }

    pub fn n_total(&self) -> usize {
        self.n_kept + self.n_rejected + self.n_failed
    }
}

/// Outcome of one noisy realization: selected λ and relative errors per rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub lambda_lc: Option<f64>,
    pub lc_no_corner: bool,
    pub lambda_ncp: Option<f64>,
    pub lambda_opt: Option<f64>,
    pub error_lc: Option<f64>,
    pub error_ncp: Option<f64>,
    pub error_opt: Option<f64>,
    /// `‖x(λ) − x_true‖₂` per λ of the grid; `NaN` where the solve failed.
    pub abs_errors: Vec<f64>,
}

impl Realization {
    pub fn error(&self, c: Criterion) -> Option<f64> {
        match c {
            Criterion::Lc => self.error_lc,
            Criterion::Ncp => self.error_ncp,
        }
    }

    pub fn lambda(&self, c: Criterion) -> Option<f64> {
        match c {
            Criterion::Lc => self.lambda_lc,
            Criterion::Ncp => self.lambda_ncp,
        }
    }
}

/// One (simulation, method, L, noise) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub simulation: SimulationSet,
    pub method: SolveMethod,
    pub regularizer: RegularizerKind,
    pub noise: f64,
    pub n_realizations: usize,
    pub base_seed: u64,
}

/// Run every realization of a cell. `parallel` spreads realizations over
/// the current rayon pool.
pub fn run_cell(
    setup: &Setup,
    op: &DiscreteOperator,
    cell: &CellSpec,
    parallel: bool,
) -> Result<Vec<Realization>> {
    let model = cell.simulation.model();
    let clean = synthesize_spectrum(&model, &op.freq_grid);
    let truth = model.f_values(op.log_time_grid.s_values());
    let l = build_regularizer(cell.regularizer, op.n_nodes())?;
    let gram = GramCache::new(&op.matrix, &l)?;

    let one = |i: usize| -> Result<Realization> {
        let seed = cell.base_seed ^ i as u64;
        let noisy = add_noise_with(&clean, cell.noise, seed, setup.noise_model)?;
        let b: DVector<f64> = noisy.stacked();
        let mut spec = SweepSpec::new(&op.matrix, &b, &l, cell.method);
        spec.gram = Some(&gram);
        spec.truth = Some(&truth);
        spec.sbb = setup.sbb;
        spec.ncp_norm = setup.ncp_norm;
        let sw = sweep(&spec, &setup.lambda_grid)?;
        Ok(evaluate(&sw, &truth, i, seed))
    };
    if parallel {
        (0..cell.n_realizations).into_par_iter().map(one).collect()
    } else {
        (0..cell.n_realizations).map(one).collect()
    }
}

fn evaluate(sw: &SweepResult, truth: &[f64], index: usize, seed: u64) -> Realization {
    let error_at = |lambda: Option<f64>| -> Option<f64> {
        let p = sw.point_at(lambda?)?;
        let sol = p.solution.as_ref().filter(|s| s.converged)?;
        relative_error_percent(sol.x.as_slice(), truth).ok()
    };
    let lc = lcurve_corner(sw).ok();
    let lambda_lc = lc.map(|c| c.lambda);
    let lambda_ncp = ncp_select(sw).ok();
    let lambda_opt = oracle_select(sw).ok();
    Realization {
        index,
        seed,
        lambda_lc,
        lc_no_corner: lc.is_some_and(|c| c.no_corner),
        lambda_ncp,
        lambda_opt,
        error_lc: error_at(lambda_lc),
        error_ncp: error_at(lambda_ncp),
        error_opt: error_at(lambda_opt),
        abs_errors: sw.points.iter().map(|p| p.s_space_error.unwrap_or(f64::NAN)).collect(),
    }
}

/// One row of a statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub simulation: SimulationSet,
    pub family: ProcessKind,
    pub resolution: Resolution,
    pub method: SolveMethod,
    pub regularizer: RegularizerKind,
    pub criterion: Criterion,
    pub noise: f64,
    pub stats: ErrorStats,
}

/// Run the whole table. Cells run in order; realizations within a cell run
/// on the current rayon pool when `parallel` is set.
pub fn monte_carlo(config: &ExperimentConfig, parallel: bool) -> Result<Vec<StatsRow>> {
    config.validate()?;
    let op = config.setup.operator()?;
    let mut out = Vec::new();
    for &simulation in &config.simulations {
        for &(method, regularizer) in &config.rows {
            for &noise in &config.noise_levels {
                let cell = CellSpec {
                    simulation,
                    method,
                    regularizer,
                    noise,
                    n_realizations: config.n_realizations,
                    base_seed: config.base_seed,
                };
                let reals = run_cell(&config.setup, &op, &cell, parallel)?;
                let errs: Vec<Option<f64>> = reals.iter().map(|r| r.error(config.criterion)).collect();
                let stats = ErrorStats::from_errors(&errs);
                log::info!(
                    "{simulation} {method} L={regularizer} η={noise}: {}",
                    format_cell(&stats, config.n_realizations)
                );
                out.push(StatsRow {
                    simulation,
                    family: simulation.family(),
                    resolution: config.setup.resolution,
                    method,
                    regularizer,
                    criterion: config.criterion,
                    noise,
                    stats,
                });
            }
        }
    }
    Ok(out)
}

/// Mean absolute s-space error per λ and the selected-λ summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanErrorCurve {
    pub lambdas: Vec<f64>,
    pub mean_abs_error: Vec<f64>,
    pub gm_lambda_lc: Option<f64>,
    pub gm_lambda_ncp: Option<f64>,
    /// Grid λ minimizing the mean error.
    pub lambda_opt: f64,
    pub realizations: Vec<Realization>,
}

pub fn mean_error_curve(setup: &Setup, cell: &CellSpec, parallel: bool) -> Result<MeanErrorCurve> {
    if cell.n_realizations < 2 {
        return Err(Error::Config("a mean-error curve needs at least two realizations".into()));
    }
    let op = setup.operator()?;
    let reals = run_cell(setup, &op, cell, parallel)?;
    let lambdas = setup.lambda_grid.values().to_vec();
    let mean_abs_error: Vec<f64> = (0..lambdas.len())
        .map(|k| reals.iter().map(|r| r.abs_errors[k]).sum::<f64>() / reals.len() as f64)
        .collect();
    let (mut best, mut best_lambda) = (f64::INFINITY, f64::NAN);
    for (&l, &e) in lambdas.iter().zip(&mean_abs_error) {
        if e < best || (e == best && l > best_lambda) {
            best = e;
            best_lambda = l;
        }
    }
    if best_lambda.is_nan() {
        return Err(Error::Numerical("mean-error curve has no finite value".into()));
    }
    let gm = |c: Criterion| {
        let v: Vec<f64> = reals.iter().filter_map(|r| r.lambda(c)).collect();
        geometric_mean(&v).ok()
    };
    Ok(MeanErrorCurve {
        lambdas,
        mean_abs_error,
        gm_lambda_lc: gm(Criterion::Lc),
        gm_lambda_ncp: gm(Criterion::Ncp),
        lambda_opt: best_lambda,
        realizations: reals,
    })
}

/// `"19 (2.3) 99"`; the count is left out when every realization was kept.
pub fn format_cell(stats: &ErrorStats, n_realizations: usize) -> String {
    if stats.n_kept == 0 {
        return "- (-) 0".to_string();
    }
    let body = format!("{:.0} ({:.1})", stats.mean, stats.std);
    if stats.n_kept == n_realizations {
        body
    } else {
        format!("{body} {}", stats.n_kept)
    }
}

/// Text table with one line per (simulation, method, L) and one column per
/// noise level.
pub fn tabulate(rows: &[StatsRow], n_realizations: usize) -> String {
    let mut noises: Vec<f64> = Vec::new();
    for r in rows {
        if !noises.contains(&r.noise) {
            noises.push(r.noise);
        }
    }
    let mut out = format!("{:<12}{:<16}", "Simulation", "Method");
    for n in &noises {
        out.push_str(&format!("{:>16}", format!("{}%", fmt_percent(*n))));
    }
    out.push('\n');
    let mut keys: Vec<(SimulationSet, SolveMethod, RegularizerKind)> = Vec::new();
    for r in rows {
        let k = (r.simulation, r.method, r.regularizer);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut last_sim = None;
    for (sim, method, l) in keys {
        let label = if last_sim == Some(sim) {
            String::new()
        } else {
            format!("({},{})", sim.number(), sim.family())
        };
        last_sim = Some(sim);
        out.push_str(&format!("{:<12}{:<16}", label, format!("{} (L={})", method_label(method), l)));
        for n in &noises {
            let cell = rows
                .iter()
                .find(|r| r.simulation == sim && r.method == method && r.regularizer == l && r.noise == *n)
                .map(|r| format_cell(&r.stats, n_realizations))
                .unwrap_or_default();
            out.push_str(&format!("{cell:>16}"));
        }
        out.push('\n');
    }
    out
}

fn method_label(m: SolveMethod) -> &'static str {
    match m {
        SolveMethod::Ls => "LS",
        SolveMethod::NnlsActiveSet => "NNLS",
        SolveMethod::NnlsSbb => "NNLS-SBB",
    }
}

fn fmt_percent(eta: f64) -> String {
    let p = eta * 100.0;
    let s = format!("{p:.4}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
