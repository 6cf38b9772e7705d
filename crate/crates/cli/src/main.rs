//! `relaxo`: simulate spectra, invert them for the relaxation-time
//! distribution, fit parametric models, and run Monte-Carlo tables.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use relaxo_core::config::{experiment_from_ini, jobs_from_ini, model_from_ini, parse_process, Ini};
use relaxo_core::drt::{DrtModel, DrtProcess, ProcessKind, SimulationSet};
use relaxo_core::experiments::{
    mean_error_curve, monte_carlo, preset, relative_error_percent, tabulate, CellSpec, Criterion,
    ExperimentConfig,
};
use relaxo_core::forward::{add_noise_with, assemble_operator, synthesize_spectrum, FrequencyGrid, ImpedanceSpectrum, Resolution};
use relaxo_core::io;
use relaxo_core::nlsfit::{fit, fit_protocol, init_from_peaks, NOISE_LADDER_LOG10};
use relaxo_core::param_choice::{lcurve_corner, ncp_select, oracle_select, sweep, LambdaGrid, SweepSpec};
use relaxo_core::peaks::{find_z2_peaks_with, nyquist_curve, PeakOptions};
use relaxo_core::regsolve::{build_regularizer, GramCache, RegularizerKind, SolveMethod};
use relaxo_core::Error;

const DEFAULT_PRESET: &str = "lc-a4-highnoise";

#[derive(Parser, Debug)]
#[command(name = "relaxo", version, about = "Relaxation-time distributions from impedance spectra")]
struct Cli {
    /// INI file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "relaxo-out")]
    out: PathBuf,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a (noisy) spectrum.
    Simulate(SourceArgs),
    /// Regularized inversion with λ chosen by a parameter-choice rule.
    Invert(InvertArgs),
    /// Nonlinear least-squares fit of RQ or LN processes.
    Fit(FitArgs),
    /// Peaks of Z2 and the Nyquist curve.
    Peaks(PeaksArgs),
    /// Monte-Carlo error table.
    Table(TableArgs),
    /// Mean error versus λ over noisy realizations.
    Curve(CurveArgs),
}

/// Where the spectrum comes from.
#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Built-in simulation set, e.g. A-RQ or 2,LN.
    #[arg(long)]
    set: Option<SimulationSet>,
    /// Explicit process `kind t0 shape scale` (repeatable).
    #[arg(long)]
    process: Vec<String>,
    /// Measured spectrum CSV with columns omega,z1,z2.
    #[arg(long, conflicts_with_all = ["set", "process", "spectrum"])]
    input: Option<PathBuf>,
    /// Same as --input.
    #[arg(value_name = "SPECTRUM", conflicts_with_all = ["set", "process"])]
    spectrum: Option<PathBuf>,
    /// Relative noise level η added to synthesized data.
    #[arg(long)]
    noise: Option<f64>,
    /// Noise seed.
    #[arg(long, env = "RELAXO_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Operator resolution: A3 or A4.
    #[arg(long)]
    matrix: Option<Resolution>,
    /// Regularization matrix: I, L1 or L2.
    #[arg(long = "L")]
    l: Option<RegularizerKind>,
    /// ls, nnls-as or nnls-sbb.
    #[arg(long)]
    method: Option<SolveMethod>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Choice {
    Lc,
    Ncp,
    /// Smallest error against the known truth.
    Opt,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, value_enum)]
    criterion: Option<Choice>,
    /// Solve at this λ only instead of sweeping.
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Family of the fitted processes (default: family of the source).
    #[arg(long)]
    family: Option<ProcessKind>,
    /// Run the noise-ladder protocol with this many realizations per level.
    #[arg(long)]
    realizations: Option<usize>,
}

#[derive(Args, Debug)]
struct PeaksArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Parabolic refinement in ln ω.
    #[arg(long)]
    refine: bool,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Named table layout.
    #[arg(long)]
    preset: Option<String>,
    /// Simulation sets (comma separated).
    #[arg(long, value_delimiter = ',')]
    set: Vec<SimulationSet>,
    #[arg(long)]
    matrix: Option<Resolution>,
    /// Regularization matrices (comma separated).
    #[arg(long = "L", value_delimiter = ',')]
    l: Vec<RegularizerKind>,
    #[arg(long)]
    method: Option<SolveMethod>,
    #[arg(long)]
    criterion: Option<Criterion>,
    /// Noise levels (comma separated).
    #[arg(long, value_delimiter = ',')]
    noise: Vec<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, env = "RELAXO_SEED")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    #[arg(long)]
    set: Option<SimulationSet>,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long, env = "RELAXO_SEED")]
    seed: Option<u64>,
}

/// Ordered `key = value` record of a run; contains no timestamps.
struct Manifest {
    entries: Vec<(String, String)>,
    artifacts: Vec<String>,
    /// Set when outputs were written but the run did not succeed.
    failure: Option<Error>,
}

impl Manifest {
    fn new(command: &str) -> Self {
        Manifest {
            entries: vec![
                ("program".into(), format!("relaxo {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
            ],
            artifacts: Vec::new(),
            failure: None,
        }
    }

    fn add(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    fn artifact(&mut self, name: &str) -> &mut Self {
        self.artifacts.push(name.into());
        self
    }

    /// Echo the config file verbatim next to the outputs and write
    /// `manifest.txt` with the status of every listed artifact.
    fn finish(mut self, config: Option<&Path>, out: &Path) -> anyhow::Result<()> {
        let status = match &self.failure {
            Some(e) => format!("failed: {e}"),
            None => "ok".into(),
        };
        self.entries.push(("status".into(), status));
        let mut head = vec![("output_dir".to_string(), out.display().to_string())];
        match config {
            Some(p) => {
                fs::copy(p, out.join(CONFIG_ECHO)).with_context(|| format!("copying {}", p.display()))?;
                head.push(("config".into(), p.display().to_string()));
                self.artifacts.push(CONFIG_ECHO.into());
            }
            None => head.push(("config".into(), "-".into())),
        }
        self.entries.splice(2..2, head);
        let mut text: String = self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        for a in &self.artifacts {
            let status = if out.join(a).is_file() { "written" } else { "missing" };
            text.push_str(&format!("artifact.{a} = {status}\n"));
        }
        fs::write(out.join("manifest.txt"), text).context("writing manifest")?;
        match self.failure {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

const CONFIG_ECHO: &str = "config_echo.ini";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for usage, configuration and input problems, 3 for numerical failures.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Numerical(_) | Error::NoPeak(_)) => 3,
        _ => 2,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ini = match &cli.config {
        Some(p) => Ini::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => Ini::default(),
    };
    let jobs = cli.jobs.or(jobs_from_ini(&ini)?);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()).into());
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| anyhow!("thread pool: {e}"))?;
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.clone();
    let manifest = pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(&ini, &a, &out),
        Command::Invert(a) => invert(&ini, &a, &out),
        Command::Fit(a) => fit_cmd(&ini, &a, &out),
        Command::Peaks(a) => peaks_cmd(&ini, &a, &out),
        Command::Table(a) => table(&ini, &a, &out),
        Command::Curve(a) => curve(&ini, &a, &out),
    })?;
    manifest.finish(cli.config.as_deref(), &out)
}

/// Experiment settings from the config file on top of the default preset.
fn base_experiment(ini: &Ini) -> anyhow::Result<ExperimentConfig> {
    Ok(experiment_from_ini(ini, preset(DEFAULT_PRESET)?)?)
}

struct Loaded {
    spectrum: ImpedanceSpectrum,
    /// Generating model when the data were synthesized.
    model: Option<DrtModel>,
    label: String,
}

fn load_source(ini: &Ini, src: &SourceArgs, exp: &ExperimentConfig, m: &mut Manifest) -> anyhow::Result<Loaded> {
    if let Some(path) = src.input.as_ref().or(src.spectrum.as_ref()) {
        if src.noise.is_some() {
            bail!(Error::Config("--noise applies to synthesized data, not --input".into()));
        }
        let spectrum = io::read_spectrum(path).with_context(|| format!("reading {}", path.display()))?;
        let label = path.display().to_string();
        m.add("input", &label);
        return Ok(Loaded { spectrum, model: None, label });
    }
    let (model, label) = if let Some(set) = src.set {
        if !src.process.is_empty() {
            bail!(Error::Config("use either --set or --process".into()));
        }
        (set.model(), set.to_string())
    } else if !src.process.is_empty() {
        let procs = src.process.iter().map(|p| parse_process(p)).collect::<Result<Vec<_>, _>>()?;
        (DrtModel::new(procs)?, "custom".to_string())
    } else if let Some(model) = model_from_ini(ini)? {
        (model, "custom".to_string())
    } else {
        bail!(Error::Config("no data source: give --set, --process, --input or a [model] section".into()));
    };
    m.add("source", &label);
    for (k, p) in model.processes().iter().enumerate() {
        m.add(&format!("process.{}", k + 1), describe(p));
    }
    let clean = synthesize_spectrum(&model, &FrequencyGrid::default_grid());
    let eta = src.noise.unwrap_or(0.0);
    let seed = src.seed.unwrap_or(exp.base_seed);
    let spectrum = add_noise_with(&clean, eta, seed, exp.setup.noise_model)?;
    m.add("noise", eta).add("noise_model", exp.setup.noise_model).add("seed", seed);
    Ok(Loaded { spectrum, model: Some(model), label })
}

fn describe(p: &DrtProcess) -> String {
    format!("{} {} {} {}", p.kind, io::fmt_f64(p.t0), io::fmt_f64(p.shape), io::fmt_f64(p.scale))
}

fn simulate(ini: &Ini, a: &SourceArgs, out: &Path) -> anyhow::Result<Manifest> {
    let exp = base_experiment(ini)?;
    let mut m = Manifest::new("simulate");
    let data = load_source(ini, a, &exp, &mut m)?;
    io::write_spectrum(&out.join("spectrum.csv"), &data.spectrum)?;
    io::write_nyquist(&out.join("nyquist.csv"), &nyquist_curve(&data.spectrum))?;
    m.artifact("spectrum.csv").artifact("nyquist.csv");
    println!("{}: {} frequencies written to {}", data.label, data.spectrum.len(), out.display());
    Ok(m)
}

fn invert(ini: &Ini, a: &InvertArgs, out: &Path) -> anyhow::Result<Manifest> {
    let exp = base_experiment(ini)?;
    let mut m = Manifest::new("invert");
    let data = load_source(ini, &a.source, &exp, &mut m)?;
    let (row_method, row_l) = exp.rows[0];
    let method = a.solver.method.unwrap_or(row_method);
    let lkind = a.solver.l.unwrap_or(row_l);
    let resolution = a.solver.matrix.unwrap_or(exp.setup.resolution);
    let choice = a.criterion.unwrap_or(match exp.criterion {
        Criterion::Lc => Choice::Lc,
        Criterion::Ncp => Choice::Ncp,
    });
    let op = assemble_operator(&data.spectrum.freq_grid, exp.setup.s_range, resolution, exp.setup.scheme)?;
    let truth = data.model.as_ref().map(|md| md.f_values(op.log_time_grid.s_values()));
    if choice == Choice::Opt && truth.is_none() {
        bail!(Error::Config("--criterion opt needs a known truth (--set or --process)".into()));
    }
    let grid = match a.lambda {
        Some(l) => LambdaGrid::new(vec![l])?,
        None => exp.setup.lambda_grid.clone(),
    };
    let l = build_regularizer(lkind, op.n_nodes())?;
    let gram = GramCache::new(&op.matrix, &l)?;
    let b = data.spectrum.stacked();
    let mut spec = SweepSpec::new(&op.matrix, &b, &l, method);
    spec.gram = Some(&gram);
    spec.truth = truth.as_deref();
    spec.sbb = exp.setup.sbb;
    spec.ncp_norm = exp.setup.ncp_norm;
    spec.parallel = true;
    let sw = sweep(&spec, &grid)?;
    let lambda = match (a.lambda, choice) {
        (Some(l), _) => l,
        (None, Choice::Lc) => lcurve_corner(&sw)?.lambda,
        (None, Choice::Ncp) => ncp_select(&sw)?,
        (None, Choice::Opt) => oracle_select(&sw)?,
    };
    let point = sw.point_at(lambda).ok_or_else(|| Error::Numerical("selected λ missing".into()))?;
    let sol = point
        .solution
        .as_ref()
        .ok_or_else(|| Error::Numerical(format!("solve failed at λ = {lambda}: {}", point.failure.clone().unwrap_or_default())))?;
    io::write_sweep(&out.join("sweep.csv"), &sw)?;
    io::write_solution(&out.join("solution.csv"), op.log_time_grid.s_values(), sol.x.as_slice())?;
    let err = truth.as_deref().map(|t| relative_error_percent(sol.x.as_slice(), t)).transpose()?;
    let choice_name = if a.lambda.is_some() { "fixed".to_string() } else { format!("{choice:?}").to_lowercase() };
    io::write_table(
        fs::File::create(out.join("selection.csv"))?,
        &["criterion", "lambda", "residual_norm", "seminorm", "converged", "relative_error_percent"],
        &[vec![
            choice_name.clone(),
            io::fmt_f64(lambda),
            io::fmt_f64(sol.residual_norm),
            io::fmt_f64(sol.seminorm),
            sol.converged.to_string(),
            err.map(io::fmt_f64).unwrap_or_default(),
        ]],
    )?;
    m.add("matrix", resolution)
        .add("quadrature", exp.setup.scheme)
        .add("regularizer", lkind)
        .add("method", method)
        .add("criterion", &choice_name)
        .add("lambda_grid", format!("{} values", grid.len()))
        .add("lambda", io::fmt_f64(lambda))
        .artifact("sweep.csv").artifact("solution.csv").artifact("selection.csv");
    match err {
        Some(e) => println!("{}: λ = {lambda:.3e} ({choice_name}), relative error {e:.2}%", data.label),
        None => println!("{}: λ = {lambda:.3e} ({choice_name})", data.label),
    }
    if !sol.converged {
        m.failure = Some(Error::Numerical(format!("solver did not converge at λ = {lambda}")));
    }
    Ok(m)
}

fn fit_cmd(ini: &Ini, a: &FitArgs, out: &Path) -> anyhow::Result<Manifest> {
    let exp = base_experiment(ini)?;
    let mut m = Manifest::new("fit");
    if let Some(n) = a.realizations {
        if a.source.input.is_some() || a.source.spectrum.is_some() || a.source.noise.is_some() {
            bail!(Error::Config("the noise-ladder protocol synthesizes its own data; drop --input/--noise".into()));
        }
        let data = load_source(ini, &SourceArgs { noise: None, ..a.source.clone() }, &exp, &mut m)?;
        let model = data.model.expect("synthesized source");
        let [truth] = model.processes() else {
            bail!(Error::Config("the noise-ladder protocol needs a single-process truth".into()));
        };
        let family = a.family.unwrap_or(truth.kind);
        let seed = a.source.seed.unwrap_or(exp.base_seed);
        let rows = fit_protocol(truth, family, &NOISE_LADDER_LOG10, n, seed, &FrequencyGrid::default_grid())?;
        io::write_fit_report(&out.join("fit_report.csv"), &rows)?;
        m.add("fit_family", family).add("realizations", n).add("base_seed", seed).artifact("fit_report.csv");
            println!("{:<8}{:>10}{:>8}{:>12}{:>14}{:>12}", "family", "log10 η", "param", "true", "mean", "std");
        for r in &rows {
            println!(
                "{:<8}{:>10.3}{:>8}{:>12.4}{:>14.6}{:>12.2e}",
                r.family.to_string(), r.noise_log10, r.param_name, r.true_value, r.mean_fit, r.std_fit
            );
        }
        return Ok(m);
    }
    let data = load_source(ini, &a.source, &exp, &mut m)?;
    let family = a
        .family
        .or_else(|| data.model.as_ref().and_then(DrtModel::family))
        .ok_or_else(|| Error::Config("give --family for measured or mixed-family data".into()))?;
    let config = init_from_peaks(&data.spectrum, family)?;
    let res = fit(&data.spectrum, &config)?;
    let rows: Vec<Vec<String>> = res
        .params
        .iter()
        .enumerate()
        .map(|(k, p)| {
            vec![
                (k + 1).to_string(),
                family.to_string(),
                io::fmt_f64(p.0),
                io::fmt_f64(p.1),
                io::fmt_f64(p.2),
            ]
        })
        .collect();
    io::write_table(fs::File::create(out.join("fit.csv"))?, &["process", "family", "t0", "shape", "scale"], &rows)?;
    m.add("fit_family", family)
        .add("residual_norm", io::fmt_f64(res.residual_norm))
        .add("converged", res.converged)
        .add("iterations", res.iterations)
        .artifact("fit.csv");
    for (k, p) in res.params.iter().enumerate() {
        println!("process {}: {family} t0 = {:.6e}, shape = {:.6}, scale = {:.6}", k + 1, p.0, p.1, p.2);
    }
    println!("residual {:.3e} after {} iterations", res.residual_norm, res.iterations);
    if !res.converged {
        m.failure = Some(Error::Numerical("fit did not converge".into()));
    }
    Ok(m)
}

fn peaks_cmd(ini: &Ini, a: &PeaksArgs, out: &Path) -> anyhow::Result<Manifest> {
    let exp = base_experiment(ini)?;
    let mut m = Manifest::new("peaks");
    let data = load_source(ini, &a.source, &exp, &mut m)?;
    let peaks = find_z2_peaks_with(&data.spectrum, PeakOptions { refine: a.refine })?;
    io::write_peaks(&out.join("peaks.csv"), &peaks)?;
    io::write_nyquist(&out.join("nyquist.csv"), &nyquist_curve(&data.spectrum))?;
    m.add("refine", a.refine).add("peaks", peaks.count()).artifact("peaks.csv").artifact("nyquist.csv");
    println!("{}: {} interior peak(s)", data.label, peaks.count());
    for p in peaks.interior() {
        println!("  omega = {:.6e}  t* = {:.6e}", p.omega, p.t_star);
    }
    Ok(m)
}

fn table(ini: &Ini, a: &TableArgs, out: &Path) -> anyhow::Result<Manifest> {
    let mut cfg = match &a.preset {
        Some(p) => {
            let mut ini = ini.clone();
            ini.remove("experiment", "preset");
            experiment_from_ini(&ini, preset(p)?)?
        }
        None => base_experiment(ini)?,
    };
    if !a.set.is_empty() {
        cfg.simulations = a.set.clone();
    }
    if let Some(r) = a.matrix {
        cfg.setup.resolution = r;
    }
    if a.method.is_some() || !a.l.is_empty() {
        let method = a.method.unwrap_or(cfg.rows[0].0);
        let ls: Vec<RegularizerKind> = if a.l.is_empty() {
            let mut v: Vec<_> = cfg.rows.iter().map(|r| r.1).collect();
            v.dedup();
            v
        } else {
            a.l.clone()
        };
        cfg.rows = ls.into_iter().map(|l| (method, l)).collect();
    }
    if let Some(c) = a.criterion {
        cfg.criterion = c;
    }
    if !a.noise.is_empty() {
        cfg.noise_levels = a.noise.clone();
    }
    if let Some(n) = a.realizations {
        cfg.n_realizations = n;
    }
    if let Some(s) = a.seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    let rows = monte_carlo(&cfg, true)?;
    io::write_stats(&out.join("stats.csv"), &rows)?;
    let text = tabulate(&rows, cfg.n_realizations);
    fs::write(out.join("table.txt"), &text)?;
    let mut m = Manifest::new("table");
    m.add("preset", a.preset.as_deref().or(ini.get("experiment", "preset")).unwrap_or("-"))
        .add("simulations", join(&cfg.simulations))
        .add("rows", cfg.rows.iter().map(|(mm, l)| format!("{mm}:{l}")).collect::<Vec<_>>().join(", "))
        .add("criterion", cfg.criterion)
        .add("matrix", cfg.setup.resolution)
        .add("quadrature", cfg.setup.scheme)
        .add("noise", join(&cfg.noise_levels))
        .add("noise_model", cfg.setup.noise_model)
        .add("realizations", cfg.n_realizations)
        .add("base_seed", cfg.base_seed)
        .add("lambda_grid", format!("{} values", cfg.setup.lambda_grid.len()))
        .artifact("stats.csv").artifact("table.txt");
    print!("{text}");
    Ok(m)
}

fn curve(ini: &Ini, a: &CurveArgs, out: &Path) -> anyhow::Result<Manifest> {
    let exp = base_experiment(ini)?;
    let mut setup = exp.setup.clone();
    if let Some(r) = a.solver.matrix {
        setup.resolution = r;
    }
    let cell = CellSpec {
        simulation: a.set.unwrap_or(exp.simulations[0]),
        method: a.solver.method.unwrap_or(exp.rows[0].0),
        regularizer: a.solver.l.unwrap_or(exp.rows[0].1),
        noise: a.noise.unwrap_or(*exp.noise_levels.last().expect("validated")),
        n_realizations: a.realizations.unwrap_or(exp.n_realizations),
        base_seed: a.seed.unwrap_or(exp.base_seed),
    };
    let c = mean_error_curve(&setup, &cell, true)?;
    io::write_curve(&out.join("curve.csv"), &c)?;
    io::write_realizations(&out.join("realizations.csv"), &c.realizations)?;
    let opt = |v: Option<f64>| v.map(io::fmt_f64).unwrap_or_else(|| "-".into());
    let mut m = Manifest::new("curve");
    m.add("simulation", cell.simulation)
        .add("matrix", setup.resolution)
        .add("method", cell.method)
        .add("regularizer", cell.regularizer)
        .add("noise", cell.noise)
        .add("noise_model", setup.noise_model)
        .add("realizations", cell.n_realizations)
        .add("base_seed", cell.base_seed)
        .add("gm_lambda_lc", opt(c.gm_lambda_lc))
        .add("gm_lambda_ncp", opt(c.gm_lambda_ncp))
        .add("lambda_opt", io::fmt_f64(c.lambda_opt))
        .artifact("curve.csv").artifact("realizations.csv");
    println!("{} {} L={} η={}", cell.simulation, cell.method, cell.regularizer, cell.noise);
    println!("  geometric mean λ_LC  = {}", opt(c.gm_lambda_lc));
    println!("  geometric mean λ_NCP = {}", opt(c.gm_lambda_ncp));
    println!("  λ minimizing mean error = {}", io::fmt_f64(c.lambda_opt));
    Ok(m)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}
