//! Parametric distributions of relaxation times.
//!
//! Two process families are supported:
//!
//! * `RQ` (Cole-Cole): `g(t) = sin(βπ) / (2π t (cosh(β ln(t/t0)) + cos(βπ)))`, `0 < β < 1`.
//! * `LN` (lognormal): `g(t) = exp(-(ln t - μ)² / (2σ²)) / (t σ √(2π))` with the
//!   center time `t0 = exp(μ - σ²)`, i.e. `μ = ln t0 + σ²`.
//!
//! Every process density integrates to one over `t ∈ (0, ∞)`; a model is the
//! scale-weighted sum of its processes. Scales are not forced to sum to one.
//!
//! The log-time view is `g1(t) = t g(t)` and `f(s) = g1(exp(s))`, which is the
//! quantity recovered by the inversion. For RQ, substituting `t = t0 eˢ` into the
//! t-space density gives a factor `exp(-s)`; a variant written with `exp(-|s|)`
//! circulates in the literature. Both coincide at `s = 0`, and this module always
//! uses the direct substitution.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Rq,
    Ln,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcessKind::Rq => write!(f, "RQ"),
            ProcessKind::Ln => write!(f, "LN"),
        }
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RQ" => Ok(ProcessKind::Rq),
            "LN" => Ok(ProcessKind::Ln),
            other => Err(Error::Config(format!("unknown process kind `{other}`"))),
        }
    }
}

/// One relaxation process: center time `t0` (seconds), shape (β for RQ, σ for LN)
/// and a nonnegative weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrtProcess {
    pub kind: ProcessKind,
    pub t0: f64,
    pub shape: f64,
    pub scale: f64,
}

impl DrtProcess {
    pub fn new(kind: ProcessKind, t0: f64, shape: f64, scale: f64) -> Result<Self> {
        let p = DrtProcess { kind, t0, shape, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn rq(t0: f64, beta: f64, scale: f64) -> Result<Self> {
        Self::new(ProcessKind::Rq, t0, beta, scale)
    }

    pub fn ln(t0: f64, sigma: f64, scale: f64) -> Result<Self> {
        Self::new(ProcessKind::Ln, t0, sigma, scale)
    }

    /// Lognormal process from its log-mean `μ`; `t0 = exp(μ - σ²)`.
    pub fn ln_from_mu(mu: f64, sigma: f64, scale: f64) -> Result<Self> {
        Self::ln((mu - sigma * sigma).exp(), sigma, scale)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::domain(format!("t0 must be positive, got {}", self.t0)));
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::domain(format!("scale must be >= 0, got {}", self.scale)));
        }
        let ok = match self.kind {
            ProcessKind::Rq => self.shape > 0.0 && self.shape < 1.0,
            ProcessKind::Ln => self.shape.is_finite() && self.shape > 0.0,
        };
        if !ok {
            return Err(Error::domain(format!(
                "invalid {} shape parameter {}",
                self.kind, self.shape
            )));
        }
        Ok(())
    }

    /// Log-mean `μ = ln t0 + σ²` of a lognormal process.
    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            ProcessKind::Ln => Some(self.t0.ln() + self.shape * self.shape),
            ProcessKind::Rq => None,
        }
    }

    /// Location (in `s = ln t`) of the maximum of `g1`.
    ///
    /// For RQ this is `ln t0`; for LN it is `μ`, which differs from the t-space
    /// center `ln t0` by `σ²`.
    pub fn log_peak(&self) -> f64 {
        match self.kind {
            ProcessKind::Rq => self.t0.ln(),
            ProcessKind::Ln => self.t0.ln() + self.shape * self.shape,
        }
    }

    /// `g1(exp(s))` for this process, including its scale.
    pub fn g1_at_log(&self, s: f64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        let unit = match self.kind {
            ProcessKind::Rq => {
                let beta = self.shape;
                let x = beta * (s - self.t0.ln());
                let c = x.abs().cosh();
                if !c.is_finite() {
                    return 0.0;
                }
                (beta * PI).sin() / (2.0 * PI * (c + (beta * PI).cos()))
            }
            ProcessKind::Ln => {
                let sigma = self.shape;
                let z = (s - self.log_peak()) / sigma;
                (-0.5 * z * z).exp() / (sigma * SQRT_2PI)
            }
        };
        self.scale * unit
    }

    /// Half-width (in `s`) of the region beyond which the process carries
    /// less than `mass` of its (unit) weight on each side.
    pub(crate) fn tail_half_width(&self, mass: f64) -> f64 {
        match self.kind {
            ProcessKind::Rq => {
                // For β|x| >= 3 the density is below (sin βπ / 0.9π) e^{-β|x|},
                // so one tail holds at most sin βπ / (0.9 π β) e^{-βS}.
                let beta = self.shape;
                let lead = (beta * PI).sin() / (0.9 * PI * beta);
                let s = (lead / mass).ln().max(0.0) / beta;
                s.max(3.0 / beta)
            }
            ProcessKind::Ln => {
                // Gaussian tail: erfc(k/√2)/2 < mass for k = √(2 ln(1/mass)) + 1.
                let k = (2.0 * (1.0 / mass).ln()).sqrt() + 1.0;
                k * self.shape
            }
        }
    }

    /// Characteristic width of the central peak of `g1` in `s`.
    pub(crate) fn core_width(&self) -> f64 {
        match self.kind {
            // Near β → 1 the RQ peak narrows to a Lorentzian of width ~π(1-β).
            ProcessKind::Rq => (PI * (1.0 - self.shape) / self.shape).min(1.0 / self.shape),
            ProcessKind::Ln => self.shape,
        }
    }
}

/// A sample of the log-time density `f(s) = g1(exp(s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SSpaceSample {
    pub s: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrtModel {
    processes: Vec<DrtProcess>,
}

impl DrtModel {
    pub fn new(processes: Vec<DrtProcess>) -> Result<Self> {
        if processes.is_empty() {
            return Err(Error::domain("a DRT model needs at least one process"));
        }
        for p in &processes {
            p.validate()?;
        }
        Ok(DrtModel { processes })
    }

    pub fn single(process: DrtProcess) -> Result<Self> {
        Self::new(vec![process])
    }

    pub fn processes(&self) -> &[DrtProcess] {
        &self.processes
    }

    /// `g(t) = Σ scale_k g_k(t)`.
    pub fn eval_g(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.g1_at_log(t.ln()) / t)
    }

    /// `g1(t) = t g(t)`.
    pub fn eval_g1(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.g1_at_log(t.ln()))
    }

    pub fn g1_at_log(&self, s: f64) -> f64 {
        self.processes.iter().map(|p| p.g1_at_log(s)).sum()
    }

    pub fn eval_f_s(&self, s_grid: &[f64]) -> Vec<SSpaceSample> {
        s_grid
            .iter()
            .map(|&s| SSpaceSample { s, value: self.g1_at_log(s) })
            .collect()
    }

    /// Values of `f` on `s_grid`, without the coordinates.
    pub fn f_values(&self, s_grid: &[f64]) -> Vec<f64> {
        s_grid.iter().map(|&s| self.g1_at_log(s)).collect()
    }

    pub fn family(&self) -> Option<ProcessKind> {
        let first = self.processes[0].kind;
        self.processes.iter().all(|p| p.kind == first).then_some(first)
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("relaxation time must be positive, got {t}")))
    }
}

/// RQ shape giving the same peak height of the t-space density at `t0` as a
/// lognormal process of width `sigma` with the same `t0`:
/// `β = (2/π) arctan(√(2π)/σ · exp(-σ²/2))`.
pub fn matched_beta(sigma: f64) -> Result<f64> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(2.0 / PI * (SQRT_2PI / sigma * (-0.5 * sigma * sigma).exp()).atan())
}

/// The six built-in simulation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimulationSet {
    ARq,
    BRq,
    CRq,
    ALn,
    BLn,
    CLn,
}

impl SimulationSet {
    pub const ALL: [SimulationSet; 6] = [
        SimulationSet::ARq,
        SimulationSet::BRq,
        SimulationSet::CRq,
        SimulationSet::ALn,
        SimulationSet::BLn,
        SimulationSet::CLn,
    ];

    pub const RQ: [SimulationSet; 3] = [SimulationSet::ARq, SimulationSet::BRq, SimulationSet::CRq];

    pub fn family(self) -> ProcessKind {
        match self {
            SimulationSet::ARq | SimulationSet::BRq | SimulationSet::CRq => ProcessKind::Rq,
            _ => ProcessKind::Ln,
        }
    }

    /// 1, 2 or 3 for the A, B and C variants.
    pub fn number(self) -> usize {
        match self {
            SimulationSet::ARq | SimulationSet::ALn => 1,
            SimulationSet::BRq | SimulationSet::BLn => 2,
            SimulationSet::CRq | SimulationSet::CLn => 3,
        }
    }

    pub fn letter(self) -> char {
        ['A', 'B', 'C'][self.number() - 1]
    }

    pub fn model(self) -> DrtModel {
        let e = f64::exp;
        let procs = match self {
            SimulationSet::ARq => vec![DrtProcess::rq(e(-1.5), 0.8, 1.0)],
            SimulationSet::BRq => vec![
                DrtProcess::rq(e(-4.0), 0.7, 0.5),
                DrtProcess::rq(e(0.0), 0.5, 0.5),
            ],
            SimulationSet::CRq => vec![
                DrtProcess::rq(e(-1.5), 0.8, 0.5),
                DrtProcess::rq(e(-0.5), 0.6, 0.5),
            ],
            SimulationSet::ALn => vec![DrtProcess::ln_from_mu(-3.5, 0.8, 1.0)],
            SimulationSet::BLn => vec![
                DrtProcess::ln_from_mu(-7.0, 1.7f64.ln(), 0.7),
                DrtProcess::ln_from_mu(1.0, 1.5f64.ln(), 0.3),
            ],
            SimulationSet::CLn => vec![
                DrtProcess::ln_from_mu(-5.0, 1.7f64.ln(), 0.7),
                DrtProcess::ln_from_mu(-3.25, 1.5f64.ln(), 0.3),
            ],
        };
        let procs = procs.into_iter().collect::<Result<Vec<_>>>().expect("built-in parameters are valid");
        DrtModel::new(procs).expect("built-in model is non-empty")
    }
}

impl fmt::Display for SimulationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.letter(), self.family())
    }
}

impl FromStr for SimulationSet {
    type Err = Error;

    /// Accepts `A-RQ`, `RQ-A`, `ARQ`, `1,RQ` and the like, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        let (fam, idx) = if let Some(rest) = norm.strip_prefix("RQ") {
            (ProcessKind::Rq, rest.to_string())
        } else if let Some(rest) = norm.strip_prefix("LN") {
            (ProcessKind::Ln, rest.to_string())
        } else if let Some(rest) = norm.strip_suffix("RQ") {
            (ProcessKind::Rq, rest.to_string())
        } else if let Some(rest) = norm.strip_suffix("LN") {
            (ProcessKind::Ln, rest.to_string())
        } else {
            return Err(Error::Config(format!("unknown simulation set `{s}`")));
        };
        let number = match idx.as_str() {
            "A" | "1" => 1,
            "B" | "2" => 2,
            "C" | "3" => 3,
            _ => return Err(Error::Config(format!("unknown simulation set `{s}`"))),
        };
        SimulationSet::ALL
            .into_iter()
            .find(|set| set.family() == fam && set.number() == number)
            .ok_or_else(|| Error::Config(format!("unknown simulation set `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_at_mu_is_standard_normal_peak() {
        // μ = 0, σ = 1 → t0 = e^{-1}; at t = 1 the exponent vanishes.
        let m = DrtModel::single(DrtProcess::ln_from_mu(0.0, 1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(m.eval_g(1.0).unwrap(), 0.398_942_280_401_432_7, max_relative = 1e-14);
    }

    #[test]
    fn rq_at_t0_is_half_angle_tangent() {
        for beta in [0.2, 0.5, 0.8, 0.95] {
            let m = DrtModel::single(DrtProcess::rq(1.0, beta, 1.0).unwrap()).unwrap();
            let want = (beta * PI / 2.0).tan() / (2.0 * PI);
            assert_relative_eq!(m.eval_g(1.0).unwrap(), want, max_relative = 1e-14);
            let direct = (beta * PI).sin() / (1.0 + (beta * PI).cos()) / (2.0 * PI);
            assert_relative_eq!(direct, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn b_rq_mixture_matches_high_precision_values() {
        // mpmath, 40 digits.
        let m = SimulationSet::BRq.model();
        assert_relative_eq!(m.eval_g(1.0).unwrap(), 0.087_976_689_318_057_97, max_relative = 1e-13);
        assert_relative_eq!(m.eval_g(0.3).unwrap(), 0.294_516_757_401_130_06, max_relative = 1e-13);
    }

    #[test]
    fn g1_is_t_times_g() {
        let m = SimulationSet::CLn.model();
        for &t in &[1e-5, 3e-3, 0.2, 7.0] {
            assert_relative_eq!(m.eval_g1(t).unwrap(), t * m.eval_g(t).unwrap(), max_relative = 1e-14);
        }
        let rq = DrtModel::single(DrtProcess::rq(0.3, 0.6, 1.0).unwrap()).unwrap();
        let want = (0.6 * PI / 2.0).tan() / (2.0 * PI);
        assert_relative_eq!(rq.eval_g1(0.3).unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn nonpositive_time_is_rejected() {
        let m = SimulationSet::ARq.model();
        assert!(matches!(m.eval_g(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.eval_g1(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn matched_beta_values() {
        // mpmath: 0.78608862531042584507, 0.62961439772891416631.
        assert_relative_eq!(matched_beta(0.69).unwrap(), 0.786_088_625_310_425_8, max_relative = 1e-14);
        assert_relative_eq!(matched_beta(1.0).unwrap(), 0.629_614_397_728_914_2, max_relative = 1e-14);
        assert!(matched_beta(1e3).unwrap() < 1e-6);
        assert!(matched_beta(0.0).is_err());
        assert!(matched_beta(-0.5).is_err());
    }

    #[test]
    fn zero_scale_model_samples_to_zero() {
        let m = DrtModel::new(vec![
            DrtProcess::rq(1.0, 0.5, 0.0).unwrap(),
            DrtProcess::ln(1.0, 0.5, 0.0).unwrap(),
        ])
        .unwrap();
        let grid: Vec<f64> = (0..20).map(|i| -5.0 + 0.5 * i as f64).collect();
        assert!(m.eval_f_s(&grid).iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn a_ln_samples_are_unimodal() {
        let m = SimulationSet::ALn.model();
        let (lo, hi) = (1e-6f64.ln(), 1e4f64.ln());
        let grid: Vec<f64> = (0..200).map(|i| lo + (hi - lo) * i as f64 / 199.0).collect();
        let v = m.f_values(&grid);
        assert!(v.iter().all(|&x| x >= 0.0));
        let diffs: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).filter(|d| *d != 0.0).collect();
        let sign_changes = diffs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn single_ln_samples_peak_at_log_mean() {
        let p = DrtProcess::ln(0.05, 0.7, 1.0).unwrap();
        let mu = p.mu().unwrap();
        let m = DrtModel::single(p).unwrap();
        let grid: Vec<f64> = (-40..=40).map(|i| mu + 0.1 * i as f64 + 0.03).collect();
        let v = m.f_values(&grid);
        let arg = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
        let nearest = (0..grid.len())
            .min_by(|&a, &b| (grid[a] - mu).abs().total_cmp(&(grid[b] - mu).abs()))
            .unwrap();
        assert_eq!(arg, nearest);
    }

    #[test]
    fn invalid_processes() {
        assert!(DrtProcess::rq(1.0, 1.0, 1.0).is_err());
        assert!(DrtProcess::rq(1.0, 0.0, 1.0).is_err());
        assert!(DrtProcess::ln(1.0, 0.0, 1.0).is_err());
        assert!(DrtProcess::ln(0.0, 0.5, 1.0).is_err());
        assert!(DrtProcess::ln(1.0, 0.5, -1.0).is_err());
        assert!(DrtModel::new(vec![]).is_err());
    }

    #[test]
    fn set_names_round_trip() {
        for set in SimulationSet::ALL {
            assert_eq!(set.to_string().parse::<SimulationSet>().unwrap(), set);
        }
        assert_eq!("RQ-A".parse::<SimulationSet>().unwrap(), SimulationSet::ARq);
        assert_eq!("(3,LN)".parse::<SimulationSet>().unwrap(), SimulationSet::CLn);
        assert!("D-RQ".parse::<SimulationSet>().is_err());
        assert!("bogus".parse::<SimulationSet>().is_err());
    }

    #[test]
    fn table_parameters() {
        let m = SimulationSet::ALn.model();
        assert_relative_eq!(m.processes()[0].mu().unwrap(), -3.5, epsilon = 1e-14);
        let b = SimulationSet::BLn.model();
        assert_relative_eq!(b.processes()[1].shape, 1.5f64.ln());
        assert_relative_eq!(b.processes()[1].mu().unwrap(), 1.0, epsilon = 1e-14);
    }
}
