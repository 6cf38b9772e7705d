//! Bounded nonlinear least-squares fits of RQ / LN models to impedance data.
//!
//! The optimizer is a projected Levenberg-Marquardt iteration on the internal
//! variables `(ln t0, shape, scale)` per process, with central-difference
//! Jacobians, Marquardt diagonal scaling, and variables frozen while they sit
//! on a bound with the gradient pushing outward.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::drt::{DrtModel, DrtProcess, ProcessKind};
use crate::error::{Error, Result};
use crate::forward::{add_noise, synthesize_spectrum, FrequencyGrid, ImpedanceSpectrum};
use crate::peaks::find_z2_peaks;

/// Initial shape for RQ fits.
pub const RQ_SHAPE_INIT: f64 = 0.8;
/// Initial shape for LN fits.
pub const LN_SHAPE_INIT: f64 = 0.69;
/// Relative distance kept from each open bound.
const BOUND_MARGIN: f64 = 1e-6;
const TOL: f64 = 1e-10;
const MAX_ITER: usize = 500;

/// Open intervals for each parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitBounds {
    pub t0: (f64, f64),
    pub shape: (f64, f64),
    pub scale: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds { t0: (0.0, 100.0), shape: (0.1, 1.0), scale: (0.0, 1.1) }
    }
}

impl FitBounds {
    /// Closed box `[lo, hi]` for the internal variables of one process.
    fn internal_box(&self) -> [(f64, f64); 3] {
        let inner = |(lo, hi): (f64, f64)| {
            let w = (hi - lo) * BOUND_MARGIN;
            (lo + w, hi - w)
        };
        // t0 has an open lower bound at zero; keep it 12 decades below the top.
        let t_hi = self.t0.1 * (1.0 - BOUND_MARGIN);
        let t_lo = if self.t0.0 > 0.0 { self.t0.0 * (1.0 + BOUND_MARGIN) } else { t_hi * 1e-12 };
        [(t_lo.ln(), t_hi.ln()), inner(self.shape), inner(self.scale)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub family: ProcessKind,
    /// Starting `(t0, shape, scale)` per process.
    pub init: Vec<(f64, f64, f64)>,
    pub bounds: FitBounds,
}

impl FitConfig {
    pub fn n_processes(&self) -> usize {
        self.init.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.init.is_empty() {
            return Err(Error::Config("fit needs at least one process".into()));
        }
        let b = &self.bounds;
        for &(t0, shape, scale) in &self.init {
            let inside = |v: f64, (lo, hi): (f64, f64)| v > lo && v < hi;
            if !(inside(t0, b.t0) && inside(shape, b.shape) && inside(scale, b.scale)) {
                return Err(Error::Config(format!(
                    "initial value ({t0}, {shape}, {scale}) is not strictly inside the bounds"
                )));
            }
        }
        Ok(())
    }
}

/// One process per interior `Z2` peak, `t0 = 1/ω_peak`, default shape and scale 1.
pub fn init_from_peaks(spectrum: &ImpedanceSpectrum, family: ProcessKind) -> Result<FitConfig> {
    let peaks = find_z2_peaks(spectrum)?;
    if peaks.count() == 0 {
        return Err(Error::NoPeak(
            "Z2 has no interior peak; supply the initial values explicitly".into(),
        ));
    }
    let bounds = FitBounds::default();
    let shape = match family {
        ProcessKind::Rq => RQ_SHAPE_INIT,
        ProcessKind::Ln => LN_SHAPE_INIT,
    };
    let [tb, _, _] = bounds.internal_box();
    let init = peaks
        .t_star()
        .into_iter()
        .map(|t| (t.ln().clamp(tb.0, tb.1).exp(), shape, 1.0))
        .collect();
    Ok(FitConfig { family, init, bounds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub family: ProcessKind,
    /// Fitted `(t0, shape, scale)` per process.
    pub params: Vec<(f64, f64, f64)>,
    /// `‖model − data‖₂` over the stacked `(Z1, Z2)` values.
    pub residual_norm: f64,
    pub initial_residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn model(&self) -> Result<DrtModel> {
        build_model(self.family, &self.params)
    }

    /// `fitted − true` per process, when the truth has the same layout.
    pub fn deviation(&self, truth: &[(f64, f64, f64)]) -> Option<Vec<(f64, f64, f64)>> {
        (truth.len() == self.params.len()).then(|| {
            self.params
                .iter()
                .zip(truth)
                .map(|(p, t)| (p.0 - t.0, p.1 - t.1, p.2 - t.2))
                .collect()
        })
    }
}

fn build_model(family: ProcessKind, params: &[(f64, f64, f64)]) -> Result<DrtModel> {
    DrtModel::new(
        params
            .iter()
            .map(|&(t0, shape, scale)| DrtProcess::new(family, t0, shape, scale))
            .collect::<Result<_>>()?,
    )
}

struct Objective<'a> {
    family: ProcessKind,
    grid: &'a FrequencyGrid,
    data: DVector<f64>,
}

impl Objective<'_> {
    fn params(u: &DVector<f64>) -> Vec<(f64, f64, f64)> {
        u.as_slice().chunks(3).map(|c| (c[0].exp(), c[1], c[2])).collect()
    }

    fn residual(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        let model = build_model(self.family, &Self::params(u))?;
        Ok(synthesize_spectrum(&model, self.grid).stacked() - &self.data)
    }
}

/// Bounded least-squares fit of `config.family` to `spectrum`.
pub fn fit(spectrum: &ImpedanceSpectrum, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let obj = Objective { family: config.family, grid: &spectrum.freq_grid, data: spectrum.stacked() };
    let boxes: Vec<(f64, f64)> = (0..config.n_processes())
        .flat_map(|_| config.bounds.internal_box())
        .collect();
    let np = boxes.len();
    let clamp = |u: &mut DVector<f64>| {
        for (v, &(lo, hi)) in u.iter_mut().zip(&boxes) {
            *v = v.clamp(lo, hi);
        }
    };

    let mut u = DVector::from_iterator(
        np,
        config.init.iter().flat_map(|&(t0, s, c)| [t0.ln(), s, c]),
    );
    clamp(&mut u);
    let mut r = obj.residual(&u)?;
    let initial = r.norm();
    let mut cost = 0.5 * r.norm_squared();

    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITER {
        iterations += 1;
        let jac = jacobian(&obj, &u, &boxes)?;
        let jtj = jac.tr_mul(&jac);
        let g = jac.tr_mul(&r);

        // Freeze variables pressed against a bound.
        let free: Vec<usize> = (0..np)
            .filter(|&i| {
                let (lo, hi) = boxes[i];
                !((u[i] <= lo && g[i] > 0.0) || (u[i] >= hi && g[i] < 0.0))
            })
            .collect();
        let gfree = free.iter().map(|&i| g[i].abs()).fold(0.0, f64::max);
        if gfree <= TOL || free.is_empty() {
            converged = true;
            break;
        }
        if mu < 0.0 {
            mu = 1e-3 * (0..np).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        }

        let mut accepted = false;
        while !accepted {
            let k = free.len();
            let mut h = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (a, &i) in free.iter().enumerate() {
                rhs[a] = -g[i];
                for (b, &j) in free.iter().enumerate() {
                    h[(a, b)] = jtj[(i, j)];
                }
                h[(a, a)] += mu * jtj[(i, i)].max(1e-30);
            }
            let Some(step) = h.cholesky().map(|c| c.solve(&rhs)) else {
                mu *= nu;
                nu *= 2.0;
                if !mu.is_finite() || mu > 1e30 {
                    break;
                }
                continue;
            };
            let mut trial = u.clone();
            for (a, &i) in free.iter().enumerate() {
                trial[i] += step[a];
            }
            clamp(&mut trial);
            let delta = &trial - &u;
            if delta.norm() <= TOL * (u.norm() + TOL) {
                converged = true;
                break;
            }
            let r_new = obj.residual(&trial)?;
            let cost_new = 0.5 * r_new.norm_squared();
            let pred = -(g.dot(&delta) + 0.5 * delta.dot(&(&jtj * &delta)));
            let rho = if pred > 0.0 { (cost - cost_new) / pred } else { -1.0 };
            if rho > 0.0 && cost_new <= cost {
                u = trial;
                r = r_new;
                let rel = (cost - cost_new) / cost.max(f64::MIN_POSITIVE);
                cost = cost_new;
                mu *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                nu = 2.0;
                accepted = true;
                if rel <= TOL * TOL {
                    converged = true;
                }
            } else {
                mu *= nu;
                nu *= 2.0;
                if !mu.is_finite() || mu > 1e30 {
                    break;
                }
            }
        }
        if converged || !accepted {
            converged |= !accepted && mu > 1e30;
            break;
        }
    }

    Ok(FitResult {
        family: config.family,
        params: Objective::params(&u),
        residual_norm: r.norm(),
        initial_residual_norm: initial,
        converged,
        iterations,
    })
}

fn jacobian(obj: &Objective<'_>, u: &DVector<f64>, boxes: &[(f64, f64)]) -> Result<DMatrix<f64>> {
    let np = u.len();
    let cols: Vec<Result<DVector<f64>>> = (0..np)
        .map(|i| {
            let (lo, hi) = boxes[i];
            let h = 1e-6 * u[i].abs().max(1.0);
            let (a, b) = ((u[i] - h).max(lo), (u[i] + h).min(hi));
            let mut up = u.clone();
            let mut dn = u.clone();
            up[i] = b;
            dn[i] = a;
            Ok((obj.residual(&up)? - obj.residual(&dn)?) / (b - a))
        })
        .collect();
    let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// `log10 η` values of the noise ladder.
pub const NOISE_LADDER_LOG10: [f64; 5] = [-6.0, -5.125, -4.25, -3.375, -2.5];

/// Summary of one parameter over repeated noisy fits.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReportRow {
    pub family: ProcessKind,
    pub noise_log10: f64,
    pub param_name: String,
    pub true_value: f64,
    pub mean_fit: f64,
    pub std_fit: f64,
    pub n: usize,
}

/// Repeated fits of `fit_family` to noisy data from `truth` at each noise
/// level. Realization `i` uses seed `base_seed ^ i`. The true value reported
/// for each parameter is that of the generating process.
pub fn fit_protocol(
    truth: &DrtProcess,
    fit_family: ProcessKind,
    noise_log10: &[f64],
    n_realizations: usize,
    base_seed: u64,
    grid: &FrequencyGrid,
) -> Result<Vec<FitReportRow>> {
    let model = DrtModel::single(*truth)?;
    let clean = synthesize_spectrum(&model, grid);
    let config = init_from_peaks(&clean, fit_family)?;
    let names = match fit_family {
        ProcessKind::Rq => ["beta", "t0", "scale"],
        ProcessKind::Ln => ["sigma", "t0", "scale"],
    };
    let true_vals = [truth.shape, truth.t0, truth.scale];
    let mut rows = Vec::new();
    for &lg in noise_log10 {
        let eta = 10f64.powf(lg);
        let fits: Vec<Option<(f64, f64, f64)>> = (0..n_realizations)
            .into_par_iter()
            .map(|i| {
                let noisy = add_noise(&clean, eta, base_seed ^ i as u64).ok()?;
                let res = fit(&noisy, &config).ok()?;
                if !res.converged {
                    log::warn!("fit at log10 η = {lg} realization {i} did not converge");
                }
                Some(res.params[0])
            })
            .collect();
        let ok: Vec<(f64, f64, f64)> = fits.into_iter().flatten().collect();
        for (k, name) in names.iter().enumerate() {
            let vals: Vec<f64> = ok
                .iter()
                .map(|p| match k {
                    0 => p.1,
                    1 => p.0,
                    _ => p.2,
                })
                .collect();
            let (mean, std) = mean_std(&vals);
            rows.push(FitReportRow {
                family: fit_family,
                noise_log10: lg,
                param_name: name.to_string(),
                true_value: true_vals[k],
                mean_fit: mean,
                std_fit: std,
                n: vals.len(),
            });
        }
    }
    Ok(rows)
}

/// Mean and sample standard deviation; std is 0 for fewer than two values.
pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drt::SimulationSet;

    #[test]
    fn init_uses_peak_reciprocal() {
        let grid = FrequencyGrid::default_grid();
        let spec = synthesize_spectrum(&SimulationSet::ARq.model(), &grid);
        let cfg = init_from_peaks(&spec, ProcessKind::Rq).unwrap();
        assert_eq!(cfg.n_processes(), 1);
        let (t0, shape, scale) = cfg.init[0];
        assert!((t0.ln() + 1.5).abs() <= 10f64.ln() / 10.0);
        assert_eq!((shape, scale), (0.8, 1.0));
        let spec = synthesize_spectrum(&SimulationSet::BLn.model(), &grid);
        assert_eq!(init_from_peaks(&spec, ProcessKind::Ln).unwrap().n_processes(), 2);
    }

    #[test]
    fn no_interior_peak_is_an_error() {
        let grid = FrequencyGrid::new((0..10).map(|k| 1.0 + k as f64).collect()).unwrap();
        let spec = ImpedanceSpectrum::new(grid, vec![1.0; 10], (0..10).map(|k| k as f64).collect())
            .unwrap();
        assert!(matches!(init_from_peaks(&spec, ProcessKind::Rq), Err(Error::NoPeak(_))));
    }

    #[test]
    fn noiseless_self_fit_recovers_parameters() {
        let grid = FrequencyGrid::default_grid();
        let truth = DrtProcess::rq(0.1, 0.72, 1.0).unwrap();
        let spec = synthesize_spectrum(&DrtModel::single(truth).unwrap(), &grid);
        let cfg = init_from_peaks(&spec, ProcessKind::Rq).unwrap();
        let res = fit(&spec, &cfg).unwrap();
        let (t0, b, s) = res.params[0];
        assert!((t0 - 0.1).abs() < 1e-6 && (b - 0.72).abs() < 1e-6 && (s - 1.0).abs() < 1e-6);
        assert!(res.residual_norm <= res.initial_residual_norm);
    }

    #[test]
    fn lognormal_self_fit() {
        let grid = FrequencyGrid::default_grid();
        let truth = DrtProcess::ln(0.1, 0.5, 0.8).unwrap();
        let spec = synthesize_spectrum(&DrtModel::single(truth).unwrap(), &grid);
        let cfg = init_from_peaks(&spec, ProcessKind::Ln).unwrap();
        let res = fit(&spec, &cfg).unwrap();
        let (t0, s, c) = res.params[0];
        assert!((t0 - 0.1).abs() < 1e-6 && (s - 0.5).abs() < 1e-6 && (c - 0.8).abs() < 1e-6);
    }

    #[test]
    fn fitted_parameters_respect_bounds() {
        let grid = FrequencyGrid::default_grid();
        // A near-Debye process pushes β toward its upper bound.
        let truth = DrtProcess::rq(0.1, 0.9999, 1.0).unwrap();
        let spec = synthesize_spectrum(&DrtModel::single(truth).unwrap(), &grid);
        let cfg = init_from_peaks(&spec, ProcessKind::Ln).unwrap();
        let res = fit(&spec, &cfg).unwrap();
        let b = FitBounds::default();
        for &(t0, s, c) in &res.params {
            assert!(t0 > b.t0.0 && t0 < b.t0.1);
            assert!(s > b.shape.0 && s < b.shape.1);
            assert!(c > b.scale.0 && c < b.scale.1);
        }
        assert!(res.residual_norm <= res.initial_residual_norm);
    }

    #[test]
    fn init_outside_bounds_rejected() {
        let cfg = FitConfig {
            family: ProcessKind::Rq,
            init: vec![(0.1, 1.0, 1.0)],
            bounds: FitBounds::default(),
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }
}
