//! λ sweeps and the parameter-choice rules: L-curve corner, NCP, and the oracle.

mod ncp;

pub use ncp::{ncp_curve, ncp_deviation, ncp_deviation_with, NcpNorm};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regsolve::{
    solve, GramCache, RegularizedProblem, Regularizer, SbbOptions, Solution, SolveMethod,
};

/// Strictly monotone positive λ values.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    values: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::dim("lambda grid is empty"));
        }
        if values.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::domain("lambda values must be finite and positive"));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::domain("lambda values must be strictly monotone"));
        }
        Ok(LambdaGrid { values })
    }

    /// `n` log-spaced values from `lo` to `hi`, ascending.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || n < 2 {
            return Err(Error::domain("need 0 < lo < hi and at least two values"));
        }
        let (a, b) = (lo.log10(), hi.log10());
        Self::new(
            (0..n)
                .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
                .collect(),
        )
    }

    /// 50 values from `1e-8` to `1e2`.
    pub fn default_grid() -> Self {
        Self::log_spaced(1e-8, 1e2, 50).expect("static grid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        LambdaGrid { values }
    }
}

/// Result of one λ in a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub lambda: f64,
    pub solution: Option<Solution>,
    /// Solver error message, when the solve failed outright.
    pub failure: Option<String>,
    /// `b − Ax`, stacked.
    pub residual: Option<DVector<f64>>,
    pub ncp_deviation: Option<f64>,
    /// `‖x − x_true‖₂` in s-space, when the truth is known.
    pub s_space_error: Option<f64>,
}

impl SweepPoint {
    pub fn residual_norm(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.residual_norm)
    }

    pub fn seminorm(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.seminorm)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn point_at(&self, lambda: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.lambda == lambda)
    }
}

/// Everything a sweep needs besides the λ grid.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    pub l: &'a Regularizer,
    pub gram: Option<&'a GramCache>,
    pub method: SolveMethod,
    pub sbb: SbbOptions,
    pub truth: Option<&'a [f64]>,
    pub ncp_norm: NcpNorm,
    /// Solve the λ values in parallel on the current rayon pool.
    pub parallel: bool,
}

impl<'a> SweepSpec<'a> {
    pub fn new(a: &'a DMatrix<f64>, b: &'a DVector<f64>, l: &'a Regularizer, method: SolveMethod) -> Self {
        SweepSpec {
            a,
            b,
            l,
            gram: None,
            method,
            sbb: SbbOptions::default(),
            truth: None,
            ncp_norm: NcpNorm::L2,
            parallel: false,
        }
    }
}

/// Solve at every λ of `grid`; each solve is independent of the others.
pub fn sweep(spec: &SweepSpec<'_>, grid: &LambdaGrid) -> Result<SweepResult> {
    RegularizedProblem::new(spec.a, spec.b, spec.l, 0.0)?;
    if let Some(t) = spec.truth {
        if t.len() != spec.a.ncols() {
            return Err(Error::dim(format!(
                "truth has {} samples, operator has {} columns",
                t.len(),
                spec.a.ncols()
            )));
        }
    }
    let one = |&lambda: &f64| solve_point(spec, lambda);
    let points = if spec.parallel {
        grid.values().par_iter().map(one).collect()
    } else {
        grid.values().iter().map(one).collect()
    };
    Ok(SweepResult { points })
}

fn solve_point(spec: &SweepSpec<'_>, lambda: f64) -> SweepPoint {
    let mut problem = RegularizedProblem::new(spec.a, spec.b, spec.l, lambda)
        .expect("dimensions checked by the caller");
    if let Some(g) = spec.gram {
        problem = problem.with_gram(g);
    }
    match solve(&problem, spec.method, &spec.sbb) {
        Ok(sol) => {
            if !sol.converged {
                log::debug!("λ = {lambda:e}: {} did not converge", spec.method);
            }
            let residual = spec.b - spec.a * &sol.x;
            let ncp = ncp_deviation_with(residual.as_slice(), spec.ncp_norm).ok();
            let err = spec.truth.map(|t| {
                sol.x.iter().zip(t).map(|(x, t)| (x - t).powi(2)).sum::<f64>().sqrt()
            });
            SweepPoint {
                lambda,
                solution: Some(sol),
                failure: None,
                residual: Some(residual),
                ncp_deviation: ncp,
                s_space_error: err,
            }
        }
        Err(e) => {
            log::warn!("λ = {lambda:e}: solver failed: {e}");
            SweepPoint {
                lambda,
                solution: None,
                failure: Some(e.to_string()),
                residual: None,
                ncp_deviation: None,
                s_space_error: None,
            }
        }
    }
}

/// Chosen L-curve point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LCurveCorner {
    pub lambda: f64,
    /// Signed Menger curvature at the corner (zero for the fallback).
    pub curvature: f64,
    /// No point bends toward the origin; the fallback rule was used.
    pub no_corner: bool,
}

/// Points closer than this fraction of the curve's extent to their kept
/// predecessor are merged before curvature is measured. Such clusters appear
/// where residual and seminorm stop changing, and their curvature is set by
/// rounding rather than by the shape of the curve.
const LCURVE_MERGE_FRACTION: f64 = 1e-6;

/// λ of maximum signed Menger curvature of `(log ρ, log η)`, walking by
/// increasing λ; positive curvature bends toward the origin. Endpoints never
/// qualify and ties go to the larger λ.
pub fn lcurve_corner(sweep: &SweepResult) -> Result<LCurveCorner> {
    let mut pts: Vec<(f64, f64, f64)> = sweep
        .points
        .iter()
        .filter_map(|p| {
            let (r, s) = (p.residual_norm()?, p.seminorm()?);
            (r > 0.0 && s > 0.0 && r.is_finite() && s.is_finite())
                .then(|| (p.lambda, r.ln(), s.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::Numerical(format!(
            "L-curve needs three usable points, have {}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let fallback = |pts: &[(f64, f64, f64)]| {
        let rmin = pts.iter().map(|p| p.1.exp()).fold(f64::INFINITY, f64::min);
        let lambda = pts
            .iter()
            .filter(|p| p.1.exp() <= 1.01 * rmin)
            .map(|p| p.0)
            .fold(f64::NEG_INFINITY, f64::max);
        LCurveCorner { lambda, curvature: 0.0, no_corner: true }
    };

    let diam = diameter(&pts);
    if diam == 0.0 {
        return Ok(fallback(&pts));
    }
    let mut kept: Vec<(f64, f64, f64)> = vec![pts[0]];
    for &p in &pts[1..] {
        let q = kept.last().expect("non-empty");
        if ((p.1 - q.1).powi(2) + (p.2 - q.2).powi(2)).sqrt() > LCURVE_MERGE_FRACTION * diam {
            kept.push(p);
        } else {
            // Represent a cluster by its largest λ.
            *kept.last_mut().expect("non-empty") = (p.0, q.1, q.2);
        }
    }
    if kept.len() < 3 {
        return Ok(fallback(&pts));
    }

    let mut best: Option<(f64, f64)> = None;
    for w in kept.windows(3) {
        let k = menger(w[0], w[1], w[2]);
        if best.is_none_or(|(bk, _)| k >= bk) {
            best = Some((k, w[1].0));
        }
    }
    let (k, lambda) = best.expect("at least one interior point");
    if !(k * diam > 1e-9) {
        return Ok(fallback(&pts));
    }
    Ok(LCurveCorner { lambda, curvature: k, no_corner: false })
}

fn diameter(pts: &[(f64, f64, f64)]) -> f64 {
    let (mut xmin, mut xmax, mut ymin, mut ymax) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        xmin = xmin.min(p.1);
        xmax = xmax.max(p.1);
        ymin = ymin.min(p.2);
        ymax = ymax.max(p.2);
    }
    ((xmax - xmin).powi(2) + (ymax - ymin).powi(2)).sqrt()
}

/// Signed curvature of the circle through three points.
fn menger(p: (f64, f64, f64), q: (f64, f64, f64), r: (f64, f64, f64)) -> f64 {
    let (ax, ay) = (q.1 - p.1, q.2 - p.2);
    let (bx, by) = (r.1 - q.1, r.2 - q.2);
    let (cx, cy) = (r.1 - p.1, r.2 - p.2);
    let cross = ax * by - ay * bx;
    let den = (ax.hypot(ay)) * (bx.hypot(by)) * (cx.hypot(cy));
    if den == 0.0 {
        0.0
    } else {
        2.0 * cross / den
    }
}

/// λ with the smallest NCP deviation; ties go to the larger λ.
pub fn ncp_select(sweep: &SweepResult) -> Result<f64> {
    argmin_prefer_larger(sweep, |p| p.ncp_deviation)
        .ok_or_else(|| Error::Numerical("no λ has a usable NCP deviation".into()))
}

/// λ with the smallest s-space error against the truth; ties go to the larger λ.
pub fn oracle_select(sweep: &SweepResult) -> Result<f64> {
    argmin_prefer_larger(sweep, |p| p.s_space_error)
        .ok_or_else(|| Error::Numerical("sweep carries no truth errors".into()))
}

fn argmin_prefer_larger(sweep: &SweepResult, key: impl Fn(&SweepPoint) -> Option<f64>) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in &sweep.points {
        let Some(v) = key(p).filter(|v| v.is_finite()) else { continue };
        let better = match best {
            None => true,
            Some((bv, bl)) => v < bv || (v == bv && p.lambda > bl),
        };
        if better {
            best = Some((v, p.lambda));
        }
    }
    best.map(|(_, l)| l)
}

/// `exp(mean(ln λ))`.
pub fn geometric_mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::dim("geometric mean of an empty list"));
    }
    if values.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("geometric mean needs positive values"));
    }
    Ok((values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp())
}

/// The three selections of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub lambda_lc: Option<f64>,
    pub lc_no_corner: bool,
    pub lambda_ncp: Option<f64>,
    pub lambda_opt: Option<f64>,
}

impl SelectionResult {
    pub fn from_sweep(sweep: &SweepResult) -> Self {
        let lc = lcurve_corner(sweep).ok();
        SelectionResult {
            lambda_lc: lc.map(|c| c.lambda),
            lc_no_corner: lc.is_some_and(|c| c.no_corner),
            lambda_ncp: ncp_select(sweep).ok(),
            lambda_opt: oracle_select(sweep).ok(),
        }
    }
}
