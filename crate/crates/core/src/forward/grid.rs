use std::f64::consts::LN_10;

use crate::error::{Error, Result};

/// Strictly increasing positive angular frequencies (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::dim("frequency grid is empty"));
        }
        if omegas.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return Err(Error::domain("frequencies must be finite and positive"));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("frequencies must be strictly increasing"));
        }
        Ok(FrequencyGrid { omegas })
    }

    /// Log-spaced grid from `lo` to `hi` with `per_decade` intervals per decade.
    pub fn log_spaced(lo: f64, hi: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || per_decade == 0 {
            return Err(Error::domain("need 0 < lo < hi and a positive density"));
        }
        let (a, b) = (lo.log10(), hi.log10());
        let n = ((b - a) * per_decade as f64).round() as usize + 1;
        let omegas = (0..n)
            .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1).max(1) as f64))
            .collect();
        Self::new(omegas)
    }

    /// 10 points per decade over `[1e-4, 1e4]` rad/s (81 frequencies).
    pub fn default_grid() -> Self {
        Self::log_spaced(1e-4, 1e4, 10).expect("static grid")
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Uniform grid in `s = ln t`, mirrored in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTimeGrid {
    s_values: Vec<f64>,
    t_values: Vec<f64>,
    delta_s: f64,
}

impl LogTimeGrid {
    pub fn new(s_start: f64, delta_s: f64, n: usize) -> Result<Self> {
        if !(delta_s.is_finite() && delta_s > 0.0) {
            return Err(Error::domain(format!("spacing must be positive, got {delta_s}")));
        }
        if n == 0 {
            return Err(Error::dim("log-time grid needs at least one node"));
        }
        let s_values: Vec<f64> = (0..n).map(|i| s_start + i as f64 * delta_s).collect();
        let t_values = s_values.iter().map(|s| s.exp()).collect();
        Ok(LogTimeGrid { s_values, t_values, delta_s })
    }

    /// `n` equally spaced nodes covering `[s_min, s_max]`.
    pub fn spanning(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if n < 2 || !(s_max > s_min) {
            return Err(Error::domain("need s_min < s_max and at least two nodes"));
        }
        Self::new(s_min, (s_max - s_min) / (n - 1) as f64, n)
    }

    /// Nodes at (approximately) `per_decade` per decade of `t` over `[s_min, s_max]`.
    pub fn per_decade(s_min: f64, s_max: f64, per_decade: usize) -> Result<Self> {
        let n = ((s_max - s_min) / LN_10 * per_decade as f64).round() as usize + 1;
        Self::spanning(s_min, s_max, n)
    }

    pub fn s_values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn t_values(&self) -> &[f64] {
        &self.t_values
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    /// Spacing in decades, `Δs / ln 10`.
    pub fn delta_t_decades(&self) -> f64 {
        self.delta_s / LN_10
    }

    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }
}
