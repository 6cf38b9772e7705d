//! Grids, quadrature, the discrete forward operator, spectrum synthesis and noise.

mod grid;
mod noise;
mod quadrature;
mod synth;

pub use grid::{FrequencyGrid, LogTimeGrid};
pub use noise::{add_noise, add_noise_with, NoiseModel};
pub use quadrature::{
    weights_preconditioned, weights_s_space, weights_t_space, QuadratureScheme, QuadratureWeights,
};
pub use synth::{synthesize_spectrum, ImpedanceSpectrum};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default `s = ln t` range of the inversion grid.
pub const DEFAULT_S_RANGE: (f64, f64) = (-13.815510557964274, 9.210340371976184);

/// Real-part kernel `1/(1+ω²t²)`.
pub fn kernel_z1(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    1.0 / (1.0 + x * x)
}

/// Imaginary-part magnitude kernel `ωt/(1+ω²t²)`.
pub fn kernel_z2(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x > 1e150 {
        return 1.0 / x;
    }
    x / (1.0 + x * x)
}

/// Resolution of the s-grid of the discrete operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resolution {
    /// 10 nodes per decade.
    A3,
    /// 20 nodes per decade.
    A4,
}

impl Resolution {
    pub fn nodes_per_decade(self) -> usize {
        match self {
            Resolution::A3 => 10,
            Resolution::A4 => 20,
        }
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Resolution::A3 => "A3",
            Resolution::A4 => "A4",
        })
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A3" | "3" => Ok(Resolution::A3),
            "A4" | "4" => Ok(Resolution::A4),
            other => Err(Error::Config(format!("unknown matrix `{other}`, expected A3 or A4"))),
        }
    }
}

/// Linear map from samples `x_i = f(s_i)` to the stacked data `[Z1; Z2]`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: DMatrix<f64>,
    pub freq_grid: FrequencyGrid,
    pub log_time_grid: LogTimeGrid,
    pub weights: QuadratureWeights,
    pub resolution: Option<Resolution>,
}

impl DiscreteOperator {
    /// Operator on an explicit grid. Column `i` carries the weight of `f(s_i)`
    /// in the quadrature sum: `w_i/t_i` for the raw t-space rule, the weight
    /// itself for the other two schemes.
    pub fn from_grid(
        freq_grid: FrequencyGrid,
        log_time_grid: LogTimeGrid,
        scheme: QuadratureScheme,
    ) -> Result<Self> {
        let n = log_time_grid.len();
        if n < 2 {
            return Err(Error::dim("operator needs at least two time nodes"));
        }
        let weights = match scheme {
            QuadratureScheme::TSpaceRaw => weights_t_space(log_time_grid.t_values())?,
            QuadratureScheme::TSpacePreconditioned => {
                weights_preconditioned(log_time_grid.delta_s(), n)?
            }
            QuadratureScheme::SSpaceTrapezoid => weights_s_space(log_time_grid.delta_s(), n)?,
        };
        let col: Vec<f64> = match scheme {
            QuadratureScheme::TSpaceRaw => weights
                .weights
                .iter()
                .zip(log_time_grid.t_values())
                .map(|(w, t)| w / t)
                .collect(),
            _ => weights.weights.clone(),
        };
        let matrix = build_matrix(freq_grid.omegas(), log_time_grid.t_values(), &col);
        Ok(DiscreteOperator { matrix, freq_grid, log_time_grid, weights, resolution: None })
    }

    pub fn n_freq(&self) -> usize {
        self.freq_grid.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.log_time_grid.len()
    }

    /// Forward values `A x`, stacked `[Z1; Z2]`.
    pub fn apply(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.n_nodes() {
            return Err(Error::dim(format!(
                "operator has {} columns, vector has {} entries",
                self.n_nodes(),
                x.len()
            )));
        }
        Ok(&self.matrix * DVector::from_column_slice(x))
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix.clone().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Operator at a named resolution over `s_range` with the given quadrature.
pub fn assemble_operator(
    freq_grid: &FrequencyGrid,
    s_range: (f64, f64),
    resolution: Resolution,
    scheme: QuadratureScheme,
) -> Result<DiscreteOperator> {
    let (lo, hi) = s_range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::domain(format!("invalid s-range [{lo}, {hi}]")));
    }
    let grid = LogTimeGrid::per_decade(lo, hi, resolution.nodes_per_decade())?;
    let mut op = DiscreteOperator::from_grid(freq_grid.clone(), grid, scheme)?;
    op.resolution = Some(resolution);
    Ok(op)
}

/// Operator on the default frequency grid and s-range with preconditioned weights.
pub fn default_operator(resolution: Resolution) -> DiscreteOperator {
    assemble_operator(
        &FrequencyGrid::default_grid(),
        DEFAULT_S_RANGE,
        resolution,
        QuadratureScheme::TSpacePreconditioned,
    )
    .expect("default operator")
}

fn build_matrix(omegas: &[f64], t: &[f64], col_weights: &[f64]) -> DMatrix<f64> {
    let m = omegas.len();
    let n = t.len();
    DMatrix::from_fn(2 * m, n, |r, i| {
        if r < m {
            col_weights[i] * kernel_z1(omegas[r], t[i])
        } else {
            col_weights[i] * kernel_z2(omegas[r - m], t[i])
        }
    })
}
