//! Trapezoidal quadrature weights for the relaxation integral.
//!
//! Three equivalent routes are provided:
//!
//! * `TSpaceRaw`: the trapezoid rule in `t` on an arbitrary increasing grid,
//!   `w₁ = Δt₁/2`, `wᵢ = (Δtᵢ₋₁ + Δtᵢ)/2`, `w_N = Δt_{N-1}/2`.
//! * `TSpacePreconditioned`: the same rule on a log-uniform grid after the `1/t`
//!   factor is moved into the weights, `wᵢ/tᵢ = sinh(Δs)·aᵢ` with
//!   `a₁ = 1/(1+e^{-Δs})`, `aᵢ = 1`, `a_N = 1/(1+e^{Δs})`.
//! * `SSpaceTrapezoid`: the trapezoid rule after the change of variables
//!   `s = ln t`, `v = [Δs/2, Δs, …, Δs, Δs/2]`.
//!
//! The first two agree to rounding on log-uniform grids; the third differs from
//! them at `O(Δs³)` per interior weight.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureScheme {
    TSpaceRaw,
    TSpacePreconditioned,
    SSpaceTrapezoid,
}

impl std::fmt::Display for QuadratureScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            QuadratureScheme::TSpaceRaw => "t-raw",
            QuadratureScheme::TSpacePreconditioned => "t-preconditioned",
            QuadratureScheme::SSpaceTrapezoid => "s-trapezoid",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for QuadratureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t-raw" | "traw" | "t" => Ok(QuadratureScheme::TSpaceRaw),
            "t-preconditioned" | "preconditioned" | "sinh" => Ok(QuadratureScheme::TSpacePreconditioned),
            "s-trapezoid" | "s" | "s-space" => Ok(QuadratureScheme::SSpaceTrapezoid),
            other => Err(Error::Config(format!("unknown quadrature scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWeights {
    pub scheme: QuadratureScheme,
    pub weights: Vec<f64>,
}

pub fn weights_t_space(t: &[f64]) -> Result<QuadratureWeights> {
    if t.len() < 2 {
        return Err(Error::dim("trapezoid rule needs at least two nodes"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("nodes must be strictly increasing"));
    }
    let n = t.len();
    let dt: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let mut w = vec![0.0; n];
    w[0] = dt[0] / 2.0;
    w[n - 1] = dt[n - 2] / 2.0;
    for i in 1..n - 1 {
        w[i] = (dt[i - 1] + dt[i]) / 2.0;
    }
    Ok(QuadratureWeights { scheme: QuadratureScheme::TSpaceRaw, weights: w })
}

pub fn weights_preconditioned(delta_s: f64, n: usize) -> Result<QuadratureWeights> {
    check(delta_s, n)?;
    let sh = delta_s.sinh();
    let mut w = vec![sh; n];
    w[0] = sh / (1.0 + (-delta_s).exp());
    w[n - 1] = sh / (1.0 + delta_s.exp());
    Ok(QuadratureWeights { scheme: QuadratureScheme::TSpacePreconditioned, weights: w })
}

pub fn weights_s_space(delta_s: f64, n: usize) -> Result<QuadratureWeights> {
    check(delta_s, n)?;
    let mut w = vec![delta_s; n];
    w[0] = delta_s / 2.0;
    w[n - 1] = delta_s / 2.0;
    Ok(QuadratureWeights { scheme: QuadratureScheme::SSpaceTrapezoid, weights: w })
}

fn check(delta_s: f64, n: usize) -> Result<()> {
    if !(delta_s.is_finite() && delta_s > 0.0) {
        return Err(Error::domain(format!("spacing must be positive, got {delta_s}")));
    }
    if n < 2 {
        return Err(Error::dim("trapezoid rule needs at least two nodes"));
    }
    Ok(())
}
