//! Normalized cumulative periodogram of a residual vector.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Distance between the cumulative periodogram and the white-noise line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NcpNorm {
    #[default]
    L2,
    /// Kolmogorov-Smirnov style maximum deviation.
    Sup,
}

impl std::fmt::Display for NcpNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NcpNorm::L2 => "l2",
            NcpNorm::Sup => "sup",
        })
    }
}

impl std::str::FromStr for NcpNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l2" | "2" => Ok(NcpNorm::L2),
            "sup" | "inf" | "ks" => Ok(NcpNorm::Sup),
            other => Err(Error::Config(format!("unknown NCP norm `{other}`"))),
        }
    }
}

/// `c_j = Σ_{k≤j} p_k / Σ_{k≤q} p_k` for `j = 1..q`, `q = ⌊n/2⌋`, with
/// `p_k = |DFT(r)_k|²`. `None` when the periodogram carries no power.
pub fn ncp_curve(residual: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = residual.len();
    if n < 8 {
        return Err(Error::dim(format!("NCP needs at least 8 residual entries, got {n}")));
    }
    let q = n / 2;
    let mut buf: Vec<Complex<f64>> = residual.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let p: Vec<f64> = buf[1..=q].iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Ok(None);
    }
    let mut acc = 0.0;
    let mut c: Vec<f64> = p
        .iter()
        .map(|v| {
            acc += v;
            acc / total
        })
        .collect();
    c[q - 1] = 1.0;
    Ok(Some(c))
}

pub fn ncp_deviation(residual: &[f64]) -> Result<f64> {
    ncp_deviation_with(residual, NcpNorm::L2)
}

/// Deviation of the cumulative periodogram from `j/q`; zero for a residual without power.
pub fn ncp_deviation_with(residual: &[f64], norm: NcpNorm) -> Result<f64> {
    let Some(c) = ncp_curve(residual)? else {
        return Ok(0.0);
    };
    let q = c.len() as f64;
    let diffs = c.iter().enumerate().map(|(j, v)| v - (j + 1) as f64 / q);
    Ok(match norm {
        NcpNorm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        NcpNorm::Sup => diffs.map(f64::abs).fold(0.0, f64::max),
    })
}
