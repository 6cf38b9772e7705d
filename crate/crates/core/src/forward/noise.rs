use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ImpedanceSpectrum;
use crate::error::{Error, Result};

/// How the noise standard deviation is set for each data value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoiseModel {
    /// `η·|b_i|` per entry.
    #[default]
    Proportional,
    /// `η·max|b|` for every entry.
    GlobalScale,
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseModel::Proportional => "proportional",
            NoiseModel::GlobalScale => "global",
        })
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proportional" | "relative" => Ok(NoiseModel::Proportional),
            "global" | "global-scale" | "white" => Ok(NoiseModel::GlobalScale),
            other => Err(Error::Config(format!("unknown noise model `{other}`"))),
        }
    }
}

/// Proportional Gaussian noise `b_i + η|b_i|ε_i`, seeded.
pub fn add_noise(spectrum: &ImpedanceSpectrum, eta: f64, seed: u64) -> Result<ImpedanceSpectrum> {
    add_noise_with(spectrum, eta, seed, NoiseModel::Proportional)
}

/// Noise under an explicit model. Draws are taken in stacked order, all `Z1`
/// entries first, from a ChaCha8 stream seeded with `seed`.
pub fn add_noise_with(
    spectrum: &ImpedanceSpectrum,
    eta: f64,
    seed: u64,
    model: NoiseModel,
) -> Result<ImpedanceSpectrum> {
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::domain(format!("noise level must be non-negative, got {eta}")));
    }
    let mut out = spectrum.clone();
    out.noise_level = eta;
    out.seed = Some(seed);
    if eta == 0.0 {
        return Ok(out);
    }
    let global = spectrum
        .z1
        .iter()
        .chain(&spectrum.z2)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.z1.iter_mut().chain(out.z2.iter_mut()) {
        let eps: f64 = StandardNormal.sample(&mut rng);
        let sd = match model {
            NoiseModel::Proportional => v.abs(),
            NoiseModel::GlobalScale => global,
        };
        *v += eta * sd * eps;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::FrequencyGrid;

    fn flat(n: usize) -> ImpedanceSpectrum {
        let grid = FrequencyGrid::new((1..=n).map(|k| k as f64).collect()).unwrap();
        ImpedanceSpectrum::new(grid, vec![2.0; n], vec![-0.5; n]).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = flat(10);
        let t = add_noise(&s, 0.0, 3).unwrap();
        assert_eq!(s.z1, t.z1);
        assert_eq!(s.z2, t.z2);
    }

    #[test]
    fn deterministic_given_seed() {
        let s = flat(50);
        let a = add_noise(&s, 0.01, 42).unwrap();
        let b = add_noise(&s, 0.01, 42).unwrap();
        let c = add_noise(&s, 0.01, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.z1, c.z1);
    }

    #[test]
    fn relative_std_matches_level() {
        let s = flat(5000);
        let eta = 0.05;
        let t = add_noise(&s, eta, 11).unwrap();
        let rel: Vec<f64> = s
            .stacked()
            .iter()
            .zip(t.stacked().iter())
            .map(|(b, n)| (n - b) / b.abs())
            .collect();
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;
        let var = rel.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rel.len() - 1) as f64;
        assert!((var.sqrt() / eta - 1.0).abs() < 0.03);
    }

    #[test]
    fn negative_level_rejected() {
        assert!(add_noise(&flat(3), -0.1, 0).is_err());
    }

    #[test]
    fn global_model_uses_largest_value() {
        let s = flat(4000);
        let t = add_noise_with(&s, 0.1, 5, NoiseModel::GlobalScale).unwrap();
        let d: Vec<f64> = t.z2.iter().map(|v| v + 0.5).collect();
        let sd = (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt();
        assert!((sd / 0.2 - 1.0).abs() < 0.05);
    }
}
