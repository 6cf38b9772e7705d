//! Peaks of `Z2` and their reciprocal times `t* = 1/ω`.

use crate::error::{Error, Result};
use crate::forward::ImpedanceSpectrum;

/// A detected peak of `Z2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Grid index (the plateau midpoint for flat tops).
    pub index: usize,
    pub omega: f64,
    /// `1/omega`.
    pub t_star: f64,
    /// The maximum sits on the first or last frequency and is not a true peak.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    /// Interior peaks only.
    pub fn interior(&self) -> impl Iterator<Item = &Peak> {
        self.peaks.iter().filter(|p| !p.boundary)
    }

    pub fn count(&self) -> usize {
        self.interior().count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.interior().map(|p| p.index).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.interior().map(|p| p.omega).collect()
    }

    pub fn t_star(&self) -> Vec<f64> {
        self.interior().map(|p| p.t_star).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PeakOptions {
    /// Refine each interior peak by a parabola through its neighbors in `ln ω`.
    pub refine: bool,
}

pub fn find_z2_peaks(spectrum: &ImpedanceSpectrum) -> Result<PeakSet> {
    find_z2_peaks_with(spectrum, PeakOptions::default())
}

/// Strict local maxima of `Z2`. A flat top counts once, at its midpoint;
/// maxima on the ends of the grid are reported with `boundary` set.
pub fn find_z2_peaks_with(spectrum: &ImpedanceSpectrum, opts: PeakOptions) -> Result<PeakSet> {
    let z = &spectrum.z2;
    let n = z.len();
    if n < 3 {
        return Err(Error::dim(format!("peak search needs at least 3 frequencies, got {n}")));
    }
    let omegas = spectrum.freq_grid.omegas();
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && z[j + 1] == z[i] {
            j += 1;
        }
        let left_lower = i == 0 || z[i - 1] < z[i];
        let right_lower = j == n - 1 || z[j + 1] < z[i];
        let boundary = i == 0 || j == n - 1;
        let whole = i == 0 && j == n - 1;
        if left_lower && right_lower && !whole {
            let index = (i + j) / 2;
            let mut omega = omegas[index];
            if opts.refine && !boundary && i == j {
                omega = refine(omegas, z, index);
            }
            peaks.push(Peak { index, omega, t_star: 1.0 / omega, boundary });
        }
        i = j + 1;
    }
    Ok(PeakSet { peaks })
}

fn refine(omegas: &[f64], z: &[f64], k: usize) -> f64 {
    let (x0, x1, x2) = (omegas[k - 1].ln(), omegas[k].ln(), omegas[k + 1].ln());
    let (y0, y1, y2) = (z[k - 1], z[k], z[k + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if !(curv < 0.0) {
        return omegas[k];
    }
    // Vertex of the parabola through the three points.
    let x = 0.5 * (x0 + x1) - d01 / (2.0 * curv);
    x.clamp(x0, x2).exp()
}

/// `(Z1, Z2)` pairs in frequency order.
pub fn nyquist_curve(spectrum: &ImpedanceSpectrum) -> Vec<(f64, f64)> {
    spectrum.z1.iter().copied().zip(spectrum.z2.iter().copied()).collect()
}
