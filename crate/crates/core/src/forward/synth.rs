//! High-accuracy synthesis of `Z1`, `Z2` by adaptive Gauss-Kronrod quadrature in `s`.
//!
//! All `2M` outputs are integrated together on a shared adaptive partition.
//! Each process is integrated separately over `ln t0 ± S`, with `S` chosen so
//! the truncated tail mass per side is below `TAIL_MASS`, starting from a
//! partition graded geometrically away from the peak.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use super::{kernel_z1, kernel_z2, FrequencyGrid};
use crate::drt::{DrtModel, DrtProcess};

const TAIL_MASS: f64 = 1e-13;
const ABS_TOL: f64 = 1e-14;
const MAX_INTERVALS: usize = 20_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Real part and imaginary-part magnitude on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceSpectrum {
    pub freq_grid: FrequencyGrid,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub noise_level: f64,
    pub seed: Option<u64>,
}

impl ImpedanceSpectrum {
    pub fn new(freq_grid: FrequencyGrid, z1: Vec<f64>, z2: Vec<f64>) -> crate::Result<Self> {
        if z1.len() != freq_grid.len() || z2.len() != freq_grid.len() {
            return Err(crate::Error::dim(format!(
                "{} frequencies but {} / {} values",
                freq_grid.len(),
                z1.len(),
                z2.len()
            )));
        }
        Ok(ImpedanceSpectrum { freq_grid, z1, z2, noise_level: 0.0, seed: None })
    }

    /// Data vector `[Z1; Z2]`.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.z1.len(),
            self.z1.iter().chain(self.z2.iter()).copied(),
        )
    }

    pub fn len(&self) -> usize {
        self.z1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z1.is_empty()
    }
}

/// Spectrum of `model` on `freq_grid`.
pub fn synthesize_spectrum(model: &DrtModel, freq_grid: &FrequencyGrid) -> ImpedanceSpectrum {
    let m = freq_grid.len();
    let mut total = vec![0.0; 2 * m];
    for p in model.processes().iter().filter(|p| p.scale > 0.0) {
        let part = integrate_process(p, freq_grid.omegas());
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    let z2 = total.split_off(m);
    ImpedanceSpectrum { freq_grid: freq_grid.clone(), z1: total, z2, noise_level: 0.0, seed: None }
}

struct Piece {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn integrate_process(p: &DrtProcess, omegas: &[f64]) -> Vec<f64> {
    let center = p.log_peak();
    let half = p.tail_half_width(TAIL_MASS);
    let core = p.core_width().min(half);

    let mut breaks = vec![center];
    let mut w = core;
    while w < half {
        breaks.push(center - w);
        breaks.push(center + w);
        w *= 2.0;
    }
    breaks.push(center - half);
    breaks.push(center + half);
    breaks.sort_by(f64::total_cmp);

    let tol = ABS_TOL * p.scale.max(f64::MIN_POSITIVE);
    let mut heap: BinaryHeap<Piece> = breaks
        .windows(2)
        .map(|ab| gk15(p, omegas, ab[0], ab[1]))
        .collect();

    while heap.len() < MAX_INTERVALS {
        let err: f64 = heap.iter().map(|q| q.err).sum();
        if err <= tol {
            break;
        }
        let worst = heap.pop().expect("non-empty partition");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        heap.push(gk15(p, omegas, worst.a, mid));
        heap.push(gk15(p, omegas, mid, worst.b));
    }

    let mut out = vec![0.0; 2 * omegas.len()];
    let mut pieces = heap.into_vec();
    // Sum in a fixed order so the result does not depend on heap layout.
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    for q in pieces {
        for (o, v) in out.iter_mut().zip(q.value) {
            *o += v;
        }
    }
    out
}

fn gk15(p: &DrtProcess, omegas: &[f64], a: f64, b: f64) -> Piece {
    let m = omegas.len();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = vec![0.0; 2 * m];
    let mut gauss = vec![0.0; 2 * m];
    let mut add = |s: f64, wk: f64, wg: f64| {
        let f = p.g1_at_log(s);
        if f == 0.0 {
            return;
        }
        let t = s.exp();
        for (k, &om) in omegas.iter().enumerate() {
            let v1 = f * kernel_z1(om, t);
            let v2 = f * kernel_z2(om, t);
            kron[k] += wk * v1;
            kron[m + k] += wk * v2;
            if wg != 0.0 {
                gauss[k] += wg * v1;
                gauss[m + k] += wg * v2;
            }
        }
    };
    add(c, WGK[7], WG[3]);
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        let dx = h * XGK[j];
        add(c - dx, WGK[j], wg);
        add(c + dx, WGK[j], wg);
    }
    let mut err: f64 = 0.0;
    for k in 0..2 * m {
        kron[k] *= h;
        gauss[k] *= h;
        err = err.max((kron[k] - gauss[k]).abs());
    }
    Piece { a, b, value: kron, err }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drt::{DrtProcess, SimulationSet};
    use approx::assert_relative_eq;

    fn single(p: DrtProcess) -> DrtModel {
        DrtModel::single(p).unwrap()
    }

    #[test]
    fn cole_cole_matches_high_precision_closed_form() {
        // Z = 1/(1 + (iωt0)^β) at t0 = e^{-1.5}, β = 0.7, evaluated with mpmath.
        let model = SimulationSet::ARq.model();
        let omegas = vec![0.01, 1.0, 1.5f64.exp(), 100.0];
        let want = [
            (0.997_616_127_436_760_66, 0.007_161_471_194_718_937_2),
            (0.856_060_030_847_889_84, 0.224_340_431_979_904_53),
            (0.5, 0.363_271_264_002_680_44),
            (0.030_917_799_730_209_665, 0.074_932_425_641_715_602),
        ];
        let spec = synthesize_spectrum(&model, &FrequencyGrid::new(omegas).unwrap());
        for (k, (z1, z2)) in want.iter().enumerate() {
            assert!((spec.z1[k] - z1).abs() < 1e-10, "z1[{k}] {} vs {z1}", spec.z1[k]);
            assert!((spec.z2[k] - z2).abs() < 1e-10, "z2[{k}] {} vs {z2}", spec.z2[k]);
        }
    }

    #[test]
    fn narrow_cole_cole_matches_closed_form() {
        let beta = 0.98;
        let t0 = 0.1;
        let model = single(DrtProcess::rq(t0, beta, 1.0).unwrap());
        let grid = FrequencyGrid::default_grid();
        let spec = synthesize_spectrum(&model, &grid);
        for (k, &w) in grid.omegas().iter().enumerate() {
            let x = (w * t0).powf(beta);
            let (c, s) = ((beta * std::f64::consts::FRAC_PI_2).cos(), (beta * std::f64::consts::FRAC_PI_2).sin());
            let den = (1.0 + x * c).powi(2) + (x * s).powi(2);
            assert!((spec.z1[k] - (1.0 + x * c) / den).abs() < 1e-9);
            assert!((spec.z2[k] - x * s / den).abs() < 1e-9);
        }
    }

    #[test]
    fn debye_limit() {
        let t0 = 0.5;
        let model = single(DrtProcess::rq(t0, 0.999, 1.0).unwrap());
        let grid = FrequencyGrid::default_grid();
        let spec = synthesize_spectrum(&model, &grid);
        for (k, &w) in grid.omegas().iter().enumerate() {
            assert!((spec.z1[k] - kernel_z1(w, t0)).abs() < 1e-2);
            assert!((spec.z2[k] - kernel_z2(w, t0)).abs() < 1e-2);
        }
    }

    #[test]
    fn lognormal_matches_dense_trapezoid() {
        let model = SimulationSet::BLn.model();
        let grid = FrequencyGrid::default_grid();
        let spec = synthesize_spectrum(&model, &grid);
        let n = 40_001;
        let (lo, hi) = (-20.0, 12.0);
        let ds = (hi - lo) / (n - 1) as f64;
        for (k, &w) in grid.omegas().iter().enumerate().step_by(8) {
            let (mut z1, mut z2) = (0.0, 0.0);
            for i in 0..n {
                let s = lo + i as f64 * ds;
                let c = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * ds;
                let f = model.g1_at_log(s);
                z1 += c * f * kernel_z1(w, s.exp());
                z2 += c * f * kernel_z2(w, s.exp());
            }
            assert_relative_eq!(spec.z1[k], z1, epsilon = 1e-10);
            assert_relative_eq!(spec.z2[k], z2, epsilon = 1e-10);
        }
    }

    #[test]
    fn a_rq_has_single_z2_maximum_near_reciprocal_time() {
        let grid = FrequencyGrid::default_grid();
        let spec = synthesize_spectrum(&SimulationSet::ARq.model(), &grid);
        let (k, _) = spec
            .z2
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let step = 10f64.ln() / 10.0;
        assert!((grid.omegas()[k].ln() - 1.5).abs() <= step);
    }

    #[test]
    fn zero_scale_gives_zero_spectrum() {
        let model = single(DrtProcess::rq(1.0, 0.5, 0.0).unwrap());
        let spec = synthesize_spectrum(&model, &FrequencyGrid::default_grid());
        assert!(spec.z1.iter().chain(&spec.z2).all(|&v| v == 0.0));
    }

    #[test]
    fn z1_non_increasing_for_all_sets() {
        let grid = FrequencyGrid::default_grid();
        for set in SimulationSet::ALL {
            let spec = synthesize_spectrum(&set.model(), &grid);
            for w in spec.z1.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{set}");
            }
        }
    }
}
