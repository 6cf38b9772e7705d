//! CSV readers and writers. Floats are written with 17 significant digits
//! and lines end with LF, so reruns produce byte-identical files.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{MeanErrorCurve, Realization, StatsRow};
use crate::forward::{FrequencyGrid, ImpedanceSpectrum};
use crate::nlsfit::FitReportRow;
use crate::param_choice::SweepResult;
use crate::peaks::PeakSet;

/// Full-precision float text; `NaN` for missing values.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Write a header and rows to any sink.
pub fn write_table<W: Write>(sink: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_file(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_table(std::fs::File::create(path)?, header, rows)
}

pub const SPECTRUM_HEADER: [&str; 3] = ["omega", "z1", "z2"];

pub fn spectrum_rows(spec: &ImpedanceSpectrum) -> Vec<Vec<String>> {
    spec.freq_grid
        .omegas()
        .iter()
        .zip(spec.z1.iter().zip(&spec.z2))
        .map(|(w, (a, b))| vec![fmt_f64(*w), fmt_f64(*a), fmt_f64(*b)])
        .collect()
}

pub fn write_spectrum(path: &Path, spec: &ImpedanceSpectrum) -> Result<()> {
    write_file(path, &SPECTRUM_HEADER, &spectrum_rows(spec))
}

/// Parse an `omega,z1,z2` table. Frequencies must be positive and increasing.
pub fn read_spectrum_from<R: Read>(source: R) -> Result<ImpedanceSpectrum> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != SPECTRUM_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header omega,z1,z2, got {}", cols.join(",")) });
    }
    let (mut w, mut z1, mut z2) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::Parse { line, msg: format!("expected 3 fields, got {}", rec.len()) });
        }
        let mut vals = [0.0; 3];
        for (k, field) in rec.iter().enumerate() {
            vals[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, msg: format!("`{field}` is not a finite number") })?;
        }
        w.push(vals[0]);
        z1.push(vals[1]);
        z2.push(vals[2]);
    }
    let grid = FrequencyGrid::new(w)?;
    ImpedanceSpectrum::new(grid, z1, z2)
}

pub fn read_spectrum(path: &Path) -> Result<ImpedanceSpectrum> {
    read_spectrum_from(std::fs::File::open(path)?)
}

pub fn write_sweep(path: &Path, sw: &SweepResult) -> Result<()> {
    let rows = sw
        .points
        .iter()
        .map(|p| {
            vec![
                fmt_f64(p.lambda),
                opt(p.residual_norm()),
                opt(p.seminorm()),
                opt(p.ncp_deviation),
                opt(p.s_space_error),
            ]
        })
        .collect::<Vec<_>>();
    write_file(path, &["lambda", "residual_norm", "seminorm", "ncp_deviation", "s_space_error"], &rows)
}

pub fn write_solution(path: &Path, s: &[f64], x: &[f64]) -> Result<()> {
    if s.len() != x.len() {
        return Err(Error::dim(format!("{} nodes vs {} values", s.len(), x.len())));
    }
    let rows = s.iter().zip(x).map(|(a, b)| vec![fmt_f64(*a), fmt_f64(*b)]).collect::<Vec<_>>();
    write_file(path, &["s", "x"], &rows)
}

pub fn write_peaks(path: &Path, peaks: &PeakSet) -> Result<()> {
    let rows = peaks
        .interior()
        .map(|p| vec![fmt_f64(p.omega), fmt_f64(p.t_star)])
        .collect::<Vec<_>>();
    write_file(path, &["omega", "t_star"], &rows)
}

pub fn write_nyquist(path: &Path, curve: &[(f64, f64)]) -> Result<()> {
    let rows = curve.iter().map(|(a, b)| vec![fmt_f64(*a), fmt_f64(*b)]).collect::<Vec<_>>();
    write_file(path, &["z1", "z2"], &rows)
}

pub fn write_realizations(path: &Path, reals: &[Realization]) -> Result<()> {
    let rows = reals
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.seed.to_string(),
                opt(r.lambda_lc),
                r.lc_no_corner.to_string(),
                opt(r.lambda_ncp),
                opt(r.lambda_opt),
                opt(r.error_lc),
                opt(r.error_ncp),
                opt(r.error_opt),
            ]
        })
        .collect::<Vec<_>>();
    write_file(
        path,
        &[
            "realization",
            "seed",
            "lambda_lc",
            "lc_no_corner",
            "lambda_ncp",
            "lambda_opt",
            "error_lc",
            "error_ncp",
            "error_opt",
        ],
        &rows,
    )
}

pub fn write_stats(path: &Path, rows: &[StatsRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.simulation.to_string(),
                r.family.to_string(),
                r.resolution.to_string(),
                r.method.to_string(),
                r.regularizer.to_string(),
                r.criterion.to_string(),
                fmt_f64(r.noise),
                fmt_f64(r.stats.mean),
                fmt_f64(r.stats.std),
                r.stats.n_kept.to_string(),
                r.stats.n_failed.to_string(),
            ]
        })
        .collect::<Vec<_>>();
    write_file(
        path,
        &[
            "simulation",
            "family",
            "resolution",
            "method",
            "regularizer",
            "criterion",
            "noise",
            "mean",
            "std",
            "n_kept",
            "n_failed",
        ],
        &rows,
    )
}

pub fn write_curve(path: &Path, curve: &MeanErrorCurve) -> Result<()> {
    let rows = curve
        .lambdas
        .iter()
        .zip(&curve.mean_abs_error)
        .map(|(l, e)| vec![fmt_f64(*l), fmt_f64(*e)])
        .collect::<Vec<_>>();
    write_file(path, &["lambda", "mean_abs_error"], &rows)
}

pub fn write_fit_report(path: &Path, rows: &[FitReportRow]) -> Result<()> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.family.to_string(),
                fmt_f64(r.noise_log10),
                r.param_name.to_string(),
                fmt_f64(r.true_value),
                fmt_f64(r.mean_fit),
                fmt_f64(r.std_fit),
                r.n.to_string(),
            ]
        })
        .collect::<Vec<_>>();
    write_file(path, &["family", "noise_log10", "param_name", "true", "mean_fit", "std_fit", "n"], &rows)
}
