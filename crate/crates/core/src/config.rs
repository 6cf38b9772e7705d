//! INI-style run configuration.
//!
//! ```text
//! # comment
//! [experiment]
//! preset = lc-a4-highnoise
//! simulations = A-RQ, B-RQ
//! rows = nnls-as:I, nnls-as:L1
//! noise = 0.001, 0.05
//!
//! [model]
//! process = rq 0.1 0.72 1
//! process = ln 0.01 0.69 0.5
//! ```

use std::path::Path;
use std::str::FromStr;

use crate::drt::{DrtModel, DrtProcess, ProcessKind, SimulationSet};
use crate::error::{Error, Result};
use crate::experiments::{preset, Criterion, ExperimentConfig};
use crate::forward::{NoiseModel, QuadratureScheme, Resolution};
use crate::param_choice::{LambdaGrid, NcpNorm};
use crate::regsolve::{RegularizerKind, SolveMethod};

/// Parsed file: sections in order, each with its `key = value` entries in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl Ini {
    pub fn parse(text: &str) -> Result<Self> {
        let mut ini = Ini::default();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| Error::Parse { line, msg: format!("bad section header `{s}`") })?;
                ini.sections.push((name.to_ascii_lowercase(), Vec::new()));
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, msg: format!("expected key = value, got `{s}`") })?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Parse { line, msg: "empty key".into() });
            }
            let Some((_, entries)) = ini.sections.last_mut() else {
                return Err(Error::Parse { line, msg: "entry before any section".into() });
            };
            entries.push((key, value.trim().to_string()));
        }
        Ok(ini)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// All entries of every section with this name.
    pub fn entries<'a>(&'a self, section: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> + 'a {
        self.sections
            .iter()
            .filter(move |(n, _)| n == section)
            .flat_map(|(_, e)| e.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    /// Last value for `key` in `section`.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.get_all(section, key).pop()
    }

    pub fn get_all(&self, section: &str, key: &str) -> Vec<&str> {
        self.sections
            .iter()
            .filter(|(n, _)| n == section)
            .flat_map(|(_, e)| e.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()))
            .collect()
    }

    /// Drop every `key` entry of `section`.
    pub fn remove(&mut self, section: &str, key: &str) {
        for (n, e) in &mut self.sections {
            if n == section {
                e.retain(|(k, _)| k != key);
            }
        }
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.iter().any(|(n, _)| n == section)
    }
}

pub fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("`{v}`: {e}"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Config(format!("{key} = `{value}`: {e}")))
}

/// `method:L`, e.g. `nnls-as:L1`.
pub fn parse_row(value: &str) -> Result<(SolveMethod, RegularizerKind)> {
    let (m, l) = value
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("row `{value}` should look like nnls-as:I")))?;
    Ok((m.trim().parse()?, l.trim().parse()?))
}

/// `kind t0 shape scale`, e.g. `rq 0.1 0.72 1`.
pub fn parse_process(value: &str) -> Result<DrtProcess> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::Config(format!("process `{value}` should be `kind t0 shape scale`")));
    }
    let kind: ProcessKind = parts[0].parse()?;
    let num = |k: usize| parse_one::<f64>("process", parts[k]);
    DrtProcess::new(kind, num(1)?, num(2)?, num(3)?)
}

/// Model from `[model]` `process` entries; `None` when the section is absent.
pub fn model_from_ini(ini: &Ini) -> Result<Option<DrtModel>> {
    if !ini.has_section("model") {
        return Ok(None);
    }
    for (k, _) in ini.entries("model") {
        if k != "process" {
            return Err(Error::Config(format!("unknown key `{k}` in [model]")));
        }
    }
    let procs = ini.get_all("model", "process").into_iter().map(parse_process).collect::<Result<Vec<_>>>()?;
    DrtModel::new(procs).map(Some)
}

const EXPERIMENT_KEYS: [&str; 18] = [
    "preset",
    "simulations",
    "rows",
    "criterion",
    "matrix",
    "noise",
    "realizations",
    "seed",
    "noise_model",
    "quadrature",
    "lambda_min",
    "lambda_max",
    "lambda_count",
    "ncp_norm",
    "sbb_max_iter",
    "sbb_tol",
    "sbb_window",
    "jobs",
];

/// Apply `[experiment]` entries on top of `base`. A `preset` key replaces
/// `base` before the other keys are applied.
pub fn experiment_from_ini(ini: &Ini, base: ExperimentConfig) -> Result<ExperimentConfig> {
    for (k, _) in ini.entries("experiment") {
        if !EXPERIMENT_KEYS.contains(&k) {
            return Err(Error::Config(format!("unknown key `{k}` in [experiment]")));
        }
    }
    let get = |k: &str| ini.get("experiment", k);
    let mut cfg = match get("preset") {
        Some(p) => preset(p)?,
        None => base,
    };
    if let Some(v) = get("simulations") {
        cfg.simulations = parse_list::<SimulationSet>(v)?;
    }
    if let Some(v) = get("rows") {
        cfg.rows = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_row).collect::<Result<_>>()?;
    }
    if let Some(v) = get("criterion") {
        cfg.criterion = v.parse::<Criterion>()?;
    }
    if let Some(v) = get("matrix") {
        cfg.setup.resolution = v.parse::<Resolution>()?;
    }
    if let Some(v) = get("noise") {
        cfg.noise_levels = parse_list::<f64>(v)?;
    }
    if let Some(v) = get("realizations") {
        cfg.n_realizations = parse_one("realizations", v)?;
    }
    if let Some(v) = get("seed") {
        cfg.base_seed = parse_one("seed", v)?;
    }
    if let Some(v) = get("noise_model") {
        cfg.setup.noise_model = v.parse::<NoiseModel>()?;
    }
    if let Some(v) = get("quadrature") {
        cfg.setup.scheme = v.parse::<QuadratureScheme>()?;
    }
    if let Some(v) = get("ncp_norm") {
        cfg.setup.ncp_norm = v.parse::<NcpNorm>()?;
    }
    let lo = get("lambda_min").map(|v| parse_one::<f64>("lambda_min", v)).transpose()?;
    let hi = get("lambda_max").map(|v| parse_one::<f64>("lambda_max", v)).transpose()?;
    let n = get("lambda_count").map(|v| parse_one::<usize>("lambda_count", v)).transpose()?;
    if lo.is_some() || hi.is_some() || n.is_some() {
        let cur = cfg.setup.lambda_grid.values();
        let (clo, chi) = (cur[0].min(cur[cur.len() - 1]), cur[0].max(cur[cur.len() - 1]));
        cfg.setup.lambda_grid =
            LambdaGrid::log_spaced(lo.unwrap_or(clo), hi.unwrap_or(chi), n.unwrap_or(cur.len()))?;
    }
    if let Some(v) = get("sbb_max_iter") {
        cfg.setup.sbb.max_iter = parse_one("sbb_max_iter", v)?;
    }
    if let Some(v) = get("sbb_tol") {
        cfg.setup.sbb.tol = parse_one("sbb_tol", v)?;
    }
    if let Some(v) = get("sbb_window") {
        cfg.setup.sbb.window = parse_one("sbb_window", v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `jobs` from `[experiment]`, if present.
pub fn jobs_from_ini(ini: &Ini) -> Result<Option<usize>> {
    ini.get("experiment", "jobs").map(|v| parse_one("jobs", v)).transpose()
}
