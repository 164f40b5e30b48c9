//! Plain-text `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, lists are comma
//! separated. Unknown and repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::harness::{linear_grid, RunOptions};
use crate::model::{derive, ModelParams, ParamError, DEFAULT_GA_OVER_GS};
use crate::thermal::{GammaTable, ThermalConfig, ThermalError};

pub const KEYS: &[&str] = &[
    "k0",
    "omega",
    "gs_n",
    "ga_n",
    "n_atoms",
    "v0",
    "v0_ratio",
    "n_list",
    "grid_min",
    "grid_max",
    "grid_points",
    "allow_separatrix",
    "dt_scale",
    "horizon_periods",
    "workers",
    "temperatures",
    "gamma_mode",
    "gamma_values",
    "gamma_table_path",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected key = value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key} given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key {0}")]
    MissingKey(&'static str),
    #[error("{key}: cannot use {value:?} ({reason})")]
    BadValue { key: &'static str, value: String, reason: String },
    #[error("{0} and {1} are mutually exclusive")]
    Conflict(&'static str, &'static str),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

impl ConfigError {
    /// Offending key, for the machine-readable error trailer.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. } | ConfigError::DuplicateKey { key, .. } => Some(key),
            ConfigError::MissingKey(k) | ConfigError::BadValue { key: k, .. } | ConfigError::Conflict(k, _) => Some(k),
            ConfigError::Param(e) => Some(e.key()),
            ConfigError::Thermal(ThermalError::Param(e)) => Some(e.key()),
            ConfigError::Thermal(ThermalError::Table { .. }) => Some("gamma_table_path"),
            ConfigError::Thermal(ThermalError::BadTemperatures) => Some("temperatures"),
            ConfigError::Thermal(_) => Some("gamma_values"),
            _ => None,
        }
    }
}

/// Γ inputs as written; turned into a [`ThermalConfig`] on demand so that
/// zero-temperature runs never need them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThermalKeys {
    pub temperatures: Option<Vec<f64>>,
    pub gamma_mode: Option<String>,
    pub gamma_values: Option<Vec<f64>>,
    pub gamma_table_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// `V₀ / V₀,crit` when given that way; `params.v0` is already resolved.
    pub v0_ratio: Option<f64>,
    pub n_list: Vec<u32>,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
    pub allow_separatrix: bool,
    pub dt_scale: f64,
    pub horizon_periods: f64,
    pub workers: usize,
    pub thermal: ThermalKeys,
    /// Non-fatal notes such as defaulted `ga_n`.
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent())
    }

    /// `base_dir` resolves a relative `gamma_table_path`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, ConfigError> {
        let raw = parse_pairs(text)?;
        let get = |k: &str| raw.get(k).map(String::as_str);

        let k0 = opt_f64(&raw, "k0")?.unwrap_or(1.0);
        let omega = opt_f64(&raw, "omega")?.ok_or(ConfigError::MissingKey("omega"))?;
        let gs_n = opt_f64(&raw, "gs_n")?.ok_or(ConfigError::MissingKey("gs_n"))?;
        let n_atoms = opt_parse::<u32>(&raw, "n_atoms")?.ok_or(ConfigError::MissingKey("n_atoms"))?;
        let mut warnings = Vec::new();
        let ga_n = match opt_f64(&raw, "ga_n")? {
            Some(v) => v,
            None => {
                warnings.push(format!("ga_n not set, using {DEFAULT_GA_OVER_GS} * gs_n"));
                DEFAULT_GA_OVER_GS * gs_n
            }
        };
        let mut params = ModelParams {
            k0,
            omega,
            gs_n,
            ga_n,
            n_atoms,
            v0: 0.0,
        };
        params.validate()?;

        let v0 = opt_f64(&raw, "v0")?;
        let v0_ratio = opt_f64(&raw, "v0_ratio")?;
        params.v0 = match (v0, v0_ratio) {
            (Some(_), Some(_)) => return Err(ConfigError::Conflict("v0", "v0_ratio")),
            (Some(v), None) => v,
            (None, Some(r)) => {
                if !(r.is_finite() && r >= 0.0) {
                    return Err(bad("v0_ratio", &r.to_string(), "must be finite and non-negative"));
                }
                r * params.v0_crit()?
            }
            (None, None) => 0.0,
        };
        params.validate()?;

        let n_list = match get("n_list") {
            Some(s) => parse_list::<u32>("n_list", s)?,
            None => vec![1, 10, 100],
        };
        if n_list.is_empty() || n_list.contains(&0) {
            return Err(bad("n_list", get("n_list").unwrap_or(""), "atom numbers must be at least 1"));
        }

        let grid_min = opt_f64(&raw, "grid_min")?.unwrap_or(0.5);
        let grid_max = opt_f64(&raw, "grid_max")?.unwrap_or(1.5);
        let grid_points = opt_parse::<usize>(&raw, "grid_points")?.unwrap_or(101);
        if grid_points < 2 || !(grid_min < grid_max) {
            return Err(bad("grid_points", &grid_points.to_string(), "need at least two points and grid_min < grid_max"));
        }

        let dt_scale = opt_f64(&raw, "dt_scale")?.unwrap_or(1.0);
        if !(dt_scale.is_finite() && dt_scale > 0.0) {
            return Err(bad("dt_scale", &dt_scale.to_string(), "must be positive"));
        }
        let horizon_periods = opt_f64(&raw, "horizon_periods")?.unwrap_or(10.0);
        if !(horizon_periods.is_finite() && horizon_periods > 0.0) {
            return Err(bad("horizon_periods", &horizon_periods.to_string(), "must be positive"));
        }

        let thermal = ThermalKeys {
            temperatures: get("temperatures").map(|s| parse_list::<f64>("temperatures", s)).transpose()?,
            gamma_mode: get("gamma_mode").map(str::to_string),
            gamma_values: get("gamma_values").map(|s| parse_list::<f64>("gamma_values", s)).transpose()?,
            gamma_table_path: get("gamma_table_path").map(|p| match base_dir {
                Some(dir) if Path::new(p).is_relative() => dir.join(p),
                _ => PathBuf::from(p),
            }),
        };

        Ok(RunConfig {
            params,
            v0_ratio,
            n_list,
            grid_min,
            grid_max,
            grid_points,
            allow_separatrix: opt_parse::<bool>(&raw, "allow_separatrix")?.unwrap_or(false),
            dt_scale,
            horizon_periods,
            workers: opt_parse::<usize>(&raw, "workers")?.unwrap_or(0),
            thermal,
            warnings,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        linear_grid(self.grid_min, self.grid_max, self.grid_points)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            dt_scale: self.dt_scale,
            workers: self.workers,
            allow_separatrix: self.allow_separatrix,
        }
    }

    /// Build the Γ model; fails naming the first missing key.
    pub fn thermal_config(&self) -> Result<ThermalConfig, ConfigError> {
        let t = &self.thermal;
        let temperatures = t.temperatures.as_deref().ok_or(ConfigError::MissingKey("temperatures"))?;
        let mode = t.gamma_mode.as_deref().ok_or(ConfigError::MissingKey("gamma_mode"))?;
        match mode {
            "constant" => {
                let values = t.gamma_values.as_deref().ok_or(ConfigError::MissingKey("gamma_values"))?;
                Ok(ThermalConfig::constant(temperatures, values)?)
            }
            "tabulated" => {
                let path = t.gamma_table_path.as_deref().ok_or(ConfigError::MissingKey("gamma_table_path"))?;
                Ok(ThermalConfig::tabulated(temperatures, GammaTable::load(path)?)?)
            }
            other => Err(bad("gamma_mode", other, "expected constant or tabulated")),
        }
    }

    /// Deterministic `key=value` dump of every resolved setting.
    pub fn describe(&self) -> String {
        let p = &self.params;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "k0={}", p.k0);
        let _ = writeln!(s, "omega={}", p.omega);
        let _ = writeln!(s, "gs_n={}", p.gs_n);
        let _ = writeln!(s, "ga_n={}", p.ga_n);
        let _ = writeln!(s, "n_atoms={}", p.n_atoms);
        let _ = writeln!(s, "v0={}", p.v0);
        if let Ok(d) = derive(p) {
            let _ = writeln!(s, "theta={}", d.theta);
            let _ = writeln!(s, "v0_crit={}", d.v0_crit * p.k0 * p.k0);
        }
        let _ = writeln!(s, "grid_min={}", self.grid_min);
        let _ = writeln!(s, "grid_max={}", self.grid_max);
        let _ = writeln!(s, "grid_points={}", self.grid_points);
        let _ = writeln!(s, "allow_separatrix={}", self.allow_separatrix);
        let _ = writeln!(s, "dt_scale={}", self.dt_scale);
        let _ = writeln!(s, "horizon_periods={}", self.horizon_periods);
        if let Some(t) = &self.thermal.temperatures {
            let _ = writeln!(s, "temperatures={}", join(t));
        }
        if let Some(m) = &self.thermal.gamma_mode {
            let _ = writeln!(s, "gamma_mode={m}");
        }
        if let Some(g) = &self.thermal.gamma_values {
            let _ = writeln!(s, "gamma_values={}", join(g));
        }
        if let Some(path) = &self.thermal.gamma_table_path {
            let _ = writeln!(s, "gamma_table_path={}", path.display());
        }
        s
    }
}

fn bad(key: &'static str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue {
        key,
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn static_key(key: &str) -> &'static str {
    KEYS.iter().find(|k| **k == key).copied().unwrap_or("unknown")
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw_line.to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey { line: i + 1, key: key.to_string() });
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(ConfigError::DuplicateKey { line: i + 1, key: key.to_string() });
        }
    }
    Ok(out)
}

fn opt_parse<T: std::str::FromStr>(raw: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.get(key)
        .map(|v| v.parse::<T>().map_err(|e| bad(static_key(key), v, &e.to_string())))
        .transpose()
}

fn opt_f64(raw: &BTreeMap<String, String>, key: &str) -> Result<Option<f64>, ConfigError> {
    opt_parse(raw, key)
}

fn parse_list<T: std::str::FromStr>(key: &'static str, s: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| bad(key, x, &e.to_string())))
        .collect()
}
