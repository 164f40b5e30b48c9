//! Finite-temperature observables.
//!
//! Thermal excitations deplete the condensate by a fraction Γ, which lowers
//! the interaction energies (`n_C = n (1 − Γ)`) and mixes the pure two-mode
//! state with an excited-state contribution:
//!
//! ```text
//! ρ = (1 − Γ) ρ_g + Γ δρ
//! ```
//!
//! `δρ` is modelled as the dephased binomial state: diagonal on `|n, N−n⟩`
//! with the same populations as the condensate, and no coherence between the
//! modes. Γ itself is an input, either one constant per temperature or a
//! table over `(|α|², T)`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{derive, Derived, ModelParams, ParamError};
use crate::moments::MomentState;
use crate::state::SpinorState;

/// Depletion above which results are reported but flagged as outside the
/// low-excitation regime.
pub const GAMMA_WARN: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("excitation fraction {0} outside [0, 0.5)")]
    GammaOutOfRange(f64),
    #[error("excitation fraction at T = 0 must vanish, got {0}")]
    NonzeroAtZeroTemperature(f64),
    #[error("temperatures must be non-negative and ascending")]
    BadTemperatures,
    #[error("{temperatures} temperatures but {values} gamma values")]
    LengthMismatch { temperatures: usize, values: usize },
    #[error("no excitation fraction known for T = {0} nK")]
    UnknownTemperature(f64),
    #[error("gamma table {path}: {reason}")]
    Table { path: PathBuf, reason: String },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Rectangular table of Γ over `(|α|², T)` with bilinear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub alpha_sq: Vec<f64>,
    pub temperatures: Vec<f64>,
    /// `values[t][a]` for `temperatures[t]` and `alpha_sq[a]`.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaModel {
    /// One fixed Γ per listed temperature.
    Constant(Vec<(f64, f64)>),
    /// Γ follows the instantaneous population along the trajectory.
    Tabulated(GammaTable),
}

/// How the excitation fraction enters a single run.
#[derive(Debug, Clone, Copy)]
pub enum GammaAt<'a> {
    Fixed(f64),
    Table(&'a GammaTable, f64),
}

impl GammaAt<'_> {
    /// Γ at population `pop_right = |α|²`.
    pub fn at(&self, pop_right: f64) -> f64 {
        match *self {
            GammaAt::Fixed(g) => g,
            GammaAt::Table(table, t) => table.interpolate(pop_right, t),
        }
    }

    /// Γ used for the depleted interaction energies: the value at the
    /// magnetized initial state.
    pub fn for_depletion(&self) -> f64 {
        self.at(1.0)
    }
}

fn bracket(grid: &[f64], x: f64) -> (usize, f64) {
    if grid.len() == 1 {
        return (0, 0.0);
    }
    let x = x.clamp(grid[0], grid[grid.len() - 1]);
    let hi = grid.partition_point(|g| *g < x).clamp(1, grid.len() - 1);
    let lo = hi - 1;
    let frac = (x - grid[lo]) / (grid[hi] - grid[lo]);
    (lo, frac)
}

impl GammaTable {
    pub fn interpolate(&self, pop_right: f64, temperature: f64) -> f64 {
        let (ia, fa) = bracket(&self.alpha_sq, pop_right);
        let (it, ft) = bracket(&self.temperatures, temperature);
        let ia1 = (ia + 1).min(self.alpha_sq.len() - 1);
        let it1 = (it + 1).min(self.temperatures.len() - 1);
        let row = |t: usize| {
            let r = &self.values[t];
            r[ia] + fa * (r[ia1] - r[ia])
        };
        row(it) + ft * (row(it1) - row(it))
    }

    /// Read a CSV with header `alpha_sq,T_nK,gamma` covering a full
    /// rectangular grid (rows in any order).
    pub fn load(path: &Path) -> Result<Self, ThermalError> {
        let err = |reason: String| ThermalError::Table {
            path: path.to_path_buf(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::parse(&text).map_err(err)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or("empty table")?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        if header != ["alpha_sq", "T_nK", "gamma"] {
            return Err(format!("header must be alpha_sq,T_nK,gamma, got {}", header.join(",")));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| format!("row {}: {e}", i + 2))?;
            if cols.len() != 3 {
                return Err(format!("row {}: expected 3 columns", i + 2));
            }
            rows.push((cols[0], cols[1], cols[2]));
        }
        let mut alpha_sq: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut temperatures: Vec<f64> = rows.iter().map(|r| r.1).collect();
        for axis in [&mut alpha_sq, &mut temperatures] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        if rows.len() != alpha_sq.len() * temperatures.len() {
            return Err("grid is not rectangular".to_string());
        }
        let mut values = vec![vec![f64::NAN; alpha_sq.len()]; temperatures.len()];
        for (a, t, g) in rows {
            let ia = alpha_sq.iter().position(|x| *x == a).expect("present");
            let it = temperatures.iter().position(|x| *x == t).expect("present");
            if !values[it][ia].is_nan() {
                return Err(format!("duplicate entry at alpha_sq={a}, T_nK={t}"));
            }
            values[it][ia] = g;
        }
        Ok(GammaTable {
            alpha_sq,
            temperatures,
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalConfig {
    /// Temperatures in nK; labels for the Γ values, never used physically.
    pub temperatures: Vec<f64>,
    pub gamma_model: GammaModel,
}

impl ThermalConfig {
    pub fn constant(temperatures: &[f64], gammas: &[f64]) -> Result<Self, ThermalError> {
        if temperatures.len() != gammas.len() {
            return Err(ThermalError::LengthMismatch {
                temperatures: temperatures.len(),
                values: gammas.len(),
            });
        }
        let cfg = ThermalConfig {
            temperatures: temperatures.to_vec(),
            gamma_model: GammaModel::Constant(temperatures.iter().copied().zip(gammas.iter().copied()).collect()),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tabulated(temperatures: &[f64], table: GammaTable) -> Result<Self, ThermalError> {
        let cfg = ThermalConfig {
            temperatures: temperatures.to_vec(),
            gamma_model: GammaModel::Tabulated(table),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the hard invariants and returns warnings for Γ above
    /// [`GAMMA_WARN`].
    pub fn validate(&self) -> Result<Vec<String>, ThermalError> {
        let ascending = self.temperatures.windows(2).all(|w| w[0] < w[1]);
        if !ascending || self.temperatures.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(ThermalError::BadTemperatures);
        }
        let mut samples = Vec::new();
        match &self.gamma_model {
            GammaModel::Constant(pairs) => {
                for t in &self.temperatures {
                    self.gamma_at(*t)?;
                }
                samples.extend(pairs.iter().copied());
            }
            GammaModel::Tabulated(table) => {
                for (it, t) in table.temperatures.iter().enumerate() {
                    for g in &table.values[it] {
                        samples.push((*t, *g));
                    }
                }
            }
        }
        let mut warnings = Vec::new();
        for (t, g) in samples {
            check_gamma(g)?;
            if t == 0.0 && g != 0.0 {
                return Err(ThermalError::NonzeroAtZeroTemperature(g));
            }
            if g > GAMMA_WARN {
                warnings.push(format!("gamma={g} at T_nK={t} exceeds the low-excitation bound {GAMMA_WARN}"));
            }
        }
        warnings.dedup();
        Ok(warnings)
    }

    pub fn gamma_at(&self, temperature: f64) -> Result<GammaAt<'_>, ThermalError> {
        match &self.gamma_model {
            GammaModel::Constant(pairs) => pairs
                .iter()
                .find(|(t, _)| *t == temperature)
                .map(|(_, g)| GammaAt::Fixed(*g))
                .ok_or(ThermalError::UnknownTemperature(temperature)),
            GammaModel::Tabulated(table) => Ok(GammaAt::Table(table, temperature)),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self.gamma_model {
            GammaModel::Constant(_) => "constant",
            GammaModel::Tabulated(_) => "tabulated",
        }
    }
}

fn check_gamma(gamma: f64) -> Result<(), ThermalError> {
    if (0.0..0.5).contains(&gamma) {
        Ok(())
    } else {
        Err(ThermalError::GammaOutOfRange(gamma))
    }
}

/// Derived constants for a condensate depleted by `gamma`: both interaction
/// energies scale with `1 − Γ`, while θ, `k_m` and `V_p` are untouched.
pub fn effective_params(params: &ModelParams, gamma: f64) -> Result<Derived, ThermalError> {
    check_gamma(gamma)?;
    let depleted = ModelParams {
        gs_n: params.gs_n * (1.0 - gamma),
        ga_n: params.ga_n * (1.0 - gamma),
        ..*params
    };
    Ok(derive(&depleted)?)
}

/// Moments of the dephased binomial state built on `state`.
pub fn dephased_moments(state: &SpinorState, n_atoms: u32) -> MomentState {
    let n = n_atoms as f64;
    let pairs = n * (n - 1.0);
    let pa = state.pop_right();
    let pb = 1.0 - pa;
    let zero = C64::new(0.0, 0.0);
    MomentState {
        n_r: n * pa,
        n_l: n * pb,
        c: zero,
        w: pairs * pa * pb,
        u: zero,
        v: zero,
        p: zero,
        q_r: pairs * pa * pa,
        q_l: pairs * pb * pb,
    }
}

/// `(1 − Γ) ⟨O⟩_ground + Γ ⟨O⟩_δρ` for every tracked moment.
pub fn mixed_expectations(ground: &MomentState, gamma: f64, n_atoms: u32, state: &SpinorState) -> MomentState {
    let exc = dephased_moments(state, n_atoms);
    let keep = 1.0 - gamma;
    let mix = |g: f64, e: f64| keep * g + gamma * e;
    let mixc = |g: C64, e: C64| g * keep + e * gamma;
    MomentState {
        n_r: mix(ground.n_r, exc.n_r),
        n_l: mix(ground.n_l, exc.n_l),
        c: mixc(ground.c, exc.c),
        w: mix(ground.w, exc.w),
        u: mixc(ground.u, exc.u),
        v: mixc(ground.v, exc.v),
        p: mixc(ground.p, exc.p),
        q_r: mix(ground.q_r, exc.q_r),
        q_l: mix(ground.q_l, exc.q_l),
    }
}
