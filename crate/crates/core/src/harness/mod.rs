//! Parameter sweeps over the perturbation strength (and temperature).
//!
//! Every grid point runs the same pipeline: mean-field evolution from the
//! magnetized state until the first return, then the moment hierarchy for
//! each requested atom number on the same time grid, then the window
//! averages over the detected period (or the capped window near the
//! separatrix). Grid points run in parallel; rows are merged in grid order.

use std::io::{self, Write};
use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::csv::fmt_e12;
use crate::dynamics::{capped_window, default_dt, evolve_until_return, order_parameter, DynamicsError};
use crate::entropy::BinomialEntropy;
use crate::integrate::window_average;
use crate::model::{derive, ModelParams, ParamError};
use crate::moments::{hz_parameter, init_moments, pair_coupling, hierarchy_rhs, MomentState, CONSERVATION_LIMIT};
use crate::state::SpinorState;
use crate::thermal::{effective_params, mixed_expectations, GammaAt, ThermalConfig, ThermalError};

pub mod figures;

pub use figures::{reproduce_figure, FigureId, FigureOutput};

/// Upper end of the accepted `V₀ / V₀,crit` range.
pub const MAX_RATIO: f64 = 3.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("missing configuration key {0}")]
    MissingKey(&'static str),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Multiplier on the default step `(π / V_p) / 2·10⁴`.
    pub dt_scale: f64,
    /// Parallel grid workers; 0 lets the pool decide.
    pub workers: usize,
    /// Keep grid points at exactly `V₀ = V₀,crit` (averaged over the capped
    /// window) instead of dropping them.
    pub allow_separatrix: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            dt_scale: 1.0,
            workers: 0,
            allow_separatrix: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    /// `V₀ / V₀,crit` at zero temperature.
    pub v0_ratio: f64,
    pub temperature_nk: f64,
    pub n_atoms: u32,
    /// Excitation fraction used for the depletion of this row.
    pub gamma: f64,
    pub m_bar: f64,
    /// Time-averaged normalized entropy; NaN for mixed (Γ > 0) rows.
    pub e_bar: f64,
    pub e_hz_bar: f64,
    /// Averaging window: the detected period, or the capped window.
    pub t_r: f64,
    pub min_sz: f64,
    pub period_capped: bool,
    /// Norm drift or hierarchy conservation outside tolerance.
    pub failed: bool,
}

pub const SCAN_HEADER: &str =
    "v0_ratio,temperature_nK,n_atoms,gamma,m_bar,e_bar,e_hz_bar,t_r,min_sz,period_capped,failed";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
}

impl ScanTable {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.failed)
    }

    /// Rows for one `(temperature, N)` block, in grid order.
    pub fn block(&self, temperature_nk: f64, n_atoms: u32) -> Vec<&ScanRow> {
        self.rows
            .iter()
            .filter(|r| r.temperature_nk == temperature_nk && r.n_atoms == n_atoms)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SCAN_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt_e12(r.v0_ratio),
                fmt_e12(r.temperature_nk),
                r.n_atoms,
                fmt_e12(r.gamma),
                fmt_e12(r.m_bar),
                fmt_e12(r.e_bar),
                fmt_e12(r.e_hz_bar),
                fmt_e12(r.t_r),
                fmt_e12(r.min_sz),
                r.period_capped,
                r.failed
            )?;
        }
        Ok(())
    }
}

/// `points` evenly spaced ratios over `[lo, hi]`, inclusive.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
            .collect(),
    }
}

pub fn is_separatrix(ratio: f64) -> bool {
    (ratio - 1.0).abs() < 1e-12
}

fn prepare_grid(grid: &[f64], opts: &RunOptions) -> Result<Vec<f64>, HarnessError> {
    if grid.is_empty() {
        return Err(HarnessError::BadGrid("empty grid".into()));
    }
    if let Some(r) = grid.iter().find(|r| !(**r > 0.0 && **r <= MAX_RATIO)) {
        return Err(HarnessError::BadGrid(format!("ratio {r} outside (0, {MAX_RATIO}]")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::BadGrid("ratios must be strictly ascending".into()));
    }
    Ok(grid
        .iter()
        .copied()
        .filter(|r| opts.allow_separatrix || !is_separatrix(*r))
        .collect())
}

/// Run one grid point for every atom number in `n_list`.
///
/// `v0_ratio` is relative to the zero-temperature critical strength; the
/// depletion taken from `gamma` lowers the interactions of this run.
pub fn evaluate_point(
    params: &ModelParams,
    v0_ratio: f64,
    n_list: &[u32],
    temperature_nk: f64,
    gamma: GammaAt<'_>,
    opts: &RunOptions,
) -> Result<Vec<ScanRow>, HarnessError> {
    let d0 = derive(params)?;
    let depletion = gamma.for_depletion();
    let d = effective_params(params, depletion)?.with_v0(v0_ratio * d0.v0_crit);
    let dt = default_dt(&d, opts.dt_scale);
    let cap = capped_window(&d);
    let traj = evolve_until_return(SpinorState::magnetized_right(), &d, cap, dt)?;
    let (t_r, capped) = traj.averaging_window(cap);
    let m_bar = order_parameter(&traj, t_r);
    let min_sz = traj.min_sz();
    let mixed = !matches!(gamma, GammaAt::Fixed(g) if g == 0.0);
    let steps = traj.len() - 1;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let e_bar = if mixed {
            f64::NAN
        } else {
            let table = BinomialEntropy::new(n);
            let e: Vec<f64> = traj.states.iter().map(|s| table.entropy(s.pop_right()).e_norm).collect();
            window_average(&traj.times, &e, t_r)
        };
        let (e_hz, conservation_ok) = hz_series(init_moments(&traj.states[0], n), &d, dt, steps, n, |k, m| {
            if mixed {
                let s = &traj.states[k];
                mixed_expectations(m, gamma.at(s.pop_right()), n, s)
            } else {
                *m
            }
        });
        rows.push(ScanRow {
            v0_ratio,
            temperature_nk,
            n_atoms: n,
            gamma: depletion,
            m_bar,
            e_bar,
            e_hz_bar: window_average(&traj.times, &e_hz, t_r),
            t_r,
            min_sz,
            period_capped: capped,
            failed: traj.integration_failed() || !conservation_ok,
        });
    }
    Ok(rows)
}

/// Evolve the hierarchy for `steps` steps, returning `E_HZ` of
/// `observe(k, moments_k)` at every sample and whether both conservation
/// laws held. Only the scalar series is kept.
pub(crate) fn hz_series<F>(m0: MomentState, d: &crate::model::Derived, dt: f64, steps: usize, n: u32, observe: F) -> (Vec<f64>, bool)
where
    F: Fn(usize, &MomentState) -> MomentState,
{
    let (vp, g) = (d.vp, pair_coupling(d, m0.total()));
    let f = |y: &[f64; 13]| hierarchy_rhs(&MomentState::from_array(y), vp, g).to_array();
    let (total0, pairs0) = (m0.total(), m0.pair_count());
    let rel = |now: f64, start: f64| (now - start).abs() / start.abs().max(1.0);
    let mut ok = true;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = m0.to_array();
    out.push(hz_parameter(&observe(0, &m0), n).e_hz);
    for k in 1..=steps {
        y = crate::integrate::rk4_step(&f, &y, dt);
        let m = MomentState::from_array(&y);
        if !(rel(m.total(), total0) <= CONSERVATION_LIMIT && rel(m.pair_count(), pairs0) <= CONSERVATION_LIMIT) {
            ok = false;
        }
        out.push(hz_parameter(&observe(k, &m), n).e_hz);
    }
    (out, ok)
}

fn run_grid<T, F>(grid: &[T], workers: usize, job: F) -> Result<Vec<ScanRow>, HarnessError>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<ScanRow>, HarnessError> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let blocks: Vec<Result<Vec<ScanRow>, HarnessError>> = pool.install(|| grid.par_iter().map(&job).collect());
    let mut rows = Vec::new();
    for b in blocks {
        rows.extend(b?);
    }
    Ok(rows)
}

/// Zero-temperature sweep: one row per `(ratio, N)`.
pub fn scan_v0(params: &ModelParams, grid: &[f64], n_list: &[u32], opts: &RunOptions) -> Result<ScanTable, HarnessError> {
    derive(params)?;
    let grid = prepare_grid(grid, opts)?;
    let rows = run_grid(&grid, opts.workers, |r| evaluate_point(params, *r, n_list, 0.0, GammaAt::Fixed(0.0), opts))?;
    Ok(ScanTable { rows })
}

/// Finite-temperature sweep: one row per `(T, ratio, N)`, temperatures in
/// the configured order.
pub fn thermal_scan(
    params: &ModelParams,
    config: &ThermalConfig,
    grid: &[f64],
    n_list: &[u32],
    opts: &RunOptions,
) -> Result<ScanTable, HarnessError> {
    derive(params)?;
    config.validate()?;
    let grid = prepare_grid(grid, opts)?;
    let mut jobs = Vec::new();
    for t in &config.temperatures {
        let gamma = config.gamma_at(*t)?;
        for r in &grid {
            jobs.push((*t, *r, gamma));
        }
    }
    let rows = run_grid(&jobs, opts.workers, |(t, r, gamma)| evaluate_point(params, *r, n_list, *t, *gamma, opts))?;
    Ok(ScanTable { rows })
}

/// Midpoint of the first grid cell over which `m_bar` falls below
/// `threshold`.
pub fn transition_ratio(rows: &[&ScanRow], threshold: f64) -> Option<f64> {
    rows.windows(2)
        .find(|w| w[0].m_bar >= threshold && w[1].m_bar < threshold)
        .map(|w| 0.5 * (w[0].v0_ratio + w[1].v0_ratio))
}

/// Midpoint of the first grid cell over which the lowest `sz` reached
/// changes sign (partial versus full transfer).
pub fn bracket_by_min_sz(rows: &[&ScanRow]) -> Option<f64> {
    rows.windows(2)
        .find(|w| w[0].min_sz > 0.0 && w[1].min_sz <= 0.0)
        .map(|w| 0.5 * (w[0].v0_ratio + w[1].v0_ratio))
}

/// Row maximizing `key` (first one on ties); NaN keys are skipped.
pub fn argmax_by<'a>(rows: &[&'a ScanRow], key: impl Fn(&ScanRow) -> f64) -> Option<&'a ScanRow> {
    rows.iter()
        .copied()
        .filter(|r| !key(r).is_nan())
        .fold(None, |best: Option<&ScanRow>, r| match best {
            Some(b) if key(b) >= key(r) => Some(b),
            _ => Some(r),
        })
}

pub fn argmin_by<'a>(rows: &[&'a ScanRow], key: impl Fn(&ScanRow) -> f64) -> Option<&'a ScanRow> {
    argmax_by(rows, |r| -key(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(0.3, 1.0, 10).with_ga_n(0.9987)
    }

    #[test]
    fn grid_construction() {
        let g = linear_grid(0.5, 1.5, 101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[50], 1.0);
        assert_eq!(g[100], 1.5);
        let kept = prepare_grid(&g, &RunOptions::default()).unwrap();
        assert_eq!(kept.len(), 100);
        assert!(!kept.iter().any(|r| is_separatrix(*r)));
        let opts = RunOptions { allow_separatrix: true, ..RunOptions::default() };
        assert_eq!(prepare_grid(&g, &opts).unwrap().len(), 101);
    }

    #[test]
    fn grid_rejections() {
        let opts = RunOptions::default();
        assert!(prepare_grid(&[], &opts).is_err());
        assert!(prepare_grid(&[0.0, 0.5], &opts).is_err());
        assert!(prepare_grid(&[0.5, 3.5], &opts).is_err());
        assert!(prepare_grid(&[0.6, 0.5], &opts).is_err());
    }

    #[test]
    fn unperturbed_point() {
        let rows = evaluate_point(&params(), 0.0, &[10], 0.0, GammaAt::Fixed(0.0), &RunOptions::default()).unwrap();
        let r = &rows[0];
        assert_eq!(r.m_bar, 1.0);
        assert_eq!(r.e_bar, 0.0);
        assert_eq!(r.e_hz_bar, 1.0);
        assert!(r.period_capped);
        assert!(!r.failed);
    }

    #[test]
    fn mixed_rows_have_no_entropy() {
        let rows = evaluate_point(&params(), 0.6, &[10], 30.0, GammaAt::Fixed(0.1), &RunOptions { dt_scale: 10.0, ..Default::default() }).unwrap();
        assert!(rows[0].e_bar.is_nan());
        assert_eq!(rows[0].gamma, 0.1);
    }

    #[test]
    fn csv_header_and_flags() {
        let table = ScanTable {
            rows: vec![ScanRow {
                v0_ratio: 0.5,
                temperature_nk: 0.0,
                n_atoms: 10,
                gamma: 0.0,
                m_bar: 0.9,
                e_bar: 0.1,
                e_hz_bar: 0.95,
                t_r: 100.0,
                min_sz: 0.8,
                period_capped: false,
                failed: false,
            }],
        };
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SCAN_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "5.000000000000e-01,0.000000000000e+00,10,0.000000000000e+00,9.000000000000e-01,1.000000000000e-01,9.500000000000e-01,1.000000000000e+02,8.000000000000e-01,false,false"
        );
    }
}
