//! Nonlinear two-mode mean-field dynamics.
//!
//! The amplitudes `(α, β)` obey `i d/dt (α, β)ᵀ = H_eff (α, β)ᵀ` with
//!
//! ```text
//! H_eff = V_p σx + E_m sz σz + E_s (sx σx + sy σy)
//! ```
//!
//! where `(sx, sy, sz)` is the Bloch vector of the current state. Terms of the
//! full effective Hamiltonian proportional to the identity only rotate the
//! global phase and are left out.
//!
//! `H_eff ψ` is the gradient of [`mean_field_energy`] with respect to `ψ*`, so
//! the flow conserves both the norm and that energy; both are tracked as
//! diagnostics rather than enforced.

use std::io::{self, Write};

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::integrate::{rk4_step, window_average};
use crate::model::Derived;
use crate::state::SpinorState;

/// Tolerance on `sz` when matching the initial sample in [`detect_period`].
pub const TOL_PERIOD: f64 = 1e-6;

/// Norm drift beyond which a trajectory is flagged as an integration failure.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Samples per linear Rabi period `π / V_p` at `dt_scale = 1`.
pub const STEPS_PER_PERIOD_ESTIMATE: f64 = 2.0e4;

/// Averaging window, in units of `π / V_p`, used when no period is detected.
pub const CAPPED_WINDOW_PERIODS: f64 = 50.0;

pub type Matrix2 = [[C64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("horizon {horizon} shorter than ten steps of {dt}")]
    ShortHorizon { horizon: f64, dt: f64 },
    #[error("non-finite initial state or coefficients")]
    NonFinite,
}

/// Time step used everywhere for a given set of constants:
/// `dt = (π / V_p) / (2·10⁴) · dt_scale`.
pub fn default_dt(d: &Derived, dt_scale: f64) -> f64 {
    d.period_estimate() / STEPS_PER_PERIOD_ESTIMATE * dt_scale
}

/// Length of the fallback averaging window `T_cap = 50 π / V_p`.
pub fn capped_window(d: &Derived) -> f64 {
    CAPPED_WINDOW_PERIODS * d.period_estimate()
}

pub fn effective_hamiltonian(state: &SpinorState, d: &Derived) -> Matrix2 {
    let b = state.raw_bloch();
    let diag = d.em * b.sz;
    // V_p σx + E_s (sx σx + sy σy): lower off-diagonal is V_p + E_s (sx + i sy).
    let lower = C64::new(d.vp + d.es * b.sx, d.es * b.sy);
    [[C64::new(diag, 0.0), lower.conj()], [lower, C64::new(-diag, 0.0)]]
}

/// `V_p sx + (E_m/2) sz² + (E_s/2)(sx² + sy²)`.
pub fn mean_field_energy(state: &SpinorState, d: &Derived) -> f64 {
    let b = state.raw_bloch();
    d.vp * b.sx + 0.5 * d.em * b.sz * b.sz + 0.5 * d.es * (b.sx * b.sx + b.sy * b.sy)
}

fn rhs(y: &[f64; 4], d: &Derived) -> [f64; 4] {
    let s = SpinorState::from_array(y);
    let h = effective_hamiltonian(&s, d);
    let mi = C64::new(0.0, -1.0);
    let da = mi * (h[0][0] * s.alpha + h[0][1] * s.beta);
    let db = mi * (h[1][0] * s.alpha + h[1][1] * s.beta);
    [da.re, da.im, db.re, db.im]
}

/// Time-ordered mean-field samples on a uniform grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<SpinorState>,
    /// Detected return time `T_R`; `None` when the motion does not return
    /// within the integrated horizon.
    pub period: Option<f64>,
    /// Largest `| |α|² + |β|² − 1 |` seen along the trajectory.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn end_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn sz(&self) -> Vec<f64> {
        self.states.iter().map(SpinorState::sz).collect()
    }

    pub fn min_sz(&self) -> f64 {
        self.states.iter().map(SpinorState::sz).fold(f64::INFINITY, f64::min)
    }

    pub fn integration_failed(&self) -> bool {
        !(self.norm_drift <= NORM_DRIFT_LIMIT)
    }

    /// Largest relative deviation of [`mean_field_energy`] from its initial value.
    pub fn energy_drift(&self, d: &Derived) -> f64 {
        let e0 = mean_field_energy(&self.states[0], d);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.states
            .iter()
            .map(|s| (mean_field_energy(s, d) - e0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Averaging window: the detected period, else `cap` (clipped to the
    /// trajectory). The flag is set when the cap was used.
    pub fn averaging_window(&self, cap: f64) -> (f64, bool) {
        match self.period {
            Some(t) => (t, false),
            None => (cap.min(self.end_time()), true),
        }
    }

    /// Write the trajectory as CSV with columns
    /// `t, re_alpha, im_alpha, re_beta, im_beta, sx, sy, sz, energy`.
    pub fn write_csv<W: Write>(&self, d: &Derived, mut out: W) -> io::Result<()> {
        writeln!(out, "t,re_alpha,im_alpha,re_beta,im_beta,sx,sy,sz,energy")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let b = s.bloch();
            let cols = [
                *t,
                s.alpha.re,
                s.alpha.im,
                s.beta.re,
                s.beta.im,
                b.sx,
                b.sy,
                b.sz,
                mean_field_energy(s, d),
            ];
            crate::csv::write_row(&mut out, &cols)?;
        }
        Ok(())
    }
}

fn check_inputs(initial: &SpinorState, d: &Derived, horizon: f64, dt: f64) -> Result<(), DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::BadStep(dt));
    }
    let coeffs = [d.vp, d.es, d.em, horizon];
    if !initial.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    if horizon < 10.0 * dt {
        return Err(DynamicsError::ShortHorizon { horizon, dt });
    }
    Ok(())
}

/// Integrate the mean-field equations from `initial` over `[0, horizon]`
/// with fixed-step RK4. No renormalization is applied.
pub fn evolve(initial: SpinorState, d: &Derived, horizon: f64, dt: f64) -> Result<Trajectory, DynamicsError> {
    check_inputs(&initial, d, horizon, dt)?;
    let steps = (horizon / dt).round() as usize;
    integrate(initial, d, dt, steps, false)
}

/// Like [`evolve`], but stops as soon as the state returns to its initial
/// point (or at `max_horizon`). The returned trajectory covers the detected
/// period, which is what the scans average over.
pub fn evolve_until_return(
    initial: SpinorState,
    d: &Derived,
    max_horizon: f64,
    dt: f64,
) -> Result<Trajectory, DynamicsError> {
    check_inputs(&initial, d, max_horizon, dt)?;
    let steps = (max_horizon / dt).round() as usize;
    integrate(initial, d, dt, steps, true)
}

fn integrate(
    initial: SpinorState,
    d: &Derived,
    dt: f64,
    steps: usize,
    stop_on_return: bool,
) -> Result<Trajectory, DynamicsError> {
    let f = |y: &[f64; 4]| rhs(y, d);
    let norm0 = initial.norm_sqr();
    let cap = if stop_on_return { (steps + 1).min(1 << 16) } else { steps + 1 };
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut detector = PeriodDetector::new(dt, TOL_PERIOD);
    let mut norm_drift: f64 = 0.0;
    let mut y = initial.to_array();
    times.push(0.0);
    states.push(initial);
    detector.push(initial.sz());
    for k in 1..=steps {
        y = rk4_step(&f, &y, dt);
        let s = SpinorState::from_array(&y);
        norm_drift = norm_drift.max((s.norm_sqr() - norm0).abs());
        times.push(k as f64 * dt);
        states.push(s);
        if detector.push(s.sz()).is_some() && stop_on_return {
            break;
        }
        if !s.is_finite() {
            norm_drift = f64::INFINITY;
            break;
        }
    }
    Ok(Trajectory {
        dt,
        times,
        states,
        period: detector.period(),
        norm_drift,
    })
}

/// First return time of `sz` to its initial value, moving in the same
/// direction it started in.
///
/// A start at a turning point of `sz` (e.g. the fully magnetized state) is
/// matched against later local extrema of the same kind, located by a
/// three-point parabolic fit; otherwise the first same-direction crossing of
/// the initial level is located by linear interpolation. Signals that never
/// leave the initial value (no perturbation) report `None`.
pub fn detect_period(traj: &Trajectory) -> Option<f64> {
    let mut detector = PeriodDetector::new(traj.dt, TOL_PERIOD);
    for s in &traj.states {
        if let Some(t) = detector.push(s.sz()) {
            return Some(t);
        }
    }
    None
}

/// Trapezoidal average of `sz` over `[0, t_r]`.
pub fn order_parameter(traj: &Trajectory, t_r: f64) -> f64 {
    window_average(&traj.times, &traj.sz(), t_r)
}

#[derive(Debug, Clone, Copy)]
enum StartKind {
    Pending,
    /// Start sits on a maximum (`true`) or minimum (`false`) of `sz`.
    Extremum(bool),
    /// Start is on a slope, rising (`true`) or falling.
    Crossing(bool),
}

/// Streaming detector behind [`detect_period`].
#[derive(Debug, Clone)]
pub struct PeriodDetector {
    dt: f64,
    tol: f64,
    count: usize,
    first: [f64; 3],
    prev: [f64; 2],
    kind: StartKind,
    departed: bool,
    found: Option<f64>,
}

impl PeriodDetector {
    pub fn new(dt: f64, tol: f64) -> Self {
        PeriodDetector {
            dt,
            tol,
            count: 0,
            first: [0.0; 3],
            prev: [0.0; 2],
            kind: StartKind::Pending,
            departed: false,
            found: None,
        }
    }

    pub fn period(&self) -> Option<f64> {
        self.found
    }

    /// Feed the next sample; returns the period once it is found.
    pub fn push(&mut self, sz: f64) -> Option<f64> {
        if self.found.is_some() {
            return self.found;
        }
        let k = self.count;
        self.count += 1;
        if k < 3 {
            self.first[k] = sz;
        }
        if k == 2 {
            let [s0, s1, s2] = self.first;
            let d1 = s1 - s0;
            let d2 = s2 - 2.0 * s1 + s0;
            // A turning point has a first difference of order dt², comparable
            // to the second difference; a slope start has it of order dt.
            self.kind = if d1.abs() <= 2.0 * d2.abs() || d1 == 0.0 {
                StartKind::Extremum(if d1 != 0.0 { d1 < 0.0 } else { d2 <= 0.0 })
            } else {
                StartKind::Crossing(d1 > 0.0)
            };
        }
        let s0 = self.first[0];
        if (sz - s0).abs() > 10.0 * self.tol {
            self.departed = true;
        }
        if k >= 2 && self.departed {
            let [a, b] = self.prev;
            let t_b = (k - 1) as f64 * self.dt;
            match self.kind {
                StartKind::Extremum(is_max) => {
                    let turning = if is_max { b >= a && b > sz } else { b <= a && b < sz };
                    if turning {
                        let curv = a - 2.0 * b + sz;
                        let (shift, peak) = if curv != 0.0 {
                            (0.5 * (a - sz) / curv, b - (a - sz) * (a - sz) / (8.0 * curv))
                        } else {
                            (0.0, b)
                        };
                        if (peak - s0).abs() < self.tol {
                            self.found = Some(t_b + shift * self.dt);
                        }
                    }
                }
                StartKind::Crossing(rising) => {
                    let (ea, eb) = (b - s0, sz - s0);
                    let crossed = if rising { ea < 0.0 && eb >= 0.0 } else { ea > 0.0 && eb <= 0.0 };
                    if crossed {
                        let frac = ea / (ea - eb);
                        self.found = Some(t_b + frac * self.dt);
                    }
                }
                StartKind::Pending => {}
            }
        }
        self.prev = [self.prev[1], sz];
        self.found
    }
}
