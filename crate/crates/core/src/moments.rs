//! Truncated fourth-order moment hierarchy and the Hillery-Zubairy parameter.
//!
//! Writing `a = ψ_R`, `b = ψ_L`, the tracked correlators are
//!
//! ```text
//! n_r = ⟨a†a⟩        n_l = ⟨b†b⟩        c = ⟨a†b⟩
//! w   = ⟨a†a b†b⟩    u   = ⟨a†a†a b⟩    v = ⟨a†b†b b⟩
//! p   = ⟨a†a†b b⟩    q_r = ⟨a†a†a a⟩    q_l = ⟨b†b†b b⟩
//! ```
//!
//! With `D = n_r − n_l` and the pair coupling `g = 2 (E_s − E_m) / N`, the
//! closed set evolved here is
//!
//! ```text
//! dn_r/dt = −i V_p (c − c̄)
//! dn_l/dt = −i V_p (c̄ − c)
//! dc/dt   = −i [V_p D + g (u − v)]
//! dw/dt   = −i V_p (ū + v − u − v̄)
//! du/dt   = −i [V_p (q_r + p − 2w) + g u (D + 1)]
//! dp/dt   = −i [2 V_p (u − v) + 2 g p D]
//! dq_r/dt = −2i V_p (u − ū)
//! dv/dt   =  i [V_p (q_l + p − 2w) + g v (1 − D)]
//! dq_l/dt = −2i V_p (v̄ − v)
//! ```
//!
//! The `u` and `p` equations carry the mean-field factorization of the sixth
//! order terms. The `v` and `q_l` equations follow from the `u` and `q_r`
//! ones under the relabeling `a ↔ b`, which leaves the Hamiltonian invariant
//! and maps `u → v̄`, `p → p̄`, `q_r → q_l`, `D → −D`; conjugating the relabeled
//! `u` equation gives the `v` equation above. The remaining third-order
//! correlators close through the operator identities `⟨a†a a b†⟩ = ū` and
//! `⟨a b†b†b⟩ = v̄`.
//!
//! The interaction energies `E_s`, `E_m` are per-atom (density) energies, so
//! the pair coupling between unnormalized moments carries a `1/N`. With that
//! scaling the hierarchy reduces to the mean-field equations at large `N`.
//!
//! Two sums are conserved exactly by the flow: `n_r + n_l = N` and
//! `q_r + q_l + 2w = N (N − 1)`; their drift is reported as a diagnostic.

use std::io::{self, Write};

use num_complex::Complex64 as C64;

use crate::dynamics::DynamicsError;
use crate::integrate::{rk4_step, window_average};
use crate::model::Derived;
use crate::state::SpinorState;

/// Relative drift of either conservation law treated as a failure.
pub const CONSERVATION_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentState {
    pub n_r: f64,
    pub n_l: f64,
    pub c: C64,
    pub w: f64,
    pub u: C64,
    pub v: C64,
    pub p: C64,
    pub q_r: f64,
    pub q_l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HzResult {
    pub e_hz: f64,
    pub entangled: bool,
}

impl HzResult {
    pub fn new(e_hz: f64) -> Self {
        HzResult {
            e_hz,
            entangled: e_hz < 1.0,
        }
    }
}

impl MomentState {
    /// `n_r + n_l`.
    pub fn total(&self) -> f64 {
        self.n_r + self.n_l
    }

    /// `q_r + q_l + 2w`, the number of ordered atom pairs.
    pub fn pair_count(&self) -> f64 {
        self.q_r + self.q_l + 2.0 * self.w
    }

    /// Population imbalance per atom, `(n_r − n_l) / (n_r + n_l)`.
    pub fn sz(&self) -> f64 {
        (self.n_r - self.n_l) / self.total()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub(crate) fn to_array(self) -> [f64; 13] {
        [
            self.n_r, self.n_l, self.c.re, self.c.im, self.w, self.u.re, self.u.im, self.v.re, self.v.im,
            self.p.re, self.p.im, self.q_r, self.q_l,
        ]
    }

    pub(crate) fn from_array(y: &[f64; 13]) -> Self {
        MomentState {
            n_r: y[0],
            n_l: y[1],
            c: C64::new(y[2], y[3]),
            w: y[4],
            u: C64::new(y[5], y[6]),
            v: C64::new(y[7], y[8]),
            p: C64::new(y[9], y[10]),
            q_r: y[11],
            q_l: y[12],
        }
    }
}

/// Exact moments of the binomial state built from `state` with `n_atoms` atoms.
pub fn init_moments(state: &SpinorState, n_atoms: u32) -> MomentState {
    let n = n_atoms as f64;
    let pairs = n * (n - 1.0);
    let (a, b) = (state.alpha, state.beta);
    let (pa, pb) = (a.norm_sqr(), b.norm_sqr());
    let coherence = a * b.conj();
    MomentState {
        n_r: n * pa,
        n_l: n * pb,
        c: coherence * n,
        w: pairs * pa * pb,
        u: coherence * (pairs * pa),
        v: coherence * (pairs * pb),
        p: coherence * coherence * pairs,
        q_r: pairs * pa * pa,
        q_l: pairs * pb * pb,
    }
}

/// Right-hand side of the hierarchy for coupling `vp` and pair coupling `g`.
pub fn hierarchy_rhs(m: &MomentState, vp: f64, g: f64) -> MomentState {
    let i = C64::i();
    let imb = m.n_r - m.n_l;
    MomentState {
        n_r: 2.0 * vp * m.c.im,
        n_l: -2.0 * vp * m.c.im,
        c: -i * (vp * imb + g * (m.u - m.v)),
        w: 2.0 * vp * (m.v.im - m.u.im),
        u: -i * (vp * (m.q_r + m.p - 2.0 * m.w) + g * m.u * (imb + 1.0)),
        v: i * (vp * (m.q_l + m.p - 2.0 * m.w) + g * m.v * (1.0 - imb)),
        p: -i * (2.0 * vp * (m.u - m.v) + 2.0 * g * m.p * imb),
        q_r: 4.0 * vp * m.u.im,
        q_l: -4.0 * vp * m.v.im,
    }
}

/// `2 (E_s − E_m) / N`.
pub fn pair_coupling(d: &Derived, n_atoms: f64) -> f64 {
    2.0 * d.kappa() / n_atoms
}

/// `E_HZ = (Δ²J_x + Δ²J_y) / (N/2)` with
/// `Δ²J_x + Δ²J_y = ⟨a†a b†b⟩ + N/2 − |⟨a†b⟩|²`.
pub fn hz_parameter(m: &MomentState, n_atoms: u32) -> HzResult {
    let half = 0.5 * n_atoms as f64;
    HzResult::new((m.w + half - m.c.norm_sqr()) / half)
}

#[derive(Debug, Clone)]
pub struct MomentTrajectory {
    pub dt: f64,
    pub n_atoms: u32,
    pub times: Vec<f64>,
    pub moments: Vec<MomentState>,
    /// Largest relative drift of `n_r + n_l`.
    pub number_drift: f64,
    /// Largest relative drift of `q_r + q_l + 2w`.
    pub pair_drift: f64,
}

impl MomentTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn conservation_failed(&self) -> bool {
        !(self.number_drift <= CONSERVATION_LIMIT && self.pair_drift <= CONSERVATION_LIMIT)
    }

    pub fn e_hz(&self) -> Vec<f64> {
        self.moments.iter().map(|m| hz_parameter(m, self.n_atoms).e_hz).collect()
    }

    /// CSV with columns `t, n_r, n_l, re_c, im_c, w, re_u, im_u, re_v, im_v,
    /// re_p, im_p, q_r, q_l, e_hz`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,n_r,n_l,re_c,im_c,w,re_u,im_u,re_v,im_v,re_p,im_p,q_r,q_l,e_hz")?;
        for (t, m) in self.times.iter().zip(&self.moments) {
            let mut cols = [0.0; 15];
            cols[0] = *t;
            cols[1..14].copy_from_slice(&m.to_array());
            cols[14] = hz_parameter(m, self.n_atoms).e_hz;
            crate::csv::write_row(&mut out, &cols)?;
        }
        Ok(())
    }
}

/// RK4 evolution of the hierarchy over `[0, horizon]`, on the same grid the
/// mean-field integrator uses for the same `dt`.
pub fn evolve_moments(m0: MomentState, d: &Derived, horizon: f64, dt: f64) -> Result<MomentTrajectory, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::BadStep(dt));
    }
    if !horizon.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if horizon < 10.0 * dt {
        return Err(DynamicsError::ShortHorizon { horizon, dt });
    }
    evolve_moment_steps(m0, d, dt, (horizon / dt).round() as usize)
}

/// Hierarchy evolution for exactly `steps` RK4 steps of size `dt`.
pub fn evolve_moment_steps(m0: MomentState, d: &Derived, dt: f64, steps: usize) -> Result<MomentTrajectory, DynamicsError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(DynamicsError::BadStep(dt));
    }
    if !m0.is_finite() || ![d.vp, d.es, d.em].iter().all(|x| x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let total0 = m0.total();
    let pairs0 = m0.pair_count();
    let n_atoms = total0.round().max(1.0) as u32;
    let (vp, g) = (d.vp, pair_coupling(d, total0));
    let f = |y: &[f64; 13]| hierarchy_rhs(&MomentState::from_array(y), vp, g).to_array();

    let rel = |now: f64, start: f64| (now - start).abs() / start.abs().max(1.0);
    let mut times = Vec::with_capacity(steps + 1);
    let mut moments = Vec::with_capacity(steps + 1);
    let (mut number_drift, mut pair_drift) = (0.0_f64, 0.0_f64);
    let mut y = m0.to_array();
    times.push(0.0);
    moments.push(m0);
    for k in 1..=steps {
        y = rk4_step(&f, &y, dt);
        let m = MomentState::from_array(&y);
        number_drift = number_drift.max(rel(m.total(), total0));
        pair_drift = pair_drift.max(rel(m.pair_count(), pairs0));
        times.push(k as f64 * dt);
        moments.push(m);
        if !m.is_finite() {
            number_drift = f64::INFINITY;
            pair_drift = f64::INFINITY;
            break;
        }
    }
    Ok(MomentTrajectory {
        dt,
        n_atoms,
        times,
        moments,
        number_drift,
        pair_drift,
    })
}

/// Trapezoidal average of `E_HZ` over `[0, t_r]`.
pub fn time_averaged_hz(mt: &MomentTrajectory, t_r: f64) -> f64 {
    window_average(&mt.times, &mt.e_hz(), t_r)
}
