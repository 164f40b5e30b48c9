//! Entanglement entropy between the two modes for the binomial state
//! `Σ_n sqrt(C(N,n)) α*ⁿ β*^{N−n} |n, N−n⟩`.
//!
//! The state is already in Schmidt form, so the reduced density matrix of
//! either mode is diagonal with the binomial weights
//! `p_n = C(N,n) |α|^{2n} |β|^{2(N−n)}`.

use crate::dynamics::Trajectory;
use crate::integrate::window_average;
use crate::state::SpinorState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyResult {
    /// Von Neumann entropy in bits.
    pub e_vn: f64,
    /// `e_vn / log₂(N + 1)`.
    pub e_norm: f64,
}

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: u32) -> Vec<f64> {
    let mut table = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// Precomputed `ln C(N, n)` for repeated entropy evaluations at fixed `N`.
#[derive(Debug, Clone)]
pub struct BinomialEntropy {
    n_atoms: u32,
    ln_binom: Vec<f64>,
}

impl BinomialEntropy {
    pub fn new(n_atoms: u32) -> Self {
        let lf = ln_factorials(n_atoms);
        let n = n_atoms as usize;
        let ln_binom = (0..=n).map(|k| lf[n] - lf[k] - lf[n - k]).collect();
        BinomialEntropy { n_atoms, ln_binom }
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    /// Schmidt weights `p_n` for a population `pop_right = |α|²`.
    pub fn weights(&self, pop_right: f64) -> Vec<f64> {
        let (ln_a, ln_b) = (pop_right.ln(), (1.0 - pop_right).ln());
        let n = self.n_atoms as usize;
        self.ln_binom
            .iter()
            .enumerate()
            .map(|(k, lb)| log_weight(*lb, k, n - k, ln_a, ln_b).exp())
            .collect()
    }

    pub fn entropy(&self, pop_right: f64) -> EntropyResult {
        let p = pop_right.clamp(0.0, 1.0);
        let (ln_a, ln_b) = (p.ln(), (1.0 - p).ln());
        let n = self.n_atoms as usize;
        let mut nats = 0.0;
        for (k, lb) in self.ln_binom.iter().enumerate() {
            let lw = log_weight(*lb, k, n - k, ln_a, ln_b);
            if lw.is_finite() {
                nats -= lw.exp() * lw;
            }
        }
        let e_vn = (nats / std::f64::consts::LN_2).max(0.0);
        EntropyResult {
            e_vn,
            e_norm: e_vn / max_entropy_bits(self.n_atoms),
        }
    }
}

/// `ln p_n`, with `0 · ln 0` treated as zero so that edge populations give
/// exact product states.
fn log_weight(ln_binom: f64, n_right: usize, n_left: usize, ln_a: f64, ln_b: f64) -> f64 {
    let part = |count: usize, ln_x: f64| if count == 0 { 0.0 } else { count as f64 * ln_x };
    ln_binom + part(n_right, ln_a) + part(n_left, ln_b)
}

/// `log₂(N + 1)`, the entropy of a uniform Schmidt spectrum.
pub fn max_entropy_bits(n_atoms: u32) -> f64 {
    (n_atoms as f64 + 1.0).log2()
}

pub fn von_neumann_entropy(state: &SpinorState, n_atoms: u32) -> EntropyResult {
    BinomialEntropy::new(n_atoms).entropy(state.pop_right())
}

/// Trapezoidal average of the normalized entropy over `[0, t_r]`.
pub fn time_averaged_entropy(traj: &Trajectory, n_atoms: u32, t_r: f64) -> f64 {
    let table = BinomialEntropy::new(n_atoms);
    let values: Vec<f64> = traj.states.iter().map(|s| table.entropy(s.pop_right()).e_norm).collect();
    window_average(&traj.times, &values, t_r)
}
