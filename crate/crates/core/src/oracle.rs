//! Exact Fock-space evaluation for small atom numbers.
//!
//! States are stored on the basis `|n, N−n⟩` (n atoms in the `+k_m` mode) and
//! operators are strings of ladder operators applied right to left with
//! their exact `sqrt` factors. Nothing here relies on the closed forms used
//! by [`crate::moments`] or [`crate::entropy`], which is what makes it a
//! useful reference for them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::entropy::{max_entropy_bits, EntropyResult};
use crate::moments::{HzResult, MomentState};
use crate::state::SpinorState;

pub const MAX_ATOMS: u32 = 4096;
pub const MAX_OP_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("atom number {0} outside 1..={MAX_ATOMS}")]
    AtomsOutOfRange(u32),
    #[error("operator string of length {0} exceeds {MAX_OP_LEN}")]
    OpTooLong(usize),
    #[error("unknown ladder symbol {0:?}")]
    BadSymbol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ladder {
    RDag,
    R,
    LDag,
    L,
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ladder::RDag => "R+",
            Ladder::R => "R",
            Ladder::LDag => "L+",
            Ladder::L => "L",
        })
    }
}

impl FromStr for Ladder {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "R+" | "R†" | "Rd" => Ok(Ladder::RDag),
            "R" => Ok(Ladder::R),
            "L+" | "L†" | "Ld" => Ok(Ladder::LDag),
            "L" => Ok(Ladder::L),
            other => Err(OracleError::BadSymbol(other.to_string())),
        }
    }
}

/// Product of ladder operators, leftmost first as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpSpec(Vec<Ladder>);

impl OpSpec {
    pub fn new(ops: &[Ladder]) -> Result<Self, OracleError> {
        if ops.len() > MAX_OP_LEN {
            return Err(OracleError::OpTooLong(ops.len()));
        }
        Ok(OpSpec(ops.to_vec()))
    }

    /// Parse a whitespace-separated string such as `"R+ R L+ L"`.
    pub fn parse(s: &str) -> Result<Self, OracleError> {
        let ops = s.split_whitespace().map(str::parse).collect::<Result<Vec<_>, _>>()?;
        OpSpec::new(&ops)
    }

    pub fn ops(&self) -> &[Ladder] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    /// Amplitude of `|n, N−n⟩` at index `n`.
    pub coeffs: Vec<C64>,
    pub n_atoms: u32,
}

/// `Σ_n sqrt(C(N,n)) α*ⁿ β*^{N−n} |n, N−n⟩`.
pub fn build_state(state: &SpinorState, n_atoms: u32) -> Result<FockVector, OracleError> {
    if n_atoms == 0 || n_atoms > MAX_ATOMS {
        return Err(OracleError::AtomsOutOfRange(n_atoms));
    }
    let n = n_atoms as usize;
    let (a, b) = (state.alpha.conj(), state.beta.conj());
    // sqrt(C(N,k)) via log-factorials keeps N in the thousands finite.
    let mut ln_fact = vec![0.0_f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let coeffs = (0..=n)
        .map(|k| {
            let root_binom = (0.5 * (ln_fact[n] - ln_fact[k] - ln_fact[n - k])).exp();
            a.powu(k as u32) * b.powu((n - k) as u32) * root_binom
        })
        .collect();
    Ok(FockVector { coeffs, n_atoms })
}

impl FockVector {
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(C64::norm_sqr).sum()
    }

    /// Schmidt populations `|coeffs[n]|²`.
    pub fn populations(&self) -> Vec<f64> {
        self.coeffs.iter().map(C64::norm_sqr).collect()
    }

    /// `⟨f| op |f⟩`.
    pub fn moment(&self, op: &OpSpec) -> C64 {
        let n_total = self.n_atoms as i64;
        // (n_right, n_left, amplitude) after applying the operators so far.
        let mut terms: Vec<(i64, i64, C64)> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (k as i64, n_total - k as i64, *c))
            .collect();
        for ladder in op.ops().iter().rev() {
            for t in terms.iter_mut() {
                let (nr, nl, amp) = *t;
                *t = match ladder {
                    Ladder::R => (nr - 1, nl, amp * (nr.max(0) as f64).sqrt()),
                    Ladder::RDag => (nr + 1, nl, amp * ((nr + 1).max(0) as f64).sqrt()),
                    Ladder::L => (nr, nl - 1, amp * (nl.max(0) as f64).sqrt()),
                    Ladder::LDag => (nr, nl + 1, amp * ((nl + 1).max(0) as f64).sqrt()),
                };
            }
        }
        terms
            .iter()
            .filter(|(nr, nl, amp)| *nr >= 0 && *nl >= 0 && nr + nl == n_total && *amp != C64::new(0.0, 0.0))
            .map(|(nr, _, amp)| self.coeffs[*nr as usize].conj() * amp)
            .sum()
    }

    /// The nine hierarchy moments, each evaluated by ladder action.
    pub fn moments(&self) -> MomentState {
        use Ladder::*;
        let m = |ops: &[Ladder]| self.moment(&OpSpec::new(ops).expect("short op"));
        MomentState {
            n_r: m(&[RDag, R]).re,
            n_l: m(&[LDag, L]).re,
            c: m(&[RDag, L]),
            w: m(&[RDag, R, LDag, L]).re,
            u: m(&[RDag, RDag, R, L]),
            v: m(&[RDag, LDag, L, L]),
            p: m(&[RDag, RDag, L, L]),
            q_r: m(&[RDag, RDag, R, R]).re,
            q_l: m(&[LDag, LDag, L, L]).re,
        }
    }
}

/// `E_HZ` from the variances of `J_x = (R†L + R L†)/2` and
/// `J_y = (R†L − R L†)/(2i)`, computed directly as operator expectations.
pub fn hz_from_fock(f: &FockVector) -> HzResult {
    use Ladder::*;
    let m = |ops: &[Ladder]| f.moment(&OpSpec::new(ops).expect("short op"));
    let rl = m(&[RDag, L]);
    let lr = m(&[R, LDag]);
    let jx = 0.5 * (rl + lr);
    let jy = (rl - lr) / C64::new(0.0, 2.0);

    let rl_rl = m(&[RDag, L, RDag, L]);
    let rl_lr = m(&[RDag, L, R, LDag]);
    let lr_rl = m(&[R, LDag, RDag, L]);
    let lr_lr = m(&[R, LDag, R, LDag]);
    let jx2 = 0.25 * (rl_rl + rl_lr + lr_rl + lr_lr);
    let jy2 = -0.25 * (rl_rl - rl_lr - lr_rl + lr_lr);

    let var = (jx2 - jx * jx).re + (jy2 - jy * jy).re;
    let n_mean = (m(&[RDag, R]) + m(&[LDag, L])).re;
    HzResult::new(var / (0.5 * n_mean))
}

/// Entropy of the Schmidt populations `|coeffs[n]|²`.
pub fn entropy_from_fock(f: &FockVector) -> EntropyResult {
    let bits: f64 = f
        .populations()
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    let e_vn = bits.max(0.0);
    EntropyResult {
        e_vn,
        e_norm: e_vn / max_entropy_bits(f.n_atoms),
    }
}
