//! Simulation and analysis of the dynamical phase transition of a perturbed
//! spin-orbit-coupled two-mode condensate.
//!
//! The condensate is reduced to two magnetized modes at `±k_m`. A lattice
//! perturbation of strength `V₀` couples them; below the critical strength
//! `V₀,crit` the pseudospin stays in the upper hemisphere of the Bloch sphere,
//! above it the atoms fully transfer. The crate computes
//!
//! * the derived constants and ground phase ([`model`]),
//! * the mean-field spin dynamics and order parameter ([`dynamics`]),
//! * the von Neumann entanglement entropy between the modes ([`entropy`]),
//! * the truncated moment hierarchy and the Hillery-Zubairy parameter ([`moments`]),
//! * finite-temperature observables for a depleted, dephased condensate ([`thermal`]),
//! * parameter sweeps and figure tables ([`harness`]),
//!
//! with an exact Fock-space evaluator ([`oracle`]) as the small-N reference.
//!
//! Energies are in units of `k0²` and times in units of `k0⁻²` (`ħ = m = 1`).

pub mod config;
pub mod csv;
pub mod dynamics;
pub mod entropy;
pub mod harness;
pub mod integrate;
pub mod model;
pub mod moments;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod state;
pub mod thermal;

pub use dynamics::Trajectory;
pub use entropy::EntropyResult;
pub use model::{derive, classify_ground_phase, Derived, GroundPhase, ModelParams, ParamError};
pub use moments::{HzResult, MomentState, MomentTrajectory};
pub use state::{BlochVector, SpinorState};
