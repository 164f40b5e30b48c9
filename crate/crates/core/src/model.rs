//! Physical parameters of the Raman-dressed two-component condensate and the
//! constants derived from them.
//!
//! Every derived energy is stored in units of `k0²` and every momentum in
//! units of `k0`; the raw `k0` only enters when converting user input.

use thiserror::Error;

/// Ratio `g_a / g_s` used when the inter-component interaction is not given
/// explicitly. Matches the scattering-length ratio of the two ⁸⁷Rb hyperfine
/// states usually used for Raman-induced spin-orbit coupling.
pub const DEFAULT_GA_OVER_GS: f64 = 0.9987;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("k0 must be positive and finite, got {0}")]
    NonPositiveK0(f64),
    #[error("{key} must be finite and non-negative, got {value}")]
    Negative { key: &'static str, value: f64 },
    #[error("omega = {omega} k0^2 leaves no double minimum (requires omega < 2 k0^2)")]
    NoDoubleMinimum { omega: f64 },
    #[error("gs_n = {gs_n} must exceed ga_n = {ga_n} (G2 > 0)")]
    NonPositiveG2 { gs_n: f64, ga_n: f64 },
    #[error("n_atoms must be at least 1")]
    NoAtoms,
}

impl ParamError {
    /// Config key the error refers to.
    pub fn key(&self) -> &'static str {
        match self {
            ParamError::NonPositiveK0(_) => "k0",
            ParamError::Negative { key, .. } => key,
            ParamError::NoDoubleMinimum { .. } => "omega",
            ParamError::NonPositiveG2 { .. } => "ga_n",
            ParamError::NoAtoms => "n_atoms",
        }
    }
}

/// User-facing physical inputs, in whatever unit system `k0` defines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Raman wave number.
    pub k0: f64,
    /// Raman coupling strength Ω.
    pub omega: f64,
    /// Intra-component interaction energy `g_s n`.
    pub gs_n: f64,
    /// Inter-component interaction energy `g_a n`.
    pub ga_n: f64,
    /// Total atom number N.
    pub n_atoms: u32,
    /// Strength of the lattice perturbation V₀.
    pub v0: f64,
}

impl ModelParams {
    /// Parameters with `k0 = 1`, `g_a n` at its default ratio and no perturbation.
    pub fn new(omega: f64, gs_n: f64, n_atoms: u32) -> Self {
        ModelParams {
            k0: 1.0,
            omega,
            gs_n,
            ga_n: DEFAULT_GA_OVER_GS * gs_n,
            n_atoms,
            v0: 0.0,
        }
    }

    pub fn with_v0(mut self, v0: f64) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_ga_n(mut self, ga_n: f64) -> Self {
        self.ga_n = ga_n;
        self
    }

    pub fn with_n_atoms(mut self, n_atoms: u32) -> Self {
        self.n_atoms = n_atoms;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.k0.is_finite() && self.k0 > 0.0) {
            return Err(ParamError::NonPositiveK0(self.k0));
        }
        for (key, value) in [
            ("omega", self.omega),
            ("gs_n", self.gs_n),
            ("ga_n", self.ga_n),
            ("v0", self.v0),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParamError::Negative { key, value });
            }
        }
        if self.n_atoms == 0 {
            return Err(ParamError::NoAtoms);
        }
        let k0_sq = self.k0 * self.k0;
        if self.omega >= 2.0 * k0_sq {
            return Err(ParamError::NoDoubleMinimum {
                omega: self.omega / k0_sq,
            });
        }
        if self.gs_n <= self.ga_n {
            return Err(ParamError::NonPositiveG2 {
                gs_n: self.gs_n,
                ga_n: self.ga_n,
            });
        }
        Ok(())
    }

    /// V₀ expressed in units of `k0²`.
    pub fn v0_reduced(&self) -> f64 {
        self.v0 / (self.k0 * self.k0)
    }

    /// Critical perturbation strength in the caller's units (not `k0²`).
    pub fn v0_crit(&self) -> Result<f64, ParamError> {
        Ok(derive(self)?.v0_crit * self.k0 * self.k0)
    }
}

/// Constants derived from [`ModelParams`], all in `k0`-reduced units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    /// Condensate momentum `k_m`, identified with the single-particle minimum.
    pub km: f64,
    /// Spinor mixing angle θ.
    pub theta: f64,
    /// `G₁ = n (g_s + g_a) / 4`.
    pub g1: f64,
    /// `G₂ = n (g_s − g_a) / 4`.
    pub g2: f64,
    /// Stripe-phase interaction energy `E_s = 2 G₁ cos²θ sin²θ`.
    pub es: f64,
    /// Magnetized-phase interaction energy `E_m = G₂ cos²2θ`.
    pub em: f64,
    /// Perturbation-induced coupling `V_p = V₀ cosθ sinθ / 2`.
    pub vp: f64,
    /// Critical perturbation strength `2 (E_s − E_m) / sin 2θ`.
    pub v0_crit: f64,
    pub omega_c1: f64,
    pub omega_c2: f64,
}

impl Derived {
    /// `sin 2θ`, equal to `Ω / 2` in reduced units.
    pub fn sin_2theta(&self) -> f64 {
        (2.0 * self.theta).sin()
    }

    /// The same constants with a different perturbation strength (in `k0²`).
    pub fn with_v0(mut self, v0: f64) -> Self {
        self.vp = 0.25 * v0 * self.sin_2theta();
        self
    }

    /// Perturbation strength (in `k0²`) giving the coupling `vp`.
    pub fn v0(&self) -> f64 {
        4.0 * self.vp / self.sin_2theta()
    }

    /// Nonlinear coefficient `E_s − E_m` that competes with `V_p`.
    pub fn kappa(&self) -> f64 {
        self.es - self.em
    }

    /// Linear Rabi estimate of the oscillation period, `π / V_p`.
    ///
    /// Falls back to the coupling at the critical point when `V_p = 0`, so
    /// that unperturbed runs still get a finite time scale.
    pub fn period_estimate(&self) -> f64 {
        let vp = if self.vp > 0.0 {
            self.vp
        } else {
            0.25 * self.v0_crit * self.sin_2theta()
        };
        std::f64::consts::PI / vp
    }
}

/// Ground phase of the unperturbed condensate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroundPhase {
    Stripe,
    Magnetized,
    Normal,
}

impl std::fmt::Display for GroundPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            GroundPhase::Stripe => "stripe",
            GroundPhase::Magnetized => "magnetized",
            GroundPhase::Normal => "normal",
        };
        f.write_str(name)
    }
}

pub fn derive(params: &ModelParams) -> Result<Derived, ParamError> {
    params.validate()?;
    let k0_sq = params.k0 * params.k0;
    let omega = params.omega / k0_sq;
    let gs_n = params.gs_n / k0_sq;
    let ga_n = params.ga_n / k0_sq;
    let v0 = params.v0 / k0_sq;

    // tan 2θ = Ω / (2 k_m) with k_m = sqrt(1 − Ω²/4) reduces to sin 2θ = Ω / 2.
    let half_omega = 0.5 * omega;
    let km = ((1.0 - half_omega) * (1.0 + half_omega)).sqrt();
    let theta = 0.5 * half_omega.asin();
    let sin_2theta = half_omega;
    let cos_2theta_sq = km * km;

    let g1 = 0.25 * (gs_n + ga_n);
    let g2 = 0.25 * (gs_n - ga_n);
    // 2 cos²θ sin²θ = sin²2θ / 2
    let es = 0.5 * g1 * sin_2theta * sin_2theta;
    let em = g2 * cos_2theta_sq;
    let vp = 0.25 * v0 * sin_2theta;
    let v0_crit = 2.0 * (es - em) / sin_2theta;

    let omega_c1 = 2.0 * (1.0 - 2.0 * g2);
    let omega_c2 = 2.0 * ((1.0 + g1) * (1.0 - 2.0 * g2) * 2.0 * g2 / (g1 + 2.0 * g2)).sqrt();

    Ok(Derived {
        km,
        theta,
        g1,
        g2,
        es,
        em,
        vp,
        v0_crit,
        omega_c1,
        omega_c2,
    })
}

/// Equalities resolve towards the larger-Ω phase.
pub fn classify_ground_phase(params: &ModelParams) -> Result<GroundPhase, ParamError> {
    let d = derive(params)?;
    let omega = params.omega / (params.k0 * params.k0);
    Ok(if omega < d.omega_c2 {
        GroundPhase::Stripe
    } else if omega < d.omega_c1 {
        GroundPhase::Magnetized
    } else {
        GroundPhase::Normal
    })
}

/// Lower and upper single-particle subband energies `(E⁻, E⁺)` at momentum
/// `kx` along the coupling direction, in the caller's units.
pub fn single_particle_dispersion(params: &ModelParams, kx: f64) -> (f64, f64) {
    let kinetic = 0.5 * kx * kx;
    let gap = (params.k0 * params.k0 * kx * kx + 0.25 * params.omega * params.omega).sqrt();
    (kinetic - gap, kinetic + gap)
}
