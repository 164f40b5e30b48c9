use num_complex::Complex64 as C64;

/// Mean-field amplitudes of the two magnetized modes, `α` on `ψ_R` (at `+k_m`)
/// and `β` on `ψ_L` (at `−k_m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorState {
    pub alpha: C64,
    pub beta: C64,
}

/// Pseudospin Pauli expectation values, with `sx = 2 Re(ᾱβ)`,
/// `sy = 2 Im(ᾱβ)` and `sz = |α|² − |β|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl SpinorState {
    pub fn new(alpha: C64, beta: C64) -> Self {
        SpinorState { alpha, beta }
    }

    /// All atoms in the `+k_m` magnetized mode.
    pub fn magnetized_right() -> Self {
        SpinorState::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    /// Real, normalized state with population `pop_right` in the `+k_m` mode.
    pub fn from_population(pop_right: f64) -> Self {
        let p = pop_right.clamp(0.0, 1.0);
        SpinorState::new(C64::new(p.sqrt(), 0.0), C64::new((1.0 - p).sqrt(), 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        SpinorState::new(self.alpha / n, self.beta / n)
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite()
    }

    /// Spin components of the normalized state; integration drift in the
    /// norm does not leak into them.
    pub fn bloch(&self) -> BlochVector {
        let coherence = self.alpha.conj() * self.beta / self.norm_sqr();
        BlochVector {
            sx: 2.0 * coherence.re,
            sy: 2.0 * coherence.im,
            sz: self.sz(),
        }
    }

    /// Bilinears `2ᾱβ` and `|α|²−|β|²` without normalizing; these are what
    /// the equations of motion see.
    pub(crate) fn raw_bloch(&self) -> BlochVector {
        let coherence = self.alpha.conj() * self.beta;
        BlochVector {
            sx: 2.0 * coherence.re,
            sy: 2.0 * coherence.im,
            sz: self.alpha.norm_sqr() - self.beta.norm_sqr(),
        }
    }

    pub fn sz(&self) -> f64 {
        let (a, b) = (self.alpha.norm_sqr(), self.beta.norm_sqr());
        (a - b) / (a + b)
    }

    /// Fraction of the norm carried by the `+k_m` mode.
    pub fn pop_right(&self) -> f64 {
        self.alpha.norm_sqr() / self.norm_sqr()
    }

    pub(crate) fn to_array(self) -> [f64; 4] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im]
    }

    pub(crate) fn from_array(y: &[f64; 4]) -> Self {
        SpinorState::new(C64::new(y[0], y[1]), C64::new(y[2], y[3]))
    }
}

impl BlochVector {
    pub fn length_sqr(&self) -> f64 {
        self.sx * self.sx + self.sy * self.sy + self.sz * self.sz
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bloch_components() {
        let s = SpinorState::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let b = s.bloch();
        assert_relative_eq!(b.sz, 0.36 - 0.64, epsilon = 1e-15);
        assert_relative_eq!(b.sx, 0.0, epsilon = 1e-15);
        assert_relative_eq!(b.sy, 2.0 * 0.6 * 0.8, epsilon = 1e-15);
        assert_relative_eq!(b.length_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn population_constructor() {
        let s = SpinorState::from_population(0.5);
        assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.bloch().sx, 1.0, epsilon = 1e-15);
        assert_eq!(SpinorState::from_population(1.0), SpinorState::magnetized_right());
    }
}
