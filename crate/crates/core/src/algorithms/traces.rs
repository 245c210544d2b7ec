use nalgebra::DVector;

use crate::scalar::Real;

/// `F ← γ ρ_prev F + 1`.
#[inline]
pub fn followon_step<T: Real>(f: T, rho_prev: T, gamma: T) -> T {
    gamma * rho_prev * f + T::one()
}

/// Follow-on trace `F`, emphasis `M` and eligibility trace `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState<T: Real> {
    pub f: T,
    pub m: T,
    pub e: DVector<T>,
}

impl<T: Real> TraceState<T> {
    /// Restart: `F = M = 1`, `e = φ(s)`.
    pub fn restart(phi: DVector<T>) -> Self {
        Self {
            f: T::one(),
            m: T::one(),
            e: phi,
        }
    }

    /// One trace update with the ratio of the previous step and the
    /// features of the new state: `F` first, then `M`, then `e`.
    #[inline]
    pub fn advance(&mut self, gamma: T, lambda: T, rho_prev: T, phi_next: &DVector<T>) {
        self.f = followon_step(self.f, rho_prev, gamma);
        self.m = lambda + (T::one() - lambda) * self.f;
        self.e *= gamma * lambda * rho_prev;
        self.e.axpy(self.m, phi_next, T::one());
    }
}
