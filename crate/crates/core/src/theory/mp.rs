//! Marčenko–Pastur law for C = AAᵗ/T with element variance σ² and κ = T/N.

use std::f64::consts::PI;

/// Support endpoints λ± = σ²(κ^{-1/2} ± 1)², returned as (λ₋, λ₊).
pub fn mp_edges(kappa: f64, variance: f64) -> (f64, f64) {
    let r = kappa.powf(-0.5);
    (variance * (r - 1.0).powi(2), variance * (r + 1.0).powi(2))
}

/// Continuous part of the limiting density; integrates to min(κ, 1).
pub fn mp_density(lambda: f64, kappa: f64, variance: f64) -> f64 {
    let (lo, hi) = mp_edges(kappa, variance);
    if lambda <= lo || lambda >= hi || lambda <= 0.0 {
        return 0.0;
    }
    kappa * ((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * variance * lambda)
}

/// Weight 1 − κ of the atom at zero for κ < 1.
pub fn mp_zero_mass(kappa: f64) -> f64 {
    (1.0 - kappa).max(0.0)
}

/// Moments (1/N)Tr Cⁿ of the limiting law for n = 1, 2: (σ², σ⁴(1 + 1/κ)).
pub fn mp_moments(kappa: f64, variance: f64) -> (f64, f64) {
    (variance, variance * variance * (1.0 + 1.0 / kappa))
}
