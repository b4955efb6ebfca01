//! Rescaled and shifted Marčenko–Pastur ansatz for the density of the bulk
//! eigenvalue corrections, with scale s and shift r.
//!
//! The density is that of s·λ + r for λ drawn from the unit-variance
//! Marčenko–Pastur law, so its support is s(κ^{-1/2} ± 1)² + r. The support
//! ends are ordered by value since s < 0 for α > 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::linear_response::CONSTANTS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParams {
    pub s: f64,
    pub r: f64,
}

impl AnsatzParams {
    pub fn new(s: f64, r: f64) -> Self {
        Self { s, r }
    }

    /// Support endpoints (low, high).
    pub fn support(&self, kappa: f64) -> (f64, f64) {
        let root = kappa.powf(-0.5);
        let a = self.s * (root - 1.0).powi(2) + self.r;
        let b = self.s * (root + 1.0).powi(2) + self.r;
        (a.min(b), a.max(b))
    }
}

/// κ√((δλ₊ − δλ)(δλ − δλ₋)) / (2π(δλ − r)s) on the support, 0 outside.
pub fn ansatz_density(dl: f64, p: AnsatzParams, kappa: f64) -> Result<f64> {
    if p.s == 0.0 {
        return Err(Error::InvalidArgument("ansatz scale s must be nonzero".into()));
    }
    let (lo, hi) = p.support(kappa);
    if dl < lo || dl > hi {
        return Ok(0.0);
    }
    if dl == p.r {
        return Err(Error::AnsatzPole { r: p.r });
    }
    let rad = (hi - dl) * (dl - lo);
    Ok(kappa * rad.max(0.0).sqrt() / (2.0 * PI * (dl - p.r) * p.s))
}

/// First two moments of the ansatz density (the forward map of [`ansatz_invert`]).
pub fn ansatz_moments(p: AnsatzParams, kappa: f64) -> (f64, f64) {
    let AnsatzParams { s, r } = p;
    let q = 1.0 + 1.0 / kappa;
    if kappa >= 1.0 {
        let m1 = s + r;
        (m1, q * s * s - r * r + 2.0 * r * m1)
    } else {
        let m1 = s + kappa * r;
        (m1, q * s * s - r * r * kappa + 2.0 * r * m1)
    }
}

/// Recover (s, r) from the first two moments. For κ ≥ 1 pass the total
/// moments (δm₁, δm₂); for κ ≤ 1 pass the bulk moments (δm₁ᵐᵖ, δm₂ᵐᵖ).
pub fn ansatz_invert(m1: f64, m2: f64, kappa: f64) -> Result<AnsatzParams> {
    if kappa >= 1.0 {
        let radicand = kappa * (m2 - m1 * m1);
        let s = -checked_sqrt(radicand)?;
        Ok(AnsatzParams { s, r: m1 - s })
    } else {
        let radicand = m2 - m1 * m1 / kappa;
        let s = -checked_sqrt(radicand)?;
        Ok(AnsatzParams {
            s,
            r: (m1 - s) / kappa,
        })
    }
}

pub(crate) fn checked_sqrt(radicand: f64) -> Result<f64> {
    if radicand < 0.0 || radicand.is_nan() {
        Err(Error::NegativeRadicand { radicand })
    } else {
        Ok(radicand.sqrt())
    }
}

/// N-independent large-T forms of s and r.
pub fn ansatz_asymptotic(horizon: usize, alpha: f64) -> AnsatzParams {
    let t = horizon as f64;
    let root = ((t.ln() + CONSTANTS.c1).powi(2) + CONSTANTS.c2).sqrt();
    AnsatzParams {
        s: -0.5 * alpha * root,
        r: alpha * (1.0 / t + 0.5 * root),
    }
}

/// Bulk moments for κ ≤ 1 from total moments and the extrapolated scale s:
/// (κδm₁ + s(1 − κ), κδm₂ − κδm₁² + (δm₁ᵐᵖ)²/κ).
pub fn bulk_moment_extrapolation(dm1: f64, dm2: f64, s: f64, kappa: f64) -> (f64, f64) {
    let b1 = kappa * dm1 + s * (1.0 - kappa);
    (b1, kappa * dm2 - kappa * dm1 * dm1 + b1 * b1 / kappa)
}

/// Large-T emerging-spectrum moments (−s(1 − κ), s²(1 − κ)).
pub fn emerging_moments(s: f64, kappa: f64) -> (f64, f64) {
    (-s * (1.0 - kappa), s * s * (1.0 - kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;
    use proptest::prelude::*;

    fn integral(p: AnsatzParams, kappa: f64, power: i32) -> f64 {
        let (lo, hi) = p.support(kappa);
        integrate(
            |x| x.powi(power) * ansatz_density(x, p, kappa).unwrap_or(0.0),
            lo,
            hi,
            1e-13,
            1e-12,
        )
        .value
    }

    #[test]
    fn outside_support_is_zero() {
        let p = AnsatzParams::new(-1.0, 1.0);
        assert_eq!(ansatz_density(5.0, p, 0.5).unwrap(), 0.0);
        assert_eq!(ansatz_density(-100.0, p, 0.5).unwrap(), 0.0);
        assert!(ansatz_density(0.0, AnsatzParams::new(0.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn normalization_by_quadrature() {
        for &kappa in &[0.25, 0.5, 1.0, 2.0, 3.0] {
            for &(s, r) in &[(-1.0, 1.0), (-2e-3, 3e-3), (0.5, -0.2)] {
                let p = AnsatzParams::new(s, r);
                let mass = integral(p, kappa, 0);
                assert!((mass - kappa.min(1.0)).abs() < 1e-6, "κ={kappa} s={s}: {mass}");
            }
        }
    }

    #[test]
    fn quadrature_moments_match_forward_map() {
        for &kappa in &[0.5, 1.0, 2.0] {
            let p = AnsatzParams::new(-0.7, 0.4);
            let (m1, m2) = ansatz_moments(p, kappa);
            let scale = 0.7f64.max(0.4);
            assert!((integral(p, kappa, 1) - m1).abs() < 1e-6 * scale);
            assert!((integral(p, kappa, 2) - m2).abs() < 1e-6 * scale);
        }
        // s = −1, r = 1, κ = 1: first moment s + r = 0
        let p = AnsatzParams::new(-1.0, 1.0);
        assert!(integral(p, 1.0, 1).abs() < 1e-6);
    }

    #[test]
    fn pole_is_reported() {
        // κ = 1 puts r on the support edge
        let p = AnsatzParams::new(-1.0, 1.0);
        assert!(matches!(ansatz_density(1.0, p, 1.0), Err(Error::AnsatzPole { .. })));
    }

    #[test]
    fn inversion_edge_cases() {
        let p = ansatz_invert(0.3, 0.09, 2.0).unwrap();
        assert_eq!((p.s, p.r), (-0.0, 0.3));
        assert!(matches!(ansatz_invert(0.3, 0.0, 2.0), Err(Error::NegativeRadicand { .. })));
        let a = ansatz_invert(0.01, 0.002, 1.0).unwrap();
        let (m1, m2) = (0.01, 0.002);
        let b_s = -(m2 - m1 * m1 / 1.0f64).sqrt();
        assert_eq!(a.s, b_s);
        assert_eq!(a.r, (m1 - b_s) / 1.0);
    }

    #[test]
    fn asymptotic_values() {
        assert_eq!(ansatz_asymptotic(100, 0.0), AnsatzParams::new(-0.0, 0.0));
        let p = ansatz_asymptotic(512, 1e-3);
        assert!((p.s - -2.798e-3).abs() < 3e-6, "{}", p.s);
        for t in [2usize, 10, 512, 10_000] {
            let p = ansatz_asymptotic(t, 0.01);
            assert!((p.s + p.r - 0.01 / t as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn extrapolation_and_emerging() {
        let (b1, b2) = bulk_moment_extrapolation(0.2, 0.1, -0.3, 1.0);
        assert!((b1 - 0.2).abs() < 1e-15 && (b2 - 0.1).abs() < 1e-15);
        assert_eq!(bulk_moment_extrapolation(0.2, 0.1, 0.0, 0.5).0, 0.1);
        assert_eq!(emerging_moments(-0.3, 1.0), (0.0, 0.0));
        assert_eq!(emerging_moments(-0.5, 0.5), (0.25, 0.125));
        // emerging + extrapolated bulk = κ·δm₁; the remaining (1 − κ)δm₁ = (1 − κ)α/T
        // is the term dropped by the large-T emerging form
        let (alpha, t, kappa) = (1e-3, 256usize, 0.5);
        let p = ansatz_asymptotic(t, alpha);
        let dm1 = p.s + p.r;
        let (e1, _) = emerging_moments(p.s, kappa);
        let (b1, _) = bulk_moment_extrapolation(dm1, 0.0, p.s, kappa);
        assert!((e1 + b1 - kappa * dm1).abs() < 1e-18);
        assert!(((e1 + b1) - dm1).abs() <= (1.0 - kappa) * alpha / t as f64 + 1e-18);
    }

    proptest! {
        #[test]
        fn round_trip(s in -1.0f64..-1e-6, r in -1.0f64..1.0, kappa in 0.05f64..5.0) {
            let p = AnsatzParams::new(s, r);
            let (m1, m2) = ansatz_moments(p, kappa);
            let back = ansatz_invert(m1, m2, kappa).unwrap();
            prop_assert!((back.s - s).abs() <= 1e-12 * (1.0 + s.abs() + r.abs()) / s.abs().min(1.0));
            prop_assert!((back.r - r).abs() <= 1e-12 * (1.0 + s.abs() + r.abs()) / (s.abs() * kappa.min(1.0)).min(1.0));
        }

        #[test]
        fn emerging_relation(s in -1.0f64..1.0, kappa in 0.0f64..1.0) {
            let (e1, e2) = emerging_moments(s, kappa);
            prop_assert!((e2 * (1.0 - kappa) - e1 * e1).abs() <= 1e-15 * (1.0 + e1 * e1));
        }
    }
}
