//! Closed forms for the correlated ensemble with a single dense block,
//! ξ = (1 − c)I + c eeᵗ. The bulk behaves like the uncorrelated ensemble with
//! variance 1 − c; one eigenvalue separates once c ≥ (N√κ)⁻¹.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::theory::ansatz::{checked_sqrt, AnsatzParams};
use crate::theory::linear_response::CONSTANTS;
use crate::theory::mp::mp_density;

/// Bulk density at `lambda` and the position of the separated eigenvalue when present.
pub fn oneblock_density(lambda: f64, n: usize, kappa: f64, c: f64) -> (f64, Option<f64>) {
    (mp_density(lambda, kappa, 1.0 - c), separated_position(n, kappa, c))
}

/// (Nc + 1 − c)(Ncκ + 1 − c)/(Ncκ) if c ≥ (N√κ)⁻¹.
pub fn separated_position(n: usize, kappa: f64, c: f64) -> Option<f64> {
    let nf = n as f64;
    if c <= 0.0 || c < 1.0 / (nf * kappa.sqrt()) {
        return None;
    }
    Some((nf * c + 1.0 - c) * (nf * c * kappa + 1.0 - c) / (nf * c * kappa))
}

/// Large-T (δm₁, δm₂) of the bulk corrections with variance rescaled to 1 − c.
pub fn oneblock_delta_moments(horizon: usize, kappa: f64, c: f64, alpha: f64) -> (f64, f64) {
    let t = horizon as f64;
    let v = 1.0 - c;
    let m1 = alpha * v * v.ln();
    let bracket = (t.ln() + CONSTANTS.c1 - 2.0 * v.ln()).powi(2) + CONSTANTS.c2;
    (m1, m1 * m1 + alpha * alpha * v * v / (4.0 * kappa) * bracket)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneBlockAnsatz {
    pub params: AnsatzParams,
    /// Extrapolated bulk-correction moments (δm₁⁽¹⁾, δm₂⁽¹⁾) for κ ≤ 1.
    pub bulk: (f64, f64),
}

/// Scale and shift from total moments, plus extrapolated bulk moments.
pub fn oneblock_ansatz(dm1: f64, dm2: f64, c: f64, kappa: f64) -> Result<OneBlockAnsatz> {
    let v = 1.0 - c;
    let s = -checked_sqrt(kappa * (dm2 - dm1 * dm1) / (v * v))?;
    let r = dm1 - s * v;
    let b1 = kappa * dm1 + v * s * (1.0 - kappa);
    let b2 = kappa * dm2 - kappa * dm1 * dm1 + b1 * b1 / kappa;
    Ok(OneBlockAnsatz {
        params: AnsatzParams { s, r },
        bulk: (b1, b2),
    })
}

/// Moments of the ansatz built on the one-block bulk density, whose own first
/// two moments are (1 − c) and (1 − c)²(1 + 1/κ).
pub fn oneblock_ansatz_moments(p: AnsatzParams, c: f64, kappa: f64) -> (f64, f64) {
    let m1 = 1.0 - c;
    let m2 = (1.0 - c).powi(2) * (1.0 + 1.0 / kappa);
    let AnsatzParams { s, r } = p;
    if kappa >= 1.0 {
        (s * m1 + r, m2 * s * s + r * r + 2.0 * s * r * m1)
    } else {
        (s * m1 + kappa * r, m2 * s * s + r * r * kappa + 2.0 * s * r * m1)
    }
}

/// Estimate α λ̄ ln(λ̄²)/2 of the mean correction to a well separated eigenvalue.
pub fn largest_correction_estimate(lambda_max_mean: f64, alpha: f64) -> f64 {
    0.5 * alpha * lambda_max_mean * (lambda_max_mean * lambda_max_mean).ln()
}
