//! Linear-response moments of the eigenvalue corrections for the Wishart
//! ensemble: matrix-element moments, exact digamma/trigamma forms and their
//! large-T asymptotics.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::theory::special::{digamma, trigamma, EULER_GAMMA};

/// c₁ = γ + ln 2 − 2 and c₂ = π²/2 − 4 of the large-T asymptotics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants {
    pub c1: f64,
    pub c2: f64,
    pub gamma_euler: f64,
}

pub const CONSTANTS: TheoryConstants = TheoryConstants {
    c1: EULER_GAMMA + LN_2 - 2.0,
    c2: PI * PI / 2.0 - 4.0,
    gamma_euler: EULER_GAMMA,
};

/// E[(C_jk)^order] for C = AAᵗ/T with N(0, σ²) entries.
///
/// Diagonal moments of any order and off-diagonal even moments come from the
/// gamma-function closed forms, evaluated through log-gamma differences.
/// Odd off-diagonal moments vanish.
pub fn element_moment(horizon: usize, variance: f64, order: u32, diagonal: bool) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    if horizon == 0 {
        return Err(Error::InvalidArgument("T must be positive".into()));
    }
    let t = horizon as f64;
    let k = order as f64;
    let half_t = 0.5 * t;
    if diagonal {
        let log = k * (2.0 * variance / t).ln() + ln_rising(half_t, order);
        return Ok(log.exp());
    }
    if order % 2 == 1 {
        return Ok(0.0);
    }
    let n = k / 2.0;
    let log = k * (variance / t).ln() + ln_gamma(k + 1.0) - ln_gamma(n + 1.0) + ln_rising(half_t, order / 2);
    Ok(log.exp())
}

/// ln Γ(x + k) − ln Γ(x), summed term by term for moderate k to avoid the
/// cancellation between two large log-gamma values.
fn ln_rising(x: f64, k: u32) -> f64 {
    if k <= 256 {
        (0..k).map(|i| (x + i as f64).ln()).sum()
    } else {
        ln_gamma(x + k as f64) - ln_gamma(x)
    }
}

/// δm₁ = α[ln(2/T) + Ψ(1 + T/2)].
pub fn delta_m1_exact(horizon: usize, alpha: f64) -> f64 {
    let t = horizon as f64;
    alpha * ((2.0 / t).ln() + digamma(1.0 + 0.5 * t).expect("positive argument"))
}

/// δm₂ to second order in α, for N series and T observations.
pub fn delta_m2_exact(horizon: usize, n_series: usize, alpha: f64) -> f64 {
    let t = horizon as f64;
    let n = n_series as f64;
    let kappa = t / n;
    let a2 = alpha * alpha;
    let ps2 = digamma(2.0 + 0.5 * t).expect("positive argument");
    let tg2 = trigamma(2.0 + 0.5 * t).expect("positive argument");
    let ps1 = digamma(1.0 + 0.5 * t).expect("positive argument");
    let tg1 = trigamma(1.0 + 0.5 * t).expect("positive argument");
    let diag = a2 * (1.0 + 2.0 / t) * (((2.0 / t).ln() + ps2).powi(2) + tg2);
    let inner = -t.ln() + 1.0 - 0.5 * EULER_GAMMA + 0.5 * ps1;
    let off = (a2 / kappa) * (1.0 - 1.0 / n) * (inner.powi(2) + 0.25 * tg1 - 1.0 + PI * PI / 8.0);
    diag + off
}

/// Large-T forms (α/T, (α²/4κ)([ln T + c₁]² + c₂)).
pub fn delta_m_asymptotic(horizon: usize, kappa: f64, alpha: f64) -> (f64, f64) {
    let t = horizon as f64;
    let c = CONSTANTS;
    (alpha / t, alpha * alpha / (4.0 * kappa) * ((t.ln() + c.c1).powi(2) + c.c2))
}

/// Conditions under which the expansion in α is known to be unreliable.
pub fn linear_response_warnings(horizon: usize, kappa: f64, alpha: f64) -> Vec<String> {
    let mut out = Vec::new();
    let log_t = (horizon.max(1) as f64).ln();
    if alpha * log_t * log_t > 0.1 {
        out.push(format!(
            "alpha * ln(T)^2 = {:.3} exceeds 0.1: linear response unreliable",
            alpha * log_t * log_t
        ));
    }
    if kappa < 0.1 {
        out.push(format!("kappa = {kappa} below 0.1: linear response unreliable at small kappa"));
    }
    out
}
