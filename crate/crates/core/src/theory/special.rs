//! Digamma and trigamma for positive arguments.
//!
//! Both shift the argument above 8 with the upward recurrence and finish with
//! the Bernoulli asymptotic series, truncated after the B₁₆ term.

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SHIFT: f64 = 8.0;

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("argument {x} must be positive and finite")))
    }
}

/// Ψ(x) = d ln Γ(x)/dx.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let z = inv * inv;
    // −Σ B_2k / (2k x^2k), k = 1..8
    let series = z
        * (-1.0 / 12.0
            + z * (1.0 / 120.0
                + z * (-1.0 / 252.0
                    + z * (1.0 / 240.0
                        + z * (-1.0 / 132.0 + z * (691.0 / 32760.0 + z * (-1.0 / 12.0 + z * 3617.0 / 8160.0)))))));
    Ok(acc + x.ln() - 0.5 * inv + series)
}

/// Ψ′(x).
pub fn trigamma(x: f64) -> Result<f64> {
    check_positive(x)?;
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let z = inv * inv;
    // Σ B_2k / x^(2k+1), k = 1..8
    let series = inv
        * z
        * (1.0 / 6.0
            + z * (-1.0 / 30.0
                + z * (1.0 / 42.0
                    + z * (-1.0 / 30.0
                        + z * (5.0 / 66.0 + z * (-691.0 / 2730.0 + z * (7.0 / 6.0 + z * -3617.0 / 510.0)))))));
    Ok(acc + inv + 0.5 * z + series)
}
