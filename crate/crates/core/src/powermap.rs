//! Entrywise power map C_kl → sign(C_kl)|C_kl|^q and its first-order
//! expansion in α = q − 1.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent q ≥ 1 of the power map; α = q − 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Deformation {
    q: f64,
}

impl Deformation {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent {q} is not finite")));
        }
        if q < 1.0 {
            return Err(Error::ExponentBelowOne { q });
        }
        Ok(Self { q })
    }

    pub fn from_alpha(alpha: f64) -> Result<Self> {
        Self::new(1.0 + alpha)
    }

    pub fn identity() -> Self {
        Self { q: 1.0 }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.q - 1.0
    }
}

impl TryFrom<f64> for Deformation {
    type Error = Error;

    fn try_from(q: f64) -> Result<Self> {
        Self::new(q)
    }
}

impl From<Deformation> for f64 {
    fn from(d: Deformation) -> f64 {
        d.q
    }
}

/// sign(x)|x|^q with 0 ↦ 0.
#[inline]
pub fn power_entry(x: f64, q: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if q == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(q)
    }
}

/// x + (α/2)·x·ln(x²), with the correction taken as 0 at x = 0.
#[inline]
pub fn linear_response_entry(x: f64, alpha: f64) -> f64 {
    if x == 0.0 || alpha == 0.0 {
        x
    } else {
        x + 0.5 * alpha * x * (x * x).ln()
    }
}

/// Apply the power map entrywise. Only the upper triangle is evaluated and
/// mirrored, so the output is exactly symmetric.
pub fn power_map(c: &DMatrix<f64>, d: Deformation) -> DMatrix<f64> {
    let q = d.q();
    map_symmetric(c, |x| power_entry(x, q))
}

/// First-order expansion C + (α/2) C∘ln(C∘C).
pub fn linear_response_map(c: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    map_symmetric(c, |x| linear_response_entry(x, alpha))
}

fn map_symmetric(c: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = c.nrows();
    let mut out = DMatrix::zeros(n, c.ncols());
    for j in 0..c.ncols() {
        for i in 0..=j.min(n.saturating_sub(1)) {
            let v = f(c[(i, j)]);
            out[(i, j)] = v;
            if j < n && i < c.ncols() {
                out[(j, i)] = v;
            }
        }
    }
    out
}
