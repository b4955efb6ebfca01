use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binned density whose integral over the bins equals `normalization`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityHistogram {
    pub bin_edges: Vec<f64>,
    /// Density per unit length in each bin.
    pub density: Vec<f64>,
    pub normalization: f64,
    pub below: usize,
    pub above: usize,
    pub in_range: usize,
}

impl DensityHistogram {
    pub fn bins(&self) -> usize {
        self.density.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.bin_edges[i + 1] - self.bin_edges[i]
    }

    pub fn center(&self, i: usize) -> f64 {
        0.5 * (self.bin_edges[i] + self.bin_edges[i + 1])
    }

    /// Integrated mass of bin `i`.
    pub fn bin_mass(&self, i: usize) -> f64 {
        self.density[i] * self.width(i)
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.bins()).map(|i| self.bin_mass(i)).sum()
    }

    /// Σ |ρ_i − θ_i| Δ_i against bin-averaged reference densities θ.
    pub fn l1_distance(&self, reference: &[f64]) -> f64 {
        assert_eq!(reference.len(), self.bins());
        (0..self.bins()).map(|i| (self.density[i] - reference[i]).abs() * self.width(i)).sum()
    }
}

/// Histogram `values` on `bins` equal bins over `[lo, hi]`, scaled so the
/// in-range mass equals `normalization`. The top edge is inclusive.
pub fn histogram(values: &[f64], bins: usize, range: (f64, f64), normalization: f64) -> Result<DensityHistogram> {
    let (lo, hi) = range;
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least one bin".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("bad histogram range [{lo}, {hi}]")));
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    let (mut below, mut above) = (0, 0);
    for &v in values {
        if v < lo || v.is_nan() {
            below += 1;
        } else if v > hi {
            above += 1;
        } else {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    let in_range: usize = counts.iter().sum();
    let density = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if in_range == 0 {
                0.0
            } else {
                normalization * c as f64 / (in_range as f64 * (bin_edges[i + 1] - bin_edges[i]))
            }
        })
        .collect();
    Ok(DensityHistogram {
        bin_edges,
        density,
        normalization,
        below,
        above,
        in_range,
    })
}

/// Default range for emerging spectra: mean ± 5 standard deviations.
pub fn emerging_range(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let half = if sd > 0.0 { 5.0 * sd } else { mean.abs().max(1e-12) };
    (mean - half, mean + half)
}

/// Default range for bulk eigenvalues: [0, 1.2 λ₊].
pub fn bulk_range(upper_edge: f64) -> (f64, f64) {
    (0.0, 1.2 * upper_edge)
}
