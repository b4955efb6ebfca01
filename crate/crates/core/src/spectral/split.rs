use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensembles::SampleMatrix;
use crate::error::Result;
use crate::powermap::{power_map, Deformation};
use crate::spectral::eigvalsh;

/// Rank-paired spectra of C and C^(q).
///
/// `corrections[j] = deformed_values[j] − base_values[j]` with both spectra
/// sorted ascending. The first `emerging_count = max(N − T, 0)` corrections
/// belong to the emerging spectrum, the rest to the bulk.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub base_values: Vec<f64>,
    pub deformed_values: Vec<f64>,
    pub corrections: Vec<f64>,
    pub emerging_count: usize,
}

impl SpectralSplit {
    pub fn new(base_values: Vec<f64>, deformed_values: Vec<f64>, horizon: usize) -> Self {
        let n = base_values.len();
        assert_eq!(n, deformed_values.len(), "spectra must have equal length");
        let corrections = deformed_values.iter().zip(&base_values).map(|(a, b)| a - b).collect();
        Self {
            base_values,
            deformed_values,
            corrections,
            emerging_count: n.saturating_sub(horizon),
        }
    }

    pub fn dim(&self) -> usize {
        self.base_values.len()
    }

    pub fn emerging(&self) -> &[f64] {
        &self.corrections[..self.emerging_count]
    }

    pub fn bulk(&self) -> &[f64] {
        &self.corrections[self.emerging_count..]
    }

    /// Nonzero eigenvalues of the undeformed matrix.
    pub fn bulk_base_values(&self) -> &[f64] {
        &self.base_values[self.emerging_count..]
    }

    /// Emerging eigenvalues λ_j(α), j ≤ N − T.
    pub fn emerging_values(&self) -> &[f64] {
        &self.deformed_values[..self.emerging_count]
    }

    pub fn correction_sum(&self) -> f64 {
        self.corrections.iter().sum()
    }
}

/// Eigen-decompose C and C^(q) and pair the spectra by rank.
pub fn split_spectrum(c: &SampleMatrix, d: Deformation) -> Result<SpectralSplit> {
    split_matrix(&c.entries, c.shape.horizon(), d)
}

pub fn split_matrix(c: &DMatrix<f64>, horizon: usize, d: Deformation) -> Result<SpectralSplit> {
    let base = eigvalsh(c)?;
    let deformed = if d.q() == 1.0 { base.clone() } else { eigvalsh(&power_map(c, d))? };
    Ok(SpectralSplit::new(base, deformed, horizon))
}

/// Size of the largest upward jump in `values` (sorted ascending) relative to
/// the spread of everything below it.
///
/// Returns `(gap, width)` for the topmost element: `gap` is its distance to
/// the next-largest value and `width` the range of the remaining values.
pub fn top_separation(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 3 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    Some((sorted[k - 1] - sorted[k - 2], sorted[k - 2] - sorted[0]))
}

/// Separation of the most isolated extreme element of `values`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isolation {
    /// Distance from the extreme element to its neighbour.
    pub gap: f64,
    /// Range of the remaining elements.
    pub width: f64,
    /// Whether the isolated element is the largest (else the smallest).
    pub at_top: bool,
}

impl Isolation {
    pub fn ratio(&self) -> f64 {
        self.gap / self.width
    }
}

/// Checks both ends of the spectrum and returns the one with the larger
/// gap-to-width ratio.
pub fn isolated_extreme(values: &[f64]) -> Option<Isolation> {
    let (top_gap, top_width) = top_separation(values)?;
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let (bot_gap, bot_width) = top_separation(&negated)?;
    if top_gap * bot_width >= bot_gap * top_width {
        Some(Isolation {
            gap: top_gap,
            width: top_width,
            at_top: true,
        })
    } else {
        Some(Isolation {
            gap: bot_gap,
            width: bot_width,
            at_top: false,
        })
    }
}
