use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralSplit;

/// First two moments of the corrections of one realization, each divided by N.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RealizationMoments {
    pub emerging: [f64; 2],
    pub bulk: [f64; 2],
}

impl RealizationMoments {
    pub fn from_split(split: &SpectralSplit) -> Self {
        let n = split.dim() as f64;
        let sums = |xs: &[f64]| {
            let (s1, s2) = xs.iter().fold((0.0, 0.0), |(a, b), x| (a + x, b + x * x));
            [s1 / n, s2 / n]
        };
        Self {
            emerging: sums(split.emerging()),
            bulk: sums(split.bulk()),
        }
    }

    pub fn total(&self) -> [f64; 2] {
        [self.emerging[0] + self.bulk[0], self.emerging[1] + self.bulk[1]]
    }
}

/// Ensemble-averaged δm_n (total), δm_n⁽⁰⁾ (emerging) and δm_nᵐᵖ (bulk), n = 1, 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub total: [f64; 2],
    pub emerging: [f64; 2],
    pub bulk: [f64; 2],
    pub realizations: usize,
    pub standard_errors: MomentErrors,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentErrors {
    pub total: [f64; 2],
    pub emerging: [f64; 2],
    pub bulk: [f64; 2],
}

impl MomentSet {
    /// Average per-realization moments. `total` is formed as emerging + bulk
    /// of the averages so the decomposition is exact.
    pub fn from_realizations(samples: &[RealizationMoments]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("no realizations"));
        }
        let pick = |f: &dyn Fn(&RealizationMoments) -> f64| -> (f64, f64) {
            let xs: Vec<f64> = samples.iter().map(f).collect();
            mean_and_stderr(&xs)
        };
        let (e1, e1s) = pick(&|m| m.emerging[0]);
        let (e2, e2s) = pick(&|m| m.emerging[1]);
        let (b1, b1s) = pick(&|m| m.bulk[0]);
        let (b2, b2s) = pick(&|m| m.bulk[1]);
        let (_, t1s) = pick(&|m| m.total()[0]);
        let (_, t2s) = pick(&|m| m.total()[1]);
        Ok(Self {
            total: [e1 + b1, e2 + b2],
            emerging: [e1, e2],
            bulk: [b1, b2],
            realizations: samples.len(),
            standard_errors: MomentErrors {
                total: [t1s, t2s],
                emerging: [e1s, e2s],
                bulk: [b1s, b2s],
            },
        })
    }
}

/// Moments over a set of spectral splits sharing (N, T).
pub fn empirical_moments(splits: &[SpectralSplit]) -> Result<MomentSet> {
    let first = splits.first().ok_or(Error::Empty("no spectral splits"))?;
    if let Some(bad) = splits
        .iter()
        .find(|s| s.dim() != first.dim() || s.emerging_count != first.emerging_count)
    {
        return Err(Error::DimensionMismatch {
            expected: first.dim(),
            actual: bad.dim(),
        });
    }
    let samples: Vec<_> = splits.iter().map(RealizationMoments::from_split).collect();
    MomentSet::from_realizations(&samples)
}

/// Sample mean and its standard error (0 for a single sample).
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(base: Vec<f64>, def: Vec<f64>, t: usize) -> SpectralSplit {
        SpectralSplit::new(base, def, t)
    }

    #[test]
    fn zero_corrections_give_zero_moments() {
        let s = split(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], 2);
        let m = empirical_moments(&[s]).unwrap();
        assert_eq!(m.total, [0.0, 0.0]);
        assert_eq!(m.emerging, [0.0, 0.0]);
        assert_eq!(m.bulk, [0.0, 0.0]);
        assert_eq!(m.realizations, 1);
    }

    #[test]
    fn full_rank_has_no_emerging_part() {
        let s = split(vec![1.0, 2.0], vec![1.5, 2.0], 5);
        let m = empirical_moments(&[s]).unwrap();
        assert_eq!(m.emerging, [0.0, 0.0]);
        assert_eq!(m.bulk, m.total);
        assert_eq!(m.total, [0.25, 0.125]);
    }

    #[test]
    fn additivity_and_errors() {
        let a = split(vec![0.0, 0.0, 1.0, 2.0], vec![0.1, 0.2, 0.9, 2.2], 2);
        let b = split(vec![0.0, 0.0, 1.0, 3.0], vec![0.3, 0.1, 1.1, 2.9], 2);
        let m = empirical_moments(&[a, b]).unwrap();
        for k in 0..2 {
            assert_eq!(m.total[k], m.emerging[k] + m.bulk[k]);
        }
        assert!(m.standard_errors.emerging[0] > 0.0);
        assert!((m.emerging[0] - (0.3 / 4.0 + 0.4 / 4.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_mixed_shapes() {
        assert!(empirical_moments(&[]).is_err());
        let a = split(vec![0.0, 1.0], vec![0.0, 1.0], 1);
        let b = split(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], 1);
        assert!(empirical_moments(&[a, b]).is_err());
    }
}
