//! Experiment configuration. Every field except `experiment` is optional in
//! the JSON file; missing values fall back to per-experiment defaults when the
//! configuration is resolved.

use std::path::{Path, PathBuf};

use emspec::ensembles::{Block, CorrelationKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    WoeEmerging,
    CwoeOneBlock,
    CwoeBlocks,
    CwoeBanded,
    Portfolio,
    TheoryTable,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::WoeEmerging => "woe-emerging",
            ExperimentKind::CwoeOneBlock => "cwoe-one-block",
            ExperimentKind::CwoeBlocks => "cwoe-blocks",
            ExperimentKind::CwoeBanded => "cwoe-banded",
            ExperimentKind::Portfolio => "portfolio",
            ExperimentKind::TheoryTable => "theory-table",
        }
    }

    /// Whether the run compares empirical spectral moments with linear response.
    pub fn compares_moments(&self) -> bool {
        !matches!(self, ExperimentKind::Portfolio)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bulk_range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emerging_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_series: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// T-grid for portfolio sweeps and theory tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<CorrelationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<HistogramSpec>,
    /// Portfolio exponent grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<Vec<f64>>,
    /// Portfolio model blocks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Block>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volatility_range: Option<[f64; 2]>,
    /// Resolvent broadening for the banded density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Number of realizations whose eigenvectors feed the block overlap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap_realizations: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            n_series: None,
            horizon: None,
            kappa: None,
            horizons: None,
            variance: None,
            q: None,
            alpha: None,
            xi: None,
            realizations: None,
            master_seed: None,
            output_dir: None,
            histogram: None,
            q_grid: None,
            blocks: None,
            volatility_range: None,
            epsilon: None,
            overlap_realizations: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn n_series(&self) -> usize {
        self.n_series.unwrap_or(match self.experiment {
            ExperimentKind::WoeEmerging => 256,
            ExperimentKind::Portfolio => self.portfolio_blocks().iter().map(|b| b.size).sum(),
            _ => 1024,
        })
    }

    /// T from `horizon`, else from κN, else N/2.
    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| match self.kappa {
            Some(k) => (k * self.n_series() as f64).round().max(1.0) as usize,
            None => (self.n_series() / 2).max(1),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.horizon() as f64 / self.n_series() as f64
    }

    pub fn horizons(&self) -> Vec<usize> {
        self.horizons.clone().unwrap_or_else(|| match self.experiment {
            ExperimentKind::Portfolio => vec![50, 75, 150, 200, 300, 500, 1000],
            _ => (1..=10).map(|k| 1usize << k).collect(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance.unwrap_or(1.0)
    }

    /// q from `q`, else 1 + `alpha`, else 1.001.
    pub fn q(&self) -> f64 {
        self.q.or(self.alpha.map(|a| 1.0 + a)).unwrap_or(1.001)
    }

    pub fn alpha(&self) -> f64 {
        self.q() - 1.0
    }

    pub fn xi(&self) -> CorrelationKind {
        if let Some(xi) = &self.xi {
            return xi.clone();
        }
        let n = self.n_series();
        match self.experiment {
            ExperimentKind::CwoeOneBlock => CorrelationKind::OneBlock { c: 0.5 },
            ExperimentKind::CwoeBlocks => CorrelationKind::BlockDiagonal {
                blocks: vec![
                    Block::new(n / 2, 0.9),
                    Block::new(n / 4, 0.45),
                    Block::new(n - n / 2 - n / 4, 0.225),
                ],
            },
            ExperimentKind::CwoeBanded => CorrelationKind::Banded { c: 0.5 },
            _ => CorrelationKind::Identity,
        }
    }

    pub fn realizations(&self) -> usize {
        self.realizations.unwrap_or(match self.experiment {
            ExperimentKind::WoeEmerging | ExperimentKind::Portfolio => 100,
            _ => 10,
        })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn bins(&self) -> usize {
        self.histogram.as_ref().and_then(|h| h.bins).unwrap_or(40)
    }

    pub fn bulk_range(&self) -> Option<(f64, f64)> {
        self.histogram.as_ref().and_then(|h| h.bulk_range).map(|[a, b]| (a, b))
    }

    pub fn emerging_range(&self) -> Option<(f64, f64)> {
        self.histogram.as_ref().and_then(|h| h.emerging_range).map(|[a, b]| (a, b))
    }

    pub fn q_grid(&self) -> Vec<f64> {
        self.q_grid.clone().unwrap_or_else(emspec::portfolio::default_q_grid)
    }

    pub fn portfolio_blocks(&self) -> Vec<Block> {
        self.blocks.clone().unwrap_or_else(|| vec![Block::new(20, 0.5); 5])
    }

    pub fn volatility_range(&self) -> (f64, f64) {
        let [a, b] = self.volatility_range.unwrap_or([0.1, 0.4]);
        (a, b)
    }

    pub fn overlap_realizations(&self) -> usize {
        self.overlap_realizations.unwrap_or(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = ExperimentConfig::new(ExperimentKind::CwoeOneBlock);
        assert_eq!((c.n_series(), c.horizon()), (1024, 512));
        assert_eq!(c.kappa(), 0.5);
        assert_eq!(c.q(), 1.001);
        assert_eq!(c.xi(), CorrelationKind::OneBlock { c: 0.5 });
        let p = ExperimentConfig::new(ExperimentKind::Portfolio);
        assert_eq!(p.n_series(), 100);
        assert_eq!(p.q_grid().len(), 14);
        let mut b = ExperimentConfig::new(ExperimentKind::CwoeBlocks);
        b.n_series = Some(10);
        match b.xi() {
            CorrelationKind::BlockDiagonal { blocks } => {
                assert_eq!(blocks.iter().map(|b| b.size).sum::<usize>(), 10)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kappa_and_alpha_forms() {
        let mut c = ExperimentConfig::new(ExperimentKind::WoeEmerging);
        c.n_series = Some(300);
        c.kappa = Some(0.25);
        c.alpha = Some(0.01);
        assert_eq!(c.horizon(), 75);
        assert_eq!(c.q(), 1.01);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut c = ExperimentConfig::new(ExperimentKind::CwoeBlocks);
        c.n_series = Some(64);
        c.q = Some(1.0 + 1e-3);
        c.variance = Some(0.1 + 0.2);
        c.master_seed = Some(u64::MAX);
        c.xi = Some(CorrelationKind::BlockDiagonal {
            blocks: vec![Block::new(32, 0.9), Block::new(32, 1.0 / 3.0)],
        });
        c.histogram = Some(HistogramSpec {
            bins: Some(17),
            bulk_range: Some([0.0, std::f64::consts::PI]),
            emerging_range: None,
        });
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), c.to_json());
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(ExperimentConfig::from_json(r#"{"experiment":"woe-emerging","nseries":3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"experiment":"nope"}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"experiment":"cwoe-banded","xi":{"kind":"banded","c":0.3}}"#).unwrap();
        assert_eq!(c.xi(), CorrelationKind::Banded { c: 0.3 });
    }
}
