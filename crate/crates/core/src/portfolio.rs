//! Minimum-variance portfolios built from power-mapped sample correlations.
//!
//! Returns are simulated from a block-structured model covariance
//! Σ₀ = σC₀σ. Each estimate Σ̂ = σ C^(q) σ uses the model volatilities and a
//! power-mapped sample correlation. Its weights are scored by the true
//! variance ŵᵗΣ₀ŵ relative to the optimum Ω₀².

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::{build_block_diagonal, gaussian_matrix, spectral_sqrt, Block};
use crate::error::{Error, Result};
use crate::parallel::map_realizations;
use crate::powermap::{power_map, Deformation};
use crate::rng::{derived_seed, substream};
use crate::spectral::mean_and_stderr;

/// Pivots below this fraction of the largest diagonal entry count as singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

const VOLATILITY_TAG: u64 = 0x766f_6c73;

#[derive(Debug, Clone)]
pub struct PortfolioModel {
    pub blocks: Vec<Block>,
    pub model_correlation: DMatrix<f64>,
    pub volatilities: Vec<f64>,
    pub model_covariance: DMatrix<f64>,
    covariance_sqrt: DMatrix<f64>,
    optimal_variance: f64,
}

impl PortfolioModel {
    pub fn new(blocks: &[Block], volatilities: Vec<f64>) -> Result<Self> {
        let xi = build_block_diagonal(blocks)?;
        let n = xi.dim();
        if volatilities.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: volatilities.len(),
            });
        }
        if let Some(&v) = volatilities.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("volatility {v} is not positive")));
        }
        let model_covariance = scale_by_volatilities(&xi.matrix, &volatilities);
        let (_, covariance_sqrt) = spectral_sqrt(&model_covariance)?;
        let w0 = min_variance_weights(&model_covariance)?;
        let optimal_variance = quadratic_form(&model_covariance, &w0);
        Ok(Self {
            blocks: blocks.to_vec(),
            model_correlation: xi.matrix,
            volatilities,
            model_covariance,
            covariance_sqrt,
            optimal_variance,
        })
    }

    /// Volatilities drawn log-uniformly in `range` from a seed derived from `seed`.
    pub fn with_random_volatilities(blocks: &[Block], range: (f64, f64), seed: u64) -> Result<Self> {
        let (lo, hi) = range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!("volatility range ({lo}, {hi}) is invalid")));
        }
        let n: usize = blocks.iter().map(|b| b.size).sum();
        let mut rng = substream(derived_seed(seed, VOLATILITY_TAG), 0);
        let (a, b) = (lo.ln(), hi.ln());
        let vols = (0..n).map(|_| (a + (b - a) * rng.random::<f64>()).exp()).collect();
        Self::new(blocks, vols)
    }

    /// 100 assets in 5 blocks of 20 with within-block correlation 0.5 and
    /// volatilities in [0.1, 0.4].
    pub fn standard(seed: u64) -> Result<Self> {
        Self::with_random_volatilities(&[Block::new(20, 0.5); 5], (0.1, 0.4), seed)
    }

    pub fn n_assets(&self) -> usize {
        self.volatilities.len()
    }

    /// Ω₀², the variance of the true minimum-variance portfolio.
    pub fn optimal_variance(&self) -> f64 {
        self.optimal_variance
    }

    /// wᵗΣ₀w.
    pub fn true_variance(&self, w: &DVector<f64>) -> f64 {
        quadratic_form(&self.model_covariance, w)
    }

    /// Ω²/Ω₀² of the equal-weight portfolio.
    pub fn homogeneous_ratio(&self) -> f64 {
        let n = self.n_assets();
        let w = DVector::from_element(n, 1.0 / n as f64);
        self.true_variance(&w) / self.optimal_variance
    }
}

fn scale_by_volatilities(c: &DMatrix<f64>, vols: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(c.nrows(), c.ncols(), |k, l| vols[k] * vols[l] * c[(k, l)])
}

fn quadratic_form(m: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    w.dot(&(m * w))
}

/// Lower Cholesky factor, failing on the first pivot below
/// `PIVOT_TOLERANCE` times the largest diagonal entry.
fn cholesky(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = sigma.nrows();
    let scale = sigma.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut l = DMatrix::<f64>::zeros(n, n);
    let (mut dmin, mut dmax) = (f64::INFINITY, 0.0f64);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        dmin = dmin.min(d);
        dmax = dmax.max(d);
        if !(d > PIVOT_TOLERANCE * scale) {
            return Err(Error::Singular {
                row: j,
                pivot: d,
                condition: if d > 0.0 { dmax / d } else { f64::INFINITY },
            });
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// w = Σ⁻¹e / (eᵗΣ⁻¹e), solved through a Cholesky factorization.
pub fn min_variance_weights(sigma: &DMatrix<f64>) -> Result<DVector<f64>> {
    if sigma.nrows() != sigma.ncols() {
        return Err(Error::DimensionMismatch {
            expected: sigma.nrows(),
            actual: sigma.ncols(),
        });
    }
    let n = sigma.nrows();
    if n == 0 {
        return Err(Error::Empty("covariance matrix"));
    }
    let l = cholesky(sigma)?;
    let mut y = DVector::from_element(n, 1.0);
    // forward then backward substitution
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * y[k]).sum();
        y[i] = (y[i] - s) / l[(i, i)];
    }
    let total: f64 = y.iter().sum();
    y /= total;
    Ok(y)
}

/// N×T returns Σ₀^{1/2}Z for realization `stream` of `seed`.
pub fn simulate_returns(model: &PortfolioModel, horizon: usize, seed: u64, stream: u64) -> Result<DMatrix<f64>> {
    if horizon < 2 {
        return Err(Error::InvalidArgument(format!("horizon {horizon} is below 2")));
    }
    let mut rng = substream(seed, stream);
    let z = gaussian_matrix(model.n_assets(), horizon, 1.0, &mut rng);
    Ok(&model.covariance_sqrt * z)
}

/// Pearson correlation of the rows, with exact unit diagonal.
pub fn sample_correlation(returns: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, t) = returns.shape();
    let mut centered = returns.clone();
    for (k, mut row) in centered.row_iter_mut().enumerate() {
        let mean = row.sum() / t as f64;
        row.add_scalar_mut(-mean);
        let norm = row.norm();
        if norm == 0.0 {
            return Err(Error::ZeroVariance { row: k });
        }
        row /= norm;
    }
    let mut c = &centered * centered.transpose();
    for j in 0..n {
        for i in 0..j {
            let v = c[(i, j)].clamp(-1.0, 1.0);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
        c[(j, j)] = 1.0;
    }
    Ok(c)
}

/// Σ̂_kl = σ_k σ_l sign(C_kl)|C_kl|^q.
pub fn power_mapped_covariance(samp_corr: &DMatrix<f64>, volatilities: &[f64], q: Deformation) -> DMatrix<f64> {
    scale_by_volatilities(&power_map(samp_corr, q), volatilities)
}

/// One scored weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioResult {
    pub horizon: usize,
    pub exponent: f64,
    pub ratio: f64,
    pub weights: Vec<f64>,
}

/// Weights from the power-mapped estimate and their true-variance ratio.
pub fn evaluate(model: &PortfolioModel, samp_corr: &DMatrix<f64>, horizon: usize, q: Deformation) -> Result<PortfolioResult> {
    let sigma = power_mapped_covariance(samp_corr, &model.volatilities, q);
    let w = min_variance_weights(&sigma)?;
    Ok(PortfolioResult {
        horizon,
        exponent: q.q(),
        ratio: model.true_variance(&w) / model.optimal_variance(),
        weights: w.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Raw,
    PowerMap,
    BestPowerMap,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::PowerMap => "power-map",
            Method::BestPowerMap => "best-power-map",
        }
    }
}

/// Mean ratio over realizations for one (method, T, q). The raw estimate is
/// undefined for T ≤ N and carries no values. An estimate that is not
/// positive definite in some realization is inadmissible: `singular` counts
/// those realizations and the entry carries no mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub method: Method,
    pub horizon: usize,
    pub q: Option<f64>,
    pub mean_ratio: Option<f64>,
    pub stderr: Option<f64>,
    pub singular: usize,
    pub homogeneous_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSweep {
    pub entries: Vec<SweepEntry>,
    pub homogeneous_ratio: f64,
    pub optimal_variance: f64,
}

impl PortfolioSweep {
    pub fn find(&self, method: Method, horizon: usize) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.method == method && e.horizon == horizon)
    }
}

/// {1.1, 1.2, …, 2.4}.
pub fn default_q_grid() -> Vec<f64> {
    (11..=24).map(|k| k as f64 / 10.0).collect()
}

/// Average Ω²/Ω₀² over `realizations` for every T in `horizons`, for the
/// raw sample estimate and for each q in `q_grid`. All estimates of one
/// realization share the same simulated returns.
pub fn run_sweep(
    model: &PortfolioModel,
    horizons: &[usize],
    q_grid: &[f64],
    realizations: usize,
    seed: u64,
) -> Result<PortfolioSweep> {
    if realizations == 0 {
        return Err(Error::Empty("realizations"));
    }
    let qs = q_grid.iter().map(|&q| Deformation::new(q)).collect::<Result<Vec<_>>>()?;
    let n = model.n_assets();
    let homogeneous = model.homogeneous_ratio();
    let mut entries = Vec::new();
    for &t in horizons {
        let with_raw = t > n;
        let key = derived_seed(seed, t as u64);
        let per_realization = map_realizations(realizations, |r| -> Result<(Option<f64>, Vec<Option<f64>>)> {
            let corr = sample_correlation(&simulate_returns(model, t, key, r as u64)?)?;
            let raw = if with_raw {
                Some(evaluate(model, &corr, t, Deformation::identity())?.ratio)
            } else {
                None
            };
            let mapped = qs
                .iter()
                .map(|&q| match evaluate(model, &corr, t, q) {
                    Ok(p) => Ok(Some(p.ratio)),
                    Err(Error::Singular { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((raw, mapped))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let raw_values: Vec<f64> = per_realization.iter().filter_map(|(r, _)| *r).collect();
        let (raw_mean, raw_se) = if with_raw {
            let (m, s) = mean_and_stderr(&raw_values);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        entries.push(SweepEntry {
            method: Method::Raw,
            horizon: t,
            q: Some(1.0),
            mean_ratio: raw_mean,
            stderr: raw_se,
            singular: 0,
            homogeneous_ratio: homogeneous,
        });

        let mut best: Option<SweepEntry> = None;
        for (i, &q) in q_grid.iter().enumerate() {
            let values: Vec<f64> = per_realization.iter().filter_map(|(_, m)| m[i]).collect();
            let singular = realizations - values.len();
            let (mean, se) = if singular == 0 {
                let (m, s) = mean_and_stderr(&values);
                (Some(m), Some(s))
            } else {
                (None, None)
            };
            let entry = SweepEntry {
                method: Method::PowerMap,
                horizon: t,
                q: Some(q),
                mean_ratio: mean,
                stderr: se,
                singular,
                homogeneous_ratio: homogeneous,
            };
            let better = match (mean, best.as_ref().and_then(|b| b.mean_ratio)) {
                (Some(m), Some(b)) => m < b,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if better {
                best = Some(SweepEntry {
                    method: Method::BestPowerMap,
                    ..entry.clone()
                });
            }
            entries.push(entry);
        }
        entries.extend(best);
    }
    Ok(PortfolioSweep {
        entries,
        homogeneous_ratio: homogeneous,
        optimal_variance: model.optimal_variance(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigvalsh;

    #[test]
    fn weights_closed_forms() {
        let w = min_variance_weights(&DMatrix::identity(4, 4)).unwrap();
        assert!(w.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let w = min_variance_weights(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap();
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weights_are_optimal() {
        let model = PortfolioModel::standard(3).unwrap();
        let w = min_variance_weights(&model.model_covariance).unwrap();
        assert!((w.sum() - 1.0).abs() < 1e-12);
        let base = model.true_variance(&w);
        let mut rng = substream(11, 0);
        for _ in 0..20 {
            let mut d = DVector::from_fn(w.len(), |_, _| rng.random::<f64>() - 0.5);
            d.add_scalar_mut(-d.mean());
            assert!(model.true_variance(&(&w + d * 1e-3)) > base);
        }
    }

    #[test]
    fn singular_input_is_reported() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(min_variance_weights(&m), Err(Error::Singular { row: 1, .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(min_variance_weights(&m).is_err());
    }

    #[test]
    fn standard_model() {
        let model = PortfolioModel::standard(42).unwrap();
        assert_eq!(model.n_assets(), 100);
        assert!(model.volatilities.iter().all(|v| (0.1..=0.4).contains(v)));
        assert!(model.model_correlation.diagonal().iter().all(|&d| d == 1.0));
        assert_eq!(model.model_correlation[(0, 19)], 0.5);
        assert_eq!(model.model_correlation[(0, 20)], 0.0);
        assert!(model.homogeneous_ratio() > 1.0);
        let again = PortfolioModel::standard(42).unwrap();
        assert_eq!(model.volatilities, again.volatilities);
        assert_ne!(model.volatilities, PortfolioModel::standard(43).unwrap().volatilities);
        assert!(PortfolioModel::new(&[Block::new(2, 0.1)], vec![1.0]).is_err());
    }

    #[test]
    fn returns_have_model_covariance() {
        let model = PortfolioModel::with_random_volatilities(&[Block::new(3, 0.5), Block::new(2, 0.2)], (0.1, 0.4), 5).unwrap();
        let t = 100_000;
        let x = simulate_returns(&model, t, 9, 0).unwrap();
        let cov = &x * x.transpose() / t as f64;
        for k in 0..5 {
            for l in 0..5 {
                let want = model.model_covariance[(k, l)];
                let scale = model.volatilities[k] * model.volatilities[l];
                assert!((cov[(k, l)] - want).abs() < 0.03 * scale, "({k},{l})");
            }
        }
        assert_eq!(simulate_returns(&model, 10, 9, 1).unwrap(), simulate_returns(&model, 10, 9, 1).unwrap());
        assert!(simulate_returns(&model, 1, 9, 1).is_err());
    }

    #[test]
    fn uncorrelated_model_gives_small_sample_correlation() {
        let model = PortfolioModel::new(&[Block::new(10, 0.0)], vec![0.2; 10]).unwrap();
        let t = 5000;
        let c = sample_correlation(&simulate_returns(&model, t, 1, 0).unwrap()).unwrap();
        let off: Vec<f64> = (0..10).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).collect();
        let mean = off.iter().sum::<f64>() / off.len() as f64;
        assert!(mean.abs() < 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn pearson_properties() {
        let r = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 5.0, 1.0, 2.0, 3.0, 5.0, -1.0, 0.5, 0.0, 2.0]);
        let c = sample_correlation(&r).unwrap();
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(0, 1)], 1.0);
        assert!(c.iter().all(|v| (-1.0..=1.0).contains(v)));
        let flat = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 4.0, 4.0]);
        assert!(matches!(sample_correlation(&flat), Err(Error::ZeroVariance { row: 1 })));
    }

    #[test]
    fn short_series_are_singular() {
        let model = PortfolioModel::standard(1).unwrap();
        let c = sample_correlation(&simulate_returns(&model, 30, 2, 0).unwrap()).unwrap();
        let vals = eigvalsh(&c).unwrap();
        let tol = 1e-10 * 100.0;
        // centering removes one more degree of freedom: rank ≤ T − 1
        assert!(vals.iter().filter(|v| v.abs() > tol).count() <= 30);
        assert!(min_variance_weights(&power_mapped_covariance(&c, &model.volatilities, Deformation::identity())).is_err());
        assert!(min_variance_weights(&power_mapped_covariance(&c, &model.volatilities, Deformation::new(2.0).unwrap())).is_ok());
    }

    #[test]
    fn power_mapped_covariance_rules() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, -0.6, -0.6, 1.0]);
        let vols = [0.2, 0.3];
        let raw = power_mapped_covariance(&c, &vols, Deformation::identity());
        assert!((raw[(0, 1)] - -0.036).abs() < 1e-16);
        for q in [1.0, 1.7, 2.4] {
            let s = power_mapped_covariance(&c, &vols, Deformation::new(q).unwrap());
            assert_eq!(s[(0, 0)], 0.2 * 0.2);
            assert_eq!(s[(1, 1)], 0.3 * 0.3);
        }
        let sq = power_mapped_covariance(&c, &vols, Deformation::new(2.0).unwrap());
        assert!(sq[(0, 1)].abs() < raw[(0, 1)].abs());
    }

    #[test]
    fn sweep_structure() {
        let model = PortfolioModel::with_random_volatilities(&[Block::new(5, 0.5); 2], (0.1, 0.4), 0).unwrap();
        let sweep = run_sweep(&model, &[8, 40], &[1.5, 2.0], 4, 7).unwrap();
        let raw_short = sweep.find(Method::Raw, 8).unwrap();
        assert!(raw_short.mean_ratio.is_none() && raw_short.stderr.is_none());
        let raw_long = sweep.find(Method::Raw, 40).unwrap();
        assert!(raw_long.mean_ratio.unwrap() >= 1.0 - 1e-10);
        for t in [8, 40] {
            let best = sweep.find(Method::BestPowerMap, t).unwrap();
            let all: Vec<f64> = sweep
                .entries
                .iter()
                .filter(|e| e.method == Method::PowerMap && e.horizon == t)
                .map(|e| e.mean_ratio.unwrap())
                .collect();
            assert_eq!(all.len(), 2);
            assert_eq!(best.mean_ratio.unwrap(), all.iter().cloned().fold(f64::INFINITY, f64::min));
            assert!(all.iter().all(|&r| r >= 1.0 - 1e-10));
        }
        assert_eq!(sweep, run_sweep(&model, &[8, 40], &[1.5, 2.0], 4, 7).unwrap());
        assert!(run_sweep(&model, &[8], &[0.5], 1, 7).is_err());
        assert_eq!(default_q_grid().len(), 14);
        assert_eq!(default_q_grid()[13], 2.4);
    }

    #[test]
    fn inadmissible_exponents_are_excluded() {
        let model = PortfolioModel::with_random_volatilities(&[Block::new(5, 0.5); 2], (0.1, 0.4), 0).unwrap();
        let sweep = run_sweep(&model, &[8], &[1.0, 2.0], 3, 7).unwrap();
        let mapped: Vec<&SweepEntry> = sweep.entries.iter().filter(|e| e.method == Method::PowerMap).collect();
        assert_eq!(mapped[0].singular, 3);
        assert!(mapped[0].mean_ratio.is_none());
        assert_eq!(mapped[1].singular, 0);
        let best = sweep.find(Method::BestPowerMap, 8).unwrap();
        assert_eq!(best.q, Some(2.0));
        assert_eq!(best.mean_ratio, mapped[1].mean_ratio);
    }

    #[test]
    fn long_series_converge() {
        let model = PortfolioModel::with_random_volatilities(&[Block::new(5, 0.5); 2], (0.1, 0.4), 0).unwrap();
        let sweep = run_sweep(&model, &[20_000], &[1.1], 3, 1).unwrap();
        assert!((sweep.find(Method::Raw, 20_000).unwrap().mean_ratio.unwrap() - 1.0).abs() < 0.01);
    }
}
