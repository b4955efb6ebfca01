//! Wishart (WOE) and correlated Wishart (CWOE) sample matrices and the
//! population correlation matrices ξ that drive the correlated case.
//!
//! Sample matrices are kept as C = AAᵗ/T without rescaling to unit diagonal,
//! so diagonal fluctuations are part of the ensemble. The correlated ensemble
//! includes the 1/T factor as well, giving E[C] = σ²ξ.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::spectral::eigh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleShape {
    n_series: usize,
    horizon: usize,
    variance: f64,
}

impl EnsembleShape {
    pub fn new(n_series: usize, horizon: usize) -> Result<Self> {
        Self::with_variance(n_series, horizon, 1.0)
    }

    pub fn with_variance(n_series: usize, horizon: usize, variance: f64) -> Result<Self> {
        if n_series < 2 {
            return Err(Error::InvalidShape(format!("N = {n_series}, need at least 2 series")));
        }
        if horizon < 1 {
            return Err(Error::InvalidShape("T must be positive".into()));
        }
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidShape(format!("variance {variance} must be positive")));
        }
        Ok(Self {
            n_series,
            horizon,
            variance,
        })
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// κ = T/N.
    pub fn kappa(&self) -> f64 {
        self.horizon as f64 / self.n_series as f64
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Number of eigenvalues that vanish identically when T < N.
    pub fn null_dimension(&self) -> usize {
        self.n_series.saturating_sub(self.horizon)
    }
}

/// An N×T matrix of iid Gaussian entries.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    pub entries: DMatrix<f64>,
    pub shape: EnsembleShape,
    pub seed: u64,
    pub stream: u64,
}

/// Structure of a population correlation matrix ξ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorrelationKind {
    Identity,
    OneBlock { c: f64 },
    BlockDiagonal { blocks: Vec<Block> },
    Banded { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub size: usize,
    pub coeff: f64,
}

impl Block {
    pub fn new(size: usize, coeff: f64) -> Self {
        Self { size, coeff }
    }

    /// The separated eigenvalue N_i c_i + 1 − c_i of this block.
    pub fn top_eigenvalue(&self) -> f64 {
        self.size as f64 * self.coeff + 1.0 - self.coeff
    }
}

/// ξ together with its ascending spectrum and symmetric square root.
#[derive(Debug, Clone)]
pub struct PopulationCorrelation {
    pub kind: CorrelationKind,
    pub matrix: DMatrix<f64>,
    pub spectrum: Vec<f64>,
    pub sqrt: DMatrix<f64>,
}

impl PopulationCorrelation {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn identity(n: usize) -> Self {
        Self {
            kind: CorrelationKind::Identity,
            matrix: DMatrix::identity(n, n),
            spectrum: vec![1.0; n],
            sqrt: DMatrix::identity(n, n),
        }
    }

    /// Build from a descriptor; `n` must agree with the block sizes for block-diagonal ξ.
    pub fn from_kind(kind: &CorrelationKind, n: usize) -> Result<Self> {
        match kind {
            CorrelationKind::Identity => Ok(Self::identity(n)),
            CorrelationKind::OneBlock { c } => build_one_block(n, *c),
            CorrelationKind::BlockDiagonal { blocks } => {
                let total: usize = blocks.iter().map(|b| b.size).sum();
                if total != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        actual: total,
                    });
                }
                build_block_diagonal(blocks)
            }
            CorrelationKind::Banded { c } => build_banded(n, *c),
        }
    }
}

/// Symmetric N×N sample matrix C.
#[derive(Debug, Clone)]
pub struct SampleMatrix {
    pub entries: DMatrix<f64>,
    pub shape: EnsembleShape,
    pub population: CorrelationKind,
}

impl SampleMatrix {
    /// Rank-counting tolerance 1e−10 · max|C_jj| · N.
    pub fn null_tolerance(&self) -> f64 {
        null_tolerance(&self.entries)
    }
}

pub fn null_tolerance(c: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    let max_diag = (0..n).map(|j| c[(j, j)].abs()).fold(0.0, f64::max);
    1e-10 * max_diag * n as f64
}

/// iid N(0, σ²) entries drawn from stream 0 of `seed`.
pub fn sample_gaussian(shape: EnsembleShape, seed: u64) -> DataMatrix {
    sample_gaussian_stream(shape, seed, 0)
}

/// iid N(0, σ²) entries drawn from the substream `(seed, stream)`.
pub fn sample_gaussian_stream(shape: EnsembleShape, seed: u64, stream: u64) -> DataMatrix {
    let mut rng = substream(seed, stream);
    let entries = gaussian_matrix(shape.n_series, shape.horizon, shape.variance.sqrt(), &mut rng);
    DataMatrix {
        entries,
        shape,
        seed,
        stream,
    }
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, sd: f64, rng: &mut R) -> DMatrix<f64> {
    // column-major fill order
    DMatrix::from_fn(rows, cols, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// C = AAᵗ/T.
pub fn wishart(a: &DataMatrix) -> SampleMatrix {
    SampleMatrix {
        entries: gram(&a.entries, a.entries.ncols() as f64),
        shape: a.shape,
        population: CorrelationKind::Identity,
    }
}

/// C = ξ^{1/2} (BBᵗ/T) ξ^{1/2}, evaluated as XXᵗ/T with X = ξ^{1/2}B.
pub fn cwoe_sample(xi: &PopulationCorrelation, shape: EnsembleShape, seed: u64) -> Result<SampleMatrix> {
    cwoe_sample_stream(xi, shape, seed, 0)
}

pub fn cwoe_sample_stream(
    xi: &PopulationCorrelation,
    shape: EnsembleShape,
    seed: u64,
    stream: u64,
) -> Result<SampleMatrix> {
    if xi.dim() != shape.n_series {
        return Err(Error::DimensionMismatch {
            expected: shape.n_series,
            actual: xi.dim(),
        });
    }
    let b = sample_gaussian_stream(shape, seed, stream);
    let entries = match xi.kind {
        CorrelationKind::Identity => gram(&b.entries, shape.horizon as f64),
        _ => gram(&(&xi.sqrt * &b.entries), shape.horizon as f64),
    };
    Ok(SampleMatrix {
        entries,
        shape,
        population: xi.kind.clone(),
    })
}

/// Sample matrix for realization `index` of an experiment with master seed `seed`.
pub fn sample_realization(
    xi: &Arc<PopulationCorrelation>,
    shape: EnsembleShape,
    seed: u64,
    index: u64,
) -> Result<SampleMatrix> {
    cwoe_sample_stream(xi, shape, seed, index)
}

/// x·xᵗ / t with the lower triangle mirrored from the upper one.
fn gram(x: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let mut c = x * x.transpose();
    let n = c.nrows();
    for j in 0..n {
        for i in 0..=j {
            let v = c[(i, j)] / t;
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

fn check_coeff(c: f64) -> Result<()> {
    if (0.0..1.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::InvalidCoefficient { coeff: c })
    }
}

/// ξ_jk = δ_jk + (1 − δ_jk) c.
pub fn build_one_block(n: usize, c: f64) -> Result<PopulationCorrelation> {
    let mut xi = build_block_diagonal(&[Block::new(n, c)])?;
    if c == 0.0 {
        xi.kind = CorrelationKind::Identity;
    } else {
        xi.kind = CorrelationKind::OneBlock { c };
    }
    Ok(xi)
}

/// Block-diagonal ξ; within block i the off-diagonal entries equal c_i.
///
/// Spectrum and square root use the closed form of each block,
/// (1 − c) I + c eeᵗ, whose square root is √(1−c) I + ((√λ_top − √(1−c))/N_i) eeᵗ.
pub fn build_block_diagonal(blocks: &[Block]) -> Result<PopulationCorrelation> {
    if blocks.is_empty() {
        return Err(Error::Empty("block list"));
    }
    for b in blocks {
        if b.size == 0 {
            return Err(Error::InvalidArgument("block size must be at least 1".into()));
        }
        check_coeff(b.coeff)?;
    }
    let n: usize = blocks.iter().map(|b| b.size).sum();
    let mut matrix = DMatrix::zeros(n, n);
    let mut sqrt = DMatrix::zeros(n, n);
    let mut spectrum = Vec::with_capacity(n);
    let mut offset = 0;
    for b in blocks {
        let top = b.top_eigenvalue();
        let base = 1.0 - b.coeff;
        let (root_base, root_top) = (base.sqrt(), top.sqrt());
        let rank_one = (root_top - root_base) / b.size as f64;
        for i in 0..b.size {
            for j in 0..b.size {
                let (gi, gj) = (offset + i, offset + j);
                if i == j {
                    matrix[(gi, gj)] = 1.0;
                    sqrt[(gi, gj)] = root_base + rank_one;
                } else {
                    matrix[(gi, gj)] = b.coeff;
                    sqrt[(gi, gj)] = rank_one;
                }
            }
        }
        spectrum.extend(std::iter::repeat_n(base, b.size - 1));
        spectrum.push(top);
        offset += b.size;
    }
    spectrum.sort_by(f64::total_cmp);
    let kind = if blocks.iter().all(|b| b.coeff == 0.0) {
        CorrelationKind::Identity
    } else {
        CorrelationKind::BlockDiagonal {
            blocks: blocks.to_vec(),
        }
    };
    Ok(PopulationCorrelation {
        kind,
        matrix,
        spectrum,
        sqrt,
    })
}

/// ξ_jk = c^|j−k| (Kac–Murdock–Szegő matrix).
pub fn build_banded(n: usize, c: f64) -> Result<PopulationCorrelation> {
    check_coeff(c)?;
    if c == 0.0 {
        return Ok(PopulationCorrelation::identity(n));
    }
    let matrix = DMatrix::from_fn(n, n, |i, j| c.powi(i.abs_diff(j) as i32));
    let (spectrum, sqrt) = spectral_sqrt(&matrix)?;
    Ok(PopulationCorrelation {
        kind: CorrelationKind::Banded { c },
        matrix,
        spectrum,
        sqrt,
    })
}

/// Symmetric square root S of a positive-definite ξ, S·S = ξ.
pub fn matrix_sqrt(xi: &PopulationCorrelation) -> Result<DMatrix<f64>> {
    spectral_sqrt(&xi.matrix).map(|(_, s)| s)
}

/// Square root via V diag(√λ) Vᵗ; also returns the ascending spectrum.
pub fn spectral_sqrt(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let es = eigh(m, true)?;
    let min = es.values.first().copied().unwrap_or(1.0);
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let v = es.vectors.expect("vectors requested");
    let roots = DVector::from_iterator(es.values.len(), es.values.iter().map(|l| l.sqrt()));
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= roots[j];
    }
    let mut s = scaled * v.transpose();
    let n = s.nrows();
    for j in 0..n {
        for i in 0..j {
            s[(j, i)] = s[(i, j)];
        }
    }
    Ok((es.values, s))
}
