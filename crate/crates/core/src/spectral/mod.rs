//! Eigen-decomposition, rank-paired spectral splits, moments, histograms and
//! eigenvector diagnostics.

pub mod eigh;
pub mod histogram;
pub mod moments;
pub mod overlap;
pub mod split;

pub use eigh::{eigh, eigvalsh, EigenSystem};
pub use histogram::{bulk_range, emerging_range, histogram, DensityHistogram};
pub use moments::{empirical_moments, mean_and_stderr, MomentErrors, MomentSet, RealizationMoments};
pub use overlap::block_overlap;
pub use split::{isolated_extreme, split_matrix, split_spectrum, top_separation, Isolation, SpectralSplit};
