use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// For each selected eigenvector (column index in `vectors`), the fraction of
/// its squared amplitude inside each block of consecutive coordinates.
pub fn block_overlap(vectors: &DMatrix<f64>, block_sizes: &[usize], indices: &[usize]) -> Result<Vec<Vec<f64>>> {
    let n = vectors.nrows();
    let total: usize = block_sizes.iter().sum();
    if total != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: total,
        });
    }
    indices
        .iter()
        .map(|&col| {
            if col >= vectors.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: vectors.ncols(),
                    actual: col + 1,
                });
            }
            let v = vectors.column(col);
            let norm: f64 = v.iter().map(|x| x * x).sum();
            let mut start = 0;
            let fractions = block_sizes
                .iter()
                .map(|&size| {
                    let w: f64 = v.rows(start, size).iter().map(|x| x * x).sum();
                    start += size;
                    if norm > 0.0 {
                        w / norm
                    } else {
                        0.0
                    }
                })
                .collect();
            Ok(fractions)
        })
        .collect()
}
