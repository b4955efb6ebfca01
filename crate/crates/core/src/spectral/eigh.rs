//! Dense symmetric eigensolver.
//!
//! Householder reduction to tridiagonal form followed by the implicit QL
//! iteration with Wilkinson-style shifts (the EISPACK `tql2` scheme). Only the
//! upper triangle of the working copy is touched during the reduction; both the
//! reduction and the eigenvector rotations work on contiguous rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Iteration cap per eigenvalue in the QL phase.
pub const MAX_SWEEPS_PER_EIGENVALUE: usize = 50;

/// Eigenvalues in ascending order and, optionally, the matching orthonormal
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Option<DMatrix<f64>>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Number of eigenvalues with `|λ| <= tol`.
    pub fn count_below(&self, tol: f64) -> usize {
        self.values.iter().filter(|v| v.abs() <= tol).count()
    }
}

/// Eigen-decomposition of the symmetric matrix `m`.
///
/// Only the upper triangle of `m` is read. Eigenvectors are computed when
/// `want_vectors` is set.
pub fn eigh(m: &DMatrix<f64>, want_vectors: bool) -> Result<EigenSystem> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(EigenSystem {
            values: Vec::new(),
            vectors: want_vectors.then(|| DMatrix::zeros(0, 0)),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }

    // Row-major copy holding the upper triangle: a[i * n + j] = m[(i, j)], j >= i.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            a[i * n + j] = m[(i, j)];
        }
    }
    let max_abs = a.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));

    let mut tri = tridiagonalize(&mut a, n);
    let mut z = want_vectors.then(|| accumulate_transposed(&a, &tri.betas, n));

    ql_implicit(&mut tri.diag, &mut tri.off, z.as_deref_mut(), n).map_err(|(index, iterations)| {
        Error::EigenNoConvergence {
            index,
            iterations,
            max_abs,
        }
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| tri.diag[p].total_cmp(&tri.diag[q]));
    let values = order.iter().map(|&k| tri.diag[k]).collect();
    let vectors = z.map(|zt| {
        // Row k of `zt` is the eigenvector belonging to diag[k].
        DMatrix::from_fn(n, n, |row, col| zt[order[col] * n + row])
    });
    Ok(EigenSystem { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    eigh(m, false).map(|e| e.values)
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// off[k] couples k and k+1; off[n-1] = 0.
    off: Vec<f64>,
    /// Householder scale per step; the vector for step k lives in row k of the
    /// work array, columns k+1..n.
    betas: Vec<f64>,
}

fn tridiagonalize(a: &mut [f64], n: usize) -> Tridiagonal {
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut betas = vec![0.0; n];
    let mut p = vec![0.0; n];

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        let start = k + 1;
        let x = &mut a[k * n + start..k * n + n];

        let scale = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if scale == 0.0 {
            off[k] = 0.0;
            betas[k] = 0.0;
            continue;
        }
        let norm = scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt();
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        off[k] = alpha;
        x[0] -= alpha;
        let vtv = x.iter().map(|v| v * v).sum::<f64>();
        if vtv == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        let beta = 2.0 / vtv;
        betas[k] = beta;

        // v lives in row k; copy it out so the trailing block can be updated freely.
        let v: Vec<f64> = x.to_vec();
        let m = n - start;
        let pv = &mut p[..m];
        pv.iter_mut().for_each(|e| *e = 0.0);

        // p = beta * A22 v using only the upper triangle of A22.
        for ii in 0..m {
            let row = &a[(start + ii) * n + start + ii..(start + ii) * n + n];
            let vi = v[ii];
            let mut acc = row[0] * v[ii];
            for ((r, vj), pj) in row[1..].iter().zip(&v[ii + 1..]).zip(pv[ii + 1..].iter_mut()) {
                acc += r * vj;
                *pj += r * vi;
            }
            pv[ii] += acc;
        }
        pv.iter_mut().for_each(|e| *e *= beta);
        let kfac = 0.5 * beta * pv.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        // w = p - kfac * v, stored back into p.
        for (pe, ve) in pv.iter_mut().zip(&v) {
            *pe -= kfac * ve;
        }
        for ii in 0..m {
            let (vi, wi) = (v[ii], pv[ii]);
            let row = &mut a[(start + ii) * n + start + ii..(start + ii) * n + n];
            for ((r, vj), wj) in row.iter_mut().zip(&v[ii..]).zip(&pv[ii..]) {
                *r -= vi * wj + wi * vj;
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        off[n - 2] = a[(n - 2) * n + n - 1];
    }
    diag[n - 1] = a[(n - 1) * n + n - 1];
    off[n - 1] = 0.0;
    Tridiagonal { diag, off, betas }
}

/// Builds Qᵗ (row-major) where Q = H_0 H_1 ⋯ H_{n-3}.
fn accumulate_transposed(a: &[f64], betas: &[f64], n: usize) -> Vec<f64> {
    // Backward accumulation of Q keeps every step confined to its trailing block.
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i * n + i] = 1.0;
    }
    let mut u = vec![0.0; n];
    for k in (0..n.saturating_sub(2)).rev() {
        let beta = betas[k];
        if beta == 0.0 {
            continue;
        }
        let start = k + 1;
        let v = &a[k * n + start..k * n + n];
        let uu = &mut u[start..n];
        uu.iter_mut().for_each(|e| *e = 0.0);
        for (ii, vi) in v.iter().enumerate() {
            let row = &q[(start + ii) * n + start..(start + ii) * n + n];
            for (ue, r) in uu.iter_mut().zip(row) {
                *ue += vi * r;
            }
        }
        uu.iter_mut().for_each(|e| *e *= beta);
        for (ii, vi) in v.iter().enumerate() {
            let row = &mut q[(start + ii) * n + start..(start + ii) * n + n];
            for (r, ue) in row.iter_mut().zip(uu.iter()) {
                *r -= vi * ue;
            }
        }
    }
    // transpose in place
    for i in 0..n {
        for j in i + 1..n {
            q.swap(i * n + j, j * n + i);
        }
    }
    q
}

/// Implicit QL on the tridiagonal (diag, off). `zt` holds eigenvector rows.
///
/// On failure returns (eigenvalue index, iterations).
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    mut zt: Option<&mut [f64]>,
    n: usize,
) -> std::result::Result<(), (usize, usize)> {
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0_f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err((l, iter - 1));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = zt.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let row_i = &mut lo[i * n..];
                        let row_i1 = &mut hi[..n];
                        for (zi, zi1) in row_i.iter_mut().zip(row_i1.iter_mut()) {
                            let t = *zi1;
                            *zi1 = s * *zi + c * t;
                            *zi = c * *zi - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
