//! Randomized truncated SVD of a sparse feature matrix.
//!
//! A Gaussian sketch of the range is refined with power iterations (re-orthonormalized
//! after every product), the matrix is projected onto the sketch, and the small
//! projected matrix is factored exactly with one-sided Jacobi.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix, Matrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdConfig {
    pub power_iterations: usize,
    pub oversampling: usize,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig { power_iterations: 4, oversampling: 10, seed: 0 }
    }
}

/// Leading singular triplets: `a ≈ u · diag(sigma) · vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `n × rank`, orthonormal columns.
    pub u: Matrix,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// `d × rank`, orthonormal columns; the largest-magnitude entry of each is positive.
    pub v: Matrix,
}

impl TruncatedSvd {
    /// `U Σ`, the reduced node features.
    pub fn reduced(&self) -> Matrix {
        let mut x = self.u.clone();
        for i in 0..x.rows() {
            for (v, s) in x.row_mut(i).iter_mut().zip(&self.sigma) {
                *v *= s;
            }
        }
        x
    }

    /// `U Σ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        self.reduced().matmul_t(&self.v).expect("consistent factor shapes")
    }
}

/// Node features after SVD reduction (`U Σ`, one row per node).
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedFeatures {
    matrix: Matrix,
}

impl ReducedFeatures {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::NonFinite("reduced features".into()));
        }
        Ok(ReducedFeatures { matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.matrix.cols()
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }
}

pub fn truncated_svd(a: &CsrMatrix, rank: usize, cfg: &SvdConfig) -> Result<TruncatedSvd> {
    let (n, d) = (a.rows(), a.cols());
    if rank == 0 || rank > n.min(d) {
        return Err(Error::InvalidArgument(format!("rank {rank} outside [1, {}]", n.min(d))));
    }
    // When the oversampled sketch would cover at least half of the smaller dimension the
    // full width costs little more and makes the range finder exact.
    let full = n.min(d);
    let width = if 2 * (rank + cfg.oversampling) >= full { full } else { rank + cfg.oversampling };
    let at = a.transpose();

    let mut r = rng::seeded(cfg.seed);
    let omega = Matrix::from_fn(d, width, |_, _| rng::gaussian(&mut r));
    let mut q = orthonormal_columns(&a.spmm(&omega)?);
    for _ in 0..cfg.power_iterations {
        let z = orthonormal_columns(&at.spmm(&q)?);
        q = orthonormal_columns(&a.spmm(&z)?);
    }

    // b = qᵀ a, stored as its rows (width × d).
    let b = at.spmm(&q)?.transpose();
    // Rows of `basis` span the row space of b, so b = (b basisᵀ) basis.
    let basis = orthonormal_rows(&b);
    let small = b.matmul_t(&basis)?;
    let (left, sigma, right) = jacobi_svd(&small);

    // a ≈ q · b = (q · left) · diag(sigma) · (basisᵀ · right)ᵀ.
    let u_full = q.matmul(&left)?;
    let v_full = basis.t_matmul(&right)?;

    let mut order: Vec<usize> = (0..width).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    order.truncate(rank);

    let mut u = Matrix::zeros(n, rank);
    let mut v = Matrix::zeros(d, rank);
    let mut s = Vec::with_capacity(rank);
    for (k, &src) in order.iter().enumerate() {
        let vcol = v_full.column(src);
        let pivot = vcol.iter().copied().fold(0.0f64, |best, x| if libm::fabs(x) > libm::fabs(best) { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            v[(i, k)] = sign * vcol[i];
        }
        for i in 0..n {
            u[(i, k)] = sign * u_full[(i, src)];
        }
        s.push(sigma[src]);
    }
    if !u.is_finite() || !v.is_finite() || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("truncated SVD factors".into()));
    }
    Ok(TruncatedSvd { u, sigma: s, v })
}

/// Reduced features `U_r Σ_r` of the sparse feature matrix.
pub fn reduce_features(features: &CsrMatrix, rank: usize, cfg: &SvdConfig) -> Result<ReducedFeatures> {
    ReducedFeatures::new(truncated_svd(features, rank, cfg)?.reduced())
}

fn orthonormal_columns(m: &Matrix) -> Matrix {
    orthonormal_rows(&m.transpose()).transpose()
}

/// Modified Gram-Schmidt, applied twice, over the rows of `m`. A row that collapses
/// numerically is replaced by the first canonical basis vector that survives
/// orthogonalization, so the result always has orthonormal rows.
fn orthonormal_rows(m: &Matrix) -> Matrix {
    let (k, len) = m.shape();
    let mut out = m.clone();
    let mut canonical = 0usize;
    for i in 0..k {
        let original = crate::linalg::norm(out.row(i));
        project_out(&mut out, i);
        project_out(&mut out, i);
        let mut nrm = crate::linalg::norm(out.row(i));
        let mut threshold = 1e-10 * original;
        while (nrm == 0.0 || nrm <= threshold) && canonical < len {
            let row = out.row_mut(i);
            row.fill(0.0);
            row[canonical] = 1.0;
            canonical += 1;
            project_out(&mut out, i);
            project_out(&mut out, i);
            nrm = crate::linalg::norm(out.row(i));
            threshold = 1e-6;
        }
        if nrm > 0.0 {
            out.row_mut(i).iter_mut().for_each(|x| *x /= nrm);
        }
    }
    out
}

fn project_out(m: &mut Matrix, i: usize) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (prev, rest) = data.split_at_mut(i * cols);
    let target = &mut rest[..cols];
    for j in 0..i {
        let basis = &prev[j * cols..(j + 1) * cols];
        let c = dot(basis, target);
        for (t, b) in target.iter_mut().zip(basis) {
            *t -= c * b;
        }
    }
}

/// One-sided Jacobi (Hestenes) on the rows of a square matrix `m`. Returns
/// `(left, sigma, right)` with `m = left · diag(sigma) · rightᵀ`, where `left` and
/// `right` are orthogonal and `right`'s columns are the normalized rotated rows.
fn jacobi_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let k = m.rows();
    let mut g = m.clone();
    let mut rot = Matrix::identity(k);
    for _sweep in 0..80 {
        let mut off = 0.0f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let alpha = dot(g.row(i), g.row(i));
                let beta = dot(g.row(j), g.row(j));
                let gamma = dot(g.row(i), g.row(j));
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let corr = libm::fabs(gamma) / libm::sqrt(alpha * beta);
                off = off.max(corr);
                if corr < 1e-15 {
                    continue;
                }
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (libm::fabs(zeta) + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut g, i, j, c, s);
                rotate_rows(&mut rot, i, j, c, s);
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    // g = rot · m with orthogonal rows, so m = rotᵀ · g = rotᵀ · diag(sigma) · right.
    let mut sigma = vec![0.0; k];
    let mut right = Matrix::zeros(k, k);
    for i in 0..k {
        let s = crate::linalg::norm(g.row(i));
        sigma[i] = s;
        for c in 0..k {
            right[(c, i)] = if s > 0.0 { g[(i, c)] / s } else { 0.0 };
        }
    }
    complete_basis(&mut right, &sigma);
    (rot.transpose(), sigma, right)
}

/// Fills zero columns of `q` (where `sigma` is zero) with orthonormal completions.
fn complete_basis(q: &mut Matrix, sigma: &[f64]) {
    if sigma.iter().all(|&s| s > 0.0) {
        return;
    }
    let mut t = q.transpose();
    let zero: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] == 0.0).collect();
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > 0.0).collect();
    let mut order = keep.clone();
    order.extend_from_slice(&zero);
    let reordered = t.select_rows(&order);
    let ortho = orthonormal_rows(&reordered);
    for (pos, &row) in order.iter().enumerate() {
        t.row_mut(row).copy_from_slice(ortho.row(pos));
    }
    *q = t.transpose();
}

fn rotate_rows(m: &mut Matrix, i: usize, j: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (a, b) = data.split_at_mut(j * cols);
    let ri = &mut a[i * cols..(i + 1) * cols];
    let rj = &mut b[..cols];
    for (x, y) in ri.iter_mut().zip(rj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}
