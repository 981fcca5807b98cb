#![allow(dead_code)]

pub mod checks;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zge_core::{CsrMatrix, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))
}

/// Sparse nonnegative matrix with roughly `density` of the entries set.
pub fn random_sparse(r: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> CsrMatrix {
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if r.random_bool(density) {
                t.push((i, j, r.random_range(0.1..2.0)));
            }
        }
    }
    CsrMatrix::from_triplets(rows, cols, &t).unwrap()
}

/// Connected random graph: a path plus extra random edges.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
    for _ in 0..extra {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a != b {
            edges.push((a, b));
        }
    }
    edges
}

pub fn naive_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), b.cols(), |i, j| (0..a.cols()).map(|k| a[(i, k)] * b[(k, j)]).sum())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut a = m.clone();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Brute-force top-k selection: target `t` may claim node `v` iff `eligible(v) == Some(t)`,
/// ranks by `dist(v, t)` then node id, and fills quotas one pick at a time. Unfilled
/// quota is then handed out one slot per round to targets in id order.
pub fn brute_select(
    n: usize,
    quotas: &[usize],
    excluded: &[usize],
    eligible: impl Fn(usize) -> Option<usize>,
    dist: impl Fn(usize, usize) -> f64,
) -> std::collections::BTreeMap<usize, usize> {
    let mut taken = std::collections::BTreeMap::new();
    let pick = |t: usize, taken: &std::collections::BTreeMap<usize, usize>| -> Option<usize> {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if excluded.contains(&v) || taken.contains_key(&v) || eligible(v) != Some(t) {
                continue;
            }
            best = match best {
                None => Some(v),
                Some(b) if dist(v, t) < dist(b, t) => Some(v),
                keep => keep,
            };
        }
        best
    };
    let mut missing = 0;
    for (t, &q) in quotas.iter().enumerate() {
        for _ in 0..q {
            match pick(t, &taken) {
                Some(v) => {
                    taken.insert(v, t);
                }
                None => missing += 1,
            }
        }
    }
    while missing > 0 {
        let mut progressed = false;
        for t in 0..quotas.len() {
            if missing == 0 {
                break;
            }
            if let Some(v) = pick(t, &taken) {
                taken.insert(v, t);
                missing -= 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    taken
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest row of `centers` to `p`, ties to the lowest index.
pub fn nearest(p: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    for (k, c) in centers.iter().enumerate() {
        if sq_dist(p, c) < sq_dist(p, &centers[best]) {
            best = k;
        }
    }
    best
}

/// Snaps to a coarse grid so that exact distance ties actually occur.
pub fn grid_point(r: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| r.random_range(-4i32..=4) as f64 * 0.5).collect()
}

/// Planted-partition graph with class-dependent sparse bag-of-words features.
pub fn planted_dataset(seed: u64, n: usize, classes: usize, dim: usize, edges_per_node: usize) -> zge_core::Dataset {
    let mut r = rng(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for _ in 0..edges_per_node {
            let same = r.random_bool(0.85);
            let j = loop {
                let j = r.random_range(0..n);
                if j != i && (labels[j] == labels[i]) == same {
                    break j;
                }
            };
            edges.push((i, j));
        }
    }
    let block = dim / classes;
    let mut feats = std::collections::BTreeSet::new();
    for i in 0..n {
        for _ in 0..6 {
            let col = if r.random_bool(0.6) { labels[i] * block + r.random_range(0..block) } else { r.random_range(0..dim) };
            feats.insert((i, col));
        }
    }
    let triplets: Vec<(usize, usize, f64)> = feats.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
    let x = CsrMatrix::from_triplets(n, dim, &triplets).unwrap();
    zge_core::Dataset::from_edges(&edges, x, labels).unwrap().0
}
