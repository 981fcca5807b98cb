//! Graph datasets, GCN propagation and zero-shot splits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::rng::{self, stream};

/// An undirected attributed graph with one gold label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    adjacency: CsrMatrix,
    features: CsrMatrix,
    labels: Vec<usize>,
    n_classes: usize,
}

/// What [`Dataset::from_edges`] had to clean up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

impl Dataset {
    /// Symmetrizes and deduplicates `edges`, drops self-loops and validates labels and
    /// features. The node count is the feature row count.
    pub fn from_edges(edges: &[(usize, usize)], features: CsrMatrix, labels: Vec<usize>) -> Result<(Self, BuildStats)> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!("{} labels for {} nodes", labels.len(), n)));
        }
        let mut stats = BuildStats::default();
        let mut undirected = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidDataset(format!("edge ({a}, {b}) references a node outside 0..{n}")));
            }
            if a == b {
                stats.self_loops_dropped += 1;
                continue;
            }
            undirected.push((a.min(b), a.max(b)));
        }
        undirected.sort_unstable();
        let before = undirected.len();
        undirected.dedup();
        stats.duplicate_edges_dropped = before - undirected.len();

        let mut triplets = Vec::with_capacity(2 * undirected.len());
        for &(a, b) in &undirected {
            triplets.push((a, b, 1.0));
            triplets.push((b, a, 1.0));
        }
        let adjacency = CsrMatrix::from_triplets(n, n, &triplets)?;
        let ds = Dataset::new(adjacency, features, labels)?;
        Ok((ds, stats))
    }

    /// Wraps an already-symmetric 0/1 adjacency matrix.
    pub fn new(adjacency: CsrMatrix, features: CsrMatrix, labels: Vec<usize>) -> Result<Self> {
        let n = adjacency.rows();
        if adjacency.cols() != n || features.rows() != n || labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "adjacency {}x{}, features {} rows, {} labels",
                adjacency.rows(),
                adjacency.cols(),
                features.rows(),
                labels.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidDataset("graph has no nodes".into()));
        }
        for r in 0..n {
            for (c, v) in adjacency.row(r) {
                if c == r {
                    return Err(Error::InvalidDataset(format!("self-loop on node {r}")));
                }
                if v != 1.0 {
                    return Err(Error::InvalidDataset(format!("adjacency entry ({r}, {c}) = {v}, expected 1")));
                }
            }
        }
        if !adjacency.is_symmetric() {
            return Err(Error::InvalidDataset("adjacency is not symmetric".into()));
        }
        if let Some(v) = features.values().iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDataset(format!("feature value {v} is negative or non-finite")));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::InvalidDataset(format!("class {c} has no member nodes")));
        }
        Ok(Dataset { adjacency, features, labels, n_classes })
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Undirected edge count.
    pub fn n_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &CsrMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for r in 0..self.n_nodes() {
            for (c, _) in self.adjacency.row(r) {
                if r < c {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Average node degree `2m / n`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.n_edges() as f64 / self.n_nodes() as f64
    }
}

/// `D̃^(-1/2) (A + I) D̃^(-1/2)`, with `D̃` the degree matrix of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix(CsrMatrix);

impl PropagationMatrix {
    pub fn from_dataset(ds: &Dataset) -> Self {
        Self::from_adjacency(ds.adjacency())
    }

    pub fn from_adjacency(a: &CsrMatrix) -> Self {
        let n = a.rows();
        let inv_sqrt: Vec<f64> = (0..n).map(|r| 1.0 / libm::sqrt(a.row_nnz(r) as f64 + 1.0)).collect();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(a.nnz() + n);
        let mut values = Vec::with_capacity(a.nnz() + n);
        indptr.push(0);
        for r in 0..n {
            let mut diag_done = false;
            for (c, _) in a.row(r) {
                if !diag_done && c > r {
                    indices.push(r);
                    values.push(inv_sqrt[r] * inv_sqrt[r]);
                    diag_done = true;
                }
                indices.push(c);
                values.push(inv_sqrt[r] * inv_sqrt[c]);
            }
            if !diag_done {
                indices.push(r);
                values.push(inv_sqrt[r] * inv_sqrt[r]);
            }
            indptr.push(indices.len());
        }
        PropagationMatrix(CsrMatrix::from_parts(n, n, indptr, indices, values).expect("valid CSR by construction"))
    }

    /// Accepts a precomputed matrix (e.g. from a cache) after checking the invariants.
    pub fn from_csr(m: CsrMatrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::InvalidArgument("propagation matrix must be square".into()));
        }
        if (0..m.rows()).any(|r| m.get(r, r) <= 0.0) || m.values().iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument("propagation entries must lie in (0, 1] with a positive diagonal".into()));
        }
        Ok(PropagationMatrix(m))
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }
}

/// Seen/unseen class partition plus the node sets used for training and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub seen: Vec<usize>,
    pub unseen: Vec<usize>,
    pub label_rate: f64,
    /// Probe nodes whose gold class is seen: the model's labeled set.
    pub train_labeled: Vec<usize>,
    /// Class-balanced nodes over all classes, used only by the SVM probe.
    pub probe_train: Vec<usize>,
    /// Every node outside `probe_train`.
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn is_seen(&self, class: usize) -> bool {
        self.seen.binary_search(&class).is_ok()
    }
}

/// Per-class probe quotas: `floor(total / C)` each, remainder to the lowest class ids,
/// and any shortfall from small classes moved to the lowest ids that still have room.
pub fn probe_quotas(total: usize, class_sizes: &[usize]) -> Result<Vec<usize>> {
    let c = class_sizes.len();
    let n: usize = class_sizes.iter().sum();
    if total > n {
        return Err(Error::InvalidArgument(format!("{total} probe nodes requested from {n} nodes")));
    }
    let base = total / c;
    let rem = total % c;
    let mut quotas: Vec<usize> = (0..c).map(|k| base + usize::from(k < rem)).collect();
    let mut deficit = 0;
    for (q, &size) in quotas.iter_mut().zip(class_sizes) {
        if *q > size {
            deficit += *q - size;
            *q = size;
        }
    }
    while deficit > 0 {
        let mut moved = false;
        for (q, &size) in quotas.iter_mut().zip(class_sizes) {
            if deficit > 0 && *q < size {
                *q += 1;
                deficit -= 1;
                moved = true;
            }
        }
        debug_assert!(moved, "total <= n guarantees room somewhere");
    }
    if let Some(k) = quotas.iter().position(|&q| q == 0) {
        return Err(Error::InvalidArgument(format!(
            "label rate too small: {total} probe nodes over {c} classes leaves class {k} with none"
        )));
    }
    Ok(quotas)
}

/// Draws `n_unseen` unseen classes and a class-balanced probe set of
/// `round(label_rate · n)` nodes.
pub fn make_zero_shot_split(ds: &Dataset, label_rate: f64, n_unseen: usize, seed: u64) -> Result<SplitSpec> {
    let c = ds.n_classes();
    if !(label_rate > 0.0 && label_rate < 1.0) {
        return Err(Error::InvalidArgument(format!("label rate {label_rate} outside (0, 1)")));
    }
    if n_unseen == 0 || n_unseen >= c {
        return Err(Error::InvalidArgument(format!("n_unseen = {n_unseen} must lie in [1, {})", c)));
    }
    let mut r = rng::seeded(rng::derive_seed(seed, stream::SPLIT_UNSEEN));
    let mut unseen = rng::sample_without_replacement(&mut r, c, n_unseen);
    unseen.sort_unstable();
    let seen: Vec<usize> = (0..c).filter(|k| unseen.binary_search(k).is_err()).collect();

    let total = libm::round(label_rate * ds.n_nodes() as f64) as usize;
    let quotas = probe_quotas(total, &ds.class_sizes())?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); c];
    for (node, &l) in ds.labels().iter().enumerate() {
        members[l].push(node);
    }
    let mut r = rng::seeded(rng::derive_seed(seed, stream::SPLIT_PROBE));
    let mut probe_train = Vec::with_capacity(total);
    for (class_members, &q) in members.iter_mut().zip(&quotas) {
        rng::shuffle(&mut r, class_members);
        probe_train.extend_from_slice(&class_members[..q]);
    }
    probe_train.sort_unstable();

    let train_labeled: Vec<usize> =
        probe_train.iter().copied().filter(|&v| seen.binary_search(&ds.labels()[v]).is_ok()).collect();
    let mut in_probe = vec![false; ds.n_nodes()];
    for &v in &probe_train {
        in_probe[v] = true;
    }
    let test: Vec<usize> = (0..ds.n_nodes()).filter(|&v| !in_probe[v]).collect();

    Ok(SplitSpec { seen, unseen, label_rate, train_labeled, probe_train, test, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn empty_features(n: usize) -> CsrMatrix {
        CsrMatrix::from_triplets(n, 1, &[]).unwrap()
    }

    fn toy(edges: &[(usize, usize)], labels: Vec<usize>) -> Dataset {
        let n = labels.len();
        Dataset::from_edges(edges, empty_features(n), labels).unwrap().0
    }

    #[test]
    fn duplicate_edges_collapse() {
        let (ds, stats) = Dataset::from_edges(&[(0, 1), (0, 1)], empty_features(2), vec![0, 0]).unwrap();
        assert_eq!(ds.n_edges(), 1);
        assert_eq!(stats.duplicate_edges_dropped, 1);
    }

    #[test]
    fn reversed_edge_is_a_duplicate_and_self_loops_drop() {
        let (ds, stats) = Dataset::from_edges(&[(0, 1), (1, 0), (2, 2)], empty_features(3), vec![0, 1, 0]).unwrap();
        assert_eq!(ds.n_edges(), 1);
        assert_eq!(stats.self_loops_dropped, 1);
        assert!(ds.adjacency().is_symmetric());
    }

    #[test]
    fn rejects_out_of_range_and_empty_class() {
        assert!(Dataset::from_edges(&[(0, 5)], empty_features(2), vec![0, 0]).is_err());
        assert!(matches!(
            Dataset::from_edges(&[], empty_features(2), vec![0, 2]),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn single_node_propagation() {
        let ds = toy(&[], vec![0]);
        let p = PropagationMatrix::from_dataset(&ds);
        assert_eq!(p.matrix().to_dense(), Matrix::identity(1));
    }

    #[test]
    fn two_node_propagation_is_all_halves() {
        let ds = toy(&[(0, 1)], vec![0, 0]);
        let p = PropagationMatrix::from_dataset(&ds).matrix().to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p[(i, j)] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn path_graph_matches_dense_formula() {
        let ds = toy(&[(0, 1), (1, 2)], vec![0, 0, 0]);
        let p = PropagationMatrix::from_dataset(&ds).matrix().to_dense();
        // Oracle: dense D^-1/2 (A + I) D^-1/2 on the 3x3 matrix.
        let a_hat = [[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]];
        let deg: Vec<f64> = a_hat.iter().map(|r| r.iter().sum::<f64>()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let want = a_hat[i][j] / (deg[i] * deg[j]).sqrt();
                assert!((p[(i, j)] - want).abs() < 1e-15, "({i},{j})");
            }
        }
        let sums = PropagationMatrix::from_dataset(&ds).matrix().row_sums();
        let ones = Matrix::filled(3, 1, 1.0);
        let prod = PropagationMatrix::from_dataset(&ds).matrix().spmm(&ones).unwrap();
        for i in 0..3 {
            assert!((prod[(i, 0)] - sums[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn average_degree_cases() {
        assert_eq!(toy(&[], vec![0]).average_degree(), 0.0);
        assert_eq!(toy(&[(0, 1), (1, 2), (0, 2)], vec![0, 0, 0]).average_degree(), 2.0);
    }

    #[test]
    fn quotas_balance_and_cap() {
        assert_eq!(probe_quotas(10, &[5, 5, 5]).unwrap(), vec![4, 3, 3]);
        // Class 1 only has 2 members; its shortfall moves to the lowest ids with room.
        assert_eq!(probe_quotas(12, &[10, 2, 10]).unwrap(), vec![5, 2, 5]);
        assert!(probe_quotas(2, &[5, 5, 5]).is_err());
    }

    #[test]
    fn citeseer_sized_probe_count() {
        // 3312 * 0.05 = 165.6 -> 166 probe nodes.
        assert_eq!(libm::round(0.05 * 3312.0) as usize, 166);
        let q = probe_quotas(166, &[249, 590, 668, 701, 596, 508]).unwrap();
        assert_eq!(q.iter().sum::<usize>(), 166);
        assert_eq!(q, vec![28, 28, 28, 28, 27, 27]);
    }

    #[test]
    fn split_rejects_bad_arguments() {
        let ds = toy(&[], vec![0, 1, 2, 0, 1, 2]);
        assert!(make_zero_shot_split(&ds, 0.5, 3, 0).is_err());
        assert!(make_zero_shot_split(&ds, 0.5, 0, 0).is_err());
        assert!(make_zero_shot_split(&ds, 1.0, 1, 0).is_err());
        assert!(make_zero_shot_split(&ds, 0.1, 1, 0).is_err());
    }
}
