//! Label expansion.
//!
//! * Seen-class self-training: every unlabeled node is a candidate for the seen
//!   prototype nearest to its predicted semantics, and each seen class takes its
//!   quota of nearest candidates.
//! * Cluster expansion: k-means over the embeddings; each cluster takes its quota of
//!   unlabeled members nearest to its center as a new pseudo-class.
//!
//! Both strategies fill the budget `round(n / ζ^τ)` minus the original labeled count,
//! split evenly over the target classes. Quota a class cannot fill moves round-robin
//! to the lowest-id classes that still have candidates.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::SplitSpec;
use crate::linalg::{squared_distance, Matrix};
use crate::model::{LabelId, LabelKind, LabeledNode, SemanticTable};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionBudget {
    /// Target labeled-set size after expansion.
    pub total_target: usize,
    /// New slots per target class (or cluster), in ascending target order.
    pub quotas: Vec<usize>,
    pub layers: u32,
    pub avg_degree: f64,
}

impl ExpansionBudget {
    pub fn new_slots(&self) -> usize {
        self.quotas.iter().sum()
    }
}

/// `T = round(n / ζ^τ)`; the `max(0, T - labeled_size)` new slots are split into
/// near-equal quotas, remainder to the lowest ids.
pub fn expansion_budget(n: usize, avg_degree: f64, layers: u32, labeled_size: usize, n_targets: usize) -> Result<ExpansionBudget> {
    if !(avg_degree > 0.0) || !avg_degree.is_finite() {
        return Err(Error::InvalidArgument(format!("average degree {avg_degree} must be positive")));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument("layer count must be at least 1".into()));
    }
    if n_targets == 0 {
        return Err(Error::InvalidArgument("expansion needs at least one target class".into()));
    }
    let total_target = libm::round(n as f64 / libm::pow(avg_degree, layers as f64)) as usize;
    let slots = total_target.saturating_sub(labeled_size);
    let base = slots / n_targets;
    let rem = slots % n_targets;
    let quotas = (0..n_targets).map(|k| base + usize::from(k < rem)).collect();
    Ok(ExpansionBudget { total_target, quotas, layers, avg_degree })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Original,
    Expanded,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Expanded => "expanded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpandedEntry {
    pub label: LabelId,
    pub provenance: Provenance,
    pub kind: LabelKind,
}

/// Node → label assignments after expansion, original entries included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpandedLabels {
    entries: BTreeMap<usize, ExpandedEntry>,
    /// Slots moved away from a class that ran out of candidates.
    pub reallocated: usize,
}

impl ExpandedLabels {
    /// The split's labeled nodes with their gold classes.
    pub fn original(split: &SplitSpec, gold: &[usize]) -> Self {
        let entries = split
            .train_labeled
            .iter()
            .map(|&v| (v, ExpandedEntry { label: gold[v], provenance: Provenance::Original, kind: LabelKind::Real }))
            .collect();
        ExpandedLabels { entries, reallocated: 0 }
    }

    pub fn get(&self, node: usize) -> Option<&ExpandedEntry> {
        self.entries.get(&node)
    }

    pub fn contains(&self, node: usize) -> bool {
        self.entries.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ExpandedEntry)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.entries.values().filter(|e| e.provenance == provenance).count()
    }

    /// Training view, sorted by node.
    pub fn labeled_nodes(&self) -> Vec<LabeledNode> {
        self.entries.iter().map(|(&node, e)| LabeledNode { node, label: e.label, kind: e.kind }).collect()
    }

    fn push_expanded(&mut self, node: usize, label: LabelId, kind: LabelKind) {
        let prev = self.entries.insert(node, ExpandedEntry { label, provenance: Provenance::Expanded, kind });
        debug_assert!(prev.is_none(), "node {node} labeled twice");
    }
}

/// Per-target candidates sorted by `(distance, node)` → how many each target takes.
fn allocate(candidates: &[Vec<(f64, usize)>], quotas: &[usize]) -> (Vec<usize>, usize) {
    let mut take: Vec<usize> = candidates.iter().zip(quotas).map(|(c, &q)| q.min(c.len())).collect();
    let mut leftover: usize = quotas.iter().zip(&take).map(|(q, t)| q - t).sum();
    let reallocated = leftover;
    while leftover > 0 {
        let mut moved = false;
        for (t, c) in take.iter_mut().zip(candidates) {
            if leftover > 0 && *t < c.len() {
                *t += 1;
                leftover -= 1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    (take, reallocated - leftover)
}

fn sort_candidates(list: &mut [(f64, usize)]) {
    list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

/// Seen-class self-training over the predicted semantics `pred` (one row per node).
pub fn expand_seen(pred: &Matrix, table: &SemanticTable, split: &SplitSpec, gold: &[usize], budget: &ExpansionBudget) -> Result<ExpandedLabels> {
    if budget.quotas.len() != split.seen.len() {
        return Err(Error::InvalidArgument(format!(
            "{} quotas for {} seen classes",
            budget.quotas.len(),
            split.seen.len()
        )));
    }
    let mut out = ExpandedLabels::original(split, gold);
    let protos: Vec<&[f64]> = split
        .seen
        .iter()
        .map(|&c| table.get(c).map(|p| p.vector.as_slice()).ok_or(Error::MissingPrototype(c)))
        .collect::<Result<_>>()?;
    if budget.new_slots() == 0 {
        return Ok(out);
    }
    if protos.first().is_some_and(|p| p.len() != pred.cols()) {
        return Err(Error::dims("expand_seen", format!("prototype dim vs prediction width {}", pred.cols())));
    }
    let mut candidates: Vec<Vec<(f64, usize)>> = vec![Vec::new(); protos.len()];
    let mut any = false;
    for node in 0..pred.rows() {
        if out.contains(node) {
            continue;
        }
        any = true;
        let row = pred.row(node);
        let mut best = (f64::INFINITY, 0usize);
        for (slot, p) in protos.iter().enumerate() {
            let d = squared_distance(row, p);
            if d < best.0 {
                best = (d, slot);
            }
        }
        candidates[best.1].push((best.0, node));
    }
    if !any {
        return Err(Error::EmptyCandidatePool);
    }
    candidates.iter_mut().for_each(|c| sort_candidates(c));
    let (take, moved) = allocate(&candidates, &budget.quotas);
    if moved > 0 {
        log::warn!("seen-class expansion moved {moved} slots away from classes without enough candidates");
    }
    for (slot, (&t, list)) in take.iter().zip(&candidates).enumerate() {
        for &(_, node) in &list[..t] {
            out.push_expanded(node, split.seen[slot], LabelKind::Real);
        }
    }
    out.reallocated = moved;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub k: usize,
    pub centers: Matrix,
    pub assignment: Vec<usize>,
    /// Sum of squared distances to the assigned centers.
    pub inertia: f64,
    /// Inertia after every assignment step, final one included.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

pub const KMEANS_MAX_ITER: usize = 100;
pub const KMEANS_TOL: f64 = 1e-4;

fn nearest_center(point: &[f64], centers: &Matrix) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for c in 0..centers.rows() {
        let d = squared_distance(point, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &Matrix, centers: &Matrix, assignment: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for i in 0..points.rows() {
        let (c, d) = nearest_center(points.row(i), centers);
        assignment[i] = c;
        dist[i] = d;
        inertia += d;
    }
    inertia
}

fn kmeans_plus_plus(points: &Matrix, k: usize, r: &mut rng::Rng) -> Matrix {
    let n = points.rows();
    let mut centers = Matrix::zeros(k, points.cols());
    let first = rng::below(r, n);
    centers.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(points.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng::uniform(r) * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng::below(r, n)
        };
        centers.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), centers.row(c)));
        }
    }
    centers
}

/// k-means++ seeding followed by Lloyd iterations until every center moves less than
/// `1e-4` or 100 iterations pass. An empty cluster is re-seeded at the point farthest
/// from its current center.
pub fn kmeans(points: &Matrix, k: usize, seed: u64) -> Result<Clustering> {
    let (n, dim) = points.shape();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in [1, {n}]")));
    }
    if !points.is_finite() {
        return Err(Error::NonFinite("k-means input points".into()));
    }
    let mut r = rng::seeded(seed);
    let mut centers = kmeans_plus_plus(points, k, &mut r);
    let mut assignment = vec![0usize; n];
    let mut dist = vec![0.0; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITER {
        iterations += 1;
        history.push(assign(points, &centers, &mut assignment, &mut dist));

        let mut sums = Matrix::zeros(k, dim);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignment[i];
            counts[c] += 1;
            for (s, v) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut next = sums;
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                let inv = counts[c] as f64;
                next.row_mut(c).iter_mut().for_each(|v| *v /= inv);
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .fold(None::<(usize, f64)>, |best, i| match best {
                        Some((_, bd)) if dist[i] <= bd => best,
                        _ => Some((i, dist[i])),
                    })
                    .map_or(0, |(i, _)| i);
                taken[far] = true;
                dist[far] = 0.0;
                next.row_mut(c).copy_from_slice(points.row(far));
            }
        }
        let shift = (0..k)
            .map(|c| libm::sqrt(squared_distance(next.row(c), centers.row(c))))
            .fold(0.0, f64::max);
        centers = next;
        if shift < KMEANS_TOL {
            break;
        }
    }
    let inertia = assign(points, &centers, &mut assignment, &mut dist);
    history.push(inertia);
    Ok(Clustering { k, centers, assignment, inertia, inertia_history: history, iterations })
}

/// Mean silhouette from a dense row-major `n × n` distance matrix.
pub fn silhouette_from_distances(dist: &[f64], assignment: &[usize]) -> Result<f64> {
    let n = assignment.len();
    if dist.len() != n * n {
        return Err(Error::dims("silhouette", format!("{} distances for {n} points", dist.len())));
    }
    let k = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &a in assignment {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::InvalidArgument("silhouette needs at least two non-empty clusters".into()));
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        let own = assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let row = &dist[i * n..(i + 1) * n];
        for (j, &d) in row.iter().enumerate() {
            sums[assignment[j]] += d;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

pub fn pairwise_distances(points: &Matrix) -> Vec<f64> {
    let n = points.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = libm::sqrt(squared_distance(points.row(i), points.row(j)));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Mean silhouette coefficient with Euclidean distances. A point alone in its
/// cluster scores 0, as does a point with `a = b = 0`.
pub fn silhouette_score(points: &Matrix, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != points.rows() {
        return Err(Error::dims("silhouette_score", format!("{} labels for {} points", assignment.len(), points.rows())));
    }
    silhouette_from_distances(&pairwise_distances(points), assignment)
}

pub const SILHOUETTE_SAMPLE_THRESHOLD: usize = 5000;
pub const SILHOUETTE_SAMPLE_SIZE: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub best_k: usize,
    /// `(k, silhouette)` for every k tried; `None` when the scored sample held fewer
    /// than two clusters.
    pub scores: Vec<(usize, Option<f64>)>,
    pub best: Clustering,
}

/// Per-k clustering seed used by [`select_k_silhouette`].
pub fn kmeans_seed_for_k(seed: u64, k: usize) -> u64 {
    rng::derive_seed(seed, 1000 + k as u64)
}

/// Runs k-means for each `k` in `[k_min, k_max]` and keeps the one with the highest
/// silhouette (ties → smaller k). Above 5000 points the silhouette is computed on a
/// seeded sample of 2000.
pub fn select_k_silhouette(points: &Matrix, k_min: usize, k_max: usize, seed: u64) -> Result<KSelection> {
    let n = points.rows();
    if k_min < 2 || k_min > k_max || k_max > n {
        return Err(Error::InvalidArgument(format!("k range [{k_min}, {k_max}] invalid for {n} points")));
    }
    let sample: Vec<usize> = if n > SILHOUETTE_SAMPLE_THRESHOLD {
        let mut r = rng::seeded(rng::derive_seed(seed, rng::stream::SILHOUETTE));
        let mut s = rng::sample_without_replacement(&mut r, n, SILHOUETTE_SAMPLE_SIZE);
        s.sort_unstable();
        s
    } else {
        (0..n).collect()
    };
    let dist = pairwise_distances(&points.select_rows(&sample));
    let mut scores = Vec::new();
    let mut best: Option<(f64, Clustering)> = None;
    for k in k_min..=k_max {
        let clustering = kmeans(points, k, kmeans_seed_for_k(seed, k))?;
        let mut sub: Vec<usize> = sample.iter().map(|&i| clustering.assignment[i]).collect();
        compact_labels(&mut sub);
        let score = silhouette_from_distances(&dist, &sub).ok();
        scores.push((k, score));
        if let Some(s) = score {
            if best.as_ref().is_none_or(|(bs, _)| s > *bs) {
                best = Some((s, clustering));
            }
        }
    }
    let best = match best {
        Some((_, c)) => c,
        None => kmeans(points, k_min, kmeans_seed_for_k(seed, k_min))?,
    };
    Ok(KSelection { best_k: best.k, scores, best })
}

/// Renumbers labels to `0..m` in order of first appearance of each distinct value
/// sorted ascending, so empty ids do not inflate the cluster count.
fn compact_labels(labels: &mut [usize]) {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for l in labels.iter_mut() {
        *l = distinct.binary_search(l).unwrap();
    }
}

/// Cluster expansion: each cluster's quota of unlabeled members nearest its center
/// becomes pseudo-class `pseudo_offset + cluster`. Original labels are kept.
pub fn expand_clusters(
    embeddings: &Matrix,
    clustering: &Clustering,
    split: &SplitSpec,
    gold: &[usize],
    budget: &ExpansionBudget,
    pseudo_offset: LabelId,
) -> Result<ExpandedLabels> {
    if clustering.assignment.len() != embeddings.rows() || clustering.centers.cols() != embeddings.cols() {
        return Err(Error::dims("expand_clusters", "clustering computed over a different point set".into()));
    }
    if budget.quotas.len() != clustering.k {
        return Err(Error::InvalidArgument(format!("{} quotas for {} clusters", budget.quotas.len(), clustering.k)));
    }
    let mut out = ExpandedLabels::original(split, gold);
    if budget.new_slots() == 0 {
        return Ok(out);
    }
    let mut candidates: Vec<Vec<(f64, usize)>> = vec![Vec::new(); clustering.k];
    for node in 0..embeddings.rows() {
        if out.contains(node) {
            continue;
        }
        let c = clustering.assignment[node];
        candidates[c].push((squared_distance(embeddings.row(node), clustering.centers.row(c)), node));
    }
    if candidates.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCandidatePool);
    }
    candidates.iter_mut().for_each(|c| sort_candidates(c));
    let (take, moved) = allocate(&candidates, &budget.quotas);
    if moved > 0 {
        log::warn!("cluster expansion moved {moved} slots away from clusters without enough unlabeled members");
    }
    for (cluster, (&t, list)) in take.iter().zip(&candidates).enumerate() {
        for &(_, node) in &list[..t] {
            out.push_expanded(node, pseudo_offset + cluster, LabelKind::Pseudo);
        }
    }
    out.reallocated = moved;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_fn(rows.len(), 2, |i, j| rows[i][j])
    }

    fn split_with(labeled: Vec<usize>, seen: Vec<usize>, n: usize) -> SplitSpec {
        SplitSpec {
            seen,
            unseen: vec![],
            label_rate: 0.1,
            probe_train: labeled.clone(),
            test: (0..n).filter(|v| !labeled.contains(v)).collect(),
            train_labeled: labeled,
            seed: 0,
        }
    }

    #[test]
    fn budget_examples() {
        let zeta = 2.0 * 5429.0 / 2708.0;
        assert_eq!(expansion_budget(2708, zeta, 2, 0, 1).unwrap().total_target, 168);
        let b = expansion_budget(2708, zeta, 2, 500, 3).unwrap();
        assert_eq!(b.new_slots(), 0);
        // T = round(40 / 2^2) = 10, 4 labeled, 3 classes.
        let b = expansion_budget(40, 2.0, 2, 4, 3).unwrap();
        assert_eq!((b.total_target, b.quotas.clone()), (10, vec![2, 2, 2]));
        let b = expansion_budget(44, 2.0, 2, 4, 3).unwrap();
        assert_eq!(b.quotas, vec![3, 2, 2]);
        assert!(expansion_budget(10, 0.0, 2, 0, 1).is_err());
    }

    #[test]
    fn allocation_moves_unfilled_quota() {
        let c = vec![vec![(0.0, 1)], vec![(0.0, 2), (1.0, 3), (2.0, 4)], vec![]];
        let (take, moved) = allocate(&c, &[2, 1, 2]);
        assert_eq!(take, vec![1, 3, 0]);
        assert_eq!(moved, 2);
    }

    #[test]
    fn kmeans_two_far_pairs() {
        let p = pts(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]);
        let c = kmeans(&p, 2, 3).unwrap();
        let mut centers: Vec<(f64, f64)> = (0..2).map(|k| (c.centers[(k, 0)], c.centers[(k, 1)])).collect();
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(centers, vec![(0.0, 0.5), (10.0, 0.5)]);
        // Four points, each 0.5 from its pair midpoint.
        assert!((c.inertia - 4.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn kmeans_k_equals_n_has_zero_inertia() {
        let p = pts(&[[0.0, 0.0], [1.0, 3.0], [4.0, 1.0], [2.0, 2.0], [5.0, 5.0]]);
        assert_eq!(kmeans(&p, 5, 1).unwrap().inertia, 0.0);
        assert!(kmeans(&p, 6, 1).is_err());
    }

    #[test]
    fn kmeans_rejects_nan() {
        let p = pts(&[[0.0, f64::NAN], [1.0, 1.0]]);
        assert!(matches!(kmeans(&p, 1, 0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn silhouette_two_tight_pairs() {
        let p = pts(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]]);
        let s = silhouette_score(&p, &[0, 0, 1, 1]).unwrap();
        // a = 1 for every point; b = (10 + sqrt(101)) / 2.
        let b = (10.0 + 101f64.sqrt()) / 2.0;
        assert!((s - (b - 1.0) / b).abs() < 1e-12);
        assert!(s > 0.9);
    }

    #[test]
    fn silhouette_degenerate_cases() {
        let p = pts(&[[1.0, 1.0]; 4]);
        assert_eq!(silhouette_score(&p, &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(silhouette_score(&p, &[0, 0, 0, 0]).is_err());
        let q = pts(&[[0.0, 0.0], [5.0, 0.0], [5.0, 1.0]]);
        // Point 0 is a singleton and contributes 0.
        let s = silhouette_score(&q, &[0, 1, 1]).unwrap();
        let s1 = (5.0 - 1.0) / 5.0;
        let s2 = (26f64.sqrt() - 1.0) / 26f64.sqrt();
        assert!((s - (s1 + s2) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn select_k_single_value_range() {
        let p = pts(&[[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0], [5.0, 9.0]]);
        assert_eq!(select_k_silhouette(&p, 3, 3, 0).unwrap().best_k, 3);
        assert!(select_k_silhouette(&p, 1, 3, 0).is_err());
    }

    #[test]
    fn expand_seen_zero_quota_is_identity() {
        let pred = pts(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        let mut t = SemanticTable::new();
        t.insert(0, vec![0.0, 0.0], LabelKind::Real).unwrap();
        let split = split_with(vec![0], vec![0], 3);
        let budget = ExpansionBudget { total_target: 1, quotas: vec![0], layers: 2, avg_degree: 1.0 };
        let out = expand_seen(&pred, &t, &split, &[0, 0, 0], &budget).unwrap();
        assert_eq!(out, ExpandedLabels::original(&split, &[0, 0, 0]));
    }

    #[test]
    fn expand_seen_tie_goes_to_lower_class() {
        // Node 2 sits exactly between the prototypes of classes 0 and 1.
        let pred = pts(&[[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]]);
        let mut t = SemanticTable::new();
        t.insert(0, vec![-1.0, 0.0], LabelKind::Real).unwrap();
        t.insert(1, vec![1.0, 0.0], LabelKind::Real).unwrap();
        let split = split_with(vec![0, 1], vec![0, 1], 3);
        let budget = ExpansionBudget { total_target: 3, quotas: vec![1, 0], layers: 2, avg_degree: 1.0 };
        let out = expand_seen(&pred, &t, &split, &[0, 1, 0], &budget).unwrap();
        assert_eq!(out.get(2).unwrap().label, 0);
        assert_eq!(out.get(2).unwrap().provenance, Provenance::Expanded);
    }

    #[test]
    fn expand_clusters_never_relabels() {
        let emb = pts(&[[0.0, 0.0], [0.1, 0.0], [9.0, 9.0], [9.1, 9.0]]);
        let c = kmeans(&emb, 2, 0).unwrap();
        let split = split_with(vec![0], vec![0], 4);
        let budget = ExpansionBudget { total_target: 5, quotas: vec![2, 2], layers: 2, avg_degree: 1.0 };
        let out = expand_clusters(&emb, &c, &split, &[0, 0, 1, 1], &budget, 2).unwrap();
        assert_eq!(out.get(0).unwrap().provenance, Provenance::Original);
        assert_eq!(out.get(0).unwrap().label, 0);
        assert_eq!(out.count(Provenance::Expanded), 3);
        assert_eq!(out.reallocated, 0);
        for (_, e) in out.iter().filter(|(_, e)| e.provenance == Provenance::Expanded) {
            assert_eq!(e.kind, LabelKind::Pseudo);
            assert!(e.label >= 2);
        }
    }
}
