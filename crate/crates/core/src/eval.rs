//! Downstream evaluation: the linear SVM probe, F1 scores, embedding concatenation and
//! empirical risk diagnostics.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expansion::ExpandedLabels;
use crate::graph::SplitSpec;
use crate::linalg::{dot, norm, Matrix};
use crate::model::{EmbeddingKind, EmbeddingMatrix, SemanticTable};
use crate::rng::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    /// Soft-margin constant; the regularization strength is `1 / (C · m)` for `m`
    /// training points.
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, epochs: 50, seed: 0 }
    }
}

/// One-vs-rest linear SVM. Each row of `weights` is `[w | b]`; the bias multiplies a
/// constant feature equal to the mean training row norm, which keeps predictions
/// invariant when features are scaled by `s` and `C` by `1 / s²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub classes: Vec<usize>,
    pub weights: Matrix,
    pub bias_feature: f64,
}

impl SvmModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..self.classes.len())
            .map(|k| {
                let w = self.weights.row(k);
                dot(&w[..d], x) + w[d] * self.bias_feature
            })
            .collect()
    }

    /// Highest-scoring class; ties go to the smallest class id.
    pub fn predict_one(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for k in 1..s.len() {
            if s[k] > s[best] {
                best = k;
            }
        }
        self.classes[best]
    }

    pub fn predict(&self, features: &Matrix) -> Vec<usize> {
        (0..features.rows()).map(|i| self.predict_one(features.row(i))).collect()
    }
}

/// Pegasos-style subgradient descent on the L2-regularized hinge loss, one binary
/// problem per class, step `1 / (λ t)`, a fresh seeded shuffle each epoch.
pub fn train_linear_svm(features: &Matrix, labels: &[usize], cfg: &SvmConfig) -> Result<SvmModel> {
    let (m, d) = features.shape();
    if labels.len() != m {
        return Err(Error::dims("train_linear_svm", format!("{} labels for {m} rows", labels.len())));
    }
    if !(cfg.c > 0.0) {
        return Err(Error::InvalidArgument(format!("SVM C = {} must be positive", cfg.c)));
    }
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::InvalidArgument("SVM probe needs at least two classes".into()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("SVM features".into()));
    }
    let mean_norm = (0..m).map(|i| norm(features.row(i))).sum::<f64>() / m as f64;
    let bias_feature = if mean_norm > 0.0 { mean_norm } else { 1.0 };
    let lambda = 1.0 / (cfg.c * m as f64);
    let radius = 1.0 / libm::sqrt(lambda);

    let orders: Vec<Vec<usize>> = (0..cfg.epochs)
        .map(|e| {
            let mut r = rng::seeded(rng::derive_seed(cfg.seed, e as u64));
            let mut order: Vec<usize> = (0..m).collect();
            rng::shuffle(&mut r, &mut order);
            order
        })
        .collect();

    let mut weights = Matrix::zeros(classes.len(), d + 1);
    for (k, &class) in classes.iter().enumerate() {
        let w = weights.row_mut(k);
        let mut t = 0u64;
        for order in &orders {
            for &i in order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let x = features.row(i);
                let y = if labels[i] == class { 1.0 } else { -1.0 };
                let margin = y * (dot(&w[..d], x) + w[d] * bias_feature);
                let shrink = 1.0 - 1.0 / t as f64;
                w.iter_mut().for_each(|v| *v *= shrink);
                if margin < 1.0 {
                    for (wv, xv) in w[..d].iter_mut().zip(x) {
                        *wv += eta * y * xv;
                    }
                    w[d] += eta * y * bias_feature;
                }
                let nw = norm(w);
                if nw > radius {
                    let s = radius / nw;
                    w.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
    }
    Ok(SvmModel { classes, weights, bias_feature })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Scores {
    pub micro: f64,
    pub macro_: f64,
}

/// Micro-F1 from pooled counts and macro-F1 as the unweighted mean over every class
/// seen in either vector (a class never predicted correctly scores 0).
pub fn micro_macro_f1(predictions: &[usize], gold: &[usize]) -> Result<F1Scores> {
    if predictions.len() != gold.len() {
        return Err(Error::dims("micro_macro_f1", format!("{} predictions vs {} gold", predictions.len(), gold.len())));
    }
    if gold.is_empty() {
        return Err(Error::InvalidArgument("F1 of an empty prediction set".into()));
    }
    let k = predictions.iter().chain(gold).max().copied().unwrap_or(0) + 1;
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fneg = vec![0usize; k];
    let mut present = vec![false; k];
    for (&p, &g) in predictions.iter().zip(gold) {
        present[p] = true;
        present[g] = true;
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[g] += 1;
        }
    }
    let f1 = |tp: usize, fp: usize, fneg: usize| {
        let denom = 2 * tp + fp + fneg;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    };
    let (stp, sfp, sfn) = (tp.iter().sum(), fp.iter().sum(), fneg.iter().sum());
    let micro = f1(stp, sfp, sfn);
    let classes: Vec<usize> = (0..k).filter(|&c| present[c]).collect();
    let macro_ = classes.iter().map(|&c| f1(tp[c], fp[c], fneg[c])).sum::<f64>() / classes.len() as f64;
    Ok(F1Scores { micro, macro_ })
}

pub fn accuracy(predictions: &[usize], gold: &[usize]) -> f64 {
    let hits = predictions.iter().zip(gold).filter(|(p, g)| p == g).count();
    hits as f64 / gold.len().max(1) as f64
}

/// Row-wise `[a | b]`.
pub fn concat_embeddings(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    Ok(EmbeddingMatrix { matrix: a.matrix.hconcat(&b.matrix)?, kind: EmbeddingKind::Concatenated })
}

/// Fits the probe on `split.probe_train` and scores `split.test`.
pub fn probe_scores(embeddings: &Matrix, split: &SplitSpec, gold: &[usize], cfg: &SvmConfig) -> Result<(F1Scores, f64)> {
    let train_x = embeddings.select_rows(&split.probe_train);
    let train_y: Vec<usize> = split.probe_train.iter().map(|&v| gold[v]).collect();
    let svm = train_linear_svm(&train_x, &train_y, cfg)?;
    let test_x = embeddings.select_rows(&split.test);
    let test_y: Vec<usize> = split.test.iter().map(|&v| gold[v]).collect();
    let pred = svm.predict(&test_x);
    Ok((micro_macro_f1(&pred, &test_y)?, accuracy(&pred, &test_y)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskDiagnostics {
    /// Mean absolute deviation between predicted semantics and the assigned prototype
    /// over the final training set.
    pub empirical_train_error: f64,
    /// The same against gold-class prototypes over test nodes of seen classes.
    pub empirical_test_error: f64,
    /// `2 (1 - 2 ε)` clamped to `[0, 2]`, with `ε` the held-out error of a linear
    /// domain classifier between training and test embeddings.
    pub proxy_distance: f64,
    pub domain_error: f64,
    pub train_nodes: usize,
    pub test_nodes: usize,
}

fn mean_abs_deviation(pred: &[f64], target: &[f64]) -> f64 {
    pred.iter().zip(target).map(|(p, t)| libm::fabs(p - t)).sum::<f64>() / pred.len().max(1) as f64
}

/// Empirical risk terms plus the proxy distance. The test domain is every node that is
/// not an original labeled node.
pub fn risk_diagnostics(
    semantics: &Matrix,
    table: &SemanticTable,
    train: &ExpandedLabels,
    split: &SplitSpec,
    gold: &[usize],
    embeddings: &Matrix,
    seed: u64,
) -> Result<RiskDiagnostics> {
    let mut train_err = 0.0;
    for (node, entry) in train.iter() {
        let proto = table.get(entry.label).ok_or(Error::MissingPrototype(entry.label))?;
        train_err += mean_abs_deviation(semantics.row(node), &proto.vector);
    }
    let train_err = if train.is_empty() { 0.0 } else { train_err / train.len() as f64 };

    let mut test_err = 0.0;
    let mut test_count = 0;
    for &node in &split.test {
        if !split.is_seen(gold[node]) {
            continue;
        }
        if let Some(proto) = table.get(gold[node]) {
            test_err += mean_abs_deviation(semantics.row(node), &proto.vector);
            test_count += 1;
        }
    }
    let test_err = if test_count == 0 { 0.0 } else { test_err / test_count as f64 };

    let train_nodes: Vec<usize> = train.iter().map(|(v, _)| v).collect();
    let original: Vec<usize> = split.train_labeled.clone();
    let test_nodes: Vec<usize> = (0..embeddings.rows()).filter(|v| original.binary_search(v).is_err()).collect();
    let (proxy, domain_error) = proxy_a_distance(
        &embeddings.select_rows(&train_nodes),
        &embeddings.select_rows(&test_nodes),
        rng::derive_seed(seed, stream::DOMAIN),
    )?;
    Ok(RiskDiagnostics {
        empirical_train_error: train_err,
        empirical_test_error: test_err,
        proxy_distance: proxy,
        domain_error,
        train_nodes: train_nodes.len(),
        test_nodes: test_count,
    })
}

/// Proxy A-distance between two point sets. Both are subsampled to the smaller size,
/// each is split in half, a linear SVM is trained to tell them apart on one half and
/// its error `ε` measured on the other. Returns `(clamp(2(1 - 2ε), 0, 2), ε)`.
pub fn proxy_a_distance(source: &Matrix, target: &Matrix, seed: u64) -> Result<(f64, f64)> {
    let m = source.rows().min(target.rows());
    if m < 2 {
        return Ok((0.0, 0.5));
    }
    let mut r = rng::seeded(seed);
    let s_idx = rng::sample_without_replacement(&mut r, source.rows(), m);
    let t_idx = rng::sample_without_replacement(&mut r, target.rows(), m);
    let half = m / 2;
    let dim = source.cols();
    let mut train_rows = Vec::new();
    let mut train_y = Vec::new();
    let mut test_rows = Vec::new();
    let mut test_y = Vec::new();
    for (domain, (mat, idx)) in [(source, &s_idx), (target, &t_idx)].into_iter().enumerate() {
        for (pos, &i) in idx.iter().enumerate() {
            let row = mat.row(i).to_vec();
            if pos < half {
                train_rows.push(row);
                train_y.push(domain);
            } else {
                test_rows.push(row);
                test_y.push(domain);
            }
        }
    }
    let to_matrix = |rows: &[Vec<f64>]| {
        let mut mtx = Matrix::zeros(rows.len(), dim);
        for (i, r) in rows.iter().enumerate() {
            mtx.row_mut(i).copy_from_slice(r);
        }
        mtx
    };
    let svm = train_linear_svm(&to_matrix(&train_rows), &train_y, &SvmConfig { seed, ..Default::default() })?;
    let pred = svm.predict(&to_matrix(&test_rows));
    let err = 1.0 - accuracy(&pred, &test_y);
    let proxy = (2.0 * (1.0 - 2.0 * err)).clamp(0.0, 2.0);
    Ok((proxy, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_two_class() {
        let x = Matrix::from_rows(&[vec![2.0, 0.0], vec![3.0, 1.0], vec![2.5, -1.0], vec![-2.0, 0.0], vec![-3.0, 1.0], vec![-2.5, -0.5]]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let svm = train_linear_svm(&x, &y, &SvmConfig::default()).unwrap();
        assert_eq!(accuracy(&svm.predict(&x), &y), 1.0);
    }

    #[test]
    fn identical_features_give_chance_accuracy() {
        let x = Matrix::filled(10, 3, 0.7);
        let y: Vec<usize> = (0..10).map(|i| i % 2).collect();
        let svm = train_linear_svm(&x, &y, &SvmConfig::default()).unwrap();
        assert!((accuracy(&svm.predict(&x), &y) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_probe_rejected() {
        assert!(train_linear_svm(&Matrix::zeros(3, 2), &[1, 1, 1], &SvmConfig::default()).is_err());
    }

    #[test]
    fn f1_perfect_and_hand_case() {
        let s = micro_macro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!((s.micro, s.macro_), (1.0, 1.0));
        // gold:  0 0 1 1 2 2
        // pred:  0 1 1 1 0 2
        // class 0: tp1 fp1 fn1 -> 0.5; class 1: tp2 fp1 fn0 -> 0.8; class 2: tp1 fp0 fn1 -> 2/3
        let s = micro_macro_f1(&[0, 1, 1, 1, 0, 2], &[0, 0, 1, 1, 2, 2]).unwrap();
        assert!((s.micro - 4.0 / 6.0).abs() < 1e-12);
        assert!((s.macro_ - (0.5 + 0.8 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!(micro_macro_f1(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn absent_class_scores_zero() {
        // Class 3 is predicted but never gold.
        let s = micro_macro_f1(&[3, 0], &[0, 0]).unwrap();
        assert!((s.macro_ - (2.0 / 3.0 + 0.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn concat_shapes() {
        let a = EmbeddingMatrix { matrix: Matrix::zeros(2, 3), kind: EmbeddingKind::RectL };
        let b = EmbeddingMatrix { matrix: Matrix::filled(2, 2, 1.0), kind: EmbeddingKind::RectL };
        let c = concat_embeddings(&a, &b).unwrap();
        assert_eq!(c.matrix.shape(), (2, 5));
        assert_eq!(c.kind, EmbeddingKind::Concatenated);
        assert_eq!(c.matrix.row(0), &[0.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn proxy_distance_separated_domains() {
        let s = Matrix::from_fn(40, 2, |i, j| if j == 0 { 5.0 + (i % 7) as f64 * 0.1 } else { (i % 3) as f64 });
        let t = Matrix::from_fn(40, 2, |i, j| if j == 0 { -5.0 - (i % 5) as f64 * 0.1 } else { (i % 3) as f64 });
        let (p, e) = proxy_a_distance(&s, &t, 1).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(p, 2.0);
    }
}
