mod common;

use proptest::prelude::*;
use rand::Rng;
use zge_core::eval::{accuracy, micro_macro_f1, proxy_a_distance, risk_diagnostics, train_linear_svm, SvmConfig};
use zge_core::expansion::ExpandedLabels;
use zge_core::graph::SplitSpec;
use zge_core::model::{LabelKind, SemanticTable};
use zge_core::Matrix;

fn three_class_points() -> (Matrix, Vec<usize>) {
    let mut r = common::rng(21);
    let centers = [[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]];
    let mut pts = Vec::new();
    let mut y = Vec::new();
    for i in 0..20 {
        let c = if i < 7 { 0 } else if i < 14 { 1 } else { 2 };
        pts.push(vec![centers[c][0] + r.random_range(-1.0..1.0), centers[c][1] + r.random_range(-1.0..1.0)]);
        y.push(c);
    }
    (Matrix::from_rows(&pts).unwrap(), y)
}

/// Exhaustive grid minimization of the same regularized hinge objective per class.
fn grid_oracle(x: &Matrix, y: &[usize], c: f64) -> Vec<usize> {
    let m = x.rows();
    let lambda = 1.0 / (c * m as f64);
    let beta = (0..m).map(|i| common::sq_dist(x.row(i), &[0.0, 0.0]).sqrt()).sum::<f64>() / m as f64;
    let grid: Vec<f64> = (-30..=30).map(|k| k as f64 * 0.1).collect();
    let mut weights = Vec::new();
    for class in 0..3 {
        let mut best = (f64::INFINITY, [0.0; 3]);
        for &w0 in &grid {
            for &w1 in &grid {
                for &b in &grid {
                    let reg = 0.5 * lambda * (w0 * w0 + w1 * w1 + b * b);
                    let hinge = (0..m)
                        .map(|i| {
                            let t = if y[i] == class { 1.0 } else { -1.0 };
                            (1.0 - t * (w0 * x[(i, 0)] + w1 * x[(i, 1)] + b * beta)).max(0.0)
                        })
                        .sum::<f64>()
                        / m as f64;
                    if reg + hinge < best.0 {
                        best = (reg + hinge, [w0, w1, b]);
                    }
                }
            }
        }
        weights.push(best.1);
    }
    (0..m)
        .map(|i| {
            let s: Vec<f64> = weights.iter().map(|w| w[0] * x[(i, 0)] + w[1] * x[(i, 1)] + w[2] * beta).collect();
            (0..3).fold(0, |b, k| if s[k] > s[b] { k } else { b })
        })
        .collect()
}

#[test]
fn svm_agrees_with_grid_oracle() {
    let (x, y) = three_class_points();
    let svm = train_linear_svm(&x, &y, &SvmConfig::default()).unwrap();
    let ours = svm.predict(&x);
    let oracle = grid_oracle(&x, &y, 1.0);
    let agree = ours.iter().zip(&oracle).filter(|(a, b)| a == b).count();
    assert!(agree >= 18, "agreement {agree}/20");
}

#[test]
fn svm_scale_invariance() {
    let (x, y) = three_class_points();
    let base = train_linear_svm(&x, &y, &SvmConfig::default()).unwrap().predict(&x);
    for s in [4.0, 3.0, 0.1] {
        let mut xs = x.clone();
        xs.scale(s);
        let cfg = SvmConfig { c: 1.0 / (s * s), ..Default::default() };
        let pred = train_linear_svm(&xs, &y, &cfg).unwrap().predict(&xs);
        assert_eq!(pred, base, "scale {s}");
    }
}

#[test]
fn concat_with_zero_width_is_identity() {
    use zge_core::eval::concat_embeddings;
    use zge_core::model::{EmbeddingKind, EmbeddingMatrix};
    let a = EmbeddingMatrix { matrix: Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64), kind: EmbeddingKind::RectL };
    let z = EmbeddingMatrix { matrix: Matrix::zeros(3, 0), kind: EmbeddingKind::RectL };
    assert_eq!(concat_embeddings(&a, &z).unwrap().matrix, a.matrix);
    let bad = EmbeddingMatrix { matrix: Matrix::zeros(2, 1), kind: EmbeddingKind::RectL };
    assert!(concat_embeddings(&a, &bad).is_err());
}

fn toy_split() -> SplitSpec {
    SplitSpec {
        seen: vec![0, 1],
        unseen: vec![2],
        label_rate: 0.5,
        train_labeled: vec![0, 1],
        probe_train: vec![0, 1, 2],
        test: vec![3, 4, 5],
        seed: 3,
    }
}

#[test]
fn risk_terms_match_direct_summation() {
    let mut r = common::rng(2);
    let sem = common::random_matrix(&mut r, 6, 3);
    let emb = common::random_matrix(&mut r, 6, 4);
    let gold = [0, 1, 2, 0, 1, 2];
    let mut table = SemanticTable::new();
    let p0 = vec![0.1, -0.2, 0.3];
    let p1 = vec![-0.5, 0.4, 0.0];
    table.insert(0, p0.clone(), LabelKind::Real).unwrap();
    table.insert(1, p1.clone(), LabelKind::Real).unwrap();
    let split = toy_split();
    let labels = ExpandedLabels::original(&split, &gold);
    let d = risk_diagnostics(&sem, &table, &labels, &split, &gold, &emb, 1).unwrap();
    let mad = |i: usize, p: &[f64]| (0..3).map(|j| (sem[(i, j)] - p[j]).abs()).sum::<f64>() / 3.0;
    let train = (mad(0, &p0) + mad(1, &p1)) / 2.0;
    let test = (mad(3, &p0) + mad(4, &p1)) / 2.0;
    assert!((d.empirical_train_error - train).abs() <= 1e-12);
    assert!((d.empirical_test_error - test).abs() <= 1e-12);
    assert_eq!(d.test_nodes, 2);
    assert!((0.0..=2.0).contains(&d.proxy_distance));

    // f ≡ h on the training nodes.
    let mut exact = sem.clone();
    exact.row_mut(0).copy_from_slice(&p0);
    exact.row_mut(1).copy_from_slice(&p1);
    let d = risk_diagnostics(&exact, &table, &labels, &split, &gold, &emb, 1).unwrap();
    assert_eq!(d.empirical_train_error, 0.0);
}

#[test]
fn proxy_distance_near_zero_for_identical_domains() {
    let mut r = common::rng(6);
    let pts = common::random_matrix(&mut r, 400, 5);
    let (p, err) = proxy_a_distance(&pts, &pts, 11).unwrap();
    assert!(p <= 0.3, "proxy {p} (domain error {err})");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn micro_f1_is_accuracy(pairs in prop::collection::vec((0usize..6, 0usize..6), 1..60)) {
        let (p, g): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let s = micro_macro_f1(&p, &g).unwrap();
        prop_assert!((s.micro - accuracy(&p, &g)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&s.micro));
        prop_assert!((0.0..=1.0).contains(&s.macro_));
    }
}
