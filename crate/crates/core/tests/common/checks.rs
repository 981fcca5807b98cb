//! Randomized oracle checks shared by the oracle tests and the acceptance report.

use std::collections::BTreeMap;

use rand::Rng;
use zge_core::expansion::{expand_clusters, expand_seen, kmeans, ExpansionBudget, Provenance};
use zge_core::graph::{PropagationMatrix, SplitSpec};
use zge_core::model::{self, GcnHyper, GcnModel, LabelKind, LabeledNode, SemanticTable};
use zge_core::svd::ReducedFeatures;
use zge_core::{CsrMatrix, Matrix};

use super::{brute_select, grid_point, nearest, random_graph, random_matrix, rng, sq_dist};

pub struct Instance {
    pub prop: PropagationMatrix,
    pub x: ReducedFeatures,
    pub model: GcnModel,
    pub table: SemanticTable,
    pub labeled: Vec<LabeledNode>,
}

pub fn real(node: usize, label: usize) -> LabeledNode {
    LabeledNode { node, label, kind: LabelKind::Real }
}

/// Symmetric 0/1 adjacency, duplicates collapsed.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> CsrMatrix {
    let mut t = Vec::new();
    for &(a, b) in edges {
        t.push((a, b, 1.0));
        t.push((b, a, 1.0));
    }
    let dense = CsrMatrix::from_triplets(n, n, &t).unwrap().to_dense();
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if dense[(i, j)] != 0.0 {
                t.push((i, j, 1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).unwrap()
}

pub fn instance(seed: u64, n: usize, d: usize, h: usize) -> Instance {
    let mut r = rng(seed);
    let edges = random_graph(&mut r, n, n);
    let prop = PropagationMatrix::from_adjacency(&adjacency(n, &edges));
    let x = ReducedFeatures::new(random_matrix(&mut r, n, d)).unwrap();
    let w1 = random_matrix(&mut r, d, h);
    let slopes = Matrix::from_fn(1, h, |_, _| r.random_range(0.1..0.5));
    let w2 = random_matrix(&mut r, h, d);
    let model = GcnModel::from_parameters(w1, slopes, w2, GcnHyper { hidden: h, ..Default::default() }, seed).unwrap();
    let mut table = SemanticTable::new();
    for c in 0..2 {
        table.insert(c, (0..d).map(|_| r.random_range(-1.0..1.0)).collect(), LabelKind::Real).unwrap();
    }
    let labeled = vec![real(0, 0), real(2, 1), real(n - 1, 0)];
    Instance { prop, x, model, table, labeled }
}

pub fn loss(inst: &Instance, m: &GcnModel) -> f64 {
    model::loss_and_gradients(m, &inst.prop, &inst.x, &inst.table, &inst.labeled).unwrap().0
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Worst relative error between analytic and central-difference gradients over every parameter.
pub fn fd_max_rel_err(seed: u64) -> f64 {
    let step = 1e-5;
    let inst = instance(seed, 6, 3, 4);
    let (_, g) = model::loss_and_gradients(&inst.model, &inst.prop, &inst.x, &inst.table, &inst.labeled).unwrap();
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        let (rows, cols) = [inst.model.w1.shape(), inst.model.slopes.shape(), inst.model.w2.shape()][which];
        for i in 0..rows {
            for j in 0..cols {
                let bump = |delta: f64| {
                    let mut m = inst.model.clone();
                    let p = [&mut m.w1, &mut m.slopes, &mut m.w2].into_iter().nth(which).unwrap();
                    p[(i, j)] += delta;
                    loss(&inst, &m)
                };
                let fd = (bump(step) - bump(-step)) / (2.0 * step);
                worst = worst.max(rel_err([&g.w1, &g.slopes, &g.w2][which][(i, j)], fd));
            }
        }
    }
    worst
}

pub fn split_with(labeled: Vec<usize>, seen: Vec<usize>, n: usize) -> SplitSpec {
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

pub fn rows(m: &[Vec<f64>]) -> Matrix {
    Matrix::from_rows(m).unwrap()
}

pub fn budget(quotas: Vec<usize>) -> ExpansionBudget {
    ExpansionBudget { total_target: 0, quotas, layers: 2, avg_degree: 1.0 }
}

/// One random instance of at most 20 nodes; `Err` describes a disagreement with brute force.
pub fn seen_oracle_case(case: u64) -> Result<(), String> {
    let mut r = rng(1000 + case);
    let n = r.random_range(4..=20);
    let dim = r.random_range(1..=3);
    let classes = r.random_range(1..=4);
    let pred: Vec<Vec<f64>> = (0..n).map(|_| grid_point(&mut r, dim)).collect();
    let protos: Vec<Vec<f64>> = (0..classes).map(|_| grid_point(&mut r, dim)).collect();
    let mut table = SemanticTable::new();
    for (c, p) in protos.iter().enumerate() {
        table.insert(c, p.clone(), LabelKind::Real).unwrap();
    }
    let mut labeled: Vec<usize> = (0..n).filter(|_| r.random_bool(0.3)).collect();
    if labeled.len() == n {
        labeled.pop();
    }
    let gold: Vec<usize> = (0..n).map(|v| v % classes).collect();
    let quotas: Vec<usize> = (0..classes).map(|_| r.random_range(0..=4)).collect();
    let split = split_with(labeled.clone(), (0..classes).collect(), n);
    let out = expand_seen(&rows(&pred), &table, &split, &gold, &budget(quotas.clone())).map_err(|e| e.to_string())?;
    let oracle =
        brute_select(n, &quotas, &labeled, |v| Some(nearest(&pred[v], &protos)), |v, t| sq_dist(&pred[v], &protos[t]));
    let got: BTreeMap<usize, usize> =
        out.iter().filter(|(_, e)| e.provenance == Provenance::Expanded).map(|(v, e)| (v, e.label)).collect();
    if got != oracle {
        return Err(format!("case {case}: got {got:?}, oracle {oracle:?}"));
    }
    for &v in &labeled {
        let e = out.get(v).ok_or(format!("case {case}: node {v} lost"))?;
        if (e.label, e.provenance) != (gold[v], Provenance::Original) {
            return Err(format!("case {case}: original node {v} relabeled"));
        }
    }
    Ok(())
}

pub fn cluster_oracle_case(case: u64) -> Result<(), String> {
    let mut r = rng(2000 + case);
    let n = r.random_range(4..=20);
    let dim = r.random_range(1..=3);
    let k = r.random_range(1..=4.min(n));
    let emb: Vec<Vec<f64>> = (0..n).map(|_| grid_point(&mut r, dim)).collect();
    let clustering = kmeans(&rows(&emb), k, case).map_err(|e| e.to_string())?;
    let centers: Vec<Vec<f64>> = (0..k).map(|c| clustering.centers.row(c).to_vec()).collect();
    let mut labeled: Vec<usize> = (0..n).filter(|_| r.random_bool(0.3)).collect();
    if labeled.len() == n {
        labeled.pop();
    }
    let gold: Vec<usize> = vec![0; n];
    let quotas: Vec<usize> = (0..k).map(|_| r.random_range(0..=4)).collect();
    let split = split_with(labeled.clone(), vec![0], n);
    let offset = 5;
    let out = expand_clusters(&rows(&emb), &clustering, &split, &gold, &budget(quotas.clone()), offset)
        .map_err(|e| e.to_string())?;
    let oracle =
        brute_select(n, &quotas, &labeled, |v| Some(clustering.assignment[v]), |v, t| sq_dist(&emb[v], &centers[t]));
    let mut got = BTreeMap::new();
    for (v, e) in out.iter().filter(|(_, e)| e.provenance == Provenance::Expanded) {
        if e.kind != LabelKind::Pseudo {
            return Err(format!("case {case}: node {v} expanded as a real label"));
        }
        got.insert(v, e.label - offset);
    }
    if got != oracle {
        return Err(format!("case {case}: got {got:?}, oracle {oracle:?}"));
    }
    Ok(())
}
