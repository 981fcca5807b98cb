//! The prototypical GCN: class prototypes in the reduced feature space, a two-layer
//! GCN regressing each labeled node onto its class prototype, and nearest-prototype
//! decoding.
//!
//! Forward pass, with `Â` the propagation matrix and `X` the reduced features:
//!
//! ```text
//! Z1 = Â X W1        H1 = PReLU(Z1)        Ŷ' = Â H1 W2
//! ```
//!
//! `H1` is the node embedding; `Ŷ'` lives in the semantic space of the prototypes.
//! The loss is the squared error between `Ŷ'` and the prototype of each labeled node,
//! averaged over labeled nodes and dimensions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::PropagationMatrix;
use crate::linalg::{squared_distance, CsrMatrix, Matrix};
use crate::nn::{self, AdamConfig, AdamState};
use crate::rng::{self, stream};
use crate::svd::ReducedFeatures;

/// Real class ids come first; pseudo-classes are appended after them.
pub type LabelId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKind {
    Real,
    Pseudo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct LabeledNode {
    pub node: usize,
    pub label: LabelId,
    pub kind: LabelKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub vector: Vec<f64>,
    pub kind: LabelKind,
}

/// Class (or pseudo-class) id → prototype vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SemanticTable {
    entries: BTreeMap<LabelId, Prototype>,
}

impl SemanticTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, label: LabelId, vector: Vec<f64>, kind: LabelKind) -> Result<()> {
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("prototype of label {label}")));
        }
        if let Some(first) = self.entries.values().next() {
            if first.vector.len() != vector.len() {
                return Err(Error::dims("SemanticTable::insert", format!("{} vs {}", vector.len(), first.vector.len())));
            }
        }
        if self.entries.contains_key(&label) {
            return Err(Error::InvalidArgument(format!("label {label} already has a prototype")));
        }
        self.entries.insert(label, Prototype { vector, kind });
        Ok(())
    }

    pub fn get(&self, label: LabelId) -> Option<&Prototype> {
        self.entries.get(&label)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries.values().next().map_or(0, |p| p.vector.len())
    }

    /// Entries in ascending label order.
    pub fn iter(&self) -> impl Iterator<Item = (LabelId, &Prototype)> {
        self.entries.iter().map(|(&k, v)| (k, v))
    }

    pub fn labels(&self) -> Vec<LabelId> {
        self.entries.keys().copied().collect()
    }
}

/// One prototype per label present in `labeled`: the mean of its reduced feature rows.
pub fn compute_class_semantics(x: &ReducedFeatures, labeled: &[LabeledNode]) -> Result<SemanticTable> {
    let x = x.matrix();
    let mut sums: BTreeMap<LabelId, (Vec<f64>, usize, LabelKind)> = BTreeMap::new();
    for entry in labeled {
        if entry.node >= x.rows() {
            return Err(Error::InvalidArgument(format!("labeled node {} outside 0..{}", entry.node, x.rows())));
        }
        let slot = sums.entry(entry.label).or_insert_with(|| (vec![0.0; x.cols()], 0, entry.kind));
        if slot.2 != entry.kind {
            return Err(Error::InvalidArgument(format!("label {} is both real and pseudo", entry.label)));
        }
        for (s, v) in slot.0.iter_mut().zip(x.row(entry.node)) {
            *s += v;
        }
        slot.1 += 1;
    }
    let mut table = SemanticTable::new();
    for (label, (mut sum, count, kind)) in sums {
        let inv = count as f64;
        sum.iter_mut().for_each(|s| *s /= inv);
        table.insert(label, sum, kind)?;
    }
    Ok(table)
}

/// Nearest prototype by Euclidean distance; ties go to the smallest label id.
pub fn decode_nearest_prototype(query: &[f64], table: &SemanticTable) -> Option<LabelId> {
    let mut best: Option<(f64, LabelId)> = None;
    for (label, proto) in table.iter() {
        let d = squared_distance(query, &proto.vector);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, label));
        }
    }
    best.map(|(_, l)| l)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcnHyper {
    pub hidden: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
}

impl Default for GcnHyper {
    fn default() -> Self {
        GcnHyper { hidden: 200, epochs: 100, adam: AdamConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    RectL,
    Concatenated,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::RectL => "rect-l",
            EmbeddingKind::Concatenated => "concatenated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub matrix: Matrix,
    pub kind: EmbeddingKind,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn width(&self) -> usize {
        self.matrix.cols()
    }
}

/// Two-layer GCN parameters together with optimizer state and the loss curve.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    /// `d' × h`
    pub w1: Matrix,
    /// `1 × h`, one PReLU slope per hidden channel.
    pub slopes: Matrix,
    /// `h × d'`
    pub w2: Matrix,
    pub hyper: GcnHyper,
    pub seed: u64,
    /// Loss before each completed epoch's update.
    pub loss_history: Vec<f64>,
    pub optimizer: AdamState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Matrix,
    pub slopes: Matrix,
    pub w2: Matrix,
}

/// Full forward pass output.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub hidden: EmbeddingMatrix,
    pub semantics: Matrix,
}

impl GcnModel {
    /// Xavier-initialized weights and 0.25 slopes, drawn from `seed`.
    pub fn init(semantic_dim: usize, hyper: GcnHyper, seed: u64) -> Self {
        let h = hyper.hidden;
        let w1 = nn::xavier_init(semantic_dim, h, rng::derive_seed(seed, stream::INIT_W1));
        let w2 = nn::xavier_init(h, semantic_dim, rng::derive_seed(seed, stream::INIT_W2));
        let slopes = Matrix::filled(1, h, nn::DEFAULT_PRELU_SLOPE);
        let optimizer = AdamState::new(hyper.adam, &[("w1", w1.shape()), ("slopes1", slopes.shape()), ("w2", w2.shape())]);
        GcnModel { w1, slopes, w2, hyper, seed, loss_history: Vec::new(), optimizer }
    }

    /// Builds a model from explicit parameters (fresh optimizer state).
    pub fn from_parameters(w1: Matrix, slopes: Matrix, w2: Matrix, hyper: GcnHyper, seed: u64) -> Result<Self> {
        let (d, h) = w1.shape();
        if slopes.shape() != (1, h) || w2.shape() != (h, d) {
            return Err(Error::dims(
                "GcnModel::from_parameters",
                format!("w1 {:?}, slopes {:?}, w2 {:?}", w1.shape(), slopes.shape(), w2.shape()),
            ));
        }
        let optimizer = AdamState::new(hyper.adam, &[("w1", w1.shape()), ("slopes1", slopes.shape()), ("w2", w2.shape())]);
        Ok(GcnModel { w1, slopes, w2, hyper: GcnHyper { hidden: h, ..hyper }, seed, loss_history: Vec::new(), optimizer })
    }

    pub fn semantic_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    fn slope_slice(&self) -> &[f64] {
        self.slopes.row(0)
    }
}

/// `Â X`, computed once per graph and reused by every pass.
#[derive(Debug, Clone)]
pub struct PreparedGraph<'a> {
    prop: &'a PropagationMatrix,
    ax: Matrix,
}

impl<'a> PreparedGraph<'a> {
    pub fn new(prop: &'a PropagationMatrix, x: &ReducedFeatures) -> Result<Self> {
        let ax = prop.matrix().spmm(x.matrix())?;
        Ok(PreparedGraph { prop, ax })
    }

    pub fn n(&self) -> usize {
        self.ax.rows()
    }

    pub fn semantic_dim(&self) -> usize {
        self.ax.cols()
    }

    fn check_model(&self, model: &GcnModel) -> Result<()> {
        if model.semantic_dim() != self.semantic_dim() {
            return Err(Error::dims("forward", format!("model input dim {} vs features {}", model.semantic_dim(), self.semantic_dim())));
        }
        Ok(())
    }

    pub fn forward(&self, model: &GcnModel) -> Result<ForwardOutput> {
        self.check_model(model)?;
        let z1 = self.ax.matmul(&model.w1)?;
        let mut h1 = z1;
        let slopes = model.slope_slice();
        for i in 0..h1.rows() {
            for (v, &a) in h1.row_mut(i).iter_mut().zip(slopes) {
                *v = nn::prelu_scalar(*v, a);
            }
        }
        if !h1.is_finite() {
            return Err(Error::NonFinite("hidden layer".into()));
        }
        let semantics = self.prop.matrix().spmm(&h1)?.matmul(&model.w2)?;
        if !semantics.is_finite() {
            return Err(Error::NonFinite("output layer".into()));
        }
        Ok(ForwardOutput { hidden: EmbeddingMatrix { matrix: h1, kind: EmbeddingKind::RectL }, semantics })
    }

    /// Loss and gradients over the labeled nodes. Only the two-hop receptive field of
    /// the labeled nodes is evaluated.
    pub fn loss_and_gradients(&self, model: &GcnModel, batch: &TrainingBatch) -> Result<(f64, Gradients)> {
        self.check_model(model)?;
        if batch.prop_rows.cols() != batch.support.len() {
            return Err(Error::InvalidArgument("training batch built for a different graph".into()));
        }
        let ax_s = &batch.ax_support;
        let z1 = ax_s.matmul(&model.w1)?;
        let slopes = model.slope_slice();
        let (rows, h) = z1.shape();
        let mut h1 = Matrix::zeros(rows, h);
        for i in 0..rows {
            let zr = z1.row(i);
            for (j, out) in h1.row_mut(i).iter_mut().enumerate() {
                *out = nn::prelu_scalar(zr[j], slopes[j]);
            }
        }
        if !h1.is_finite() {
            return Err(Error::NonFinite("hidden layer".into()));
        }
        let p = batch.prop_rows.spmm(&h1)?;
        let pred = p.matmul(&model.w2)?;
        if !pred.is_finite() {
            return Err(Error::NonFinite("output layer".into()));
        }
        let (nl, dim) = pred.shape();
        let scale = 1.0 / (nl * dim) as f64;
        let mut loss = 0.0;
        let mut g = Matrix::zeros(nl, dim);
        for i in 0..nl {
            let target = batch.targets.row(i);
            for (gv, (&y, &t)) in g.row_mut(i).iter_mut().zip(pred.row(i).iter().zip(target)) {
                let diff = y - t;
                loss += diff * diff;
                *gv = 2.0 * scale * diff;
            }
        }
        loss *= scale;

        let d_w2 = p.t_matmul(&g)?;
        let d_p = g.matmul_t(&model.w2)?;
        let d_h1 = batch.prop_rows_t.spmm(&d_p)?;
        let mut d_z1 = d_h1.clone();
        let mut d_slopes = Matrix::zeros(1, h);
        for i in 0..rows {
            let zr = z1.row(i);
            let dh = d_h1.row(i);
            let dz = d_z1.row_mut(i);
            for j in 0..h {
                if zr[j] <= 0.0 {
                    dz[j] = dh[j] * slopes[j];
                    d_slopes[(0, j)] += dh[j] * zr[j];
                }
            }
        }
        let d_w1 = ax_s.t_matmul(&d_z1)?;
        Ok((loss, Gradients { w1: d_w1, slopes: d_slopes, w2: d_w2 }))
    }

    /// Full-batch Adam training for `hyper.epochs` steps from a fresh initialization.
    pub fn train(&self, table: &SemanticTable, labeled: &[LabeledNode], hyper: GcnHyper, seed: u64) -> Result<GcnModel> {
        let batch = TrainingBatch::new(self, table, labeled)?;
        let mut model = GcnModel::init(self.semantic_dim(), hyper, seed);
        for _ in 0..hyper.epochs {
            let (loss, grads) = self.loss_and_gradients(&model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("semantic loss".into()));
            }
            let GcnModel { w1, slopes, w2, optimizer, .. } = &mut model;
            optimizer.step(&mut [w1, slopes, w2], &[&grads.w1, &grads.slopes, &grads.w2])?;
            model.loss_history.push(loss);
        }
        Ok(model)
    }

    /// Loss of `model` on `labeled` (no gradients needed by callers).
    pub fn loss(&self, model: &GcnModel, table: &SemanticTable, labeled: &[LabeledNode]) -> Result<f64> {
        let batch = TrainingBatch::new(self, table, labeled)?;
        Ok(self.loss_and_gradients(model, &batch)?.0)
    }

    pub fn embed(&self, model: &GcnModel) -> Result<EmbeddingMatrix> {
        Ok(self.forward(model)?.hidden)
    }
}

/// The labeled rows, their targets, and the propagation restricted to the support
/// (one-hop neighbourhood, self included) of those rows.
#[derive(Debug, Clone)]
pub struct TrainingBatch {
    nodes: Vec<usize>,
    targets: Matrix,
    support: Vec<usize>,
    ax_support: Matrix,
    prop_rows: CsrMatrix,
    prop_rows_t: CsrMatrix,
}

impl TrainingBatch {
    pub fn new(graph: &PreparedGraph<'_>, table: &SemanticTable, labeled: &[LabeledNode]) -> Result<Self> {
        if labeled.is_empty() {
            return Err(Error::InvalidArgument("labeled set is empty".into()));
        }
        if table.dim() != graph.semantic_dim() {
            return Err(Error::dims("TrainingBatch::new", format!("prototype dim {} vs features {}", table.dim(), graph.semantic_dim())));
        }
        let n = graph.n();
        let mut sorted: Vec<LabeledNode> = labeled.to_vec();
        sorted.sort_by_key(|e| e.node);
        if sorted.windows(2).any(|w| w[0].node == w[1].node) {
            return Err(Error::InvalidArgument("a node is labeled twice".into()));
        }
        let mut targets = Matrix::zeros(sorted.len(), table.dim());
        for (i, e) in sorted.iter().enumerate() {
            if e.node >= n {
                return Err(Error::InvalidArgument(format!("labeled node {} outside 0..{n}", e.node)));
            }
            let proto = table.get(e.label).ok_or(Error::MissingPrototype(e.label))?;
            targets.row_mut(i).copy_from_slice(&proto.vector);
        }
        let a = graph.prop.matrix();
        let mut local = vec![usize::MAX; n];
        let mut support = Vec::new();
        let mut mark = vec![false; n];
        for e in &sorted {
            for (c, _) in a.row(e.node) {
                mark[c] = true;
            }
        }
        for (v, &m) in mark.iter().enumerate() {
            if m {
                local[v] = support.len();
                support.push(v);
            }
        }
        let mut trip = Vec::new();
        for (i, e) in sorted.iter().enumerate() {
            for (c, val) in a.row(e.node) {
                trip.push((i, local[c], val));
            }
        }
        let prop_rows = CsrMatrix::from_triplets(sorted.len(), support.len(), &trip)?;
        let prop_rows_t = prop_rows.transpose();
        let ax_support = graph.ax.select_rows(&support);
        Ok(TrainingBatch { nodes: sorted.iter().map(|e| e.node).collect(), targets, support, ax_support, prop_rows, prop_rows_t })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn support_size(&self) -> usize {
        self.support.len()
    }
}

/// Convenience wrappers with the propagation matrix and features passed explicitly.
pub fn forward(model: &GcnModel, prop: &PropagationMatrix, x: &ReducedFeatures) -> Result<ForwardOutput> {
    PreparedGraph::new(prop, x)?.forward(model)
}

pub fn loss_and_gradients(
    model: &GcnModel,
    prop: &PropagationMatrix,
    x: &ReducedFeatures,
    table: &SemanticTable,
    labeled: &[LabeledNode],
) -> Result<(f64, Gradients)> {
    let g = PreparedGraph::new(prop, x)?;
    let batch = TrainingBatch::new(&g, table, labeled)?;
    g.loss_and_gradients(model, &batch)
}

pub fn train(
    prop: &PropagationMatrix,
    x: &ReducedFeatures,
    table: &SemanticTable,
    labeled: &[LabeledNode],
    hyper: GcnHyper,
    seed: u64,
) -> Result<GcnModel> {
    PreparedGraph::new(prop, x)?.train(table, labeled, hyper, seed)
}

pub fn embed(model: &GcnModel, prop: &PropagationMatrix, x: &ReducedFeatures) -> Result<EmbeddingMatrix> {
    PreparedGraph::new(prop, x)?.embed(model)
}
