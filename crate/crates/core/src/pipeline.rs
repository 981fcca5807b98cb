//! End-to-end zero-shot runs: train, optionally expand and retrain, embed, probe.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::eval::{self, F1Scores, RiskDiagnostics, SvmConfig};
use crate::expansion::{self, Clustering, ExpandedLabels, KSelection};
use crate::graph::{make_zero_shot_split, Dataset, PropagationMatrix, SplitSpec};
use crate::model::{compute_class_semantics, EmbeddingMatrix, ForwardOutput, GcnHyper, GcnModel, PreparedGraph, SemanticTable};
use crate::rng::{self, stream};
use crate::svd::ReducedFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    RectL,
    Sl,
    Sul,
    SulStar,
    SlSul,
    SlSulStar,
}

impl Variant {
    pub const ALL: [Variant; 6] = [Variant::RectL, Variant::Sl, Variant::Sul, Variant::SulStar, Variant::SlSul, Variant::SlSulStar];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::RectL => "rect-l",
            Variant::Sl => "sl",
            Variant::Sul => "sul",
            Variant::SulStar => "sul-star",
            Variant::SlSul => "sl-sul",
            Variant::SlSulStar => "sl-sul-star",
        }
    }

    pub fn parse(name: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.as_str() == name)
    }
}

/// Expansion strategy behind a trained stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Base,
    Seen,
    Cluster,
    ClusterSelected,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Base => "base",
            Stage::Seen => "sl",
            Stage::Cluster => "sul",
            Stage::ClusterSelected => "sul-star",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub hyper: GcnHyper,
    /// GCN layer count in the budget exponent.
    pub tau: u32,
    /// Silhouette search range; `None` means `[2, max(10, C + 2)]`.
    pub k_range: Option<(usize, usize)>,
    pub svm_c: f64,
    pub svm_epochs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { hyper: GcnHyper::default(), tau: 2, k_range: None, svm_c: 1.0, svm_epochs: 50 }
    }
}

impl PipelineConfig {
    pub fn k_range_for(&self, n_classes: usize, n: usize) -> (usize, usize) {
        let (lo, hi) = self.k_range.unwrap_or((2, (n_classes + 2).max(10)));
        (lo, hi.min(n))
    }
}

/// Dataset, propagation and reduced features bound together for repeated runs.
pub struct Experiment<'a> {
    ds: &'a Dataset,
    x: &'a ReducedFeatures,
    graph: PreparedGraph<'a>,
    pub config: PipelineConfig,
}

/// A trained model with the labels and prototypes it was fitted to.
#[derive(Debug, Clone)]
pub struct TrainedStage {
    pub stage: Stage,
    pub labels: ExpandedLabels,
    pub table: SemanticTable,
    pub model: GcnModel,
    pub output: ForwardOutput,
    /// Clustering that produced the pseudo-classes, for cluster stages.
    pub clustering: Option<Clustering>,
    pub k_selection: Option<KSelection>,
}

impl<'a> Experiment<'a> {
    pub fn new(ds: &'a Dataset, prop: &'a PropagationMatrix, x: &'a ReducedFeatures, config: PipelineConfig) -> Result<Self> {
        if prop.n() != ds.n_nodes() || x.matrix().rows() != ds.n_nodes() {
            return Err(Error::dims(
                "Experiment::new",
                format!("{} nodes, propagation {}, features {}", ds.n_nodes(), prop.n(), x.matrix().rows()),
            ));
        }
        Ok(Experiment { ds, x, graph: PreparedGraph::new(prop, x)?, config })
    }

    pub fn dataset(&self) -> &Dataset {
        self.ds
    }

    pub fn features(&self) -> &ReducedFeatures {
        self.x
    }

    pub fn graph(&self) -> &PreparedGraph<'a> {
        &self.graph
    }

    pub fn split(&self, label_rate: f64, n_unseen: usize, seed: u64) -> Result<SplitSpec> {
        make_zero_shot_split(self.ds, label_rate, n_unseen, seed)
    }

    fn fit(&self, stage: Stage, labels: ExpandedLabels, seed: u64) -> Result<TrainedStage> {
        let labeled = labels.labeled_nodes();
        let table = compute_class_semantics(self.x, &labeled)?;
        let model = self.graph.train(&table, &labeled, self.config.hyper, rng::derive_seed(seed, stream::MODEL))?;
        let output = self.graph.forward(&model)?;
        Ok(TrainedStage { stage, labels, table, model, output, clustering: None, k_selection: None })
    }

    fn budget(&self, split: &SplitSpec, targets: usize) -> Result<expansion::ExpansionBudget> {
        expansion::expansion_budget(self.ds.n_nodes(), self.ds.average_degree(), self.config.tau, split.train_labeled.len(), targets)
    }

    /// RECT-L trained on the split's labeled nodes only.
    pub fn train_base(&self, split: &SplitSpec) -> Result<TrainedStage> {
        self.fit(Stage::Base, ExpandedLabels::original(split, self.ds.labels()), split.seed)
    }

    /// Seen-class expansion from `base`, then retraining from scratch.
    pub fn train_seen(&self, split: &SplitSpec, base: &TrainedStage) -> Result<TrainedStage> {
        let budget = self.budget(split, split.seen.len())?;
        let labels = expansion::expand_seen(&base.output.semantics, &base.table, split, self.ds.labels(), &budget)?;
        self.fit(Stage::Seen, labels, split.seed)
    }

    /// Cluster expansion over `base`'s embeddings with `k = C`, or with the silhouette
    /// choice when `select_k` is set.
    pub fn train_cluster(&self, split: &SplitSpec, base: &TrainedStage, select_k: bool) -> Result<TrainedStage> {
        let points = &base.output.hidden.matrix;
        let seed = rng::derive_seed(split.seed, stream::KMEANS);
        let (clustering, selection) = if select_k {
            let (lo, hi) = self.config.k_range_for(self.ds.n_classes(), points.rows());
            let sel = expansion::select_k_silhouette(points, lo, hi, seed)?;
            (sel.best.clone(), Some(sel))
        } else {
            (expansion::kmeans(points, self.ds.n_classes().min(points.rows()), seed)?, None)
        };
        let budget = self.budget(split, clustering.k)?;
        let labels = expansion::expand_clusters(points, &clustering, split, self.ds.labels(), &budget, self.ds.n_classes())?;
        let stage = if select_k { Stage::ClusterSelected } else { Stage::Cluster };
        let mut out = self.fit(stage, labels, split.seed)?;
        out.clustering = Some(clustering);
        out.k_selection = selection;
        Ok(out)
    }

    pub fn svm_config(&self, seed: u64) -> SvmConfig {
        SvmConfig { c: self.config.svm_c, epochs: self.config.svm_epochs, seed: rng::derive_seed(seed, stream::SVM) }
    }

    pub fn diagnostics(&self, split: &SplitSpec, stage: &TrainedStage) -> Result<RiskDiagnostics> {
        eval::risk_diagnostics(
            &stage.output.semantics,
            &stage.table,
            &stage.labels,
            split,
            self.ds.labels(),
            &stage.output.hidden.matrix,
            split.seed,
        )
    }

    pub fn run_seed(&self, split: &SplitSpec, variants: &[Variant]) -> Result<SeedScores> {
        let mut run = SeedRun::new(self, split)?;
        let mut scores = Vec::with_capacity(variants.len());
        for &v in variants {
            let emb = run.embedding(v)?;
            let (f1, acc) = eval::probe_scores(&emb.matrix, split, self.ds.labels(), &self.svm_config(split.seed))?;
            debug_assert!((f1.micro - acc).abs() < 1e-12, "micro-F1 must equal accuracy");
            scores.push(VariantScore { variant: v, scores: f1 });
        }
        Ok(SeedScores {
            seed: split.seed,
            scores,
            selected_k: run.stages.iter().find_map(|s| s.k_selection.as_ref().map(|k| k.best_k)),
        })
    }

    /// Runs every seed with a fresh split and aggregates in seed order.
    pub fn evaluate_zero_shot(&self, label_rate: f64, n_unseen: usize, seeds: &[u64], variants: &[Variant]) -> Result<EvalReport> {
        let per_seed = seeds
            .iter()
            .map(|&s| self.run_seed(&self.split(label_rate, n_unseen, s)?, variants))
            .collect::<Result<Vec<_>>>()?;
        EvalReport::new(label_rate, n_unseen, variants, per_seed)
    }
}

/// Lazily trained stages for one split, so shared stages are trained once.
pub struct SeedRun<'e, 'a> {
    exp: &'e Experiment<'a>,
    split: &'e SplitSpec,
    stages: Vec<TrainedStage>,
}

impl<'e, 'a> SeedRun<'e, 'a> {
    pub fn new(exp: &'e Experiment<'a>, split: &'e SplitSpec) -> Result<Self> {
        let base = exp.train_base(split)?;
        Ok(SeedRun { exp, split, stages: alloc::vec![base] })
    }

    pub fn stage(&mut self, stage: Stage) -> Result<&TrainedStage> {
        if let Some(i) = self.stages.iter().position(|s| s.stage == stage) {
            return Ok(&self.stages[i]);
        }
        let base = &self.stages[0];
        let trained = match stage {
            Stage::Base => unreachable!("base is trained on construction"),
            Stage::Seen => self.exp.train_seen(self.split, base)?,
            Stage::Cluster => self.exp.train_cluster(self.split, base, false)?,
            Stage::ClusterSelected => self.exp.train_cluster(self.split, base, true)?,
        };
        self.stages.push(trained);
        Ok(self.stages.last().unwrap())
    }

    pub fn embedding(&mut self, variant: Variant) -> Result<EmbeddingMatrix> {
        let single = |run: &mut Self, s: Stage| run.stage(s).map(|t| t.output.hidden.clone());
        match variant {
            Variant::RectL => single(self, Stage::Base),
            Variant::Sl => single(self, Stage::Seen),
            Variant::Sul => single(self, Stage::Cluster),
            Variant::SulStar => single(self, Stage::ClusterSelected),
            Variant::SlSul | Variant::SlSulStar => {
                let a = single(self, Stage::Seen)?;
                let other = if variant == Variant::SlSul { Stage::Cluster } else { Stage::ClusterSelected };
                let b = single(self, other)?;
                eval::concat_embeddings(&a, &b)
            }
        }
    }

    pub fn trained(&self) -> &[TrainedStage] {
        &self.stages
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantScore {
    pub variant: Variant,
    pub scores: F1Scores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedScores {
    pub seed: u64,
    pub scores: Vec<VariantScore>,
    /// Cluster count picked by the silhouette search, when a starred variant ran.
    pub selected_k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantSummary {
    pub variant: Variant,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub runs: usize,
}

/// Per-seed scores and their per-variant aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label_rate: f64,
    pub n_unseen: usize,
    pub variants: Vec<Variant>,
    pub per_seed: Vec<SeedScores>,
    pub aggregates: Vec<VariantSummary>,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, libm::sqrt(var))
}

impl EvalReport {
    /// Aggregates in the order of `per_seed` (callers sort by seed when runs finish out of
    /// order).
    pub fn new(label_rate: f64, n_unseen: usize, variants: &[Variant], per_seed: Vec<SeedScores>) -> Result<Self> {
        let mut aggregates = Vec::with_capacity(variants.len());
        for &v in variants {
            let mut micro = Vec::new();
            let mut macro_ = Vec::new();
            for s in &per_seed {
                let score = s
                    .scores
                    .iter()
                    .find(|vs| vs.variant == v)
                    .ok_or_else(|| Error::InvalidArgument(format!("seed {} has no score for {}", s.seed, v.as_str())))?;
                micro.push(score.scores.micro);
                macro_.push(score.scores.macro_);
            }
            let (micro_mean, micro_std) = mean_std(&micro);
            let (macro_mean, macro_std) = mean_std(&macro_);
            aggregates.push(VariantSummary { variant: v, micro_mean, micro_std, macro_mean, macro_std, runs: micro.len() });
        }
        Ok(EvalReport { label_rate, n_unseen, variants: variants.to_vec(), per_seed, aggregates })
    }

    pub fn summary(&self, variant: Variant) -> Option<&VariantSummary> {
        self.aggregates.iter().find(|a| a.variant == variant)
    }
}
