//! JSON and CSV reports, written atomically.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use zge_core::eval::RiskDiagnostics;
use zge_core::pipeline::{EvalReport, SeedScores};
use zge_core::{Dataset, SplitSpec};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const PROXY_NOTE: &str = "proxy_distance is 2(1 - 2 err) clamped to [0, 2], where err is the held-out error of a \
linear domain classifier between training and test embeddings; it is an empirical stand-in, not the bound's \
distribution distance";

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn split_fingerprint(split: &SplitSpec) -> String {
    let mut h = Sha256::new();
    for list in [&split.seen, &split.unseen, &split.train_labeled, &split.probe_train, &split.test] {
        h.update((list.len() as u64).to_le_bytes());
        for &v in list.iter() {
            h.update((v as u64).to_le_bytes());
        }
    }
    hex::encode(h.finalize())[..16].to_string()
}

#[derive(Debug, Clone, Serialize)]
pub struct DatasetEcho {
    pub name: String,
    pub nodes: usize,
    pub edges: usize,
    pub classes: usize,
    pub feature_dim: usize,
    pub average_degree: f64,
}

impl DatasetEcho {
    pub fn new(name: String, ds: &Dataset) -> Self {
        DatasetEcho {
            name,
            nodes: ds.n_nodes(),
            edges: ds.n_edges(),
            classes: ds.n_classes(),
            feature_dim: ds.feature_dim(),
            average_degree: ds.average_degree(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitEcho {
    pub seen: Vec<usize>,
    pub unseen: Vec<usize>,
    pub train_labeled: usize,
    pub probe_train: usize,
    pub test: usize,
    pub fingerprint: String,
}

impl SplitEcho {
    pub fn new(split: &SplitSpec) -> Self {
        SplitEcho {
            seen: split.seen.clone(),
            unseen: split.unseen.clone(),
            train_labeled: split.train_labeled.len(),
            probe_train: split.probe_train.len(),
            test: split.test.len(),
            fingerprint: split_fingerprint(split),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScoreEntry {
    pub variant: &'static str,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub split: SplitEcho,
    pub selected_k: Option<usize>,
    pub scores: Vec<ScoreEntry>,
}

impl SeedEntry {
    pub fn new(split: &SplitSpec, s: &SeedScores) -> Self {
        SeedEntry {
            seed: s.seed,
            split: SplitEcho::new(split),
            selected_k: s.selected_k,
            scores: s
                .scores
                .iter()
                .map(|v| ScoreEntry { variant: v.variant.as_str(), micro_f1: v.scores.micro, macro_f1: v.scores.macro_ })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateEntry {
    pub variant: &'static str,
    pub micro_f1_mean: f64,
    pub micro_f1_std: f64,
    pub macro_f1_mean: f64,
    pub macro_f1_std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub label_rate: f64,
    pub n_unseen: usize,
    pub seen_count: usize,
    pub per_seed: Vec<SeedEntry>,
    pub aggregates: Vec<AggregateEntry>,
}

impl CellReport {
    pub fn new(report: &EvalReport, splits: &[SplitSpec], n_classes: usize) -> Self {
        CellReport {
            label_rate: report.label_rate,
            n_unseen: report.n_unseen,
            seen_count: n_classes - report.n_unseen,
            per_seed: report.per_seed.iter().zip(splits).map(|(s, sp)| SeedEntry::new(sp, s)).collect(),
            aggregates: report
                .aggregates
                .iter()
                .map(|a| AggregateEntry {
                    variant: a.variant.as_str(),
                    micro_f1_mean: a.micro_mean,
                    micro_f1_std: a.micro_std,
                    macro_f1_mean: a.macro_mean,
                    macro_f1_std: a.macro_std,
                    runs: a.runs,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub kind: &'static str,
    pub config_hash: String,
    /// Canonical configuration text, sufficient to replay the run.
    pub config: String,
    pub settings: RunConfig,
    pub dataset: DatasetEcho,
    pub cells: Vec<CellReport>,
}

pub fn scores_csv(report: &RunReport) -> String {
    let sweep = report.kind == "sweep-seen";
    let mut out = String::from(if sweep {
        "variant,dataset,rate,seen_count,seed,micro_f1,macro_f1,config_hash\n"
    } else {
        "variant,dataset,rate,seed,micro_f1,macro_f1,config_hash\n"
    });
    for cell in &report.cells {
        for s in &cell.per_seed {
            for v in &s.scores {
                let count = if sweep { format!("{},", cell.seen_count) } else { String::new() };
                writeln!(
                    out,
                    "{},{},{},{count}{},{},{},{}",
                    v.variant, report.dataset.name, cell.label_rate, s.seed, v.micro_f1, v.macro_f1, report.config_hash
                )
                .unwrap();
            }
        }
    }
    out
}

pub fn aggregates_csv(report: &RunReport) -> String {
    let mut out =
        String::from("variant,dataset,rate,seen_count,micro_f1_mean,micro_f1_std,macro_f1_mean,macro_f1_std,runs,config_hash\n");
    for cell in &report.cells {
        for a in &cell.aggregates {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                a.variant,
                report.dataset.name,
                cell.label_rate,
                cell.seen_count,
                a.micro_f1_mean,
                a.micro_f1_std,
                a.macro_f1_mean,
                a.macro_f1_std,
                a.runs,
                report.config_hash
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct StageDiagnostics {
    pub stage: &'static str,
    pub labeled_nodes: usize,
    pub expanded_nodes: usize,
    pub empirical_train_error: f64,
    pub empirical_test_error: f64,
    pub test_nodes: usize,
    pub proxy_distance: f64,
    pub domain_error: f64,
}

impl StageDiagnostics {
    pub fn new(stage: &'static str, labeled: usize, expanded: usize, d: &RiskDiagnostics) -> Self {
        StageDiagnostics {
            stage,
            labeled_nodes: labeled,
            expanded_nodes: expanded,
            empirical_train_error: d.empirical_train_error,
            empirical_test_error: d.empirical_test_error,
            test_nodes: d.test_nodes,
            proxy_distance: d.proxy_distance,
            domain_error: d.domain_error,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedDiagnostics {
    pub label_rate: f64,
    pub seed: u64,
    pub split: SplitEcho,
    pub stages: Vec<StageDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub kind: &'static str,
    pub config_hash: String,
    pub config: String,
    pub dataset: DatasetEcho,
    pub note: &'static str,
    pub runs: Vec<SeedDiagnostics>,
}
