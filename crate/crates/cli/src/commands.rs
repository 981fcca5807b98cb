//! Subcommand implementations.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use zge_core::expansion::Provenance;
use zge_core::pipeline::{EvalReport, Experiment, SeedRun, Stage, Variant};
use zge_core::SplitSpec;

use crate::cache::{self, Prepared};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{self, CellReport, DatasetEcho, DiagnosticsReport, RunReport, SeedDiagnostics, SplitEcho, StageDiagnostics};
use crate::zgem;

/// Files written by a command.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
}

fn pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| CliError::Other(e.to_string()))
}

/// Runs `f` for every seed (concurrently when `threads > 1`), keeping seed order.
fn per_seed<T: Send>(cfg: &RunConfig, f: impl Fn(u64) -> CliResult<T> + Sync) -> CliResult<Vec<T>> {
    if cfg.threads <= 1 {
        return cfg.seeds.iter().map(|&s| f(s)).collect();
    }
    pool(cfg.threads)?.install(|| cfg.seeds.par_iter().map(|&s| f(s)).collect())
}

fn rate_tag(rate: f64) -> String {
    format!("rate{rate}")
}

pub fn cmd_prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    cfg.validate()?;
    let p = cache::prepare(cfg)?;
    log::info!(
        "prepared {}: {} nodes, {} edges, {} classes, features {}x{} ({})",
        cfg.dataset_name(),
        p.dataset.n_nodes(),
        p.dataset.n_edges(),
        p.dataset.n_classes(),
        p.features.matrix().rows(),
        p.features.rank(),
        if p.hit { "cached" } else { "computed" }
    );
    Ok(p)
}

fn experiment<'a>(cfg: &RunConfig, p: &'a Prepared) -> CliResult<Experiment<'a>> {
    Ok(Experiment::new(&p.dataset, &p.propagation, &p.features, cfg.pipeline())?)
}

fn evaluate_cell(cfg: &RunConfig, exp: &Experiment<'_>, rate: f64, n_unseen: usize) -> CliResult<CellReport> {
    let runs = per_seed(cfg, |seed| {
        let split = exp.split(rate, n_unseen, seed)?;
        let scores = exp.run_seed(&split, &cfg.variants)?;
        log::info!(
            "rate {rate} unseen {:?} seed {seed}: {}",
            split.unseen,
            scores.scores.iter().map(|s| format!("{}={:.4}", s.variant.as_str(), s.scores.micro)).collect::<Vec<_>>().join(" ")
        );
        Ok((split, scores))
    })?;
    let (splits, scores): (Vec<SplitSpec>, Vec<_>) = runs.into_iter().unzip();
    let report = EvalReport::new(rate, n_unseen, &cfg.variants, scores)?;
    Ok(CellReport::new(&report, &splits, exp.dataset().n_classes()))
}

fn write_run_outputs(cfg: &RunConfig, report: &RunReport, stem: &str) -> CliResult<Outputs> {
    let json = cfg.out.join(format!("{stem}.json"));
    let scores = cfg.out.join(format!("{stem}_scores.csv"));
    let aggregates = cfg.out.join(format!("{stem}_aggregates.csv"));
    report::write_json(&json, report)?;
    report::write_atomic(&scores, report::scores_csv(report).as_bytes())?;
    report::write_atomic(&aggregates, report::aggregates_csv(report).as_bytes())?;
    Ok(Outputs { files: vec![json, scores, aggregates] })
}

fn base_report(cfg: &RunConfig, p: &Prepared, kind: &'static str, cells: Vec<CellReport>) -> RunReport {
    RunReport {
        kind,
        config_hash: cfg.hash(),
        config: cfg.canonical_text(),
        settings: cfg.clone(),
        dataset: DatasetEcho::new(cfg.dataset_name(), &p.dataset),
        cells,
    }
}

/// The evaluation grid: every label rate × every seed × every variant.
pub fn cmd_run(cfg: &RunConfig) -> CliResult<(RunReport, Outputs)> {
    let p = cmd_prepare(cfg)?;
    let exp = experiment(cfg, &p)?;
    let cells = cfg.label_rates.iter().map(|&r| evaluate_cell(cfg, &exp, r, cfg.n_unseen)).collect::<CliResult<Vec<_>>>()?;
    let report = base_report(cfg, &p, "run", cells);
    let out = write_run_outputs(cfg, &report, "report")?;
    Ok((report, out))
}

/// Rebuilds the configuration embedded in a report.
pub fn config_from_report(path: &std::path::Path) -> CliResult<RunConfig> {
    let text = crate::io::read_text(path)?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Data { path: path.into(), message: format!("not a report: {e}") })?;
    let embedded = v
        .get("config")
        .and_then(|c| c.as_str())
        .ok_or_else(|| CliError::Data { path: path.into(), message: "report has no embedded config".into() })?;
    let mut cfg = RunConfig::default();
    cfg.apply_text(embedded, &path.display().to_string())?;
    if v.get("config_hash").and_then(|h| h.as_str()) != Some(cfg.hash().as_str()) {
        return Err(CliError::Data { path: path.into(), message: "embedded config does not match its hash".into() });
    }
    Ok(cfg)
}

pub fn seen_counts(cfg: &RunConfig, n_classes: usize) -> CliResult<Vec<usize>> {
    if n_classes < 2 {
        return Err(CliError::Config("a seen-class sweep needs at least two classes".into()));
    }
    if cfg.seen_counts.is_empty() {
        return Ok((1..n_classes).rev().collect());
    }
    for &c in &cfg.seen_counts {
        if c == 0 || c >= n_classes {
            return Err(CliError::Config(format!("seen count {c} outside [1, {}]", n_classes - 1)));
        }
    }
    Ok(cfg.seen_counts.clone())
}

/// Seen-class sweep: for each count, `C - count` classes are drawn unseen per seed.
pub fn cmd_sweep_seen(cfg: &RunConfig) -> CliResult<(RunReport, Outputs)> {
    cfg.validate()?;
    let p = cmd_prepare(cfg)?;
    let c = p.dataset.n_classes();
    let counts = seen_counts(cfg, c)?;
    let exp = experiment(cfg, &p)?;
    let mut cells = Vec::new();
    for &rate in &cfg.label_rates {
        for &count in &counts {
            cells.push(evaluate_cell(cfg, &exp, rate, c - count)?);
        }
    }
    let report = base_report(cfg, &p, "sweep-seen", cells);
    let out = write_run_outputs(cfg, &report, "sweep")?;
    Ok((report, out))
}

fn stages_for(variants: &[Variant]) -> Vec<Stage> {
    let mut stages = vec![Stage::Base];
    for v in variants {
        let needed: &[Stage] = match v {
            Variant::RectL => &[],
            Variant::Sl => &[Stage::Seen],
            Variant::Sul => &[Stage::Cluster],
            Variant::SulStar => &[Stage::ClusterSelected],
            Variant::SlSul => &[Stage::Seen, Stage::Cluster],
            Variant::SlSulStar => &[Stage::Seen, Stage::ClusterSelected],
        };
        stages.extend_from_slice(needed);
    }
    stages.sort();
    stages.dedup();
    stages
}

/// Risk diagnostics of the unexpanded model and every expansion the variants use.
pub fn cmd_diagnose(cfg: &RunConfig) -> CliResult<(DiagnosticsReport, Outputs)> {
    let p = cmd_prepare(cfg)?;
    let exp = experiment(cfg, &p)?;
    let stages = stages_for(&cfg.variants);
    let mut runs = Vec::new();
    for &rate in &cfg.label_rates {
        runs.extend(per_seed(cfg, |seed| {
            let split = exp.split(rate, cfg.n_unseen, seed)?;
            let mut run = SeedRun::new(&exp, &split)?;
            let mut out = Vec::new();
            for &s in &stages {
                let t = run.stage(s)?;
                let d = exp.diagnostics(&split, t)?;
                out.push(StageDiagnostics::new(s.as_str(), t.labels.len(), t.labels.count(Provenance::Expanded), &d));
            }
            Ok(SeedDiagnostics { label_rate: rate, seed, split: SplitEcho::new(&split), stages: out })
        })?);
    }
    let report = DiagnosticsReport {
        kind: "diagnose",
        config_hash: cfg.hash(),
        config: cfg.canonical_text(),
        dataset: DatasetEcho::new(cfg.dataset_name(), &p.dataset),
        note: report::PROXY_NOTE,
        runs,
    };
    let path = cfg.out.join("diagnostics.json");
    report::write_json(&path, &report)?;
    Ok((report, Outputs { files: vec![path] }))
}

pub fn parse_strategy(s: &str) -> CliResult<Stage> {
    match s {
        "sl" => Ok(Stage::Seen),
        "sul" => Ok(Stage::Cluster),
        "sul-star" => Ok(Stage::ClusterSelected),
        other => Err(CliError::Config(format!("unknown expansion strategy `{other}` (sl, sul, sul-star)"))),
    }
}

/// Dumps the expanded label set of one strategy as `node label provenance kind` lines.
pub fn cmd_expand(cfg: &RunConfig, strategy: Stage) -> CliResult<Outputs> {
    let p = cmd_prepare(cfg)?;
    let exp = experiment(cfg, &p)?;
    let hash = cfg.hash();
    let mut files = Vec::new();
    for &rate in &cfg.label_rates {
        files.extend(per_seed(cfg, |seed| {
            let split = exp.split(rate, cfg.n_unseen, seed)?;
            let mut run = SeedRun::new(&exp, &split)?;
            let t = run.stage(strategy)?;
            let mut text = format!("# config_hash {hash}\n# strategy {} {} seed {seed}\n", strategy.as_str(), rate_tag(rate));
            for (node, e) in t.labels.iter() {
                let kind = match e.kind {
                    zge_core::model::LabelKind::Real => "real",
                    zge_core::model::LabelKind::Pseudo => "pseudo",
                };
                writeln!(text, "{node} {} {} {kind}", e.label, e.provenance.as_str()).unwrap();
            }
            let path = cfg.out.join("expanded").join(format!("{}_{}_seed{seed}.txt", strategy.as_str(), rate_tag(rate)));
            report::write_atomic(&path, text.as_bytes())?;
            Ok(path)
        })?);
    }
    Ok(Outputs { files })
}

/// Writes the embedding of `variant` (and the trained model checkpoints behind it).
pub fn cmd_embed(cfg: &RunConfig, variant: Variant) -> CliResult<Outputs> {
    let p = cmd_prepare(cfg)?;
    let exp = experiment(cfg, &p)?;
    let hash = cfg.hash();
    let mut files = Vec::new();
    for &rate in &cfg.label_rates {
        let written = per_seed(cfg, |seed| {
            let split = exp.split(rate, cfg.n_unseen, seed)?;
            let mut run = SeedRun::new(&exp, &split)?;
            let emb = run.embedding(variant)?;
            let stem = format!("{}_{}_seed{seed}", variant.as_str(), rate_tag(rate));
            let dir = cfg.out.join("embeddings");
            let path = dir.join(format!("{stem}.zgem"));
            zgem::write(&path, &emb.matrix)?;
            let meta = format!(
                "config_hash = {hash}\nvariant = {}\nkind = {}\nrows = {}\ncols = {}\nlabel_rate = {rate}\nseed = {seed}\nsplit = {}\n",
                variant.as_str(),
                emb.kind.as_str(),
                emb.matrix.rows(),
                emb.matrix.cols(),
                report::split_fingerprint(&split)
            );
            let meta_path = dir.join(format!("{stem}.manifest.txt"));
            report::write_atomic(&meta_path, meta.as_bytes())?;
            let mut out = vec![path, meta_path];
            for t in run.trained() {
                let model_dir = cfg.out.join("models").join(format!("{}_{}_seed{seed}", t.stage.as_str(), rate_tag(rate)));
                checkpoint::save_model(&model_dir, &t.model, &hash)?;
                out.push(model_dir);
            }
            Ok(out)
        })?;
        files.extend(written.into_iter().flatten());
    }
    Ok(Outputs { files })
}
