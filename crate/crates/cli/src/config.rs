//! `key = value` run configuration. Command-line flags override file values.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use zge_core::model::GcnHyper;
use zge_core::nn::AdamConfig;
use zge_core::pipeline::{PipelineConfig, Variant};
use zge_core::svd::SvdConfig;

use crate::error::{CliError, CliResult};
use crate::io::DatasetPaths;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Directory holding `edges.txt`, `features.txt`, `labels.txt`.
    pub dataset: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub label_rates: Vec<f64>,
    pub n_unseen: usize,
    #[serde(serialize_with = "variant_names")]
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub rank: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub tau: u32,
    pub k_min: usize,
    /// `None`: `max(10, C + 2)`.
    pub k_max: Option<usize>,
    pub svm_c: f64,
    pub svm_epochs: usize,
    pub svd_power_iterations: usize,
    pub svd_oversampling: usize,
    pub svd_seed: u64,
    /// Seen-class counts for `sweep-seen`; empty means every count in `[1, C - 1]`.
    pub seen_counts: Vec<usize>,
    /// Execution settings: excluded from the config hash and from reports.
    #[serde(skip)]
    pub out: PathBuf,
    #[serde(skip)]
    pub threads: usize,
}

fn variant_names<S: serde::Serializer>(v: &[Variant], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|v| v.as_str()))
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let hyper = GcnHyper::default();
        let svd = SvdConfig::default();
        RunConfig {
            dataset: None,
            edges: None,
            features: None,
            labels: None,
            label_rates: vec![0.01, 0.03, 0.05],
            n_unseen: 2,
            variants: Variant::ALL.to_vec(),
            seeds: (0..10).collect(),
            rank: 200,
            hidden: hyper.hidden,
            epochs: hyper.epochs,
            lr: adam.lr,
            beta1: adam.beta1,
            beta2: adam.beta2,
            eps: adam.eps,
            tau: 2,
            k_min: 2,
            k_max: None,
            svm_c: 1.0,
            svm_epochs: 50,
            svd_power_iterations: svd.power_iterations,
            svd_oversampling: svd.oversampling,
            svd_seed: svd.seed,
            seen_counts: Vec::new(),
            out: PathBuf::from("out"),
            threads: 1,
        }
    }
}

fn cfg_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim().parse().map_err(|_| cfg_err(format!("{key}: cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

/// `a..b` (half-open) or a comma list.
pub fn parse_seeds(v: &str) -> CliResult<Vec<u64>> {
    if let Some((a, b)) = v.split_once("..") {
        let (a, b): (u64, u64) = (parse_num("seeds", a)?, parse_num("seeds", b)?);
        if a >= b {
            return Err(cfg_err(format!("seeds: empty range {v}")));
        }
        return Ok((a..b).collect());
    }
    parse_list("seeds", v)
}

pub fn parse_variants(v: &str) -> CliResult<Vec<Variant>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            Variant::parse(s).ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.as_str()).collect();
                cfg_err(format!("unknown variant `{s}` (expected one of {})", names.join(", ")))
            })
        })
        .collect()
}

fn fmt_list<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        let path = || if v.is_empty() { None } else { Some(PathBuf::from(v)) };
        match key {
            "dataset" => self.dataset = path(),
            "edges" => self.edges = path(),
            "features" => self.features = path(),
            "labels" => self.labels = path(),
            "label_rates" | "label_rate" => self.label_rates = parse_list(key, v)?,
            "n_unseen" | "unseen" => self.n_unseen = parse_num(key, v)?,
            "variants" => self.variants = parse_variants(v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "rank" => self.rank = parse_num(key, v)?,
            "hidden" => self.hidden = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "beta1" => self.beta1 = parse_num(key, v)?,
            "beta2" => self.beta2 = parse_num(key, v)?,
            "eps" => self.eps = parse_num(key, v)?,
            "tau" => self.tau = parse_num(key, v)?,
            "k_min" => self.k_min = parse_num(key, v)?,
            "k_max" => self.k_max = if v == "auto" || v.is_empty() { None } else { Some(parse_num(key, v)?) },
            "svm_c" => self.svm_c = parse_num(key, v)?,
            "svm_epochs" => self.svm_epochs = parse_num(key, v)?,
            "svd_power_iterations" => self.svd_power_iterations = parse_num(key, v)?,
            "svd_oversampling" => self.svd_oversampling = parse_num(key, v)?,
            "svd_seed" => self.svd_seed = parse_num(key, v)?,
            "seen_counts" => self.seen_counts = parse_list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "threads" => self.threads = parse_num(key, v)?,
            other => return Err(cfg_err(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.strip_suffix('\r').unwrap_or(raw).trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("{origin}:{}: expected key = value", i + 1)))?;
            self.set(k.trim(), v).map_err(|e| match e {
                CliError::Config(m) => cfg_err(format!("{origin}:{}: {m}", i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// Every result-affecting key in a fixed order; parsing it back reproduces the
    /// configuration apart from `out` and `threads`.
    pub fn canonical_text(&self) -> String {
        let lines = [
            ("dataset", fmt_path(&self.dataset)),
            ("edges", fmt_path(&self.edges)),
            ("features", fmt_path(&self.features)),
            ("labels", fmt_path(&self.labels)),
            ("label_rates", fmt_list(&self.label_rates)),
            ("n_unseen", self.n_unseen.to_string()),
            ("variants", self.variants.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")),
            ("seeds", fmt_list(&self.seeds)),
            ("rank", self.rank.to_string()),
            ("hidden", self.hidden.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            ("beta1", self.beta1.to_string()),
            ("beta2", self.beta2.to_string()),
            ("eps", self.eps.to_string()),
            ("tau", self.tau.to_string()),
            ("k_min", self.k_min.to_string()),
            ("k_max", self.k_max.map_or("auto".into(), |k| k.to_string())),
            ("svm_c", self.svm_c.to_string()),
            ("svm_epochs", self.svm_epochs.to_string()),
            ("svd_power_iterations", self.svd_power_iterations.to_string()),
            ("svd_oversampling", self.svd_oversampling.to_string()),
            ("svd_seed", self.svd_seed.to_string()),
            ("seen_counts", fmt_list(&self.seen_counts)),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn dataset_paths(&self) -> CliResult<DatasetPaths> {
        let base = self.dataset.as_deref().map(DatasetPaths::in_dir);
        let pick = |explicit: &Option<PathBuf>, from_dir: Option<&PathBuf>, what: &str| {
            explicit.clone().or_else(|| from_dir.cloned()).ok_or_else(|| cfg_err(format!("no {what} file: set `dataset` or `{what}`")))
        };
        Ok(DatasetPaths {
            edges: pick(&self.edges, base.as_ref().map(|b| &b.edges), "edges")?,
            features: pick(&self.features, base.as_ref().map(|b| &b.features), "features")?,
            labels: pick(&self.labels, base.as_ref().map(|b| &b.labels), "labels")?,
        })
    }

    /// Short dataset name for reports: the dataset directory or the features file stem.
    pub fn dataset_name(&self) -> String {
        let from = self.dataset.as_deref().or(self.features.as_deref());
        from.and_then(|p| if self.dataset.is_some() { p.file_name() } else { p.file_stem() })
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.label_rates.is_empty() || self.label_rates.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
            return Err(cfg_err(format!("label rates {:?} must lie in (0, 1)", self.label_rates)));
        }
        if self.seeds.is_empty() {
            return Err(cfg_err("at least one seed is required"));
        }
        if self.variants.is_empty() {
            return Err(cfg_err("at least one variant is required"));
        }
        if self.rank == 0 || self.hidden == 0 {
            return Err(cfg_err("rank and hidden must be positive"));
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(cfg_err("optimizer settings out of range"));
        }
        if self.tau == 0 {
            return Err(cfg_err("tau must be at least 1"));
        }
        if !(self.svm_c > 0.0) {
            return Err(cfg_err("svm_c must be positive"));
        }
        if self.threads == 0 {
            return Err(cfg_err("threads must be at least 1"));
        }
        if let Some(k) = self.k_max {
            if k < self.k_min || self.k_min < 2 {
                return Err(cfg_err(format!("silhouette range [{}, {k}] invalid", self.k_min)));
            }
        }
        Ok(())
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            hyper: GcnHyper {
                hidden: self.hidden,
                epochs: self.epochs,
                adam: AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps },
            },
            tau: self.tau,
            k_range: self.k_max.map(|hi| (self.k_min, hi)),
            svm_c: self.svm_c,
            svm_epochs: self.svm_epochs,
        }
    }

    pub fn svd(&self) -> SvdConfig {
        SvdConfig { power_iterations: self.svd_power_iterations, oversampling: self.svd_oversampling, seed: self.svd_seed }
    }
}
