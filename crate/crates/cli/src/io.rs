//! Plain-text dataset files.
//!
//! * edges: `u v` per line, 0-based ids.
//! * features: line `i` holds node `i` as `index:value` pairs; an empty line is a zero
//!   row. An optional `# dim <d>` line fixes the feature width, otherwise it is the
//!   largest index plus one.
//! * labels: `node class` per line.
//!
//! Lines starting with `#` are comments everywhere; CRLF endings are accepted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use zge_core::graph::BuildStats;
use zge_core::{CsrMatrix, Dataset};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
}

impl DatasetPaths {
    /// `edges.txt`, `features.txt` and `labels.txt` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths { edges: dir.join("edges.txt"), features: dir.join("features.txt"), labels: dir.join("labels.txt") }
    }

    pub fn all(&self) -> [&Path; 3] {
        [&self.edges, &self.features, &self.labels]
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| CliError::Data { path: path.into(), message: format!("not UTF-8: {e}") })
}

/// `(line number, trimmed content)` for every line, comments included.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l).trim()))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse { path: path.into(), line, message: message.into() }
}

fn parse_usize(path: &Path, line: usize, tok: &str, what: &str) -> CliResult<usize> {
    tok.parse().map_err(|_| parse_err(path, line, format!("{what} `{tok}` is not a non-negative integer")))
}

pub fn parse_edges(path: &Path, text: &str) -> CliResult<Vec<(usize, usize, usize)>> {
    let mut out = Vec::new();
    for (no, line) in numbered_lines(text) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, no, format!("expected two node ids, found {} fields", toks.len())));
        }
        out.push((parse_usize(path, no, toks[0], "node id")?, parse_usize(path, no, toks[1], "node id")?, no));
    }
    Ok(out)
}

pub struct ParsedFeatures {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub dim: Option<usize>,
}

pub fn parse_features(path: &Path, text: &str) -> CliResult<ParsedFeatures> {
    let mut rows = Vec::new();
    let mut dim = None;
    for (no, line) in numbered_lines(text) {
        if let Some(comment) = line.strip_prefix('#') {
            let toks: Vec<&str> = comment.split_whitespace().collect();
            if toks.first() == Some(&"dim") {
                let d = toks.get(1).ok_or_else(|| parse_err(path, no, "`# dim` needs a value"))?;
                dim = Some(parse_usize(path, no, d, "feature dimension")?);
            }
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split_whitespace() {
            let (idx, val) = tok.split_once(':').ok_or_else(|| parse_err(path, no, format!("`{tok}` is not index:value")))?;
            let idx = parse_usize(path, no, idx, "feature index")?;
            let val: f64 = val.parse().map_err(|_| parse_err(path, no, format!("feature value `{val}` is not a number")))?;
            if !val.is_finite() || val < 0.0 {
                return Err(parse_err(path, no, format!("feature value {val} must be finite and non-negative")));
            }
            if let Some(d) = dim {
                if idx >= d {
                    return Err(parse_err(path, no, format!("feature index {idx} >= declared dimension {d}")));
                }
            }
            row.push((idx, val));
        }
        rows.push(row);
    }
    Ok(ParsedFeatures { rows, dim })
}

pub fn parse_labels(path: &Path, text: &str, n: usize) -> CliResult<Vec<usize>> {
    let mut labels: Vec<Option<usize>> = vec![None; n];
    for (no, line) in numbered_lines(text) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, no, format!("expected `node class`, found {} fields", toks.len())));
        }
        let node = parse_usize(path, no, toks[0], "node id")?;
        let class = parse_usize(path, no, toks[1], "class id")?;
        if node >= n {
            return Err(parse_err(path, no, format!("node id {node} out of range (n = {n})")));
        }
        if labels[node].replace(class).is_some() {
            return Err(parse_err(path, no, format!("node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or_else(|| CliError::Data { path: path.into(), message: format!("node {v} has no label") }))
        .collect()
}

/// Loads and validates a dataset; `n` is the number of feature rows.
pub fn load_dataset(paths: &DatasetPaths) -> CliResult<(Dataset, BuildStats)> {
    let features = parse_features(&paths.features, &read_text(&paths.features)?)?;
    let n = features.rows.len();
    if n == 0 {
        return Err(CliError::Data { path: paths.features.clone(), message: "no feature rows".into() });
    }
    let max_idx = features.rows.iter().flatten().map(|&(j, _)| j + 1).max().unwrap_or(0);
    let d = features.dim.unwrap_or(max_idx).max(1);
    let triplets: Vec<(usize, usize, f64)> =
        features.rows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v))).collect();
    let x = CsrMatrix::from_triplets(n, d, &triplets)?;

    let raw = parse_edges(&paths.edges, &read_text(&paths.edges)?)?;
    for &(a, b, no) in &raw {
        if a >= n || b >= n {
            return Err(parse_err(&paths.edges, no, format!("node id {} out of range (n = {n})", a.max(b))));
        }
    }
    let edges: Vec<(usize, usize)> = raw.iter().map(|&(a, b, _)| (a, b)).collect();
    let labels = parse_labels(&paths.labels, &read_text(&paths.labels)?, n)?;
    let (ds, stats) = Dataset::from_edges(&edges, x, labels).map_err(|e| match e {
        zge_core::Error::InvalidDataset(message) | zge_core::Error::InvalidArgument(message) => {
            CliError::Data { path: paths.labels.clone(), message }
        }
        other => other.into(),
    })?;
    if stats.self_loops_dropped > 0 {
        log::warn!("{}: dropped {} self-loops", paths.edges.display(), stats.self_loops_dropped);
    }
    if stats.duplicate_edges_dropped > 0 {
        log::info!("{}: merged {} duplicate edges", paths.edges.display(), stats.duplicate_edges_dropped);
    }
    Ok((ds, stats))
}

/// Canonical text serialization: each undirected edge once as `u v` with `u < v`.
pub fn write_dataset(ds: &Dataset, paths: &DatasetPaths) -> CliResult<()> {
    let mut edges = String::new();
    for (a, b) in ds.edges() {
        writeln!(edges, "{a} {b}").unwrap();
    }
    let mut feats = format!("# dim {}\n", ds.feature_dim());
    for i in 0..ds.n_nodes() {
        let row: Vec<String> = ds.features().row(i).map(|(j, v)| format!("{j}:{v}")).collect();
        feats.push_str(&row.join(" "));
        feats.push('\n');
    }
    let mut labels = String::new();
    for (v, l) in ds.labels().iter().enumerate() {
        writeln!(labels, "{v} {l}").unwrap();
    }
    for (path, body) in [(&paths.edges, edges), (&paths.features, feats), (&paths.labels, labels)] {
        crate::report::write_atomic(path, body.as_bytes())?;
    }
    Ok(())
}
