//! Stage cache for the reduced features and the propagation matrix, keyed by a hash
//! of the input files and the reduction settings.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use zge_core::graph::PropagationMatrix;
use zge_core::svd::{reduce_features, ReducedFeatures};
use zge_core::{CsrMatrix, Dataset, Matrix};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::write_atomic;
use crate::zgem;

pub struct Prepared {
    pub dataset: Dataset,
    pub propagation: PropagationMatrix,
    pub features: ReducedFeatures,
    pub key: String,
    pub dir: PathBuf,
    pub hit: bool,
}

pub fn cache_key(cfg: &RunConfig) -> CliResult<String> {
    let paths = cfg.dataset_paths()?;
    let mut h = Sha256::new();
    h.update(b"zge-prepare-v1\n");
    for p in paths.all() {
        let bytes = fs::read(p).map_err(|e| CliError::io(p, e))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    let svd = cfg.svd();
    h.update(format!("rank={} q={} p={} seed={}\n", cfg.rank, svd.power_iterations, svd.oversampling, svd.seed).as_bytes());
    Ok(hex::encode(h.finalize()))
}

/// Propagation matrix as an `nnz × 3` matrix of `(row, col, value)` triplets.
pub fn propagation_to_matrix(p: &PropagationMatrix) -> Matrix {
    let m = p.matrix();
    let mut out = Matrix::zeros(m.nnz(), 3);
    let mut k = 0;
    for r in 0..m.rows() {
        for (c, v) in m.row(r) {
            out.row_mut(k).copy_from_slice(&[r as f64, c as f64, v]);
            k += 1;
        }
    }
    out
}

pub fn propagation_from_matrix(path: &Path, n: usize, t: &Matrix) -> CliResult<PropagationMatrix> {
    let bad = |message: String| CliError::Integrity { path: path.into(), message };
    if t.cols() != 3 {
        return Err(bad(format!("propagation cache has {} columns, expected 3", t.cols())));
    }
    let mut triplets = Vec::with_capacity(t.rows());
    for i in 0..t.rows() {
        let r = t.row(i);
        let (a, b) = (r[0], r[1]);
        if a < 0.0 || b < 0.0 || a.fract() != 0.0 || b.fract() != 0.0 || a as usize >= n || b as usize >= n {
            return Err(bad(format!("triplet {i} has invalid indices ({a}, {b})")));
        }
        triplets.push((a as usize, b as usize, r[2]));
    }
    let csr = CsrMatrix::from_triplets(n, n, &triplets).map_err(|e| bad(e.to_string()))?;
    PropagationMatrix::from_csr(csr).map_err(|e| bad(e.to_string()))
}

fn manifest_text(key: &str, ds: &Dataset, cfg: &RunConfig) -> String {
    format!(
        "key = {key}\nnodes = {}\nedges = {}\nfeature_dim = {}\nrank = {}\nfeatures = features.zgem\npropagation = propagation.zgem\n",
        ds.n_nodes(),
        ds.n_edges(),
        ds.feature_dim(),
        cfg.rank
    )
}

/// Loads the dataset and returns cached stage outputs, computing them on a miss.
pub fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let paths = cfg.dataset_paths()?;
    let (dataset, _) = io::load_dataset(&paths)?;
    let key = cache_key(cfg)?;
    let dir = cfg.out.join("cache").join(&key[..16]);
    let manifest = dir.join("manifest.txt");
    let feat_path = dir.join("features.zgem");
    let prop_path = dir.join("propagation.zgem");
    let expected = manifest_text(&key, &dataset, cfg);

    if fs::read_to_string(&manifest).ok().as_deref() == Some(expected.as_str()) {
        let x = zgem::read(&feat_path)?;
        if x.shape() != (dataset.n_nodes(), cfg.rank) {
            return Err(CliError::Integrity {
                path: feat_path,
                message: format!("shape {:?}, expected ({}, {})", x.shape(), dataset.n_nodes(), cfg.rank),
            });
        }
        let features = ReducedFeatures::new(x).map_err(|e| CliError::Integrity { path: feat_path.clone(), message: e.to_string() })?;
        let propagation = propagation_from_matrix(&prop_path, dataset.n_nodes(), &zgem::read(&prop_path)?)?;
        log::info!("cache hit {} ({} nodes, rank {})", dir.display(), dataset.n_nodes(), cfg.rank);
        return Ok(Prepared { dataset, propagation, features, key, dir, hit: true });
    }

    log::info!("cache miss: reducing {}x{} features to rank {}", dataset.n_nodes(), dataset.feature_dim(), cfg.rank);
    let features = reduce_features(dataset.features(), cfg.rank, &cfg.svd())?;
    let propagation = PropagationMatrix::from_dataset(&dataset);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    zgem::write(&feat_path, features.matrix())?;
    zgem::write(&prop_path, &propagation_to_matrix(&propagation))?;
    write_atomic(&manifest, expected.as_bytes())?;
    Ok(Prepared { dataset, propagation, features, key, dir, hit: false })
}
