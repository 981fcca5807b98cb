//! Model checkpoints: one ZGEM file per parameter plus a text manifest.

use std::collections::BTreeMap;
use std::path::Path;

use zge_core::model::{GcnHyper, GcnModel};
use zge_core::nn::AdamConfig;

use crate::error::{CliError, CliResult};
use crate::report::write_atomic;
use crate::zgem;

const PARAMS: [&str; 3] = ["w1", "slopes1", "w2"];

pub fn save_model(dir: &Path, model: &GcnModel, config_hash: &str) -> CliResult<()> {
    for (name, m) in PARAMS.iter().zip([&model.w1, &model.slopes, &model.w2]) {
        zgem::write(&dir.join(format!("{name}.zgem")), m)?;
    }
    let h = &model.hyper;
    let final_loss = model.loss_history.last().map_or("none".to_string(), |l| l.to_string());
    let manifest = format!(
        "config_hash = {config_hash}\nw1 = {}x{}\nslopes1 = {}x{}\nw2 = {}x{}\nhidden = {}\nepochs = {}\nepochs_completed = {}\n\
         lr = {}\nbeta1 = {}\nbeta2 = {}\neps = {}\nseed = {}\nfinal_loss = {final_loss}\n",
        model.w1.rows(),
        model.w1.cols(),
        model.slopes.rows(),
        model.slopes.cols(),
        model.w2.rows(),
        model.w2.cols(),
        h.hidden,
        h.epochs,
        model.loss_history.len(),
        h.adam.lr,
        h.adam.beta1,
        h.adam.beta2,
        h.adam.eps,
        model.seed,
    );
    write_atomic(&dir.join("manifest.txt"), manifest.as_bytes())
}

/// Restores parameters and hyperparameters; optimizer state and loss history are not
/// persisted.
pub fn load_model(dir: &Path) -> CliResult<GcnModel> {
    let path = dir.join("manifest.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let fields: BTreeMap<&str, &str> = text.lines().filter_map(|l| l.split_once('=')).map(|(k, v)| (k.trim(), v.trim())).collect();
    let get = |k: &str| -> CliResult<&str> {
        fields.get(k).copied().ok_or_else(|| CliError::Integrity { path: path.clone(), message: format!("missing `{k}`") })
    };
    let num = |k: &str| -> CliResult<f64> {
        get(k)?.parse().map_err(|_| CliError::Integrity { path: path.clone(), message: format!("bad `{k}`") })
    };
    let hyper = GcnHyper {
        hidden: num("hidden")? as usize,
        epochs: num("epochs")? as usize,
        adam: AdamConfig { lr: num("lr")?, beta1: num("beta1")?, beta2: num("beta2")?, eps: num("eps")? },
    };
    let seed: u64 = get("seed")?.parse().map_err(|_| CliError::Integrity { path: path.clone(), message: "bad `seed`".into() })?;
    let mats: Vec<_> = PARAMS.iter().map(|n| zgem::read(&dir.join(format!("{n}.zgem")))).collect::<CliResult<_>>()?;
    let [w1, slopes, w2]: [_; 3] = mats.try_into().unwrap();
    GcnModel::from_parameters(w1, slopes, w2, hyper, seed)
        .map_err(|e| CliError::Integrity { path: dir.into(), message: e.to_string() })
}
