//! Parameter initialization, the PReLU activation and the Adam optimizer.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Uniform Xavier/Glorot initialization on `[-b, b]`, `b = sqrt(6 / (rows + cols))`.
pub fn xavier_init(rows: usize, cols: usize, seed: u64) -> Matrix {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    let mut r = rng::seeded(seed);
    Matrix::from_fn(rows, cols, |_, _| (2.0 * rng::uniform(&mut r) - 1.0) * bound)
}

pub const DEFAULT_PRELU_SLOPE: f64 = 0.25;

/// PReLU output with its elementwise partial derivatives.
#[derive(Debug, Clone)]
pub struct PreluOutput {
    pub out: Matrix,
    /// `∂out/∂x`: 1 where `x > 0`, the channel slope elsewhere.
    pub d_input: Matrix,
    /// `∂out/∂slope` of the entry's channel: 0 where `x > 0`, `x` elsewhere.
    pub d_slope: Matrix,
}

#[inline]
pub fn prelu_scalar(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Channel-wise PReLU; `slopes[j]` applies to column `j`.
pub fn prelu(x: &Matrix, slopes: &[f64]) -> Result<PreluOutput> {
    if slopes.len() != x.cols() {
        return Err(Error::dims("prelu", format!("{} slopes for {} channels", slopes.len(), x.cols())));
    }
    let (rows, cols) = x.shape();
    let mut out = Matrix::zeros(rows, cols);
    let mut d_input = Matrix::zeros(rows, cols);
    let mut d_slope = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for (j, &v) in x.row(i).iter().enumerate() {
            if v > 0.0 {
                out[(i, j)] = v;
                d_input[(i, j)] = 1.0;
            } else {
                out[(i, j)] = slopes[j] * v;
                d_input[(i, j)] = slopes[j];
                d_slope[(i, j)] = v;
            }
        }
    }
    Ok(PreluOutput { out, d_input, d_slope })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators for a fixed list of named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    names: Vec<String>,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[(&str, (usize, usize))]) -> Self {
        AdamState {
            config,
            names: params.iter().map(|(n, _)| String::from(*n)).collect(),
            first: params.iter().map(|&(_, (r, c))| Matrix::zeros(r, c)).collect(),
            second: params.iter().map(|&(_, (r, c))| Matrix::zeros(r, c)).collect(),
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moments(&self) -> &[Matrix] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Matrix] {
        &self.second
    }

    /// One bias-corrected Adam update. Nothing is modified when any gradient is
    /// non-finite or a shape disagrees.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[&Matrix]) -> Result<()> {
        if params.len() != self.names.len() || grads.len() != self.names.len() {
            return Err(Error::dims(
                "adam_step",
                format!("{} params / {} grads for {} slots", params.len(), grads.len(), self.names.len()),
            ));
        }
        for (k, name) in self.names.iter().enumerate() {
            if params[k].shape() != self.first[k].shape() || grads[k].shape() != self.first[k].shape() {
                return Err(Error::dims("adam_step", format!("parameter {name}: shape mismatch")));
            }
            if !grads[k].is_finite() {
                return Err(Error::NonFinite(format!("gradient of parameter {name}")));
            }
        }
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(beta1, t);
        let bc2 = 1.0 - libm::pow(beta2, t);
        for k in 0..self.names.len() {
            let p = params[k].as_mut_slice();
            let g = grads[k].as_slice();
            let m = self.first[k].as_mut_slice();
            let v = self.second[k].as_mut_slice();
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
