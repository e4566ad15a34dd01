use nalgebra::DMatrix;

use super::{Param, ParamKind};
use crate::error::{dims, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<DMatrix<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &[Param]) -> Self {
        let zeros = || params.iter().map(|p| DMatrix::zeros(p.value.nrows(), p.value.ncols())).collect();
        Self { m: zeros(), v: zeros(), t: 0 }
    }
}

/// One Adam update with decoupled weight decay on [`ParamKind::Weight`] entries.
pub fn adam_step(params: &mut [Param], grads: &[DMatrix<f64>], state: &mut AdamState, lr: f64, weight_decay: f64) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(dims("parameter, gradient and moment counts differ"));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.value.shape() != g.shape() {
            return Err(dims(format!("gradient for {} has shape {:?}", p.name, g.shape())));
        }
    }
    state.t += 1;
    let c1 = 1.0 - BETA1.powi(state.t as i32);
    let c2 = 1.0 - BETA2.powi(state.t as i32);
    for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(state.m.iter_mut().zip(state.v.iter_mut())) {
        let decay = if p.kind == ParamKind::Weight { lr * weight_decay } else { 0.0 };
        for i in 0..g.len() {
            m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
            v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
            let mhat = m[i] / c1;
            let vhat = v[i] / c2;
            p.value[i] -= lr * mhat / (vhat.sqrt() + EPSILON) + decay * p.value[i];
        }
    }
    Ok(())
}
