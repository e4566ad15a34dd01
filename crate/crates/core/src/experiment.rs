//! End-to-end DSBM node-classification trials.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datasets::{dsbm_generate, dsbm_splits, DsbmConfig};
use crate::error::Result;
use crate::graph::{build_sna, DegreePolicy};
use crate::model::{init_model, train, ModelConfig, TrainStatus};
use crate::spectral::{svd_full, svd_truncated};

/// Default truncation rank for DSBM trials.
pub const DSBM_SVD_RANK: usize = 64;

/// Model settings used for DSBM trials.
pub fn dsbm_model_config(seed: u64) -> ModelConfig {
    ModelConfig { hidden_channels: 32, max_epochs: 300, patience: 200, seed, ..ModelConfig::default() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub num_edges: usize,
    pub status: TrainStatus,
    pub best_epoch: usize,
    pub val_acc: f64,
    pub test_acc: f64,
    pub alpha: f64,
}

/// Generates a DSBM graph, factors its normalized adjacency (rank `svd_rank`,
/// or exactly when `None`), trains on the standard splits and reports test accuracy.
pub fn run_dsbm_trial(dsbm: &DsbmConfig, model: &ModelConfig, svd_rank: Option<usize>) -> Result<TrialResult> {
    let (graph, labels, x) = dsbm_generate(dsbm)?;
    let sna = build_sna(&graph, DegreePolicy::SelfLoop)?;
    let factors = match svd_rank {
        Some(k) if k < sna.dim() => svd_truncated(&sna, k, dsbm.seed)?,
        _ => svd_full(&sna)?,
    };
    let splits = dsbm_splits(&labels, dsbm.seed)?;
    let m = init_model(model, Arc::new(factors), x.ncols(), dsbm.num_clusters, model.seed)?;
    let out = train(m, x.re(), &labels, &splits)?;
    Ok(TrialResult {
        seed: dsbm.seed,
        num_edges: graph.num_edges(),
        status: out.status,
        best_epoch: out.best_epoch,
        val_acc: out.best_val_acc,
        test_acc: out.test_acc,
        alpha: out.model.alpha(),
    })
}

/// Sample mean and standard error of the mean (zero for fewer than two values).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
