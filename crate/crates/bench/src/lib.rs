//! Deterministic fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use flode_core::graph::{build_sna, erdos_renyi};
use flode_core::model::{init_model, FlodeModel};
use flode_core::spectral::{svd_full, SnaFactors};
use flode_core::{DegreePolicy, DirectedGraph, FeatureMatrix, ModelConfig, Scheme, SnaMatrix};
use nalgebra::DMatrix;

/// Directed Erdős–Rényi graph with expected out-degree `avg_degree`.
pub fn random_digraph(n: usize, avg_degree: f64, seed: u64) -> DirectedGraph {
    erdos_renyi(n, (avg_degree / n as f64).min(1.0), true, seed).expect("valid parameters")
}

pub fn self_loop_sna(g: &DirectedGraph) -> SnaMatrix {
    build_sna(g, DegreePolicy::SelfLoop).expect("self-loops remove zero degrees")
}

pub fn full_factors(n: usize, seed: u64) -> Arc<SnaFactors> {
    Arc::new(svd_full(&self_loop_sna(&random_digraph(n, 8.0, seed))).expect("svd"))
}

/// Smooth deterministic features with entries in `[-1, 1]`.
pub fn features(n: usize, k: usize) -> FeatureMatrix {
    FeatureMatrix::real(DMatrix::from_fn(n, k, |i, j| ((i * 31 + j * 17) as f64 * 0.013).sin()))
}

pub fn model(factors: Arc<SnaFactors>, in_dim: usize, classes: usize, scheme: Scheme) -> FlodeModel {
    let cfg = ModelConfig { hidden_channels: 32, scheme, ..ModelConfig::default() };
    init_model(&cfg, factors, in_dim, classes, 0).expect("valid config")
}
