//! Finite-difference audit of the model gradients on random 30-node graphs.

use std::sync::Arc;
use std::time::Instant;

use anyhow::Result;
use flode_core::graph::{build_sna, erdos_renyi};
use flode_core::model::{gradient_check, init_model, GradCheckReport};
use flode_core::spectral::svd_full;
use flode_core::{DegreePolicy, ModelConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::Status;
use crate::output::Output;
use crate::pool::run_ordered;
use crate::spec::ExperimentSpec;

pub const GRADCHECK_TOL: f64 = 1e-5;
pub const GRADCHECK_NODES: usize = 30;
const IN_DIM: usize = 3;
const CLASSES: usize = 3;

#[derive(Debug, Serialize)]
struct SeedReport {
    seed: u64,
    passed: bool,
    report: GradCheckReport,
}

/// Small default so the audit runs in seconds.
pub fn default_config() -> ModelConfig {
    ModelConfig { hidden_channels: 4, num_layers: 2, encoder_layers: 2, decoder_layers: 2, ..ModelConfig::default() }
}

pub fn check_seed(cfg: &ModelConfig, seed: u64) -> Result<GradCheckReport> {
    let g = erdos_renyi(GRADCHECK_NODES, 0.15, true, seed)?;
    let factors = Arc::new(svd_full(&build_sna(&g, DegreePolicy::SelfLoop)?)?);
    let model = init_model(&ModelConfig { seed, ..cfg.clone() }, factors, IN_DIM, CLASSES, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let x = DMatrix::from_fn(GRADCHECK_NODES, IN_DIM, |_, _| rng.sample(StandardNormal));
    let labels: Vec<usize> = (0..GRADCHECK_NODES).map(|_| rng.random_range(0..CLASSES)).collect();
    let mask: Vec<usize> = (0..GRADCHECK_NODES).filter(|i| i % 3 != 0).collect();
    Ok(gradient_check(&model, &x, &labels, &mask)?)
}

pub fn run(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    let cfg = spec.model.clone().unwrap_or_else(default_config);
    cfg.validate()?;
    let seeds = spec.seeds_or_default();
    let reports = run_ordered(jobs, &seeds, |_, &seed| check_seed(&cfg, seed));
    let mut out_reports = Vec::new();
    for (seed, rep) in seeds.iter().zip(reports) {
        let report = rep?;
        let passed = report.max_rel_error <= GRADCHECK_TOL;
        println!(
            "seed {seed}: max relative error {:.3e} ({}) over {} entries, {}",
            report.max_rel_error,
            report.worst_param,
            report.entries_checked,
            if passed { "PASS" } else { "FAIL" }
        );
        out_reports.push(SeedReport { seed: *seed, passed, report });
    }
    let out = Output::create(spec, started)?;
    out.write_json("gradcheck.json", &out_reports)?;
    Ok(if out_reports.iter().all(|r| r.passed) { Status::Success } else { Status::VerificationFailed })
}
