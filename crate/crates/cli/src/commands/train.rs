//! Training on a dataset directory: checkpoint, history and dominance audit per seed.

use std::time::Instant;

use anyhow::{bail, Result};
use flode_core::datasets::random_splits;
use flode_core::graph::build_sna;
use flode_core::model::{dominance_audit, init_model, train, write_checkpoint, TrainStatus};
use flode_core::{DegreePolicy, ModelConfig};
use serde::Serialize;

use super::{factorize, load_source, require_source, Status};
use crate::output::Output;
use crate::pool::run_ordered;
use crate::spec::{ExperimentSpec, GraphSource};

/// Train and validation fractions for datasets without `splits.json`.
pub const DEFAULT_SPLIT: (f64, f64) = (0.6, 0.2);

#[derive(Debug, Serialize)]
struct Summary {
    seed: u64,
    status: TrainStatus,
    epochs_run: usize,
    best_epoch: usize,
    best_val_acc: f64,
    test_acc: f64,
    alpha: f64,
    num_parameters: usize,
    divergence: Option<String>,
    provenance: Vec<String>,
}

struct SeedOutput {
    seed: u64,
    checkpoint: Vec<u8>,
    history_csv: String,
    audit: serde_json::Value,
    summary: Summary,
}

pub fn run(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    let source = require_source(&spec.source)?;
    if !matches!(source, GraphSource::Directory { .. } | GraphSource::Dsbm(_)) {
        bail!("training needs node labels: use a dataset directory or a DSBM source");
    }
    let loaded = load_source(source)?;
    let Some(labels) = loaded.labels.clone() else { bail!("the dataset has no labels.csv") };
    let Some(x) = loaded.features.as_ref().map(|f| f.re().clone()) else { bail!("the dataset has no features") };
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let seeds = spec.seeds_or_default();
    let base = spec.model.clone().unwrap_or_default();
    base.validate()?;
    let sna = build_sna(&loaded.graph, spec.degree_policy.unwrap_or(DegreePolicy::SelfLoop))?;
    let factors = factorize(&sna, spec.svd_rank, seeds[0])?;

    let results = run_ordered(jobs, &seeds, |_, &seed| -> Result<SeedOutput> {
        let splits = match &loaded.splits {
            Some(s) => s.clone(),
            None => random_splits(labels.len(), DEFAULT_SPLIT.0, DEFAULT_SPLIT.1, seed)?,
        };
        let cfg = ModelConfig { seed, ..base.clone() };
        let model = init_model(&cfg, factors.clone(), x.ncols(), num_classes, seed)?;
        let outcome = train(model, &x, &labels, &splits)?;
        let mut checkpoint = Vec::new();
        write_checkpoint(&outcome.model, &mut checkpoint)?;
        let audit = match dominance_audit(&outcome.model) {
            Ok(r) => serde_json::to_value(r)?,
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        Ok(SeedOutput {
            seed,
            checkpoint,
            history_csv: outcome.history.to_csv(),
            audit,
            summary: Summary {
                seed,
                status: outcome.status,
                epochs_run: outcome.history.len(),
                best_epoch: outcome.best_epoch,
                best_val_acc: outcome.best_val_acc,
                test_acc: outcome.test_acc,
                alpha: outcome.model.alpha(),
                num_parameters: outcome.model.num_parameters(),
                divergence: outcome.divergence.clone(),
                provenance: loaded.provenance.clone(),
            },
        })
    });

    let out = Output::create(spec, started)?;
    let mut status = Status::Success;
    for r in results {
        let r = r?;
        let dir = format!("seed-{}", r.seed);
        out.write(&format!("{dir}/model.ckpt"), &r.checkpoint)?;
        out.write(&format!("{dir}/history.csv"), r.history_csv.as_bytes())?;
        out.write_json(&format!("{dir}/dominance_audit.json"), &r.audit)?;
        out.write_json(&format!("{dir}/summary.json"), &r.summary)?;
        println!(
            "seed {}: {:?} after {} epochs, best epoch {}, val {:.4}, test {:.4}, alpha {:.4}",
            r.seed,
            r.summary.status,
            r.summary.epochs_run,
            r.summary.best_epoch,
            r.summary.best_val_acc,
            r.summary.test_acc,
            r.summary.alpha
        );
        if r.summary.status == TrainStatus::Diverged {
            status = status.worst(Status::NumericalFailure);
        }
    }
    Ok(status)
}
