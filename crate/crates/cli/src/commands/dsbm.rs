//! Node classification accuracy on DSBM sweeps, averaged over seeds.

use std::time::Instant;

use anyhow::{bail, Result};
use flode_core::experiment::{dsbm_model_config, mean_and_stderr, run_dsbm_trial, TrialResult, DSBM_SVD_RANK};
use flode_core::model::TrainStatus;
use flode_core::{DsbmConfig, ModelConfig};
use serde::{Deserialize, Serialize};

use super::{csv_float, Status};
use crate::output::Output;
use crate::pool::run_ordered;
use crate::spec::{DsbmSpec, ExperimentSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub value: f64,
    pub mean_test_acc: f64,
    pub stderr: f64,
    pub seeds: usize,
    pub failed_trials: usize,
}

pub struct Job {
    pub grid_index: usize,
    pub dsbm: DsbmConfig,
    pub model: ModelConfig,
}

pub fn jobs_for(d: &DsbmSpec, model: Option<&ModelConfig>, seeds: &[u64]) -> Vec<Job> {
    let mut jobs = Vec::new();
    for (grid_index, &value) in d.grid().iter().enumerate() {
        for &seed in seeds {
            let dsbm = DsbmConfig { num_nodes: d.num_nodes, num_clusters: d.num_clusters, ..d.experiment.config(value, seed) };
            let model = match model {
                Some(m) => ModelConfig { seed, ..m.clone() },
                None => dsbm_model_config(seed),
            };
            jobs.push(Job { grid_index, dsbm, model });
        }
    }
    jobs
}

pub fn summarize(grid: &[f64], jobs: &[Job], trials: &[Result<TrialResult, String>]) -> Vec<AccuracyRow> {
    grid.iter()
        .enumerate()
        .map(|(gi, &value)| {
            let mut accs = Vec::new();
            let mut failed = 0;
            for (job, t) in jobs.iter().zip(trials).filter(|(j, _)| j.grid_index == gi) {
                match t {
                    Ok(t) if t.status != TrainStatus::Diverged && t.test_acc.is_finite() => accs.push(t.test_acc),
                    _ => {
                        log::warn!("trial value={value} seed={} failed", job.dsbm.seed);
                        failed += 1;
                    }
                }
            }
            let (mean, stderr) = mean_and_stderr(&accs);
            AccuracyRow { value, mean_test_acc: mean, stderr, seeds: accs.len(), failed_trials: failed }
        })
        .collect()
}

pub fn run(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    let d = &spec.dsbm;
    let grid = d.grid();
    if grid.is_empty() {
        bail!("the DSBM grid is empty");
    }
    let seeds = spec.seeds_or_default();
    let work = jobs_for(d, spec.model.as_ref(), &seeds);
    for j in &work {
        j.dsbm.validate()?;
        j.model.validate()?;
    }
    let rank = Some(spec.svd_rank.unwrap_or(DSBM_SVD_RANK));
    let trials: Vec<Result<TrialResult, String>> = run_ordered(jobs, &work, |i, j| {
        log::info!("trial {i}: {} value={} seed={}", d.experiment.as_str(), grid[j.grid_index], j.dsbm.seed);
        run_dsbm_trial(&j.dsbm, &j.model, rank).map_err(|e| e.to_string())
    });

    let out = Output::create(spec, started)?;
    let mut csv = String::from("experiment,value,seed,num_edges,status,best_epoch,val_acc,test_acc,alpha,error\n");
    for (j, t) in work.iter().zip(&trials) {
        let value = grid[j.grid_index];
        match t {
            Ok(t) => csv.push_str(&format!(
                "{},{value},{},{},{},{},{},{},{},\n",
                d.experiment.as_str(),
                t.seed,
                t.num_edges,
                serde_json::to_value(t.status)?.as_str().unwrap_or("unknown"),
                t.best_epoch,
                csv_float(t.val_acc),
                csv_float(t.test_acc),
                t.alpha
            )),
            Err(e) => csv.push_str(&format!(
                "{},{value},{},,error,,,,,\"{}\"\n",
                d.experiment.as_str(),
                j.dsbm.seed,
                e.replace('"', "'")
            )),
        }
    }
    out.write("trials.csv", csv.as_bytes())?;

    let rows = summarize(&grid, &work, &trials);
    let mut table = String::from("experiment,value,mean_test_acc,stderr,seeds,failed_trials\n");
    for r in &rows {
        table.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.experiment.as_str(),
            r.value,
            csv_float(r.mean_test_acc),
            csv_float(r.stderr),
            r.seeds,
            r.failed_trials
        ));
        println!("{} {:<6} {:.4} ± {:.4} ({} seeds)", d.experiment.as_str(), r.value, r.mean_test_acc, r.stderr, r.seeds);
    }
    out.write("accuracy.csv", table.as_bytes())?;
    Ok(if rows.iter().any(|r| r.failed_trials > 0) { Status::NumericalFailure } else { Status::Success })
}
