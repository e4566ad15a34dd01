use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::flode::{accuracy, loss_and_grads_with, record_forward, FlodeModel};
use super::optim::{adam_step, AdamState};
use super::tape::Tape;
use super::Param;
use crate::datasets::Splits;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    /// `NaN` when the split has no test nodes.
    pub test_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,train_acc,val_acc,test_acc\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{},{}\n", r.epoch, r.train_loss, r.train_acc, r.val_acc, r.test_acc));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStatus {
    Completed,
    EarlyStopped,
    /// The loss or activations became non-finite; the best earlier parameters are kept.
    Diverged,
}

/// Optimizer and early-stopping state carried across epochs.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub adam: AdamState,
    pub best_val: f64,
    pub best_epoch: usize,
    pub epochs_since_improvement: usize,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the highest validation accuracy.
    pub model: FlodeModel,
    pub history: History,
    pub status: TrainStatus,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    pub divergence: Option<String>,
}

fn eval_all(model: &FlodeModel, x: &DMatrix<f64>, labels: &[usize], splits: &Splits) -> Result<(f64, f64, f64)> {
    let mut tape = Tape::with_factors(&model.factors);
    let (_, logits) = record_forward(model, &mut tape, x, None)?;
    let logits = tape.value(logits);
    let test = if splits.test.is_empty() { f64::NAN } else { accuracy(logits, labels, &splits.test)? };
    Ok((accuracy(logits, labels, &splits.train)?, accuracy(logits, labels, &splits.val)?, test))
}

/// Full-batch training with Adam, keeping the parameters with the best
/// validation accuracy and stopping after `patience` epochs without a strict
/// improvement.
pub fn train(model: FlodeModel, x: &DMatrix<f64>, labels: &[usize], splits: &Splits) -> Result<TrainOutcome> {
    let cfg = model.config.clone();
    splits.validate(model.factors.dim())?;
    if splits.train.is_empty() || splits.val.is_empty() {
        return Err(invalid("training and validation splits must be nonempty"));
    }
    let mut model = model;
    let mut state = TrainState {
        adam: AdamState::new(&model.params),
        best_val: f64::NEG_INFINITY,
        best_epoch: 0,
        epochs_since_improvement: 0,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
    };
    let mut best: Vec<Param> = model.params.clone();
    let mut best_test = f64::NAN;
    let mut history = History::default();
    let mut status = TrainStatus::Completed;
    let mut divergence = None;
    for epoch in 1..=cfg.max_epochs {
        let step = loss_and_grads_with(&model, x, labels, &splits.train, Some(&mut state.rng)).and_then(|(loss, grads, _)| {
            adam_step(&mut model.params, &grads, &mut state.adam, cfg.learning_rate, cfg.weight_decay)?;
            model.project();
            let (tr, va, te) = eval_all(&model, x, labels, splits)?;
            Ok(EpochRecord { epoch, train_loss: loss, train_acc: tr, val_acc: va, test_acc: te })
        });
        let rec = match step {
            Ok(r) => r,
            Err(Error::NonFinite(what)) => {
                log::warn!("training diverged at epoch {epoch}: {what}");
                status = TrainStatus::Diverged;
                divergence = Some(format!("epoch {epoch}: {what}"));
                break;
            }
            Err(e) => return Err(e),
        };
        history.records.push(rec);
        if rec.val_acc > state.best_val {
            state.best_val = rec.val_acc;
            state.best_epoch = epoch;
            state.epochs_since_improvement = 0;
            best.clone_from(&model.params);
            best_test = rec.test_acc;
        } else {
            state.epochs_since_improvement += 1;
            if state.epochs_since_improvement >= cfg.patience {
                status = TrainStatus::EarlyStopped;
                break;
            }
        }
    }
    model.params = best;
    Ok(TrainOutcome {
        model,
        history,
        status,
        best_epoch: state.best_epoch,
        best_val_acc: state.best_val,
        test_acc: best_test,
        divergence,
    })
}
