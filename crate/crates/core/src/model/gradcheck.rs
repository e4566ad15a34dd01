use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::flode::{loss_and_grads_with, FlodeModel};
use crate::error::Result;

/// Central-difference step.
pub const GRADCHECK_STEP: f64 = 1e-4;
/// Gradient magnitude below which errors are measured absolutely.
pub const GRADCHECK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamError {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub entries_checked: usize,
    /// Entries whose perturbation flipped a rectifier and were not compared.
    pub skipped_kinks: usize,
    pub per_param: Vec<ParamError>,
}

/// Compares analytic gradients of the dropout-free loss with central
/// differences, entry by entry, using `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_check(model: &FlodeModel, x: &DMatrix<f64>, labels: &[usize], mask: &[usize]) -> Result<GradCheckReport> {
    let (_, grads, pattern) = loss_and_grads_with(model, x, labels, mask, None)?;
    let mut probe = model.clone();
    let mut per_param = Vec::new();
    let mut skipped = 0;
    let mut checked = 0;
    for (pi, g) in grads.iter().enumerate() {
        let mut worst = ParamError { name: model.params[pi].name.clone(), max_rel_error: 0.0, max_abs_error: 0.0, entries: 0 };
        for e in 0..g.len() {
            let orig = probe.params[pi].value[e];
            probe.params[pi].value[e] = orig + GRADCHECK_STEP;
            let (lp, _, pp) = loss_and_grads_with(&probe, x, labels, mask, None)?;
            probe.params[pi].value[e] = orig - GRADCHECK_STEP;
            let (lm, _, pm) = loss_and_grads_with(&probe, x, labels, mask, None)?;
            probe.params[pi].value[e] = orig;
            if pp != pattern || pm != pattern {
                skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * GRADCHECK_STEP);
            let abs = (numeric - g[e]).abs();
            let rel = abs / numeric.abs().max(g[e].abs()).max(GRADCHECK_FLOOR);
            worst.max_rel_error = worst.max_rel_error.max(rel);
            worst.max_abs_error = worst.max_abs_error.max(abs);
            worst.entries += 1;
            checked += 1;
        }
        per_param.push(worst);
    }
    let w = per_param
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("model has parameters");
    Ok(GradCheckReport {
        max_rel_error: w.max_rel_error,
        worst_param: w.name.clone(),
        entries_checked: checked,
        skipped_kinks: skipped,
        per_param,
    })
}
