use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ChannelMixer, EnergyTrajectory, Scheme, Sign};
use crate::error::{invalid, Result};
use crate::linalg::Spectrum;

/// Margins smaller than this are reported as indeterminate.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphClass {
    /// Symmetric or normal `S`, any nonzero exponent.
    UndirectedOrNormal,
    /// General directed graph with `α = 1`.
    DirectedAlpha1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Highest frequency (smallest real eigenvalue of `S`) dominates.
    Hfd,
    /// Lowest frequency (largest real eigenvalue of `S`) dominates.
    Lfd,
    /// An interior frequency dominates.
    LambdaFd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub regime: Regime,
    /// Eigenvalue of `I − S` whose half is the predicted energy limit.
    pub limit_lambda: f64,
    pub predicted_limit: f64,
    /// `w_max · μ(λ_low)`, with `w` the effective channel rates.
    pub lhs: f64,
    /// `w_min · μ(λ_high)`.
    pub rhs: f64,
    /// `None` when the margin is within [`TIE_TOLERANCE`] or the dominant
    /// eigenvalue is not unique in its real part.
    pub condition_met: Option<bool>,
    pub margin: f64,
    /// Eigenvalue of `S` with the smallest frequency `μ`.
    pub lambda_low: Complex64,
    /// Eigenvalue of `S` with the largest frequency `μ`.
    pub lambda_high: Complex64,
    pub w_min: f64,
    pub w_max: f64,
    pub unique_extreme: bool,
    pub alpha: f64,
    pub scheme: Scheme,
    pub graph_class: GraphClass,
}

/// `|λ|^α λ/|λ|`: the eigenvalue of `S^α` paired with eigenvalue `λ` of a
/// normal `S`; reduces to `sign(λ)|λ|^α` on the real line.
pub fn pow_alpha(lambda: Complex64, alpha: f64) -> Complex64 {
    let r = lambda.norm();
    if r == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        lambda * (r.powf(alpha) / r)
    }
}

/// Relative size below which eigenvalues are treated as zero for `α ≤ 0`.
const ZERO_EIGENVALUE_TOL: f64 = 1e-12;

/// Graph frequencies `μ_l` with their eigenvalues, zeros removed for `α ≤ 0`.
fn frequencies(spec: &Spectrum, alpha: f64, class: GraphClass) -> Vec<(Complex64, f64)> {
    let scale = spec.max_modulus().max(f64::MIN_POSITIVE);
    spec.eigenvalues
        .iter()
        .filter(|l| alpha > 0.0 || l.norm() > ZERO_EIGENVALUE_TOL * scale)
        .map(|&l| {
            let mu = match class {
                GraphClass::DirectedAlpha1 => l.re,
                GraphClass::UndirectedOrNormal => pow_alpha(l, alpha).re,
            };
            (l, mu)
        })
        .collect()
}

/// Effective decay rates per channel: `w` for heat, `s · Im w` for Schrödinger.
fn channel_rates(w: &ChannelMixer, sign: Sign) -> Vec<f64> {
    let mut r: Vec<f64> = match w.scheme {
        Scheme::Heat => w.diag_w.iter().map(|z| z.re).collect(),
        Scheme::Schrodinger => w.diag_w.iter().map(|z| sign.value() * z.im).collect(),
    };
    r.sort_by(f64::total_cmp);
    r
}

fn check_inputs(spec: &Spectrum, w: &ChannelMixer, alpha: f64, class: GraphClass) -> Result<()> {
    w.validate()?;
    if w.channels() == 0 || spec.is_empty() {
        return Err(invalid("empty spectrum or channel mixer"));
    }
    if !alpha.is_finite() || alpha == 0.0 {
        return Err(invalid(format!("no dominance theory for exponent {alpha}")));
    }
    if class == GraphClass::DirectedAlpha1 && alpha != 1.0 {
        return Err(invalid("general directed graphs are only covered for alpha = 1"));
    }
    if w.scheme == Scheme::Schrodinger {
        if w.diag_w.iter().all(|z| z.im == 0.0) {
            return Err(invalid("Schrödinger dynamics need a channel weight with nonzero imaginary part"));
        }
        if !spec.is_real(1e-10) {
            return Err(invalid("Schrödinger predictions need a real spectrum"));
        }
    }
    Ok(())
}

/// Decides which graph frequency dominates the continuous dynamics.
///
/// With channel rates sorted `w_1 ≤ … ≤ w_K` and frequencies
/// `μ_l = Re pow_α(λ_l)`, the solution is attracted to the eigenvector with
/// the smallest `w_r μ_l`; this is `λ_low` if `w_K μ(λ_low) < w_1 μ(λ_high)`
/// and `λ_high` otherwise. For `α > 0` these are the smallest and largest
/// eigenvalues; for `α < 0` the negative and positive eigenvalues closest to
/// zero. Schrödinger dynamics use `s · Im w` as the rate, `s` the sign of `i`.
pub fn predict_dominance(
    spec: &Spectrum,
    w: &ChannelMixer,
    alpha: f64,
    sign: Sign,
    class: GraphClass,
) -> Result<DominanceReport> {
    check_inputs(spec, w, alpha, class)?;
    let freqs = frequencies(spec, alpha, class);
    if freqs.is_empty() {
        return Err(invalid("spectrum has no nonzero eigenvalue"));
    }
    let by_mu = |a: &&(Complex64, f64), b: &&(Complex64, f64)| a.1.total_cmp(&b.1);
    let &(lambda_low, mu_low) = freqs.iter().min_by(by_mu).expect("nonempty");
    let &(lambda_high, mu_high) = freqs.iter().max_by(by_mu).expect("nonempty");
    if alpha < 0.0 && (mu_low >= 0.0 || mu_high <= 0.0) {
        return Err(invalid("negative exponents need both positive and negative eigenvalues"));
    }
    let rates = channel_rates(w, sign);
    let (w_min, w_max) = (rates[0], rates[rates.len() - 1]);
    let lhs = w_max * mu_low;
    let rhs = w_min * mu_high;
    let margin = lhs - rhs;
    let low_wins = lhs < rhs;
    let dominant = if low_wins { lambda_low } else { lambda_high };
    let tol = 1e-9 * spec.max_modulus().max(1.0);
    let unique_extreme = freqs
        .iter()
        .filter(|(l, _)| (l.re - dominant.re).abs() <= tol)
        .all(|(l, _)| (l - dominant).norm() <= tol);
    let regime = if alpha < 0.0 {
        Regime::LambdaFd
    } else if low_wins {
        Regime::Hfd
    } else {
        Regime::Lfd
    };
    let determinate = margin.abs() >= TIE_TOLERANCE && (class != GraphClass::DirectedAlpha1 || unique_extreme);
    let limit_lambda = 1.0 - dominant.re;
    Ok(DominanceReport {
        regime,
        limit_lambda,
        predicted_limit: limit_lambda / 2.0,
        lhs,
        rhs,
        condition_met: determinate.then_some(low_wins),
        margin,
        lambda_low,
        lambda_high,
        w_min,
        w_max,
        unique_extreme,
        alpha,
        scheme: w.scheme,
        graph_class: class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepGuard {
    /// Largest step for which the discrete scheme keeps the continuous
    /// dominance; `f64::INFINITY` when unbounded.
    pub max_h: f64,
    pub unbounded: bool,
    /// The frequency gap vanished, so no positive step is guaranteed.
    pub degenerate: bool,
    /// Gap between the dominant frequency product and the next distinct one.
    pub gap: Option<f64>,
}

/// Step-size bound under which explicit Euler inherits the continuous
/// dominance. Heat on a real spectrum: `1/(‖W‖ max|μ|)`, which keeps every
/// mode factor `1 − h w μ` positive. Schrödinger and general directed graphs:
/// `ε/(‖W‖² max|μ|²)` with `ε` the gap between the smallest rate-frequency
/// product and the next one belonging to a different frequency.
pub fn euler_step_size_guard(w: &ChannelMixer, spec: &Spectrum, alpha: f64, sign: Sign, class: GraphClass) -> Result<StepGuard> {
    check_inputs(spec, w, alpha, class)?;
    let w_norm = w.norm();
    if w_norm == 0.0 {
        return Ok(StepGuard { max_h: f64::INFINITY, unbounded: true, degenerate: false, gap: None });
    }
    let freqs = frequencies(spec, alpha, class);
    let mu_max = freqs
        .iter()
        .map(|(l, mu)| match class {
            GraphClass::DirectedAlpha1 => l.norm(),
            GraphClass::UndirectedOrNormal => pow_alpha(*l, alpha).norm().max(mu.abs()),
        })
        .fold(0.0, f64::max);
    if mu_max == 0.0 {
        return Ok(StepGuard { max_h: f64::INFINITY, unbounded: true, degenerate: false, gap: None });
    }
    let real_heat = w.scheme == Scheme::Heat && class == GraphClass::UndirectedOrNormal && spec.is_real(1e-10);
    if real_heat {
        return Ok(StepGuard { max_h: 1.0 / (w_norm * mu_max), unbounded: false, degenerate: false, gap: None });
    }
    let rates = channel_rates(w, sign);
    let mut best = f64::INFINITY;
    let mut best_mu = 0.0;
    for &r in &rates {
        for &(_, mu) in &freqs {
            if r * mu < best {
                best = r * mu;
                best_mu = mu;
            }
        }
    }
    let tol = 1e-12 * mu_max.max(1.0);
    let mut next = f64::INFINITY;
    for &r in &rates {
        for &(_, mu) in &freqs {
            if (mu - best_mu).abs() > tol {
                next = next.min(r * mu);
            }
        }
    }
    if !next.is_finite() {
        // A single frequency: every mode shares the same energy.
        return Ok(StepGuard { max_h: 1.0 / (w_norm * mu_max), unbounded: false, degenerate: false, gap: None });
    }
    let eps = next - best;
    if eps <= 1e-14 * w_norm * mu_max {
        return Ok(StepGuard { max_h: 0.0, unbounded: false, degenerate: true, gap: Some(eps) });
    }
    Ok(StepGuard {
        max_h: eps / (w_norm * w_norm * mu_max * mu_max),
        unbounded: false,
        degenerate: false,
        gap: Some(eps),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    Refuted,
    Undecided,
}

/// Compares the last tenth of a trajectory with the predicted limit.
/// Trajectories with fewer than 100 records are always undecided.
pub fn classify_trajectory(traj: &EnergyTrajectory, report: &DominanceReport, tol: f64) -> Verdict {
    let n = traj.records.len();
    if n < 100 {
        return Verdict::Undecided;
    }
    let tail = &traj.records[n - n.div_ceil(10)..];
    let values: Vec<f64> = tail.iter().map(|r| r.normalized_energy).collect();
    if values.iter().all(|e| (e - report.predicted_limit).abs() <= tol) {
        return Verdict::Confirmed;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < tol / 10.0 {
        Verdict::Refuted
    } else {
        Verdict::Undecided
    }
}
