//! Dominance prediction against simulated trajectories over a parameter sweep.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use flode_core::dynamics::{
    classify_trajectory, euler_step_size_guard, evolve, predict_dominance, DominanceReport, EvolveParams, GraphClass,
    StepGuard, Verdict,
};
use flode_core::graph::build_sna;
use flode_core::linalg::Spectrum;
use flode_core::spectral::{eigen_spectrum, FractionalOperator, SnaFactors};
use flode_core::{ChannelMixer, DegreePolicy, FeatureMatrix, Scheme, SnaMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{factorize, graph_class, load_source, require_source, Status};
use crate::output::Output;
use crate::pool::run_ordered;
use crate::spec::{DynamicsSpec, ExperimentSpec};

/// Step size used when the mixer is zero and no step is prescribed.
const UNBOUNDED_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub scheme: Scheme,
    pub alpha: f64,
    pub w_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveResult {
    #[serde(flatten)]
    pub point: SweepPoint,
    pub mixer: Vec<Complex64>,
    pub h: Option<f64>,
    pub guard: Option<StepGuard>,
    pub prediction: Option<DominanceReport>,
    pub verdict: Option<Verdict>,
    pub final_normalized_energy: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub trajectory_csv: Option<String>,
}

pub fn sweep_points(d: &DynamicsSpec) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &scheme in &d.schemes {
        for &alpha in &d.alphas {
            for &w_seed in &d.w_seeds {
                out.push(SweepPoint { index: out.len(), scheme, alpha, w_seed });
            }
        }
    }
    out
}

/// Random diagonal mixer and Gaussian initial state, both determined by the W-seed.
pub fn draw_instance(point: &SweepPoint, d: &DynamicsSpec, n: usize) -> (ChannelMixer, FeatureMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(point.w_seed);
    let r = d.w_range;
    let w = match point.scheme {
        Scheme::Heat => ChannelMixer::heat((0..d.channels).map(|_| rng.random_range(-r..=r)).collect()),
        Scheme::Schrodinger => ChannelMixer::schrodinger(
            (0..d.channels)
                .map(|_| Complex64::new(rng.random_range(-r..=r), rng.random_range(-r..=r)))
                .collect(),
        ),
    };
    let x0 = DMatrix::from_fn(n, d.channels, |_, _| rng.sample::<f64, _>(StandardNormal));
    (w, FeatureMatrix::real(x0))
}

struct Shared<'a> {
    sna: &'a SnaMatrix,
    spectrum: &'a Spectrum,
    factors: &'a Arc<SnaFactors>,
    class: GraphClass,
    dynamics: &'a DynamicsSpec,
}

fn run_point(sh: &Shared, point: &SweepPoint) -> EvolveResult {
    let d = sh.dynamics;
    let (w, x0) = draw_instance(point, d, sh.sna.dim());
    let mut res = EvolveResult {
        point: *point,
        mixer: w.diag_w.clone(),
        h: None,
        guard: None,
        prediction: None,
        verdict: None,
        final_normalized_energy: None,
        error: None,
        trajectory_csv: None,
    };
    let mut attempt = || -> flode_core::Result<()> {
        res.prediction = Some(predict_dominance(sh.spectrum, &w, point.alpha, d.sign, sh.class)?);
        let guard = euler_step_size_guard(&w, sh.spectrum, point.alpha, d.sign, sh.class)?;
        res.guard = Some(guard);
        let h = match d.h {
            Some(h) => h,
            None if guard.unbounded => UNBOUNDED_STEP,
            None if guard.degenerate => {
                return Err(flode_core::Error::InvalidArgument(
                    "no step size preserves dominance for this mixer; set dynamics.h".into(),
                ))
            }
            None => 0.5 * guard.max_h,
        };
        res.h = Some(h);
        let op = FractionalOperator::new(sh.factors.clone(), point.alpha)?;
        let params = EvolveParams { h, steps: d.steps, record_every: d.record_every, sign: d.sign };
        let (_, traj) = evolve(sh.sna, &op, &w, &x0, &params)?;
        let report = res.prediction.as_ref().expect("set above");
        res.verdict = Some(classify_trajectory(&traj, report, d.tolerance));
        res.final_normalized_energy = traj.last().map(|r| r.normalized_energy);
        res.trajectory_csv = Some(traj.to_csv());
        Ok(())
    };
    if let Err(e) = attempt() {
        res.error = Some(e.to_string());
    }
    res
}

pub fn run(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    let d = &spec.dynamics;
    let loaded = load_source(require_source(&spec.source)?)?;
    let sna = build_sna(&loaded.graph, spec.degree_policy.unwrap_or(DegreePolicy::PseudoInverse))?;
    let class = graph_class(&sna);
    if class == GraphClass::DirectedAlpha1 && d.alphas.iter().any(|&a| a != 1.0) {
        bail!("the operator is not normal; dominance prediction on it requires every exponent to be 1");
    }
    let points = sweep_points(d);
    if points.is_empty() {
        bail!("the sweep is empty (schemes, alphas and w_seeds must be nonempty)");
    }
    let spectrum = eigen_spectrum(sna.matrix(), false)?;
    let factors = factorize(&sna, spec.svd_rank, spec.seeds_or_default()[0])?;
    let shared = Shared { sna: &sna, spectrum: &spectrum, factors: &factors, class, dynamics: d };
    let results = run_ordered(jobs, &points, |_, p| run_point(&shared, p));

    let out = Output::create(spec, started)?;
    let mut status = Status::Success;
    for r in &results {
        if let Some(csv) = &r.trajectory_csv {
            out.write(&format!("trajectory_{:03}.csv", r.point.index), csv.as_bytes())?;
        }
        if r.error.is_some() {
            status = status.worst(Status::NumericalFailure);
        }
        println!(
            "[{:3}] {:?} alpha={} w_seed={} -> {}",
            r.point.index,
            r.point.scheme,
            r.point.alpha,
            r.point.w_seed,
            match (&r.error, &r.verdict, &r.prediction) {
                (Some(e), _, _) => format!("error: {e}"),
                (None, Some(v), Some(p)) => format!("{:?} predicted, {v:?}", p.regime),
                _ => "no result".into(),
            }
        );
    }
    out.write_json("dominance.json", &results)?;
    Ok(status)
}
