//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Set `ACCEPTANCE_ONLY=3,7` to run a subset.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use flode_core::datasets::DsbmConfig;
use flode_core::dynamics::{
    classify_trajectory, closed_form_solution, euler_step_size_guard, evolve, gcn_evolve, integrate,
    predict_dominance, ChannelMixer, EvolveParams, GraphClass, Scheme, Sign, Verdict,
};
use flode_core::experiment::{dsbm_model_config, mean_and_stderr, run_dsbm_trial, DSBM_SVD_RANK};
use flode_core::graph::{
    build_sna, cycle_graph, directed_cycle, dirichlet_energy, dirichlet_energy_trace, erdos_renyi, DegreePolicy,
    DirectedGraph,
};
use flode_core::linalg::eigen_spectrum;
use flode_core::model::{gradient_check, init_model, ModelConfig};
use flode_core::spectral::{
    cycle_analytic_spectrum, explained_variance, svd_full, svd_truncated, verify_fractional_bound,
    weak_balance_gap, FractionalOperator,
};
use flode_core::FeatureMatrix;

const RAYLEIGH_INSTANCES: usize = 200;
const RAYLEIGH_REL_TOL: f64 = 1e-10;
const SPECTRUM_GRAPHS: usize = 100;
const SPECTRUM_MAX_NODES: usize = 200;
const SPECTRUM_TOL: f64 = 1e-8;
const BALANCED_GAP_TOL: f64 = 1e-8;
const COUNTEREXAMPLE_MIN_GAP: f64 = 1e-2;
const BOUND_RANDOM_GRAPHS: usize = 20;
const BOUND_ALPHAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
const UNREACHABLE_TOL: f64 = 1e-8;
const CYCLE_SIZES: [usize; 3] = [8, 12, 16];
const CYCLE_TOL: f64 = 1e-10;
const SIGN_POWER_GRAPHS: usize = 20;
const SIGN_POWER_ALPHAS: [f64; 2] = [0.3, 2.0];
const SIGN_POWER_TOL: f64 = 1e-7;
const DOMINANCE_CONFIGS: usize = 20;
const DOMINANCE_MIN_MARGIN: f64 = 1e-3;
const DOMINANCE_TOL: f64 = 1e-3;
const DOMINANCE_STEPS: usize = 100_000;
const DOMINANCE_RECORD_EVERY: usize = 1000;
const GUARD_FRACTION: f64 = 0.5;
const EULER_INSTANCES: usize = 10;
const EULER_H: (f64, f64) = (1e-2, 5e-3);
const EULER_T: f64 = 1.0;
const EULER_RATIO: (f64, f64) = (1.7, 2.3);
const GCN_GRAPHS: usize = 10;
const GCN_LAYERS: usize = 100;
const GCN_MIN_R2: f64 = 0.99;
const GRADCHECK_INSTANCES: usize = 5;
const GRADCHECK_TOL: f64 = 1e-5;
const DSBM_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const DENSITY_TARGETS: [(f64, f64); 2] = [(0.1, 0.97), (0.05, 0.90)];
const FLOW_BETAS: [f64; 8] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40];
const FLOW_LOW_BETA_MIN: f64 = 0.95;
const FLOW_HIGH_BETA_RANGE: (f64, f64) = (0.40, 0.60);
const FLOW_MONOTONE_SLACK: f64 = 0.02;
const SVD_NODES: usize = 500;
const SVD_SIGMA_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

/// Directed Erdős–Rényi graph plus the Hamiltonian cycle `0 → 1 → … → 0`.
fn strongly_connected(n: usize, p: f64, seed: u64) -> DirectedGraph {
    let er = erdos_renyi(n, p, true, seed).unwrap();
    let arcs = er.edges().iter().copied().chain((0..n).map(|i| (i, (i + 1) % n)));
    DirectedGraph::new(n, arcs).unwrap()
}

/// Undirected Erdős–Rényi graph without isolated nodes.
fn undirected_no_isolated(n: usize, p: f64, seed: &mut u64) -> DirectedGraph {
    loop {
        *seed += 1;
        let g = erdos_renyi(n, p, false, *seed).unwrap();
        if g.degrees().in_degrees.iter().all(|&d| d > 0) {
            return g;
        }
    }
}

fn sorted_multiset_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn rayleigh_identity() -> Outcome {
    let mut r = rng(101);
    let mut worst: f64 = 0.0;
    for inst in 0..RAYLEIGH_INSTANCES {
        let n = r.random_range(3..40);
        let p = r.random_range(0.05..0.6);
        let g = if inst % 2 == 0 {
            strongly_connected(n, p, inst as u64)
        } else {
            let mut seed = 1000 * inst as u64;
            undirected_no_isolated(n, p, &mut seed)
        };
        let k = r.random_range(1..5);
        let x = FeatureMatrix::complex(gaussian(&mut r, n, k), gaussian(&mut r, n, k)).unwrap();
        let sna = build_sna(&g, DegreePolicy::Error).unwrap();
        let sum = dirichlet_energy(&g, &x).unwrap();
        let trace = dirichlet_energy_trace(&sna, &x).unwrap();
        worst = worst.max((sum - trace).abs() / sum.abs().max(1.0));
    }
    outcome(worst <= RAYLEIGH_REL_TOL, format!("{RAYLEIGH_INSTANCES} instances, max relative gap {worst:.2e} (tol {RAYLEIGH_REL_TOL:.0e})"))
}

fn spectrum_bound() -> Outcome {
    let mut r = rng(202);
    let mut worst: f64 = 0.0;
    for inst in 0..SPECTRUM_GRAPHS {
        let n = r.random_range(2..=SPECTRUM_MAX_NODES);
        let p = r.random_range(0.005..0.3);
        let g = erdos_renyi(n, p, true, 5000 + inst as u64).unwrap();
        let sna = build_sna(&g, DegreePolicy::PseudoInverse).unwrap();
        worst = worst.max(eigen_spectrum(sna.matrix(), false).unwrap().max_modulus());
    }
    outcome(
        worst <= 1.0 + SPECTRUM_TOL,
        format!("{SPECTRUM_GRAPHS} digraphs with N ≤ {SPECTRUM_MAX_NODES}, max |λ| = {worst:.12}"),
    )
}

/// Real root in `[0.9, 1]` of `λ³ − λ/√2 − 1/4`, the characteristic polynomial
/// of the counterexample's normalized adjacency.
fn counterexample_root() -> f64 {
    let f = |l: f64| l * l * l - l / 2f64.sqrt() - 0.25;
    let (mut lo, mut hi) = (0.9, 1.0);
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn weak_balance() -> Outcome {
    let mut balanced = Vec::new();
    for n in 3..9 {
        balanced.push(directed_cycle(n).unwrap());
        balanced.push(cycle_graph(n).unwrap());
    }
    // Two directed cycles sharing node 0: every node has in-degree = out-degree.
    balanced.push(DirectedGraph::new(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]).unwrap());
    let mut seed = 7;
    for _ in 0..6 {
        balanced.push(undirected_no_isolated(12, 0.3, &mut seed));
    }
    let worst_balanced = balanced
        .iter()
        .map(|g| weak_balance_gap(&build_sna(g, DegreePolicy::Error).unwrap()).unwrap())
        .fold(0.0, f64::max);
    let chord = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0), (0, 2), (2, 1)]).unwrap();
    let gap = weak_balance_gap(&build_sna(&chord, DegreePolicy::Error).unwrap()).unwrap();
    let oracle = 1.0 - counterexample_root();
    let pass = worst_balanced < BALANCED_GAP_TOL && gap > COUNTEREXAMPLE_MIN_GAP && (gap - oracle).abs() < 1e-8;
    outcome(
        pass,
        format!(
            "{} balanced/undirected graphs max gap {worst_balanced:.1e}; counterexample gap {gap:.6} (oracle {oracle:.6})",
            balanced.len()
        ),
    )
}

fn fractional_bound() -> Outcome {
    let mut graphs = vec![cycle_graph(8).unwrap(), cycle_graph(16).unwrap()];
    for i in 0..BOUND_RANDOM_GRAPHS as u64 {
        let p = [0.05, 0.1, 0.2, 0.4][i as usize % 4];
        graphs.push(erdos_renyi(30, p, false, 300 + i).unwrap());
    }
    for i in 0..BOUND_RANDOM_GRAPHS as u64 {
        let p = [0.05, 0.1, 0.2, 0.4][i as usize % 4];
        graphs.push(erdos_renyi(30, p, true, 400 + i).unwrap());
    }
    let (mut violations, mut worst_ratio, mut worst_unreach, mut checked) = (0, 0.0f64, 0.0f64, 0);
    for g in &graphs {
        let f = Arc::new(svd_full(&build_sna(g, DegreePolicy::PseudoInverse).unwrap()).unwrap());
        for &a in &BOUND_ALPHAS {
            let rep = verify_fractional_bound(g, &f, a).unwrap();
            violations += rep.violations;
            worst_ratio = worst_ratio.max(rep.max_ratio);
            worst_unreach = worst_unreach.max(rep.max_unreachable_entry);
            checked += rep.pairs_checked;
        }
    }
    outcome(
        violations == 0 && worst_unreach <= UNREACHABLE_TOL,
        format!(
            "{} graphs x {} exponents, {checked} pairs: {violations} violations, max ratio {worst_ratio:.3}, max unreachable entry {worst_unreach:.1e}",
            graphs.len(),
            BOUND_ALPHAS.len()
        ),
    )
}

fn cycle_analytics() -> Outcome {
    let mut worst: f64 = 0.0;
    for &n in &CYCLE_SIZES {
        let analytic = cycle_analytic_spectrum(n).unwrap().eigenvalues;
        let closed: Vec<f64> = (0..n).map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
        worst = worst.max(sorted_multiset_distance(analytic, closed.clone()));
        let sna = build_sna(&cycle_graph(n).unwrap(), DegreePolicy::Error).unwrap();
        let numeric = eigen_spectrum(sna.matrix(), false).unwrap().real_parts();
        worst = worst.max(sorted_multiset_distance(numeric, closed));
    }
    let labelled = cycle_graph(8).unwrap().with_labels(vec![0, 0, 1, 1, 0, 0, 1, 1]).unwrap();
    let h = labelled.homophily().unwrap().value;
    outcome(worst <= CYCLE_TOL && h == 0.5, format!("max eigenvalue error {worst:.1e}; C_8 homophily {h}"))
}

/// `sign(λ)|λ|^α`, with eigenvalues at round-off level treated as exact zeros.
fn signed_power(l: f64, a: f64) -> f64 {
    if l.abs() <= 1e-12 {
        0.0
    } else {
        l.signum() * l.abs().powf(a)
    }
}

fn sign_power_law() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut seed = 600;
    for i in 0..SIGN_POWER_GRAPHS {
        let g = undirected_no_isolated(10 + i, 0.3, &mut seed);
        let sna = build_sna(&g, DegreePolicy::Error).unwrap();
        let lambdas = eigen_spectrum(sna.matrix(), false).unwrap().real_parts();
        let f = Arc::new(svd_full(&sna).unwrap());
        for &a in &SIGN_POWER_ALPHAS {
            let dense = FractionalOperator::new(f.clone(), a).unwrap().dense();
            let got = eigen_spectrum(&dense, false).unwrap().real_parts();
            let want = lambdas.iter().map(|&l| signed_power(l, a)).collect();
            worst = worst.max(sorted_multiset_distance(got, want));
        }
    }
    outcome(worst <= SIGN_POWER_TOL, format!("{SIGN_POWER_GRAPHS} graphs, max eigenvalue error {worst:.1e}"))
}

#[derive(Clone, Copy, Debug)]
enum Branch {
    HeatPositive,
    HeatNegative,
    Schrodinger,
    DirectedHeat,
}

/// Draws random configurations of one branch until `DOMINANCE_CONFIGS` satisfy
/// the admissibility filter, simulates each and counts confirmed predictions.
fn dominance_branch(branch: Branch, seed: u64) -> (usize, usize, usize) {
    let mut r = rng(seed);
    let (mut accepted, mut confirmed, mut drawn) = (0, 0, 0);
    let mut graph_seed = seed * 10_000;
    while accepted < DOMINANCE_CONFIGS && drawn < 5000 {
        drawn += 1;
        let n = r.random_range(5..=8);
        let k = r.random_range(1..=3);
        let (g, class) = match branch {
            Branch::DirectedHeat => {
                graph_seed += 1;
                (strongly_connected(n, 0.3, graph_seed), GraphClass::DirectedAlpha1)
            }
            _ => (undirected_no_isolated(n, 0.5, &mut graph_seed), GraphClass::UndirectedOrNormal),
        };
        let alpha = match branch {
            Branch::HeatPositive | Branch::Schrodinger => r.random_range(0.2..2.0),
            Branch::HeatNegative => r.random_range(-1.5..-0.2),
            Branch::DirectedHeat => 1.0,
        };
        let sign = if r.random::<bool>() { Sign::Plus } else { Sign::Minus };
        let w = match branch {
            Branch::Schrodinger => ChannelMixer::schrodinger(
                (0..k).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect(),
            ),
            _ => ChannelMixer::heat((0..k).map(|_| r.random_range(-1.0..1.0)).collect()),
        };
        let x0 = FeatureMatrix::real(gaussian(&mut r, n, k));
        let sna = build_sna(&g, DegreePolicy::Error).unwrap();
        let spec = eigen_spectrum(sna.matrix(), false).unwrap();
        let Ok(report) = predict_dominance(&spec, &w, alpha, sign, class) else { continue };
        if report.condition_met.is_none() || report.margin.abs() < DOMINANCE_MIN_MARGIN {
            continue;
        }
        let guard = euler_step_size_guard(&w, &spec, alpha, sign, class).unwrap();
        if guard.degenerate || guard.unbounded {
            continue;
        }
        accepted += 1;
        let op = FractionalOperator::new(Arc::new(svd_full(&sna).unwrap()), alpha).unwrap();
        let params = EvolveParams {
            h: GUARD_FRACTION * guard.max_h,
            steps: DOMINANCE_STEPS,
            record_every: DOMINANCE_RECORD_EVERY,
            sign,
        };
        let verdict = match evolve(&sna, &op, &w, &x0, &params) {
            Ok((_, traj)) => classify_trajectory(&traj, &report, DOMINANCE_TOL),
            Err(_) => Verdict::Refuted,
        };
        if verdict == Verdict::Confirmed {
            confirmed += 1;
        } else {
            eprintln!("  {branch:?} config {accepted}: {verdict:?} (n={n}, k={k}, alpha={alpha:.3}, margin={:.3e})", report.margin);
        }
    }
    (accepted, confirmed, drawn)
}

fn dominance_vs_simulation() -> Outcome {
    let branches = [
        (Branch::HeatPositive, 71),
        (Branch::HeatNegative, 72),
        (Branch::Schrodinger, 73),
        (Branch::DirectedHeat, 74),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (b, seed) in branches {
        let (accepted, confirmed, drawn) = dominance_branch(b, seed);
        pass &= accepted >= DOMINANCE_CONFIGS && confirmed == accepted;
        parts.push(format!("{b:?} {confirmed}/{accepted} (drawn {drawn})"));
    }
    outcome(pass, parts.join(", "))
}

fn euler_consistency() -> Outcome {
    let mut r = rng(808);
    let mut ratios = Vec::new();
    let mut seed = 8000;
    for inst in 0..EULER_INSTANCES {
        let n = r.random_range(4..=8);
        let k = r.random_range(1..=3);
        let g = if inst % 2 == 0 {
            undirected_no_isolated(n, 0.5, &mut seed)
        } else {
            strongly_connected(n, 0.3, inst as u64)
        };
        let alpha = r.random_range(0.3..1.5);
        let sign = if inst % 4 < 2 { Sign::Plus } else { Sign::Minus };
        let w = if inst % 3 == 2 {
            ChannelMixer::schrodinger(
                (0..k).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect(),
            )
        } else {
            ChannelMixer::heat((0..k).map(|_| r.random_range(-1.0..1.0)).collect())
        };
        let x0 = FeatureMatrix::real(gaussian(&mut r, n, k));
        let sna = build_sna(&g, DegreePolicy::Error).unwrap();
        let op = FractionalOperator::new(Arc::new(svd_full(&sna).unwrap()), alpha).unwrap();
        let exact = closed_form_solution(&x0, &op, &w, EULER_T, sign).unwrap();
        let err = |h: f64| {
            let steps = (EULER_T / h).round() as usize;
            integrate(&x0, &op, &w, h, steps, sign).unwrap().max_abs_diff(&exact)
        };
        ratios.push(err(EULER_H.0) / err(EULER_H.1));
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    outcome(
        lo >= EULER_RATIO.0 && hi <= EULER_RATIO.1,
        format!("{EULER_INSTANCES} instances, error ratio range [{lo:.3}, {hi:.3}]"),
    )
}

fn linear_fit(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
        syy += (v - my) * (v - my);
    }
    let slope = sxy / sxx;
    (slope, sxy * sxy / (sxx * syy))
}

fn gcn_oversmoothing() -> Outcome {
    let mut r = rng(909);
    let (mut worst_slope, mut worst_r2, mut worst_route) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    let mut worst_floor: f64 = 0.0;
    let mut used = 0;
    let mut seed = 9000;
    let n = 30;
    while used < GCN_GRAPHS {
        let g = undirected_no_isolated(n, 0.12, &mut seed);
        let connected = g.components(flode_core::graph::ComponentMode::Weak).iter().all(|&c| c == 0);
        let sna = build_sna(&g, DegreePolicy::Error).unwrap();
        let spec = eigen_spectrum(sna.matrix(), false).unwrap();
        let lmin = spec.real_parts().iter().copied().fold(f64::INFINITY, f64::min);
        if !connected || lmin <= -1.0 + 1e-9 {
            continue;
        }
        used += 1;
        // min λ(I − S)/2 is exactly 0 on a connected undirected graph.
        let floor = spec.real_parts().iter().map(|l| 1.0 - l).fold(f64::INFINITY, f64::min) / 2.0;
        worst_floor = worst_floor.max(floor.abs());
        let k = 4;
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |_, _| {
            r.random_range(0.5..1.5) * if r.random::<bool>() { 1.0 } else { -1.0 }
        }));
        let x0 = FeatureMatrix::real(gaussian(&mut r, n, k));
        let traj = gcn_evolve(&x0, &sna, &[w.clone()], GCN_LAYERS).unwrap();
        // Same recursion with the edge-sum energy, which keeps relative
        // accuracy far below the round-off floor of the trace form.
        let mut x = x0.re() / x0.norm();
        let mut y = Vec::with_capacity(GCN_LAYERS + 1);
        for t in 0..=GCN_LAYERS {
            if t > 0 {
                x = sna.matrix() * &x * &w;
                x /= x.norm();
            }
            let e = dirichlet_energy(&g, &FeatureMatrix::real(x.clone())).unwrap();
            let recorded = traj.records[t].normalized_energy;
            if e > 1e-6 {
                worst_route = worst_route.max((e - recorded).abs() / e);
            }
            y.push(e.ln());
        }
        let (slope, r2) = linear_fit(&y);
        worst_slope = worst_slope.max(slope);
        worst_r2 = worst_r2.min(r2);
    }
    outcome(
        worst_slope < 0.0 && worst_r2 > GCN_MIN_R2 && worst_route < 1e-6 && worst_floor < 1e-12,
        format!(
            "{GCN_GRAPHS} graphs over {GCN_LAYERS} layers: max slope {worst_slope:.4}, min R² {worst_r2:.5}, trace/sum energy gap {worst_route:.1e}, |energy floor| {worst_floor:.1e}"
        ),
    )
}

fn gradient_audit() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for scheme in [Scheme::Heat, Scheme::Schrodinger] {
        let mut scheme_worst: f64 = 0.0;
        for inst in 0..GRADCHECK_INSTANCES as u64 {
            let mut r = rng(1100 + inst);
            let n = 20 + 2 * inst as usize;
            let g = erdos_renyi(n, 0.15, true, 1200 + inst).unwrap();
            let f = Arc::new(svd_full(&build_sna(&g, DegreePolicy::SelfLoop).unwrap()).unwrap());
            let cfg = ModelConfig {
                hidden_channels: 4 + inst as usize,
                num_layers: 1 + (inst as usize % 2),
                scheme,
                sign: if inst % 2 == 0 { Sign::Minus } else { Sign::Plus },
                seed: inst,
                ..ModelConfig::default()
            };
            let in_dim = 3;
            let model = init_model(&cfg, f, in_dim, 3, inst).unwrap();
            let x = gaussian(&mut r, n, in_dim);
            let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let mask: Vec<usize> = (0..n).filter(|i| i % 3 != 0).collect();
            let rep = gradient_check(&model, &x, &labels, &mask).unwrap();
            scheme_worst = scheme_worst.max(rep.max_rel_error);
        }
        worst = worst.max(scheme_worst);
        parts.push(format!("{scheme:?} {scheme_worst:.1e}"));
    }
    outcome(worst < GRADCHECK_TOL, format!("max relative error per scheme: {}", parts.join(", ")))
}

fn dsbm_mean(cfg: impl Fn(u64) -> DsbmConfig) -> (f64, f64) {
    let accs: Vec<f64> = DSBM_SEEDS
        .iter()
        .map(|&s| run_dsbm_trial(&cfg(s), &dsbm_model_config(s), Some(DSBM_SVD_RANK)).unwrap().test_acc)
        .collect();
    mean_and_stderr(&accs)
}

fn dsbm_density() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(alpha, target) in &DENSITY_TARGETS {
        let (m, se) = dsbm_mean(|s| DsbmConfig::density(alpha, s));
        pass &= m >= target;
        parts.push(format!("α*={alpha}: {m:.4}±{se:.4} (≥ {target})"));
    }
    outcome(pass, parts.join(", "))
}

fn dsbm_flow() -> Outcome {
    let means: Vec<f64> = FLOW_BETAS.iter().map(|&b| dsbm_mean(|s| DsbmConfig::flow(b, s)).0).collect();
    let first = means[0];
    let last = *means.last().unwrap();
    let monotone = (0..means.len()).all(|i| (i + 1..means.len()).all(|j| means[j] <= means[i] + FLOW_MONOTONE_SLACK));
    let pass = first >= FLOW_LOW_BETA_MIN
        && (FLOW_HIGH_BETA_RANGE.0..=FLOW_HIGH_BETA_RANGE.1).contains(&last)
        && monotone;
    let table: Vec<String> = FLOW_BETAS.iter().zip(&means).map(|(b, m)| format!("{b:.2}:{m:.3}")).collect();
    outcome(pass, format!("β* → accuracy {}; non-increasing within {FLOW_MONOTONE_SLACK}: {monotone}", table.join(" ")))
}

fn truncated_svd() -> Outcome {
    let g = erdos_renyi(SVD_NODES, 0.02, true, 1313).unwrap();
    let sna = build_sna(&g, DegreePolicy::PseudoInverse).unwrap();
    let full = svd_full(&sna).unwrap();
    let trunc = svd_truncated(&sna, SVD_NODES, 1313).unwrap();
    let mut monotone = true;
    let mut prev = 0.0;
    for k in 1..=SVD_NODES {
        let e = explained_variance(&full, k).unwrap();
        monotone &= e >= prev;
        prev = e;
    }
    let at_n = explained_variance(&full, SVD_NODES).unwrap();
    let at_n_trunc = explained_variance(&trunc, SVD_NODES).unwrap();
    let sigma_err = (&full.sigma - &trunc.sigma).amax();
    let pass = monotone && (at_n - 1.0).abs() < 1e-12 && (at_n_trunc - 1.0).abs() < 1e-9 && sigma_err <= SVD_SIGMA_TOL;
    outcome(
        pass,
        format!("N={SVD_NODES}: monotone {monotone}, EV(N) = {at_n:.15}, truncated EV(N) = {at_n_trunc:.12}, max σ gap {sigma_err:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, fn() -> Outcome); 13] = [
        (1, "energy sum form equals trace form", rayleigh_identity),
        (2, "spectrum of S inside the unit disc", spectrum_bound),
        (3, "weak balance iff 1 is an eigenvalue", weak_balance),
        (4, "fractional powers decay with distance", fractional_bound),
        (5, "cycle spectrum and homophily", cycle_analytics),
        (6, "eigenvalues of S^α follow the sign-power law", sign_power_law),
        (7, "dominance prediction matches simulation", dominance_vs_simulation),
        (8, "explicit Euler is first order", euler_consistency),
        (9, "graph convolution oversmooths exponentially", gcn_oversmoothing),
        (10, "analytic gradients match finite differences", gradient_audit),
        (11, "DSBM density experiment", dsbm_density),
        (12, "DSBM flow experiment", dsbm_flow),
        (13, "truncated SVD matches full SVD", truncated_svd),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let out = run();
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("[{id:2}] {verdict} {name} ({:.1} s): {}", t.elapsed().as_secs_f64(), out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
