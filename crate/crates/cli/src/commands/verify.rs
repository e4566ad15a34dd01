//! Self-checks of the spectral identities, bounds and dynamics on a small
//! deterministic corpus. `--inject-fault` perturbs one entry of every
//! normalized adjacency to confirm the checks notice.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::ValueEnum;
use flode_core::dynamics::{
    classify_trajectory, closed_form_solution, euler_step_size_guard, evolve, integrate, predict_dominance,
    EvolveParams, GraphClass, Verdict,
};
use flode_core::graph::{build_sna, cycle_graph, directed_cycle, dirichlet_energy, dirichlet_energy_trace, erdos_renyi};
use flode_core::model::{gradient_check, init_model};
use flode_core::spectral::{
    eigen_spectrum, explained_variance, svd_full, svd_truncated, verify_fractional_bound, weak_balance_gap,
    FractionalOperator,
};
use flode_core::{ChannelMixer, DegreePolicy, DirectedGraph, FeatureMatrix, ModelConfig, Scheme, Sign, SnaMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Status;
use crate::output::Output;
use crate::pool::run_ordered;
use crate::spec::ExperimentSpec;

/// Added to one off-diagonal entry of `S` under fault injection.
pub const FAULT_SIZE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Rayleigh,
    Spectrum,
    Balance,
    Bound,
    Cycles,
    SignPower,
    Euler,
    Dominance,
    Gradcheck,
    Svd,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Rayleigh => "rayleigh",
            Suite::Spectrum => "spectrum",
            Suite::Balance => "balance",
            Suite::Bound => "bound",
            Suite::Cycles => "cycles",
            Suite::SignPower => "sign_power",
            Suite::Euler => "euler",
            Suite::Dominance => "dominance",
            Suite::Gradcheck => "gradcheck",
            Suite::Svd => "svd",
        }
    }
}

/// Parses selector tokens (names, `all`, or comma-separated lists) into
/// distinct suites in canonical order.
pub fn parse_selector(tokens: &[String]) -> Result<Vec<Suite>> {
    let mut chosen = Vec::new();
    for tok in tokens.iter().flat_map(|t| t.split(',')).map(str::trim).filter(|t| !t.is_empty()) {
        if tok == "all" {
            chosen.extend(Suite::value_variants().iter().copied());
        } else {
            match Suite::from_str(tok, true) {
                Ok(s) => chosen.push(s),
                Err(_) => bail!(
                    "unknown suite {tok:?}; expected `all` or one of: {}",
                    Suite::value_variants().iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
                ),
            }
        }
    }
    if chosen.is_empty() {
        bail!("empty suite selector; name one or more suites or `all`");
    }
    let mut out: Vec<Suite> = Suite::value_variants().iter().copied().filter(|s| chosen.contains(s)).collect();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed value of the suite's metric.
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.sample(StandardNormal))
}

fn strongly_connected(n: usize, p: f64, seed: u64) -> Result<DirectedGraph> {
    let er = erdos_renyi(n, p, true, seed)?;
    let arcs = er.edges().iter().copied().chain((0..n).map(|i| (i, (i + 1) % n)));
    Ok(DirectedGraph::new(n, arcs)?)
}

fn undirected_no_isolated(n: usize, p: f64, seed: &mut u64) -> Result<DirectedGraph> {
    loop {
        *seed += 1;
        let g = erdos_renyi(n, p, false, *seed)?;
        if g.degrees().in_degrees.iter().all(|&d| d > 0) {
            return Ok(g);
        }
    }
}

fn multiset_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

struct Checker {
    fault: bool,
}

impl Checker {
    /// `S` of the graph, with the fault applied at the pair farthest apart in
    /// the symmetrized graph (unreachable pairs first, then row-major order).
    fn operator(&self, g: &DirectedGraph, policy: DegreePolicy) -> Result<SnaMatrix> {
        let sna = build_sna(g, policy)?;
        if !self.fault || sna.dim() < 2 {
            return Ok(sna);
        }
        let dist = g.to_undirected().shortest_path_distances();
        let n = sna.dim();
        let mut target = (0, 1);
        let mut best = 0;
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let d = dist.get(i, j).unwrap_or(usize::MAX);
                if d > best {
                    best = d;
                    target = (i, j);
                }
            }
        }
        let mut m = sna.matrix().clone();
        m[target] += FAULT_SIZE;
        Ok(SnaMatrix::from_matrix(m, policy)?)
    }

    fn run(&self, suite: Suite) -> Result<SuiteResult> {
        match suite {
            Suite::Rayleigh => self.rayleigh(),
            Suite::Spectrum => self.spectrum(),
            Suite::Balance => self.balance(),
            Suite::Bound => self.bound(),
            Suite::Cycles => self.cycles(),
            Suite::SignPower => self.sign_power(),
            Suite::Euler => self.euler(),
            Suite::Dominance => self.dominance(),
            Suite::Gradcheck => self.gradcheck(),
            Suite::Svd => self.svd(),
        }
    }

    fn rayleigh(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-10;
        let mut r = rng(11);
        let (mut worst, mut failures, cases) = (0.0f64, 0, 30);
        for inst in 0..cases {
            let n = r.random_range(3..30);
            let p = r.random_range(0.05..0.6);
            let g = if inst % 2 == 0 {
                strongly_connected(n, p, inst as u64)?
            } else {
                let mut seed = 1000 * inst as u64;
                undirected_no_isolated(n, p, &mut seed)?
            };
            let k = r.random_range(1..4);
            let x = FeatureMatrix::complex(gaussian(&mut r, n, k), gaussian(&mut r, n, k))?;
            let sum = dirichlet_energy(&g, &x)?;
            let trace = dirichlet_energy_trace(&self.operator(&g, DegreePolicy::Error)?, &x)?;
            let gap = (sum - trace).abs() / sum.abs().max(1.0);
            failures += usize::from(gap > TOL);
            worst = worst.max(gap);
        }
        Ok(result(Suite::Rayleigh, cases, failures, worst, TOL, "relative gap between edge-sum and trace energy"))
    }

    fn spectrum(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-8;
        let mut r = rng(22);
        let (mut worst, mut failures, cases) = (0.0f64, 0, 20);
        for inst in 0..cases {
            let n = r.random_range(2..60);
            let g = erdos_renyi(n, r.random_range(0.02..0.5), true, 2200 + inst as u64)?;
            let rho = eigen_spectrum(self.operator(&g, DegreePolicy::PseudoInverse)?.matrix(), false)?.max_modulus();
            failures += usize::from(rho > 1.0 + TOL);
            worst = worst.max(rho);
        }
        Ok(result(Suite::Spectrum, cases, failures, worst, 1.0 + TOL, "spectral radius of S"))
    }

    fn balance(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-8;
        let mut graphs = Vec::new();
        for n in 3..7 {
            graphs.push(directed_cycle(n)?);
            graphs.push(cycle_graph(n)?);
        }
        graphs.push(DirectedGraph::new(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])?);
        let mut seed = 33;
        for _ in 0..4 {
            graphs.push(undirected_no_isolated(10, 0.3, &mut seed)?);
        }
        let (mut worst, mut failures) = (0.0f64, 0);
        for g in &graphs {
            let gap = weak_balance_gap(&self.operator(g, DegreePolicy::Error)?)?;
            failures += usize::from(gap >= TOL);
            worst = worst.max(gap);
        }
        let chord = DirectedGraph::new(3, [(0, 1), (1, 2), (2, 0), (0, 2), (2, 1)])?;
        let chord_gap = weak_balance_gap(&self.operator(&chord, DegreePolicy::Error)?)?;
        failures += usize::from(chord_gap <= 1e-2);
        let mut res = result(Suite::Balance, graphs.len() + 1, failures, worst, TOL, "weak-balance gap of balanced graphs");
        res.detail = format!("{}; unbalanced chord graph gap {chord_gap:.4} (must exceed 1e-2)", res.detail);
        Ok(res)
    }

    fn bound(&self) -> Result<SuiteResult> {
        const UNREACHABLE_TOL: f64 = 1e-8;
        let mut graphs = vec![cycle_graph(8)?, cycle_graph(16)?];
        for i in 0..4u64 {
            let p = [0.05, 0.1, 0.2, 0.4][i as usize];
            graphs.push(erdos_renyi(20, p, false, 440 + i)?);
            graphs.push(erdos_renyi(20, p, true, 450 + i)?);
        }
        let (mut worst, mut worst_unreach, mut failures, mut cases) = (0.0f64, 0.0f64, 0, 0);
        for g in &graphs {
            let sna = self.operator(g, DegreePolicy::PseudoInverse)?;
            let f = Arc::new(svd_full(&sna)?);
            for a in [0.25, 0.5, 1.0, 2.0] {
                let rep = verify_fractional_bound(g, &f, a)?;
                cases += 1;
                failures += usize::from(rep.violations > 0 || rep.max_unreachable_entry > UNREACHABLE_TOL);
                worst = worst.max(rep.max_ratio);
                worst_unreach = worst_unreach.max(rep.max_unreachable_entry);
            }
        }
        let mut res = result(Suite::Bound, cases, failures, worst, 1.0, "ratio of |S^a| entries to the distance bound");
        res.detail = format!("{}; max unreachable entry {worst_unreach:.1e}", res.detail);
        Ok(res)
    }

    fn cycles(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-10;
        let (mut worst, mut failures) = (0.0f64, 0);
        let sizes = [8, 12, 16];
        for n in sizes {
            let g = cycle_graph(n)?;
            let got = eigen_spectrum(self.operator(&g, DegreePolicy::Error)?.matrix(), false)?.real_parts();
            let want = (0..n).map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
            let d = multiset_distance(got, want);
            failures += usize::from(d > TOL);
            worst = worst.max(d);
        }
        Ok(result(Suite::Cycles, sizes.len(), failures, worst, TOL, "distance of the C_N spectrum from cos(2πj/N)"))
    }

    fn sign_power(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-7;
        let signed_power = |l: f64, a: f64| if l.abs() <= 1e-12 { 0.0 } else { l.signum() * l.abs().powf(a) };
        let (mut worst, mut failures, mut cases) = (0.0f64, 0, 0);
        let mut seed = 660;
        for i in 0..5 {
            let g = undirected_no_isolated(10 + 2 * i, 0.3, &mut seed)?;
            let clean = build_sna(&g, DegreePolicy::Error)?;
            let lambdas = eigen_spectrum(clean.matrix(), false)?.real_parts();
            let f = Arc::new(svd_full(&self.operator(&g, DegreePolicy::Error)?)?);
            for a in [0.3, 2.0] {
                let dense = FractionalOperator::new(f.clone(), a)?.dense();
                let got = eigen_spectrum(&dense, false)?.real_parts();
                let d = multiset_distance(got, lambdas.iter().map(|&l| signed_power(l, a)).collect());
                cases += 1;
                failures += usize::from(d > TOL);
                worst = worst.max(d);
            }
        }
        Ok(result(Suite::SignPower, cases, failures, worst, TOL, "eigenvalues of S^a vs sign(λ)|λ|^a"))
    }

    fn euler(&self) -> Result<SuiteResult> {
        const RANGE: (f64, f64) = (1.7, 2.3);
        let mut r = rng(88);
        let (mut lo, mut hi, mut failures, cases) = (f64::INFINITY, 0.0f64, 0, 4);
        let mut seed = 880;
        for inst in 0..cases {
            let n = r.random_range(4..=7);
            let k = r.random_range(1..=2);
            let g = if inst % 2 == 0 {
                undirected_no_isolated(n, 0.5, &mut seed)?
            } else {
                strongly_connected(n, 0.3, inst as u64)?
            };
            let w = if inst == 3 {
                ChannelMixer::schrodinger(
                    (0..k).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect(),
                )
            } else {
                ChannelMixer::heat((0..k).map(|_| r.random_range(-1.0..1.0)).collect())
            };
            let alpha = r.random_range(0.3..1.5);
            let x0 = FeatureMatrix::real(gaussian(&mut r, n, k));
            let op = FractionalOperator::new(Arc::new(svd_full(&self.operator(&g, DegreePolicy::Error)?)?), alpha)?;
            let exact = closed_form_solution(&x0, &op, &w, 1.0, Sign::Minus)?;
            let err = |h: f64| -> Result<f64> {
                Ok(integrate(&x0, &op, &w, h, (1.0 / h).round() as usize, Sign::Minus)?.max_abs_diff(&exact))
            };
            let ratio = err(1e-2)? / err(5e-3)?;
            failures += usize::from(!(RANGE.0..=RANGE.1).contains(&ratio));
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        let mut res = result(Suite::Euler, cases, failures, hi, RANGE.1, "error ratio when halving the step");
        res.detail = format!("{}; range [{lo:.3}, {hi:.3}], expected within [{}, {}]", res.detail, RANGE.0, RANGE.1);
        Ok(res)
    }

    fn dominance(&self) -> Result<SuiteResult> {
        const PER_BRANCH: usize = 3;
        const TOL: f64 = 1e-3;
        let mut failures = 0;
        let mut cases = 0;
        let mut worst = 0.0f64;
        for branch in 0..4u64 {
            let mut r = rng(700 + branch);
            let mut graph_seed = 7000 * (branch + 1);
            let mut accepted = 0;
            let mut drawn = 0;
            while accepted < PER_BRANCH && drawn < 2000 {
                drawn += 1;
                let n = r.random_range(5..=8);
                let k = r.random_range(1..=3);
                let (g, class, alpha) = match branch {
                    0 => (undirected_no_isolated(n, 0.5, &mut graph_seed)?, GraphClass::UndirectedOrNormal, r.random_range(0.2..2.0)),
                    1 => (undirected_no_isolated(n, 0.5, &mut graph_seed)?, GraphClass::UndirectedOrNormal, r.random_range(-1.5..-0.2)),
                    2 => (undirected_no_isolated(n, 0.5, &mut graph_seed)?, GraphClass::UndirectedOrNormal, r.random_range(0.2..2.0)),
                    _ => {
                        graph_seed += 1;
                        (strongly_connected(n, 0.3, graph_seed)?, GraphClass::DirectedAlpha1, 1.0)
                    }
                };
                let sign = if r.random::<bool>() { Sign::Plus } else { Sign::Minus };
                let w = if branch == 2 {
                    ChannelMixer::schrodinger(
                        (0..k).map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect(),
                    )
                } else {
                    ChannelMixer::heat((0..k).map(|_| r.random_range(-1.0..1.0)).collect())
                };
                let x0 = FeatureMatrix::real(gaussian(&mut r, n, k));
                let clean = build_sna(&g, DegreePolicy::Error)?;
                let spec = eigen_spectrum(clean.matrix(), false)?;
                let Ok(report) = predict_dominance(&spec, &w, alpha, sign, class) else { continue };
                if report.condition_met.is_none() || report.margin.abs() < 1e-3 {
                    continue;
                }
                let guard = euler_step_size_guard(&w, &spec, alpha, sign, class)?;
                if guard.degenerate || guard.unbounded {
                    continue;
                }
                accepted += 1;
                cases += 1;
                let sna = self.operator(&g, DegreePolicy::Error)?;
                let op = FractionalOperator::new(Arc::new(svd_full(&sna)?), alpha)?;
                let params = EvolveParams { h: 0.5 * guard.max_h, steps: 100_000, record_every: 1000, sign };
                let confirmed = match evolve(&sna, &op, &w, &x0, &params) {
                    Ok((_, traj)) => {
                        let last = traj.last().map_or(f64::INFINITY, |r| r.normalized_energy);
                        worst = worst.max((last - report.predicted_limit).abs());
                        classify_trajectory(&traj, &report, TOL) == Verdict::Confirmed
                    }
                    Err(_) => false,
                };
                failures += usize::from(!confirmed);
            }
        }
        Ok(result(Suite::Dominance, cases, failures, worst, TOL, "distance of the final energy from the predicted limit"))
    }

    fn gradcheck(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-5;
        let (mut worst, mut failures, mut cases) = (0.0f64, 0, 0);
        for (i, scheme) in [Scheme::Heat, Scheme::Schrodinger].into_iter().enumerate() {
            let n = 24;
            let g = erdos_renyi(n, 0.15, true, 990 + i as u64)?;
            let f = Arc::new(svd_full(&self.operator(&g, DegreePolicy::SelfLoop)?)?);
            let cfg = ModelConfig { hidden_channels: 4, num_layers: 2, scheme, ..ModelConfig::default() };
            let model = init_model(&cfg, f, 3, 3, i as u64)?;
            let mut r = rng(991 + i as u64);
            let x = gaussian(&mut r, n, 3);
            let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
            let mask: Vec<usize> = (0..n).filter(|v| v % 3 != 0).collect();
            let rep = gradient_check(&model, &x, &labels, &mask)?;
            cases += 1;
            failures += usize::from(rep.max_rel_error > TOL);
            worst = worst.max(rep.max_rel_error);
        }
        Ok(result(Suite::Gradcheck, cases, failures, worst, TOL, "relative error of analytic gradients"))
    }

    fn svd(&self) -> Result<SuiteResult> {
        const TOL: f64 = 1e-6;
        let n = 120;
        let g = erdos_renyi(n, 0.04, true, 1212)?;
        let sna = self.operator(&g, DegreePolicy::PseudoInverse)?;
        let full = svd_full(&sna)?;
        let trunc = svd_truncated(&sna, n, 1212)?;
        let mut prev = 0.0;
        let mut monotone = true;
        for k in 1..=n {
            let e = explained_variance(&full, k)?;
            monotone &= e >= prev;
            prev = e;
        }
        let complete = (prev - 1.0).abs() < 1e-12;
        let gap = (&full.sigma - &trunc.sigma).amax();
        let failures = usize::from(!monotone) + usize::from(!complete) + usize::from(gap > TOL);
        let mut res = result(Suite::Svd, 3, failures, gap, TOL, "singular value gap between truncated and full SVD");
        res.detail = format!("{}; explained variance monotone {monotone}, reaches 1: {complete}", res.detail);
        Ok(res)
    }
}

fn result(suite: Suite, cases: usize, failures: usize, worst: f64, tolerance: f64, what: &str) -> SuiteResult {
    SuiteResult {
        suite,
        passed: failures == 0,
        cases,
        failures,
        worst,
        tolerance,
        detail: format!("{what}: worst {worst:.3e} (limit {tolerance:.1e}), {failures}/{cases} failing"),
    }
}

pub fn run_suites(suites: &[Suite], inject_fault: bool, jobs: usize) -> Result<Vec<SuiteResult>> {
    let checker = Checker { fault: inject_fault };
    run_ordered(jobs, suites, |_, &s| checker.run(s)).into_iter().collect()
}

pub fn run(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    let suites = parse_selector(&spec.verify.suites)?;
    let results = run_suites(&suites, spec.verify.inject_fault, jobs)?;
    let out = Output::create(spec, started)?;
    let mut csv = String::from("suite,passed,cases,failures,worst,tolerance\n");
    for r in &results {
        println!("{:<11} {}  {}", r.suite.name(), if r.passed { "PASS" } else { "FAIL" }, r.detail);
        csv.push_str(&format!("{},{},{},{},{},{}\n", r.suite.name(), r.passed, r.cases, r.failures, r.worst, r.tolerance));
    }
    out.write("verify.csv", csv.as_bytes())?;
    out.write_json("verify.json", &results)?;
    Ok(if results.iter().all(|r| r.passed) { Status::Success } else { Status::VerificationFailed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sel(s: &[&str]) -> Result<Vec<Suite>> {
        parse_selector(&s.iter().map(|t| t.to_string()).collect::<Vec<_>>())
    }

    #[test]
    fn selector_parsing() {
        assert!(sel(&[]).is_err());
        assert!(sel(&[" , "]).is_err());
        assert!(sel(&["bogus"]).is_err());
        assert_eq!(sel(&["svd,bound", "bound"]).unwrap(), vec![Suite::Bound, Suite::Svd]);
        assert_eq!(sel(&["all"]).unwrap().len(), Suite::value_variants().len());
        assert_eq!(sel(&["sign_power"]).unwrap(), vec![Suite::SignPower]);
    }

    #[test]
    fn clean_identities_pass_and_faults_are_caught() {
        let quick = [Suite::Rayleigh, Suite::Bound, Suite::Cycles, Suite::SignPower];
        for r in run_suites(&quick, false, 1).unwrap() {
            assert!(r.passed, "{:?}: {}", r.suite, r.detail);
        }
        for r in run_suites(&quick, true, 1).unwrap() {
            assert!(!r.passed, "fault not detected by {:?}: {}", r.suite, r.detail);
        }
    }
}
