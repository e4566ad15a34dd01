//! Structural and spectral diagnostics of a graph.

use std::time::Instant;

use anyhow::Result;
use flode_core::graph::build_sna;
use flode_core::spectral::{eigen_spectrum, normality_defect, svd_full, weak_balance_gap};
use flode_core::{DegreePolicy, DirectedGraph};
use serde::{Deserialize, Serialize};

use super::{load_source, require_source, Status};
use crate::output::Output;
use crate::spec::ExperimentSpec;

pub const WEAK_BALANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub directed: bool,
    pub degree_policy: DegreePolicy,
    pub labels_present: bool,
    /// `None` without labels.
    pub homophily: Option<f64>,
    pub homophily_symmetrized: Option<f64>,
    pub balanced: bool,
    pub weakly_balanced: bool,
    pub weak_balance_gap: f64,
    /// Smallest real part over the spectrum of `S`.
    pub lambda_min: f64,
    /// Largest real part over the spectrum of `S`.
    pub lambda_max: f64,
    pub spectral_radius: f64,
    pub real_spectrum: bool,
    pub normality_defect: f64,
    pub sigma_max: f64,
    pub content_hash: String,
    pub provenance: Vec<String>,
}

pub fn analyze_graph(graph: &DirectedGraph, policy: DegreePolicy) -> Result<AnalysisReport> {
    let sna = build_sna(graph, policy)?;
    let spec = eigen_spectrum(sna.matrix(), false)?;
    let re = spec.real_parts();
    let gap = weak_balance_gap(&sna)?;
    let labels_present = graph.labels().is_some();
    let homophily = |r: flode_core::Result<flode_core::graph::HomophilyReport>| r.ok().map(|h| h.value);
    Ok(AnalysisReport {
        num_nodes: graph.num_nodes(),
        num_edges: graph.num_edges(),
        directed: graph.is_directed(),
        degree_policy: policy,
        labels_present,
        homophily: if labels_present { homophily(graph.homophily()) } else { None },
        homophily_symmetrized: if labels_present { homophily(graph.homophily_symmetrized()) } else { None },
        balanced: graph.is_balanced(),
        weakly_balanced: gap < WEAK_BALANCE_TOL,
        weak_balance_gap: gap,
        lambda_min: re.iter().copied().fold(f64::INFINITY, f64::min),
        lambda_max: re.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        spectral_radius: spec.max_modulus(),
        real_spectrum: spec.is_real(1e-10),
        normality_defect: normality_defect(&sna),
        sigma_max: svd_full(&sna)?.sigma_max(),
        content_hash: graph.content_hash(),
        provenance: Vec::new(),
    })
}

pub fn run(spec: &ExperimentSpec, started: Instant) -> Result<Status> {
    let loaded = load_source(require_source(&spec.source)?)?;
    let policy = spec.degree_policy.unwrap_or(DegreePolicy::PseudoInverse);
    let mut report = analyze_graph(&loaded.graph, policy)?;
    report.provenance = loaded.provenance;
    let out = Output::create(spec, started)?;
    out.write_json("analysis.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(Status::Success)
}
