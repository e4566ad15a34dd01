pub mod analyze;
pub mod dsbm;
pub mod evolve;
pub mod gradcheck;
pub mod train;
pub mod verify;

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use flode_core::datasets::{dsbm_generate, load_dataset};
use flode_core::dynamics::GraphClass;
use flode_core::graph::{cycle_graph, directed_cycle, erdos_renyi, load_edge_list};
use flode_core::spectral::{normality_defect, svd_full, svd_truncated, SnaFactors};
use flode_core::{DirectedGraph, FeatureMatrix, SnaMatrix, Splits};

use crate::spec::GraphSource;

/// How a command finished when it did not error out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    VerificationFailed,
    NumericalFailure,
}

impl Status {
    pub fn worst(self, other: Status) -> Status {
        let rank = |s: Status| match s {
            Status::Success => 0,
            Status::VerificationFailed => 1,
            Status::NumericalFailure => 2,
        };
        if rank(other) > rank(self) {
            other
        } else {
            self
        }
    }
}

pub struct Loaded {
    pub graph: DirectedGraph,
    pub features: Option<FeatureMatrix>,
    pub labels: Option<Vec<usize>>,
    pub splits: Option<Splits>,
    pub provenance: Vec<String>,
}

impl Loaded {
    fn bare(graph: DirectedGraph, what: String) -> Self {
        Self { graph, features: None, labels: None, splits: None, provenance: vec![what] }
    }
}

pub fn load_source(source: &GraphSource) -> Result<Loaded> {
    Ok(match source {
        GraphSource::Cycle { n } => Loaded::bare(cycle_graph(*n)?, format!("undirected cycle C_{n}")),
        GraphSource::DirectedCycle { n } => Loaded::bare(directed_cycle(*n)?, format!("directed cycle of length {n}")),
        GraphSource::ErdosRenyi { n, p, directed, seed } => Loaded::bare(
            erdos_renyi(*n, *p, *directed, *seed)?,
            format!("erdos-renyi n={n} p={p} directed={directed} seed={seed}"),
        ),
        GraphSource::Dsbm(cfg) => {
            let (graph, labels, x) = dsbm_generate(cfg)?;
            Loaded {
                graph: graph.with_labels(labels.clone())?,
                features: Some(x),
                labels: Some(labels),
                splits: None,
                provenance: vec![format!("dsbm {}", serde_json::to_string(cfg)?)],
            }
        }
        GraphSource::EdgeList { path } => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Loaded::bare(load_edge_list(&text, None)?, format!("edge list {}", path.display()))
        }
        GraphSource::Directory { path, preprocess } => {
            let ds = load_dataset(path, preprocess).with_context(|| format!("loading dataset {}", path.display()))?;
            let graph = match &ds.labels {
                Some(l) => ds.graph.clone().with_labels(l.clone())?,
                None => ds.graph.clone(),
            };
            Loaded { graph, features: Some(ds.features), labels: ds.labels, splits: ds.splits, provenance: ds.provenance }
        }
    })
}

pub fn require_source(source: &Option<GraphSource>) -> Result<&GraphSource> {
    match source {
        Some(s) => Ok(s),
        None => bail!("no graph source given (use a source flag or the config's \"source\" field)"),
    }
}

pub fn factorize(sna: &SnaMatrix, rank: Option<usize>, seed: u64) -> Result<Arc<SnaFactors>> {
    let f = match rank {
        Some(k) if k < sna.dim() => svd_truncated(sna, k, seed)?,
        _ => svd_full(sna)?,
    };
    Ok(Arc::new(f))
}

pub const NORMALITY_TOL: f64 = 1e-8;

/// Symmetric or numerically normal operators admit the fractional dominance theory.
pub fn graph_class(sna: &SnaMatrix) -> GraphClass {
    if sna.is_symmetric() || normality_defect(sna) <= NORMALITY_TOL {
        GraphClass::UndirectedOrNormal
    } else {
        GraphClass::DirectedAlpha1
    }
}

pub fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}
