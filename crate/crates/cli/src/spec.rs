//! Serializable description of one CLI run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flode_core::datasets::Preprocess;
use flode_core::dynamics::{Scheme, Sign};
use flode_core::{DegreePolicy, DsbmConfig, ModelConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    #[default]
    Analyze,
    Evolve,
    Verify,
    Dsbm,
    Train,
    Gradcheck,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Analyze => "analyze",
            CommandKind::Evolve => "evolve",
            CommandKind::Verify => "verify",
            CommandKind::Dsbm => "dsbm",
            CommandKind::Train => "train",
            CommandKind::Gradcheck => "gradcheck",
        }
    }
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    /// Undirected cycle `C_n`.
    Cycle { n: usize },
    DirectedCycle { n: usize },
    ErdosRenyi { n: usize, p: f64, directed: bool, seed: u64 },
    Dsbm(DsbmConfig),
    /// A bare `edges.tsv`-style file.
    EdgeList { path: PathBuf },
    /// A dataset directory with `edges.tsv` and optional features, labels and splits.
    Directory {
        path: PathBuf,
        #[serde(default)]
        preprocess: Preprocess,
    },
}

/// Sweep for `evolve`: every (scheme, α, W-seed) combination, in that nesting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSpec {
    pub schemes: Vec<Scheme>,
    pub alphas: Vec<f64>,
    pub w_seeds: Vec<u64>,
    pub sign: Sign,
    pub channels: usize,
    /// Mixer entries are drawn from `uniform(−w_range, w_range)`.
    pub w_range: f64,
    /// Step size; half the dominance-preserving guard when absent.
    pub h: Option<f64>,
    pub steps: usize,
    pub record_every: usize,
    /// Tolerance for comparing the trajectory tail with the predicted limit.
    pub tolerance: f64,
}

impl Default for DynamicsSpec {
    fn default() -> Self {
        Self {
            schemes: vec![Scheme::Heat],
            alphas: vec![0.5, 1.0, 2.0],
            w_seeds: vec![0, 1, 2],
            sign: Sign::Minus,
            channels: 3,
            w_range: 1.0,
            h: None,
            steps: 20_000,
            record_every: 100,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum DsbmExperiment {
    /// Vary the inter-cluster edge probability with ordered flow.
    #[default]
    DensitySweep,
    /// Vary the orientation probability with uniform edge density.
    FlowSweep,
}

impl DsbmExperiment {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            DsbmExperiment::DensitySweep => vec![0.1, 0.08, 0.05],
            DsbmExperiment::FlowSweep => vec![0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40],
        }
    }

    pub fn config(self, value: f64, seed: u64) -> DsbmConfig {
        match self {
            DsbmExperiment::DensitySweep => DsbmConfig::density(value, seed),
            DsbmExperiment::FlowSweep => DsbmConfig::flow(value, seed),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DsbmExperiment::DensitySweep => "density_sweep",
            DsbmExperiment::FlowSweep => "flow_sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsbmSpec {
    pub experiment: DsbmExperiment,
    /// Swept values; the standard grid of the experiment when absent.
    pub grid: Option<Vec<f64>>,
    pub num_nodes: usize,
    pub num_clusters: usize,
}

impl Default for DsbmSpec {
    fn default() -> Self {
        let d = DsbmConfig::default();
        Self { experiment: DsbmExperiment::DensitySweep, grid: None, num_nodes: d.num_nodes, num_clusters: d.num_clusters }
    }
}

impl DsbmSpec {
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone().unwrap_or_else(|| self.experiment.default_grid())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub suites: Vec<String>,
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: CommandKind,
    pub source: Option<GraphSource>,
    /// Command-specific default when absent.
    pub degree_policy: Option<DegreePolicy>,
    /// Command-specific default when absent.
    pub model: Option<ModelConfig>,
    pub dynamics: DynamicsSpec,
    pub dsbm: DsbmSpec,
    pub verify: VerifySpec,
    pub seeds: Vec<u64>,
    /// Truncation rank of the SVD; exact factorization when absent.
    pub svd_rank: Option<usize>,
    pub output_dir: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            command: CommandKind::default(),
            source: None,
            degree_policy: None,
            model: None,
            dynamics: DynamicsSpec::default(),
            dsbm: DsbmSpec::default(),
            verify: VerifySpec::default(),
            seeds: Vec::new(),
            svd_rank: None,
            output_dir: PathBuf::from("flode-out"),
        }
    }
}

impl ExperimentSpec {
    /// Reads either a full experiment spec or a bare model config.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<ExperimentSpec>(text) {
            Ok(spec) => Ok(spec),
            Err(spec_err) => match serde_json::from_str::<ModelConfig>(text) {
                Ok(model) => Ok(ExperimentSpec { model: Some(model), ..Default::default() }),
                Err(_) => Err(spec_err.into()),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// SHA-256 of the compact JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn seeds_or_default(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![0]
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if self.svd_rank == Some(0) {
            bail!("svd rank must be positive");
        }
        let d = &self.dynamics;
        if d.channels == 0 || d.steps == 0 || d.record_every == 0 {
            bail!("dynamics channels, steps and record_every must be positive");
        }
        if let Some(h) = d.h {
            if !(h > 0.0 && h.is_finite()) {
                bail!("dynamics step size must be positive");
            }
        }
        if d.alphas.iter().any(|a| *a == 0.0 || !a.is_finite()) {
            bail!("exponents must be finite and nonzero");
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_spec_round_trips() {
        let spec = ExperimentSpec {
            command: CommandKind::Evolve,
            source: Some(GraphSource::Dsbm(DsbmConfig::flow(0.2, 4))),
            degree_policy: Some(DegreePolicy::SelfLoop),
            model: Some(ModelConfig { hidden_channels: 7, scheme: Scheme::Schrodinger, ..Default::default() }),
            dynamics: DynamicsSpec { h: Some(0.01), alphas: vec![-0.5, 1.5], ..Default::default() },
            dsbm: DsbmSpec { experiment: DsbmExperiment::FlowSweep, grid: Some(vec![0.3]), ..Default::default() },
            verify: VerifySpec { suites: vec!["bound".into()], inject_fault: true },
            seeds: vec![3, 1, 4],
            svd_rank: Some(12),
            output_dir: "out/x".into(),
        };
        let back = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.hash(), spec.hash());
    }

    #[test]
    fn every_source_round_trips() {
        for source in [
            GraphSource::Cycle { n: 8 },
            GraphSource::DirectedCycle { n: 3 },
            GraphSource::ErdosRenyi { n: 10, p: 0.25, directed: true, seed: 9 },
            GraphSource::EdgeList { path: "g.tsv".into() },
            GraphSource::Directory { path: "data".into(), preprocess: Preprocess { lcc: true, ..Default::default() } },
        ] {
            let spec = ExperimentSpec { source: Some(source), ..Default::default() };
            assert_eq!(ExperimentSpec::from_json(&spec.to_json()).unwrap(), spec);
        }
    }

    #[test]
    fn bare_model_config_is_accepted() {
        let spec = ExperimentSpec::from_json(r#"{"hidden_channels": 5, "max_epochs": 3}"#).unwrap();
        let m = spec.model.unwrap();
        assert_eq!((m.hidden_channels, m.max_epochs), (5, 3));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentSpec::from_json(r#"{"command": "verify", "bogus": 1}"#).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentSpec::default();
        let b = ExperimentSpec { seeds: vec![1], ..Default::default() };
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
