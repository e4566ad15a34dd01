//! `flode`: batch experiments on fractional graph Laplacian dynamics.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 numerical failure.

mod commands;
mod output;
mod pool;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use flode_core::experiment::dsbm_model_config;
use flode_core::{DegreePolicy, ModelConfig, Scheme, Sign};

use commands::Status;
use spec::{CommandKind, DsbmExperiment, ExperimentSpec, GraphSource};

#[derive(Parser, Debug)]
#[command(name = "flode", version, about = "Fractional graph Laplacian dynamics experiments")]
struct Cli {
    /// Experiment spec JSON, or a bare model config JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, global = true, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Truncation rank of the SVD of the normalized adjacency.
    #[arg(long = "svd-rank", global = true)]
    svd_rank: Option<usize>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    /// Sign of the imaginary unit in Schrödinger dynamics.
    #[arg(long, global = true, value_enum)]
    sign: Option<SignArg>,
    /// Treatment of zero in- or out-degrees.
    #[arg(long, global = true, value_enum)]
    policy: Option<PolicyArg>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Heat,
    Schrodinger,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignArg {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum PolicyArg {
    Error,
    PseudoInverse,
    SelfLoop,
}

#[derive(Args, Debug, Default)]
#[group(multiple = false)]
struct SourceArgs {
    /// Edge list file (`src dst` per line).
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Dataset directory with edges.tsv and optional features, labels, splits.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Undirected cycle on N nodes.
    #[arg(long, value_name = "N")]
    cycle: Option<usize>,
    /// Directed cycle on N nodes.
    #[arg(long, value_name = "N")]
    directed_cycle: Option<usize>,
}

impl SourceArgs {
    fn source(&self) -> Option<GraphSource> {
        if let Some(p) = &self.edges {
            Some(GraphSource::EdgeList { path: p.clone() })
        } else if let Some(p) = &self.dataset {
            Some(GraphSource::Directory { path: p.clone(), preprocess: Default::default() })
        } else if let Some(n) = self.cycle {
            Some(GraphSource::Cycle { n })
        } else {
            self.directed_cycle.map(|n| GraphSource::DirectedCycle { n })
        }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Degree, homophily, balance and spectral diagnostics of a graph.
    Analyze {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Predict frequency dominance and simulate the Euler dynamics over a sweep.
    Evolve {
        #[command(flatten)]
        source: SourceArgs,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alpha: Vec<f64>,
        /// Comma-separated seeds for the random mixer and initial state.
        #[arg(long, value_delimiter = ',')]
        w_seed: Vec<u64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        record_every: Option<usize>,
        /// Fixed step size instead of half the dominance guard.
        #[arg(long)]
        h: Option<f64>,
    },
    /// Run self-check suites (`all` or names such as bound,rayleigh).
    Verify {
        suites: Vec<String>,
        /// Perturb one entry of every normalized adjacency.
        #[arg(long)]
        inject_fault: bool,
    },
    /// DSBM node-classification sweeps.
    Dsbm {
        #[arg(value_enum)]
        experiment: Option<DsbmExperiment>,
        /// Comma-separated swept values.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        num_nodes: Option<usize>,
        #[arg(long)]
        num_clusters: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Train on a dataset directory.
    Train {
        dataset: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck,
}

fn default_model(kind: CommandKind) -> ModelConfig {
    match kind {
        CommandKind::Dsbm => dsbm_model_config(0),
        CommandKind::Gradcheck => commands::gradcheck::default_config(),
        _ => ModelConfig::default(),
    }
}

fn model_mut(spec: &mut ExperimentSpec) -> &mut ModelConfig {
    let kind = spec.command;
    spec.model.get_or_insert_with(|| default_model(kind))
}

/// Merges the config file with command-line overrides.
fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(p) => ExperimentSpec::from_json_file(p)?,
        None => ExperimentSpec::default(),
    };
    let kind = match &cli.command {
        Cmd::Analyze { .. } => CommandKind::Analyze,
        Cmd::Evolve { .. } => CommandKind::Evolve,
        Cmd::Verify { .. } => CommandKind::Verify,
        Cmd::Dsbm { .. } => CommandKind::Dsbm,
        Cmd::Train { .. } => CommandKind::Train,
        Cmd::Gradcheck => CommandKind::Gradcheck,
    };
    spec.command = kind;
    if !cli.seed.is_empty() {
        spec.seeds = cli.seed.clone();
    }
    if let Some(o) = &cli.out {
        spec.output_dir = o.clone();
    }
    if cli.svd_rank.is_some() {
        spec.svd_rank = cli.svd_rank;
    }
    if let Some(p) = cli.policy {
        spec.degree_policy = Some(match p {
            PolicyArg::Error => DegreePolicy::Error,
            PolicyArg::PseudoInverse => DegreePolicy::PseudoInverse,
            PolicyArg::SelfLoop => DegreePolicy::SelfLoop,
        });
    }
    let uses_model = matches!(kind, CommandKind::Dsbm | CommandKind::Train | CommandKind::Gradcheck);
    if let Some(s) = cli.scheme {
        let scheme = match s {
            SchemeArg::Heat => Scheme::Heat,
            SchemeArg::Schrodinger => Scheme::Schrodinger,
        };
        spec.dynamics.schemes = vec![scheme];
        if uses_model {
            model_mut(&mut spec).scheme = scheme;
        }
    }
    if let Some(s) = cli.sign {
        let sign = match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        };
        spec.dynamics.sign = sign;
        if uses_model {
            model_mut(&mut spec).sign = sign;
        }
    }
    match &cli.command {
        Cmd::Analyze { source } => {
            if let Some(s) = source.source() {
                spec.source = Some(s);
            }
        }
        Cmd::Evolve { source, alpha, w_seed, steps, record_every, h } => {
            if let Some(s) = source.source() {
                spec.source = Some(s);
            }
            if !alpha.is_empty() {
                spec.dynamics.alphas = alpha.clone();
            }
            if !w_seed.is_empty() {
                spec.dynamics.w_seeds = w_seed.clone();
            }
            if let Some(v) = steps {
                spec.dynamics.steps = *v;
            }
            if let Some(v) = record_every {
                spec.dynamics.record_every = *v;
            }
            if h.is_some() {
                spec.dynamics.h = *h;
            }
        }
        Cmd::Verify { suites, inject_fault } => {
            if !suites.is_empty() {
                spec.verify.suites = suites.clone();
            }
            spec.verify.inject_fault |= inject_fault;
        }
        Cmd::Dsbm { experiment, grid, num_nodes, num_clusters, epochs } => {
            if let Some(e) = experiment {
                spec.dsbm.experiment = *e;
            }
            if !grid.is_empty() {
                spec.dsbm.grid = Some(grid.clone());
            }
            if let Some(n) = num_nodes {
                spec.dsbm.num_nodes = *n;
            }
            if let Some(c) = num_clusters {
                spec.dsbm.num_clusters = *c;
            }
            if let Some(e) = epochs {
                model_mut(&mut spec).max_epochs = *e;
            }
        }
        Cmd::Train { dataset, epochs } => {
            if let Some(d) = dataset {
                spec.source = Some(GraphSource::Directory { path: d.clone(), preprocess: Default::default() });
            }
            if let Some(e) = epochs {
                model_mut(&mut spec).max_epochs = *e;
            }
        }
        Cmd::Gradcheck => {}
    }
    spec.validate()?;
    Ok(spec)
}

fn dispatch(spec: &ExperimentSpec, jobs: usize, started: Instant) -> Result<Status> {
    match spec.command {
        CommandKind::Analyze => commands::analyze::run(spec, started),
        CommandKind::Evolve => commands::evolve::run(spec, jobs, started),
        CommandKind::Verify => commands::verify::run(spec, jobs, started),
        CommandKind::Dsbm => commands::dsbm::run(spec, jobs, started),
        CommandKind::Train => commands::train::run(spec, jobs, started),
        CommandKind::Gradcheck => commands::gradcheck::run(spec, jobs, started),
    }
}

/// Numerical breakdowns exit with 3; every other error is a usage or input problem.
fn error_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<flode_core::Error>(),
            Some(flode_core::Error::NonFinite(_) | flode_core::Error::NoConvergence(_))
        )
    });
    if numerical {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let started = Instant::now();
    let result = build_spec(&cli).and_then(|spec| dispatch(&spec, pool::resolve_jobs(cli.jobs), started));
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::VerificationFailed) => ExitCode::from(1),
        Ok(Status::NumericalFailure) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_errors_map_to_three() {
        let e = anyhow::Error::from(flode_core::Error::NonFinite("x".into())).context("training");
        assert_eq!(error_code(&e), 3);
        assert_eq!(error_code(&anyhow::Error::from(flode_core::Error::NoConvergence("qr"))), 3);
        assert_eq!(error_code(&anyhow::Error::from(flode_core::Error::InvalidArgument("bad".into()))), 2);
        assert_eq!(error_code(&anyhow::anyhow!("no source")), 2);
    }

    #[test]
    fn overrides_apply_on_top_of_config() {
        let cli = Cli::parse_from(["flode", "--seed", "4,5", "--scheme", "schrodinger", "--sign", "plus", "dsbm", "flow_sweep", "--epochs", "9"]);
        let spec = build_spec(&cli).unwrap();
        assert_eq!(spec.seeds, vec![4, 5]);
        assert_eq!(spec.dsbm.experiment, DsbmExperiment::FlowSweep);
        let m = spec.model.unwrap();
        assert_eq!((m.scheme, m.sign, m.max_epochs), (Scheme::Schrodinger, Sign::Plus, 9));
        assert_eq!(m.hidden_channels, dsbm_model_config(0).hidden_channels);
    }

    #[test]
    fn negative_exponents_parse() {
        let cli = Cli::parse_from(["flode", "evolve", "--cycle", "5", "--alpha", "-0.5,1"]);
        assert_eq!(build_spec(&cli).unwrap().dynamics.alphas, vec![-0.5, 1.0]);
    }
}
