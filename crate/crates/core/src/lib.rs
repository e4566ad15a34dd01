//! Fractional graph Laplacian dynamics on directed graphs.
//!
//! The crate builds the symmetrically normalized adjacency of a directed
//! graph, takes fractional powers through its singular value decomposition,
//! integrates heat and Schrödinger feature dynamics, predicts which graph
//! frequency dominates, and trains a node classifier built from these pieces.

pub mod datasets;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod features;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
pub use features::FeatureMatrix;
pub use graph::{build_sna, DegreeInfo, DegreePolicy, DirectedGraph, SnaMatrix};
pub use spectral::{FractionalOperator, SnaFactors, Spectrum};
pub use datasets::{Dataset, DsbmConfig, Splits};
pub use dynamics::{ChannelMixer, Scheme, Sign};
pub use model::{FlodeModel, ModelConfig};
