//! Synthetic directed block-model data, node splits, and a plain-text
//! dataset layout (`edges.tsv`, `features.csv`, `labels.csv`, `splits.json`).

mod dsbm;
mod io;
mod normalize;
mod splits;

pub use dsbm::{dsbm_generate, DsbmConfig, DSBM_NOISE_DIMS};
pub use io::{export_dataset, load_dataset, Dataset, Preprocess, EDGES_FILE, FEATURES_FILE, LABELS_FILE, SPLITS_FILE};
pub use normalize::{normalize_features, NormalizeMode};
pub use splits::{dsbm_splits, random_splits, Splits, TRAIN_PER_CLASS, VALIDATION_SIZE};
