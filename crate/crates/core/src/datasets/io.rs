use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::normalize::{normalize_features, NormalizeMode};
use super::splits::Splits;
use crate::error::{dims, invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{largest_connected_component, load_edge_list, ComponentMode, DirectedGraph};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const SPLITS_FILE: &str = "splits.json";

/// A graph with node features, optional labels and splits, and the list of
/// preprocessing steps applied to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: DirectedGraph,
    pub features: FeatureMatrix,
    pub labels: Option<Vec<usize>>,
    pub splits: Option<Splits>,
    pub provenance: Vec<String>,
}

impl Dataset {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.as_ref().and_then(|l| l.iter().max()).map_or(0, |m| m + 1)
    }
}

/// Preprocessing chain applied by [`load_dataset`], in field order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Preprocess {
    /// Keep only the largest weakly connected component.
    pub lcc: bool,
    pub to_undirected: bool,
    pub self_loops: bool,
    pub normalize: Option<NormalizeMode>,
}

impl Default for Preprocess {
    fn default() -> Self {
        Self { lcc: false, to_undirected: false, self_loops: false, normalize: Some(NormalizeMode::RowL2) }
    }
}

fn parse_features(text: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| Error::Parse { line: lineno + 1, msg: format!("not a number: {f:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let fm = FeatureMatrix::from_rows(&rows)?;
    Ok(fm.re().clone())
}

fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse().map_err(|_| Error::Parse { line: lineno + 1, msg: format!("not a class index: {line:?}") })?);
    }
    Ok(out)
}

fn degree_features(g: &DirectedGraph) -> DMatrix<f64> {
    let d = g.degrees();
    DMatrix::from_fn(g.num_nodes(), 2, |i, j| if j == 0 { d.in_degrees[i] as f64 } else { d.out_degrees[i] as f64 })
}

/// Reads `edges.tsv` and, when present, `features.csv` (one comma-separated
/// row per node), `labels.csv` (one class per line) and `splits.json`.
/// Without a feature file, in- and out-degrees are used as features.
pub fn load_dataset(dir: impl AsRef<Path>, pre: &Preprocess) -> Result<Dataset> {
    let dir = dir.as_ref();
    let read_opt = |name: &str| -> Result<Option<String>> {
        let p = dir.join(name);
        if p.exists() {
            Ok(Some(fs::read_to_string(p)?))
        } else {
            Ok(None)
        }
    };
    let edges = read_opt(EDGES_FILE)?.ok_or_else(|| invalid(format!("{} has no {EDGES_FILE}", dir.display())))?;
    let features = read_opt(FEATURES_FILE)?.map(|t| parse_features(&t)).transpose()?;
    let labels = read_opt(LABELS_FILE)?.map(|t| parse_labels(&t)).transpose()?;
    let splits: Option<Splits> = read_opt(SPLITS_FILE)?.map(|t| serde_json::from_str(&t)).transpose()?;
    let n = match (&features, &labels) {
        (Some(f), Some(l)) if f.nrows() != l.len() => {
            return Err(dims(format!("{} feature rows but {} labels", f.nrows(), l.len())));
        }
        (Some(f), _) => Some(f.nrows()),
        (None, Some(l)) => Some(l.len()),
        (None, None) => None,
    };
    let mut graph = load_edge_list(&edges, n)?;
    if let Some(l) = &labels {
        graph = graph.with_labels(l.clone())?;
    }
    if let Some(s) = &splits {
        s.validate(graph.num_nodes())?;
    }
    let mut provenance = vec![format!("loaded {} nodes, {} edges from {}", graph.num_nodes(), graph.num_edges(), dir.display())];
    let mut x = match features {
        Some(f) => f,
        None => {
            provenance.push("features: in/out degree".into());
            degree_features(&graph)
        }
    };
    let mut labels = labels;
    let mut splits = splits;
    if pre.lcc {
        let (sub, keep) = largest_connected_component(&graph, ComponentMode::Weak);
        let mut new_index = vec![usize::MAX; graph.num_nodes()];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        x = x.select_rows(keep.iter());
        labels = labels.map(|l| keep.iter().map(|&i| l[i]).collect());
        splits = splits.map(|s| {
            let remap = |v: Vec<usize>| v.into_iter().filter_map(|i| (new_index[i] != usize::MAX).then(|| new_index[i])).collect();
            Splits { train: remap(s.train), val: remap(s.val), test: remap(s.test) }
        });
        provenance.push(format!("largest weakly connected component: kept {} of {} nodes", keep.len(), graph.num_nodes()));
        graph = sub;
    }
    if pre.to_undirected {
        graph = graph.to_undirected();
        provenance.push("symmetrized edges".into());
    }
    if pre.self_loops {
        graph = graph.add_self_loops();
        provenance.push("added self-loops".into());
    }
    let mut features = FeatureMatrix::real(x);
    if let Some(mode) = pre.normalize {
        features = normalize_features(&features, mode);
        provenance.push(format!("normalized features: {}", serde_json::to_value(mode)?.as_str().unwrap_or("?")));
    }
    for p in &provenance {
        log::info!("{p}");
    }
    Ok(Dataset { graph, features, labels, splits, provenance })
}

/// Writes the layout read by [`load_dataset`]; only real features are supported.
pub fn export_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    if !ds.features.is_real_only() {
        return Err(invalid("complex features cannot be exported"));
    }
    fs::create_dir_all(dir)?;
    let mut edges = String::new();
    for &(s, d) in ds.graph.edges() {
        edges.push_str(&format!("{s}\t{d}\n"));
    }
    fs::write(dir.join(EDGES_FILE), edges)?;
    let mut feats = String::new();
    for row in ds.features.re().row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        feats.push_str(&cells.join(","));
        feats.push('\n');
    }
    fs::write(dir.join(FEATURES_FILE), feats)?;
    if let Some(l) = &ds.labels {
        let text: String = l.iter().map(|c| format!("{c}\n")).collect();
        fs::write(dir.join(LABELS_FILE), text)?;
    }
    if let Some(s) = &ds.splits {
        fs::write(dir.join(SPLITS_FILE), serde_json::to_string_pretty(s)?)?;
    }
    Ok(())
}
