use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::features::FeatureMatrix;
use crate::graph::DirectedGraph;

/// Number of random feature columns appended to the degree features.
pub const DSBM_NOISE_DIMS: usize = 8;

/// Directed stochastic block model with contiguous equal-size clusters.
///
/// Pairs in clusters `i ≠ j` are linked with probability `alpha_inter`,
/// pairs inside a cluster with `alpha_intra`. An edge between clusters
/// `i < j` points from `i` to `j` with probability `1 − beta_param`, so the
/// orientation probabilities satisfy `β_{i,j} + β_{j,i} = 1`; edges inside a
/// cluster point either way with probability `beta_intra = 0.5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsbmConfig {
    pub num_nodes: usize,
    pub num_clusters: usize,
    pub alpha_intra: f64,
    pub alpha_inter: f64,
    pub beta_intra: f64,
    pub beta_param: f64,
    pub seed: u64,
}

impl Default for DsbmConfig {
    fn default() -> Self {
        Self {
            num_nodes: 2500,
            num_clusters: 5,
            alpha_intra: 0.5,
            alpha_inter: 0.1,
            beta_intra: 0.5,
            beta_param: 0.05,
            seed: 0,
        }
    }
}

impl DsbmConfig {
    /// Varying inter-cluster density with strongly ordered flow (`β* = 0.05`).
    pub fn density(alpha_inter: f64, seed: u64) -> Self {
        Self { alpha_inter, beta_param: 0.05, seed, ..Self::default() }
    }

    /// Varying flow informativeness with every pair linked at probability
    /// 0.1, so that edge direction is the only cluster signal in the graph.
    pub fn flow(beta_param: f64, seed: u64) -> Self {
        Self { alpha_intra: 0.1, alpha_inter: 0.1, beta_param, seed, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_clusters == 0 || self.num_nodes == 0 || self.num_nodes % self.num_clusters != 0 {
            return Err(invalid(format!(
                "{} nodes cannot be split into {} equal clusters",
                self.num_nodes, self.num_clusters
            )));
        }
        for (name, p) in [("alpha_intra", self.alpha_intra), ("alpha_inter", self.alpha_inter), ("beta_intra", self.beta_intra)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} = {p} is not a probability")));
            }
        }
        if !(self.beta_param > 0.0 && self.beta_param <= 0.5) {
            return Err(invalid(format!("beta_param = {} must lie in (0, 0.5]", self.beta_param)));
        }
        Ok(())
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        node / (self.num_nodes / self.num_clusters)
    }
}

fn standardize_column(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| if sd > 0.0 { (x - mean) / sd } else { x - mean }).collect()
}

/// Samples a graph, its cluster labels and node features: standardized
/// in- and out-degree followed by [`DSBM_NOISE_DIMS`] standard normal columns.
pub fn dsbm_generate(config: &DsbmConfig) -> Result<(DirectedGraph, Vec<usize>, FeatureMatrix)> {
    config.validate()?;
    let n = config.num_nodes;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let labels: Vec<usize> = (0..n).map(|v| config.cluster_of(v)).collect();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (cu, cv) = (labels[u], labels[v]);
            let p = if cu == cv { config.alpha_intra } else { config.alpha_inter };
            if rng.random::<f64>() >= p {
                continue;
            }
            // u < v, so cu <= cv: u -> v is the lower-to-higher direction.
            let forward = if cu == cv { config.beta_intra } else { 1.0 - config.beta_param };
            arcs.push(if rng.random::<f64>() < forward { (u, v) } else { (v, u) });
        }
    }
    let graph = DirectedGraph::new(n, arcs)?.with_labels(labels.clone())?;
    let deg = graph.degrees();
    let indeg = standardize_column(&deg.in_degrees.iter().map(|&d| d as f64).collect::<Vec<_>>());
    let outdeg = standardize_column(&deg.out_degrees.iter().map(|&d| d as f64).collect::<Vec<_>>());
    let mut x = DMatrix::zeros(n, 2 + DSBM_NOISE_DIMS);
    for i in 0..n {
        x[(i, 0)] = indeg[i];
        x[(i, 1)] = outdeg[i];
        for j in 0..DSBM_NOISE_DIMS {
            x[(i, 2 + j)] = rng.sample(StandardNormal);
        }
    }
    Ok((graph, labels, FeatureMatrix::real(x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_counts(g: &DirectedGraph, cfg: &DsbmConfig) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let c = cfg.num_clusters;
        let mut undirected = vec![vec![0; c]; c];
        let mut oriented = vec![vec![0; c]; c];
        for &(s, d) in g.edges() {
            let (cs, cd) = (cfg.cluster_of(s), cfg.cluster_of(d));
            oriented[cs][cd] += 1;
            undirected[cs.min(cd)][cs.max(cd)] += 1;
        }
        (undirected, oriented)
    }

    #[test]
    fn no_inter_edges_at_zero_density() {
        let cfg = DsbmConfig { num_nodes: 200, num_clusters: 2, alpha_inter: 0.0, ..DsbmConfig::default() };
        let (g, labels, x) = dsbm_generate(&cfg).unwrap();
        assert!(g.edges().iter().all(|&(s, d)| labels[s] == labels[d]));
        let pairs = 2.0 * (100.0 * 99.0 / 2.0);
        let density = g.num_edges() as f64 / pairs;
        assert!((density - 0.5).abs() < 0.03);
        assert_eq!(x.ncols(), 10);
    }

    #[test]
    fn edge_and_orientation_frequencies() {
        for cfg in [DsbmConfig::flow(0.5, 3), DsbmConfig::density(0.1, 4)] {
            let (g, labels, _) = dsbm_generate(&cfg).unwrap();
            assert_eq!(labels.iter().filter(|&&l| l == 0).count(), 500);
            let (und, ori) = pair_counts(&g, &cfg);
            for i in 0..5 {
                for j in i..5 {
                    let (pairs, p) = if i == j { (500.0 * 499.0 / 2.0, cfg.alpha_intra) } else { (250000.0, cfg.alpha_inter) };
                    let sd = (pairs * p * (1.0 - p)).sqrt();
                    assert!((und[i][j] as f64 - pairs * p).abs() < 4.0 * sd, "pair {i},{j}");
                    if i < j {
                        let m = und[i][j] as f64;
                        let q = 1.0 - cfg.beta_param;
                        let sd = (m * q * (1.0 - q)).sqrt();
                        assert!((ori[i][j] as f64 - m * q).abs() < 4.0 * sd);
                        assert_eq!(ori[i][j] + ori[j][i], und[i][j]);
                        if cfg.beta_param == 0.5 {
                            assert!((ori[i][j] as f64 / m - 0.5).abs() < 0.02);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reproducible_and_validated() {
        let cfg = DsbmConfig { num_nodes: 100, num_clusters: 5, ..DsbmConfig::default() };
        let (a, _, xa) = dsbm_generate(&cfg).unwrap();
        let (b, _, xb) = dsbm_generate(&cfg).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(xa, xb);
        assert!(dsbm_generate(&DsbmConfig { num_nodes: 101, ..cfg.clone() }).is_err());
        assert!(dsbm_generate(&DsbmConfig { beta_param: 0.0, ..cfg }).is_err());
    }
}
