use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::DirectedGraph;
use crate::error::{Error, Result};

/// Treatment of nodes whose in- or out-degree is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreePolicy {
    /// Refuse graphs with any zero degree.
    #[default]
    Error,
    /// Treat `1/sqrt(0)` as zero.
    PseudoInverse,
    /// Add a self-loop at every node before normalizing.
    SelfLoop,
}

impl DegreePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreePolicy::Error => "error",
            DegreePolicy::PseudoInverse => "pseudo_inverse",
            DegreePolicy::SelfLoop => "self_loop",
        }
    }
}

/// Dense `S = D_in^{-1/2} A D_out^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnaMatrix {
    matrix: DMatrix<f64>,
    policy: DegreePolicy,
}

impl SnaMatrix {
    /// Wraps an arbitrary square matrix; used for fault injection and oracles.
    pub fn from_matrix(matrix: DMatrix<f64>, policy: DegreePolicy) -> Result<Self> {
        if !matrix.is_square() {
            return Err(crate::error::dims(format!("operator must be square, got {:?}", matrix.shape())));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("operator entry".into()));
        }
        Ok(Self { matrix, policy })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn policy(&self) -> DegreePolicy {
        self.policy
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_symmetric(&self) -> bool {
        self.matrix == self.matrix.transpose()
    }
}

pub fn build_sna(graph: &DirectedGraph, policy: DegreePolicy) -> Result<SnaMatrix> {
    let looped;
    let g = if policy == DegreePolicy::SelfLoop {
        looped = graph.add_self_loops();
        &looped
    } else {
        graph
    };
    let deg = g.degrees();
    if policy == DegreePolicy::Error {
        for (node, (&din, &dout)) in deg.in_degrees.iter().zip(&deg.out_degrees).enumerate() {
            if din == 0 {
                return Err(Error::ZeroDegree { node, kind: "in" });
            }
            if dout == 0 {
                return Err(Error::ZeroDegree { node, kind: "out" });
            }
        }
    }
    let n = g.num_nodes();
    let mut s = DMatrix::zeros(n, n);
    for &(src, dst) in g.edges() {
        // Endpoints of an arc always have nonzero degree; the product form
        // keeps S exactly symmetric for symmetric arc sets.
        let prod = (deg.in_degrees[dst] * deg.out_degrees[src]) as f64;
        s[(dst, src)] = 1.0 / prod.sqrt();
    }
    Ok(SnaMatrix { matrix: s, policy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{cycle_graph, directed_cycle};

    #[test]
    fn cycle_is_half_adjacency() {
        let g = cycle_graph(8).unwrap();
        let s = build_sna(&g, DegreePolicy::Error).unwrap();
        assert_eq!(s.matrix(), &(g.adjacency() * 0.5));
    }

    #[test]
    fn single_edge_pseudo_inverse() {
        let g = DirectedGraph::new(2, [(0, 1)]).unwrap();
        assert!(matches!(build_sna(&g, DegreePolicy::Error), Err(Error::ZeroDegree { .. })));
        let s = build_sna(&g, DegreePolicy::PseudoInverse).unwrap();
        assert_eq!(s.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn directed_triangle_is_permutation() {
        let g = directed_cycle(3).unwrap();
        let s = build_sna(&g, DegreePolicy::Error).unwrap();
        assert_eq!(s.matrix(), &g.adjacency());
    }

    #[test]
    fn self_loop_policy_pattern() {
        let g = DirectedGraph::new(3, [(0, 1)]).unwrap();
        let s = build_sna(&g, DegreePolicy::SelfLoop).unwrap();
        let pattern = (g.adjacency() + DMatrix::identity(3, 3)).map(|v| v != 0.0);
        assert_eq!(s.matrix().map(|v| v != 0.0), pattern);
        // node 1: in-degree 2 (0 and itself), node 0: out-degree 2
        assert!((s.matrix()[(1, 0)] - 0.5).abs() < 1e-15);
    }
}
