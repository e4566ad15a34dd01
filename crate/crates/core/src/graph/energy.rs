use nalgebra::DMatrix;

use super::{DirectedGraph, SnaMatrix};
use crate::error::{dims, invalid, Result};
use crate::features::FeatureMatrix;

fn check_rows(n: usize, x: &FeatureMatrix) -> Result<()> {
    if x.nrows() != n {
        return Err(dims(format!("features have {} rows, graph has {n} nodes", x.nrows())));
    }
    Ok(())
}

/// Sum over arcs `j -> i` of `‖x_i/√d_i^in − x_j/√d_j^out‖² / 4`.
pub fn dirichlet_energy(graph: &DirectedGraph, x: &FeatureMatrix) -> Result<f64> {
    check_rows(graph.num_nodes(), x)?;
    let deg = graph.degrees();
    let zero;
    let (re, im) = match x.im() {
        Some(im) => (x.re(), im),
        None => {
            zero = DMatrix::zeros(0, 0);
            (x.re(), &zero)
        }
    };
    let complex = x.im().is_some();
    let mut total = 0.0;
    for &(j, i) in graph.edges() {
        let ci = 1.0 / (deg.in_degrees[i] as f64).sqrt();
        let cj = 1.0 / (deg.out_degrees[j] as f64).sqrt();
        for c in 0..x.ncols() {
            let dr = re[(i, c)] * ci - re[(j, c)] * cj;
            total += dr * dr;
            if complex {
                let di = im[(i, c)] * ci - im[(j, c)] * cj;
                total += di * di;
            }
        }
    }
    Ok(total / 4.0)
}

/// `Re tr(x^H (I − S) x) / 2`. Agrees with [`dirichlet_energy`] whenever every
/// node has nonzero in- and out-degree.
pub fn dirichlet_energy_trace(sna: &SnaMatrix, x: &FeatureMatrix) -> Result<f64> {
    check_rows(sna.dim(), x)?;
    let s = sna.matrix();
    // Re tr(x^H S x) = <re, S re> + <im, S im> for real S.
    let mut quad = x.re().norm_squared() - x.re().dot(&(s * x.re()));
    if let Some(im) = x.im() {
        quad += im.norm_squared() - im.dot(&(s * im));
    }
    Ok(quad / 2.0)
}

/// Trace-form energy of `x / ‖x‖_F`.
pub fn normalized_dirichlet_energy(sna: &SnaMatrix, x: &FeatureMatrix) -> Result<f64> {
    let norm = x.norm();
    if norm == 0.0 {
        return Err(invalid("normalized energy of a zero feature matrix"));
    }
    dirichlet_energy_trace(sna, &x.scaled(1.0 / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_sna, cycle_graph, path_graph, DegreePolicy};

    #[test]
    fn sqrt_degree_vector_has_zero_energy() {
        let g = path_graph(5).unwrap();
        let d = g.degrees();
        let x = DMatrix::from_iterator(5, 1, d.in_degrees.iter().map(|&k| (k as f64).sqrt()));
        let e = dirichlet_energy(&g, &FeatureMatrix::real(x.clone())).unwrap();
        assert!(e.abs() < 1e-15);
        let s = build_sna(&g, DegreePolicy::Error).unwrap();
        assert!(normalized_dirichlet_energy(&s, &FeatureMatrix::real(x)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn alternating_vector_on_c8() {
        let g = cycle_graph(8).unwrap();
        let s = build_sna(&g, DegreePolicy::Error).unwrap();
        let v = DMatrix::from_fn(8, 1, |n, _| if n % 2 == 0 { 1.0 } else { -1.0 } / 8f64.sqrt());
        let x = FeatureMatrix::real(v);
        assert!((dirichlet_energy(&g, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!((dirichlet_energy_trace(&s, &x).unwrap() - 1.0).abs() < 1e-14);
        assert!((normalized_dirichlet_energy(&s, &x).unwrap() - 1.0).abs() < 1e-14);
        let scaled = x.scaled(7.0);
        let a = normalized_dirichlet_energy(&s, &scaled).unwrap();
        let b = normalized_dirichlet_energy(&s, &x).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn zero_and_mismatch() {
        let g = cycle_graph(4).unwrap();
        let s = build_sna(&g, DegreePolicy::Error).unwrap();
        assert_eq!(dirichlet_energy_trace(&s, &FeatureMatrix::zeros(4, 2)).unwrap(), 0.0);
        assert!(normalized_dirichlet_energy(&s, &FeatureMatrix::zeros(4, 2)).is_err());
        assert!(dirichlet_energy(&g, &FeatureMatrix::zeros(3, 1)).is_err());
    }
}
