use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FractionalOperator, SnaFactors};
use crate::error::{invalid, Result};
use crate::graph::{DirectedGraph, SnaMatrix};
use crate::linalg::{eigen_spectrum, Spectrum};

/// `‖S Sᵀ − Sᵀ S‖_F`.
pub fn normality_defect(sna: &SnaMatrix) -> f64 {
    let s = sna.matrix();
    (s * s.transpose() - s.transpose() * s).norm()
}

/// Distance from 1 to the nearest eigenvalue of `S`; zero exactly when the
/// graph is weakly balanced.
pub fn weak_balance_gap(sna: &SnaMatrix) -> Result<f64> {
    let spec = eigen_spectrum(sna.matrix(), false)?;
    Ok(spec
        .eigenvalues
        .iter()
        .map(|z| (z - Complex64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Outcome of scanning `|(S^α)_{ij}|` against the distance-decay bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub alpha: f64,
    pub max_ratio: f64,
    /// `(i, j)` attaining `max_ratio`; first in row-major order on ties.
    pub worst_pair: Option<(usize, usize)>,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Largest entry over pairs with no connecting walk.
    pub max_unreachable_entry: f64,
    pub unreachable_pairs: usize,
    pub sigma_max: f64,
    pub sigma_exceeds_one: bool,
}

/// Checks `|(S^α)_{ij}| ≤ (1 + π²/2) (σ₁ / (2(d(i,j) − 1)))^α` for every pair
/// at distance at least 2.
///
/// `d` is the hop distance in the symmetrized graph. `U f(Σ) Vᵀ` is a limit of
/// odd polynomials `(S Sᵀ)^k S`, whose support follows walks that may traverse
/// arcs in either direction, so directed distance does not bound it.
///
/// The argument uses `t^α` as the modulus of continuity of `x^α` on `[0, 1]`,
/// which holds for `0 < α ≤ 1`; for larger exponents the bound can fail.
pub fn verify_fractional_bound(
    graph: &DirectedGraph,
    factors: &Arc<SnaFactors>,
    alpha: f64,
) -> Result<BoundReport> {
    if factors.truncated {
        return Err(invalid("the decay bound applies to the exact operator, not a truncation"));
    }
    if !(alpha > 0.0) {
        return Err(invalid(format!("exponent must be positive, got {alpha}")));
    }
    if graph.num_nodes() != factors.dim() {
        return Err(crate::error::dims("graph and factors disagree on node count"));
    }
    let dense = FractionalOperator::new(factors.clone(), alpha)?.dense();
    let dist = graph.to_undirected().shortest_path_distances();
    let sigma_max = factors.sigma_max();
    let c = 1.0 + PI * PI / 2.0;
    let n = graph.num_nodes();
    let mut report = BoundReport {
        alpha,
        max_ratio: 0.0,
        worst_pair: None,
        pairs_checked: 0,
        violations: 0,
        max_unreachable_entry: 0.0,
        unreachable_pairs: 0,
        sigma_max,
        sigma_exceeds_one: sigma_max > 1.0 + 1e-12,
    };
    for i in 0..n {
        for j in 0..n {
            let entry = dense[(i, j)].abs();
            match dist.get(i, j) {
                None => {
                    report.unreachable_pairs += 1;
                    report.max_unreachable_entry = report.max_unreachable_entry.max(entry);
                }
                Some(d) if d >= 2 => {
                    let bound = c * (sigma_max / (2.0 * (d as f64 - 1.0))).powf(alpha);
                    let ratio = if bound > 0.0 { entry / bound } else if entry > 0.0 { f64::INFINITY } else { 0.0 };
                    report.pairs_checked += 1;
                    if ratio > 1.0 {
                        report.violations += 1;
                    }
                    if ratio > report.max_ratio || report.worst_pair.is_none() {
                        report.max_ratio = ratio;
                        report.worst_pair = Some((i, j));
                    }
                }
                Some(_) => {}
            }
        }
    }
    Ok(report)
}

/// Closed-form eigenpairs of the normalized cycle `C_N`:
/// `λ_j = cos(2πj/N)`, `v_j = N^{-1/2} (ω^{jn})_n` with `ω = e^{2πi/N}`.
#[derive(Debug, Clone)]
pub struct CycleSpectrum {
    pub n: usize,
    /// Indexed by `j`.
    pub eigenvalues: Vec<f64>,
    /// Column `j` is `v_j`.
    pub eigenvectors: DMatrix<Complex64>,
}

impl CycleSpectrum {
    pub fn real_part(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).map(|z| z.re)
    }

    pub fn imag_part(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j).map(|z| z.im)
    }

    /// The eigenvalues as a sorted [`Spectrum`] with matching vectors.
    pub fn spectrum(&self) -> Spectrum {
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&a, &b| self.eigenvalues[a].total_cmp(&self.eigenvalues[b]).then(a.cmp(&b)));
        Spectrum {
            eigenvalues: order.iter().map(|&j| Complex64::new(self.eigenvalues[j], 0.0)).collect(),
            eigenvectors: Some(self.eigenvectors.select_columns(order.iter())),
            symmetric: true,
        }
    }
}

pub fn cycle_analytic_spectrum(n: usize) -> Result<CycleSpectrum> {
    if n < 3 {
        return Err(invalid(format!("cycle needs at least 3 nodes, got {n}")));
    }
    let nf = n as f64;
    let eigenvalues = (0..n).map(|j| (2.0 * PI * j as f64 / nf).cos()).collect();
    let scale = 1.0 / nf.sqrt();
    let eigenvectors = DMatrix::from_fn(n, n, |k, j| {
        // Reduce the exponent mod n so large products stay exact.
        let e = (j * k) % n;
        Complex64::from_polar(scale, 2.0 * PI * e as f64 / nf)
    });
    Ok(CycleSpectrum { n, eigenvalues, eigenvectors })
}
