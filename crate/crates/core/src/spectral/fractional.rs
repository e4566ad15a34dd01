use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::SnaFactors;
use crate::error::{dims, invalid, Result};
use crate::features::FeatureMatrix;

/// Relative threshold below which singular values count as zero.
pub const SIGMA_DROP_TOL: f64 = 1e-12;

/// `σ^α`, with values at or below `drop` treated as exact zeros and mapped to 0.
pub fn sigma_pow(sigma: f64, alpha: f64, drop: f64) -> f64 {
    if sigma <= drop {
        0.0
    } else {
        sigma.powf(alpha)
    }
}

/// `∂σ^α/∂α = σ^α ln σ`, zero wherever [`sigma_pow`] is zero.
pub fn sigma_pow_derivative(sigma: f64, alpha: f64, drop: f64) -> f64 {
    let p = sigma_pow(sigma, alpha, drop);
    if p == 0.0 {
        0.0
    } else {
        p * sigma.ln()
    }
}

/// `S^α = U Σ^α Vᵀ`, applied without forming the dense operator.
#[derive(Debug, Clone)]
pub struct FractionalOperator {
    alpha: f64,
    factors: Arc<SnaFactors>,
    sigma_alpha: DVector<f64>,
}

impl FractionalOperator {
    pub fn new(factors: Arc<SnaFactors>, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(invalid(format!("exponent {alpha} is not finite")));
        }
        let drop = SIGMA_DROP_TOL * factors.sigma_max();
        let sigma_alpha = factors.sigma.map(|s| sigma_pow(s, alpha, drop));
        if alpha <= 0.0 && sigma_alpha.iter().all(|&s| s == 0.0) {
            return Err(invalid("every singular value is below the drop tolerance"));
        }
        Ok(Self { alpha, factors, sigma_alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn factors(&self) -> &Arc<SnaFactors> {
        &self.factors
    }

    pub fn sigma_alpha(&self) -> &DVector<f64> {
        &self.sigma_alpha
    }

    /// Number of singular triples kept after the drop rule.
    pub fn effective_rank(&self) -> usize {
        self.sigma_alpha.iter().filter(|&&s| s != 0.0).count()
    }

    pub fn dim(&self) -> usize {
        self.factors.dim()
    }

    pub(crate) fn apply_real(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = self.factors.v.tr_mul(x);
        for (mut row, &s) in z.row_iter_mut().zip(self.sigma_alpha.iter()) {
            row *= s;
        }
        &self.factors.u * z
    }

    /// `U (Σ^α (Vᵀ x))`.
    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.nrows() != self.dim() {
            return Err(dims(format!("features have {} rows, operator is {}", x.nrows(), self.dim())));
        }
        Ok(x.map_parts(|m| self.apply_real(m)))
    }

    pub fn dense(&self) -> DMatrix<f64> {
        &self.factors.u * DMatrix::from_diagonal(&self.sigma_alpha) * self.factors.v.transpose()
    }
}

/// Convenience constructor mirroring [`FractionalOperator::new`].
pub fn fractional_operator(factors: Arc<SnaFactors>, alpha: f64) -> Result<FractionalOperator> {
    FractionalOperator::new(factors, alpha)
}
