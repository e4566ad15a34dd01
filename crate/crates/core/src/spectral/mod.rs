//! Singular value machinery for the normalized adjacency and its fractional powers.

mod analysis;
mod fractional;
mod io;
mod svd;

pub use analysis::{
    cycle_analytic_spectrum, normality_defect, verify_fractional_bound, weak_balance_gap, BoundReport,
    CycleSpectrum,
};
pub use fractional::{fractional_operator, sigma_pow, sigma_pow_derivative, FractionalOperator, SIGMA_DROP_TOL};
pub use io::{factor_cache_key, read_factors, write_factors};
pub use svd::{explained_variance, svd_full, svd_truncated, SnaFactors, OVERSAMPLING, POWER_ITERATIONS};

pub use crate::linalg::{eigen_spectrum, Spectrum};
