use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ChannelMixer, Scheme, Sign};
use crate::error::{dims, invalid, Result};
use crate::features::FeatureMatrix;
use crate::linalg::expm;
use crate::spectral::FractionalOperator;

/// Largest `N·K` accepted by [`closed_form_solution`].
pub const MAX_ORACLE_SIZE: usize = 4096;

/// Exact solution at time `t` of the continuous heat equation
/// `x' = −S^α x W` or Schrödinger equation `x' = s i S^α x W`.
///
/// Since `W` is diagonal, `W ⊗ S^α` is block diagonal and each channel
/// evolves under its own `N×N` exponential.
pub fn closed_form_solution(
    x0: &FeatureMatrix,
    op: &FractionalOperator,
    w: &ChannelMixer,
    t: f64,
    sign: Sign,
) -> Result<FeatureMatrix> {
    w.validate()?;
    let (n, k) = (x0.nrows(), x0.ncols());
    if n != op.dim() || k != w.channels() {
        return Err(dims(format!(
            "features {n}x{k} do not match operator size {} and {} channels",
            op.dim(),
            w.channels()
        )));
    }
    if n * k > MAX_ORACLE_SIZE {
        return Err(invalid(format!("N*K = {} exceeds the oracle cap {MAX_ORACLE_SIZE}", n * k)));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(invalid("time must be finite and nonnegative"));
    }
    let m = op.dense().map(|v| Complex64::new(v, 0.0));
    let coeff = match w.scheme {
        Scheme::Heat => Complex64::new(-t, 0.0),
        Scheme::Schrodinger => Complex64::new(0.0, sign.value() * t),
    };
    let x = x0.to_complex();
    let mut out = DMatrix::<Complex64>::zeros(n, k);
    for c in 0..k {
        let e = expm(&(&m * (coeff * w.diag_w[c])))?;
        let col: DVector<Complex64> = &e * x.column(c);
        out.set_column(c, &col);
    }
    if w.scheme == Scheme::Heat && x0.is_real_only() {
        Ok(FeatureMatrix::real(out.map(|z| z.re)))
    } else {
        FeatureMatrix::complex(out.map(|z| z.re), out.map(|z| z.im))
    }
}
