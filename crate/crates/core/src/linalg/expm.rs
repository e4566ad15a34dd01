use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dims, Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if !a.is_square() {
        return Err(dims(format!("expm needs a square matrix, got {:?}", a.shape())));
    }
    let n = a.nrows();
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::NonFinite("expm input".into()));
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * Complex64::new(0.5f64.powi(s), 0.0);
    let c = |k: usize| Complex64::new(PADE13[k], 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9))
        + &a6 * c(7)
        + &a4 * c(5)
        + &a2 * c(3)
        + &id * c(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8))
        + &a6 * c(6)
        + &a4 * c(4)
        + &a2 * c(2)
        + &id * c(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or(Error::NoConvergence("Padé denominator solve"))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
