use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ChannelMixer, Scheme, Sign};
use crate::error::{dims, invalid, Error, Result};
use crate::features::FeatureMatrix;
use crate::graph::{normalized_dirichlet_energy, SnaMatrix};
use crate::spectral::FractionalOperator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub step: usize,
    /// Energy of the unnormalized state; may overflow for growing solutions.
    pub raw_energy: f64,
    pub normalized_energy: f64,
    /// Frobenius norm of the unnormalized state.
    pub feature_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrajectory {
    pub steps: usize,
    pub h: f64,
    pub records: Vec<EnergyRecord>,
}

impl EnergyTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,h,raw_energy,normalized_energy,feature_norm\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.step, self.h, r.raw_energy, r.normalized_energy, r.feature_norm
            );
        }
        out
    }

    pub fn normalized_energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.normalized_energy).collect()
    }

    pub fn last(&self) -> Option<&EnergyRecord> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveParams {
    pub h: f64,
    pub steps: usize,
    pub record_every: usize,
    #[serde(default)]
    pub sign: Sign,
}

fn check_step(x: &FeatureMatrix, op: &FractionalOperator, w: &ChannelMixer, h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("step size must be positive, got {h}")));
    }
    if x.nrows() != op.dim() {
        return Err(dims(format!("features have {} rows, operator is {}", x.nrows(), op.dim())));
    }
    if x.ncols() != w.channels() {
        return Err(dims(format!("features have {} channels, mixer has {}", x.ncols(), w.channels())));
    }
    Ok(())
}

fn scale_columns(m: &mut DMatrix<f64>, f: impl Fn(usize) -> f64) {
    for (c, mut col) in m.column_iter_mut().enumerate() {
        col *= f(c);
    }
}

/// `x − h S^α x W`.
pub fn euler_heat_step(x: &FeatureMatrix, op: &FractionalOperator, w: &ChannelMixer, h: f64) -> Result<FeatureMatrix> {
    check_step(x, op, w, h)?;
    if w.scheme != Scheme::Heat {
        return Err(invalid("heat step needs a heat mixer"));
    }
    let weights = w.real_parts();
    Ok(x.map_parts(|part| {
        let mut y = op.apply_real(part);
        scale_columns(&mut y, |c| h * weights[c]);
        part - y
    }))
}

/// `x + s i h S^α x W` with `s` given by `sign`; always returns complex features.
pub fn euler_schrodinger_step(
    x: &FeatureMatrix,
    op: &FractionalOperator,
    w: &ChannelMixer,
    h: f64,
    sign: Sign,
) -> Result<FeatureMatrix> {
    check_step(x, op, w, h)?;
    let s = sign.value() * h;
    let yr = op.apply_real(x.re());
    let yi = x.im().map(|im| op.apply_real(im));
    let (n, k) = (x.nrows(), x.ncols());
    let mut re = x.re().clone();
    let mut im = x.im().cloned().unwrap_or_else(|| DMatrix::zeros(n, k));
    for c in 0..k {
        let (a, b) = (w.diag_w[c].re, w.diag_w[c].im);
        for i in 0..n {
            let (pr, pi) = (yr[(i, c)], yi.as_ref().map_or(0.0, |m| m[(i, c)]));
            let zr = pr * a - pi * b;
            let zi = pr * b + pi * a;
            // i z = -zi + i zr
            re[(i, c)] -= s * zi;
            im[(i, c)] += s * zr;
        }
    }
    FeatureMatrix::complex(re, im)
}

fn step(x: &FeatureMatrix, op: &FractionalOperator, w: &ChannelMixer, h: f64, sign: Sign) -> Result<FeatureMatrix> {
    match w.scheme {
        Scheme::Heat => euler_heat_step(x, op, w, h),
        Scheme::Schrodinger => euler_schrodinger_step(x, op, w, h, sign),
    }
}

/// Plain explicit Euler integration without renormalization.
pub fn integrate(
    x0: &FeatureMatrix,
    op: &FractionalOperator,
    w: &ChannelMixer,
    h: f64,
    steps: usize,
    sign: Sign,
) -> Result<FeatureMatrix> {
    let mut x = x0.clone();
    for k in 1..=steps {
        x = step(&x, op, w, h, sign)?;
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("features at step {k}")));
        }
    }
    Ok(x)
}

fn record(sna: &SnaMatrix, x: &FeatureMatrix, step: usize, log_norm: f64) -> Result<EnergyRecord> {
    let e = normalized_dirichlet_energy(sna, x)?;
    Ok(EnergyRecord {
        step,
        raw_energy: e * (2.0 * log_norm).exp(),
        normalized_energy: e,
        feature_norm: log_norm.exp(),
    })
}

/// Iterates the Euler scheme, rescaling the state to unit norm after every
/// step and recording normalized energy every `record_every` steps (plus the
/// initial and final state). Returns the final state at its true scale when
/// representable, otherwise the unit-norm state.
pub fn evolve(
    sna: &SnaMatrix,
    op: &FractionalOperator,
    w: &ChannelMixer,
    x0: &FeatureMatrix,
    params: &EvolveParams,
) -> Result<(FeatureMatrix, EnergyTrajectory)> {
    if params.steps == 0 || params.record_every == 0 {
        return Err(invalid("steps and record_every must be positive"));
    }
    let n0 = x0.norm();
    if n0 == 0.0 || !n0.is_finite() {
        return Err(invalid("initial features must be finite and nonzero"));
    }
    let mut x = x0.scaled(1.0 / n0);
    let mut log_norm = n0.ln();
    let mut records = vec![record(sna, &x, 0, log_norm)?];
    for k in 1..=params.steps {
        x = step(&x, op, w, params.h, params.sign)?;
        let nk = x.norm();
        if !nk.is_finite() || nk == 0.0 {
            return Err(Error::NonFinite(format!("features at step {k} (norm {nk})")));
        }
        x = x.scaled(1.0 / nk);
        log_norm += nk.ln();
        if k % params.record_every == 0 || k == params.steps {
            records.push(record(sna, &x, k, log_norm)?);
        }
    }
    let scale = log_norm.exp();
    let out = if scale.is_finite() && scale > 0.0 { x.scaled(scale) } else { x };
    Ok((out, EnergyTrajectory { steps: params.steps, h: params.h, records }))
}

/// Vanilla graph convolution `x ← S x W_t`, cycling through `ws`, with
/// normalized energy recorded after every layer.
pub fn gcn_evolve(x0: &FeatureMatrix, sna: &SnaMatrix, ws: &[DMatrix<f64>], layers: usize) -> Result<EnergyTrajectory> {
    if ws.is_empty() {
        return Err(invalid("at least one layer weight is required"));
    }
    let k = x0.ncols();
    if ws.iter().any(|w| w.shape() != (k, k)) {
        return Err(dims(format!("layer weights must be {k}x{k}")));
    }
    if x0.nrows() != sna.dim() {
        return Err(dims("feature rows differ from operator size"));
    }
    let n0 = x0.norm();
    if n0 == 0.0 {
        return Err(invalid("initial features must be nonzero"));
    }
    let s = sna.matrix();
    let mut x = x0.scaled(1.0 / n0);
    let mut log_norm = n0.ln();
    let mut records = vec![record(sna, &x, 0, log_norm)?];
    for t in 0..layers {
        let w = &ws[t % ws.len()];
        x = x.map_parts(|m| s * m * w);
        let nt = x.norm();
        if !nt.is_finite() || nt == 0.0 {
            return Err(Error::NonFinite(format!("features after layer {}", t + 1)));
        }
        x = x.scaled(1.0 / nt);
        log_norm += nt.ln();
        records.push(record(sna, &x, t + 1, log_norm)?);
    }
    Ok(EnergyTrajectory { steps: layers, h: 1.0, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_sna, cycle_graph, erdos_renyi, DegreePolicy};
    use crate::spectral::{cycle_analytic_spectrum, svd_full};
    use num_complex::Complex64;
    use std::sync::Arc;

    fn c8_operator(alpha: f64) -> (SnaMatrix, FractionalOperator) {
        let s = build_sna(&cycle_graph(8).unwrap(), DegreePolicy::Error).unwrap();
        let f = Arc::new(svd_full(&s).unwrap());
        (s, FractionalOperator::new(f, alpha).unwrap())
    }

    fn det_matrix(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        DMatrix::from_fn(n, k, |i, j| ((i * 31 + j * 17 + seed as usize * 7) % 13) as f64 / 6.0 - 1.0)
    }

    #[test]
    fn zero_mixer_is_identity() {
        let (_, op) = c8_operator(0.7);
        let x = FeatureMatrix::real(det_matrix(8, 2, 1));
        let heat = euler_heat_step(&x, &op, &ChannelMixer::heat(vec![0.0, 0.0]), 0.3).unwrap();
        assert_eq!(heat, x);
        let sch = ChannelMixer::schrodinger(vec![Complex64::new(0.0, 0.0); 2]);
        let y = euler_schrodinger_step(&x, &op, &sch, 0.3, Sign::Minus).unwrap();
        assert_eq!(y.re(), x.re());
        assert!(y.im().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigenvector_is_scaled() {
        let (_, op) = c8_operator(1.0);
        let cyc = cycle_analytic_spectrum(8).unwrap();
        let (h, w) = (0.1, 1.7);
        for j in 0..8 {
            let v = cyc.real_part(j);
            let x = FeatureMatrix::real(DMatrix::from_column_slice(8, 1, v.as_slice()));
            let y = euler_heat_step(&x, &op, &ChannelMixer::heat(vec![w]), h).unwrap();
            let want = x.scaled(1.0 - h * w * cyc.eigenvalues[j]);
            assert!(y.max_abs_diff(&want) < 1e-12);
        }
    }

    #[test]
    fn steps_match_dense_formula() {
        let g = erdos_renyi(9, 0.4, true, 5).unwrap();
        let s = build_sna(&g, DegreePolicy::PseudoInverse).unwrap();
        let op = FractionalOperator::new(Arc::new(svd_full(&s).unwrap()), 0.6).unwrap();
        let dense = op.dense().map(|v| Complex64::new(v, 0.0));
        let x = FeatureMatrix::complex(det_matrix(9, 3, 2), det_matrix(9, 3, 3)).unwrap();
        let heat = ChannelMixer::heat(vec![0.5, -1.0, 2.0]);
        let wd = |m: &ChannelMixer| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(m.diag_w.clone()));
        let h = 0.05;
        let xc = x.to_complex();
        let want = &xc - &dense * &xc * wd(&heat) * Complex64::new(h, 0.0);
        let got = euler_heat_step(&x, &op, &heat, h).unwrap();
        assert!(got.max_abs_diff(&FeatureMatrix::from_complex(&want)) < 1e-12);
        let sch = ChannelMixer::schrodinger(vec![Complex64::new(0.5, 1.0), Complex64::new(-1.0, 0.3), Complex64::new(0.0, -2.0)]);
        for sign in [Sign::Plus, Sign::Minus] {
            let coef = Complex64::new(0.0, sign.value() * h);
            let want = &xc + &dense * &xc * wd(&sch) * coef;
            let got = euler_schrodinger_step(&x, &op, &sch, h, sign).unwrap();
            assert!(got.max_abs_diff(&FeatureMatrix::from_complex(&want)) < 1e-12);
        }
    }

    #[test]
    fn schrodinger_step_preserves_norm_to_first_order() {
        let (_, op) = c8_operator(1.0);
        let x = FeatureMatrix::real(det_matrix(8, 2, 4));
        let w = ChannelMixer::schrodinger(vec![Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.0)]);
        let drift = |h: f64| {
            let y = euler_schrodinger_step(&x, &op, &w, h, Sign::Minus).unwrap();
            y.norm().powi(2) - x.norm().powi(2)
        };
        let (d1, d2) = (drift(1e-2), drift(5e-3));
        assert!(d1 > 0.0);
        let ratio = d1 / d2;
        assert!((ratio - 4.0).abs() < 1e-6, "quadratic drift expected, ratio {ratio}");
    }

    #[test]
    fn evolve_single_step_and_records() {
        let (s, op) = c8_operator(1.0);
        let x0 = FeatureMatrix::real(det_matrix(8, 2, 5));
        let w = ChannelMixer::heat(vec![0.4, -0.2]);
        let p = EvolveParams { h: 0.1, steps: 1, record_every: 1, sign: Sign::Minus };
        let (x1, traj) = evolve(&s, &op, &w, &x0, &p).unwrap();
        let direct = euler_heat_step(&x0, &op, &w, 0.1).unwrap();
        assert!(x1.max_abs_diff(&direct) < 1e-12);
        assert_eq!(traj.records.len(), 2);
        let p = EvolveParams { steps: 25, record_every: 10, ..p };
        let (_, traj) = evolve(&s, &op, &w, &x0, &p).unwrap();
        let steps: Vec<_> = traj.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 25]);
        assert!(traj.to_csv().starts_with("step,h,raw_energy,normalized_energy,feature_norm\n0,0.1,"));
        assert!(evolve(&s, &op, &w, &FeatureMatrix::zeros(8, 2), &p).is_err());
    }

    #[test]
    fn evolve_is_scale_invariant() {
        let (s, op) = c8_operator(0.5);
        let x0 = FeatureMatrix::real(det_matrix(8, 2, 6));
        let w = ChannelMixer::heat(vec![1.0, -0.5]);
        let p = EvolveParams { h: 0.2, steps: 50, record_every: 5, sign: Sign::Minus };
        let (_, a) = evolve(&s, &op, &w, &x0, &p).unwrap();
        let (_, b) = evolve(&s, &op, &w, &x0.scaled(-7.5), &p).unwrap();
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert!((ra.normalized_energy - rb.normalized_energy).abs() < 1e-12);
        }
    }

    #[test]
    fn gcn_fixed_point_and_identity_weights() {
        let (s, _) = c8_operator(1.0);
        let perron = FeatureMatrix::real(DMatrix::from_element(8, 1, 1.0));
        let traj = gcn_evolve(&perron, &s, &[DMatrix::identity(1, 1)], 10).unwrap();
        assert!(traj.records.iter().all(|r| r.normalized_energy.abs() < 1e-15));
        assert!(gcn_evolve(&perron, &s, &[], 3).is_err());
    }
}
