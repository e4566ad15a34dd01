use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::graph::{DegreePolicy, SnaMatrix};

/// Columns added to the sketch beyond the target rank.
pub const OVERSAMPLING: usize = 10;
/// Subspace iterations applied to the sketch.
pub const POWER_ITERATIONS: usize = 2;

/// `S ≈ U diag(sigma) Vᵀ` with `sigma` nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SnaFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
    pub truncated: bool,
    /// `Σ σ_j²` over the full spectrum, i.e. `‖S‖_F²`.
    pub total_sq: f64,
    pub policy: DegreePolicy,
}

impl SnaFactors {
    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn rank_k(&self) -> usize {
        self.sigma.len()
    }

    /// Spectral norm of the factored operator.
    pub fn sigma_max(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.sigma) * self.v.transpose()
    }
}

/// Thin SVD `m = U diag(σ) Vᵀ` through faer.
fn dense_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    let (r, c) = m.shape();
    let fm = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().map_err(|_| Error::NoConvergence("singular value decomposition"))?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = r.min(c);
    Ok((
        DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        DVector::from_fn(k, |i, _| s[i]),
        DMatrix::from_fn(c, k, |i, j| v[(i, j)]),
    ))
}

/// Sorts singular triples by decreasing value and fixes the sign of each
/// pair so that the largest-modulus entry of the left vector is positive.
fn canonicalize(u: DMatrix<f64>, sigma: DVector<f64>, v: DMatrix<f64>, k: usize) -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    order.truncate(k);
    let mut u = u.select_columns(order.iter());
    let mut v = v.select_columns(order.iter());
    let sigma = DVector::from_iterator(k, order.iter().map(|&i| sigma[i].max(0.0)));
    for c in 0..k {
        let mut best = 0;
        for i in 1..u.nrows() {
            if u[(i, c)].abs() > u[(best, c)].abs() {
                best = i;
            }
        }
        if u[(best, c)] < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    (u, sigma, v)
}

pub fn svd_full(sna: &SnaMatrix) -> Result<SnaFactors> {
    let s = sna.matrix();
    let n = s.nrows();
    let (u, sigma, v) = dense_svd(s)?;
    let (u, sigma, v) = canonicalize(u, sigma, v, n);
    let total_sq = sigma.iter().map(|s| s * s).sum();
    Ok(SnaFactors { u, sigma, v, truncated: false, total_sq, policy: sna.policy() })
}

/// Randomized rank-`k` SVD: a seeded Gaussian sketch with oversampling,
/// a few re-orthonormalized power iterations, then an exact SVD of the
/// projected matrix.
pub fn svd_truncated(sna: &SnaMatrix, k: usize, seed: u64) -> Result<SnaFactors> {
    let s = sna.matrix();
    let n = s.nrows();
    if k == 0 || k > n {
        return Err(invalid(format!("truncation rank {k} outside [1, {n}]")));
    }
    let l = (k + OVERSAMPLING).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(n, l, |_, _| StandardNormal.sample(&mut rng));
    let mut q = (s * omega).qr().q();
    for _ in 0..POWER_ITERATIONS {
        let z = s.tr_mul(&q).qr().q();
        q = (s * z).qr().q();
    }
    let b = q.tr_mul(s);
    let (ub, sigma, v) = dense_svd(&b)?;
    let u = &q * ub;
    let (u, sigma, v) = canonicalize(u, sigma, v, k);
    Ok(SnaFactors {
        u,
        sigma,
        v,
        truncated: true,
        total_sq: s.norm_squared(),
        policy: sna.policy(),
    })
}

/// Share of `‖S‖_F²` captured by the `k` leading singular values.
pub fn explained_variance(factors: &SnaFactors, k: usize) -> Result<f64> {
    if k == 0 || k > factors.rank_k() {
        return Err(invalid(format!("k = {k} outside [1, {}]", factors.rank_k())));
    }
    if factors.total_sq <= 0.0 {
        return Err(invalid("explained variance of the zero operator"));
    }
    let head: f64 = factors.sigma.iter().take(k).map(|s| s * s).sum();
    Ok((head / factors.total_sq).min(1.0))
}
