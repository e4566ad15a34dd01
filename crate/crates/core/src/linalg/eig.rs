use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};

/// Eigenvalues sorted ascending by real part, ties by imaginary part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Column `k` pairs with `eigenvalues[k]`.
    #[serde(skip)]
    pub eigenvectors: Option<DMatrix<Complex64>>,
    pub symmetric: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.eigenvalues.iter().all(|z| z.im.abs() <= tol)
    }

    /// Real parts, in the stored order.
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

fn cmp_eig(a: &Complex64, b: &Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn is_numerically_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= 1e-12 * scale))
}

/// Full spectrum of a real square matrix. Symmetric inputs go through a
/// symmetric eigensolver; everything else through Hessenberg reduction and
/// Francis double-shift QR, with eigenvectors from inverse iteration.
pub fn eigen_spectrum(matrix: &DMatrix<f64>, want_vectors: bool) -> Result<Spectrum> {
    if !matrix.is_square() {
        return Err(dims(format!("eigenproblem needs a square matrix, got {:?}", matrix.shape())));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entry in eigenproblem".into()));
    }
    let n = matrix.nrows();
    if n == 0 {
        return Ok(Spectrum { eigenvalues: vec![], eigenvectors: None, symmetric: true });
    }
    if is_numerically_symmetric(matrix) {
        let sym = (matrix + matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 10_000)
            .ok_or(Error::NoConvergence("symmetric eigensolver"))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| Complex64::new(eig.eigenvalues[k], 0.0)).collect();
        let eigenvectors = want_vectors.then(|| {
            DMatrix::from_fn(n, n, |i, c| Complex64::new(eig.eigenvectors[(i, order[c])], 0.0))
        });
        return Ok(Spectrum { eigenvalues, eigenvectors, symmetric: true });
    }
    let mut eigenvalues = hessenberg_qr_eigenvalues(matrix)?;
    eigenvalues.sort_by(cmp_eig);
    let eigenvectors = if want_vectors {
        let mut v = DMatrix::zeros(n, n);
        for (c, &lambda) in eigenvalues.iter().enumerate() {
            v.set_column(c, &inverse_iteration(matrix, lambda)?);
        }
        Some(v)
    } else {
        None
    };
    Ok(Spectrum { eigenvalues, eigenvectors, symmetric: false })
}

/// Eigenvalues of a general real matrix (unsorted).
pub fn hessenberg_qr_eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = matrix.nrows();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| matrix.row(i).iter().copied().collect()).collect();
    reduce_to_hessenberg(&mut h);
    let (wr, wi) = francis_qr(&mut h)?;
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// Householder reduction to upper Hessenberg form, in place.
fn reduce_to_hessenberg(h: &mut [Vec<f64>]) {
    let n = h.len();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let f = (m..=high).rev().map(|i| ort[i] * h[i][j]).sum::<f64>() / hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut().take(high + 1) {
            let f = (m..=high).rev().map(|j| ort[j] * row[j]).sum::<f64>() / hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        h[m][m - 1] = scale * g;
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn francis_qr(h: &mut [Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.len();
    let mut wr = vec![0.0; nn];
    let mut wi = vec![0.0; nn];
    let eps = f64::EPSILON;
    let low = 0usize;
    let mut exshift = 0.0;
    let mut norm = 0.0;
    for (i, row) in h.iter().enumerate() {
        for v in &row[i.saturating_sub(1)..] {
            norm += v.abs();
        }
    }
    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    while n >= low as isize {
        let nu = n as usize;
        let mut l = nu;
        while l > low {
            let mut s = h[l - 1][l - 1].abs() + h[l][l].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l][l - 1].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            wr[nu] = h[nu][nu] + exshift;
            wi[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == nu - 1 {
            let w = h[nu][nu - 1] * h[nu - 1][nu];
            let p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            let q = p * p + w;
            let mut z = q.abs().sqrt();
            let x = h[nu][nu] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            let mut x = h[nu][nu];
            let mut y = h[nu - 1][nu - 1];
            let mut w = h[nu][nu - 1] * h[nu - 1][nu];
            if iter == 10 {
                exshift += x;
                for (i, row) in h.iter_mut().enumerate().take(nu + 1).skip(low) {
                    row[i] -= x;
                }
                let s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                let mut s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for (i, row) in h.iter_mut().enumerate().take(nu + 1).skip(low) {
                        row[i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            if iter > 200 {
                return Err(Error::NoConvergence("Hessenberg QR"));
            }
            let (mut p, mut q, mut r);
            let mut m = nu - 2;
            loop {
                let z = h[m][m];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / h[m + 1][m] + h[m][m + 1];
                q = h[m + 1][m + 1] - z - rr - ss;
                r = h[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[m][m - 1].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[m - 1][m - 1].abs() + z.abs() + h[m + 1][m + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[i][i - 2] = 0.0;
                if i > m + 2 {
                    h[i][i - 3] = 0.0;
                }
            }
            for k in m..nu {
                let notlast = k != nu - 1;
                let mut xk = 0.0;
                if k != m {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    xk = p.abs() + q.abs() + r.abs();
                    if xk == 0.0 {
                        continue;
                    }
                    p /= xk;
                    q /= xk;
                    r /= xk;
                }
                let mut s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[k][k - 1] = -s * xk;
                } else if l != m {
                    h[k][k - 1] = -h[k][k - 1];
                }
                p += s;
                let (cx, cy, cz) = (p / s, q / s, r / s);
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut t = h[k][j] + q * h[k + 1][j];
                    if notlast {
                        t += r * h[k + 2][j];
                        h[k + 2][j] -= t * cz;
                    }
                    h[k][j] -= t * cx;
                    h[k + 1][j] -= t * cy;
                }
                for row in h.iter_mut().take(nu.min(k + 3) + 1).skip(l) {
                    let mut t = cx * row[k] + cy * row[k + 1];
                    if notlast {
                        t += cz * row[k + 2];
                        row[k + 2] -= t * r;
                    }
                    row[k] -= t;
                    row[k + 1] -= t * q;
                }
            }
        }
    }
    Ok((wr, wi))
}

/// Unit eigenvector for an approximate eigenvalue by shifted inverse
/// iteration; the largest-modulus entry is rotated to be real positive.
fn inverse_iteration(matrix: &DMatrix<f64>, lambda: Complex64) -> Result<DVector<Complex64>> {
    let n = matrix.nrows();
    let scale = matrix.amax().max(1.0);
    let shift = lambda + Complex64::new(1e-10 * scale, 1e-10 * scale);
    let mut a = matrix.map(|v| Complex64::new(v, 0.0));
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.7548776662).fract(), 0.0));
    for _ in 0..3 {
        let next = lu.solve(&v).ok_or(Error::NoConvergence("inverse iteration"))?;
        let norm = next.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NoConvergence("inverse iteration"));
        }
        v = next / Complex64::new(norm, 0.0);
    }
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Schur;

    fn pseudo_random(n: usize, seed: u64) -> DMatrix<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        DMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(cmp_eig);
        v
    }

    #[test]
    fn agrees_with_schur_oracle() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (20, 5), (45, 6)] {
            let m = pseudo_random(n, seed);
            let ours = eigen_spectrum(&m, false).unwrap().eigenvalues;
            let oracle = sorted(Schur::new(m.clone()).complex_eigenvalues().iter().copied().collect());
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).norm() < 1e-9, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn permutation_has_cube_roots() {
        let p = DMatrix::from_row_slice(3, 3, &[0., 0., 1., 1., 0., 0., 0., 1., 0.]);
        let s = eigen_spectrum(&p, true).unwrap();
        assert!(!s.symmetric);
        let half = 3f64.sqrt() / 2.0;
        let want = [Complex64::new(-0.5, -half), Complex64::new(-0.5, half), Complex64::new(1.0, 0.0)];
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
        let v = s.eigenvectors.unwrap();
        let pc = p.map(|x| Complex64::new(x, 0.0));
        for k in 0..3 {
            let col = v.column(k);
            let resid = &pc * col - col * s.eigenvalues[k];
            assert!(resid.norm() < 1e-8);
        }
    }

    #[test]
    fn symmetric_route_gives_orthonormal_vectors() {
        let a = pseudo_random(12, 9);
        let sym = &a + a.transpose();
        let s = eigen_spectrum(&sym, true).unwrap();
        assert!(s.symmetric && s.is_real(0.0));
        let v = s.eigenvectors.unwrap();
        let gram = v.adjoint() * &v;
        assert!((gram - DMatrix::identity(12, 12)).camax() < 1e-8);
        assert!(s.eigenvalues.windows(2).all(|w| w[0].re <= w[1].re));
    }

    #[test]
    fn defective_and_zero_matrices() {
        let jordan = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        for z in eigen_spectrum(&jordan, false).unwrap().eigenvalues {
            assert!((z - Complex64::new(2.0, 0.0)).norm() < 1e-7);
        }
        let zero = DMatrix::<f64>::zeros(4, 4);
        assert!(eigen_spectrum(&zero, false).unwrap().eigenvalues.iter().all(|z| z.norm() == 0.0));
        assert!(eigen_spectrum(&DMatrix::zeros(2, 3), false).is_err());
    }
}
