//! Node feature matrices with an optional imaginary part.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dims, Error, Result};

/// `N x K` node features. Real features carry no imaginary buffer at all, so
/// `is_real_only` holds exactly rather than up to a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    re: DMatrix<f64>,
    im: Option<DMatrix<f64>>,
}

impl FeatureMatrix {
    pub fn real(re: DMatrix<f64>) -> Self {
        Self { re, im: None }
    }

    pub fn complex(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(dims(format!(
                "real part {:?} vs imaginary part {:?}",
                re.shape(),
                im.shape()
            )));
        }
        Ok(Self { re, im: Some(im) })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::real(DMatrix::zeros(nrows, ncols))
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: Some(m.map(|z| z.im)),
        }
    }

    /// Parses rows of real values, rejecting NaN and infinities.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut re = DMatrix::zeros(n, k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(dims(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("feature ({i}, {j}) = {v}")));
                }
                re[(i, j)] = v;
            }
        }
        Ok(Self::real(re))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn is_real_only(&self) -> bool {
        self.im.is_none()
    }

    pub fn re(&self) -> &DMatrix<f64> {
        &self.re
    }

    pub fn im(&self) -> Option<&DMatrix<f64>> {
        self.im.as_ref()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Option<DMatrix<f64>>) {
        (self.re, self.im)
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        match &self.im {
            Some(im) => self.re.zip_map(im, Complex64::new),
            None => self.re.map(|r| Complex64::new(r, 0.0)),
        }
    }

    /// Frobenius norm over all real and imaginary entries.
    pub fn norm(&self) -> f64 {
        let mut s = self.re.norm_squared();
        if let Some(im) = &self.im {
            s += im.norm_squared();
        }
        s.sqrt()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            re: &self.re * c,
            im: self.im.as_ref().map(|m| m * c),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().all(|v| v.is_finite())
            && self.im.as_ref().is_none_or(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Largest entrywise modulus of the difference to `other`.
    pub fn max_abs_diff(&self, other: &FeatureMatrix) -> f64 {
        let a = self.to_complex();
        let b = other.to_complex();
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub(crate) fn map_parts(&self, mut f: impl FnMut(&DMatrix<f64>) -> DMatrix<f64>) -> Self {
        Self {
            re: f(&self.re),
            im: self.im.as_ref().map(f),
        }
    }

    /// Row-wise selection, used when graphs are restricted to a component.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        self.map_parts(|m| m.select_rows(rows.iter()))
    }
}
