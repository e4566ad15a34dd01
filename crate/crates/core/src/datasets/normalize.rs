use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Scale every nonzero row to unit Euclidean norm.
    #[default]
    RowL2,
    /// Center every column and scale it to unit population variance.
    Standardize,
}

pub fn normalize_features(x: &FeatureMatrix, mode: NormalizeMode) -> FeatureMatrix {
    match mode {
        NormalizeMode::RowL2 => {
            let mut re = x.re().clone();
            let mut im = x.im().cloned();
            for i in 0..re.nrows() {
                let mut sq = re.row(i).norm_squared();
                if let Some(m) = &im {
                    sq += m.row(i).norm_squared();
                }
                if sq > 0.0 {
                    let inv = 1.0 / sq.sqrt();
                    re.row_mut(i).scale_mut(inv);
                    if let Some(m) = &mut im {
                        m.row_mut(i).scale_mut(inv);
                    }
                }
            }
            match im {
                Some(im) => FeatureMatrix::complex(re, im).expect("shapes unchanged"),
                None => FeatureMatrix::real(re),
            }
        }
        NormalizeMode::Standardize => x.map_parts(|m| {
            let mut out = m.clone();
            let n = m.nrows() as f64;
            for mut col in out.column_iter_mut() {
                let mean = col.sum() / n;
                col.add_scalar_mut(-mean);
                let sd = (col.norm_squared() / n).sqrt();
                if sd > 0.0 {
                    col /= sd;
                }
            }
            out
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn row_l2() {
        let x = FeatureMatrix::real(DMatrix::from_row_slice(3, 2, &[3.0, 4.0, 0.0, 0.0, -1.0, 1.0]));
        let y = normalize_features(&x, NormalizeMode::RowL2);
        assert!((y.re().row(0).norm() - 1.0).abs() < 1e-12);
        assert!((y.re().row(2).norm() - 1.0).abs() < 1e-12);
        assert_eq!(y.re().row(1).norm(), 0.0);
    }

    #[test]
    fn standardize() {
        let x = FeatureMatrix::real(DMatrix::from_row_slice(4, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 10.0, 5.0]));
        let y = normalize_features(&x, NormalizeMode::Standardize);
        let c0 = y.re().column(0);
        assert!(c0.mean().abs() < 1e-10);
        assert!((c0.norm_squared() / 4.0 - 1.0).abs() < 1e-8);
        assert!(y.re().column(1).iter().all(|&v| v == 0.0));
    }
}
