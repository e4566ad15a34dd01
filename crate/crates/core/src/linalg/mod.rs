//! Dense kernels not provided by `nalgebra`: a real nonsymmetric eigenvalue
//! solver and the matrix exponential.

mod eig;
mod expm;

pub use eig::{eigen_spectrum, hessenberg_qr_eigenvalues, Spectrum};
pub use expm::expm;
