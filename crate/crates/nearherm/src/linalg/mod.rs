//! Dense complex linear algebra.
//!
//! Everything here is written in-repo: the Hermitian path is Householder
//! tridiagonalization followed by implicit QL, the general path is complex
//! Hessenberg reduction followed by shifted QR, and [`lowrank`] solves
//! diagonal-plus-low-rank problems through their secular equation.

mod general;
mod hermitian;
mod lu;
mod matrix;
mod norms;
mod poly;
mod scalar;

pub mod lowrank;

pub use general::{eig_general, eig_general_with_vectors, inverse_iteration};
pub use hermitian::{eig_hermitian, hermitian_eigenvalues, hermitian_project, HermitianProjection};
pub use lu::{determinant, log_determinant, resolvent_form, Lu};
pub use matrix::{ComplexMatrix, SolverKind, Spectrum};
pub use norms::{frobenius_norm, re_im_parts, spectral_norm};
pub use poly::{
    critical_companion, poly_derivative, poly_from_roots, poly_roots, sylvester_det_check,
    Polynomial,
};
pub use scalar::Scalar;
