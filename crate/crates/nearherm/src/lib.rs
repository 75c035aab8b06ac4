//! Spectra of nearly Hermitian random matrices.
//!
//! A nearly Hermitian matrix is a Hermitian matrix plus a low-rank, possibly
//! non-Hermitian perturbation. This crate samples Wigner and sample-covariance
//! ensembles, computes spectra with in-repo dense and structured eigensolvers,
//! evaluates the limiting laws and outlier predictions, checks classical
//! perturbation inequalities, and runs seeded experiments that compare the
//! two sides.
//!
//! ```
//! use nearherm::laws::outlier_wigner;
//! use num_complex::Complex64;
//!
//! let z = outlier_wigner(Complex64::new(2.0, 0.0)).unwrap();
//! assert!((z.value - Complex64::new(2.5, 0.0)).norm() < 1e-15);
//! ```

pub mod bounds;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod laws;
pub mod linalg;
pub mod perturbations;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Polynomial, Spectrum};
