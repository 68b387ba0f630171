//! Discretization, block assembly, iterative solvers and spectral tools for
//! the cell-by-cell (EMI) model of excitable tissue.

pub mod error;
pub mod fem;
pub mod meshgen;
pub mod scalar;
pub mod sparse;
pub mod spectral;
pub mod system;

pub use error::{EmiError, Result};
pub use scalar::{Real, Scalar};

pub type CsrMatrixF64 = sparse::CsrMatrix<f64>;
pub type CsrMatrixF32 = sparse::CsrMatrix<f32>;
