//! Dense linear algebra kernel.
//!
//! A small row-major matrix type plus the factorizations the estimators need:
//! Cholesky solves, LU with partial pivoting, Householder QR, a Jacobi
//! symmetric eigen-solver (for matrix square roots), Jacobi singular values (for
//! rank checks), and the block Schur factorization.

pub(crate) mod csv;
mod decomp;
mod matrix;

pub use csv::{matrix_from_csv, matrix_to_csv, vector_from_csv, vector_to_csv};
pub use decomp::{
    default_rank_tolerance, numerical_rank, schur_decompose, singular_values, solve_spd,
    symmetric_eigen, symmetric_sqrt, Cholesky, Lu, Qr, SchurFactors, SYMMETRY_TOL,
};
pub use matrix::{DenseMatrix, DenseVector};
