//! Deterministic dense linear algebra, seeded sampling, numerical rank and a
//! finite-difference gradient oracle.

mod finite_diff;
mod matrix;
mod rng;
mod svd;

pub use finite_diff::{finite_diff_grad, relative_error};
pub use matrix::{dot, squared_distance, Matrix};
pub use rng::{gaussian_sample, RngStream};
pub use svd::{numerical_rank, singular_values};

/// Default relative singular-value cutoff for [`numerical_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-7;

pub fn matmul(a: &Matrix, b: &Matrix) -> crate::Result<Matrix> {
    a.matmul(b)
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.frobenius_norm()
}
