//! Dense symmetric linear algebra and the distribution tails used by the tests.

mod distributions;
mod linalg;

pub use distributions::{
    chi2_sf, gamma_q, ln_gamma, normal_two_sided, regularized_beta, student_t_two_sided,
};
pub use linalg::{pivoted_rank_factor, solve_spd, RankFactor, SymMatrix};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has {vector} entries")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("argument outside the function's domain: {0}")]
    DomainError(String),
}
