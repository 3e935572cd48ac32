//! Non-significance factor (NF) computation.
//!
//! The NF of a test on a dataset is the smallest uniform frequency weight
//! under which the same test on the same rows reaches a required
//! significance level. This crate provides the pieces needed to compute it:
//!
//! - [`data`]: CSV loading, counting-process survival records, row replication
//! - [`numerics`]: dense SPD solves, collinearity detection, distribution tails
//! - [`linear`]: frequency-weighted least squares with Wald t-tests
//! - [`cox`]: frequency-weighted Cox regression with a likelihood-ratio test
//! - [`nf`]: the bracket search and linear interpolation of the crossing weight

pub mod cox;
pub mod data;
pub mod linear;
pub mod nf;
pub mod numerics;

pub use cox::{cox_loglik, cox_score_hessian, fit_cox, CoxError, CoxFit};
pub use data::{load_csv, read_csv, DataError, Dataset, SurvivalFrame, SurvivalRecord};
pub use linear::{fit_wls, LinearError, LinearFit};
pub use nf::{compute_nf, interpolate, NfError, NfResult, TraceEntry};
pub use numerics::{
    chi2_sf, normal_two_sided, pivoted_rank_factor, solve_spd, student_t_two_sided, NumericsError,
    RankFactor, SymMatrix,
};
