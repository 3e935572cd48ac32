//! Frequency-weighted least squares with per-coefficient Wald t-tests.
//!
//! An intercept column is always prepended and reported under
//! [`INTERCEPT`]. With a uniform frequency weight `w` every row counts as
//! `w` identical observations: the coefficients match the unweighted fit
//! while the residual sum of squares and degrees of freedom scale with `w`.

use thiserror::Error;

use crate::data::{DataError, Dataset};
use crate::numerics::{pivoted_rank_factor, student_t_two_sided, NumericsError, SymMatrix};

/// Name under which the intercept is reported.
pub const INTERCEPT: &str = "_cons";

/// Residual sums of squares at or below this fraction of Σw·y² are treated as zero.
const ZERO_RESIDUAL_RELATIVE: f64 = 1e-24;

#[derive(Debug, Error)]
pub enum LinearError {
    #[error("{weighted_n} weighted observations cannot support {parameters} coefficients")]
    InsufficientObservations { weighted_n: f64, parameters: usize },
    #[error("frequency weight must be a positive integer")]
    InvalidWeight,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    /// Names of the estimated coefficients, intercept first.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Covariates dropped for collinearity, in request order.
    pub omitted: Vec<String>,
    pub df_residual: f64,
    pub residual_ss: f64,
    pub root_mse: f64,
    pub weighted_n: f64,
    /// Set when the residual variance is exactly zero.
    pub degenerate: bool,
}

impl LinearFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Fits `response ~ 1 + covariates` with every row carrying frequency weight `weight`.
pub fn fit_wls(
    d: &Dataset,
    response: &str,
    covariates: &[&str],
    weight: u64,
) -> Result<LinearFit, LinearError> {
    if weight == 0 {
        return Err(LinearError::InvalidWeight);
    }
    let y = d.column(response)?;
    let n = d.n_rows();
    let w = weight as f64;

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(covariates.len() + 1);
    columns.push(vec![1.0; n]);
    for name in covariates {
        columns.push(d.column(name)?.to_vec());
    }
    let rank = pivoted_rank_factor(&columns);
    let omitted: Vec<String> = rank
        .omitted
        .iter()
        .filter(|&&j| j > 0)
        .map(|&j| covariates[j - 1].to_string())
        .collect();
    let kept: Vec<&Vec<f64>> = rank.kept.iter().map(|&j| &columns[j]).collect();
    let names: Vec<String> = rank
        .kept
        .iter()
        .map(|&j| {
            if j == 0 {
                INTERCEPT.to_string()
            } else {
                covariates[j - 1].to_string()
            }
        })
        .collect();

    let k = kept.len();
    let weighted_n = w * n as f64;
    if n == 0 || weighted_n <= k as f64 {
        return Err(LinearError::InsufficientObservations {
            weighted_n,
            parameters: k.max(1),
        });
    }

    let mut xtwx = SymMatrix::zeros(k);
    let mut xtwy = vec![0.0; k];
    for a in 0..k {
        for b in 0..=a {
            let s: f64 = kept[a].iter().zip(kept[b]).map(|(p, q)| p * q).sum();
            xtwx.set(a, b, w * s);
        }
        xtwy[a] = w * kept[a].iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    }
    let xtwx_inv = xtwx.inverse_spd()?;
    let coefficients = xtwx_inv.mul_vec(&xtwy);

    let mut residual_ss = w
        * (0..n)
            .map(|i| {
                let fitted: f64 = (0..k).map(|a| kept[a][i] * coefficients[a]).sum();
                let r = y[i] - fitted;
                r * r
            })
            .sum::<f64>();
    let total_ss = w * y.iter().map(|v| v * v).sum::<f64>();
    if residual_ss <= ZERO_RESIDUAL_RELATIVE * total_ss {
        residual_ss = 0.0;
    }
    let df_residual = weighted_n - k as f64;
    let sigma2 = residual_ss / df_residual;
    let degenerate = residual_ss == 0.0;

    let standard_errors: Vec<f64> = (0..k)
        .map(|a| (sigma2 * xtwx_inv.get(a, a)).sqrt())
        .collect();
    let mut t_stats = Vec::with_capacity(k);
    let mut p_values = Vec::with_capacity(k);
    for (&b, &se) in coefficients.iter().zip(&standard_errors) {
        let (t, p) = if se > 0.0 {
            let t = b / se;
            (t, student_t_two_sided(t, df_residual)?)
        } else if b == 0.0 {
            (0.0, 1.0)
        } else {
            (b.signum() * f64::INFINITY, 0.0)
        };
        t_stats.push(t);
        p_values.push(p);
    }

    Ok(LinearFit {
        names,
        coefficients,
        standard_errors,
        t_stats,
        p_values,
        omitted,
        df_residual,
        residual_ss,
        root_mse: sigma2.sqrt(),
        weighted_n,
        degenerate,
    })
}
