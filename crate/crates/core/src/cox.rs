//! Frequency-weighted Cox proportional-hazards regression.
//!
//! The objective is the Breslow log partial likelihood over counting-process
//! records. With a uniform frequency weight `w`, each event contributes `w`
//! times and every at-risk record enters the denominator with weight `w`:
//!
//! ```text
//! LL(β) = Σ_events w·[ x_i'β − ln Σ_{j ∈ R(t_i)} w·exp(x_j'β) ]
//! R(t)  = { j : start_j < t ≤ stop_j }
//! ```
//!
//! This is exactly the Breslow likelihood of the frame with every record
//! physically copied `w` times, so `LL_w(β) = w·LL_1(β) − w·D·ln w` where
//! `D` is the number of event records.

use thiserror::Error;

use crate::data::SurvivalFrame;
use crate::numerics::{
    chi2_sf, normal_two_sided, pivoted_rank_factor, solve_spd, NumericsError, SymMatrix,
};

const MAX_ITERATIONS: usize = 100;
const MAX_HALVINGS: usize = 40;
const LOGLIK_RELATIVE_TOLERANCE: f64 = 1e-10;
const GRADIENT_TOLERANCE: f64 = 1e-6;
const DIVERGENCE_BOUND: f64 = 50.0;
const LR_NEGATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CoxError {
    #[error("no event records in the data")]
    NoEvents,
    #[error("Newton-Raphson did not converge after {iterations} iterations (last change {last_delta:e})")]
    NotConverged { iterations: usize, last_delta: f64 },
    #[error("coefficient for `{covariate}` diverges (|beta| > {DIVERGENCE_BOUND}); the likelihood is monotone")]
    MonotoneLikelihood { covariate: String },
    #[error("event at time {time} has an empty risk set")]
    EmptyRiskSet { time: f64 },
    #[error("coefficient vector has {found} entries, frame has {expected} covariates")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("frequency weight must be a positive integer")]
    InvalidWeight,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    /// Names of the estimated (non-omitted) covariates.
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub hazard_ratios: Vec<f64>,
    pub se_beta: Vec<f64>,
    pub z_stats: Vec<f64>,
    pub p_wald: Vec<f64>,
    pub omitted: Vec<String>,
    pub loglik_null: f64,
    pub loglik_full: f64,
    pub lr_stat: f64,
    pub lr_df: usize,
    pub p_lr: f64,
    pub n_subjects: u64,
    pub n_failures: u64,
    pub n_obs: u64,
    pub time_at_risk: f64,
    pub iterations: usize,
    /// Distinct event records share an event time; Breslow handling applied.
    pub tied_event_times: bool,
    /// No covariate survived the collinearity check, so there is nothing to test.
    pub degenerate: bool,
}

/// Event times with their at-risk and event record indices.
struct RiskSets {
    groups: Vec<RiskGroup>,
}

struct RiskGroup {
    at_risk: Vec<usize>,
    events: Vec<usize>,
}

impl RiskSets {
    fn build(frame: &SurvivalFrame) -> Result<Self, CoxError> {
        let records = frame.records();
        let mut times: Vec<f64> = records.iter().filter(|r| r.event).map(|r| r.stop).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut groups = Vec::with_capacity(times.len());
        for t in times {
            let at_risk: Vec<usize> = (0..records.len())
                .filter(|&j| records[j].start < t && t <= records[j].stop)
                .collect();
            let events: Vec<usize> = (0..records.len())
                .filter(|&j| records[j].event && records[j].stop == t)
                .collect();
            if at_risk.is_empty() {
                return Err(CoxError::EmptyRiskSet { time: t });
            }
            groups.push(RiskGroup { at_risk, events });
        }
        Ok(Self { groups })
    }

    fn has_ties(&self) -> bool {
        self.groups.iter().any(|g| g.events.len() > 1)
    }
}

fn check_inputs(frame: &SurvivalFrame, beta: &[f64], weight: u64) -> Result<(), CoxError> {
    if weight == 0 {
        return Err(CoxError::InvalidWeight);
    }
    let p = frame.covariate_names().len();
    if beta.len() != p {
        return Err(CoxError::DimensionMismatch {
            expected: p,
            found: beta.len(),
        });
    }
    Ok(())
}

fn linear_predictor(frame: &SurvivalFrame, beta: &[f64]) -> Vec<f64> {
    frame
        .records()
        .iter()
        .map(|r| r.covariates.iter().zip(beta).map(|(x, b)| x * b).sum())
        .collect()
}

fn loglik_with(sets: &RiskSets, eta: &[f64], weight: f64) -> f64 {
    let ln_w = weight.ln();
    let mut ll = 0.0;
    for g in &sets.groups {
        let m = g
            .at_risk
            .iter()
            .map(|&j| eta[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let s0: f64 = g.at_risk.iter().map(|&j| (eta[j] - m).exp()).sum();
        let log_denominator = m + s0.ln() + ln_w;
        for &i in &g.events {
            ll += weight * (eta[i] - log_denominator);
        }
    }
    ll
}

fn score_hessian_with(
    frame: &SurvivalFrame,
    sets: &RiskSets,
    eta: &[f64],
    weight: f64,
) -> (Vec<f64>, SymMatrix) {
    let records = frame.records();
    let p = frame.covariate_names().len();
    let mut gradient = vec![0.0; p];
    let mut neg_hessian = SymMatrix::zeros(p);
    let mut s1 = vec![0.0; p];
    let mut s2 = SymMatrix::zeros(p);
    for g in &sets.groups {
        let m = g
            .at_risk
            .iter()
            .map(|&j| eta[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        s1.iter_mut().for_each(|v| *v = 0.0);
        s2.scale(0.0);
        for &j in &g.at_risk {
            let r = (eta[j] - m).exp();
            let x = &records[j].covariates;
            s0 += r;
            for a in 0..p {
                s1[a] += r * x[a];
                for b in 0..=a {
                    s2.add(a, b, r * x[a] * x[b]);
                }
            }
        }
        let d = g.events.len() as f64;
        let mean: Vec<f64> = s1.iter().map(|v| v / s0).collect();
        for &i in &g.events {
            let x = &records[i].covariates;
            for a in 0..p {
                gradient[a] += weight * (x[a] - mean[a]);
            }
        }
        for a in 0..p {
            for b in 0..=a {
                let cov = s2.get(a, b) / s0 - mean[a] * mean[b];
                neg_hessian.add(a, b, weight * d * cov);
            }
        }
    }
    (gradient, neg_hessian)
}

/// Weighted Breslow log partial likelihood at `beta`.
pub fn cox_loglik(frame: &SurvivalFrame, beta: &[f64], weight: u64) -> Result<f64, CoxError> {
    check_inputs(frame, beta, weight)?;
    let sets = RiskSets::build(frame)?;
    Ok(loglik_with(
        &sets,
        &linear_predictor(frame, beta),
        weight as f64,
    ))
}

/// Gradient and negative Hessian of [`cox_loglik`] at `beta`.
pub fn cox_score_hessian(
    frame: &SurvivalFrame,
    beta: &[f64],
    weight: u64,
) -> Result<(Vec<f64>, SymMatrix), CoxError> {
    check_inputs(frame, beta, weight)?;
    let sets = RiskSets::build(frame)?;
    Ok(score_hessian_with(
        frame,
        &sets,
        &linear_predictor(frame, beta),
        weight as f64,
    ))
}

/// Fits the Cox model with uniform frequency weight `weight` and tests all
/// kept coefficients jointly against β = 0 with a likelihood-ratio test.
///
/// Covariates that are constant or collinear with earlier ones (checked
/// together with an implicit constant column, which the partial likelihood
/// cannot identify) are dropped and listed in `omitted`.
pub fn fit_cox(frame: &SurvivalFrame, weight: u64) -> Result<CoxFit, CoxError> {
    if weight == 0 {
        return Err(CoxError::InvalidWeight);
    }
    let n_events = frame.n_events();
    if n_events == 0 {
        return Err(CoxError::NoEvents);
    }

    let names = frame.covariate_names();
    let p = names.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    columns.push(vec![1.0; frame.len()]);
    for a in 0..p {
        columns.push(frame.records().iter().map(|r| r.covariates[a]).collect());
    }
    let rank = pivoted_rank_factor(&columns);
    let kept: Vec<usize> = rank
        .kept
        .iter()
        .filter(|&&j| j > 0)
        .map(|&j| j - 1)
        .collect();
    let omitted: Vec<String> = rank
        .omitted
        .iter()
        .filter(|&&j| j > 0)
        .map(|&j| names[j - 1].clone())
        .collect();

    let reduced = frame.select_covariates(&kept);
    let sets = RiskSets::build(&reduced)?;
    let w = weight as f64;
    let k = kept.len();

    let mut beta = vec![0.0; k];
    let loglik_null = loglik_with(&sets, &linear_predictor(&reduced, &beta), w);
    let mut loglik = loglik_null;
    let mut iterations = 0;

    if k > 0 {
        let mut last_delta = f64::INFINITY;
        let mut converged = false;
        while iterations <= MAX_ITERATIONS {
            let eta = linear_predictor(&reduced, &beta);
            let (gradient, neg_hessian) = score_hessian_with(&reduced, &sets, &eta, w);
            // gradient checked per unit weight so large weights do not inflate rounding noise
            let grad_norm = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs())) / w;
            if iterations > 0
                && last_delta.abs() <= LOGLIK_RELATIVE_TOLERANCE * (1.0 + loglik.abs())
                && grad_norm <= GRADIENT_TOLERANCE
            {
                converged = true;
                break;
            }
            if iterations == MAX_ITERATIONS {
                break;
            }
            iterations += 1;

            let step = solve_spd(&neg_hessian, &gradient)?;
            let mut scale = 1.0;
            let mut candidate: Vec<f64>;
            let mut candidate_ll;
            let mut halvings = 0;
            loop {
                candidate = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
                candidate_ll = loglik_with(&sets, &linear_predictor(&reduced, &candidate), w);
                if candidate_ll >= loglik || halvings == MAX_HALVINGS {
                    break;
                }
                scale *= 0.5;
                halvings += 1;
            }
            if candidate_ll < loglik {
                // no ascent along the Newton direction: stay put, the change is zero
                candidate = beta.clone();
                candidate_ll = loglik;
            }
            if let Some(a) = candidate.iter().position(|b| b.abs() > DIVERGENCE_BOUND) {
                return Err(CoxError::MonotoneLikelihood {
                    covariate: reduced.covariate_names()[a].clone(),
                });
            }
            last_delta = candidate_ll - loglik;
            beta = candidate;
            loglik = candidate_ll;
        }
        if !converged {
            return Err(CoxError::NotConverged {
                iterations,
                last_delta,
            });
        }
    }

    let (se_beta, z_stats, p_wald) = if k > 0 {
        let eta = linear_predictor(&reduced, &beta);
        let (_, neg_hessian) = score_hessian_with(&reduced, &sets, &eta, w);
        let covariance = neg_hessian.inverse_spd()?;
        let se: Vec<f64> = (0..k).map(|a| covariance.get(a, a).sqrt()).collect();
        let z: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
        let pw: Vec<f64> = z.iter().map(|&v| normal_two_sided(v)).collect();
        (se, z, pw)
    } else {
        (Vec::new(), Vec::new(), Vec::new())
    };

    let lr_raw = 2.0 * (loglik - loglik_null);
    debug_assert!(lr_raw >= -LR_NEGATIVE_SLACK * (1.0 + loglik_null.abs()));
    let lr_stat = lr_raw.max(0.0);
    let p_lr = if k > 0 { chi2_sf(lr_stat, k)? } else { 1.0 };

    Ok(CoxFit {
        names: reduced.covariate_names().to_vec(),
        hazard_ratios: beta.iter().map(|b| b.exp()).collect(),
        beta,
        se_beta,
        z_stats,
        p_wald,
        omitted,
        loglik_null,
        loglik_full: loglik,
        lr_stat,
        lr_df: k,
        p_lr,
        n_subjects: weight * frame.n_subjects() as u64,
        n_failures: weight * n_events as u64,
        n_obs: weight * frame.len() as u64,
        time_at_risk: w * frame.time_at_risk(),
        iterations,
        tied_event_times: sets.has_ties(),
        degenerate: k == 0,
    })
}
