//! Report structure and its text / JSON renderings.

use std::fmt::Write as _;
use std::io;

use nfactor_core::cox::CoxFit;
use nfactor_core::linear::LinearFit;
use nfactor_core::nf::{NfResult, TraceEntry};
use serde::{Deserialize, Serialize};

use crate::spec::{IntervalMode, Model, TestSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// The sampled p-curve increased somewhere; the bracket came from a linear scan.
    NonMonotone,
    /// Tied event times in the survival data, handled with Breslow's approximation.
    TiedEventTimes,
    /// Zero residual variance in the linear fit.
    DegenerateFit,
    /// Every covariate was omitted, leaving nothing to test.
    DegenerateTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxRow {
    pub name: String,
    pub coef: f64,
    pub hazard_ratio: f64,
    /// Delta-method standard error of the hazard ratio, `HR·se(β)`.
    pub hr_std_err: f64,
    pub std_err: f64,
    pub z: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxSummary {
    pub covariates: Vec<CoxRow>,
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
}

impl From<&CoxFit> for CoxSummary {
    fn from(fit: &CoxFit) -> Self {
        let covariates = (0..fit.names.len())
            .map(|i| CoxRow {
                name: fit.names[i].clone(),
                coef: fit.beta[i],
                hazard_ratio: fit.hazard_ratios[i],
                hr_std_err: fit.hazard_ratios[i] * fit.se_beta[i],
                std_err: fit.se_beta[i],
                z: fit.z_stats[i],
                p: fit.p_wald[i],
            })
            .collect();
        Self {
            covariates,
            omitted: fit.omitted.clone(),
            loglik_null: fit.loglik_null,
            loglik_full: fit.loglik_full,
            lr_stat: fit.lr_stat,
            lr_df: fit.lr_df,
            p_lr: fit.p_lr,
            n_subjects: fit.n_subjects,
            n_failures: fit.n_failures,
            n_obs: fit.n_obs,
            time_at_risk: fit.time_at_risk,
            iterations: fit.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub name: String,
    pub coef: f64,
    pub std_err: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSummary {
    pub coefficients: Vec<LinearRow>,
    pub omitted: Vec<String>,
    pub tested_coefficient: String,
    pub residual_ss: f64,
    pub df_residual: f64,
    pub root_mse: f64,
    pub weighted_n: f64,
}

impl LinearSummary {
    pub fn new(fit: &LinearFit, tested: &str) -> Self {
        let coefficients = (0..fit.names.len())
            .map(|i| LinearRow {
                name: fit.names[i].clone(),
                coef: fit.coefficients[i],
                std_err: fit.standard_errors[i],
                t: fit.t_stats[i],
                p: fit.p_values[i],
            })
            .collect();
        Self {
            coefficients,
            omitted: fit.omitted.clone(),
            tested_coefficient: tested.to_string(),
            residual_ss: fit.residual_ss,
            df_residual: fit.df_residual,
            root_mse: fit.root_mse,
            weighted_n: fit.weighted_n,
        }
    }
}

/// The observed fit at weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitSummary {
    CoxLr(CoxSummary),
    LinearWald(LinearSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unreachable {
    pub max_weight: u64,
    pub best_p: f64,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub test: TestSpec,
    pub fit: FitSummary,
    #[serde(flatten)]
    pub nf: Option<NfResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unreachable: Option<Unreachable>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Writes every float with 17 significant digits so values survive a round trip.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json(report: &Report) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    report
        .serialize(&mut ser)
        .expect("report serialization cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Text => to_text(report),
    }
}

fn model_label(model: Model) -> &'static str {
    match model {
        Model::CoxLr => "Cox regression, likelihood-ratio test",
        Model::LinearWald => "linear regression, Wald t-test",
    }
}

pub fn to_text(report: &Report) -> String {
    let mut s = String::new();
    let spec = &report.test;
    let _ = writeln!(s, "Non-significance factor: {}", model_label(spec.model));
    let _ = writeln!(s, "data: {}", spec.data_path);
    if spec.model == Model::CoxLr {
        let mode = match &spec.interval_mode {
            IntervalMode::ReconstructFromLastTime => "reconstructed from last observation time",
            IntervalMode::ExplicitStartStop { .. } => "explicit start/stop columns",
        };
        let _ = writeln!(s, "intervals: {mode}");
    }
    s.push('\n');

    let _ = writeln!(s, "Fit at weight 1");
    match &report.fit {
        FitSummary::CoxLr(c) => write_cox(&mut s, c),
        FitSummary::LinearWald(l) => write_linear(&mut s, l),
    }
    s.push('\n');

    if let Some(nf) = &report.nf {
        let _ = writeln!(s, "Search (target significance {:.4})", nf.target_alpha);
        if nf.interpolated {
            let _ = writeln!(s, "  W0    = {:<8}  p0 = {:.4}", nf.w0, nf.p0);
            let _ = writeln!(s, "  W1    = {:<8}  p1 = {:.4}", nf.w1, nf.p1);
        } else {
            let _ = writeln!(s, "  W     = {:<8}  p  = {:.4}", nf.w1, nf.p1);
        }
        let _ = writeln!(s, "  W_int = {:.4}", nf.w_int);
        let _ = writeln!(s, "  N_int = {:.4}", nf.n_int);
        let _ = writeln!(s, "  NF    = {}", nf.nf_integer);
        s.push('\n');
        write_trace(&mut s, &nf.trace);
    }
    if let Some(u) = &report.unreachable {
        let _ = writeln!(
            s,
            "Search: no weight up to {} reaches significance {:.4} (best p = {:.4})",
            u.max_weight, spec.target_alpha, u.best_p
        );
        s.push('\n');
        write_trace(&mut s, &u.trace);
    }

    if !report.warnings.is_empty() {
        s.push('\n');
        let _ = writeln!(s, "Warnings");
        for w in &report.warnings {
            let text = match w {
                Warning::NonMonotone => {
                    "p-value is not monotone in the weight; bracket found by linear scan"
                }
                Warning::TiedEventTimes => {
                    "tied event times handled with the Breslow approximation"
                }
                Warning::DegenerateFit => "residual variance is zero",
                Warning::DegenerateTest => "all covariates omitted; nothing to test",
            };
            let _ = writeln!(s, "  - {text}");
        }
    }
    s
}

fn write_cox(s: &mut String, c: &CoxSummary) {
    let _ = writeln!(
        s,
        "  subjects = {}  failures = {}  obs = {}  time at risk = {}",
        c.n_subjects, c.n_failures, c.n_obs, c.time_at_risk
    );
    let _ = writeln!(
        s,
        "  LR chi2({}) = {:.4}  Prob > chi2 = {:.4}",
        c.lr_df, c.lr_stat, c.p_lr
    );
    let _ = writeln!(
        s,
        "  log likelihood = {:.4}  (null {:.4})",
        c.loglik_full, c.loglik_null
    );
    s.push('\n');
    let _ = writeln!(
        s,
        "  {:<12} {:>11} {:>11} {:>9} {:>8}",
        "", "Haz. Ratio", "Std. Err.", "z", "P>|z|"
    );
    for r in &c.covariates {
        let _ = writeln!(
            s,
            "  {:<12} {:>11.4} {:>11.4} {:>9.4} {:>8.4}",
            r.name, r.hazard_ratio, r.hr_std_err, r.z, r.p
        );
    }
    for name in &c.omitted {
        let _ = writeln!(s, "  {name:<12} {:>11}", "(omitted)");
    }
}

fn write_linear(s: &mut String, l: &LinearSummary) {
    let _ = writeln!(
        s,
        "  weighted obs = {}  residual SS = {:.4}  df = {}  root MSE = {:.4}",
        l.weighted_n, l.residual_ss, l.df_residual, l.root_mse
    );
    let _ = writeln!(s, "  tested coefficient: {}", l.tested_coefficient);
    s.push('\n');
    let _ = writeln!(
        s,
        "  {:<12} {:>11} {:>11} {:>9} {:>8}",
        "", "Coef.", "Std. Err.", "t", "P>|t|"
    );
    for r in &l.coefficients {
        let _ = writeln!(
            s,
            "  {:<12} {:>11.4} {:>11.4} {:>9.4} {:>8.4}",
            r.name, r.coef, r.std_err, r.t, r.p
        );
    }
    for name in &l.omitted {
        let _ = writeln!(s, "  {name:<12} {:>11}", "(omitted)");
    }
}

fn write_trace(s: &mut String, trace: &[TraceEntry]) {
    let _ = writeln!(s, "Evaluations");
    let _ = writeln!(s, "  {:>10} {:>10}", "weight", "p");
    for t in trace {
        let _ = writeln!(s, "  {:>10} {:>10.4}", t.weight, t.p);
    }
}
