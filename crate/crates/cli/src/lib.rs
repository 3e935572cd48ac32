//! Command-line front end for the non-significance factor computation.
//!
//! Exit codes: 0 on success, 1 on input or model errors, 2 when no weight up
//! to the cap reaches the target significance (the report is still printed).

pub mod report;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use nfactor_core::cox::{fit_cox, CoxError};
use nfactor_core::data::{load_csv, DataError, Dataset, SurvivalFrame};
use nfactor_core::linear::{fit_wls, LinearError, INTERCEPT};
use nfactor_core::nf::{compute_nf, NfError, NfResult, DEFAULT_MAX_WEIGHT};
use thiserror::Error;

pub use report::{emit_report, FitSummary, Format, Report, Unreachable, Warning};
pub use spec::{IntervalMode, Model, TestSpec};

#[derive(Debug, Parser)]
#[command(
    name = "nfactor",
    version,
    about = "Smallest frequency weight under which a test on the same data becomes significant"
)]
pub struct Args {
    /// Test to run.
    #[arg(long, value_enum)]
    pub model: Model,
    /// CSV file with a header row.
    #[arg(long)]
    pub data: String,
    /// Last-observation time column (cox-lr).
    #[arg(long)]
    pub time: Option<String>,
    /// Event indicator column, 0 or 1 (cox-lr).
    #[arg(long)]
    pub event: Option<String>,
    /// Subject identifier column (cox-lr).
    #[arg(long)]
    pub id: Option<String>,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Response column (linear-wald).
    #[arg(long)]
    pub response: Option<String>,
    /// Coefficient whose Wald test is used (linear-wald).
    #[arg(long, default_value = INTERCEPT)]
    pub wald_coefficient: String,
    /// Target significance level.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Largest weight tried before giving up.
    #[arg(long, default_value_t = DEFAULT_MAX_WEIGHT)]
    pub max_weight: u64,
    /// Use explicit interval columns START,STOP instead of reconstructing them.
    #[arg(long, value_name = "START,STOP")]
    pub explicit_intervals: Option<String>,
    /// Output format.
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Cox(#[from] CoxError),
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error("{0}")]
    Search(String),
}

impl Args {
    pub fn to_spec(&self) -> Result<TestSpec, CliError> {
        let interval_mode = match &self.explicit_intervals {
            None => IntervalMode::ReconstructFromLastTime,
            Some(pair) => {
                let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
                match parts.as_slice() {
                    [start, stop] if !start.is_empty() && !stop.is_empty() => {
                        IntervalMode::ExplicitStartStop {
                            start: start.to_string(),
                            stop: stop.to_string(),
                        }
                    }
                    _ => {
                        return Err(CliError::Usage(
                            "--explicit-intervals expects two column names: START,STOP".into(),
                        ))
                    }
                }
            }
        };
        let spec = TestSpec {
            model: self.model,
            data_path: self.data.clone(),
            target_alpha: self.alpha,
            max_weight: self.max_weight,
            time: self.time.clone(),
            event: self.event.clone(),
            id: self.id.clone(),
            covariates: self.covariates.clone(),
            response: self.response.clone(),
            wald_coefficient: self.wald_coefficient.clone(),
            interval_mode,
        };
        spec.validate().map_err(CliError::Usage)?;
        Ok(spec)
    }
}

/// Outcome of a computation, before rendering.
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

fn search<E: std::error::Error + 'static>(
    result: Result<NfResult, NfError<E>>,
) -> Result<(Option<NfResult>, Option<Unreachable>), CliError> {
    match result {
        Ok(nf) => Ok((Some(nf), None)),
        Err(NfError::UnreachableSignificance {
            max_weight,
            best_p,
            trace,
        }) => Ok((
            None,
            Some(Unreachable {
                max_weight,
                best_p,
                trace,
            }),
        )),
        Err(e) => Err(CliError::Search(e.to_string())),
    }
}

fn covariate_refs(spec: &TestSpec) -> Vec<&str> {
    spec.covariates.iter().map(String::as_str).collect()
}

fn run_cox(spec: &TestSpec, data: &Dataset) -> Result<Outcome, CliError> {
    let covs = covariate_refs(spec);
    let event = spec.event.as_deref().expect("validated");
    let id = spec.id.as_deref().expect("validated");
    let frame = match &spec.interval_mode {
        IntervalMode::ReconstructFromLastTime => SurvivalFrame::reconstruct(
            data,
            spec.time.as_deref().expect("validated"),
            event,
            id,
            &covs,
        )?,
        IntervalMode::ExplicitStartStop { start, stop } => {
            SurvivalFrame::from_intervals(data, start, stop, event, id, &covs)?
        }
    };
    let fit = fit_cox(&frame, 1)?;
    let mut warnings = Vec::new();
    if fit.tied_event_times {
        warnings.push(Warning::TiedEventTimes);
    }
    if fit.degenerate {
        warnings.push(Warning::DegenerateTest);
    }
    let (nf, unreachable) = search(compute_nf(
        |w| fit_cox(&frame, w).map(|f| f.p_lr),
        data.n_rows(),
        spec.target_alpha,
        spec.max_weight,
    ))?;
    finish(
        spec,
        FitSummary::CoxLr((&fit).into()),
        nf,
        unreachable,
        warnings,
    )
}

fn run_linear(spec: &TestSpec, data: &Dataset) -> Result<Outcome, CliError> {
    let covs = covariate_refs(spec);
    let response = spec.response.as_deref().expect("validated");
    let fit = fit_wls(data, response, &covs, 1)?;
    let target = fit.index_of(&spec.wald_coefficient).ok_or_else(|| {
        CliError::Usage(format!(
            "coefficient `{}` was omitted for collinearity and cannot be tested",
            spec.wald_coefficient
        ))
    })?;
    let mut warnings = Vec::new();
    if fit.degenerate {
        warnings.push(Warning::DegenerateFit);
    }
    let (nf, unreachable) = search(compute_nf(
        |w| fit_wls(data, response, &covs, w).map(|f| f.p_values[target]),
        data.n_rows(),
        spec.target_alpha,
        spec.max_weight,
    ))?;
    let summary = report::LinearSummary::new(&fit, &spec.wald_coefficient);
    finish(
        spec,
        FitSummary::LinearWald(summary),
        nf,
        unreachable,
        warnings,
    )
}

fn finish(
    spec: &TestSpec,
    fit: FitSummary,
    nf: Option<NfResult>,
    unreachable: Option<Unreachable>,
    mut warnings: Vec<Warning>,
) -> Result<Outcome, CliError> {
    if nf.as_ref().is_some_and(|r| r.non_monotone) {
        warnings.push(Warning::NonMonotone);
    }
    let exit_code = if unreachable.is_some() { 2 } else { 0 };
    Ok(Outcome {
        report: Report {
            test: spec.clone(),
            fit,
            nf,
            unreachable,
            warnings,
        },
        exit_code,
    })
}

/// Loads the data and runs the search described by `spec`.
pub fn execute(spec: &TestSpec) -> Result<Outcome, CliError> {
    let data = load_csv(&spec.data_path, &spec.required_columns())?;
    match spec.model {
        Model::CoxLr => run_cox(spec, &data),
        Model::LinearWald => run_linear(spec, &data),
    }
}

/// Parses `argv`, runs, and writes the report or a diagnostic. Returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    let outcome = args.to_spec().and_then(|spec| execute(&spec));
    match outcome {
        Ok(o) => {
            let _ = stdout.write_all(emit_report(&o.report, args.format).as_bytes());
            o.exit_code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
