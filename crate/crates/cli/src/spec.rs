use serde::{Deserialize, Serialize};

use nfactor_core::linear::INTERCEPT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    CoxLr,
    LinearWald,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum IntervalMode {
    ReconstructFromLastTime,
    ExplicitStartStop { start: String, stop: String },
}

/// Which test to run on which columns, and the search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub model: Model,
    pub data_path: String,
    pub target_alpha: f64,
    pub max_weight: u64,
    pub time: Option<String>,
    pub event: Option<String>,
    pub id: Option<String>,
    pub covariates: Vec<String>,
    pub response: Option<String>,
    pub wald_coefficient: String,
    pub interval_mode: IntervalMode,
}

impl TestSpec {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_alpha > 0.0 && self.target_alpha < 1.0) {
            return Err("target significance must lie in (0,1)".into());
        }
        if self.max_weight == 0 {
            return Err("maximum weight must be at least 1".into());
        }
        let missing = |flag: &str| Err(format!("--{flag} is required for this model"));
        match self.model {
            Model::CoxLr => {
                if self.event.is_none() {
                    return missing("event");
                }
                if self.id.is_none() {
                    return missing("id");
                }
                if self.interval_mode == IntervalMode::ReconstructFromLastTime
                    && self.time.is_none()
                {
                    return missing("time");
                }
                if self.covariates.is_empty() {
                    return missing("covariates");
                }
            }
            Model::LinearWald => {
                if self.response.is_none() {
                    return missing("response");
                }
                if self.wald_coefficient != INTERCEPT
                    && !self.covariates.contains(&self.wald_coefficient)
                {
                    return Err(format!(
                        "wald coefficient `{}` is neither {INTERCEPT} nor a covariate",
                        self.wald_coefficient
                    ));
                }
            }
        }
        Ok(())
    }

    /// Columns the CSV must provide for this test.
    pub fn required_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = Vec::new();
        match self.model {
            Model::CoxLr => {
                cols.extend(self.id.as_deref());
                match &self.interval_mode {
                    IntervalMode::ReconstructFromLastTime => cols.extend(self.time.as_deref()),
                    IntervalMode::ExplicitStartStop { start, stop } => {
                        cols.push(start);
                        cols.push(stop);
                    }
                }
                cols.extend(self.event.as_deref());
            }
            Model::LinearWald => cols.extend(self.response.as_deref()),
        }
        for c in &self.covariates {
            if !cols.contains(&c.as_str()) {
                cols.push(c);
            }
        }
        cols
    }
}
