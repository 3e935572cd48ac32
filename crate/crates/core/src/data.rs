//! Tabular input and counting-process survival records.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("required column `{0}` is missing")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: value is missing or not a finite number")]
    NonNumericCell { row: usize, column: String },
    #[error("input file is empty")]
    EmptyFile,
    #[error("row {row} has {found} fields, header has {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("times are not strictly increasing for subject {0}")]
    NonIncreasingTime(i64),
    #[error("row {0}: event flag must be 0 or 1")]
    InvalidEventFlag(usize),
    #[error("row {0}: subject id must be an integer")]
    InvalidSubjectId(usize),
    #[error("row {0}: interval start must be below its stop")]
    InvalidInterval(usize),
    #[error("subject {0} has overlapping intervals")]
    OverlappingIntervals(i64),
    #[error("frequency weight must be a positive integer")]
    InvalidWeight,
    #[error("columns have unequal lengths")]
    LengthMismatch,
    #[error("failed to read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
}

/// Column-oriented table of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: IndexMap<String, Vec<f64>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset from named columns, checking equal lengths and finiteness.
    pub fn from_columns<I, S>(columns: I) -> Result<Self, DataError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let columns: IndexMap<String, Vec<f64>> =
            columns.into_iter().map(|(k, v)| (k.into(), v)).collect();
        let n_rows = columns.values().next().map_or(0, Vec::len);
        for (name, values) in &columns {
            if values.len() != n_rows {
                return Err(DataError::LengthMismatch);
            }
            if let Some(row) = values.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonNumericCell {
                    row: row + 1,
                    column: name.clone(),
                });
            }
        }
        Ok(Self { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn column(&self, name: &str) -> Result<&[f64], DataError> {
        self.columns
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Every row repeated `w` times consecutively.
    pub fn replicate(&self, w: u64) -> Result<Dataset, DataError> {
        if w == 0 {
            return Err(DataError::InvalidWeight);
        }
        let w = w as usize;
        let columns = self
            .columns
            .iter()
            .map(|(name, values)| {
                let rep = values
                    .iter()
                    .flat_map(|&v| std::iter::repeat(v).take(w))
                    .collect();
                (name.clone(), rep)
            })
            .collect();
        Ok(Dataset {
            columns,
            n_rows: self.n_rows * w,
        })
    }
}

/// Reads a comma-separated file with a header row.
///
/// Only `required_columns` are parsed; other columns may hold anything.
/// An empty `required_columns` list loads every column.
pub fn load_csv(path: impl AsRef<Path>, required_columns: &[&str]) -> Result<Dataset, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(file, required_columns)
}

pub fn read_csv<R: Read>(input: R, required_columns: &[&str]) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(DataError::EmptyFile),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.iter().all(String::is_empty) {
        return Err(DataError::EmptyFile);
    }

    let wanted: Vec<&str> = if required_columns.is_empty() {
        header.iter().map(String::as_str).collect()
    } else {
        required_columns.to_vec()
    };
    let mut index = Vec::with_capacity(wanted.len());
    for name in &wanted {
        match header.iter().position(|h| h == name) {
            Some(i) => index.push(i),
            None => return Err(DataError::MissingColumn(name.to_string())),
        }
    }

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); wanted.len()];
    let mut n_rows = 0;
    for record in records {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        n_rows += 1;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                row: n_rows,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (slot, (&col, name)) in index.iter().zip(&wanted).enumerate() {
            let parsed = record[col].parse::<f64>().ok().filter(|v| v.is_finite());
            match parsed {
                Some(v) => values[slot].push(v),
                None => {
                    return Err(DataError::NonNumericCell {
                        row: n_rows,
                        column: name.to_string(),
                    })
                }
            }
        }
    }

    Ok(Dataset {
        columns: wanted.iter().map(|s| s.to_string()).zip(values).collect(),
        n_rows,
    })
}

/// One `(start, stop]` interval of a subject's follow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord {
    pub subject_id: i64,
    pub start: f64,
    pub stop: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
}

/// Counting-process survival data.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalFrame {
    records: Vec<SurvivalRecord>,
    covariate_names: Vec<String>,
}

fn subject_id(value: f64, row: usize) -> Result<i64, DataError> {
    if value.fract() != 0.0 || value.abs() > i64::MAX as f64 {
        return Err(DataError::InvalidSubjectId(row));
    }
    Ok(value as i64)
}

fn event_flag(value: f64, row: usize) -> Result<bool, DataError> {
    match value {
        v if v == 0.0 => Ok(false),
        v if v == 1.0 => Ok(true),
        _ => Err(DataError::InvalidEventFlag(row)),
    }
}

fn covariate_columns<'a>(d: &'a Dataset, names: &[&str]) -> Result<Vec<&'a [f64]>, DataError> {
    names.iter().map(|n| d.column(n)).collect()
}

impl SurvivalFrame {
    /// Builds a frame from records, validating interval order per subject.
    pub fn new(
        records: Vec<SurvivalRecord>,
        covariate_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let mut last_stop: HashMap<i64, f64> = HashMap::new();
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[a].stop.total_cmp(&records[b].stop));
        for (row, r) in records.iter().enumerate() {
            if !(r.start < r.stop) {
                return Err(DataError::InvalidInterval(row + 1));
            }
            if r.covariates.len() != covariate_names.len() {
                return Err(DataError::LengthMismatch);
            }
        }
        for &i in &order {
            let r = &records[i];
            if let Some(prev) = last_stop.insert(r.subject_id, r.stop) {
                if r.start < prev {
                    return Err(DataError::OverlappingIntervals(r.subject_id));
                }
            }
        }
        Ok(Self {
            records,
            covariate_names,
        })
    }

    /// Rebuilds `(previous time, time]` intervals from last-observation-time rows.
    ///
    /// Rows of a subject are taken in file order; the first interval starts at 0.
    pub fn reconstruct(
        d: &Dataset,
        time_col: &str,
        event_col: &str,
        id_col: &str,
        covariate_cols: &[&str],
    ) -> Result<Self, DataError> {
        let time = d.column(time_col)?;
        let event = d.column(event_col)?;
        let id = d.column(id_col)?;
        let covs = covariate_columns(d, covariate_cols)?;

        let mut previous: HashMap<i64, f64> = HashMap::new();
        let mut records = Vec::with_capacity(d.n_rows());
        for row in 0..d.n_rows() {
            let subject = subject_id(id[row], row + 1)?;
            let event = event_flag(event[row], row + 1)?;
            let start = previous.get(&subject).copied().unwrap_or(0.0);
            let stop = time[row];
            if !(stop > start) {
                return Err(DataError::NonIncreasingTime(subject));
            }
            previous.insert(subject, stop);
            records.push(SurvivalRecord {
                subject_id: subject,
                start,
                stop,
                event,
                covariates: covs.iter().map(|c| c[row]).collect(),
            });
        }
        Ok(Self {
            records,
            covariate_names: covariate_cols.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Reads explicit `(start, stop]` columns instead of reconstructing them.
    pub fn from_intervals(
        d: &Dataset,
        start_col: &str,
        stop_col: &str,
        event_col: &str,
        id_col: &str,
        covariate_cols: &[&str],
    ) -> Result<Self, DataError> {
        let start = d.column(start_col)?;
        let stop = d.column(stop_col)?;
        let event = d.column(event_col)?;
        let id = d.column(id_col)?;
        let covs = covariate_columns(d, covariate_cols)?;
        let records = (0..d.n_rows())
            .map(|row| {
                Ok(SurvivalRecord {
                    subject_id: subject_id(id[row], row + 1)?,
                    start: start[row],
                    stop: stop[row],
                    event: event_flag(event[row], row + 1)?,
                    covariates: covs.iter().map(|c| c[row]).collect(),
                })
            })
            .collect::<Result<Vec<_>, DataError>>()?;
        Self::new(
            records,
            covariate_cols.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn records(&self) -> &[SurvivalRecord] {
        &self.records
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn n_subjects(&self) -> usize {
        let mut ids: Vec<i64> = self.records.iter().map(|r| r.subject_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    pub fn n_events(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    /// Sum of interval lengths.
    pub fn time_at_risk(&self) -> f64 {
        self.records.iter().map(|r| r.stop - r.start).sum()
    }

    /// Physically replicates every subject `w` times, each copy under a fresh id.
    pub fn replicate(&self, w: u64) -> Result<SurvivalFrame, DataError> {
        if w == 0 {
            return Err(DataError::InvalidWeight);
        }
        let mut dense: HashMap<i64, i64> = HashMap::new();
        for r in &self.records {
            let next = dense.len() as i64;
            dense.entry(r.subject_id).or_insert(next);
        }
        let w_i = w as i64;
        let mut records = Vec::with_capacity(self.records.len() * w as usize);
        for r in &self.records {
            for copy in 0..w_i {
                records.push(SurvivalRecord {
                    subject_id: dense[&r.subject_id] * w_i + copy,
                    ..r.clone()
                });
            }
        }
        Ok(SurvivalFrame {
            records,
            covariate_names: self.covariate_names.clone(),
        })
    }

    /// Keeps only the covariates at `indices`, in that order.
    pub fn select_covariates(&self, indices: &[usize]) -> SurvivalFrame {
        SurvivalFrame {
            records: self
                .records
                .iter()
                .map(|r| SurvivalRecord {
                    covariates: indices.iter().map(|&i| r.covariates[i]).collect(),
                    ..r.clone()
                })
                .collect(),
            covariate_names: indices
                .iter()
                .map(|&i| self.covariate_names[i].clone())
                .collect(),
        }
    }
}
