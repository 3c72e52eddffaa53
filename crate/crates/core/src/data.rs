//! Time-series ingestion and normal-operation statistics.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{self, NUM_VARIABLES};

/// Highest fault id of the original process (0 = normal operation).
pub const MAX_FAULT_ID: u8 = 20;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("unexpected extra column `{name}`; the canonical schema has {NUM_VARIABLES} columns")]
    ExtraColumn { name: String },
    #[error("header column {index} is `{found}`, expected `{expected}`")]
    HeaderMismatch {
        index: usize,
        expected: &'static str,
        found: String,
    },
    #[error("series contains no samples")]
    EmptySeries,
    #[error("fault id {0} out of range 0..={MAX_FAULT_ID}")]
    InvalidFaultId(u8),
    #[error("sample must have {NUM_VARIABLES} values, got {0}")]
    WrongArity(usize),
    #[error("non-finite value in column {column}")]
    NonFinite { column: usize },
    #[error("at least 2 samples required, got {0}")]
    InsufficientData(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One time step of the 52 process variables, in raw engineering units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleVector {
    t: usize,
    values: Vec<f64>,
}

impl SampleVector {
    pub fn new(t: usize, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != NUM_VARIABLES {
            return Err(DataError::WrongArity(values.len()));
        }
        if let Some(column) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite { column });
        }
        Ok(Self { t, values })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same values stamped with a different time index.
    pub fn with_t(&self, t: usize) -> Self {
        Self {
            t,
            values: self.values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    fault_id: u8,
    samples: Vec<SampleVector>,
}

impl TimeSeries {
    /// Builds a series from raw rows; row `i` gets time index `i`.
    pub fn from_rows(fault_id: u8, rows: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let samples = rows
            .into_iter()
            .enumerate()
            .map(|(t, row)| SampleVector::new(t, row))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(fault_id, samples)
    }

    pub fn new(fault_id: u8, samples: Vec<SampleVector>) -> Result<Self, DataError> {
        if fault_id > MAX_FAULT_ID {
            return Err(DataError::InvalidFaultId(fault_id));
        }
        if samples.is_empty() {
            return Err(DataError::EmptySeries);
        }
        Ok(Self { fault_id, samples })
    }

    pub fn fault_id(&self) -> u8 {
        self.fault_id
    }

    pub fn samples(&self) -> &[SampleVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s.values[j])
    }

    /// Writes the series as canonical headered CSV. Values use the shortest
    /// representation that parses back to the identical `f64`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<_> = catalog::csv_header().collect();
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let row: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Per-column mean and sample standard deviation of normal-operation data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub n: usize,
}

/// Path of the series for `fault_id` inside a data directory.
pub fn fault_path(data_dir: &Path, fault_id: u8) -> PathBuf {
    data_dir.join(format!("fault_{fault_id}.csv"))
}

/// Loads a CSV file with 52 numeric columns. A header row is optional; when
/// present it must match the canonical `xmeas_1..xmeas_41, xmv_1..xmv_11`.
pub fn load_timeseries(path: &Path, fault_id: u8) -> Result<TimeSeries, DataError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(DataError::MissingFile(path.to_path_buf()))
        }
        Err(e) => return Err(e.into()),
    };
    read_timeseries(file, fault_id)
}

pub fn read_timeseries<R: io::Read>(reader: R, fault_id: u8) -> Result<TimeSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i as u64 + 1, |p| p.line());
        if i == 0 && record.iter().any(|f| f.parse::<f64>().is_err()) {
            let names: Vec<String> = record.iter().map(str::to_owned).collect();
            validate_header(&names)?;
            header = Some(names);
            continue;
        }
        if record.len() == NUM_VARIABLES + 1 {
            let name = header
                .as_ref()
                .and_then(|h| h.get(NUM_VARIABLES).cloned())
                .unwrap_or_else(|| format!("column {}", NUM_VARIABLES + 1));
            return Err(DataError::ExtraColumn { name });
        }
        if record.len() != NUM_VARIABLES {
            return Err(DataError::MalformedRow {
                line,
                reason: format!("expected {NUM_VARIABLES} columns, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(NUM_VARIABLES);
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                line,
                reason: format!("non-numeric value `{field}` in column {}", j + 1),
            })?;
            if !v.is_finite() {
                return Err(DataError::MalformedRow {
                    line,
                    reason: format!("non-finite value in column {}", j + 1),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    TimeSeries::from_rows(fault_id, rows)
}

fn validate_header(names: &[String]) -> Result<(), DataError> {
    for (index, expected) in catalog::csv_header().enumerate() {
        match names.get(index) {
            Some(found) if found.eq_ignore_ascii_case(expected) => {}
            found => {
                return Err(DataError::HeaderMismatch {
                    index,
                    expected,
                    found: found.cloned().unwrap_or_default(),
                })
            }
        }
    }
    match names.get(NUM_VARIABLES) {
        Some(extra) => Err(DataError::ExtraColumn {
            name: extra.clone(),
        }),
        None => Ok(()),
    }
}

/// Column means and sample standard deviations (divisor n − 1).
pub fn compute_normal_stats(ts: &TimeSeries) -> Result<NormalStats, DataError> {
    let n = ts.len();
    if n < 2 {
        return Err(DataError::InsufficientData(n));
    }
    let mut mean = Vec::with_capacity(NUM_VARIABLES);
    let mut std = Vec::with_capacity(NUM_VARIABLES);
    for j in 0..NUM_VARIABLES {
        let m = compensated_sum(ts.column(j)) / n as f64;
        let ss = compensated_sum(ts.column(j).map(|v| (v - m) * (v - m)));
        mean.push(m);
        std.push((ss / (n - 1) as f64).sqrt());
    }
    Ok(NormalStats { mean, std, n })
}

/// Neumaier summation.
pub(crate) fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
