//! File formats: streaming CSV ingestion, the screen-result report, the
//! power-table CSV/JSON, and the scenario grid.
//!
//! The CSV dialect is deliberately plain: comma separated, mandatory header
//! row, `.` decimal separator, no quoting of numerics. Rows are parsed one
//! at a time into [`Observation`]s, so ingestion memory is bounded by a
//! single row no matter how long the file is.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use maxcorr_core::{Observation, ScreenResult, Sign};

use crate::sim::{Method, Model, PowerRow, ScenarioSpec, SimError};

pub const SCREEN_SCHEMA: &str = "screen-result/1";
pub const POWER_SCHEMA: &str = "power-table/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("input has no header row")]
    EmptyInput,
    #[error("no column named {0:?} (and no fallback applies)")]
    MissingYColumn(String),
    #[error("y column index {index} out of range: file has {columns} columns")]
    YIndexOutOfRange { index: usize, columns: usize },
    #[error("file needs at least one predictor column besides the outcome")]
    NoPredictors,
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a finite number")]
    NonNumericCell {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow { row: u64, expected: usize, got: u64 },
    #[error("grid line {line}: {message}")]
    Grid { line: u64, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// How to locate the outcome column.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum YColumn {
    /// A column named `y` if present, otherwise the last column.
    #[default]
    Auto,
    Name(String),
    /// 1-based position in the file.
    Position(usize),
}

impl YColumn {
    /// `--y-col` strings: an integer means a 1-based position, anything else
    /// a column name.
    pub fn parse(arg: &str) -> YColumn {
        match arg.parse::<usize>() {
            Ok(idx) => YColumn::Position(idx),
            Err(_) => YColumn::Name(arg.to_string()),
        }
    }

    fn resolve(&self, headers: &[String]) -> Result<usize, IoError> {
        match self {
            YColumn::Auto => Ok(headers
                .iter()
                .position(|h| h == "y")
                .unwrap_or(headers.len() - 1)),
            YColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| IoError::MissingYColumn(name.clone())),
            YColumn::Position(idx) => {
                if *idx >= 1 && *idx <= headers.len() {
                    Ok(idx - 1)
                } else {
                    Err(IoError::YIndexOutOfRange {
                        index: *idx,
                        columns: headers.len(),
                    })
                }
            }
        }
    }
}

/// Streaming reader turning CSV rows into observations.
pub struct CsvObservations<R: Read> {
    reader: csv::Reader<R>,
    record: csv::StringRecord,
    headers: Vec<String>,
    predictor_names: Vec<String>,
    y_index: usize,
    /// 1-based index of the next data row, for error reporting.
    next_row: u64,
}

impl<R: Read> CsvObservations<R> {
    pub fn new(input: R, y_col: &YColumn) -> Result<Self, IoError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(input);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() {
            return Err(IoError::EmptyInput);
        }
        let y_index = y_col.resolve(&headers)?;
        if headers.len() < 2 {
            return Err(IoError::NoPredictors);
        }
        let predictor_names = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != y_index)
            .map(|(_, h)| h.clone())
            .collect();
        Ok(Self {
            reader,
            record: csv::StringRecord::new(),
            headers,
            predictor_names,
            y_index,
            next_row: 1,
        })
    }

    /// Number of predictor columns.
    pub fn p(&self) -> usize {
        self.headers.len() - 1
    }

    pub fn y_name(&self) -> &str {
        &self.headers[self.y_index]
    }

    /// Predictor column names in file order (the outcome column removed).
    pub fn predictor_names(&self) -> &[String] {
        &self.predictor_names
    }

    fn parse_record(&self) -> Result<Observation, IoError> {
        let row = self.next_row;
        if self.record.len() != self.headers.len() {
            return Err(IoError::RaggedRow {
                row,
                expected: self.headers.len(),
                got: self.record.len() as u64,
            });
        }
        let mut x = Vec::with_capacity(self.headers.len() - 1);
        let mut y = 0.0;
        for (i, field) in self.record.iter().enumerate() {
            let value: f64 = field.trim().parse().unwrap_or(f64::NAN);
            if !value.is_finite() {
                return Err(IoError::NonNumericCell {
                    row,
                    column: self.headers[i].clone(),
                    value: field.to_string(),
                });
            }
            if i == self.y_index {
                y = value;
            } else {
                x.push(value);
            }
        }
        Ok(Observation::new(x, y))
    }
}

impl<R: Read> std::fmt::Debug for CsvObservations<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CsvObservations")
            .field("headers", &self.headers)
            .field("y_index", &self.y_index)
            .field("next_row", &self.next_row)
            .finish_non_exhaustive()
    }
}

impl<R: Read> Iterator for CsvObservations<R> {
    type Item = Result<Observation, IoError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.reader.read_record(&mut self.record) {
            Ok(false) => None,
            Ok(true) => {
                let parsed = self.parse_record();
                self.next_row += 1;
                Some(parsed)
            }
            Err(e) => Some(Err(e.into())),
        }
    }
}

/// Opens a CSV file for streaming ingestion.
pub fn open_csv(path: &Path, y_col: &YColumn) -> Result<CsvObservations<BufReader<File>>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    CsvObservations::new(BufReader::new(file), y_col)
}

/// Counts data rows without holding more than one record in memory.
pub fn count_csv_rows(path: &Path) -> Result<usize, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let mut record = csv::ByteRecord::new();
    let mut rows = 0usize;
    while reader.read_byte_record(&mut record)? {
        rows += 1;
    }
    Ok(rows)
}

/// Writes a dataset in the dialect `parse`/`open_csv` read: predictors
/// `x1..xp`, outcome column `y` last.
pub fn write_dataset_csv<W: Write>(out: W, rows: &[Observation]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let p = rows.first().map_or(0, Observation::dim);
    let mut header: Vec<String> = (1..=p).map(|k| format!("x{k}")).collect();
    header.push("y".to_string());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(p + 1);
    for o in rows {
        record.clear();
        // `{}` on f64 is the shortest representation that round-trips.
        record.extend(o.x.iter().map(|v| format!("{v}")));
        record.push(format!("{}", o.y));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// The selected predictor in a report: 1-based position among the predictor
/// columns, its column name, and the sign of its correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedIndex {
    pub k: usize,
    pub column: String,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopCorrelation {
    pub k: usize,
    pub column: String,
    pub corr: f64,
}

/// Serialized form of a [`ScreenResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenReport {
    pub schema: String,
    pub psi_hat: f64,
    pub sigma_bar: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub n: u64,
    pub ell_n: u64,
    pub reject_null: bool,
    pub selected: SelectedIndex,
    pub top_correlations: Vec<TopCorrelation>,
    pub degenerate_gradient_terms: u64,
    pub floored_sigma_terms: u64,
    pub rows_outside_unit_range: u64,
}

impl ScreenReport {
    /// `predictor_names` must be in the same column order the observations
    /// used; pass an empty slice to fall back to `x1..xp` naming.
    pub fn from_result(res: &ScreenResult, predictor_names: &[String]) -> Self {
        let name = |k: usize| {
            predictor_names
                .get(k)
                .cloned()
                .unwrap_or_else(|| format!("x{}", k + 1))
        };
        let sel = res.diagnostics.selected;
        Self {
            schema: SCREEN_SCHEMA.to_string(),
            psi_hat: res.psi_hat,
            sigma_bar: res.sigma_bar,
            ci_lower: res.ci_lower,
            ci_upper: res.ci_upper,
            alpha: res.alpha,
            n: res.n as u64,
            ell_n: res.ell_n as u64,
            reject_null: res.reject_null,
            selected: SelectedIndex {
                k: sel.k + 1,
                column: name(sel.k),
                sign: match sel.sign {
                    Sign::Plus => 1,
                    Sign::Minus => -1,
                },
            },
            top_correlations: res
                .diagnostics
                .top_correlations
                .iter()
                .map(|(k, corr)| TopCorrelation {
                    k: k + 1,
                    column: name(*k),
                    corr: *corr,
                })
                .collect(),
            degenerate_gradient_terms: res.diagnostics.degenerate_gradient_terms,
            floored_sigma_terms: res.diagnostics.floored_sigma_terms,
            rows_outside_unit_range: res.diagnostics.rows_outside_unit_range,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Single-record CSV rendering; the top-correlation list is joined as
    /// `column:corr` pairs.
    pub fn to_csv(&self) -> String {
        let top = self
            .top_correlations
            .iter()
            .map(|t| format!("{}:{}", t.column, t.corr))
            .collect::<Vec<_>>()
            .join(";");
        let mut out = String::new();
        out.push_str(
            "psi_hat,sigma_bar,ci_lower,ci_upper,alpha,n,ell_n,reject_null,\
             selected_k,selected_column,selected_sign,degenerate_gradient_terms,\
             floored_sigma_terms,rows_outside_unit_range,top_correlations\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            self.psi_hat,
            self.sigma_bar,
            self.ci_lower,
            self.ci_upper,
            self.alpha,
            self.n,
            self.ell_n,
            self.reject_null,
            self.selected.k,
            self.selected.column,
            self.selected.sign,
            self.degenerate_gradient_terms,
            self.floored_sigma_terms,
            self.rows_outside_unit_range,
            top
        ));
        out
    }
}

pub const POWER_CSV_HEADER: &str = "model,n,p,rho,method,reps,rejections,power,mc_stderr";

/// Power table as CSV, one data row per scenario.
pub fn power_table_csv(rows: &[PowerRow]) -> String {
    let mut out = String::from(POWER_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.spec.model,
            r.spec.n,
            r.spec.p,
            r.spec.rho,
            r.spec.method,
            r.spec.reps,
            r.rejections,
            r.power,
            r.mc_stderr
        ));
    }
    out
}

#[derive(Serialize)]
struct PowerTableJson<'a> {
    schema: &'static str,
    rows: &'a [PowerRow],
}

/// Power table as JSON with a schema marker.
pub fn power_table_json(rows: &[PowerRow]) -> String {
    let mut s = serde_json::to_string_pretty(&PowerTableJson {
        schema: POWER_SCHEMA,
        rows,
    })
    .expect("power table serializes");
    s.push('\n');
    s
}

/// Grid defaults supplied from the command line; per-row columns override.
#[derive(Debug, Clone, Copy)]
pub struct GridDefaults {
    pub reps: u32,
    pub alpha: f64,
    pub seed: u64,
}

/// Reads a scenario grid CSV. Required columns: `model,n,p,rho,method`;
/// optional: `reps,alpha,seed`.
pub fn read_grid(path: &Path, defaults: GridDefaults) -> Result<Vec<ScenarioSpec>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let required = |name: &str| {
        col(name).ok_or_else(|| IoError::Grid {
            line: 1,
            message: format!("missing required column {name:?}"),
        })
    };
    let model_col = required("model")?;
    let n_col = required("n")?;
    let p_col = required("p")?;
    let rho_col = required("rho")?;
    let method_col = required("method")?;
    let reps_col = col("reps");
    let alpha_col = col("alpha");
    let seed_col = col("seed");

    let mut specs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2; // 1-based file line, after the header
        let record = record?;
        let field = |idx: usize, name: &str| -> Result<&str, IoError> {
            record.get(idx).filter(|s| !s.is_empty()).ok_or_else(|| IoError::Grid {
                line,
                message: format!("missing value for {name:?}"),
            })
        };
        let parse_err = |name: &str, value: &str| IoError::Grid {
            line,
            message: format!("cannot parse {name} value {value:?}"),
        };
        let model: Model = field(model_col, "model")?
            .parse()
            .map_err(|_| parse_err("model", record.get(model_col).unwrap_or("")))?;
        let n: usize = field(n_col, "n")?
            .parse()
            .map_err(|_| parse_err("n", record.get(n_col).unwrap_or("")))?;
        let p: usize = field(p_col, "p")?
            .parse()
            .map_err(|_| parse_err("p", record.get(p_col).unwrap_or("")))?;
        let rho: f64 = field(rho_col, "rho")?
            .parse()
            .map_err(|_| parse_err("rho", record.get(rho_col).unwrap_or("")))?;
        let method: Method = field(method_col, "method")?
            .parse()
            .map_err(|_| parse_err("method", record.get(method_col).unwrap_or("")))?;
        let opt_field = |idx: Option<usize>| -> Option<&str> {
            idx.and_then(|i| record.get(i))
                .map(str::trim)
                .filter(|s| !s.is_empty())
        };
        let reps = match opt_field(reps_col) {
            Some(s) => s.parse().map_err(|_| parse_err("reps", s))?,
            None => defaults.reps,
        };
        let alpha = match opt_field(alpha_col) {
            Some(s) => s.parse().map_err(|_| parse_err("alpha", s))?,
            None => defaults.alpha,
        };
        let seed = match opt_field(seed_col) {
            Some(s) => s.parse().map_err(|_| parse_err("seed", s))?,
            None => defaults.seed,
        };
        let spec = ScenarioSpec {
            model,
            n,
            p,
            rho,
            reps,
            alpha,
            seed,
            method,
        };
        spec.validate().map_err(|e| IoError::Grid {
            line,
            message: e.to_string(),
        })?;
        specs.push(spec);
    }
    Ok(specs)
}
