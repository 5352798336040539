//! CSV panel files.
//!
//! A header row names every column: `x_*` covariates, `y_*` response series
//! and optional `truth_*` ground-truth columns. Leading lines starting with
//! `#` are comments. Numbers are written with 17 significant digits so that
//! every `f64` survives a write/read cycle unchanged. Missing cells are an
//! error; nothing is imputed.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SglmError};
use crate::expfam::Family;
use crate::glm::Design;
use crate::sibling::Panel;
use crate::simulate::SimTruth;

pub const COVARIATE_PREFIX: &str = "x_";
pub const RESPONSE_PREFIX: &str = "y_";
pub const TRUTH_PREFIX: &str = "truth_";

/// Lossless decimal form of a binary64 value.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        // keeps the sign of negative zero out of the files
        return "0".into();
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{}", v as i64);
    }
    format!("{v:.16e}")
}

/// A rectangular table of named numeric columns plus leading comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub names: Vec<String>,
    pub data: DMatrix<f64>,
}

impl Table {
    pub fn new(names: Vec<String>, data: DMatrix<f64>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(SglmError::dim(format!(
                "{} column names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        for (k, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(['\n', '\r', ',', '"']) {
                return Err(SglmError::Config(format!("invalid column name '{n}'")));
            }
            if names[..k].contains(n) {
                return Err(SglmError::Config(format!("duplicate column '{n}'")));
            }
        }
        Ok(Table {
            comments: Vec::new(),
            names,
            data,
        })
    }

    pub fn with_comments(mut self, comments: Vec<String>) -> Self {
        self.comments = comments;
        self
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<DVector<f64>> {
        self.column_index(name)
            .map(|j| self.data.column(j).into_owned())
    }

    fn prefixed(&self, prefix: &str) -> Vec<usize> {
        (0..self.names.len())
            .filter(|&j| self.names[j].starts_with(prefix))
            .collect()
    }

    pub fn covariate_columns(&self) -> Vec<usize> {
        self.prefixed(COVARIATE_PREFIX)
    }

    pub fn response_columns(&self) -> Vec<usize> {
        self.prefixed(RESPONSE_PREFIX)
    }

    pub fn truth_columns(&self) -> Vec<usize> {
        self.prefixed(TRUTH_PREFIX)
    }

    pub fn has_truth(&self) -> bool {
        !self.truth_columns().is_empty()
    }

    /// Checks the column naming rules of a panel file.
    pub fn check_panel_layout(&self) -> Result<()> {
        for n in &self.names {
            if ![COVARIATE_PREFIX, RESPONSE_PREFIX, TRUTH_PREFIX]
                .iter()
                .any(|p| n.starts_with(p))
            {
                return Err(SglmError::Parse {
                    line: 1,
                    column: n.clone(),
                    message: "panel columns must start with x_, y_ or truth_".into(),
                });
            }
        }
        if self.response_columns().is_empty() {
            return Err(SglmError::Parse {
                line: 1,
                column: String::new(),
                message: "panel has no y_ columns".into(),
            });
        }
        Ok(())
    }

    /// Shared design from the `x_*` columns, optionally with a leading intercept.
    pub fn design(&self, intercept: bool) -> Result<Design> {
        let cols = self.covariate_columns();
        let names: Vec<String> = cols.iter().map(|&j| self.names[j].clone()).collect();
        if cols.is_empty() {
            if !intercept {
                return Err(SglmError::Config(
                    "panel has no x_ columns; an intercept is required".into(),
                ));
            }
            return Design::new(
                DMatrix::from_element(self.nrows(), 1, 1.0),
                vec!["intercept".into()],
            );
        }
        let d = Design::new(self.data.select_columns(&cols), names)?;
        if intercept {
            d.with_intercept()
        } else {
            Ok(d)
        }
    }

    pub fn response_names(&self) -> Vec<String> {
        self.response_columns()
            .iter()
            .map(|&j| self.names[j].clone())
            .collect()
    }

    pub fn responses(&self) -> DMatrix<f64> {
        self.data.select_columns(&self.response_columns())
    }

    /// Builds a sibling panel; `target` is a response column name (default: the first).
    pub fn panel(&self, family: Family, target: Option<&str>, intercept: bool) -> Result<Panel> {
        self.check_panel_layout()?;
        let names = self.response_names();
        let t = match target {
            None => 0,
            Some(name) => names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| SglmError::Config(format!("unknown target column '{name}'")))?,
        };
        Panel::new(self.design(intercept)?, self.responses(), names, t, family)
    }

    /// Panel columns for a simulation plus its ground truth.
    ///
    /// Per-series scalars (`w_x`, `w_n`) and the natural-parameter offset are
    /// stored as constant columns to keep the file rectangular.
    pub fn from_truth(truth: &SimTruth) -> Result<Self> {
        let (m, q) = (truth.nobs(), truth.nseries());
        let mut names = vec!["x_1".to_string()];
        let mut cols: Vec<DVector<f64>> = vec![truth.x.clone()];
        for j in 0..q {
            names.push(format!("y_{}", j + 1));
            cols.push(truth.y.column(j).into_owned());
        }
        names.push("truth_noise".into());
        cols.push(truth.noise.clone());
        names.push("truth_offset".into());
        cols.push(DVector::from_element(m, truth.offset));
        for j in 0..q {
            let s = j + 1;
            names.push(format!("truth_z_{s}"));
            cols.push(truth.z.column(j).into_owned());
            names.push(format!("truth_wx_{s}"));
            cols.push(DVector::from_element(m, truth.w_x[j]));
            names.push(format!("truth_wn_{s}"));
            cols.push(DVector::from_element(m, truth.w_n[j]));
        }
        Table::new(names, DMatrix::from_columns(&cols))
    }

    /// Ground truth for response column `y_<s>`, when the file carries it.
    pub fn series_truth(&self, response: &str) -> Option<SeriesTruth> {
        let suffix = response.strip_prefix(RESPONSE_PREFIX)?;
        let z = self.column(&format!("truth_z_{suffix}"))?;
        let w_x = *self.column(&format!("truth_wx_{suffix}"))?.get(0)?;
        let noise = self.column("truth_noise")?;
        let offset = self
            .column("truth_offset")
            .and_then(|c| c.get(0).copied())
            .unwrap_or(0.0);
        Some(SeriesTruth {
            z,
            w_x,
            noise,
            offset,
        })
    }
}

/// Ground truth for one simulated series as recovered from a panel file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTruth {
    pub z: DVector<f64>,
    pub w_x: f64,
    pub noise: DVector<f64>,
    pub offset: f64,
}

pub fn write_table<W: Write>(mut w: W, table: &Table) -> Result<()> {
    for c in &table.comments {
        for line in c.lines() {
            writeln!(w, "# {line}")?;
        }
    }
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let csv_err = |e: csv::Error| SglmError::Io(e.to_string());
    out.write_record(&table.names).map_err(csv_err)?;
    for i in 0..table.nrows() {
        out.write_record(table.data.row(i).iter().map(|&v| format_number(v)))
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table<R: Read>(mut r: R) -> Result<Table> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| SglmError::Parse {
        line: 0,
        column: String::new(),
        message: format!("input is not UTF-8 text: {e}"),
    })?;
    let comments: Vec<String> = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim_start().to_string())
        .collect();

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header_err = |e: csv::Error| SglmError::Parse {
        line: e.position().map_or(0, |p| p.line()),
        column: String::new(),
        message: e.to_string(),
    };
    let names: Vec<String> = rdr
        .headers()
        .map_err(header_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names.iter().all(String::is_empty) {
        return Err(SglmError::Parse {
            line: 1,
            column: String::new(),
            message: "missing header row".into(),
        });
    }

    let mut values = Vec::new();
    let mut nrows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(header_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() > names.len() {
            return Err(SglmError::Parse {
                line,
                column: String::new(),
                message: format!("{} cells but {} header columns", rec.len(), names.len()),
            });
        }
        for (k, name) in names.iter().enumerate() {
            let cell = rec.get(k).unwrap_or("");
            if cell.is_empty() {
                return Err(SglmError::Parse {
                    line,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| SglmError::Parse {
                line,
                column: name.clone(),
                message: format!("'{cell}' is not a number"),
            })?;
            values.push(v);
        }
        nrows += 1;
    }
    let data = DMatrix::from_row_slice(nrows, names.len(), &values);
    let table = Table::new(names, data).map_err(|e| SglmError::Parse {
        line: 1,
        column: String::new(),
        message: e.to_string(),
    })?;
    Ok(table.with_comments(comments))
}
