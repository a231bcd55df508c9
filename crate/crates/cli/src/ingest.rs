//! CSV ingestion.
//!
//! Reserved columns: `y` (outcome), `w` (weight), `cluster`. A pair
//! `<name>_lo`, `<name>_hi` declares an interval-observed covariate. Every
//! other column is a covariate unless an explicit list is given.

use std::collections::HashMap;
use std::io::Read;

use scorebounds_core::data::{Dataset, Design, Observation};

use crate::error::{CliError, CliResult};

pub const INTERCEPT: &str = "const";

#[derive(Debug, Clone, Default)]
pub struct Schema {
    /// Covariate columns in order; `None` takes every non-reserved column.
    pub covariates: Option<Vec<String>>,
    /// Append a constant column named `const` after the covariates.
    pub intercept: bool,
}

/// Coefficient layout: point covariates (with the intercept), then
/// interval-observed covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub covariates: Vec<String>,
    pub intercept: bool,
    pub intervals: Vec<String>,
}

impl Layout {
    pub fn coefficient_names(&self) -> Vec<String> {
        let mut names = self.covariates.clone();
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.intervals.iter().cloned());
        names
    }

    pub fn q(&self) -> usize {
        self.covariates.len() + usize::from(self.intercept)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coefficient_names().iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub layout: Layout,
    pub has_weights: bool,
    pub has_clusters: bool,
}

struct Header {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Header {
    fn col(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn read_header<R: Read>(reader: &mut csv::Reader<R>) -> CliResult<Header> {
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::validation(format!("cannot read header row: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if names.is_empty() || names.iter().all(|n| n.is_empty()) {
        return Err(CliError::validation("empty file: header row missing"));
    }
    let mut index = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if index.insert(n.clone(), i).is_some() {
            return Err(CliError::validation(format!("duplicate column '{n}'")));
        }
    }
    Ok(Header { names, index })
}

fn interval_names(header: &Header) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for n in &header.names {
        if let Some(base) = n.strip_suffix("_lo") {
            if header.col(&format!("{base}_hi")).is_none() {
                return Err(CliError::validation(format!("column '{n}' has no matching '{base}_hi'")));
            }
            out.push(base.to_string());
        } else if let Some(base) = n.strip_suffix("_hi") {
            if header.col(&format!("{base}_lo")).is_none() {
                return Err(CliError::validation(format!("column '{n}' has no matching '{base}_lo'")));
            }
        }
    }
    Ok(out)
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "y" | "w" | "cluster") || name.ends_with("_lo") || name.ends_with("_hi")
}

fn parse_value(raw: &str, column: &str, row: usize) -> CliResult<f64> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(CliError::validation(format!("row {row}: missing value in column '{column}'")));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::validation(format!("row {row}: column '{column}' value '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::validation(format!("row {row}: column '{column}' value '{s}' is not finite")));
    }
    Ok(v)
}

fn record_err(e: csv::Error, row: usize) -> CliError {
    CliError::validation(format!("row {row}: malformed record: {e}"))
}

/// Read an observation file. Rows are numbered from 1, excluding the header.
pub fn ingest_csv<R: Read>(source: R, schema: &Schema, design: Design, tau: f64) -> CliResult<Ingested> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(source);
    let header = read_header(&mut reader)?;
    let y_col = header.col("y").ok_or_else(|| CliError::validation("missing outcome column 'y'"))?;
    let w_col = header.col("w");
    let c_col = header.col("cluster");
    let intervals = interval_names(&header)?;
    let covariates = match &schema.covariates {
        Some(list) => {
            for c in list {
                if header.col(c).is_none() {
                    return Err(CliError::validation(format!("--covariates: no column named '{c}'")));
                }
                if is_reserved(c) {
                    return Err(CliError::validation(format!("--covariates: '{c}' is a reserved column")));
                }
            }
            list.clone()
        }
        None => header.names.iter().filter(|n| !is_reserved(n)).cloned().collect(),
    };
    let layout = Layout { covariates, intercept: schema.intercept, intervals };
    if layout.q() + layout.intervals.len() == 0 {
        return Err(CliError::validation("no covariate columns"));
    }
    let x_cols: Vec<usize> = layout.covariates.iter().map(|c| header.index[c]).collect();
    let lo_cols: Vec<usize> = layout.intervals.iter().map(|c| header.index[&format!("{c}_lo")]).collect();
    let hi_cols: Vec<usize> = layout.intervals.iter().map(|c| header.index[&format!("{c}_hi")]).collect();

    let mut clusters: HashMap<String, u64> = HashMap::new();
    let mut obs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| record_err(e, row))?;
        let y = parse_value(&rec[y_col], "y", row)?;
        if y != 0.0 && y != 1.0 {
            return Err(CliError::validation(format!("row {row}: outcome y = {} is not 0 or 1", rec[y_col].trim())));
        }
        let mut x =
            x_cols.iter().map(|&c| parse_value(&rec[c], &header.names[c], row)).collect::<CliResult<Vec<_>>>()?;
        if layout.intercept {
            x.push(1.0);
        }
        let v_lo =
            lo_cols.iter().map(|&c| parse_value(&rec[c], &header.names[c], row)).collect::<CliResult<Vec<_>>>()?;
        let v_hi =
            hi_cols.iter().map(|&c| parse_value(&rec[c], &header.names[c], row)).collect::<CliResult<Vec<_>>>()?;
        if let Some((k, _)) = v_lo.iter().zip(&v_hi).enumerate().find(|(_, (a, b))| a > b) {
            return Err(CliError::validation(format!(
                "row {row}: interval '{}' has lower endpoint above upper endpoint",
                layout.intervals[k]
            )));
        }
        let mut o = Observation::new(y as u8, x).with_interval(v_lo, v_hi);
        if let Some(c) = w_col {
            let w = parse_value(&rec[c], "w", row)?;
            if w <= 0.0 {
                return Err(CliError::validation(format!("row {row}: weight w = {w} is not positive")));
            }
            o = o.with_weight(w);
        }
        if let Some(c) = c_col {
            let key = rec[c].trim().to_string();
            if key.is_empty() {
                return Err(CliError::validation(format!("row {row}: missing value in column 'cluster'")));
            }
            let next = clusters.len() as u64;
            o = o.with_cluster(*clusters.entry(key).or_insert(next));
        }
        obs.push(o);
    }
    if obs.is_empty() {
        return Err(CliError::validation("empty file: no data rows"));
    }
    let dataset = Dataset::new(obs, design, tau)?;
    Ok(Ingested { dataset, layout, has_weights: w_col.is_some(), has_clusters: c_col.is_some() })
}

/// One classification query: a point covariate vector plus bounds on the
/// interval-observed covariates (equal when the value is known).
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub x: Vec<f64>,
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
}

impl Query {
    /// Full coefficient-space vector with the given interval endpoints.
    pub fn with_endpoints(&self, v: &[f64]) -> Vec<f64> {
        let mut r = self.x.clone();
        r.extend_from_slice(v);
        r
    }
}

/// Read queries using the covariate layout of the training data. Interval
/// covariates come either as `<name>_lo`/`<name>_hi` or as a single known
/// value in `<name>`.
pub fn read_queries<R: Read>(source: R, layout: &Layout) -> CliResult<Vec<Query>> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_reader(source);
    let header = read_header(&mut reader)?;
    let need = |name: &str| {
        header.col(name).ok_or_else(|| CliError::validation(format!("query file: missing column '{name}'")))
    };
    let x_cols = layout.covariates.iter().map(|c| need(c)).collect::<CliResult<Vec<_>>>()?;
    let mut v_cols = Vec::new();
    for name in &layout.intervals {
        let pair = (header.col(&format!("{name}_lo")), header.col(&format!("{name}_hi")));
        v_cols.push(match pair {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => {
                let c = need(name)?;
                (c, c)
            }
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| record_err(e, row))?;
        let mut x =
            x_cols.iter().map(|&c| parse_value(&rec[c], &header.names[c], row)).collect::<CliResult<Vec<_>>>()?;
        if layout.intercept {
            x.push(1.0);
        }
        let mut v_lo = Vec::new();
        let mut v_hi = Vec::new();
        for &(lo, hi) in &v_cols {
            let a = parse_value(&rec[lo], &header.names[lo], row)?;
            let b = parse_value(&rec[hi], &header.names[hi], row)?;
            if a > b {
                return Err(CliError::validation(format!("row {row}: interval lower endpoint above upper endpoint")));
            }
            v_lo.push(a);
            v_hi.push(b);
        }
        out.push(Query { x, v_lo, v_hi });
    }
    if out.is_empty() {
        return Err(CliError::validation("query file has no rows"));
    }
    Ok(out)
}
