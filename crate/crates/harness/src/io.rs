//! CSV readers and writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const REPLAY_COLUMNS: [&str; 3] = ["t_s", "infusion_ml_h", "map_meas_mmhg"];
pub const ESTIMATE_COLUMNS: [&str; 8] = [
    "t_s", "u_ml_h", "y_mmhg", "map_est", "k_est", "t_est", "b_est", "tau_est",
];
pub const TRUTH_COLUMNS: [&str; 8] = [
    "t_s",
    "infusion_ml_h",
    "k_true",
    "t_true_s",
    "tau_true_s",
    "baseline_mmhg",
    "deltamap_mmhg",
    "map_meas_mmhg",
];

/// One bank output row.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRow {
    pub time: f64,
    pub input: f64,
    pub measurement: f64,
    pub map: f64,
    pub sensitivity: f64,
    pub lag_time: f64,
    pub baseline: f64,
    pub delay: f64,
    pub probabilities: Vec<f64>,
}

/// Header for a bank with `n` hypotheses.
pub fn estimate_header(n: usize) -> String {
    let mut cols: Vec<String> = ESTIMATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((0..n).map(|i| format!("p{i}")));
    cols.join(",")
}

pub fn write_estimates<W: Write>(rows: &[EstimateRow], n_hypotheses: usize, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", estimate_header(n_hypotheses))?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.time, r.input, r.measurement, r.map, r.sensitivity, r.lag_time, r.baseline, r.delay
        )?;
        for p in &r.probabilities {
            write!(out, ",{p}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_estimates_file(path: &Path, rows: &[EstimateRow], n_hypotheses: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_estimates(rows, n_hypotheses, &mut w).map_err(|e| HarnessError::io(path, e))?;
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Reads the named columns (matched case-insensitively) from a headed CSV.
/// Extra columns are ignored. Returns one vector per requested column.
pub fn read_columns(path: &Path, wanted: &[&str]) -> Result<Vec<Vec<f64>>> {
    let malformed = |message: String| HarnessError::MalformedCsv {
        path: path.to_path_buf(),
        message,
    };
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| malformed(e.to_string()))?.clone();
    let index: Vec<usize> = wanted
        .iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h.trim().eq_ignore_ascii_case(w))
                .ok_or_else(|| malformed(format!("missing column `{w}`")))
        })
        .collect::<Result<_>>()?;

    let mut out = vec![Vec::new(); wanted.len()];
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| malformed(e.to_string()))?;
        for (col, &i) in index.iter().enumerate() {
            let field = rec.get(i).unwrap_or("").trim();
            let v: f64 = field.parse().map_err(|_| {
                malformed(format!(
                    "row {}: column `{}` value `{field}` is not a number",
                    row + 1,
                    wanted[col]
                ))
            })?;
            out[col].push(v);
        }
    }
    Ok(out)
}

/// Raw replay samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplaySeries {
    pub times: Vec<f64>,
    pub infusion: Vec<f64>,
    pub measured_map: Vec<f64>,
}

pub fn read_replay(path: &Path) -> Result<ReplaySeries> {
    let mut cols = read_columns(path, &REPLAY_COLUMNS)?;
    let measured_map = cols.pop().unwrap_or_default();
    let infusion = cols.pop().unwrap_or_default();
    let times = cols.pop().unwrap_or_default();
    if times.is_empty() {
        return Err(HarnessError::MalformedCsv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    crate::resample::check_monotonic(&times)?;
    Ok(ReplaySeries {
        times,
        infusion,
        measured_map,
    })
}

/// Estimate columns of a bank output CSV, in [`ESTIMATE_COLUMNS`] order.
pub fn read_estimates(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_columns(path, &ESTIMATE_COLUMNS)
}
