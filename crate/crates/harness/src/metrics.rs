//! RMSE metrics against ground truth.

use std::fmt::{self, Write as _};

use crate::error::{HarnessError, Result};
use crate::io::EstimateRow;

/// Root mean square of `est − truth` over indices `>= skip`.
///
/// Returns 0 when nothing is left after the skip.
pub fn compute_rmse(est: &[f64], truth: &[f64], skip: usize) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(HarnessError::LengthMismatch {
            estimates: est.len(),
            truth: truth.len(),
        });
    }
    let n = est.len().saturating_sub(skip);
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = est[skip..]
        .iter()
        .zip(&truth[skip..])
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok((sum / n as f64).sqrt())
}

/// Estimated quantities in report order.
pub const QUANTITIES: [&str; 5] = ["K", "T", "MAP_b", "tau", "MAP"];

/// Truth on the estimator grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruthSeries {
    pub sensitivity: Vec<f64>,
    pub lag_time: Vec<f64>,
    pub baseline: Vec<f64>,
    pub delay: Vec<f64>,
    /// Noise-free MAP.
    pub map: Vec<f64>,
}

impl TruthSeries {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn quantity(&self, q: usize) -> &[f64] {
        match q {
            0 => &self.sensitivity,
            1 => &self.lag_time,
            2 => &self.baseline,
            3 => &self.delay,
            _ => &self.map,
        }
    }
}

fn estimate_quantity(rows: &[EstimateRow], q: usize) -> Vec<f64> {
    rows.iter()
        .map(|r| match q {
            0 => r.sensitivity,
            1 => r.lag_time,
            2 => r.baseline,
            3 => r.delay,
            _ => r.map,
        })
        .collect()
}

/// RMSE per quantity, in [`QUANTITIES`] order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmseSet(pub [f64; 5]);

impl RmseSet {
    pub fn compute(rows: &[EstimateRow], truth: &TruthSeries, skip: usize) -> Result<Self> {
        let mut out = [0.0; 5];
        for (q, v) in out.iter_mut().enumerate() {
            *v = compute_rmse(&estimate_quantity(rows, q), truth.quantity(q), skip)?;
        }
        Ok(Self(out))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        QUANTITIES.iter().position(|q| *q == name).map(|i| self.0[i])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgoMetrics {
    pub name: String,
    /// After the transient skip.
    pub skipped: RmseSet,
    pub all: RmseSet,
}

impl AlgoMetrics {
    pub fn compute(name: &str, rows: &[EstimateRow], truth: &TruthSeries, skip: usize) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            skipped: RmseSet::compute(rows, truth, skip)?,
            all: RmseSet::compute(rows, truth, 0)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub seed: u64,
    pub config_hash: String,
    pub steps: usize,
    pub transient_skip: usize,
    pub algorithms: Vec<AlgoMetrics>,
}

impl MetricsReport {
    pub fn algorithm(&self, name: &str) -> Option<&AlgoMetrics> {
        self.algorithms.iter().find(|a| a.name == name)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "config_hash: {}", self.config_hash);
        let _ = writeln!(s, "steps: {}", self.steps);
        let _ = writeln!(s, "transient_skip: {}", self.transient_skip);
        for a in &self.algorithms {
            for (i, q) in QUANTITIES.iter().enumerate() {
                let _ = writeln!(s, "{}.rmse.{}: {}", a.name, q, a.skipped.0[i]);
            }
            for (i, q) in QUANTITIES.iter().enumerate() {
                let _ = writeln!(s, "{}.rmse_unskipped.{}: {}", a.name, q, a.all.0[i]);
            }
        }
        f.write_str(&s)
    }
}
