//! Bin-mean resampling onto a uniform grid.

use crate::error::{HarnessError, Result};

/// Tolerance absorbing floating-point noise when assigning a sample to a bin.
const BIN_EPS: f64 = 1e-9;

/// Columns sampled on a uniform grid `t0 + k·ts`.
#[derive(Clone, Debug, PartialEq)]
pub struct Resampled {
    pub times: Vec<f64>,
    /// One vector per input column, each of length `times.len()`.
    pub columns: Vec<Vec<f64>>,
}

impl Resampled {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Errors unless `times` is strictly increasing.
pub fn check_monotonic(times: &[f64]) -> Result<()> {
    for (i, w) in times.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(HarnessError::NonMonotonicTime { row: i + 1 });
        }
    }
    Ok(())
}

/// Averages every column over bins `[t0 + k·ts, t0 + (k+1)·ts)`.
///
/// The output has `floor(D/ts) + 1` steps for a span `D`. Empty bins hold
/// the previous value.
pub fn resample(times: &[f64], columns: &[&[f64]], ts: f64) -> Result<Resampled> {
    if !(ts > 0.0) {
        return Err(HarnessError::config("ts", "must be positive"));
    }
    for c in columns {
        if c.len() != times.len() {
            return Err(HarnessError::LengthMismatch {
                estimates: c.len(),
                truth: times.len(),
            });
        }
    }
    check_monotonic(times)?;
    let Some(&t0) = times.first() else {
        return Ok(Resampled {
            times: Vec::new(),
            columns: vec![Vec::new(); columns.len()],
        });
    };
    let span = times[times.len() - 1] - t0;
    let steps = (span / ts + BIN_EPS).floor() as usize + 1;

    let mut sums = vec![vec![0.0; steps]; columns.len()];
    let mut counts = vec![0usize; steps];
    for (i, &t) in times.iter().enumerate() {
        let bin = (((t - t0) / ts + BIN_EPS).floor() as usize).min(steps - 1);
        counts[bin] += 1;
        for (s, c) in sums.iter_mut().zip(columns) {
            s[bin] += c[i];
        }
    }
    for s in sums.iter_mut() {
        for k in 0..steps {
            s[k] = if counts[k] > 0 {
                s[k] / counts[k] as f64
            } else {
                s[k - 1]
            };
        }
    }
    Ok(Resampled {
        times: (0..steps).map(|k| t0 + k as f64 * ts).collect(),
        columns: sums,
    })
}
