//! Discretized first-order delayed MAP response, augmented with
//! random-walk parameters.
//!
//! State layout is `[ΔMAP, K, T, MAP_b]`:
//!
//! ```text
//! ΔMAP' = (1 − Ts/T)·ΔMAP + (Ts·K/T)·u(k − τ/Ts)
//! K'    = K
//! T'    = T
//! MAP_b' = MAP_b
//! y     = ΔMAP + MAP_b
//! ```
//!
//! `T` is clamped below at [`LAG_TIME_FLOOR`] inside the transition only.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Lower clamp on the lag time used by the transition, seconds.
pub const LAG_TIME_FLOOR: f64 = 5.0;

/// Dimension of [`AugmentedState`].
pub const STATE_DIM: usize = 4;

/// Measurement Jacobian `[1 0 0 1]`.
pub const MEASUREMENT_ROW: [f64; STATE_DIM] = [1.0, 0.0, 0.0, 1.0];

/// Augmented state vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentedState<T> {
    /// ΔMAP, mmHg.
    pub delta_map: T,
    /// K, mmHg per (ml/h).
    pub sensitivity: T,
    /// T, seconds.
    pub lag_time: T,
    /// MAP_b, mmHg.
    pub baseline: T,
}

impl<T: Scalar> AugmentedState<T> {
    pub fn new(delta_map: T, sensitivity: T, lag_time: T, baseline: T) -> Self {
        Self {
            delta_map,
            sensitivity,
            lag_time,
            baseline,
        }
    }

    /// Reads the first four entries of `v`.
    pub fn from_slice(v: &[T]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn to_array(self) -> [T; STATE_DIM] {
        [self.delta_map, self.sensitivity, self.lag_time, self.baseline]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Lag time as seen by the transition: `max(T, LAG_TIME_FLOOR)`.
    pub fn effective_lag_time(&self) -> T {
        self.lag_time.max(lit(LAG_TIME_FLOOR))
    }

    pub fn map(&self) -> T {
        self.delta_map + self.baseline
    }
}

/// One step of the augmented dynamics. `process_noise` is added to every
/// component; filters pass `None` and carry noise in their own covariance.
pub fn transition<T: Scalar>(
    x: &AugmentedState<T>,
    u_delayed: T,
    sample_period: T,
    process_noise: Option<[T; STATE_DIM]>,
) -> AugmentedState<T> {
    let lag = x.effective_lag_time();
    let ratio = sample_period / lag;
    let w = process_noise.unwrap_or([T::zero(); STATE_DIM]);
    AugmentedState {
        delta_map: (T::one() - ratio) * x.delta_map + ratio * x.sensitivity * u_delayed + w[0],
        sensitivity: x.sensitivity + w[1],
        lag_time: x.lag_time + w[2],
        baseline: x.baseline + w[3],
    }
}

/// Slice form of [`transition`] for the filters' `f(x, u)` callbacks.
pub fn transition_vec<T: Scalar>(x: &[T], u_delayed: T, sample_period: T) -> Vec<T> {
    transition(&AugmentedState::from_slice(x), u_delayed, sample_period, None)
        .to_array()
        .to_vec()
}

/// Measured MAP: `ΔMAP + MAP_b + noise`.
pub fn measure<T: Scalar>(x: &AugmentedState<T>, measurement_noise: T) -> T {
    x.delta_map + x.baseline + measurement_noise
}

/// Number of whole steps a delay of `tau` spans, rounded to nearest with
/// ties toward the larger delay.
pub fn delay_steps<T: Scalar>(tau: T, sample_period: T) -> usize {
    let half = lit::<T>(0.5);
    let steps = (tau / sample_period + half).floor();
    steps.max(T::zero()).to_usize().unwrap_or(usize::MAX)
}

/// Append-only history of infusion rates indexed by step.
///
/// Steps must arrive gap-free and in order. Reads before the first stored
/// step return the fill value (no drug before the experiment). Only the
/// most recent `capacity + 1` samples are retained.
#[derive(Clone, Debug)]
pub struct DelayedInputBuffer<T> {
    first_step: usize,
    samples: VecDeque<T>,
    capacity: usize,
    fill: T,
    started: bool,
    evicted: usize,
}

impl<T: Scalar> DelayedInputBuffer<T> {
    /// Buffer that can serve delays up to `capacity` steps.
    pub fn new(capacity: usize) -> Self {
        Self {
            first_step: 0,
            samples: VecDeque::with_capacity(capacity + 1),
            capacity,
            fill: T::zero(),
            started: false,
            evicted: 0,
        }
    }

    /// Sized for the largest delay in `config`.
    pub fn for_config(config: &SamplingConfig<T>) -> Self {
        Self::new(config.max_delay_steps())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fill_value(&self) -> T {
        self.fill
    }

    pub fn is_empty(&self) -> bool {
        !self.started
    }

    /// One past the last stored step.
    pub fn next_step(&self) -> usize {
        self.first_step + self.evicted + self.samples.len()
    }

    pub fn latest_step(&self) -> Option<usize> {
        self.started.then(|| self.next_step() - 1)
    }

    /// Appends the rate for `step`, which must follow the previous one.
    pub fn push(&mut self, step: usize, rate: T) -> Result<()> {
        if !self.started {
            self.first_step = step;
            self.started = true;
        } else if step != self.next_step() {
            return Err(Error::InvalidStep(format!(
                "input step {step} does not follow {}",
                self.next_step() - 1
            )));
        }
        self.samples.push_back(rate);
        while self.samples.len() > self.capacity + 1 {
            self.samples.pop_front();
            self.evicted += 1;
        }
        Ok(())
    }

    /// Rate stored for `step`. Steps before the history start read the fill
    /// value; steps after the latest hold the latest rate.
    pub fn rate_at(&self, step: isize) -> T {
        if !self.started || step < self.first_step as isize {
            return self.fill;
        }
        let oldest = (self.first_step + self.evicted) as isize;
        let newest = self.next_step() as isize - 1;
        debug_assert!(step >= oldest, "read of evicted step {step}");
        let idx = step.clamp(oldest, newest) - oldest;
        self.samples[idx as usize]
    }
}

/// Input applied at step `k` under delay `tau`: the rate at
/// `k − round(tau/Ts)`, or the fill value before history.
pub fn delayed_input<T: Scalar>(
    buffer: &DelayedInputBuffer<T>,
    k: usize,
    tau: T,
    sample_period: T,
) -> T {
    let back = delay_steps(tau, sample_period) as isize;
    buffer.rate_at(k as isize - back)
}

/// Sample period and the bank's candidate delays.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingConfig<T> {
    /// Ts, seconds.
    pub sample_period: T,
    /// Candidate delays τ_i, seconds, nondecreasing.
    pub delay_grid: Vec<T>,
}

impl<T: Scalar> SamplingConfig<T> {
    pub fn new(sample_period: T, delay_grid: Vec<T>) -> Result<Self> {
        let cfg = Self {
            sample_period,
            delay_grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Ts = 5 s; 11 delays spanning 0..=100 s at 10 s spacing.
    pub fn standard() -> Self {
        Self {
            sample_period: lit(5.0),
            delay_grid: (0..=10).map(|i| lit(10.0 * i as f64)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period > T::zero()) || !self.sample_period.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "sample period must be positive, got {}",
                self.sample_period
            )));
        }
        if self.delay_grid.is_empty() {
            return Err(Error::InvalidConfig("delay grid is empty".into()));
        }
        if self.delay_grid.iter().any(|d| !(*d >= T::zero()) || !d.is_finite()) {
            return Err(Error::InvalidConfig("delay grid entries must be >= 0".into()));
        }
        if self.delay_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("delay grid must be nondecreasing".into()));
        }
        Ok(())
    }

    pub fn max_delay_steps(&self) -> usize {
        self.delay_grid
            .iter()
            .map(|&d| delay_steps(d, self.sample_period))
            .max()
            .unwrap_or(0)
    }
}
