//! Stochastic nonlinear patient generator.
//!
//! The response parameters evolve with the infusion rate `i(t)`:
//!
//! ```text
//! a_k·K̇ + K = k0·exp(−k1·i)
//! T = sat[T_min, T_max](b_T·∫i dt)
//! τ = L⁻¹{(b_τ1·s + 1) / (s·(a_τ2·s² + a_τ1·s + 1))} * i,   clamped to [0, τ_max]
//! T·ΔṀAP + ΔMAP = K·i(t − τ)
//! ```
//!
//! The delay transfer map is realized in controllable canonical form driven
//! by `i` alone, with the numerator folded into the output map, so steps in
//! the infusion never have to be differentiated. Everything is integrated
//! with fixed-step RK4.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Uniform sampling intervals for the random coefficients.
pub mod bounds {
    pub const A_K: (f64, f64) = (500.0, 600.0);
    pub const K0: (f64, f64) = (0.1, 1.0);
    pub const K1: (f64, f64) = (0.002, 0.007);
    pub const B_T: (f64, f64) = (1e-4, 3e-4);
    pub const A_TAU1: (f64, f64) = (5.0, 15.0);
    pub const A_TAU2: (f64, f64) = (5.0, 15.0);
    pub const B_TAU1: (f64, f64) = (80.0, 120.0);
}

pub const BASELINE_MAP: f64 = 70.0;
pub const LAG_TIME_MIN: f64 = 30.0;
pub const LAG_TIME_MAX: f64 = 300.0;
pub const DELAY_MAX: f64 = 100.0;
/// Largest accepted integration step, seconds.
pub const MAX_STEP: f64 = 0.5;

/// Coefficients that fully determine one synthetic patient.
#[derive(Clone, Debug, PartialEq)]
pub struct PatientCoefficients<T> {
    /// Sensitivity time constant, s.
    pub a_k: T,
    /// Zero-infusion sensitivity, mmHg per (ml/h).
    pub k0: T,
    /// Sensitivity decay with infusion rate, per (ml/h).
    pub k1: T,
    /// Lag-time growth per unit cumulative infusion.
    pub b_t: T,
    pub a_tau1: T,
    pub a_tau2: T,
    pub b_tau1: T,
    pub t_min: T,
    pub t_max: T,
    pub tau_max: T,
    /// MAP_b, mmHg.
    pub baseline: T,
    pub seed: u64,
}

impl<T: Scalar> PatientCoefficients<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_min < self.t_max) || !(self.t_min > T::zero()) {
            return Err(Error::InvalidConfig("lag-time bounds must satisfy 0 < T_min < T_max".into()));
        }
        if !(self.baseline > T::zero()) {
            return Err(Error::InvalidConfig("baseline must be positive".into()));
        }
        if !(self.a_k > T::zero()) || !(self.a_tau2 > T::zero()) {
            return Err(Error::InvalidConfig("a_k and a_tau2 must be positive".into()));
        }
        if !(self.tau_max >= T::zero()) {
            return Err(Error::InvalidConfig("tau_max must be nonnegative".into()));
        }
        Ok(())
    }

    /// Whether every random coefficient lies inside its sampling interval.
    pub fn within_sampling_bounds(&self) -> bool {
        let inside = |v: T, (lo, hi): (f64, f64)| {
            let v = v.to_f64().unwrap_or(f64::NAN);
            v >= lo && v <= hi
        };
        inside(self.a_k, bounds::A_K)
            && inside(self.k0, bounds::K0)
            && inside(self.k1, bounds::K1)
            && inside(self.b_t, bounds::B_T)
            && inside(self.a_tau1, bounds::A_TAU1)
            && inside(self.a_tau2, bounds::A_TAU2)
            && inside(self.b_tau1, bounds::B_TAU1)
    }

    fn lag_time(&self, cumulative: T) -> T {
        (self.b_t * cumulative).max(self.t_min).min(self.t_max)
    }
}

/// Draws the seven random coefficients uniformly from their intervals.
pub fn sample_coefficients<T: Scalar>(seed: u64) -> PatientCoefficients<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| lit::<T>(rng.random_range(lo..=hi));
    PatientCoefficients {
        a_k: draw(bounds::A_K),
        k0: draw(bounds::K0),
        k1: draw(bounds::K1),
        b_t: draw(bounds::B_T),
        a_tau1: draw(bounds::A_TAU1),
        a_tau2: draw(bounds::A_TAU2),
        b_tau1: draw(bounds::B_TAU1),
        t_min: lit(LAG_TIME_MIN),
        t_max: lit(LAG_TIME_MAX),
        tau_max: lit(DELAY_MAX),
        baseline: lit(BASELINE_MAP),
        seed,
    }
}

/// Piecewise-constant infusion rate: `(start time s, rate ml/h)` segments.
/// The rate is zero before the first segment.
#[derive(Clone, Debug, PartialEq)]
pub struct InfusionProfile<T> {
    segments: Vec<(T, T)>,
}

impl<T: Scalar> InfusionProfile<T> {
    pub fn new(segments: Vec<(T, T)>) -> Result<Self> {
        if segments.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidConfig("infusion segment times must increase".into()));
        }
        if segments.iter().any(|&(t, r)| !(r >= T::zero()) || !t.is_finite() || !r.is_finite()) {
            return Err(Error::InvalidConfig("infusion rates must be finite and nonnegative".into()));
        }
        Ok(Self { segments })
    }

    pub fn constant(rate: T) -> Self {
        Self {
            segments: vec![(T::zero(), rate)],
        }
    }

    /// Stepped profile between 0 and 200 ml/h over 5000 s.
    pub fn standard() -> Self {
        let steps: [(f64, f64); 12] = [
            (0.0, 0.0),
            (200.0, 60.0),
            (600.0, 120.0),
            (1000.0, 40.0),
            (1400.0, 180.0),
            (1800.0, 90.0),
            (2200.0, 0.0),
            (2600.0, 150.0),
            (3000.0, 200.0),
            (3500.0, 70.0),
            (4000.0, 130.0),
            (4500.0, 20.0),
        ];
        Self {
            segments: steps.iter().map(|&(t, r)| (lit(t), lit(r))).collect(),
        }
    }

    pub fn segments(&self) -> &[(T, T)] {
        &self.segments
    }

    pub fn rate_at(&self, t: T) -> T {
        self.segments
            .iter()
            .rev()
            .find(|(start, _)| *start <= t)
            .map_or(T::zero(), |&(_, r)| r)
    }

    pub fn max_rate(&self) -> T {
        self.segments.iter().fold(T::zero(), |m, &(_, r)| m.max(r))
    }
}

/// One simulator sample with its ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    /// s
    pub time: T,
    /// ml/h
    pub infusion: T,
    pub sensitivity: T,
    /// s
    pub lag_time: T,
    /// s
    pub delay: T,
    /// mmHg
    pub baseline: T,
    /// mmHg
    pub delta_map: T,
    /// mmHg, with measurement noise.
    pub measured_map: T,
}

impl<T: Scalar> TrajectoryRecord<T> {
    /// Noise-free MAP.
    pub fn true_map(&self) -> T {
        self.delta_map + self.baseline
    }
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "t_s,infusion_ml_h,K_true,T_true_s,tau_true_s,baseline_mmHg,deltamap_mmHg,map_meas_mmHg";

/// Labeled trajectory on a uniform time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthTrajectory<T> {
    pub dt: T,
    pub records: Vec<TrajectoryRecord<T>>,
}

impl<T: Scalar> GroundTruthTrajectory<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Writes the trajectory as CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.time,
                r.infusion,
                r.sensitivity,
                r.lag_time,
                r.delay,
                r.baseline,
                r.delta_map,
                r.measured_map
            )?;
        }
        Ok(())
    }
}

// State layout: [K, ∫i dt, z1, z2, z3, ΔMAP].
const SIM_DIM: usize = 6;

/// Classic fourth-order Runge–Kutta step.
pub fn rk4_step<T: Scalar, const N: usize>(
    f: impl Fn(T, &[T; N]) -> [T; N],
    t: T,
    x: &[T; N],
    dt: T,
) -> [T; N] {
    let half = dt / lit(2.0);
    let k1 = f(t, x);
    let x2: [T; N] = std::array::from_fn(|i| x[i] + half * k1[i]);
    let k2 = f(t + half, &x2);
    let x3: [T; N] = std::array::from_fn(|i| x[i] + half * k2[i]);
    let k3 = f(t + half, &x3);
    let x4: [T; N] = std::array::from_fn(|i| x[i] + dt * k3[i]);
    let k4 = f(t + dt, &x4);
    let sixth = dt / lit(6.0);
    std::array::from_fn(|i| x[i] + sixth * (k1[i] + lit::<T>(2.0) * (k2[i] + k3[i]) + k4[i]))
}

/// Infusion samples on the simulation grid, linearly interpolated.
struct InputHistory<T> {
    dt: T,
    samples: Vec<T>,
}

impl<T: Scalar> InputHistory<T> {
    fn at(&self, t: T) -> T {
        if t < T::zero() || self.samples.is_empty() {
            return T::zero();
        }
        let pos = t / self.dt;
        let j = pos.floor();
        let frac = pos - j;
        let last = self.samples.len() - 1;
        let j = j.to_usize().unwrap_or(usize::MAX).min(last);
        let a = self.samples[j];
        let b = self.samples[(j + 1).min(last)];
        a + (b - a) * frac
    }
}

struct Dynamics<'a, T> {
    coeffs: &'a PatientCoefficients<T>,
    history: &'a InputHistory<T>,
    rate: T,
    delay_active: bool,
}

impl<T: Scalar> Dynamics<'_, T> {
    fn delay(&self, s: &[T; SIM_DIM]) -> T {
        if !self.delay_active {
            return T::zero();
        }
        let c = self.coeffs;
        ((s[2] + c.b_tau1 * s[3]) / c.a_tau2).max(T::zero()).min(c.tau_max)
    }

    fn derivative(&self, t: T, s: &[T; SIM_DIM]) -> [T; SIM_DIM] {
        let c = self.coeffs;
        let i = self.rate;
        let k_target = c.k0 * (-c.k1 * i).exp();
        let lag = c.lag_time(s[1]);
        let delayed = self.history.at(t - self.delay(s));
        let (dz, tau_drive) = if self.delay_active {
            (
                -(s[3] + c.a_tau1 * s[4]) / c.a_tau2,
                i,
            )
        } else {
            (T::zero(), T::zero())
        };
        [
            (k_target - s[0]) / c.a_k,
            i,
            s[3],
            s[4],
            dz + tau_drive,
            (s[0] * delayed - s[5]) / lag,
        ]
    }
}

/// Integrates one patient over `[0, horizon]` at step `dt`.
///
/// `K(0) = k0`; every other state starts at rest. The delay dynamics switch
/// on at the first sample with nonzero infusion.
pub fn simulate<T: Scalar>(
    coeffs: &PatientCoefficients<T>,
    profile: &InfusionProfile<T>,
    dt: T,
    horizon: T,
    measurement_noise_std: T,
) -> Result<GroundTruthTrajectory<T>> {
    if !(dt > T::zero()) || dt > lit(MAX_STEP) {
        return Err(Error::InvalidStep(format!("dt = {dt} outside (0, {MAX_STEP}]")));
    }
    if !(horizon >= T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidStep(format!("horizon = {horizon} must be nonnegative")));
    }
    if !(measurement_noise_std >= T::zero()) {
        return Err(Error::InvalidConfig("measurement noise std must be nonnegative".into()));
    }
    coeffs.validate()?;

    let steps = (horizon / dt).round().to_usize().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(coeffs.seed);
    rng.set_stream(1);
    let noise = Normal::new(0.0, measurement_noise_std.to_f64().unwrap_or(0.0))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut history = InputHistory {
        dt,
        samples: Vec::with_capacity(steps + 1),
    };
    let mut state = [T::zero(); SIM_DIM];
    state[0] = coeffs.k0;
    let mut delay_active = false;
    let mut records = Vec::with_capacity(steps + 1);

    for n in 0..=steps {
        let t = lit::<T>(n as f64) * dt;
        let rate = profile.rate_at(t);
        history.samples.push(rate);
        if rate > T::zero() {
            delay_active = true;
        }
        let dynamics = Dynamics {
            coeffs,
            history: &history,
            rate,
            delay_active,
        };
        let eps: T = lit(noise.sample(&mut rng));
        records.push(TrajectoryRecord {
            time: t,
            infusion: rate,
            sensitivity: state[0],
            lag_time: coeffs.lag_time(state[1]),
            delay: dynamics.delay(&state),
            baseline: coeffs.baseline,
            delta_map: state[5],
            measured_map: state[5] + coeffs.baseline + eps,
        });
        if n < steps {
            state = rk4_step(|tt, s| dynamics.derivative(tt, s), t, &state, dt);
        }
    }

    Ok(GroundTruthTrajectory { dt, records })
}
