//! First-order extended Kalman filter on the augmented MAP model, used as
//! the comparison baseline. Plugs into [`MultipleModelBank`] unchanged.
//!
//! [`MultipleModelBank`]: crate::mm_bank::MultipleModelBank

use crate::error::{Error, Result};
use crate::map_model::{measure, transition, AugmentedState, MEASUREMENT_ROW, STATE_DIM};
use crate::mm_bank::{HypothesisFilter, HypothesisUpdate};
use crate::numerics::{cholesky, LowerTriangular, Matrix};
use crate::scalar::{lit, Scalar};

/// Linearization of the augmented model at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobianPair<T> {
    /// ∂f/∂x, 4×4.
    pub transition: Matrix<T>,
    /// ∂h/∂x = `[1 0 0 1]`.
    pub measurement: [T; STATE_DIM],
}

/// Analytic ∂f/∂x. Row 0 is
/// `[1 − Ts/T, Ts·u/T, Ts·(ΔMAP − K·u)/T², 0]` with `T` floored as in the
/// transition; the parameter rows are identity rows.
pub fn transition_jacobian<T: Scalar>(x: &AugmentedState<T>, u_delayed: T, sample_period: T) -> Matrix<T> {
    let lag = x.effective_lag_time();
    let ts = sample_period;
    let mut f = Matrix::identity(STATE_DIM);
    f[(0, 0)] = T::one() - ts / lag;
    f[(0, 1)] = ts * u_delayed / lag;
    f[(0, 2)] = ts * (x.delta_map - x.sensitivity * u_delayed) / (lag * lag);
    f
}

pub fn jacobians<T: Scalar>(x: &AugmentedState<T>, u_delayed: T, sample_period: T) -> JacobianPair<T> {
    JacobianPair {
        transition: transition_jacobian(x, u_delayed, sample_period),
        measurement: MEASUREMENT_ROW.map(lit),
    }
}

/// Mean plus full covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct EkfBelief<T> {
    pub mean: Vec<T>,
    pub cov: Matrix<T>,
}

impl<T: Scalar> EkfBelief<T> {
    pub fn new(mean: Vec<T>, cov: Matrix<T>) -> Result<Self> {
        if mean.len() != STATE_DIM {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                actual: mean.len(),
            });
        }
        if cov.rows() != STATE_DIM || !cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                actual: cov.rows(),
            });
        }
        Ok(Self { mean, cov })
    }
}

#[derive(Clone, Debug)]
pub struct EkfUpdate<T> {
    pub belief: EkfBelief<T>,
    /// `y − h(x̂⁻)`.
    pub residual: T,
    /// `H·P⁻·Hᵀ + R`.
    pub innovation_variance: T,
    pub gain: [T; STATE_DIM],
}

/// Predict through the model, then a Joseph-form scalar update.
pub fn ekf_step<T: Scalar>(
    belief: &EkfBelief<T>,
    u_delayed: T,
    y: T,
    sample_period: T,
    process_cov: &Matrix<T>,
    measurement_var: T,
) -> Result<EkfUpdate<T>> {
    let x = AugmentedState::from_slice(&belief.mean);
    let f = transition_jacobian(&x, u_delayed, sample_period);
    let x_pred = transition(&x, u_delayed, sample_period, None);
    if !x_pred.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let p_pred = &(&(&f * &belief.cov) * &f.transpose()) + process_cov;

    let h = MEASUREMENT_ROW.map(lit::<T>);
    let ph: Vec<T> = (0..STATE_DIM)
        .map(|i| (0..STATE_DIM).fold(T::zero(), |acc, j| acc + p_pred[(i, j)] * h[j]))
        .collect();
    let s = (0..STATE_DIM).fold(T::zero(), |acc, i| acc + h[i] * ph[i]) + measurement_var;
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::NonPositiveInnovation);
    }
    let gain: [T; STATE_DIM] = std::array::from_fn(|i| ph[i] / s);
    let residual = y - measure(&x_pred, T::zero());

    let pred = x_pred.to_array();
    let mean: Vec<T> = (0..STATE_DIM).map(|i| pred[i] + gain[i] * residual).collect();

    // Joseph form: (I − K·H)·P·(I − K·H)ᵀ + K·R·Kᵀ.
    let a = Matrix::from_fn(STATE_DIM, STATE_DIM, |i, j| {
        let id = if i == j { T::one() } else { T::zero() };
        id - gain[i] * h[j]
    });
    let kr = Matrix::from_fn(STATE_DIM, STATE_DIM, |i, j| gain[i] * measurement_var * gain[j]);
    let cov = (&(&(&a * &p_pred) * &a.transpose()) + &kr).symmetrized();
    if !cov.is_finite() || mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }

    Ok(EkfUpdate {
        belief: EkfBelief { mean, cov },
        residual,
        innovation_variance: s,
        gain,
    })
}

/// EKF hypothesis filter for the multiple-model bank.
#[derive(Clone, Debug)]
pub struct ExtendedFilter<T> {
    sample_period: T,
    process_cov: Matrix<T>,
    measurement_var: T,
}

impl<T: Scalar> ExtendedFilter<T> {
    pub fn new(sample_period: T, process_cov: Matrix<T>, measurement_var: T) -> Result<Self> {
        if process_cov.rows() != STATE_DIM || !process_cov.is_square() {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                actual: process_cov.rows(),
            });
        }
        Ok(Self {
            sample_period,
            process_cov,
            measurement_var,
        })
    }

    pub fn from_variances(sample_period: T, process: &[T], measurement_var: T) -> Result<Self> {
        Self::new(sample_period, Matrix::from_diagonal(process), measurement_var)
    }
}

impl<T: Scalar> HypothesisFilter<T> for ExtendedFilter<T> {
    type Belief = EkfBelief<T>;

    fn step(&self, belief: &EkfBelief<T>, u_delayed: T, y: T) -> Result<HypothesisUpdate<T, EkfBelief<T>>> {
        let upd = ekf_step(
            belief,
            u_delayed,
            y,
            self.sample_period,
            &self.process_cov,
            self.measurement_var,
        )?;
        Ok(HypothesisUpdate {
            belief: upd.belief,
            residual: vec![upd.residual],
            sqrt_innov_cov: LowerTriangular::from_diagonal(&[upd.innovation_variance.sqrt()])?,
        })
    }

    fn mean<'a>(&self, belief: &'a EkfBelief<T>) -> &'a [T] {
        &belief.mean
    }

    fn with_mean(&self, template: &EkfBelief<T>, mean: &[T]) -> EkfBelief<T> {
        EkfBelief {
            mean: mean.to_vec(),
            cov: template.cov.clone(),
        }
    }

    fn min_sqrt_diagonal(&self, belief: &EkfBelief<T>) -> T {
        cholesky(&belief.cov)
            .map(|s| s.diagonal().into_iter().fold(T::infinity(), T::min))
            .unwrap_or(T::zero())
    }
}
