//! Multiple-model delay estimation.
//!
//! A bank of identical filters runs in parallel, each conditioned on one
//! candidate input delay. Every filter sees the same input and measurement
//! streams; only the delayed-input lookup differs. Innovation likelihoods
//! drive a recursive Bayesian posterior over the hypotheses, and the
//! reported delay and state are probability-weighted blends.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::map_model::{
    delay_steps, measure, transition_vec, AugmentedState, DelayedInputBuffer, SamplingConfig,
    STATE_DIM,
};
use crate::numerics::LowerTriangular;
use crate::scalar::{from_usize, lit, Scalar};
use crate::srckf::{GaussianBelief, NoiseModel, Srckf};

/// Lower bound on every hypothesis probability after renormalization.
pub const PROBABILITY_FLOOR: f64 = 1e-6;

/// Gaussian density of `residual` under innovation covariance
/// `S_yy·S_yyᵀ`, via one triangular solve and the diagonal product.
pub fn likelihood<T: Scalar>(residual: &[T], sqrt_innov_cov: &LowerTriangular<T>) -> Result<T> {
    let m = residual.len();
    let z = sqrt_innov_cov.solve_lower(residual)?;
    let mahalanobis = z.iter().fold(T::zero(), |acc, &v| acc + v * v);
    let det_sqrt = sqrt_innov_cov.diagonal_product();
    let norm = lit::<T>(2.0 * PI).powf(from_usize::<T>(m) / lit(2.0));
    Ok((-mahalanobis / lit(2.0)).exp() / (norm * det_sqrt))
}

/// Bayes update `p_i ∝ L_i·p_i`, then floored at `floor` and renormalized
/// so every entry is at least `floor` and the total is one.
pub fn update_probabilities<T: Scalar>(prior: &[T], likelihoods: &[T], floor: T) -> Result<Vec<T>> {
    if prior.len() != likelihoods.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            actual: likelihoods.len(),
        });
    }
    let products: Vec<T> = prior
        .iter()
        .zip(likelihoods)
        .map(|(&p, &l)| p * l.max(T::zero()))
        .collect();
    let total = products.iter().fold(T::zero(), |acc, &v| acc + v);
    if !(total > T::zero()) || !total.is_finite() {
        return Err(Error::DegenerateLikelihoods);
    }
    let posterior: Vec<T> = products.iter().map(|&v| v / total).collect();
    Ok(apply_floor(posterior, floor))
}

/// Clamps entries below `floor` up to it and rescales the rest so the total
/// stays one, repeating until no rescaled entry falls under the floor.
fn apply_floor<T: Scalar>(mut p: Vec<T>, floor: T) -> Vec<T> {
    let n = p.len();
    if floor <= T::zero() || n == 0 {
        return p;
    }
    if from_usize::<T>(n) * floor >= T::one() {
        return vec![T::one() / from_usize(n); n];
    }
    let mut clamped = vec![false; n];
    loop {
        let mut changed = false;
        for i in 0..n {
            if !clamped[i] && p[i] < floor {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let n_clamped = clamped.iter().filter(|c| **c).count();
        let free = T::one() - from_usize::<T>(n_clamped) * floor;
        let free_sum = (0..n)
            .filter(|&i| !clamped[i])
            .fold(T::zero(), |acc, i| acc + p[i]);
        for i in 0..n {
            p[i] = if clamped[i] { floor } else { p[i] * free / free_sum };
        }
    }
    p
}

/// One bank element: its fixed delay, belief, and posterior probability.
#[derive(Clone, Debug)]
pub struct FilterHypothesis<T, B> {
    /// τ_i, seconds.
    pub assigned_delay: T,
    pub belief: B,
    pub probability: T,
}

/// Probability-weighted mean of the assigned delays.
pub fn blend_delay<T: Scalar, B>(hypotheses: &[FilterHypothesis<T, B>]) -> T {
    let blended = hypotheses
        .iter()
        .fold(T::zero(), |acc, h| acc + h.probability * h.assigned_delay);
    let (lo, hi) = hypotheses.iter().fold(
        (T::infinity(), T::neg_infinity()),
        |(lo, hi), h| (lo.min(h.assigned_delay), hi.max(h.assigned_delay)),
    );
    // Rounding in a convex combination can overshoot the hull by an ulp.
    blended.max(lo).min(hi)
}

/// Output of one filter's predict/correct cycle inside the bank.
#[derive(Clone, Debug)]
pub struct HypothesisUpdate<T, B> {
    pub belief: B,
    pub residual: Vec<T>,
    pub sqrt_innov_cov: LowerTriangular<T>,
}

/// A filter the bank can run once per hypothesis per step.
pub trait HypothesisFilter<T: Scalar> {
    type Belief: Clone;

    /// Predicts with the hypothesis' delayed input, then corrects with `y`.
    fn step(&self, belief: &Self::Belief, u_delayed: T, y: T)
        -> Result<HypothesisUpdate<T, Self::Belief>>;

    fn mean<'a>(&self, belief: &'a Self::Belief) -> &'a [T];

    /// `template` with its mean replaced by `mean`.
    fn with_mean(&self, template: &Self::Belief, mean: &[T]) -> Self::Belief;

    /// Smallest diagonal entry of the belief's square-root covariance.
    fn min_sqrt_diagonal(&self, belief: &Self::Belief) -> T;
}

/// SRCKF on the augmented MAP model.
#[derive(Clone, Debug)]
pub struct CubatureFilter<T> {
    srckf: Srckf<T>,
    noise: NoiseModel<T>,
    sample_period: T,
}

impl<T: Scalar> CubatureFilter<T> {
    pub fn new(sample_period: T, noise: NoiseModel<T>) -> Result<Self> {
        if noise.state_dim() != STATE_DIM || noise.measurement_dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: STATE_DIM,
                actual: noise.state_dim(),
            });
        }
        Ok(Self {
            srckf: Srckf::new(STATE_DIM)?,
            noise,
            sample_period,
        })
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }
}

impl<T: Scalar> HypothesisFilter<T> for CubatureFilter<T> {
    type Belief = GaussianBelief<T>;

    fn step(
        &self,
        belief: &GaussianBelief<T>,
        u_delayed: T,
        y: T,
    ) -> Result<HypothesisUpdate<T, GaussianBelief<T>>> {
        let ts = self.sample_period;
        let predicted = self.srckf.predict(
            belief,
            |x, u| transition_vec(x, u[0], ts),
            &[u_delayed],
            &self.noise,
        )?;
        let c = self.srckf.correct(
            &predicted,
            |x, _| vec![measure(&AugmentedState::from_slice(x), T::zero())],
            &[],
            &[y],
            &self.noise,
        )?;
        Ok(HypothesisUpdate {
            belief: c.belief,
            residual: c.innovation,
            sqrt_innov_cov: c.sqrt_innov_cov,
        })
    }

    fn mean<'a>(&self, belief: &'a GaussianBelief<T>) -> &'a [T] {
        &belief.mean
    }

    fn with_mean(&self, template: &GaussianBelief<T>, mean: &[T]) -> GaussianBelief<T> {
        GaussianBelief {
            mean: mean.to_vec(),
            sqrt_cov: template.sqrt_cov.clone(),
        }
    }

    fn min_sqrt_diagonal(&self, belief: &GaussianBelief<T>) -> T {
        belief
            .sqrt_cov
            .diagonal()
            .into_iter()
            .fold(T::infinity(), T::min)
    }
}

/// Fused output of one bank step.
#[derive(Clone, Debug, PartialEq)]
pub struct BankEstimate<T> {
    /// τ̂, seconds.
    pub blended_delay: T,
    /// Scalar innovation per hypothesis; NaN where the filter failed.
    pub residuals: Vec<T>,
    pub probabilities: Vec<T>,
    /// MAP of the blended state, mmHg.
    pub map_estimate: T,
    pub blended_state: AugmentedState<T>,
    /// Index of the most probable hypothesis.
    pub most_likely: usize,
    /// Hypotheses whose filter failed this step and were re-seeded.
    pub failed: Vec<usize>,
}

/// Bank of filters over a delay grid sharing one input buffer.
#[derive(Clone, Debug)]
pub struct MultipleModelBank<T: Scalar, F: HypothesisFilter<T>> {
    filter: F,
    config: SamplingConfig<T>,
    hypotheses: Vec<FilterHypothesis<T, F::Belief>>,
    initial: F::Belief,
    buffer: DelayedInputBuffer<T>,
    step: usize,
    probability_floor: T,
}

impl<T: Scalar, F: HypothesisFilter<T>> MultipleModelBank<T, F> {
    /// Every hypothesis starts from `initial` with uniform probability.
    pub fn new(filter: F, config: SamplingConfig<T>, initial: F::Belief) -> Result<Self> {
        config.validate()?;
        let n = config.delay_grid.len();
        let p0 = T::one() / from_usize(n);
        let hypotheses = config
            .delay_grid
            .iter()
            .map(|&tau| FilterHypothesis {
                assigned_delay: tau,
                belief: initial.clone(),
                probability: p0,
            })
            .collect();
        Ok(Self {
            buffer: DelayedInputBuffer::for_config(&config),
            filter,
            config,
            hypotheses,
            initial,
            step: 0,
            probability_floor: lit(PROBABILITY_FLOOR),
        })
    }

    pub fn with_probability_floor(mut self, floor: T) -> Self {
        self.probability_floor = floor;
        self
    }

    pub fn filter(&self) -> &F {
        &self.filter
    }

    pub fn config(&self) -> &SamplingConfig<T> {
        &self.config
    }

    pub fn hypotheses(&self) -> &[FilterHypothesis<T, F::Belief>] {
        &self.hypotheses
    }

    pub fn buffer(&self) -> &DelayedInputBuffer<T> {
        &self.buffer
    }

    /// Index of the next step to run.
    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn probabilities(&self) -> Vec<T> {
        self.hypotheses.iter().map(|h| h.probability).collect()
    }

    /// Advances every hypothesis with infusion `u` and measurement `y` for
    /// the current step.
    ///
    /// A hypothesis whose filter errors gets zero likelihood and is
    /// re-seeded at the blended state with the initial covariance. The step
    /// fails only if every hypothesis fails.
    pub fn step(&mut self, u: T, y: T) -> Result<BankEstimate<T>> {
        let n = self.hypotheses.len();
        let k = self.step as isize;
        let ts = self.config.sample_period;

        let mut updates = Vec::with_capacity(n);
        let mut first_error = None;
        for h in &self.hypotheses {
            let back = delay_steps(h.assigned_delay, ts) as isize;
            let u_delayed = self.buffer.rate_at(k - 1 - back);
            let outcome = self.filter.step(&h.belief, u_delayed, y).and_then(|upd| {
                let l = likelihood(&upd.residual, &upd.sqrt_innov_cov)?;
                Ok((upd, l))
            });
            match outcome {
                Ok(pair) => updates.push(Some(pair)),
                Err(e) => {
                    first_error.get_or_insert(e);
                    updates.push(None);
                }
            }
        }
        if updates.iter().all(Option::is_none) {
            return Err(first_error.unwrap_or(Error::DegenerateLikelihoods));
        }

        let prior = self.probabilities();
        let likelihoods: Vec<T> = updates
            .iter()
            .map(|u| u.as_ref().map_or(T::zero(), |(_, l)| *l))
            .collect();
        let posterior = match update_probabilities(&prior, &likelihoods, self.probability_floor) {
            Ok(p) => p,
            Err(Error::DegenerateLikelihoods) => vec![T::one() / from_usize(n); n],
            Err(e) => return Err(e),
        };

        let mut residuals = Vec::with_capacity(n);
        let mut failed = Vec::new();
        for (i, (h, upd)) in self.hypotheses.iter_mut().zip(updates).enumerate() {
            h.probability = posterior[i];
            match upd {
                Some((upd, _)) => {
                    residuals.push(upd.residual.first().copied().unwrap_or_else(T::nan));
                    h.belief = upd.belief;
                }
                None => {
                    residuals.push(T::nan());
                    failed.push(i);
                }
            }
        }

        let mut blended = [T::zero(); STATE_DIM];
        for (i, h) in self.hypotheses.iter().enumerate() {
            if failed.contains(&i) {
                continue;
            }
            for (b, &m) in blended.iter_mut().zip(self.filter.mean(&h.belief)) {
                *b += h.probability * m;
            }
        }
        if !failed.is_empty() {
            // Failed hypotheses carry floor-level mass; renormalize over the rest.
            let live: T = self
                .hypotheses
                .iter()
                .enumerate()
                .filter(|(i, _)| !failed.contains(i))
                .fold(T::zero(), |acc, (_, h)| acc + h.probability);
            for b in &mut blended {
                *b /= live;
            }
            for &i in &failed {
                self.hypotheses[i].belief = self.filter.with_mean(&self.initial, &blended);
            }
        }
        let blended_state = AugmentedState::from_slice(&blended);

        let most_likely = posterior
            .iter()
            .enumerate()
            .fold(0, |best, (i, &p)| if p > posterior[best] { i } else { best });

        self.buffer.push(self.step, u)?;
        self.step += 1;

        Ok(BankEstimate {
            blended_delay: blend_delay(&self.hypotheses),
            residuals,
            probabilities: posterior,
            map_estimate: measure(&blended_state, T::zero()),
            blended_state,
            most_likely,
            failed,
        })
    }
}
