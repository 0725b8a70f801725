//! Square-root cubature Kalman filter.
//!
//! The posterior is carried as a mean plus a lower-triangular square-root
//! covariance. Both the time update and the measurement update sample the
//! caller's nonlinear functions at the `2n` third-degree spherical-radial
//! cubature points and rebuild the square-root factor by triangularizing a
//! compound matrix, so `P = S·Sᵀ` never has to be formed or refactored.

use crate::error::{Error, Result};
use crate::numerics::{cholesky, triangularize, LowerTriangular, Matrix};
use crate::scalar::{from_usize, lit, Scalar};

/// Diagonal floor applied to `S_Q` so the predict compound matrix keeps
/// full row rank when a caller asks for zero process noise.
pub const PROCESS_NOISE_FLOOR: f64 = 1e-12;

/// The `2n` cubature points `±√n·e_i` with common weight `1/(2n)`.
///
/// Points `i` and `i + n` are negatives of each other.
#[derive(Clone, Debug, PartialEq)]
pub struct CubatureSet<T> {
    dim: usize,
    points: Vec<Vec<T>>,
    weight: T,
}

impl<T: Scalar> CubatureSet<T> {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let radius = from_usize::<T>(n).sqrt();
        let mut points = Vec::with_capacity(2 * n);
        for sign in [T::one(), -T::one()] {
            for i in 0..n {
                let mut p = vec![T::zero(); n];
                p[i] = sign * radius;
                points.push(p);
            }
        }
        Ok(Self {
            dim: n,
            points,
            weight: T::one() / from_usize(2 * n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    /// Points mapped through a belief: `S·ξ_i + x̂`.
    fn spread(&self, belief: &GaussianBelief<T>) -> Vec<Vec<T>> {
        let s = belief.sqrt_cov.as_matrix();
        let n = self.dim;
        // Every ξ_i has a single nonzero coordinate, so S·ξ_i is a scaled column.
        self.points
            .iter()
            .enumerate()
            .map(|(idx, xi)| {
                let axis = idx % n;
                let c = xi[axis];
                (0..n).map(|r| belief.mean[r] + s[(r, axis)] * c).collect()
            })
            .collect()
    }
}

/// Gaussian posterior: mean and lower-triangular square-root covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief<T> {
    pub mean: Vec<T>,
    pub sqrt_cov: LowerTriangular<T>,
}

impl<T: Scalar> GaussianBelief<T> {
    pub fn new(mean: Vec<T>, sqrt_cov: LowerTriangular<T>) -> Result<Self> {
        if mean.len() != sqrt_cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: sqrt_cov.dim(),
                actual: mean.len(),
            });
        }
        Ok(Self { mean, sqrt_cov })
    }

    /// Factors `cov` by Cholesky.
    pub fn from_covariance(mean: Vec<T>, cov: &Matrix<T>) -> Result<Self> {
        Self::new(mean, cholesky(cov)?)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> Matrix<T> {
        self.sqrt_cov.covariance()
    }
}

/// Square roots of the process (`S_Q`) and measurement (`S_R`) noise
/// covariances.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel<T> {
    pub sqrt_process: LowerTriangular<T>,
    pub sqrt_measurement: LowerTriangular<T>,
}

impl<T: Scalar> NoiseModel<T> {
    pub fn new(sqrt_process: LowerTriangular<T>, sqrt_measurement: LowerTriangular<T>) -> Self {
        Self {
            sqrt_process,
            sqrt_measurement,
        }
    }

    /// Diagonal noise from variances. Process standard deviations are
    /// floored at [`PROCESS_NOISE_FLOOR`]; measurement variances must be
    /// positive.
    pub fn from_variances(process: &[T], measurement: &[T]) -> Result<Self> {
        let floor = lit::<T>(PROCESS_NOISE_FLOOR);
        let q: Vec<T> = process
            .iter()
            .map(|&v| v.max(T::zero()).sqrt().max(floor))
            .collect();
        let r: Vec<T> = measurement.iter().map(|&v| v.sqrt()).collect();
        Ok(Self::new(
            LowerTriangular::from_diagonal(&q)?,
            LowerTriangular::from_diagonal(&r)?,
        ))
    }

    pub fn state_dim(&self) -> usize {
        self.sqrt_process.dim()
    }

    pub fn measurement_dim(&self) -> usize {
        self.sqrt_measurement.dim()
    }
}

/// Everything the measurement update produces.
#[derive(Clone, Debug)]
pub struct Correction<T> {
    pub belief: GaussianBelief<T>,
    /// `y − ŷ`.
    pub innovation: Vec<T>,
    pub predicted_measurement: Vec<T>,
    /// `S_yy` with `S_yy·S_yyᵀ` the innovation covariance.
    pub sqrt_innov_cov: LowerTriangular<T>,
    /// `P_xy`, n×n_y.
    pub cross_covariance: Matrix<T>,
    /// Filter gain `W`, n×n_y.
    pub gain: Matrix<T>,
}

/// Square-root cubature Kalman filter for a fixed state dimension.
///
/// Holds only the cubature set, which depends on nothing but `n`; beliefs
/// are passed in and returned, so one instance can drive any number of
/// independent belief streams.
#[derive(Clone, Debug)]
pub struct Srckf<T> {
    cubature: CubatureSet<T>,
}

impl<T: Scalar> Srckf<T> {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            cubature: CubatureSet::new(n)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.cubature.dim()
    }

    pub fn cubature(&self) -> &CubatureSet<T> {
        &self.cubature
    }

    fn check_belief(&self, belief: &GaussianBelief<T>, noise: &NoiseModel<T>) -> Result<()> {
        let n = self.dim();
        for actual in [belief.dim(), belief.sqrt_cov.dim(), noise.state_dim()] {
            if actual != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual,
                });
            }
        }
        Ok(())
    }

    /// Weighted mean of a point set and its centered matrix scaled by
    /// `1/√(2n)` (one column per point).
    fn moments(&self, pts: &[Vec<T>]) -> (Vec<T>, Matrix<T>) {
        let dim = pts[0].len();
        let w = self.cubature.weight();
        let mut mean = vec![T::zero(); dim];
        for p in pts {
            for (m, &v) in mean.iter_mut().zip(p) {
                *m += w * v;
            }
        }
        let scale = w.sqrt();
        let centered = Matrix::from_fn(dim, pts.len(), |r, c| (pts[c][r] - mean[r]) * scale);
        (mean, centered)
    }

    /// Time update through `f(x, u)`.
    pub fn predict<F>(
        &self,
        belief: &GaussianBelief<T>,
        f: F,
        u: &[T],
        noise: &NoiseModel<T>,
    ) -> Result<GaussianBelief<T>>
    where
        F: Fn(&[T], &[T]) -> Vec<T>,
    {
        self.check_belief(belief, noise)?;
        let n = self.dim();
        let propagated: Vec<Vec<T>> = self
            .cubature
            .spread(belief)
            .iter()
            .map(|x| f(x, u))
            .collect();
        for p in &propagated {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState);
            }
        }
        let (mean, chi) = self.moments(&propagated);
        let sqrt_cov = triangularize(&chi.hstack(noise.sqrt_process.as_matrix()))?;
        Ok(GaussianBelief { mean, sqrt_cov })
    }

    /// Measurement update through `h(x, u)` against the observation `y`.
    ///
    /// Cubature points are re-drawn from the predicted factor rather than
    /// reusing the propagated points.
    pub fn correct<H>(
        &self,
        belief: &GaussianBelief<T>,
        h: H,
        u: &[T],
        y: &[T],
        noise: &NoiseModel<T>,
    ) -> Result<Correction<T>>
    where
        H: Fn(&[T], &[T]) -> Vec<T>,
    {
        self.check_belief(belief, noise)?;
        let n = self.dim();
        let ny = noise.measurement_dim();
        if y.len() != ny {
            return Err(Error::DimensionMismatch {
                expected: ny,
                actual: y.len(),
            });
        }

        let points = self.cubature.spread(belief);
        let measured: Vec<Vec<T>> = points.iter().map(|x| h(x, u)).collect();
        for m in &measured {
            if m.len() != ny {
                return Err(Error::DimensionMismatch {
                    expected: ny,
                    actual: m.len(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteState);
            }
        }
        let (y_hat, y_centered) = self.moments(&measured);
        let sqrt_innov_cov = triangularize(&y_centered.hstack(noise.sqrt_measurement.as_matrix()))?;

        let scale = self.cubature.weight().sqrt();
        let chi = Matrix::from_fn(n, points.len(), |r, c| (points[c][r] - belief.mean[r]) * scale);
        let cross_covariance = &chi * &y_centered.transpose();

        // W·S_yy·S_yyᵀ = P_xy, solved one gain row at a time.
        let mut gain = Matrix::zeros(n, ny);
        for r in 0..n {
            let z = sqrt_innov_cov.solve_lower(cross_covariance.row(r))?;
            let w_row = sqrt_innov_cov.solve_upper_transposed(&z)?;
            for (c, v) in w_row.into_iter().enumerate() {
                gain[(r, c)] = v;
            }
        }

        let innovation: Vec<T> = y.iter().zip(&y_hat).map(|(&a, &b)| a - b).collect();
        let correction = gain.mul_vec(&innovation);
        let mean: Vec<T> = belief
            .mean
            .iter()
            .zip(&correction)
            .map(|(&m, &d)| m + d)
            .collect();
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }

        let residual_spread = &chi - &(&gain * &y_centered);
        let noise_spread = &gain * noise.sqrt_measurement.as_matrix();
        let sqrt_cov = triangularize(&residual_spread.hstack(&noise_spread))?;

        Ok(Correction {
            belief: GaussianBelief { mean, sqrt_cov },
            innovation,
            predicted_measurement: y_hat,
            sqrt_innov_cov,
            cross_covariance,
            gain,
        })
    }
}
