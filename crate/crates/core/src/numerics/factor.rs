use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, Matrix};
use crate::scalar::Scalar;

/// Square lower-triangular factor `S` with strictly positive diagonal.
///
/// Entries above the diagonal are exactly zero. Houses square-root
/// covariances (`P = S·Sᵀ`) for states, process noise, measurement noise,
/// and innovations.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerTriangular<T> {
    entries: Matrix<T>,
}

impl<T: Scalar> LowerTriangular<T> {
    /// Validates `m` as a lower-triangular factor.
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                actual: m.cols(),
            });
        }
        let n = m.rows();
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for i in 0..n {
            if !(m[(i, i)] > T::zero()) || !m[(i, i)].is_finite() {
                return Err(Error::NotLowerTriangular);
            }
            for j in i + 1..n {
                if m[(i, j)] != T::zero() {
                    return Err(Error::NotLowerTriangular);
                }
            }
        }
        Ok(Self { entries: m })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: Matrix::identity(n),
        }
    }

    /// Diagonal factor; every entry must be positive.
    pub fn from_diagonal(diag: &[T]) -> Result<Self> {
        Self::new(Matrix::from_diagonal(diag))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.entries[(i, j)]
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.entries
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.entries
    }

    pub fn diagonal(&self) -> Vec<T> {
        self.entries.diagonal()
    }

    /// Reconstructs `S·Sᵀ`.
    pub fn covariance(&self) -> Matrix<T> {
        self.entries.gram()
    }

    /// Product of the diagonal entries, i.e. `sqrt(det(S·Sᵀ))`.
    pub fn diagonal_product(&self) -> T {
        self.diagonal().into_iter().fold(T::one(), |acc, d| acc * d)
    }

    /// Solves `S·z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            });
        }
        let mut z = vec![T::zero(); n];
        for i in 0..n {
            let d = self.entries[(i, i)];
            if d == T::zero() {
                return Err(Error::SingularInnovation { index: i });
            }
            let acc = dot(&self.entries.row(i)[..i], &z[..i]);
            z[i] = (b[i] - acc) / d;
        }
        Ok(z)
    }

    /// Solves `Sᵀ·x = z` by back substitution.
    pub fn solve_upper_transposed(&self, z: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if z.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: z.len(),
            });
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let d = self.entries[(i, i)];
            if d == T::zero() {
                return Err(Error::SingularInnovation { index: i });
            }
            let mut acc = T::zero();
            for k in i + 1..n {
                acc += self.entries[(k, i)] * x[k];
            }
            x[i] = (z[i] - acc) / d;
        }
        Ok(x)
    }
}

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// The input is symmetrized as `(P + Pᵀ)/2` first to absorb round-off
/// asymmetry from upstream arithmetic.
pub fn cholesky<T: Scalar>(p: &Matrix<T>) -> Result<LowerTriangular<T>> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p.rows(),
            actual: p.cols(),
        });
    }
    let n = p.rows();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let p = p.symmetrized();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let d = p[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = p[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / d;
        }
    }
    Ok(LowerTriangular { entries: l })
}

/// Lower-triangular `B` (n×n) with `B·Bᵀ = A·Aᵀ` for a wide `A` (n×m, m ≥ n).
///
/// Householder QR of `Aᵀ` gives an upper-triangular `R`; `B = Rᵀ` with the
/// column signs flipped so the diagonal is nonnegative.
pub fn triangularize<T: Scalar>(a: &Matrix<T>) -> Result<LowerTriangular<T>> {
    let n = a.rows();
    let m = a.cols();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if m < n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: m,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFiniteState);
    }
    let threshold = T::rank_tolerance() * a.frobenius_norm();

    // w = Aᵀ, m×n, reduced in place to R in its top n rows.
    let mut w = a.transpose();
    let mut v = vec![T::zero(); m];
    for j in 0..n {
        let norm = (j..m)
            .fold(T::zero(), |acc, i| acc + w[(i, j)] * w[(i, j)])
            .sqrt();
        if norm == T::zero() {
            return Err(Error::RankDeficient { index: j });
        }
        let x0 = w[(j, j)];
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        for i in j..m {
            v[i] = w[(i, j)];
        }
        v[j] -= alpha;
        let vnorm2 = (j..m).fold(T::zero(), |acc, i| acc + v[i] * v[i]);
        if vnorm2 > T::zero() {
            let two = T::one() + T::one();
            for c in j..n {
                let proj = (j..m).fold(T::zero(), |acc, i| acc + v[i] * w[(i, c)]);
                let f = two * proj / vnorm2;
                for i in j..m {
                    w[(i, c)] -= f * v[i];
                }
            }
        }
        w[(j, j)] = alpha;
        for i in j + 1..m {
            w[(i, j)] = T::zero();
        }
    }

    let mut b = Matrix::zeros(n, n);
    for j in 0..n {
        let sign = if w[(j, j)] < T::zero() { -T::one() } else { T::one() };
        for i in j..n {
            b[(i, j)] = sign * w[(j, i)];
        }
        if !(b[(j, j)] >= threshold) || b[(j, j)] == T::zero() {
            return Err(Error::RankDeficient { index: j });
        }
    }
    Ok(LowerTriangular { entries: b })
}
