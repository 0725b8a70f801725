//! Dense small-matrix primitives: Cholesky factorization and QR-based
//! lower-triangularization of wide compound matrices.

mod factor;
mod matrix;

pub use factor::{cholesky, triangularize, LowerTriangular};
pub use matrix::Matrix;
