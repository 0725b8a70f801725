//! Joint estimation of the time-varying parameters and input delay of a
//! first-order delayed blood-pressure response model.
//!
//! A bank of square-root cubature Kalman filters, one per candidate input
//! delay, tracks the augmented state `[ΔMAP, K, T, MAP_b]` while a
//! recursive Bayesian posterior over the bank blends the delay hypotheses.
//! An extended Kalman filter bank on the same model serves as a baseline,
//! and a stochastic nonlinear patient simulator supplies ground truth.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ekf;
pub mod error;
pub mod map_model;
pub mod mm_bank;
pub mod numerics;
pub mod patient_sim;
pub mod scalar;
pub mod srckf;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = numerics::Matrix<f64>;
pub type LowerTriangular64 = numerics::LowerTriangular<f64>;
pub type GaussianBelief64 = srckf::GaussianBelief<f64>;
pub type NoiseModel64 = srckf::NoiseModel<f64>;
pub type Srckf64 = srckf::Srckf<f64>;
pub type AugmentedState64 = map_model::AugmentedState<f64>;
pub type SamplingConfig64 = map_model::SamplingConfig<f64>;
pub type CubatureBank64 = mm_bank::MultipleModelBank<f64, mm_bank::CubatureFilter<f64>>;
pub type ExtendedBank64 = mm_bank::MultipleModelBank<f64, ekf::ExtendedFilter<f64>>;
pub type BankEstimate64 = mm_bank::BankEstimate<f64>;
pub type PatientCoefficients64 = patient_sim::PatientCoefficients<f64>;
pub type GroundTruthTrajectory64 = patient_sim::GroundTruthTrajectory<f64>;

pub type Matrix32 = numerics::Matrix<f32>;
pub type GaussianBelief32 = srckf::GaussianBelief<f32>;
pub type Srckf32 = srckf::Srckf<f32>;
