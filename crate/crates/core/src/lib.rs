//! Shuffled linear regression: recover `w` from `y_i = w^T x_pi(i) + noise`
//! when the pairing `pi` is unknown.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32`, `f64`); exact
//! recovery and the hardness checks run over big rationals. The aliases below
//! fix the scalar to `f64`.

// Negated comparisons are used to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod exact;
pub mod experiment;
pub mod hardness;
pub mod lattice;
pub mod model;
pub mod oracle;
pub mod perm1d;
pub mod rowsample;
pub mod scalar;

pub use approx::{fptas_solve, fptas_solve_with, ApproxError, CandidateMode, FptasConfig, FptasStats};
pub use lattice::{recover, LatticeError, RecoveryConfig, RecoveryOutcome, RecoveryResult};
pub use model::{ExactAnchoredInstance, ModelError, Permutation, QuantizationConfig, Rational};
pub use oracle::{brute_force, ols_given_perm, OracleError};
pub use perm1d::{sort_match, wasserstein2_sq};

pub type Instance = model::Instance<f64>;
pub type AnchoredInstance = model::AnchoredInstance<f64>;
pub type GroundTruth = model::GroundTruth<f64>;
pub type Solution = approx::Solution<f64>;
pub type SamplingMatrix = rowsample::SamplingMatrix<f64>;
