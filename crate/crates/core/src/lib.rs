//! Kaczmarz-type solvers for overdetermined linear systems `A·x = b` observed
//! through sparsely corrupted labels `b̃ = b + ε`.
//!
//! The crate provides plain randomized Kaczmarz, quantile randomized Kaczmarz
//! (updates restricted to rows whose residual is below a batch quantile), and
//! a whitelist variant that learns to block persistently suspicious rows.
//! Problem generators, corruption models and closed-form rate calculators
//! live alongside the solvers so that experiments can be reproduced from a
//! seed alone.
//!
//! All numeric code is generic over [`Scalar`]; the aliases at the crate root
//! pin the common `f64` instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod linalg;
pub mod problems;
pub mod sampling;
pub mod scalar;
pub mod solvers;
pub mod theory;

pub use linalg::{Estimate, LinalgError, LinearSystem};
pub use problems::{CorruptionModel, CorruptionOutcome, CorruptionSpec, ProblemError};
pub use sampling::{derive_seed, lower_quantile, RngStream, SamplingError};
pub use scalar::Scalar;
pub use solvers::{
    Oracle, QrkConfig, RkConfig, RunTrace, SolverConfig, SolverError, TraceRecord, WhitelistState,
};
pub use theory::{DetectorReport, TheoryError, TheoryParams};

/// Double-precision linear system.
pub type System = LinearSystem<f64>;
/// Single-precision linear system.
pub type System32 = LinearSystem<f32>;
/// Double-precision iterate.
pub type Iterate = Estimate<f64>;
/// Double-precision corrupted benchmark problem.
pub type Outcome = CorruptionOutcome<f64>;
/// Double-precision run trace.
pub type Trace = RunTrace<f64>;
/// Double-precision theorem parameters.
pub type Params = TheoryParams<f64>;
