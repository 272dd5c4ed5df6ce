//! sensikit: random differential privacy via sensitivity sampling.
//!
//! Global sensitivity analysis is often painful or impossible; sampling the
//! sensitivity of a black-box target function and calibrating noise to a
//! high-order statistic of the sample yields differential privacy with high
//! probability over databases drawn from the data distribution. This crate
//! provides:
//!
//! - [`numerics`]: Lambert W (both real branches) and the
//!   Dvoretzky–Kiefer–Wolfowitz deviation term, generic over the float type;
//! - [`planner`]: closed-form sampling plans (m, k, rho) for a target
//!   confidence gamma, under three optimisation objectives, plus plan
//!   validation and confidence transfer to non-i.i.d. data;
//! - [`sampler`]: the sensitivity sampler itself, with counter-based RNG
//!   substreams so parallel runs are bit-for-bit reproducible;
//! - [`mechanisms`]: Laplace, Gaussian, exponential and Bernstein (lattice)
//!   mechanisms, and the end-to-end sample-then-respond composition;
//! - [`targets`]: worked targets (vector mean, linear SVM with an analytic
//!   global bound, kernel density estimation on a lattice) and the record
//!   distributions used by the experiment harness.
//!
//! Everything downstream of [`numerics`] works in [`Real`] (f64): noise
//! calibration tolerances and the RNG layer are specified at double
//! precision, so the generic scalar stops at the special-function layer.

pub mod error;
pub mod mechanisms;
pub mod numerics;
pub mod planner;
pub mod sampler;
pub mod targets;

/// Scalar type used by the sampler, planner and mechanisms.
pub type Real = f64;

pub use error::{Error, Result};
pub use mechanisms::{sample_then_respond, DegeneratePolicy, MechanismSpec, Release};
pub use planner::{PlanObjective, PrivacyBudget, SamplingPlan};
pub use sampler::{
    sample_sensitivity, substream, OutputNorm, Record, RecordSampler, SensitivitySample,
    TargetFunction,
};
