//! Strong approximation of scalar stochastic Volterra integral equations
//!
//! ```text
//! X(t) = X0 + ∫_0^t (t-s)^{-α} b(X(s)) ds + ∫_0^t (t-s)^{-β} σ(X(s)) dB_s
//! ```
//!
//! with weakly singular power kernels, `α, β ∈ (0, 1/2)`.
//!
//! The crate is split along the simulation pipeline:
//!
//! * [`kernel`]: power kernels and their closed-form integrals.
//! * [`randomness`]: seeded Brownian increments and the uniform drift nodes `τ_j`.
//! * [`problem`]: equation instances and finite-sample checks of the coefficient assumptions.
//! * [`quadrature`]: left-point Riemann–Stieltjes sums for the singular stochastic integrals.
//! * [`scheme`]: randomized Milstein, randomized Euler–Maruyama and classical Euler–Maruyama.
//! * [`experiment`]: coupled-path strong error estimation and log-log rate fitting.

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod problem;
pub mod quadrature;
pub mod randomness;
pub mod scheme;

pub use error::{Result, SvieError};
pub use experiment::{
    estimate_rate, holder_exponent, strong_error, theoretical_rate, ErrorRow, ErrorTable,
    RateEstimate, StudyOptions,
};
pub use kernel::KernelExponent;
pub use problem::{AssumptionBounds, SvieProblem, ValidationReport};
pub use randomness::{FineNoise, GridSpec};
pub use scheme::{simulate, SchemeTag, SimulateOptions, Trajectory};
