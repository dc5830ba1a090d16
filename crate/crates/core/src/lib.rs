//! Simulation of SDEs driven by a time-changed Brownian motion `B o E`,
//! where `E` is the inverse of a driftless subordinator.
//!
//! * [`levy_clock`]: subordinator models and exact increment sampling.
//! * [`inverse_clock`]: the discretized inverse clock `E^delta` and coupled
//!   coarse clocks.
//! * [`tc_sde`]: coefficient pairs and the time-changed Euler-Maruyama scheme.
//! * [`moment_lab`]: finiteness of `E[exp(lambda E_t^r)]`, series and Monte
//!   Carlo estimates, regular-variation diagnostics.
//! * [`strong_error`]: coupled multi-resolution strong-error experiments.

pub mod error;
pub mod inverse_clock;
pub mod levy_clock;
pub mod moment_lab;
pub mod rng;
pub mod stats;
pub mod strong_error;
pub mod tc_sde;

pub use error::{Error, Result};
pub use inverse_clock::{ClockPath, RefinedClock};
pub use levy_clock::{ModelKind, SubordinatorModel};
pub use moment_lab::{classify, moment_mc, MomentEstimate, MomentQuery, MomentVerdict, Verdict};
pub use rng::{Purpose, RandomStream, StreamFactory};
pub use stats::RunningMoments;
pub use strong_error::{coupled_experiment, ConvergenceExperiment, ErrorReport, ResolutionLadder};
pub use tc_sde::{builtin_coefficients, euler_maruyama, ApproximatePath, CoefficientPair, CoefficientSpec, Regularity};
