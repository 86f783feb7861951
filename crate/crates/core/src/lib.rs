//! Particle simulation and stability certificates for McKean–Vlasov SDEs
//! stabilized by feedback control that only sees the state and its law at
//! discrete observation instants `0, δ, 2δ, …`.
//!
//! The crate is split along the pipeline:
//!
//! - [`measure`]: empirical measures, moments, and W₂ distances.
//! - [`model`]: drift / diffusion / control coefficients, including the
//!   linear mean-field example with closed-form Lipschitz constants.
//! - [`sim`]: Euler–Maruyama integration of the N-particle system with held
//!   control, and an increment-coupled limit-process integrator.
//! - [`stability`]: the explicit smallness conditions and decay certificates.
//! - [`analysis`]: moment-ODE oracle and the empirical verification pipelines.
//! - [`config`] and [`cli`]: run configuration and the `mvstab` subcommands.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod measure;
pub mod model;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use measure::{EmpiricalMeasure, MeasureSummary};
pub use model::{LinearMeanField, LinearMeanFieldParams, McKeanVlasovModel};
pub use sim::{SimConfig, TrajectoryRecord};
pub use stability::{ConditionConstants, StabilityReport};
