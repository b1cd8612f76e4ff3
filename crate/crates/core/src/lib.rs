//! Saturation dose-time prediction for atomic layer deposition.
//!
//! The crate is organised bottom-up:
//!
//! - [`transport`]: closed-form and numerical plug-flow coverage profiles.
//! - [`dataset`]: seeded synthesis of `(thickness profile, dose time, saturation time)`
//!   records, persistence, CSV export.
//! - [`neuralnet`]: dense ReLU networks trained with MSE and Adam.
//! - [`evaluation`]: relative-error statistics, sweeps and report export.

pub mod dataset;
pub mod evaluation;
pub mod neuralnet;
pub mod streams;
pub mod transport;
