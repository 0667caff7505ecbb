//! Reliability diagnostics for meta-analyses built from per-study effect
//! estimates and confidence limits.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds study records, datasets and their CSV/JSON forms.
//! * [`stats`] converts confidence intervals to p-values, ranks them and
//!   pools effects with the DerSimonian–Laird random-effects estimator.
//! * [`diagnostics`] builds p-value, expectation and volcano plot series and
//!   interprets the shape of the p-value plot.
//! * [`counting`] computes analysis search spaces.
//! * [`sim`] generates seeded simulated literatures to check the shape rules.

pub mod counting;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
