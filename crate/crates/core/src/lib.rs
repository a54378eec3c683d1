//! Simulation and estimation toolkit for iterative adaptive spectroscopy of a
//! voltage-tunable two-mode mechanical system.
//!
//! The crate covers the coupled-mode algebra and avoided-crossing fit
//! ([`model`]), pulse construction ([`pulse`]), two-mode dynamics
//! ([`dynamics`]), Ramsey traces ([`ramsey`]), spectral estimation and the
//! adaptive loop ([`estimator`]), and charge-sensing conversions ([`sensing`]).
//! [`scenario`] and [`cli`] wire these into reproducible command-line runs.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimator;
pub mod model;
pub mod pulse;
pub mod ramsey;
pub mod scenario;
pub mod seed;
pub mod sensing;
pub mod simplex;

pub use error::{Error, Result};
