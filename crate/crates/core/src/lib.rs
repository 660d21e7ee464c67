//! Unified linear representation of diffusion models and flow matching.
//!
//! Every supported model is written as
//!
//! ```text
//! X_t = a11(t)·Z + a12(t)·ε
//! ω   = a21(t)·Z + a22(t)·ε
//! ```
//!
//! where `Z` is unit-variance data, `ε` standard Gaussian noise and `ω` the
//! quantity the network is trained to output. From the 2×2 matrix A(t) the
//! crate derives the reverse process, consistency and noise-prediction maps,
//! the probability-flow drift, the Pearson correlation between `X_t` and `ω`,
//! and the factor by which a fitting error in `ω` is amplified by a reverse
//! jump. [`empirical`] and [`dynamics`] check those closed forms by sampling
//! and by error injection against an exact oracle.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod conversions;
pub mod dynamics;
pub mod empirical;
pub mod error;
pub mod output;
pub mod schedules;
pub mod verify;

pub use error::{Error, Result};
pub use schedules::{CoeffMatrix, Family, Schedule, TimeDomain};
