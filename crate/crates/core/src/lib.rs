//! Stability margins of linear time-invariant feedback loops.
//!
//! The crate covers classical gain/phase margins, disk margins with
//! arbitrary skew, the worst-case perturbations that achieve them, and
//! multi-loop margins of MIMO systems through structured singular value
//! bounds. Everything is `no_std` + `alloc`; the `std` feature only
//! switches the float backend away from `libm`.
//!
//! All margin routines assume a negative-feedback loop. Models declared
//! with positive feedback are sign-normalized when an [`LtiModel`] is
//! built, so `LtiModel::new(l, FeedbackSign::Positive)` analyses `-l`.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod classical;
pub mod disk;
mod error;
pub mod linalg;
pub mod lti;
pub mod mu;
mod optim;
pub mod specnorm;

pub use error::{Error, Result};
pub use lti::{FeedbackSign, LtiModel, Polynomial, StateSpace, System, TransferFunction};
pub use num_complex::Complex64;

/// Frequency sentinel for `ω = +∞`. Grids, peak frequencies and critical
/// frequencies use this value rather than a large finite number.
pub const OMEGA_INF: f64 = f64::INFINITY;
