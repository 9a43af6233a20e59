//! Online conformal prediction intervals under distribution shift.
//!
//! - [`conformal`]: rolling score windows, quantile prediction sets, `beta_t`,
//!   and the pinball loss.
//! - [`aci`]: the single step-size adaptive learner.
//! - [`faci`]: the expert-aggregated learner with `eta`/`sigma` schedules.
//! - [`theory`]: closed-form regret and coverage bounds.
//! - [`forecasters`]: GARCH(1,1) and rolling least squares base predictors.
//! - [`harness`]: stream generation, experiment runners, coverage metrics and
//!   file formats used by the `faci` CLI.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aci;
pub mod conformal;
pub mod error;
pub mod faci;
pub mod forecasters;
pub mod harness;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
