//! Numerical laboratory for discrete integral 2-currents, calibration
//! fields and J-holomorphic maps.
//!
//! Everything here is immutable after construction. Per-triangle and
//! per-scale work goes through [`par`], which runs on rayon when the
//! `parallel` feature is on and sequentially otherwise. Reductions are
//! always done in a fixed order, so results do not depend on the thread
//! count.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod blowup;
pub mod calibrations;
pub mod currents;
pub mod examples;
pub mod exterior;
pub mod jholo;
pub mod par;
pub mod quad;

mod error;

pub use error::{Error, Result};
pub(crate) use error::invalid;

/// Shared tolerance for "calibrated": defect at most this much.
pub const CALIBRATED_TOL: f64 = 1e-8;
