//! Quasi-static simulator of a hand driven by 22 pneumatic artificial
//! muscles through tendons.
//!
//! The numeric core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the aliases below fix it to `f64`, which is what
//! the experiments, calibration and command line use.

// `!(x > 0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod control;
pub mod experiments;
pub mod geometry;
pub mod hand;
pub mod mechanics;
pub mod pam;
pub mod scalar;

pub use scalar::Real;

pub type PamParams = pam::PamParams<f64>;
pub type Hand = hand::HandDescription<f64>;
pub type FingerConfig = mechanics::FingerConfig<f64>;
pub type Contact = mechanics::Contact<f64>;
pub type EquilibriumResult = mechanics::EquilibriumResult<f64>;
pub type Shape = mechanics::Shape<f64>;
