//! Scalar abstraction shared by the muscle model and the mechanics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the simulator can run on.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on precision are
/// exposed as associated functions so solvers can pick sensible defaults.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Residual torque below which a joint is considered balanced (N·mm).
    fn equilibrium_tolerance() -> Self;

    /// Relative step used for central finite differences.
    fn fd_step() -> Self;

    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn deg_to_rad(self) -> Self {
        self * Self::PI() / Self::lit(180.0)
    }

    #[inline]
    fn rad_to_deg(self) -> Self {
        self * Self::lit(180.0) / Self::PI()
    }
}

impl Real for f64 {
    fn equilibrium_tolerance() -> Self {
        1e-6
    }
    fn fd_step() -> Self {
        1e-6
    }
}

impl Real for f32 {
    fn equilibrium_tolerance() -> Self {
        5e-2
    }
    fn fd_step() -> Self {
        1e-2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_conversions_round_trip() {
        let x = 37.5_f64;
        assert!((x.deg_to_rad().rad_to_deg() - x).abs() < 1e-12);
        assert!((90.0_f32.deg_to_rad() - std::f32::consts::FRAC_PI_2).abs() < 1e-6);
    }
}
