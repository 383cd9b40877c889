//! McKibben pneumatic artificial muscle model.
//!
//! The force law is the ideal-cylinder McKibben equation with an additive
//! linear term for the elastomer tube:
//!
//! ```text
//! F(P, ε) = (π D0² P / 4) · (3 (1 − ε)² / tan² θ0 − 1 / sin² θ0) − k_t ε
//! ```
//!
//! clamped at zero because a muscle can only pull. Units are millimetres,
//! megapascals and newtons throughout, so `D0² · P` is directly in newtons.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Braid angle at which the ideal McKibben muscle stops producing force
/// (`atan √2`), in degrees.
pub const BRAID_LOCK_ANGLE_DEG: f64 = 54.735_610_317_245_35;

/// Skeletal-muscle reference values used when comparing actuator stress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanMuscleReference {
    pub peak_stress_mpa: f64,
    pub sustained_stress_mpa: f64,
    pub typical_strain: f64,
}

pub const HUMAN_MUSCLE: HumanMuscleReference =
    HumanMuscleReference { peak_stress_mpa: 0.35, sustained_stress_mpa: 0.1, typical_strain: 0.20 };

/// Measured actuator endpoints the shipped muscle is fitted to.
pub mod measured {
    /// Blocked force at 0 % strain (N) and the pressure it was measured at (MPa).
    pub const BLOCKED_FORCE_N: f64 = 38.05;
    pub const BLOCKED_PRESSURE_MPA: f64 = 0.5;
    /// Largest free contraction (fraction) and its pressure (MPa).
    pub const FREE_STRAIN: f64 = 0.301;
    pub const FREE_PRESSURE_MPA: f64 = 0.5;
    /// Nominal silicone tube inner diameter; metadata only, see [`super::PamParams`].
    pub const TUBE_INNER_DIAMETER_MM: f64 = 1.5;
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PamError {
    #[error("invalid muscle parameters: {0}")]
    InvalidParams(String),
    #[error("strain {0} outside [0, 1)")]
    Domain(f64),
    #[error("negative pressure {0} MPa")]
    NegativePressure(f64),
    #[error("endpoints cannot be fitted: {0}")]
    InfeasibleEndpoints(String),
}

/// Geometry and operating limits of one muscle.
///
/// `effective_diameter` is a fitted quantity: the blocked force measured on
/// the real actuator is larger than the nominal sleeve would give under the
/// ideal model, so it does not equal the tube's physical diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct PamParams<T> {
    #[serde(rename = "rest_length_mm")]
    pub rest_length: T,
    #[serde(rename = "effective_diameter_mm")]
    pub effective_diameter: T,
    #[serde(rename = "braid_angle_deg")]
    pub braid_angle: T,
    #[serde(rename = "tube_stiffness_n")]
    pub tube_stiffness: T,
    #[serde(rename = "max_pressure_mpa")]
    pub max_pressure: T,
}

impl<T: Real> PamParams<T> {
    pub fn validate(&self) -> Result<(), PamError> {
        let lock = T::lit(BRAID_LOCK_ANGLE_DEG);
        let bad = |what: &str| Err(PamError::InvalidParams(what.to_string()));
        if !(self.braid_angle > T::zero() && self.braid_angle < lock) {
            return bad("braid angle must lie in (0, 54.7356) degrees");
        }
        if !(self.effective_diameter > T::zero()) {
            return bad("effective diameter must be positive");
        }
        if !(self.rest_length > T::zero()) {
            return bad("rest length must be positive");
        }
        if !(self.max_pressure > T::zero()) {
            return bad("max pressure must be positive");
        }
        if !(self.tube_stiffness >= T::zero()) {
            return bad("tube stiffness must be non-negative");
        }
        Ok(())
    }

    /// Cross-section `π D0² / 4` (mm²).
    pub fn area(&self) -> T {
        T::PI() * self.effective_diameter * self.effective_diameter / T::lit(4.0)
    }

    /// Shape factor `3 (1 − ε)² / tan² θ0 − 1 / sin² θ0`.
    fn shape_factor(&self, strain: T) -> T {
        let theta = self.braid_angle.deg_to_rad();
        let (s, c) = theta.sin_cos();
        let t = s / c;
        let one_minus = T::one() - strain;
        T::lit(3.0) * one_minus * one_minus / (t * t) - T::one() / (s * s)
    }

    /// Unclamped force law; negative values mean the muscle would push.
    fn raw_force(&self, pressure: T, strain: T) -> T {
        self.area() * pressure * self.shape_factor(strain) - self.tube_stiffness * strain
    }

    pub fn with_rest_length(mut self, rest_length: T) -> Self {
        self.rest_length = rest_length;
        self
    }

    pub fn cast<U: Real>(&self) -> PamParams<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        PamParams {
            rest_length: c(self.rest_length),
            effective_diameter: c(self.effective_diameter),
            braid_angle: c(self.braid_angle),
            tube_stiffness: c(self.tube_stiffness),
            max_pressure: c(self.max_pressure),
        }
    }
}

/// Operating point of a muscle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamState<T> {
    pub pressure: T,
    pub strain: T,
    pub force: T,
}

impl<T: Real> PamState<T> {
    pub fn evaluate(params: &PamParams<T>, pressure: T, strain: T) -> Result<Self, PamError> {
        if pressure > params.max_pressure {
            return Err(PamError::InvalidParams(format!("pressure {pressure} above max {}", params.max_pressure)));
        }
        let force = pam_force(params, pressure, strain)?;
        Ok(Self { pressure, strain, force })
    }
}

/// Tensile force (N) at `pressure` (MPa) and contraction `strain`.
pub fn pam_force<T: Real>(params: &PamParams<T>, pressure: T, strain: T) -> Result<T, PamError> {
    params.validate()?;
    if !(strain >= T::zero() && strain < T::one()) {
        return Err(PamError::Domain(strain.to_f64_lossy()));
    }
    if pressure < T::zero() {
        return Err(PamError::NegativePressure(pressure.to_f64_lossy()));
    }
    Ok(params.raw_force(pressure, strain).max(T::zero()))
}

/// Contraction at which the muscle stops pulling.
///
/// Found by bisection on `[0, 1)` down to adjacent floats, so the residual
/// is at rounding level. Returns 0 when the pressure is zero.
pub fn pam_free_strain<T: Real>(params: &PamParams<T>, pressure: T) -> Result<T, PamError> {
    params.validate()?;
    if pressure < T::zero() {
        return Err(PamError::NegativePressure(pressure.to_f64_lossy()));
    }
    if pressure == T::zero() || params.raw_force(pressure, T::zero()) <= T::zero() {
        return Ok(T::zero());
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = params.raw_force(pressure, mid);
        if f > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (params.raw_force(pressure, lo), params.raw_force(pressure, hi));
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Braid angle and effective diameter recovered from two endpoint measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamFit<T> {
    pub braid_angle: T,
    pub effective_diameter: T,
}

impl<T: Real> PamFit<T> {
    pub fn into_params(self, rest_length: T, max_pressure: T) -> PamParams<T> {
        PamParams {
            rest_length,
            effective_diameter: self.effective_diameter,
            braid_angle: self.braid_angle,
            tube_stiffness: T::zero(),
            max_pressure,
        }
    }
}

/// Closed-form fit of `θ0` and `D0` (with `k_t = 0`) to a blocked-force
/// measurement `(pressure, force)` and a free-strain measurement
/// `(pressure, strain)`.
///
/// Without tube stiffness the free strain does not depend on pressure, so the
/// free-strain pressure is only checked for positivity.
pub fn calibrate_pam<T: Real>(blocked: (T, T), free: (T, T)) -> Result<PamFit<T>, PamError> {
    let (p_blocked, f_blocked) = blocked;
    let (p_free, eps_free) = free;
    let infeasible = |m: String| Err(PamError::InfeasibleEndpoints(m));
    if !(p_blocked > T::zero() && f_blocked > T::zero()) {
        return infeasible("blocked pressure and force must be positive".into());
    }
    if !(p_free > T::zero()) {
        return infeasible("free-strain pressure must be positive".into());
    }
    if !(eps_free > T::zero() && eps_free < T::one()) {
        return infeasible(format!("free strain {eps_free} outside (0, 1)"));
    }
    let arg = T::one() / (T::lit(3.0).sqrt() * (T::one() - eps_free));
    if !(arg > T::zero() && arg < T::one()) {
        return infeasible(format!("arccos argument {arg} outside (0, 1)"));
    }
    let theta = arg.acos();
    let (s, c) = theta.sin_cos();
    let t = s / c;
    let shape = T::lit(3.0) / (t * t) - T::one() / (s * s);
    let diameter = (T::lit(4.0) * f_blocked / (T::PI() * p_blocked * shape)).sqrt();
    Ok(PamFit { braid_angle: theta.rad_to_deg(), effective_diameter: diameter })
}

/// Sampled force-strain relation at one pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceStrainCurve<T> {
    pub pressure: T,
    /// `(strain, force)` pairs with strictly increasing strain.
    pub samples: Vec<(T, T)>,
}

/// One curve per pressure, sampled uniformly from zero to the free strain.
pub fn force_strain_table<T: Real>(
    params: &PamParams<T>,
    pressures: &[T],
    n_points: usize,
) -> Result<Vec<ForceStrainCurve<T>>, PamError> {
    params.validate()?;
    if n_points < 2 {
        return Err(PamError::InvalidParams("at least two points per curve".into()));
    }
    pressures
        .iter()
        .map(|&p| {
            if !(p >= T::zero() && p <= params.max_pressure) {
                return Err(PamError::InvalidParams(format!("pressure {p} outside [0, {}]", params.max_pressure)));
            }
            let free = pam_free_strain(params, p)?;
            let last = T::lit((n_points - 1) as f64);
            let samples = (0..n_points)
                .map(|i| {
                    let eps = free * T::lit(i as f64) / last;
                    pam_force(params, p, eps).map(|f| (eps, f))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(ForceStrainCurve { pressure: p, samples })
        })
        .collect()
}

/// Header of the curve CSV export.
pub const CURVE_CSV_HEADER: [&str; 3] = ["pressure_mpa", "strain", "force_n"];

/// Writes curves as `pressure_mpa,strain,force_n` rows.
pub fn write_curves_csv<T: Real, W: Write>(curves: &[ForceStrainCurve<T>], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_CSV_HEADER)?;
    for curve in curves {
        for &(eps, f) in &curve.samples {
            w.write_record([
                curve.pressure.to_f64_lossy().to_string(),
                eps.to_f64_lossy().to_string(),
                f.to_f64_lossy().to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Engineering stress `F / (π D0² / 4)` in MPa.
pub fn pam_stress<T: Real>(params: &PamParams<T>, force: T) -> T {
    force / params.area()
}

/// The shipped muscle: fitted exactly to the measured endpoints.
pub fn calibrated_params<T: Real>(rest_length: T) -> PamParams<T> {
    let fit = calibrate_pam(
        (T::lit(measured::BLOCKED_PRESSURE_MPA), T::lit(measured::BLOCKED_FORCE_N)),
        (T::lit(measured::FREE_PRESSURE_MPA), T::lit(measured::FREE_STRAIN)),
    )
    .expect("measured endpoints are feasible");
    fit.into_params(rest_length, T::lit(measured::BLOCKED_PRESSURE_MPA))
}
