use serde::{Deserialize, Serialize};

use crate::control::{run_closed_loop, ClosedLoopRun, ControlError, ControllerConfig, DEFAULT_DT_S};
use crate::hand::HandDescription;
use crate::mechanics::{ContactScene, Shape};

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_FRICTION: f64 = 0.8;
/// Ramp to the default cap plus time to settle.
pub const DEFAULT_GRASP_DURATION_S: f64 = 3.5;

/// A rigid object placed against the palm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspObject {
    pub name: String,
    pub shape: Shape<f64>,
    pub mass_kg: f64,
    /// Whether the object is expected to be held; `None` when unknown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_success: Option<bool>,
    /// Marks dimensions or masses chosen for the scene rather than measured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Closed-loop grasp settings shared by every object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspSettings {
    pub controller: ControllerConfig,
    pub duration_s: f64,
    pub dt_s: f64,
    pub friction: f64,
}

impl Default for GraspSettings {
    fn default() -> Self {
        Self {
            controller: ControllerConfig::default(),
            duration_s: DEFAULT_GRASP_DURATION_S,
            dt_s: DEFAULT_DT_S,
            friction: DEFAULT_FRICTION,
        }
    }
}

const TENNIS_BALL: [f64; 3] = [-5.0, 65.0, 38.0];

/// Objects of the grasp demonstrations that map onto primitives.
pub fn default_objects() -> Vec<GraspObject> {
    let obj = |name: &str, shape, mass_kg, expected: bool, note: Option<&str>| GraspObject {
        name: name.into(),
        shape,
        mass_kg,
        expected_success: Some(expected),
        note: note.map(str::to_string),
    };
    vec![
        obj(
            "sphere_67mm",
            Shape::Sphere { center_mm: TENNIS_BALL, radius_mm: 33.5 },
            0.057,
            true,
            Some("mass of a standard tennis ball"),
        ),
        obj(
            "box_272g",
            Shape::Box { center_mm: [-5.0, 62.0, 30.0], size_mm: [70.0, 50.0, 56.0] },
            0.272,
            true,
            Some("box dimensions chosen for the scene"),
        ),
        obj(
            "can_272g",
            Shape::Cylinder { center_mm: [-5.0, 65.0, 36.0], axis: [1.0, 0.0, 0.0], radius_mm: 33.0, length_mm: 115.0 },
            0.272,
            true,
            Some("can dimensions chosen for the scene"),
        ),
        obj(
            "box_5kg",
            Shape::Box { center_mm: [-5.0, 62.0, 30.0], size_mm: [70.0, 50.0, 56.0] },
            5.0,
            false,
            Some("load beyond the hand's force budget"),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectResult {
    pub name: String,
    pub mass_kg: f64,
    pub fingers_in_hold: usize,
    pub total_normal_force_n: f64,
    pub required_force_n: f64,
    /// Force surplus over the requirement (negative when short).
    pub margin_n: f64,
    pub success: bool,
    pub expected_success: Option<bool>,
    pub diagnostic: Option<String>,
}

impl ObjectResult {
    pub fn as_expected(&self) -> bool {
        self.expected_success.is_none_or(|e| e == self.success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub friction: f64,
    pub pressure_cap_mpa: f64,
    pub objects: Vec<ObjectResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.objects.iter().all(ObjectResult::as_expected)
    }
}

pub fn grasp_object(
    hand: &HandDescription<f64>,
    object: &GraspObject,
    settings: &GraspSettings,
) -> Result<(ObjectResult, ClosedLoopRun), ControlError> {
    let scene = ContactScene::new(vec![object.shape.clone()], hand.experiment.penalty_stiffness);
    let run = run_closed_loop(hand, &scene, &settings.controller, settings.duration_s, settings.dt_s)?;
    let held = run.fingers_in_hold();
    let total = run.total_normal_force();
    let required = object.mass_kg * GRAVITY / settings.friction;
    let success = held >= 2 && total >= required;
    let diagnostic = (!success).then(|| {
        if held < 2 {
            format!("only {held} finger(s) reached hold")
        } else {
            format!(
                "force budget exceeded: needs {required:.2} N normal force (m·g/μ), the closed grasp provides {total:.2} N"
            )
        }
    });
    let result = ObjectResult {
        name: object.name.clone(),
        mass_kg: object.mass_kg,
        fingers_in_hold: held,
        total_normal_force_n: total,
        required_force_n: required,
        margin_n: total - required,
        success,
        expected_success: object.expected_success,
        diagnostic,
    };
    Ok((result, run))
}

/// Closed-loop grasp of every object. Success needs at least two fingers
/// in hold and enough normal force to carry the weight through friction.
pub fn grasp_object_suite(
    hand: &HandDescription<f64>,
    objects: &[GraspObject],
    settings: &GraspSettings,
) -> Result<SuiteReport, ControlError> {
    let objects =
        objects.iter().map(|o| grasp_object(hand, o, settings).map(|(r, _)| r)).collect::<Result<Vec<_>, _>>()?;
    Ok(SuiteReport { friction: settings.friction, pressure_cap_mpa: settings.controller.pressure_cap_mpa, objects })
}
