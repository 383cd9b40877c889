//! Declarative model of the hand: joints, muscles, tendon routes, touch
//! sensors, finger chains and their placement in the hand frame.
//!
//! Hand frame: `x` points ulnar (toward the little finger), `y` distal along
//! the fingers, `z` palmar. The palm surface is the plane `z = 0`.

mod default;
mod io;
mod validate;

use serde::{Deserialize, Serialize};

use crate::pam::PamParams;
use crate::scalar::Real;

pub use default::{default_hand, initial_hand, DEFAULT_HAND_JSON, FINGER_NAMES, THUMB_NAME};
pub use io::{parse_hand_description, serialize, ParseError, ParseErrorCode, TOP_LEVEL_KEYS};
pub use validate::{validate, validate_with, ValidationOptions, Violation, MUSCLE_INVENTORY};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Flexion,
    Extension,
}

impl Sense {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Sense::Flexion => T::one(),
            Sense::Extension => -T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct JointSpec<T> {
    pub id: String,
    #[serde(rename = "rest_angle_deg")]
    pub rest_angle: T,
    #[serde(rename = "stiffness_nmm_per_deg")]
    pub stiffness: T,
    #[serde(rename = "min_angle_deg")]
    pub min_angle: T,
    #[serde(rename = "max_angle_deg")]
    pub max_angle: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct Waypoint<T> {
    pub joint_id: String,
    #[serde(rename = "moment_arm_mm")]
    pub moment_arm: T,
    pub sense: Sense,
}

/// Path of one tendon over the joints it crosses, as ideal pulleys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct TendonRoute<T> {
    pub muscle_id: String,
    #[serde(rename = "slack_mm")]
    pub slack: T,
    pub waypoints: Vec<Waypoint<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Acronym {
    FDP,
    FDS,
    FPL,
    ED,
    EPL,
    AP,
    OP,
}

impl Acronym {
    pub const ALL: [Acronym; 7] =
        [Acronym::FDP, Acronym::FDS, Acronym::FPL, Acronym::ED, Acronym::EPL, Acronym::AP, Acronym::OP];

    /// Muscles that close the hand and receive the grasp lead pressure.
    pub fn is_flexor(self) -> bool {
        !matches!(self, Acronym::ED | Acronym::EPL)
    }

    pub fn name(self) -> &'static str {
        match self {
            Acronym::FDP => "FDP",
            Acronym::FDS => "FDS",
            Acronym::FPL => "FPL",
            Acronym::ED => "ED",
            Acronym::EPL => "EPL",
            Acronym::AP => "AP",
            Acronym::OP => "OP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct MuscleSpec<T> {
    pub id: String,
    pub acronym: Acronym,
    pub target_finger: String,
    pub pam: PamParams<T>,
}

impl<T: Real> MuscleSpec<T> {
    pub fn length(&self) -> T {
        self.pam.rest_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorLocation {
    Fingertip,
    Palm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct SensorSpec<T> {
    pub id: String,
    pub location: SensorLocation,
    /// Chain carrying a fingertip sensor; `None` for the palm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finger: Option<String>,
    #[serde(rename = "compliance_kpa_per_n")]
    pub compliance: T,
    #[serde(rename = "threshold_kpa")]
    pub threshold: T,
    #[serde(rename = "saturation_kpa")]
    pub saturation: T,
}

/// A serial chain: joint ids from proximal to distal and the bone segments.
///
/// Long fingers have three joints (MCP, PIP, DIP), each followed by a
/// segment. The thumb has four (CMC flexion, CMC abduction, MP, IP); the two
/// CMC axes share a centre and the metacarpal follows the second one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct ChainSpec<T> {
    pub name: String,
    pub joints: Vec<String>,
    #[serde(rename = "segments_mm")]
    pub segments: Vec<T>,
    /// Soft-tissue radius around the bone axis used for contact.
    #[serde(rename = "radius_mm")]
    pub radius: T,
}

/// Rigid placement of a chain base in the hand frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct FrameSpec<T> {
    pub chain: String,
    #[serde(rename = "origin_mm")]
    pub origin: [T; 3],
    /// `[yaw, pitch, roll]`, applied as `Rz(yaw) · Rx(pitch) · Ry(roll)`.
    #[serde(rename = "orientation_deg")]
    pub orientation: [T; 3],
}

/// Palm contact surface: rectangle in the `z = 0` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct PalmSpec<T> {
    #[serde(rename = "x_range_mm")]
    pub x_range: [T; 2],
    #[serde(rename = "y_range_mm")]
    pub y_range: [T; 2],
}

/// Settings of the reproduction experiments that belong to a calibrated hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct ExperimentSetup<T> {
    pub rom_finger: String,
    #[serde(rename = "rom_flexor_pressure_mpa")]
    pub rom_flexor_pressure: T,
    /// Extensor pressure producing the stretched posture.
    #[serde(rename = "extension_pressure_mpa")]
    pub extension_pressure: T,
    pub fingertip_finger: String,
    #[serde(rename = "fingertip_pressure_mpa")]
    pub fingertip_pressure: T,
    /// Posture at which the fingertip is pinned to the load cell.
    #[serde(rename = "fingertip_posture_deg")]
    pub fingertip_posture: [T; 3],
    #[serde(rename = "grasp_pressure_mpa")]
    pub grasp_pressure: T,
    #[serde(rename = "grasp_cylinder_radius_mm")]
    pub grasp_cylinder_radius: T,
    #[serde(rename = "grasp_cylinder_length_mm")]
    pub grasp_cylinder_length: T,
    /// Cylinder axis position `(y, z)` in the hand frame; the axis runs along `x`.
    #[serde(rename = "grasp_cylinder_offset_mm")]
    pub grasp_cylinder_offset: [T; 2],
    #[serde(rename = "penalty_stiffness_n_per_mm")]
    pub penalty_stiffness: T,
    #[serde(rename = "kapandji_tolerance_mm")]
    pub kapandji_tolerance: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct HandDescription<T> {
    pub joints: Vec<JointSpec<T>>,
    pub muscles: Vec<MuscleSpec<T>>,
    pub routes: Vec<TendonRoute<T>>,
    pub sensors: Vec<SensorSpec<T>>,
    pub fingers: Vec<ChainSpec<T>>,
    pub thumb: ChainSpec<T>,
    pub frames: Vec<FrameSpec<T>>,
    pub palm: PalmSpec<T>,
    pub experiment: ExperimentSetup<T>,
}

impl<T: Real> HandDescription<T> {
    pub fn joint(&self, id: &str) -> Option<&JointSpec<T>> {
        self.joints.iter().find(|j| j.id == id)
    }

    pub fn joint_mut(&mut self, id: &str) -> Option<&mut JointSpec<T>> {
        self.joints.iter_mut().find(|j| j.id == id)
    }

    pub fn muscle(&self, id: &str) -> Option<&MuscleSpec<T>> {
        self.muscles.iter().find(|m| m.id == id)
    }

    pub fn route(&self, muscle_id: &str) -> Option<&TendonRoute<T>> {
        self.routes.iter().find(|r| r.muscle_id == muscle_id)
    }

    pub fn route_mut(&mut self, muscle_id: &str) -> Option<&mut TendonRoute<T>> {
        self.routes.iter_mut().find(|r| r.muscle_id == muscle_id)
    }

    /// Long fingers followed by the thumb.
    pub fn chains(&self) -> impl Iterator<Item = &ChainSpec<T>> {
        self.fingers.iter().chain(std::iter::once(&self.thumb))
    }

    pub fn chain(&self, name: &str) -> Option<&ChainSpec<T>> {
        self.chains().find(|c| c.name == name)
    }

    pub fn chain_names(&self) -> Vec<String> {
        self.chains().map(|c| c.name.clone()).collect()
    }

    pub fn is_thumb(&self, name: &str) -> bool {
        self.thumb.name == name
    }

    pub fn frame(&self, chain: &str) -> Option<&FrameSpec<T>> {
        self.frames.iter().find(|f| f.chain == chain)
    }

    pub fn muscles_of(&self, chain: &str) -> impl Iterator<Item = &MuscleSpec<T>> {
        let chain = chain.to_string();
        self.muscles.iter().filter(move |m| m.target_finger == chain)
    }

    pub fn fingertip_sensor(&self, chain: &str) -> Option<&SensorSpec<T>> {
        self.sensors.iter().find(|s| s.location == SensorLocation::Fingertip && s.finger.as_deref() == Some(chain))
    }

    pub fn palm_sensor(&self) -> Option<&SensorSpec<T>> {
        self.sensors.iter().find(|s| s.location == SensorLocation::Palm)
    }

    /// Rest angles of a chain, proximal to distal.
    pub fn rest_angles(&self, chain: &str) -> Option<Vec<T>> {
        let c = self.chain(chain)?;
        c.joints.iter().map(|j| self.joint(j).map(|s| s.rest_angle)).collect()
    }

    pub fn cast<U: Real>(&self) -> HandDescription<U> {
        // Round-trip through the document model; values pass through f64.
        let v = serde_json::to_value(self).expect("hand serializes");
        serde_json::from_value(v).expect("hand deserializes")
    }
}
