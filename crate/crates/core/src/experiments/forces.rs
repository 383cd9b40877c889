use serde::{Deserialize, Serialize};

use crate::hand::HandDescription;
use crate::mechanics::{fingertip_force, grasp_cylinder, ChainModel, FingerConfig, MechanicsError};

/// Measured force with its uncertainty, N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceTarget {
    pub force_n: f64,
    pub uncertainty_n: f64,
    pub pressure_mpa: f64,
}

pub const MEASURED_FINGERTIP: ForceTarget = ForceTarget { force_n: 1.95, uncertainty_n: 0.15, pressure_mpa: 0.2 };
pub const MEASURED_GRASP: ForceTarget = ForceTarget { force_n: 2.97, uncertainty_n: 0.25, pressure_mpa: 0.18 };

/// Human grip reference, reported alongside and never simulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HumanGrip {
    pub effort: &'static str,
    pub force_n: f64,
}

pub const HUMAN_GRIP: [HumanGrip; 2] =
    [HumanGrip { effort: "moderate", force_n: 24.0 }, HumanGrip { effort: "strong", force_n: 43.0 }];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceEntry {
    pub kind: &'static str,
    pub finger: Option<String>,
    pub pressure_mpa: f64,
    pub force_n: f64,
    pub target_n: f64,
    pub uncertainty_n: f64,
    pub deviation_n: f64,
    pub within_tolerance: bool,
}

impl ForceEntry {
    fn new(kind: &'static str, finger: Option<String>, pressure: f64, force: f64, target: &ForceTarget) -> Self {
        let deviation = (force - target.force_n).abs();
        Self {
            kind,
            finger,
            pressure_mpa: pressure,
            force_n: force,
            target_n: target.force_n,
            uncertainty_n: target.uncertainty_n,
            deviation_n: deviation,
            within_tolerance: deviation <= target.uncertainty_n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceReport {
    pub entries: Vec<ForceEntry>,
    pub human_reference: Vec<HumanGrip>,
}

impl ForceReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.within_tolerance)
    }
}

/// Fingertip force of the configured finger at `pressure` on all its
/// flexors, tip pinned at the configured posture.
pub fn fingertip_force_at(hand: &HandDescription<f64>, pressure: f64) -> Result<f64, MechanicsError> {
    let e = &hand.experiment;
    let chain = ChainModel::new(hand, &e.fingertip_finger)?;
    let p = chain.uniform_pressures(pressure, 0.0);
    let config = FingerConfig::new(e.fingertip_posture.to_vec());
    Ok(fingertip_force(hand, &e.fingertip_finger, &p, &config)?.force)
}

/// Split-cylinder compression at `pressure` with the configured cylinder.
pub fn grasp_force_at(hand: &HandDescription<f64>, radius: f64, pressure: f64) -> Result<f64, MechanicsError> {
    Ok(grasp_cylinder(hand, radius, pressure)?.force)
}

pub fn fingertip_force_experiment_with(
    hand: &HandDescription<f64>,
    target: &ForceTarget,
) -> Result<ForceEntry, MechanicsError> {
    let e = &hand.experiment;
    let f = fingertip_force_at(hand, e.fingertip_pressure)?;
    Ok(ForceEntry::new("fingertip", Some(e.fingertip_finger.clone()), e.fingertip_pressure, f, target))
}

pub fn fingertip_force_experiment(hand: &HandDescription<f64>) -> Result<ForceEntry, MechanicsError> {
    fingertip_force_experiment_with(hand, &MEASURED_FINGERTIP)
}

pub fn grasp_force_experiment_with(
    hand: &HandDescription<f64>,
    radius: f64,
    target: &ForceTarget,
) -> Result<ForceEntry, MechanicsError> {
    let p = hand.experiment.grasp_pressure;
    let f = grasp_force_at(hand, radius, p)?;
    Ok(ForceEntry::new("grasp", None, p, f, target))
}

pub fn grasp_force_experiment(hand: &HandDescription<f64>, radius: f64) -> Result<ForceEntry, MechanicsError> {
    grasp_force_experiment_with(hand, radius, &MEASURED_GRASP)
}

/// Both force setups with the human reference rows attached.
pub fn force_report(
    hand: &HandDescription<f64>,
    fingertip: &ForceTarget,
    grasp: &ForceTarget,
) -> Result<ForceReport, MechanicsError> {
    Ok(ForceReport {
        entries: vec![
            fingertip_force_experiment_with(hand, fingertip)?,
            grasp_force_experiment_with(hand, hand.experiment.grasp_cylinder_radius, grasp)?,
        ],
        human_reference: HUMAN_GRIP.to_vec(),
    })
}
