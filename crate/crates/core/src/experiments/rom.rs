use serde::{Deserialize, Serialize};

use crate::hand::HandDescription;
use crate::mechanics::{solve_finger_equilibrium, ChainModel, MechanicsError};

pub const ROM_TOLERANCE_DEG: f64 = 2.0;

/// Little-finger angles (MCP, PIP, DIP), degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomTargets {
    pub stretched: [f64; 3],
    pub relaxed: [f64; 3],
    pub curled: [f64; 3],
}

pub const MEASURED_ROM: RomTargets =
    RomTargets { stretched: [7.2, 15.0, 0.0], relaxed: [29.7, 29.8, 14.5], curled: [90.9, 87.1, 45.0] };

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostureRow {
    pub posture: &'static str,
    pub angles_deg: [f64; 3],
    pub target_deg: [f64; 3],
    pub deviation_deg: [f64; 3],
    pub flexor_pressure_mpa: f64,
    pub extensor_pressure_mpa: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RomReport {
    pub finger: String,
    pub tolerance_deg: f64,
    pub rows: Vec<PostureRow>,
}

impl RomReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.within_tolerance)
    }

    pub fn row(&self, posture: &str) -> Option<&PostureRow> {
        self.rows.iter().find(|r| r.posture == posture)
    }
}

/// Posture of `finger` with every flexor at `flexor` and every extensor at
/// `extensor` MPa, no contacts.
pub fn posture_angles(
    hand: &HandDescription<f64>,
    finger: &str,
    flexor: f64,
    extensor: f64,
) -> Result<Vec<f64>, MechanicsError> {
    let chain = ChainModel::new(hand, finger)?;
    let p = chain.uniform_pressures(flexor, extensor);
    Ok(solve_finger_equilibrium(hand, finger, &p, &[])?.config.angles)
}

pub fn rom_experiment_with(hand: &HandDescription<f64>, targets: &RomTargets) -> Result<RomReport, MechanicsError> {
    let e = &hand.experiment;
    let finger = e.rom_finger.clone();
    let cases = [
        ("stretched", 0.0, e.extension_pressure, targets.stretched),
        ("relaxed", 0.0, 0.0, targets.relaxed),
        ("curled", e.rom_flexor_pressure, 0.0, targets.curled),
    ];
    let mut rows = Vec::new();
    for (posture, flexor, extensor, target) in cases {
        let a = posture_angles(hand, &finger, flexor, extensor)?;
        let angles = [a[0], a[1], a[2]];
        let deviation = [0, 1, 2].map(|i| (angles[i] - target[i]).abs());
        rows.push(PostureRow {
            posture,
            angles_deg: angles,
            target_deg: target,
            deviation_deg: deviation,
            flexor_pressure_mpa: flexor,
            extensor_pressure_mpa: extensor,
            within_tolerance: deviation.iter().all(|&d| d <= ROM_TOLERANCE_DEG),
        });
    }
    Ok(RomReport { finger, tolerance_deg: ROM_TOLERANCE_DEG, rows })
}

/// Stretched, relaxed and curled postures of the configured finger against
/// the measured range of motion.
pub fn rom_experiment(hand: &HandDescription<f64>) -> Result<RomReport, MechanicsError> {
    rom_experiment_with(hand, &MEASURED_ROM)
}
