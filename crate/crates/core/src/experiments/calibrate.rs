use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{Acronym, HandDescription};
use crate::mechanics::MechanicsError;

use super::forces::{fingertip_force_at, grasp_force_at, ForceTarget, MEASURED_FINGERTIP, MEASURED_GRASP};
use super::kapandji::KAPANDJI_TARGET_SCORE;
use super::rom::{posture_angles, RomTargets, MEASURED_ROM, ROM_TOLERANCE_DEG};

pub const MAX_CALIBRATION_ITERATIONS: usize = 500;
pub const MIN_IMPROVEMENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTargets {
    pub rom: RomTargets,
    pub fingertip: ForceTarget,
    pub grasp: ForceTarget,
    pub kapandji_score: u32,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            rom: MEASURED_ROM,
            fingertip: MEASURED_FINGERTIP,
            grasp: MEASURED_GRASP,
            kapandji_score: KAPANDJI_TARGET_SCORE,
        }
    }
}

impl CalibrationTargets {
    pub fn check(&self) -> Result<(), String> {
        let r = &self.rom;
        let mut all: Vec<f64> = [r.stretched, r.relaxed, r.curled].concat();
        for f in [&self.fingertip, &self.grasp] {
            all.extend([f.force_n, f.uncertainty_n, f.pressure_mpa]);
        }
        if all.iter().any(|v| !v.is_finite()) {
            return Err("targets must be finite".into());
        }
        if self.fingertip.uncertainty_n <= 0.0 || self.grasp.uncertainty_n <= 0.0 {
            return Err("force uncertainties must be positive".into());
        }
        if self.kapandji_score > 10 {
            return Err("Kapandji score is at most 10".into());
        }
        Ok(())
    }
}

/// A tunable quantity, shared by the four long fingers.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Knob {
    /// Moment arm of a muscle group at joint 0 (MCP), 1 or 2.
    Arm(Acronym, usize),
    Stiffness(usize),
    Slack(Acronym),
    ExtensionPressure,
    GraspOffset(usize),
}

struct Param {
    name: &'static str,
    knob: Knob,
    lo: f64,
    hi: f64,
}

const fn p(name: &'static str, knob: Knob, lo: f64, hi: f64) -> Param {
    Param { name, knob, lo, hi }
}

const PARAMS: [Param; 17] = [
    p("fdp_arm_mcp_mm", Knob::Arm(Acronym::FDP, 0), 2.0, 15.0),
    p("fdp_arm_pip_mm", Knob::Arm(Acronym::FDP, 1), 2.0, 15.0),
    p("fdp_arm_dip_mm", Knob::Arm(Acronym::FDP, 2), 1.0, 12.0),
    p("fds_arm_mcp_mm", Knob::Arm(Acronym::FDS, 0), 2.0, 15.0),
    p("fds_arm_pip_mm", Knob::Arm(Acronym::FDS, 1), 2.0, 15.0),
    p("ed_arm_mcp_mm", Knob::Arm(Acronym::ED, 0), 2.0, 15.0),
    p("ed_arm_pip_mm", Knob::Arm(Acronym::ED, 1), 1.0, 12.0),
    p("ed_arm_dip_mm", Knob::Arm(Acronym::ED, 2), 1.0, 12.0),
    p("stiffness_mcp_nmm_per_deg", Knob::Stiffness(0), 0.5, 40.0),
    p("stiffness_pip_nmm_per_deg", Knob::Stiffness(1), 0.5, 40.0),
    p("stiffness_dip_nmm_per_deg", Knob::Stiffness(2), 0.2, 20.0),
    p("fdp_slack_mm", Knob::Slack(Acronym::FDP), 0.0, 20.0),
    p("fds_slack_mm", Knob::Slack(Acronym::FDS), 0.0, 20.0),
    p("ed_slack_mm", Knob::Slack(Acronym::ED), 0.0, 20.0),
    p("extension_pressure_mpa", Knob::ExtensionPressure, 0.005, 0.5),
    p("grasp_offset_y_mm", Knob::GraspOffset(0), 40.0, 110.0),
    p("grasp_offset_z_mm", Knob::GraspOffset(1), 25.0, 70.0),
];

fn long_finger_muscles(hand: &HandDescription<f64>, acronym: Acronym) -> Vec<String> {
    let fingers: Vec<&str> = hand.fingers.iter().map(|f| f.name.as_str()).collect();
    hand.muscles
        .iter()
        .filter(|m| m.acronym == acronym && fingers.contains(&m.target_finger.as_str()))
        .map(|m| m.id.clone())
        .collect()
}

fn get(hand: &HandDescription<f64>, knob: Knob) -> f64 {
    let first = &hand.fingers[0];
    match knob {
        Knob::Arm(a, j) => {
            let id = &long_finger_muscles(hand, a)[0];
            let joint = &first.joints[j];
            let route = hand.route(id).expect("validated hand routes every muscle");
            route.waypoints.iter().find(|w| w.joint_id == *joint).map_or(0.0, |w| w.moment_arm)
        }
        Knob::Stiffness(j) => hand.joint(&first.joints[j]).map_or(0.0, |j| j.stiffness),
        Knob::Slack(a) => hand.route(&long_finger_muscles(hand, a)[0]).map_or(0.0, |r| r.slack),
        Knob::ExtensionPressure => hand.experiment.extension_pressure,
        Knob::GraspOffset(i) => hand.experiment.grasp_cylinder_offset[i],
    }
}

fn set(hand: &mut HandDescription<f64>, knob: Knob, v: f64) {
    match knob {
        Knob::Arm(a, j) => {
            for id in long_finger_muscles(hand, a) {
                let finger = hand.muscle(&id).map(|m| m.target_finger.clone()).unwrap_or_default();
                let Some(joint) = hand.chain(&finger).and_then(|c| c.joints.get(j).cloned()) else { continue };
                if let Some(w) = hand.route_mut(&id).and_then(|r| r.waypoints.iter_mut().find(|w| w.joint_id == joint))
                {
                    w.moment_arm = v;
                }
            }
        }
        Knob::Stiffness(j) => {
            let ids: Vec<String> = hand.fingers.iter().filter_map(|f| f.joints.get(j).cloned()).collect();
            for id in ids {
                if let Some(js) = hand.joint_mut(&id) {
                    js.stiffness = v;
                }
            }
        }
        Knob::Slack(a) => {
            for id in long_finger_muscles(hand, a) {
                if let Some(r) = hand.route_mut(&id) {
                    r.slack = v;
                }
            }
        }
        Knob::ExtensionPressure => hand.experiment.extension_pressure = v,
        Knob::GraspOffset(i) => hand.experiment.grasp_cylinder_offset[i] = v,
    }
}

fn apply(base: &HandDescription<f64>, x: &[f64]) -> HandDescription<f64> {
    let mut h = base.clone();
    for (param, &v) in PARAMS.iter().zip(x) {
        set(&mut h, param.knob, v);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterFit {
    pub name: &'static str,
    pub initial: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualTerm {
    pub name: String,
    pub simulated: f64,
    pub target: f64,
    /// Allowed deviation; the residual is weighted by its inverse.
    pub scale: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub iterations: usize,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub converged: bool,
    pub parameters: Vec<ParameterFit>,
    pub residuals: Vec<ResidualTerm>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("invalid targets: {0}")]
    InvalidTargets(String),
    #[error("calibration did not meet the targets (objective {:.3e})", report.objective_final)]
    NoConvergence { hand: Box<HandDescription<f64>>, report: Box<FitReport> },
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
}

/// Simulated quantities for the residual terms, in target order.
fn terms(hand: &HandDescription<f64>, t: &CalibrationTargets) -> Result<Vec<ResidualTerm>, MechanicsError> {
    let e = &hand.experiment;
    let finger = e.rom_finger.clone();
    let stretched = posture_angles(hand, &finger, 0.0, e.extension_pressure)?;
    let curled = posture_angles(hand, &finger, e.rom_flexor_pressure, 0.0)?;
    let mut out = Vec::new();
    let joints = ["mcp", "pip", "dip"];
    for (posture, angles, target) in [("stretched", &stretched, t.rom.stretched), ("curled", &curled, t.rom.curled)] {
        for i in 0..3 {
            out.push(ResidualTerm {
                name: format!("{posture}_{}_deg", joints[i]),
                simulated: angles[i],
                target: target[i],
                scale: 1.0,
                within_tolerance: (angles[i] - target[i]).abs() <= ROM_TOLERANCE_DEG,
            });
        }
    }
    let tip = fingertip_force_at(hand, t.fingertip.pressure_mpa)?;
    let grasp = grasp_force_at(hand, e.grasp_cylinder_radius, t.grasp.pressure_mpa)?;
    for (name, f, target) in [("fingertip_force_n", tip, &t.fingertip), ("grasp_force_n", grasp, &t.grasp)] {
        out.push(ResidualTerm {
            name: name.into(),
            simulated: f,
            target: target.force_n,
            scale: target.uncertainty_n,
            within_tolerance: (f - target.force_n).abs() <= target.uncertainty_n,
        });
    }
    Ok(out)
}

fn weighted(terms: &[ResidualTerm]) -> DVector<f64> {
    DVector::from_iterator(terms.len(), terms.iter().map(|t| (t.simulated - t.target) / t.scale))
}

/// Fits the unpublished mechanical parameters of the long fingers (moment
/// arms, joint stiffnesses, slack) together with the extension pressure and
/// the fingertip and grasp setups, by bounded Levenberg-Marquardt on the
/// weighted deviations from the measured postures and forces.
///
/// The search runs in coordinates scaled to the bounds with a central
/// difference Jacobian, and stops when a step improves the objective by
/// less than [`MIN_IMPROVEMENT`]. A hand that already meets every target
/// comes back unchanged after zero iterations.
pub fn calibrate_hand(
    desc: &HandDescription<f64>,
    targets: &CalibrationTargets,
) -> Result<(HandDescription<f64>, FitReport), CalibrationError> {
    targets.check().map_err(CalibrationError::InvalidTargets)?;
    let n = PARAMS.len();
    let span: Vec<f64> = PARAMS.iter().map(|p| p.hi - p.lo).collect();
    let to_x = |u: &DVector<f64>| -> Vec<f64> { (0..n).map(|i| PARAMS[i].lo + u[i] * span[i]).collect() };
    let initial: Vec<f64> = PARAMS.iter().map(|p| get(desc, p.knob).clamp(p.lo, p.hi)).collect();
    let mut u = DVector::from_iterator(n, (0..n).map(|i| (initial[i] - PARAMS[i].lo) / span[i]));
    let eval = |u: &DVector<f64>| -> Result<DVector<f64>, MechanicsError> {
        Ok(weighted(&terms(&apply(desc, &to_x(u)), targets)?))
    };

    let start = terms(desc, targets)?;
    let met = start.iter().all(|t| t.within_tolerance);
    let mut r = weighted(&terms(&apply(desc, &to_x(&u)), targets)?);
    let mut cost = r.norm_squared();
    let objective_initial = cost;
    let mut lambda = 1e-3;
    let h = 1e-5;
    let mut iterations = 0;
    while !met && iterations < MAX_CALIBRATION_ITERATIONS {
        iterations += 1;
        let mut jac = DMatrix::zeros(r.len(), n);
        for j in 0..n {
            let (mut up, mut um) = (u.clone(), u.clone());
            up[j] = (u[j] + h).min(1.0);
            um[j] = (u[j] - h).max(0.0);
            // One-sided where a neighbour has no balanced posture.
            let d = match (eval(&up), eval(&um)) {
                (Ok(a), Ok(b)) => (a - b) / (up[j] - um[j]),
                (Ok(a), Err(_)) => (a - &r) / (up[j] - u[j]),
                (Err(_), Ok(b)) => (&r - b) / (u[j] - um[j]),
                (Err(e), Err(_)) => return Err(e.into()),
            };
            jac.set_column(j, &d);
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut step = None;
        while lambda < 1e12 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (jtj[(i, i)] + 1e-9);
            }
            if let Some(dx) = a.lu().solve(&(-&g)) {
                let trial = (&u + dx).map(|v| v.clamp(0.0, 1.0));
                if let Ok(rt) = eval(&trial) {
                    let ct = rt.norm_squared();
                    if ct < cost {
                        step = Some((trial, rt, ct));
                        lambda = (lambda / 3.0).max(1e-12);
                        break;
                    }
                }
            }
            lambda *= 10.0;
        }
        match step {
            Some((trial, rt, ct)) if cost - ct >= MIN_IMPROVEMENT => {
                (u, r, cost) = (trial, rt, ct);
            }
            _ => break,
        }
    }

    let x = if met { initial.clone() } else { to_x(&u) };
    let hand = if met { desc.clone() } else { apply(desc, &x) };
    let residuals = if met { start } else { terms(&hand, targets)? };
    let converged = residuals.iter().all(|t| t.within_tolerance);
    let report = FitReport {
        iterations,
        objective_initial,
        objective_final: cost,
        converged,
        parameters: PARAMS
            .iter()
            .zip(initial.iter().zip(&x))
            .map(|(p, (&i, &v))| ParameterFit { name: p.name, initial: i, value: v, lower: p.lo, upper: p.hi })
            .collect(),
        residuals,
    };
    if converged {
        Ok((hand, report))
    } else {
        Err(CalibrationError::NoConvergence { hand: Box::new(hand), report: Box::new(report) })
    }
}

/// Names and bounds of the fitted parameters.
pub fn calibration_bounds() -> Vec<(&'static str, f64, f64)> {
    PARAMS.iter().map(|p| (p.name, p.lo, p.hi)).collect()
}

/// Current values of the fitted parameters in `hand`.
pub fn calibration_parameters(hand: &HandDescription<f64>) -> Vec<(&'static str, f64)> {
    PARAMS.iter().map(|p| (p.name, get(hand, p.knob))).collect()
}
