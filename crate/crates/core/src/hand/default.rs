//! The shipped hand.
//!
//! [`initial_hand`] builds the uncalibrated model from anthropometric
//! geometry and starting guesses for the mechanical parameters.
//! [`default_hand`] is the calibrated result checked in as
//! `data/default_hand.json`; regenerate it with `musclesim calibrate`.

use super::{
    Acronym, ChainSpec, ExperimentSetup, FrameSpec, HandDescription, JointSpec, MuscleSpec, PalmSpec, Sense,
    SensorLocation, SensorSpec, TendonRoute, Waypoint,
};
use crate::pam::calibrated_params;
use crate::scalar::Real;

pub const FINGER_NAMES: [&str; 4] = ["index", "middle", "ring", "little"];
pub const THUMB_NAME: &str = "thumb";

/// Calibrated default hand document.
pub const DEFAULT_HAND_JSON: &str = include_str!("../../data/default_hand.json");

/// Relaxed posture of the long fingers (MCP, PIP, DIP), degrees.
pub const RELAXED_ANGLES: [f64; 3] = [29.7, 29.8, 14.5];

pub fn default_hand<T: Real>() -> HandDescription<T> {
    super::parse_hand_description(DEFAULT_HAND_JSON).expect("embedded default hand parses")
}

struct FingerGeometry {
    name: &'static str,
    origin: [f64; 3],
    yaw: f64,
    segments: [f64; 3],
    radius: f64,
    /// FDS actuator length; index/middle get the long ones.
    fds_length: f64,
}

const FINGERS: [FingerGeometry; 4] = [
    FingerGeometry {
        name: "index",
        origin: [-27.0, 95.0, -8.0],
        yaw: 4.0,
        segments: [42.0, 25.0, 19.0],
        radius: 8.0,
        fds_length: 200.0,
    },
    FingerGeometry {
        name: "middle",
        origin: [-8.0, 97.0, -8.0],
        yaw: 0.0,
        segments: [46.0, 28.0, 20.0],
        radius: 8.0,
        fds_length: 200.0,
    },
    FingerGeometry {
        name: "ring",
        origin: [11.0, 94.0, -8.0],
        yaw: -2.0,
        segments: [43.0, 27.0, 20.0],
        radius: 8.0,
        fds_length: 160.0,
    },
    FingerGeometry {
        name: "little",
        origin: [28.0, 87.0, -8.0],
        yaw: -6.0,
        segments: [34.0, 20.0, 18.0],
        radius: 7.0,
        fds_length: 160.0,
    },
];

fn joint<T: Real>(id: String, rest: f64, k: f64, lo: f64, hi: f64) -> JointSpec<T> {
    JointSpec { id, rest_angle: T::lit(rest), stiffness: T::lit(k), min_angle: T::lit(lo), max_angle: T::lit(hi) }
}

fn route<T: Real>(muscle_id: &str, slack: f64, wps: &[(&str, f64, Sense)]) -> TendonRoute<T> {
    TendonRoute {
        muscle_id: muscle_id.to_string(),
        slack: T::lit(slack),
        waypoints: wps
            .iter()
            .map(|(j, r, s)| Waypoint { joint_id: j.to_string(), moment_arm: T::lit(*r), sense: *s })
            .collect(),
    }
}

fn muscle<T: Real>(id: &str, acronym: Acronym, finger: &str, length: f64) -> MuscleSpec<T> {
    MuscleSpec {
        id: id.to_string(),
        acronym,
        target_finger: finger.to_string(),
        pam: calibrated_params(T::lit(length)),
    }
}

fn sensor<T: Real>(id: String, location: SensorLocation, finger: Option<&str>) -> SensorSpec<T> {
    SensorSpec {
        id,
        location,
        finger: finger.map(str::to_string),
        compliance: T::lit(8.0),
        threshold: T::lit(4.0),
        saturation: T::lit(30.0),
    }
}

/// Uncalibrated hand: full muscle inventory, geometry, and starting guesses
/// for moment arms, stiffnesses, slack and the experiment offsets.
pub fn initial_hand<T: Real>() -> HandDescription<T> {
    use Sense::{Extension as Ext, Flexion as Flex};
    let mut joints = Vec::new();
    let mut muscles = Vec::new();
    let mut routes = Vec::new();
    let mut sensors = Vec::new();
    let mut fingers = Vec::new();
    let mut frames = Vec::new();

    for g in &FINGERS {
        let n = g.name;
        let (mcp, pip, dip) = (format!("{n}.mcp"), format!("{n}.pip"), format!("{n}.dip"));
        let [a, b, c] = RELAXED_ANGLES;
        joints.push(joint(mcp.clone(), a, 5.0, -10.0, 95.0));
        joints.push(joint(pip.clone(), b, 4.0, 0.0, 100.0));
        joints.push(joint(dip.clone(), c, 2.0, 0.0, 70.0));

        let fdp = format!("{n}.FDP");
        muscles.push(muscle(&fdp, Acronym::FDP, n, 220.0));
        routes.push(route(&fdp, 0.0, &[(&mcp, 8.0, Flex), (&pip, 6.0, Flex), (&dip, 4.0, Flex)]));
        for k in 1..=2 {
            let fds = format!("{n}.FDS{k}");
            muscles.push(muscle(&fds, Acronym::FDS, n, g.fds_length));
            routes.push(route(&fds, 0.0, &[(&mcp, 7.0, Flex), (&pip, 5.0, Flex)]));
        }
        let ed = format!("{n}.ED");
        muscles.push(muscle(&ed, Acronym::ED, n, 220.0));
        routes.push(route(&ed, 0.0, &[(&mcp, 6.0, Ext), (&pip, 4.0, Ext), (&dip, 3.0, Ext)]));

        sensors.push(sensor(format!("{n}.tip"), SensorLocation::Fingertip, Some(n)));
        fingers.push(ChainSpec {
            name: n.to_string(),
            joints: vec![mcp, pip, dip],
            segments: g.segments.iter().map(|&s| T::lit(s)).collect(),
            radius: T::lit(g.radius),
        });
        frames.push(FrameSpec {
            chain: n.to_string(),
            origin: g.origin.map(T::lit),
            orientation: [T::lit(g.yaw), T::zero(), T::zero()],
        });
    }

    let t = THUMB_NAME;
    let (cf, ca, mp, ip) = (format!("{t}.cmc_flex"), format!("{t}.cmc_abd"), format!("{t}.mp"), format!("{t}.ip"));
    joints.push(joint(cf.clone(), 10.0, 3.0, -14.2, 70.71));
    joints.push(joint(ca.clone(), 15.0, 3.0, -10.01, 30.41));
    joints.push(joint(mp.clone(), 10.0, 2.0, 0.0, 52.17));
    joints.push(joint(ip.clone(), 10.0, 1.5, 0.0, 69.69));
    for k in 1..=2 {
        let id = format!("{t}.FPL{k}");
        muscles.push(muscle(&id, Acronym::FPL, t, 160.0));
        routes.push(route(&id, 0.0, &[(&cf, 4.0, Flex), (&mp, 5.0, Flex), (&ip, 4.0, Flex)]));
    }
    let epl = format!("{t}.EPL");
    muscles.push(muscle(&epl, Acronym::EPL, t, 160.0));
    routes.push(route(&epl, 0.0, &[(&cf, 4.0, Ext), (&mp, 4.0, Ext), (&ip, 3.0, Ext)]));
    for k in 1..=2 {
        let id = format!("{t}.AP{k}");
        muscles.push(muscle(&id, Acronym::AP, t, 160.0));
        routes.push(route(&id, 0.0, &[(&ca, 5.0, Flex)]));
    }
    let op = format!("{t}.OP");
    muscles.push(muscle(&op, Acronym::OP, t, 140.0));
    routes.push(route(&op, 0.0, &[(&cf, 6.0, Flex), (&ca, 4.0, Flex)]));
    sensors.push(sensor(format!("{t}.tip"), SensorLocation::Fingertip, Some(t)));
    sensors.push(sensor("palm".into(), SensorLocation::Palm, None));

    let thumb = ChainSpec {
        name: t.to_string(),
        joints: vec![cf, ca, mp, ip],
        segments: [55.2, 39.6, 32.4].map(T::lit).to_vec(),
        radius: T::lit(9.0),
    };
    frames.push(FrameSpec {
        chain: t.to_string(),
        origin: [-27.92, 37.4, -6.11].map(T::lit),
        orientation: [38.69, -16.34, 52.55].map(T::lit),
    });

    HandDescription {
        joints,
        muscles,
        routes,
        sensors,
        fingers,
        thumb,
        frames,
        palm: PalmSpec { x_range: [-40.0, 40.0].map(T::lit), y_range: [10.0, 90.0].map(T::lit) },
        experiment: ExperimentSetup {
            rom_finger: "little".into(),
            rom_flexor_pressure: T::lit(0.2),
            extension_pressure: T::lit(0.05),
            fingertip_finger: "index".into(),
            fingertip_pressure: T::lit(0.2),
            fingertip_posture: [60.0, 55.0, 20.0].map(T::lit),
            grasp_pressure: T::lit(0.18),
            grasp_cylinder_radius: T::lit(30.0),
            grasp_cylinder_length: T::lit(120.0),
            grasp_cylinder_offset: [75.0, 30.0].map(T::lit),
            penalty_stiffness: T::lit(5.0),
            kapandji_tolerance: T::lit(5.0),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::{validate_with, ValidationOptions};

    #[test]
    fn initial_hand_is_valid_and_matches_inventory() {
        let h = initial_hand::<f64>();
        let v = validate_with(&h, ValidationOptions { strict_inventory: true });
        assert!(v.is_empty(), "{v:?}");
        assert_eq!(h.muscles.len(), 22);
    }

    #[test]
    fn default_inventory() {
        let h = default_hand::<f64>();
        let fdp: Vec<_> = h.muscles.iter().filter(|m| m.acronym == Acronym::FDP).collect();
        assert_eq!(fdp.len(), 4);
        assert!(fdp.iter().all(|m| m.length() == 220.0));
        assert_eq!(h.rest_angles("little").unwrap(), vec![29.7, 29.8, 14.5]);
        for f in FINGER_NAMES {
            assert_eq!(h.rest_angles(f).unwrap(), RELAXED_ANGLES.to_vec());
        }
        assert!(h.sensors.iter().all(|s| s.threshold == 4.0));
    }
}
