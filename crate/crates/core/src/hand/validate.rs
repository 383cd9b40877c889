use std::collections::{BTreeMap, HashSet};

use super::{Acronym, HandDescription, Sense};
use crate::scalar::Real;

/// Actuator inventory of the built hand: `(muscle, count, length_mm)`.
pub const MUSCLE_INVENTORY: [(Acronym, usize, f64); 8] = [
    (Acronym::FDP, 4, 220.0),
    (Acronym::FDS, 4, 200.0),
    (Acronym::FDS, 4, 160.0),
    (Acronym::FPL, 2, 160.0),
    (Acronym::ED, 4, 220.0),
    (Acronym::EPL, 1, 160.0),
    (Acronym::AP, 2, 160.0),
    (Acronym::OP, 1, 140.0),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Also require the muscle inventory to equal [`MUSCLE_INVENTORY`].
    pub strict_inventory: bool,
}

pub fn validate<T: Real>(desc: &HandDescription<T>) -> Vec<Violation> {
    validate_with(desc, ValidationOptions::default())
}

pub fn validate_with<T: Real>(desc: &HandDescription<T>, opts: ValidationOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code: &'static str, path: String, message: String| out.push(Violation { code, path, message });

    let mut seen = HashSet::new();
    for (i, j) in desc.joints.iter().enumerate() {
        let p = format!("joints[{i}]");
        if !seen.insert(j.id.as_str()) {
            push("duplicate-id", p.clone(), format!("joint `{}` defined twice", j.id));
        }
        if !(j.stiffness > T::zero()) {
            push("nonpositive-stiffness", p.clone(), format!("stiffness {}", j.stiffness));
        }
        if !(j.min_angle <= j.rest_angle && j.rest_angle <= j.max_angle) {
            push("rest-outside-limits", p, format!("rest {} not in [{}, {}]", j.rest_angle, j.min_angle, j.max_angle));
        }
    }

    let mut seen = HashSet::new();
    for (i, m) in desc.muscles.iter().enumerate() {
        let p = format!("muscles[{i}]");
        if !seen.insert(m.id.as_str()) {
            push("duplicate-id", p.clone(), format!("muscle `{}` defined twice", m.id));
        }
        if let Err(e) = m.pam.validate() {
            push("invalid-pam", format!("{p}.pam"), e.to_string());
        }
        if desc.chain(&m.target_finger).is_none() {
            push("unknown-chain", format!("{p}.target_finger"), m.target_finger.clone());
        }
        if desc.route(&m.id).is_none() {
            push("unrouted-muscle", p, format!("muscle `{}` has no route", m.id));
        }
    }

    for (i, r) in desc.routes.iter().enumerate() {
        let p = format!("routes[{i}]");
        let muscle = desc.muscle(&r.muscle_id);
        if muscle.is_none() {
            push("unknown-muscle", format!("{p}.muscle_id"), r.muscle_id.clone());
        }
        if !(r.slack >= T::zero()) {
            push("negative-slack", format!("{p}.slack_mm"), format!("slack {}", r.slack));
        }
        if r.waypoints.is_empty() {
            push("empty-route", p.clone(), "route crosses no joint".into());
        }
        let mut joints = HashSet::new();
        for (k, w) in r.waypoints.iter().enumerate() {
            let wp = format!("{p}.waypoints[{k}]");
            if !(w.moment_arm > T::zero()) {
                push("nonpositive-moment-arm", wp.clone(), format!("moment arm {}", w.moment_arm));
            }
            if !joints.insert(w.joint_id.as_str()) {
                push("duplicate-waypoint-joint", wp.clone(), w.joint_id.clone());
            }
            if desc.joint(&w.joint_id).is_none() {
                push("unknown-joint", wp.clone(), w.joint_id.clone());
            } else if let Some(m) = muscle {
                let on_chain = desc.chain(&m.target_finger).is_some_and(|c| c.joints.contains(&w.joint_id));
                if !on_chain {
                    push("route-off-chain", wp, format!("{} not on {}", w.joint_id, m.target_finger));
                }
            }
        }
    }

    for (i, s) in desc.sensors.iter().enumerate() {
        let p = format!("sensors[{i}]");
        if !(s.compliance > T::zero()) {
            push("nonpositive-compliance", p.clone(), format!("{}", s.compliance));
        }
        if !(s.threshold > T::zero()) {
            push("nonpositive-threshold", p.clone(), format!("{}", s.threshold));
        }
        if !(s.saturation >= s.threshold) {
            push("saturation-below-threshold", p, format!("{}", s.saturation));
        }
    }

    let mut names = HashSet::new();
    for (idx, c) in desc.chains().enumerate() {
        let thumb = desc.is_thumb(&c.name);
        let p = if thumb { "thumb".to_string() } else { format!("fingers[{idx}]") };
        if !names.insert(c.name.as_str()) {
            push("duplicate-id", p.clone(), format!("chain `{}` defined twice", c.name));
        }
        let (nj, ns) = if thumb { (4, 3) } else { (3, 3) };
        if c.joints.len() != nj {
            push("chain-joint-count", p.clone(), format!("{} joints, expected {nj}", c.joints.len()));
        }
        if c.segments.len() != ns {
            push("chain-segment-count", p.clone(), format!("{} segments, expected {ns}", c.segments.len()));
        }
        if c.segments.iter().any(|s| !(*s > T::zero())) || !(c.radius > T::zero()) {
            push("nonpositive-length", p.clone(), "segments and radius must be positive".into());
        }
        if desc.frame(&c.name).is_none() {
            push("missing-frame", p.clone(), format!("no frame for `{}`", c.name));
        }
        let mut senses = HashSet::new();
        for m in desc.muscles_of(&c.name) {
            if let Some(r) = desc.route(&m.id) {
                senses.extend(r.waypoints.iter().map(|w| w.sense));
            }
        }
        if !senses.contains(&Sense::Flexion) || !senses.contains(&Sense::Extension) {
            push("missing-antagonist", p, format!("`{}` needs flexor and extensor routes", c.name));
        }
    }

    let e = &desc.experiment;
    let positive = [
        (e.penalty_stiffness, "experiment.penalty_stiffness_n_per_mm"),
        (e.grasp_cylinder_radius, "experiment.grasp_cylinder_radius_mm"),
        (e.grasp_cylinder_length, "experiment.grasp_cylinder_length_mm"),
    ];
    for (v, path) in positive {
        if !(v > T::zero()) {
            push("nonpositive-setting", path.into(), format!("{v}"));
        }
    }
    let pressures = [
        (e.rom_flexor_pressure, "experiment.rom_flexor_pressure_mpa"),
        (e.extension_pressure, "experiment.extension_pressure_mpa"),
        (e.fingertip_pressure, "experiment.fingertip_pressure_mpa"),
        (e.grasp_pressure, "experiment.grasp_pressure_mpa"),
    ];
    for (v, path) in pressures {
        if !(v >= T::zero()) {
            push("negative-pressure", path.into(), format!("{v}"));
        }
    }
    if !(e.kapandji_tolerance >= T::zero()) {
        push("negative-tolerance", "experiment.kapandji_tolerance_mm".into(), String::new());
    }

    if opts.strict_inventory {
        let mut expected: BTreeMap<(Acronym, u64), usize> = BTreeMap::new();
        for (a, n, l) in MUSCLE_INVENTORY {
            *expected.entry((a, l as u64)).or_default() += n;
        }
        let mut actual: BTreeMap<(Acronym, u64), usize> = BTreeMap::new();
        for m in &desc.muscles {
            let l = m.length().to_f64_lossy().round() as u64;
            *actual.entry((m.acronym, l)).or_default() += 1;
        }
        for a in Acronym::ALL {
            let count = |map: &BTreeMap<(Acronym, u64), usize>| -> usize {
                map.iter().filter(|((k, _), _)| *k == a).map(|(_, n)| n).sum()
            };
            let (want, have) = (count(&expected), count(&actual));
            if want != have {
                push("inventory-count-mismatch", "muscles".into(), format!("{}: {have} != {want}", a.name()));
            }
        }
        if expected != actual {
            push("inventory-length-mismatch", "muscles".into(), "length multiset differs".into());
        }
        if desc.muscles.len() != 22 {
            push("inventory-total", "muscles".into(), format!("{} muscles, expected 22", desc.muscles.len()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::default_hand;

    fn strict() -> ValidationOptions {
        ValidationOptions { strict_inventory: true }
    }

    #[test]
    fn shipped_default_is_valid() {
        let d = default_hand::<f64>();
        assert_eq!(validate_with(&d, strict()), vec![]);
    }

    #[test]
    fn removing_a_muscle_breaks_table_conformance() {
        let mut d = default_hand::<f64>();
        let idx = d.muscles.iter().position(|m| m.acronym == Acronym::FDP).unwrap();
        let id = d.muscles.remove(idx).id;
        d.routes.retain(|r| r.muscle_id != id);
        assert!(validate(&d).is_empty());
        let codes: Vec<_> = validate_with(&d, strict()).iter().map(|v| v.code).collect();
        assert!(codes.contains(&"inventory-count-mismatch"));
    }

    #[test]
    fn negative_moment_arm_flagged() {
        let mut d = default_hand::<f64>();
        d.routes[0].waypoints[0].moment_arm = -1.0;
        let v = validate(&d);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "nonpositive-moment-arm");
        assert_eq!(v[0].path, "routes[0].waypoints[0]");
    }

    #[test]
    fn antagonist_required() {
        let mut d = default_hand::<f64>();
        let ed: Vec<String> = d
            .muscles
            .iter()
            .filter(|m| m.acronym == Acronym::ED && m.target_finger == "ring")
            .map(|m| m.id.clone())
            .collect();
        d.muscles.retain(|m| !ed.contains(&m.id));
        d.routes.retain(|r| !ed.contains(&r.muscle_id));
        let v = validate(&d);
        assert!(v.iter().any(|x| x.code == "missing-antagonist"));
    }

    #[test]
    fn invariant_violations() {
        let mut d = default_hand::<f64>();
        d.joints[0].stiffness = 0.0;
        d.joints[1].rest_angle = d.joints[1].max_angle + 1.0;
        d.sensors[0].compliance = -1.0;
        let w = d.routes[1].waypoints[0].clone();
        d.routes[1].waypoints.push(w);
        let codes: Vec<_> = validate(&d).iter().map(|v| v.code).collect();
        for c in ["nonpositive-stiffness", "rest-outside-limits", "nonpositive-compliance", "duplicate-waypoint-joint"]
        {
            assert!(codes.contains(&c), "{c} missing from {codes:?}");
        }
    }
}
