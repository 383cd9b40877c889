#![allow(dead_code)]

use std::f64::consts::PI;

use musclesim::geometry::{Rot3, Vec3};
use musclesim::hand::{Acronym, JointSpec};
use musclesim::mechanics::{ChainKind, ChainModel, RoutedMuscle};
use musclesim::pam::{calibrated_params, PamParams};
use rand::Rng;

/// Ideal McKibben force written out from scratch, without the zero clamp.
pub fn mckibben_raw(p: &PamParams<f64>, pressure: f64, strain: f64) -> f64 {
    let th = p.braid_angle.to_radians();
    let area = PI * p.effective_diameter.powi(2) / 4.0;
    let shape = 3.0 * (1.0 - strain).powi(2) / th.tan().powi(2) - 1.0 / th.sin().powi(2);
    area * pressure * shape - p.tube_stiffness * strain
}

/// Zero-load contraction with no tube stiffness: `1 - 1/(√3 cos θ0)`.
pub fn closed_form_free_strain(p: &PamParams<f64>) -> f64 {
    1.0 - 1.0 / (3f64.sqrt() * p.braid_angle.to_radians().cos())
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// One joint driven by a flexor and an extensor.
#[derive(Debug, Clone)]
pub struct SingleJoint {
    pub chain: ChainModel<f64>,
    pub pressures: Vec<f64>,
}

pub fn single_joint(rng: &mut impl Rng) -> SingleJoint {
    let rest = rng.gen_range(0.0..30.0);
    let joint = JointSpec {
        id: "j".into(),
        rest_angle: rest,
        stiffness: rng.gen_range(0.5..10.0),
        min_angle: rng.gen_range(-40.0..-5.0),
        max_angle: rng.gen_range(60.0..150.0),
    };
    let muscle = |id: &str, acronym, arm: f64, rng: &mut dyn rand::RngCore| RoutedMuscle {
        id: id.into(),
        acronym,
        pam: calibrated_params(rng.gen_range(100.0..250.0)),
        slack: rng.gen_range(0.0..5.0),
        arms: vec![(0, arm)],
    };
    let flexor = muscle("flexor", Acronym::FDP, rng.gen_range(3.0..12.0), rng);
    let extensor = muscle("extensor", Acronym::ED, -rng.gen_range(2.0..10.0), rng);
    SingleJoint {
        chain: ChainModel {
            name: "single".into(),
            kind: ChainKind::Finger,
            joints: vec![joint],
            segments: vec![40.0],
            radius: 8.0,
            base: Vec3::new(0.0, 0.0, 0.0),
            base_rotation: Rot3::identity(),
            muscles: vec![flexor, extensor],
        },
        pressures: vec![rng.gen_range(0.0..0.5), rng.gen_range(0.0..0.5)],
    }
}

/// Tendon tension: the blocked force while the excursion is inside the
/// slack, the McKibben law beyond it, zero once the muscle stops pulling.
pub fn tendon_tension(m: &RoutedMuscle<f64>, pressure: f64, excursion: f64) -> f64 {
    let strain = (excursion - m.slack).max(0.0) / m.pam.rest_length;
    mckibben_raw(&m.pam, pressure, strain).max(0.0)
}

/// Work a muscle does while its tendon moves from rest to `excursion` mm,
/// integrated piecewise between the kinks. Tension is constant, quadratic
/// or zero on each piece, so Simpson's rule is exact up to rounding.
pub fn muscle_work(m: &RoutedMuscle<f64>, pressure: f64, excursion: f64) -> f64 {
    let stop = m.slack + m.pam.rest_length * closed_form_free_strain(&m.pam);
    let (a, b, sign) = if excursion >= 0.0 { (0.0, excursion, 1.0) } else { (excursion, 0.0, -1.0) };
    let mut cuts = vec![a];
    cuts.extend([m.slack, stop].into_iter().filter(|&c| c > a && c < b));
    cuts.push(b);
    let total: f64 = cuts.windows(2).map(|w| simpson(|e| tendon_tension(m, pressure, e), w[0], w[1], 16)).sum();
    sign * total
}

/// Potential energy (N·mm) of joint spring plus muscles, angles in degrees.
pub fn energy(s: &SingleJoint, theta: f64) -> f64 {
    let j = &s.chain.joints[0];
    let d = theta - j.rest_angle;
    let spring = 0.5 * j.stiffness * d * d * PI / 180.0;
    let work: f64 =
        s.chain.muscles.iter().zip(&s.pressures).map(|(m, &p)| muscle_work(m, p, m.arms[0].1 * d.to_radians())).sum();
    spring - work
}

/// Torque magnitude scale used for relative comparisons.
pub fn torque_scale(s: &SingleJoint, theta: f64) -> f64 {
    let j = &s.chain.joints[0];
    let spring = j.stiffness * (theta - j.rest_angle).abs();
    let tendons: f64 = s
        .chain
        .muscles
        .iter()
        .zip(&s.pressures)
        .map(|(m, &p)| {
            let e = m.arms[0].1 * (theta - j.rest_angle).to_radians();
            tendon_tension(m, p, e) * m.arms[0].1.abs()
        })
        .sum();
    spring + tendons
}

/// Excursions where the muscle tension has a kink (end of slack, free strain).
pub fn kinks(s: &SingleJoint) -> Vec<f64> {
    let j = &s.chain.joints[0];
    s.chain
        .muscles
        .iter()
        .flat_map(|m| {
            let arm = m.arms[0].1;
            let free = m.slack + m.pam.rest_length * closed_form_free_strain(&m.pam);
            [m.slack, free].map(|e| j.rest_angle + (e / arm).to_degrees())
        })
        .collect()
}
