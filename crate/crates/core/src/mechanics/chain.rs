use std::collections::BTreeMap;

use crate::geometry::{Rot3, Vec3};
use crate::hand::{Acronym, HandDescription, JointSpec};
use crate::pam::PamParams;
use crate::scalar::Real;

use super::MechanicsError;

/// Joint angles of one chain in degrees, proximal to distal.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerConfig<T> {
    pub angles: Vec<T>,
}

impl<T: Real> FingerConfig<T> {
    pub fn new(angles: Vec<T>) -> Self {
        Self { angles }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Per-muscle lead pressures in MPa, keyed by muscle id.
pub type MusclePressures<T> = BTreeMap<String, T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Finger,
    Thumb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X,
    Z,
}

/// A muscle with its route resolved to joint indices of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutedMuscle<T> {
    pub id: String,
    pub acronym: Acronym,
    pub pam: PamParams<T>,
    pub slack: T,
    /// `(joint index, moment arm × sense sign)` per waypoint.
    pub arms: Vec<(usize, T)>,
}

/// One chain with everything resolved for the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel<T> {
    pub name: String,
    pub kind: ChainKind,
    pub joints: Vec<JointSpec<T>>,
    pub segments: Vec<T>,
    pub radius: T,
    pub base: Vec3<T>,
    pub base_rotation: Rot3<T>,
    pub muscles: Vec<RoutedMuscle<T>>,
}

impl<T: Real> ChainModel<T> {
    pub fn new(hand: &HandDescription<T>, name: &str) -> Result<Self, MechanicsError> {
        let spec = hand.chain(name).ok_or_else(|| MechanicsError::UnknownChain(name.into()))?;
        let kind = if hand.is_thumb(name) { ChainKind::Thumb } else { ChainKind::Finger };
        let joints = spec
            .joints
            .iter()
            .map(|id| hand.joint(id).cloned().ok_or_else(|| MechanicsError::UnknownJoint(id.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let frame = hand.frame(name).ok_or_else(|| MechanicsError::UnknownChain(name.into()))?;
        let mut muscles = Vec::new();
        for m in hand.muscles_of(name) {
            let route = hand.route(&m.id).ok_or_else(|| MechanicsError::UnknownMuscle(m.id.clone()))?;
            let arms = route
                .waypoints
                .iter()
                .map(|w| {
                    spec.joints
                        .iter()
                        .position(|j| *j == w.joint_id)
                        .map(|i| (i, w.moment_arm * w.sense.sign::<T>()))
                        .ok_or_else(|| MechanicsError::UnknownJoint(w.joint_id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            muscles.push(RoutedMuscle { id: m.id.clone(), acronym: m.acronym, pam: m.pam, slack: route.slack, arms });
        }
        Ok(Self {
            name: name.to_string(),
            kind,
            joints,
            segments: spec.segments.clone(),
            radius: spec.radius,
            base: Vec3::from_array(frame.origin),
            base_rotation: Rot3::from_yaw_pitch_roll_deg(frame.orientation),
            muscles,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn rest(&self) -> FingerConfig<T> {
        FingerConfig::new(self.joints.iter().map(|j| j.rest_angle).collect())
    }

    pub fn clamp(&self, angles: &mut [T]) {
        for (a, j) in angles.iter_mut().zip(&self.joints) {
            *a = a.max(j.min_angle).min(j.max_angle);
        }
    }

    fn axes(&self) -> &'static [(Axis, bool)] {
        match self.kind {
            ChainKind::Finger => &[(Axis::X, true), (Axis::X, true), (Axis::X, true)],
            ChainKind::Thumb => &[(Axis::X, false), (Axis::Z, true), (Axis::X, true), (Axis::X, true)],
        }
    }

    /// Pressure vector in muscle order; every routed muscle must be present.
    pub fn pressure_vector(&self, pressures: &MusclePressures<T>) -> Result<Vec<T>, MechanicsError> {
        self.muscles
            .iter()
            .map(|m| pressures.get(&m.id).copied().ok_or_else(|| MechanicsError::MissingPressure(m.id.clone())))
            .collect()
    }

    /// Flexors at `flexor`, extensors at `extensor`.
    pub fn uniform_pressures(&self, flexor: T, extensor: T) -> MusclePressures<T> {
        self.muscles.iter().map(|m| (m.id.clone(), if m.acronym.is_flexor() { flexor } else { extensor })).collect()
    }

    pub fn pose(&self, config: &FingerConfig<T>) -> Result<ChainPose<T>, MechanicsError> {
        if config.len() != self.dof() {
            return Err(MechanicsError::ConfigLength { expected: self.dof(), got: config.len() });
        }
        let mut rot = self.base_rotation;
        let mut pos = self.base;
        let mut joint_positions = Vec::with_capacity(self.dof());
        let mut joint_axes = Vec::with_capacity(self.dof());
        let mut segments = Vec::with_capacity(self.segments.len());
        let mut seg_iter = self.segments.iter();
        for (i, (&(axis, has_segment), &angle)) in self.axes().iter().zip(&config.angles).enumerate() {
            let a = angle.deg_to_rad();
            joint_positions.push(pos);
            match axis {
                Axis::X => {
                    joint_axes.push(rot.x_axis());
                    rot = rot * Rot3::about_x(a);
                }
                Axis::Z => {
                    joint_axes.push(rot.z_axis());
                    rot = rot * Rot3::about_z(a);
                }
            }
            if has_segment {
                let len = *seg_iter.next().expect("segment count checked by validation");
                let end = pos + rot.y_axis() * len;
                segments.push(Segment { start: pos, end, rotation: rot, last_joint: i });
                pos = end;
            }
        }
        Ok(ChainPose { joint_positions, joint_axes, tip: pos, segments })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment<T> {
    pub start: Vec3<T>,
    pub end: Vec3<T>,
    /// Orientation of the bone; `y` along the bone, `z` palmar.
    pub rotation: Rot3<T>,
    /// Most distal joint that moves this segment.
    pub last_joint: usize,
}

impl<T: Real> Segment<T> {
    pub fn palmar(&self) -> Vec3<T> {
        self.rotation.z_axis()
    }

    pub fn point(&self, t: T) -> Vec3<T> {
        self.start.lerp(self.end, t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainPose<T> {
    pub joint_positions: Vec<Vec3<T>>,
    pub joint_axes: Vec<Vec3<T>>,
    pub tip: Vec3<T>,
    pub segments: Vec<Segment<T>>,
}

impl<T: Real> ChainPose<T> {
    /// Torque about each joint of a force applied at a point on `segment`.
    pub fn torques(&self, segment: usize, point: Vec3<T>, force: Vec3<T>) -> Vec<T> {
        let last = self.segments[segment].last_joint;
        self.joint_positions
            .iter()
            .zip(&self.joint_axes)
            .enumerate()
            .map(|(j, (&o, &axis))| if j <= last { axis.dot((point - o).cross(force)) } else { T::zero() })
            .collect()
    }

    /// Pad point: tip pushed out along the palmar side by `radius`.
    pub fn tip_pad(&self, radius: T) -> Vec3<T> {
        let last = self.segments.last().expect("chain has segments");
        self.tip + last.palmar() * radius
    }
}

/// Joint positions and fingertip of a chain in the hand frame.
pub fn forward_kinematics<T: Real>(
    hand: &HandDescription<T>,
    chain: &str,
    config: &FingerConfig<T>,
) -> Result<ChainPose<T>, MechanicsError> {
    ChainModel::new(hand, chain)?.pose(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::initial_hand;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn straight_finger() -> ChainModel<f64> {
        let mut hand = initial_hand::<f64>();
        hand.fingers[0].segments = vec![50.0, 30.0, 20.0];
        hand.frames[0].origin = [0.0; 3];
        hand.frames[0].orientation = [0.0; 3];
        ChainModel::new(&hand, "index").unwrap()
    }

    #[test]
    fn straight_chain_tip() {
        let c = straight_finger();
        let pose = c.pose(&FingerConfig::new(vec![0.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(pose.tip.y, 100.0, epsilon = 1e-12);
        assert_relative_eq!(pose.tip.x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(pose.tip.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn right_angle_at_mcp() {
        let c = straight_finger();
        let pose = c.pose(&FingerConfig::new(vec![90.0, 0.0, 0.0])).unwrap();
        // Metacarpal axis is +y; the flexed chain points palmar.
        assert!(pose.tip.y.abs() < 1e-9);
        assert_relative_eq!(pose.tip.z, 100.0, epsilon = 1e-9);
        assert!(pose.tip.dot(Vec3::unit_y()).abs() < 1e-9);
    }

    #[test]
    fn tip_within_reach() {
        let hand = initial_hand::<f64>();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for name in hand.chain_names() {
            let c = ChainModel::new(&hand, &name).unwrap();
            let reach: f64 = c.segments.iter().sum();
            for _ in 0..1000 {
                let angles = c.joints.iter().map(|j| rng.gen_range(j.min_angle..=j.max_angle)).collect();
                let pose = c.pose(&FingerConfig::new(angles)).unwrap();
                assert!(pose.tip.distance(c.base) <= reach + 1e-9);
            }
        }
    }

    #[test]
    fn unknown_chain() {
        let hand = initial_hand::<f64>();
        assert!(matches!(
            forward_kinematics(&hand, "sixth", &FingerConfig::new(vec![0.0; 3])),
            Err(MechanicsError::UnknownChain(_))
        ));
    }

    #[test]
    fn torque_sign_convention() {
        let c = straight_finger();
        let pose = c.pose(&FingerConfig::new(vec![0.0, 0.0, 0.0])).unwrap();
        // A palmar push on the tip flexes every joint.
        let t = pose.torques(2, pose.tip, Vec3::unit_z());
        assert_relative_eq!(t[0], 100.0, epsilon = 1e-12);
        assert_relative_eq!(t[1], 50.0, epsilon = 1e-12);
        assert_relative_eq!(t[2], 20.0, epsilon = 1e-12);
        // Loads on the proximal phalanx do not reach distal joints.
        let t = pose.torques(0, pose.segments[0].end, Vec3::unit_z());
        assert_eq!(t[1], 0.0);
    }
}
