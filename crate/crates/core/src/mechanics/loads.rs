//! The fingertip load-cell and split-cylinder grasp setups.

use crate::geometry::Vec3;
use crate::hand::HandDescription;
use crate::scalar::Real;

use super::contact::{Body, Contact, ContactScene, Shape};
use super::equilibrium::{chain_residual, solve_chain, SolverOptions};
use super::{ChainModel, FingerConfig, MechanicsError, MusclePressures};

pub const MAX_CONTACT_ROUNDS: usize = 50;

/// Result of the pinned-fingertip test.
#[derive(Debug, Clone, PartialEq)]
pub struct FingertipForce<T> {
    /// Force the finger presses into the load cell (N).
    pub force: T,
    /// Posture the finger settles in with the tip held in place.
    pub config: FingerConfig<T>,
    /// Reaction of the cell on the finger, in the hand frame.
    pub reaction: Vec3<T>,
}

/// Finger-plane geometry of a long finger: lengths and in-plane axes.
struct Planar<T> {
    lengths: [T; 3],
    along: Vec3<T>,
    palmar: Vec3<T>,
}

impl<T: Real> Planar<T> {
    fn new(chain: &ChainModel<T>) -> Result<Self, MechanicsError> {
        if chain.dof() != 3 || chain.segments.len() != 3 {
            return Err(MechanicsError::UnreachableConfig(format!("`{}` is not a three-joint finger", chain.name)));
        }
        Ok(Self {
            lengths: [chain.segments[0], chain.segments[1], chain.segments[2]],
            along: chain.base_rotation.y_axis(),
            palmar: chain.base_rotation.z_axis(),
        })
    }

    /// Tip in plane coordinates (along, palmar) for angles in degrees.
    fn tip(&self, q: &[T]) -> (T, T) {
        let mut phi = T::zero();
        let (mut y, mut z) = (T::zero(), T::zero());
        for (l, a) in self.lengths.iter().zip(q) {
            phi = phi + a.deg_to_rad();
            y = y + *l * phi.cos();
            z = z + *l * phi.sin();
        }
        (y, z)
    }

    /// PIP and DIP angles placing the tip at `target` for a given MCP angle,
    /// keeping the DIP flexed.
    fn inverse(&self, alpha: T, target: (T, T)) -> Option<(T, T)> {
        let [l1, l2, l3] = self.lengths;
        let a = alpha.deg_to_rad();
        let (dy, dz) = (target.0 - l1 * a.cos(), target.1 - l1 * a.sin());
        let d2 = dy * dy + dz * dz;
        let c = (d2 - l2 * l2 - l3 * l3) / (T::lit(2.0) * l2 * l3);
        if c.abs() > T::one() + T::lit(1e-12) {
            return None;
        }
        let gamma = c.max(-T::one()).min(T::one()).acos();
        let beta = dz.atan2(dy) - a - (l3 * gamma.sin()).atan2(l2 + l3 * gamma.cos());
        Some((beta.rad_to_deg(), gamma.rad_to_deg()))
    }

    fn world(&self, y: T, z: T) -> Vec3<T> {
        self.along * y + self.palmar * z
    }
}

// Torque component off the reaction plane, the torques, the two reaction columns.
type Balance<T> = (T, [T; 3], [[T; 3]; 2]);

/// Blocked force of one finger pressing on a load cell.
///
/// The tip is pinned where `contact_config` puts it, leaving one internal
/// degree of freedom: for each MCP angle the PIP and DIP follow from the
/// pin. The finger settles where the tendon and spring torques lie in the
/// span of the two in-plane reaction directions; the reaction is the least
/// squares solution there. A reaction pulling the finger onto the cell
/// (rather than the cell pushing back) reads as zero.
pub fn fingertip_force<T: Real>(
    hand: &HandDescription<T>,
    finger: &str,
    pressures: &MusclePressures<T>,
    contact_config: &FingerConfig<T>,
) -> Result<FingertipForce<T>, MechanicsError> {
    let chain = ChainModel::new(hand, finger)?;
    let p = chain.pressure_vector(pressures)?;
    let plane = Planar::new(&chain)?;
    if contact_config.len() != 3 {
        return Err(MechanicsError::ConfigLength { expected: 3, got: contact_config.len() });
    }
    let q0 = contact_config.angles.clone();
    let within = |q: &[T]| chain.joints.iter().zip(q).all(|(j, &a)| a >= j.min_angle && a <= j.max_angle);
    if !within(&q0) {
        return Err(MechanicsError::UnreachableConfig(format!("{q0:?} outside joint limits")));
    }
    let target = plane.tip(&q0);
    let posture = |alpha: T| -> Option<Vec<T>> {
        let (b, g) = plane.inverse(alpha, target)?;
        let q = vec![alpha, b, g];
        within(&q).then_some(q)
    };
    // Joint torques of unit in-plane tip forces.
    let columns = |q: &[T]| -> [[T; 3]; 2] {
        let (ty, tz) = plane.tip(q);
        let mut out = [[T::zero(); 3]; 2];
        let mut phi = T::zero();
        let (mut oy, mut oz) = (T::zero(), T::zero());
        for (j, l) in plane.lengths.iter().enumerate() {
            let (ry, rz) = (ty - oy, tz - oz);
            // Flexion-positive torque of a unit force along y, then z.
            out[0][j] = -rz;
            out[1][j] = ry;
            phi = phi + q[j].deg_to_rad();
            oy = oy + *l * phi.cos();
            oz = oz + *l * phi.sin();
        }
        out
    };
    let balance = |q: &[T]| -> Result<Balance<T>, MechanicsError> {
        let tau = chain_residual(&chain, q, &p, &[])?;
        let c = columns(q);
        let n = cross3(c[0], c[1]);
        Ok((dot3(n, [tau[0], tau[1], tau[2]]), [tau[0], tau[1], tau[2]], c))
    };
    let g = |alpha: T| -> Result<Option<T>, MechanicsError> {
        match posture(alpha) {
            Some(q) => Ok(Some(balance(&q)?.0)),
            None => Ok(None),
        }
    };

    let a0 = q0[0];
    let g0 = g(a0)?.ok_or_else(|| MechanicsError::UnreachableConfig("tip pin not reproducible".into()))?;
    let root = if g0 == T::zero() {
        a0
    } else {
        let step = T::lit(0.25);
        let (lo_lim, hi_lim) = (chain.joints[0].min_angle, chain.joints[0].max_angle);
        let mut bracket = None;
        let mut k = 1;
        'search: loop {
            let mut any = false;
            for dir in [T::one(), -T::one()] {
                let a = a0 + dir * step * T::lit(k as f64);
                let prev = a0 + dir * step * T::lit((k - 1) as f64);
                if a < lo_lim || a > hi_lim {
                    continue;
                }
                any = true;
                if let (Some(ga), Some(gp)) = (g(a)?, g(prev)?) {
                    if ga == T::zero() || (ga > T::zero()) != (gp > T::zero()) {
                        bracket = Some((prev, gp, a));
                        break 'search;
                    }
                }
            }
            if !any {
                break;
            }
            k += 1;
        }
        let (mut lo, glo, mut hi) = bracket
            .ok_or_else(|| MechanicsError::UnreachableConfig("no balanced posture with the tip pinned".into()))?;
        let positive_lo = glo > T::zero();
        loop {
            let mid = (lo + hi) / T::lit(2.0);
            if mid <= lo.min(hi) || mid >= lo.max(hi) {
                break;
            }
            match g(mid)? {
                Some(v) if (v > T::zero()) == positive_lo => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
        (lo + hi) / T::lit(2.0)
    };

    let q = posture(root).ok_or_else(|| MechanicsError::UnreachableConfig("pinned posture lost".into()))?;
    let (_, tau, c) = balance(&q)?;
    // Least squares for C·R = -τ.
    let (a11, a12, a22) = (dot3(c[0], c[0]), dot3(c[0], c[1]), dot3(c[1], c[1]));
    let (b1, b2) = (-dot3(c[0], tau), -dot3(c[1], tau));
    let det = a11 * a22 - a12 * a12;
    let (ry, rz) = ((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    let reaction = plane.world(ry, rz);
    // The cell faces the pad: it can only push the tip away from the palmar side.
    let phi = (q0[0] + q0[1] + q0[2]).deg_to_rad();
    let pad = plane.world(-phi.sin(), phi.cos());
    let force = if reaction.dot(pad) < T::zero() { reaction.norm() } else { T::zero() };
    Ok(FingertipForce { force, config: FingerConfig::new(q), reaction })
}

fn cross3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Result of the split-cylinder grasp.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspForce<T> {
    /// Compression across the split, N.
    pub force: T,
    /// `(finger, contact)` for every finger contact with the cylinder.
    pub contacts: Vec<(String, Contact<T>)>,
    pub configs: Vec<(String, FingerConfig<T>)>,
    /// Outer rounds until the contact set stopped changing.
    pub rounds: usize,
    /// Set when nothing touched the cylinder.
    pub diagnostic: Option<String>,
}

/// Number of pressure increments used to close the hand onto an object.
const CLOSING_STEPS: usize = 20;

/// Medium-wrap grasp of a split cylinder by the four long fingers.
///
/// The cylinder lies along the hand's x axis at the configured palm offset.
/// The flexors of every long finger are driven at `lead_pressure` with the
/// extensors vented; pressure is raised in increments so the fingers close
/// onto the surface instead of jumping through it. The reported force is
/// the compression of the half facing away from the palm: the z components
/// of the contact forces acting on that half.
pub fn grasp_cylinder<T: Real>(
    hand: &HandDescription<T>,
    radius: T,
    lead_pressure: T,
) -> Result<GraspForce<T>, MechanicsError> {
    let e = &hand.experiment;
    let [oy, oz] = e.grasp_cylinder_offset;
    let cylinder = Shape::Cylinder {
        center_mm: [T::zero(), oy, oz],
        axis: [T::one(), T::zero(), T::zero()],
        radius_mm: radius,
        length_mm: e.grasp_cylinder_length,
    };
    let scene = ContactScene::new(vec![cylinder], e.penalty_stiffness);
    let mut contacts = Vec::new();
    let mut configs = Vec::new();
    let mut rounds = 0;
    for finger in &hand.fingers {
        let chain = ChainModel::new(hand, &finger.name)?;
        let mut config = chain.rest();
        for k in 1..=CLOSING_STEPS {
            let p = lead_pressure * T::lit(k as f64) / T::lit(CLOSING_STEPS as f64);
            let pv = chain.pressure_vector(&chain.uniform_pressures(p, T::zero()))?;
            config = solve_chain(&chain, &pv, Some(&scene), &config, SolverOptions::default())?.config;
        }
        let pv = chain.pressure_vector(&chain.uniform_pressures(lead_pressure, T::zero()))?;
        let mut previous: Option<Vec<Body>> = None;
        let mut result = None;
        for round in 1..=MAX_CONTACT_ROUNDS {
            let r = solve_chain(&chain, &pv, Some(&scene), &config, SolverOptions::default())?;
            let set: Vec<Body> = r.contacts.iter().map(|c| c.body).collect();
            config = r.config.clone();
            let stable = previous.as_ref() == Some(&set);
            previous = Some(set);
            result = Some(r);
            rounds = rounds.max(round);
            if stable {
                break;
            }
        }
        let r = result.expect("at least one round");
        contacts.extend(r.contacts.into_iter().map(|c| (finger.name.clone(), c)));
        configs.push((finger.name.clone(), config));
    }
    let force = contacts
        .iter()
        .filter(|(_, c)| c.normal.z > T::zero())
        .fold(T::zero(), |acc, (_, c)| acc + c.force * c.normal.z);
    let diagnostic = contacts.is_empty().then(|| "no finger touched the cylinder".to_string());
    Ok(GraspForce { force, contacts, configs, rounds, diagnostic })
}
