use serde::Serialize;

use crate::geometry::Vec3;
use crate::hand::{HandDescription, THUMB_NAME};
use crate::mechanics::{ChainModel, ChainPose, FingerConfig, MechanicsError};

pub const KAPANDJI_TARGET_SCORE: u32 = 6;

/// Grid points per thumb joint for the coarse workspace sweep.
const GRID: usize = 7;
/// Best grid samples refined locally.
const SEEDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KapandjiTarget {
    pub index: u32,
    pub name: &'static str,
    pub point_mm: [f64; 3],
    /// Closest approach of the thumb pad.
    pub distance_mm: f64,
    pub reachable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KapandjiReport {
    pub score: u32,
    pub target_score: u32,
    pub tolerance_mm: f64,
    pub thumb_locked: bool,
    pub targets: Vec<KapandjiTarget>,
}

fn crease(pose: &ChainPose<f64>, base_palmar: Vec3<f64>, joint: usize, radius: f64) -> Vec3<f64> {
    let before = if joint == 0 { base_palmar } else { pose.segments[joint - 1].palmar() };
    let after = pose.segments[joint].palmar();
    pose.joint_positions[joint] + (before + after).normalized() * radius
}

/// The ten opposition targets on the relaxed long fingers, in clinical order.
pub fn kapandji_targets(hand: &HandDescription<f64>) -> Result<Vec<(&'static str, Vec3<f64>)>, MechanicsError> {
    let chain = |n: &str| -> Result<(ChainModel<f64>, ChainPose<f64>), MechanicsError> {
        let c = ChainModel::new(hand, n)?;
        let p = c.pose(&c.rest())?;
        Ok((c, p))
    };
    let finger = |i: usize| -> Result<&str, MechanicsError> {
        hand.fingers.get(i).map(|f| f.name.as_str()).ok_or_else(|| MechanicsError::UnknownChain(format!("finger #{i}")))
    };
    let (ic, ip) = chain(finger(0)?)?;
    let radial = |p: &ChainPose<f64>, s: usize, r: f64| p.segments[s].point(0.5) - p.segments[s].rotation.x_axis() * r;
    let mut out = vec![
        ("index proximal phalanx", radial(&ip, 0, ic.radius)),
        ("index middle phalanx", radial(&ip, 1, ic.radius)),
    ];
    for (i, name) in ["index tip", "middle tip", "ring tip", "little tip"].into_iter().enumerate() {
        let (c, p) = chain(finger(i)?)?;
        out.push((name, p.tip_pad(c.radius)));
    }
    let (lc, lp) = chain(finger(3)?)?;
    let base_palmar = lc.base_rotation.z_axis();
    out.push(("little DIP crease", crease(&lp, base_palmar, 2, lc.radius)));
    out.push(("little PIP crease", crease(&lp, base_palmar, 1, lc.radius)));
    out.push(("little MCP crease", crease(&lp, base_palmar, 0, lc.radius)));
    let mcp = lp.joint_positions[0];
    out.push(("distal palmar crease", Vec3::new(mcp.x, mcp.y - 15.0, 0.0)));
    Ok(out)
}

/// Thumb pad position for a thumb configuration.
fn pad(thumb: &ChainModel<f64>, q: &[f64]) -> Vec3<f64> {
    thumb
        .pose(&FingerConfig::new(q.to_vec()))
        .expect("thumb configuration has the chain's length")
        .tip_pad(thumb.radius)
}

/// Bounded Levenberg-Marquardt on |pad(q) - target|² from `q`.
fn refine(thumb: &ChainModel<f64>, target: Vec3<f64>, mut q: Vec<f64>) -> f64 {
    let n = q.len();
    let h = 1e-6;
    let mut lambda = 1e-3;
    let mut r = pad(thumb, &q) - target;
    let mut cost = r.dot(r);
    for _ in 0..100 {
        let jac: Vec<Vec3<f64>> = (0..n)
            .map(|j| {
                let (mut a, mut b) = (q.clone(), q.clone());
                a[j] += h;
                b[j] -= h;
                (pad(thumb, &a) - pad(thumb, &b)) * (0.5 / h)
            })
            .collect();
        let jtj = nalgebra::DMatrix::from_fn(n, n, |i, j| jac[i].dot(jac[j]));
        let jtr = nalgebra::DVector::from_fn(n, |i, _| -jac[i].dot(r));
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(dx) = a.lu().solve(&jtr) else { break };
            let mut trial: Vec<f64> = q.iter().zip(dx.iter()).map(|(a, d)| a + d).collect();
            thumb.clamp(&mut trial);
            let rt = pad(thumb, &trial) - target;
            let ct = rt.dot(rt);
            if ct < cost {
                (q, r, cost) = (trial, rt, ct);
                lambda = (lambda * 0.3).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || cost < 1e-16 {
            break;
        }
    }
    cost.sqrt()
}

/// Closest approach of the thumb pad to `target` over the thumb's joint range.
pub fn thumb_distance(thumb: &ChainModel<f64>, target: Vec3<f64>) -> f64 {
    let n = thumb.dof();
    let mut samples: Vec<(f64, Vec<f64>)> = Vec::with_capacity(GRID.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        let q: Vec<f64> = idx
            .iter()
            .zip(&thumb.joints)
            .map(|(&i, j)| j.min_angle + (j.max_angle - j.min_angle) * i as f64 / (GRID - 1) as f64)
            .collect();
        samples.push((pad(thumb, &q).distance(target), q));
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < GRID {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    samples.into_iter().take(SEEDS).map(|(d, q)| refine(thumb, target, q).min(d)).fold(f64::INFINITY, f64::min)
}

/// Kapandji opposition score: the longest prefix of targets the thumb pad
/// comes within `tolerance` of. A locked thumb stays at its rest posture.
pub fn kapandji_test_with(
    hand: &HandDescription<f64>,
    tolerance: f64,
    thumb_locked: bool,
) -> Result<KapandjiReport, MechanicsError> {
    let thumb = ChainModel::new(hand, THUMB_NAME)?;
    let rest_pad = pad(&thumb, &thumb.rest().angles);
    let targets: Vec<KapandjiTarget> = kapandji_targets(hand)?
        .into_iter()
        .enumerate()
        .map(|(i, (name, p))| {
            let d = if thumb_locked { rest_pad.distance(p) } else { thumb_distance(&thumb, p) };
            KapandjiTarget {
                index: i as u32 + 1,
                name,
                point_mm: p.to_array(),
                distance_mm: d,
                reachable: d <= tolerance,
            }
        })
        .collect();
    let score = targets.iter().take_while(|t| t.reachable).count() as u32;
    Ok(KapandjiReport { score, target_score: KAPANDJI_TARGET_SCORE, tolerance_mm: tolerance, thumb_locked, targets })
}

pub fn kapandji_test(hand: &HandDescription<f64>) -> Result<KapandjiReport, MechanicsError> {
    kapandji_test_with(hand, hand.experiment.kapandji_tolerance, false)
}
