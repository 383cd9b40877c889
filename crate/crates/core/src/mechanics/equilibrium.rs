//! Quasi-static torque balance of one chain.

use crate::geometry::solve_dense;
use crate::hand::HandDescription;
use crate::scalar::Real;

use super::contact::{Body, Contact, ContactScene};
use super::tendon::tension;
use super::{ChainModel, FingerConfig, MechanicsError, MusclePressures};

pub const MAX_NEWTON_ITERATIONS: usize = 200;
pub const MIN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult<T> {
    pub config: FingerConfig<T>,
    /// `(muscle id, tension N)` in chain muscle order.
    pub tendon_tensions: Vec<(String, T)>,
    /// Max-norm of the residual over joints not held by a limit (N·mm).
    pub residual: T,
    pub iterations: usize,
    /// Joints resting on a limit with the load pushing into it.
    pub at_limit: Vec<bool>,
    /// Torque the limit stop supplies at each joint (N·mm, zero if free).
    pub limit_torques: Vec<T>,
    pub contacts: Vec<Contact<T>>,
}

/// Net flexion torque on each joint (N·mm): tendons minus joint springs plus
/// the torque of the given contact forces.
pub fn joint_residual<T: Real>(
    hand: &HandDescription<T>,
    finger: &str,
    config: &FingerConfig<T>,
    pressures: &MusclePressures<T>,
    contacts: &[Contact<T>],
) -> Result<Vec<T>, MechanicsError> {
    let chain = ChainModel::new(hand, finger)?;
    let p = chain.pressure_vector(pressures)?;
    chain_residual(&chain, &config.angles, &p, contacts)
}

/// Tendon tensions at a configuration, in muscle order.
pub fn chain_tensions<T: Real>(chain: &ChainModel<T>, angles: &[T], pressures: &[T]) -> Result<Vec<T>, MechanicsError> {
    chain
        .muscles
        .iter()
        .zip(pressures)
        .map(|(m, &p)| {
            let excursion = m
                .arms
                .iter()
                .fold(T::zero(), |acc, &(j, arm)| acc + arm * (angles[j] - chain.joints[j].rest_angle).deg_to_rad());
            tension(&m.pam, p, excursion, m.slack)
        })
        .collect()
}

/// Residual of an already resolved chain; pressures in muscle order.
pub fn chain_residual<T: Real>(
    chain: &ChainModel<T>,
    angles: &[T],
    pressures: &[T],
    contacts: &[Contact<T>],
) -> Result<Vec<T>, MechanicsError> {
    if angles.len() != chain.dof() {
        return Err(MechanicsError::ConfigLength { expected: chain.dof(), got: angles.len() });
    }
    let mut r: Vec<T> = chain.joints.iter().zip(angles).map(|(j, &a)| -j.stiffness * (a - j.rest_angle)).collect();
    let tensions = chain_tensions(chain, angles, pressures)?;
    for (m, t) in chain.muscles.iter().zip(tensions) {
        for &(j, arm) in &m.arms {
            r[j] = r[j] + t * arm;
        }
    }
    if contacts.iter().any(|c| matches!(c.body, Body::Segment(_))) {
        let pose = chain.pose(&FingerConfig::new(angles.to_vec()))?;
        for c in contacts {
            if let Body::Segment(s) = c.body {
                for (rj, tj) in r.iter_mut().zip(pose.torques(s, c.point, c.force_vector())) {
                    *rj = *rj + tj;
                }
            }
        }
    }
    Ok(r)
}

/// Residual with contacts recomputed from the configuration.
pub(crate) fn coupled_residual<T: Real>(
    chain: &ChainModel<T>,
    angles: &[T],
    pressures: &[T],
    scene: Option<&ContactScene<T>>,
) -> Result<(Vec<T>, Vec<Contact<T>>), MechanicsError> {
    let contacts = match scene {
        Some(s) if !s.objects.is_empty() => {
            let pose = chain.pose(&FingerConfig::new(angles.to_vec()))?;
            s.chain_contacts(&pose, chain.radius)
        }
        _ => Vec::new(),
    };
    let r = chain_residual(chain, angles, pressures, &contacts)?;
    Ok((r, contacts))
}

fn active_set<T: Real>(chain: &ChainModel<T>, angles: &[T], r: &[T]) -> Vec<bool> {
    chain
        .joints
        .iter()
        .zip(angles)
        .zip(r)
        .map(|((j, &a), &rj)| (a <= j.min_angle && rj < T::zero()) || (a >= j.max_angle && rj > T::zero()))
        .collect()
}

fn free_norm<T: Real>(r: &[T], active: &[bool]) -> T {
    r.iter().zip(active).filter(|(_, &a)| !a).fold(T::zero(), |m, (v, _)| m.max(v.abs()))
}

/// Solver knobs; defaults follow the scalar type's precision.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions<T> {
    pub tolerance: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self { tolerance: T::equilibrium_tolerance(), max_iterations: MAX_NEWTON_ITERATIONS }
    }
}

type Eval<'a, T> = dyn Fn(&[T]) -> Result<(Vec<T>, Vec<Contact<T>>), MechanicsError> + 'a;

/// Damped Newton on the chain residual with a numerical Jacobian.
///
/// Joint limits are enforced by clamping: a joint sitting on a limit with
/// the load pushing into it leaves the Newton system and its limit torque
/// is reported. When no damped step reduces the residual a sweep of
/// per-joint bisections is tried instead.
pub fn solve_chain<T: Real>(
    chain: &ChainModel<T>,
    pressures: &[T],
    scene: Option<&ContactScene<T>>,
    start: &FingerConfig<T>,
    opts: SolverOptions<T>,
) -> Result<EquilibriumResult<T>, MechanicsError> {
    let eval = |x: &[T]| coupled_residual(chain, x, pressures, scene);
    newton(chain, pressures, start, opts, &eval)
}

fn newton<T: Real>(
    chain: &ChainModel<T>,
    pressures: &[T],
    start: &FingerConfig<T>,
    opts: SolverOptions<T>,
    eval: &Eval<'_, T>,
) -> Result<EquilibriumResult<T>, MechanicsError> {
    let n = chain.dof();
    let mut x = start.angles.clone();
    if x.len() != n {
        return Err(MechanicsError::ConfigLength { expected: n, got: x.len() });
    }
    chain.clamp(&mut x);
    let (mut r, _) = eval(&x)?;
    let mut active = active_set(chain, &x, &r);
    let mut norm = free_norm(&r, &active);
    let h = T::fd_step().sqrt() * T::lit(0.1);
    let two = T::lit(2.0);
    let mut iterations = 0;

    while norm >= opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let m = free.len();
        let mut jac = vec![T::zero(); m * m];
        for (col, &j) in free.iter().enumerate() {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] = xp[j] + h;
            xm[j] = xm[j] - h;
            let (rp, rm) = (eval(&xp)?.0, eval(&xm)?.0);
            for (row, &i) in free.iter().enumerate() {
                jac[row * m + col] = (rp[i] - rm[i]) / (h * two);
            }
        }
        let rhs: Vec<T> = free.iter().map(|&i| -r[i]).collect();
        let mut accepted = false;
        if let Some(dx) = solve_dense(jac, rhs) {
            let mut t = T::one();
            while t >= T::lit(MIN_STEP) {
                let mut trial = x.clone();
                for (k, &j) in free.iter().enumerate() {
                    trial[j] = trial[j] + dx[k] * t;
                }
                chain.clamp(&mut trial);
                let (rt, _) = eval(&trial)?;
                let at = active_set(chain, &trial, &rt);
                let nt = free_norm(&rt, &at);
                if nt < norm {
                    (x, r, active, norm, accepted) = (trial, rt, at, nt, true);
                    break;
                }
                t = t / two;
            }
        }
        if !accepted {
            let mut trial = x.clone();
            bisection_sweep(chain, eval, &mut trial)?;
            let (rt, _) = eval(&trial)?;
            let at = active_set(chain, &trial, &rt);
            let nt = free_norm(&rt, &at);
            if nt >= norm {
                break;
            }
            (x, r, active, norm) = (trial, rt, at, nt);
        }
    }

    let (r, contacts) = eval(&x)?;
    let at_limit = active_set(chain, &x, &r);
    let residual = free_norm(&r, &at_limit);
    let limit_torques = r.iter().zip(&at_limit).map(|(&v, &a)| if a { -v } else { T::zero() }).collect();
    let tendon_tensions =
        chain.muscles.iter().map(|m| m.id.clone()).zip(chain_tensions(chain, &x, pressures)?).collect();
    let result = EquilibriumResult {
        config: FingerConfig::new(x),
        tendon_tensions,
        residual,
        iterations,
        at_limit,
        limit_torques,
        contacts,
    };
    if residual < opts.tolerance {
        Ok(result)
    } else {
        Err(MechanicsError::NoConvergence { best: Box::new(result.cast()) })
    }
}

/// Gauss-Seidel pass: each joint is bisected to its own torque balance with
/// the others held fixed.
fn bisection_sweep<T: Real>(chain: &ChainModel<T>, eval: &Eval<'_, T>, x: &mut [T]) -> Result<(), MechanicsError> {
    let two = T::lit(2.0);
    for j in 0..chain.dof() {
        let (lo0, hi0) = (chain.joints[j].min_angle, chain.joints[j].max_angle);
        let rj = |a: T, x: &mut [T]| -> Result<T, MechanicsError> {
            x[j] = a;
            Ok(eval(x)?.0[j])
        };
        if rj(lo0, x)? <= T::zero() {
            x[j] = lo0;
            continue;
        }
        if rj(hi0, x)? >= T::zero() {
            x[j] = hi0;
            continue;
        }
        let (mut lo, mut hi) = (lo0, hi0);
        loop {
            let mid = (lo + hi) / two;
            if mid <= lo || mid >= hi {
                break;
            }
            if rj(mid, x)? > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x[j] = (lo + hi) / two;
    }
    Ok(())
}

impl<T: Real> EquilibriumResult<T> {
    pub(crate) fn cast(&self) -> EquilibriumResult<f64> {
        let c = |v: T| v.to_f64_lossy();
        EquilibriumResult {
            config: FingerConfig::new(self.config.angles.iter().map(|&a| c(a)).collect()),
            tendon_tensions: self.tendon_tensions.iter().map(|(k, v)| (k.clone(), c(*v))).collect(),
            residual: c(self.residual),
            iterations: self.iterations,
            at_limit: self.at_limit.clone(),
            limit_torques: self.limit_torques.iter().map(|&v| c(v)).collect(),
            contacts: self
                .contacts
                .iter()
                .map(|k| Contact {
                    body: k.body,
                    object: k.object,
                    point: k.point.cast(),
                    penetration: c(k.penetration),
                    normal: k.normal.cast(),
                    force: c(k.force),
                })
                .collect(),
        }
    }
}

/// Torque balance of one chain under the given pressures and fixed
/// contact loads, starting from the rest posture.
pub fn solve_finger_equilibrium<T: Real>(
    hand: &HandDescription<T>,
    finger: &str,
    pressures: &MusclePressures<T>,
    contacts: &[Contact<T>],
) -> Result<EquilibriumResult<T>, MechanicsError> {
    let chain = ChainModel::new(hand, finger)?;
    let p = chain.pressure_vector(pressures)?;
    let eval = |x: &[T]| Ok((chain_residual(&chain, x, &p, contacts)?, contacts.to_vec()));
    newton(&chain, &p, &chain.rest(), SolverOptions::default(), &eval)
}
