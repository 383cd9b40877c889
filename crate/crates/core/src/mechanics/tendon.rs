use crate::hand::{HandDescription, MuscleSpec, TendonRoute};
use crate::pam::pam_force;
use crate::scalar::Real;

use super::{FingerConfig, MechanicsError};

/// Tendon excursion (mm) of a route between `rest` and `config`.
///
/// Each waypoint is an ideal pulley, `Σ r·s·Δθ` with `s = +1` for flexion;
/// positive values shorten the muscle. `chain_joints` names the joints the
/// angle vectors refer to.
pub fn tendon_excursion<T: Real>(
    route: &TendonRoute<T>,
    chain_joints: &[String],
    config: &FingerConfig<T>,
    rest: &FingerConfig<T>,
) -> Result<T, MechanicsError> {
    route.waypoints.iter().try_fold(T::zero(), |acc, w| {
        let i = chain_joints
            .iter()
            .position(|j| *j == w.joint_id)
            .filter(|&i| i < config.len() && i < rest.len())
            .ok_or_else(|| MechanicsError::UnknownJoint(w.joint_id.clone()))?;
        let d = (config.angles[i] - rest.angles[i]).deg_to_rad();
        Ok(acc + w.moment_arm * w.sense.sign::<T>() * d)
    })
}

/// Excursion of a muscle's route in a hand, measured from the rest angles.
pub fn muscle_excursion<T: Real>(
    hand: &HandDescription<T>,
    muscle_id: &str,
    config: &FingerConfig<T>,
) -> Result<T, MechanicsError> {
    let m = hand.muscle(muscle_id).ok_or_else(|| MechanicsError::UnknownMuscle(muscle_id.into()))?;
    let route = hand.route(muscle_id).ok_or_else(|| MechanicsError::UnknownMuscle(muscle_id.into()))?;
    let chain = hand.chain(&m.target_finger).ok_or_else(|| MechanicsError::UnknownChain(m.target_finger.clone()))?;
    let rest = FingerConfig::new(hand.rest_angles(&chain.name).unwrap_or_default());
    tendon_excursion(route, &chain.joints, config, &rest)
}

/// Tendon tension from a muscle at `lead_pressure` after `excursion` mm of
/// contraction. Contraction inside `slack` leaves the muscle at zero strain.
pub fn muscle_tension<T: Real>(
    muscle: &MuscleSpec<T>,
    lead_pressure: T,
    excursion: T,
    slack: T,
) -> Result<T, MechanicsError> {
    tension(&muscle.pam, lead_pressure, excursion, slack)
}

pub(crate) fn tension<T: Real>(
    pam: &crate::pam::PamParams<T>,
    pressure: T,
    excursion: T,
    slack: T,
) -> Result<T, MechanicsError> {
    let strain = (excursion - slack).max(T::zero()) / pam.rest_length;
    if strain >= T::one() {
        return Ok(T::zero());
    }
    Ok(pam_force(pam, pressure, strain)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::{initial_hand, Sense, Waypoint};
    use crate::pam::pam_free_strain;
    use approx::assert_relative_eq;

    fn single(r: f64) -> (TendonRoute<f64>, Vec<String>) {
        let route = TendonRoute {
            muscle_id: "m".into(),
            slack: 0.0,
            waypoints: vec![Waypoint { joint_id: "j".into(), moment_arm: r, sense: Sense::Flexion }],
        };
        (route, vec!["j".into()])
    }

    #[test]
    fn quarter_turn_arc() {
        let (route, joints) = single(10.0);
        let e =
            tendon_excursion(&route, &joints, &FingerConfig::new(vec![90.0]), &FingerConfig::new(vec![0.0])).unwrap();
        assert_relative_eq!(e, 15.707963267948966, epsilon = 1e-12);
    }

    #[test]
    fn zero_at_rest() {
        let hand = initial_hand::<f64>();
        let rest = FingerConfig::new(hand.rest_angles("index").unwrap());
        for r in hand.routes.iter().filter(|r| r.muscle_id.starts_with("index")) {
            let e = tendon_excursion(r, &hand.fingers[0].joints, &rest, &rest).unwrap();
            assert_eq!(e, 0.0);
        }
    }

    #[test]
    fn three_joint_sum() {
        let route = TendonRoute {
            muscle_id: "FDP".into(),
            slack: 0.0,
            waypoints: ["a", "b", "c"]
                .iter()
                .zip([10.0, 8.0, 6.0])
                .map(|(j, r)| Waypoint { joint_id: j.to_string(), moment_arm: r, sense: Sense::Flexion })
                .collect(),
        };
        let joints: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let e = tendon_excursion(&route, &joints, &FingerConfig::new(vec![10.0; 3]), &FingerConfig::new(vec![0.0; 3]))
            .unwrap();
        assert_relative_eq!(e, 24.0 * std::f64::consts::PI / 18.0, epsilon = 1e-12);
    }

    #[test]
    fn extension_sense_is_negative_under_flexion() {
        let mut route = single(5.0).0;
        route.waypoints[0].sense = Sense::Extension;
        let e =
            tendon_excursion(&route, &["j".to_string()], &FingerConfig::new(vec![30.0]), &FingerConfig::new(vec![0.0]))
                .unwrap();
        assert!(e < 0.0);
    }

    #[test]
    fn unknown_joint() {
        let (route, _) = single(5.0);
        let r =
            tendon_excursion(&route, &["k".to_string()], &FingerConfig::new(vec![0.0]), &FingerConfig::new(vec![0.0]));
        assert!(matches!(r, Err(MechanicsError::UnknownJoint(_))));
    }

    #[test]
    fn tension_cases() {
        let hand = initial_hand::<f64>();
        let fdp = hand.muscle("little.FDP").unwrap();
        assert_eq!(muscle_tension(fdp, 0.0, 12.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(muscle_tension(fdp, 0.5, 2.0, 3.0).unwrap(), 38.05, max_relative = 1e-12);
        assert_relative_eq!(muscle_tension(fdp, 0.5, -4.0, 0.0).unwrap(), 38.05, max_relative = 1e-12);
        let free = pam_free_strain(&fdp.pam, 0.5).unwrap();
        assert!(muscle_tension(fdp, 0.5, free * 220.0, 0.0).unwrap() < 1e-9);
        assert_eq!(muscle_tension(fdp, 0.5, 400.0, 0.0).unwrap(), 0.0);
    }
}
