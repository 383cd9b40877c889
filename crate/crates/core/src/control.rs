//! Touch sensors, the per-finger ramp/hold grasp controller and the
//! closed-loop driver.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hand::{HandDescription, SensorSpec};
use crate::mechanics::{
    solve_chain, Body, ChainModel, Contact, ContactScene, FingerConfig, MechanicsError, SolverOptions,
};
use crate::scalar::Real;

pub const DEFAULT_RAMP_RATE_MPA_PER_S: f64 = 0.067;
pub const DEFAULT_PRESSURE_CAP_MPA: f64 = 0.2;
pub const DEFAULT_DT_S: f64 = 0.01;
pub const DEFAULT_THRESHOLD_KPA: f64 = 4.0;

pub const TRACE_CSV_HEADER: [&str; 9] =
    ["time_s", "finger", "phase", "lead_pressure_mpa", "alpha_deg", "beta_deg", "gamma_deg", "sensor_kpa", "contact_n"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("no reading for sensor `{0}`")]
    MissingReading(String),
    #[error("no fingertip sensor on `{0}`")]
    MissingSensor(String),
    #[error("invalid controller setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Mechanics(#[from] MechanicsError),
}

/// Sensor pressure (kPa) for a contact force, linear up to saturation.
pub fn sensor_pressure<T: Real>(sensor: &SensorSpec<T>, contact_force: T) -> T {
    (sensor.compliance * contact_force.max(T::zero())).min(sensor.saturation)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchReading {
    pub sensor_id: String,
    pub pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Idle,
    Ramp,
    Hold,
    Release,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Ramp => "ramp",
            Phase::Hold => "hold",
            Phase::Release => "release",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerControl {
    pub finger: String,
    pub sensor_id: String,
    pub phase: Phase,
    pub lead_pressure: f64,
    /// Pressure when the current ramp segment started.
    origin: f64,
    /// Steps taken in the current ramp segment.
    steps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspControllerState {
    pub fingers: Vec<FingerControl>,
    pub ramp_rate: f64,
    pub threshold: f64,
    pub pressure_cap: f64,
}

/// Flexor and extensor lead pressures for one finger.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureCommand {
    pub finger: String,
    pub flexor: f64,
    pub extensor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub ramp_rate_mpa_per_s: f64,
    pub pressure_cap_mpa: f64,
    pub threshold_kpa: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            ramp_rate_mpa_per_s: DEFAULT_RAMP_RATE_MPA_PER_S,
            pressure_cap_mpa: DEFAULT_PRESSURE_CAP_MPA,
            threshold_kpa: DEFAULT_THRESHOLD_KPA,
        }
    }
}

impl ControllerConfig {
    pub fn check(&self) -> Result<(), ControlError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.ramp_rate_mpa_per_s) || !ok(self.pressure_cap_mpa) || !ok(self.threshold_kpa) {
            return Err(ControlError::InvalidSetting(format!("{self:?}")));
        }
        Ok(())
    }
}

impl GraspControllerState {
    /// All fingers idle at zero pressure. `fingers` pairs each finger with its
    /// touch sensor.
    pub fn new(fingers: &[(String, String)], config: &ControllerConfig) -> Self {
        Self {
            fingers: fingers
                .iter()
                .map(|(f, s)| FingerControl {
                    finger: f.clone(),
                    sensor_id: s.clone(),
                    phase: Phase::Idle,
                    lead_pressure: 0.0,
                    origin: 0.0,
                    steps: 0,
                })
                .collect(),
            ramp_rate: config.ramp_rate_mpa_per_s,
            threshold: config.threshold_kpa,
            pressure_cap: config.pressure_cap_mpa,
        }
    }

    /// Every chain of the hand with its fingertip sensor.
    pub fn for_hand<T: Real>(hand: &HandDescription<T>, config: &ControllerConfig) -> Result<Self, ControlError> {
        let pairs = hand
            .chain_names()
            .into_iter()
            .map(|c| {
                let s = hand.fingertip_sensor(&c).ok_or_else(|| ControlError::MissingSensor(c.clone()))?;
                Ok((c, s.id.clone()))
            })
            .collect::<Result<Vec<_>, ControlError>>()?;
        Ok(Self::new(&pairs, config))
    }

    /// Idle and released fingers start ramping up from where they are.
    pub fn start(&mut self) {
        for f in &mut self.fingers {
            if matches!(f.phase, Phase::Idle | Phase::Release) {
                f.phase = Phase::Ramp;
                f.origin = f.lead_pressure;
                f.steps = 0;
            }
        }
    }

    /// Every active finger ramps back down to zero.
    pub fn release(&mut self) {
        for f in &mut self.fingers {
            if matches!(f.phase, Phase::Ramp | Phase::Hold) {
                f.phase = Phase::Release;
                f.origin = f.lead_pressure;
                f.steps = 0;
            }
        }
    }

    pub fn commands(&self) -> Vec<PressureCommand> {
        self.fingers
            .iter()
            .map(|f| PressureCommand { finger: f.finger.clone(), flexor: f.lead_pressure, extensor: 0.0 })
            .collect()
    }
}

/// One controller tick.
///
/// A ramping finger whose reading exceeds the threshold switches to Hold
/// in this step without a further increment; otherwise it gains
/// `ramp_rate·dt`, computed from the segment start so the ramp stays exact.
/// Held fingers are left untouched. Extensors are vented throughout.
pub fn step_grasp_controller(
    state: &GraspControllerState,
    readings: &[TouchReading],
    dt: f64,
) -> Result<(GraspControllerState, Vec<PressureCommand>), ControlError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ControlError::InvalidSetting(format!("dt = {dt}")));
    }
    let mut next = state.clone();
    for f in &mut next.fingers {
        let reading = readings
            .iter()
            .find(|r| r.sensor_id == f.sensor_id)
            .ok_or_else(|| ControlError::MissingReading(f.sensor_id.clone()))?;
        match f.phase {
            Phase::Idle | Phase::Hold => {}
            Phase::Ramp => {
                if reading.pressure > state.threshold {
                    f.phase = Phase::Hold;
                } else if f.lead_pressure < state.pressure_cap {
                    f.steps += 1;
                    f.lead_pressure = (f.origin + f.steps as f64 * state.ramp_rate * dt).min(state.pressure_cap);
                }
            }
            Phase::Release => {
                f.steps += 1;
                f.lead_pressure = (f.origin - f.steps as f64 * state.ramp_rate * dt).max(0.0);
                if f.lead_pressure == 0.0 {
                    f.phase = Phase::Idle;
                }
            }
        }
    }
    let commands = next.commands();
    Ok((next, commands))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerSample {
    pub finger: String,
    pub phase: Phase,
    pub lead_pressure: f64,
    pub angles: Vec<f64>,
    pub sensor_kpa: f64,
    /// Total contact force on the chain, N.
    pub contact_n: f64,
    /// False when the equilibrium solve failed and the last good posture was kept.
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub fingers: Vec<FingerSample>,
}

/// End state of a closed-loop run alongside its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopRun {
    pub trace: Vec<TraceRecord>,
    pub controller: GraspControllerState,
    pub configs: Vec<FingerConfig<f64>>,
    /// `(finger, contact)` pairs at the end of the run.
    pub contacts: Vec<(String, Contact<f64>)>,
}

impl ClosedLoopRun {
    pub fn fingers_in_hold(&self) -> usize {
        self.controller.fingers.iter().filter(|f| f.phase == Phase::Hold).count()
    }

    pub fn total_normal_force(&self) -> f64 {
        self.contacts.iter().fold(0.0, |acc, (_, c)| acc + c.force)
    }
}

/// Sensor input for the distal segment of a chain.
fn distal_force(contacts: &[Contact<f64>], segments: usize) -> f64 {
    contacts.iter().filter(|c| c.body == Body::Segment(segments - 1)).fold(0.0, |acc, c| acc + c.force)
}

/// Closed-loop grasp: each step runs the controller on the previous sensor
/// readings, solves every chain against the scene warm-started from its last
/// posture, then updates the sensors. All fingers start ramping at t = 0.
pub fn run_closed_loop(
    hand: &HandDescription<f64>,
    scene: &ContactScene<f64>,
    config: &ControllerConfig,
    duration: f64,
    dt: f64,
) -> Result<ClosedLoopRun, ControlError> {
    config.check()?;
    if !(dt.is_finite() && dt > 0.0) || !(duration.is_finite() && duration > 0.0) {
        return Err(ControlError::InvalidSetting(format!("duration {duration} s, dt {dt} s")));
    }
    let mut state = GraspControllerState::for_hand(hand, config)?;
    state.start();
    let chains = hand.chain_names().iter().map(|c| ChainModel::new(hand, c)).collect::<Result<Vec<_>, _>>()?;
    let sensors: Vec<&SensorSpec<f64>> =
        state.fingers.iter().map(|f| hand.fingertip_sensor(&f.finger).expect("checked in for_hand")).collect();
    let mut configs: Vec<FingerConfig<f64>> = chains.iter().map(|c| c.rest()).collect();
    let mut contacts: Vec<Vec<Contact<f64>>> = vec![Vec::new(); chains.len()];
    let mut readings: Vec<TouchReading> =
        sensors.iter().map(|s| TouchReading { sensor_id: s.id.clone(), pressure: 0.0 }).collect();
    let steps = (duration / dt).round() as u64;
    let mut trace = Vec::with_capacity(steps as usize);

    for k in 1..=steps {
        let (next, commands) = step_grasp_controller(&state, &readings, dt)?;
        state = next;
        let mut samples = Vec::with_capacity(chains.len());
        for (i, chain) in chains.iter().enumerate() {
            let cmd = &commands[i];
            let p = chain.pressure_vector(&chain.uniform_pressures(cmd.flexor, cmd.extensor))?;
            let solved = match solve_chain(chain, &p, Some(scene), &configs[i], SolverOptions::default()) {
                Ok(r) => {
                    configs[i] = r.config;
                    contacts[i] = r.contacts;
                    true
                }
                Err(MechanicsError::NoConvergence { .. }) => false,
                Err(e) => return Err(e.into()),
            };
            let reading = sensor_pressure(sensors[i], distal_force(&contacts[i], chain.segments.len()));
            readings[i].pressure = reading;
            samples.push(FingerSample {
                finger: chain.name.clone(),
                phase: state.fingers[i].phase,
                lead_pressure: state.fingers[i].lead_pressure,
                angles: configs[i].angles.clone(),
                sensor_kpa: reading,
                contact_n: contacts[i].iter().fold(0.0, |acc, c| acc + c.force),
                solved,
            });
        }
        trace.push(TraceRecord { time: k as f64 * dt, fingers: samples });
    }
    let contacts =
        chains.iter().zip(contacts).flat_map(|(c, cs)| cs.into_iter().map(move |k| (c.name.clone(), k))).collect();
    Ok(ClosedLoopRun { trace, controller: state, configs, contacts })
}

/// The three angle columns of a trace row: the chain's joints for a long
/// finger, CMC flexion, MP and IP for the thumb.
fn trace_angles(angles: &[f64]) -> [f64; 3] {
    match angles {
        [a, b, c] => [*a, *b, *c],
        [a, _, b, c] => [*a, *b, *c],
        _ => [f64::NAN; 3],
    }
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_CSV_HEADER)?;
    for r in trace {
        for f in &r.fingers {
            let [a, b, g] = trace_angles(&f.angles);
            w.write_record([
                r.time.to_string(),
                f.finger.clone(),
                f.phase.as_str().to_string(),
                f.lead_pressure.to_string(),
                a.to_string(),
                b.to_string(),
                g.to_string(),
                f.sensor_kpa.to_string(),
                f.contact_n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::initial_hand;

    fn one_finger(phase: Phase, p: f64) -> GraspControllerState {
        let cfg = ControllerConfig { ramp_rate_mpa_per_s: 0.1, pressure_cap_mpa: 0.2, threshold_kpa: 4.0 };
        let mut s = GraspControllerState::new(&[("index".into(), "index.tip".into())], &cfg);
        s.fingers[0].phase = phase;
        s.fingers[0].lead_pressure = p;
        s.fingers[0].origin = p;
        s
    }

    fn reading(p: f64) -> Vec<TouchReading> {
        vec![TouchReading { sensor_id: "index.tip".into(), pressure: p }]
    }

    #[test]
    fn sensor_law() {
        let h = initial_hand::<f64>();
        let s = h.fingertip_sensor("index").unwrap();
        assert_eq!(sensor_pressure(s, 0.0), 0.0);
        assert_eq!(sensor_pressure(s, 0.5), 4.0);
        assert_eq!(sensor_pressure(s, 10.0), 30.0);
    }

    #[test]
    fn ramp_step() {
        let (s, cmd) = step_grasp_controller(&one_finger(Phase::Ramp, 0.10), &reading(1.0), 0.1).unwrap();
        assert!((s.fingers[0].lead_pressure - 0.11).abs() < 1e-15);
        assert_eq!(s.fingers[0].phase, Phase::Ramp);
        assert_eq!(cmd[0].extensor, 0.0);
    }

    #[test]
    fn threshold_freezes() {
        let (mut s, _) = step_grasp_controller(&one_finger(Phase::Ramp, 0.10), &reading(4.1), 0.1).unwrap();
        assert_eq!(s.fingers[0].phase, Phase::Hold);
        assert_eq!(s.fingers[0].lead_pressure, 0.10);
        for i in 0..100 {
            s = step_grasp_controller(&s, &reading(i as f64), 0.1).unwrap().0;
            assert_eq!(s.fingers[0].lead_pressure.to_bits(), 0.10f64.to_bits());
        }
    }

    #[test]
    fn at_threshold_keeps_ramping() {
        let (s, _) = step_grasp_controller(&one_finger(Phase::Ramp, 0.10), &reading(4.0), 0.1).unwrap();
        assert_eq!(s.fingers[0].phase, Phase::Ramp);
    }

    #[test]
    fn release_returns_to_idle() {
        let mut s = one_finger(Phase::Hold, 0.05);
        s.release();
        for _ in 0..5 {
            s = step_grasp_controller(&s, &reading(0.0), 0.1).unwrap().0;
        }
        assert_eq!(s.fingers[0].phase, Phase::Idle);
        assert_eq!(s.fingers[0].lead_pressure, 0.0);
    }

    #[test]
    fn missing_reading_and_bad_dt() {
        let s = one_finger(Phase::Ramp, 0.0);
        assert!(matches!(step_grasp_controller(&s, &[], 0.1), Err(ControlError::MissingReading(_))));
        assert!(step_grasp_controller(&s, &reading(0.0), 0.0).is_err());
    }
}
