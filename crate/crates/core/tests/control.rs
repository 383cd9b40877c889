use musclesim::control::{
    run_closed_loop, sensor_pressure, step_grasp_controller, ClosedLoopRun, ControlError, ControllerConfig,
    GraspControllerState, Phase, TouchReading, TraceRecord,
};
use musclesim::hand::default_hand;
use musclesim::mechanics::{ContactScene, Shape};
use proptest::prelude::*;

fn two_fingers(config: &ControllerConfig) -> GraspControllerState {
    let mut s = GraspControllerState::new(
        &[("a".to_string(), "a.tip".to_string()), ("b".to_string(), "b.tip".to_string())],
        config,
    );
    s.start();
    s
}

fn readings(a: f64, b: f64) -> Vec<TouchReading> {
    vec![
        TouchReading { sensor_id: "a.tip".into(), pressure: a },
        TouchReading { sensor_id: "b.tip".into(), pressure: b },
    ]
}

proptest! {
    #[test]
    fn hold_freezes_and_ramp_is_exact(
        rate in 0.01f64..0.5,
        dt in 0.001f64..0.05,
        trace in prop::collection::vec((0.0f64..8.0, 0.0f64..8.0), 1..300),
    ) {
        let config = ControllerConfig { ramp_rate_mpa_per_s: rate, ..ControllerConfig::default() };
        let mut state = two_fingers(&config);
        let mut held: [Option<f64>; 2] = [None, None];
        let mut steps = [0u64; 2];
        for (ra, rb) in trace {
            let before = state.clone();
            let (next, commands) = step_grasp_controller(&state, &readings(ra, rb), dt).unwrap();
            for (i, r) in [ra, rb].into_iter().enumerate() {
                let f = &next.fingers[i];
                prop_assert_eq!(commands[i].extensor, 0.0);
                prop_assert!(f.lead_pressure >= 0.0 && f.lead_pressure <= config.pressure_cap_mpa);
                if let Some(p) = held[i] {
                    prop_assert_eq!(f.phase, Phase::Hold);
                    prop_assert_eq!(f.lead_pressure.to_bits(), p.to_bits());
                } else if r > config.threshold_kpa {
                    prop_assert_eq!(f.phase, Phase::Hold);
                    prop_assert_eq!(f.lead_pressure.to_bits(), before.fingers[i].lead_pressure.to_bits());
                    held[i] = Some(f.lead_pressure);
                } else {
                    steps[i] += 1;
                    prop_assert_eq!(f.phase, Phase::Ramp);
                    let expected = (steps[i] as f64 * rate * dt).min(config.pressure_cap_mpa);
                    prop_assert_eq!(f.lead_pressure.to_bits(), expected.to_bits());
                }
            }
            state = next;
        }
    }

    #[test]
    fn release_returns_to_idle(p_steps in 1usize..400, dt in 0.005f64..0.05) {
        let config = ControllerConfig::default();
        let mut state = two_fingers(&config);
        for _ in 0..p_steps {
            state = step_grasp_controller(&state, &readings(0.0, 0.0), dt).unwrap().0;
        }
        state.release();
        let mut last = state.fingers[0].lead_pressure;
        for _ in 0..10_000 {
            if state.fingers.iter().all(|f| f.phase == Phase::Idle) {
                break;
            }
            state = step_grasp_controller(&state, &readings(9.0, 9.0), dt).unwrap().0;
            prop_assert!(state.fingers[0].lead_pressure <= last);
            last = state.fingers[0].lead_pressure;
        }
        prop_assert!(state.fingers.iter().all(|f| f.phase == Phase::Idle && f.lead_pressure == 0.0));
    }

    #[test]
    fn sensor_is_monotone(mut forces in prop::collection::vec(0.0f64..20.0, 2..50)) {
        let hand = default_hand::<f64>();
        let sensor = &hand.sensors[0];
        forces.sort_by(f64::total_cmp);
        let kpa: Vec<f64> = forces.iter().map(|&f| sensor_pressure(sensor, f)).collect();
        prop_assert!(kpa.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(kpa.iter().all(|&p| p <= sensor.saturation));
    }
}

#[test]
fn sensor_law_examples() {
    let hand = default_hand::<f64>();
    let s = &hand.sensors[0];
    assert_eq!(sensor_pressure(s, 0.0), 0.0);
    assert!((sensor_pressure(s, 0.5) - 4.0).abs() < 1e-12);
    assert_eq!(sensor_pressure(s, 10.0), 30.0);
}

#[test]
fn controller_step_example() {
    let config = ControllerConfig { ramp_rate_mpa_per_s: 0.1, ..ControllerConfig::default() };
    let mut state = two_fingers(&config);
    let mut steps = 0;
    while state.fingers[0].lead_pressure < 0.1 - 1e-12 {
        state = step_grasp_controller(&state, &readings(0.0, 0.0), 0.1).unwrap().0;
        steps += 1;
    }
    assert_eq!(steps, 10);
    let next = step_grasp_controller(&state, &readings(1.0, 4.1), 0.1).unwrap().0;
    assert!((next.fingers[0].lead_pressure - 0.11).abs() < 1e-12);
    assert_eq!(next.fingers[0].phase, Phase::Ramp);
    assert_eq!(next.fingers[1].phase, Phase::Hold);
    assert_eq!(next.fingers[1].lead_pressure, state.fingers[1].lead_pressure);
}

#[test]
fn missing_reading_is_an_error() {
    let state = two_fingers(&ControllerConfig::default());
    let only_a = vec![TouchReading { sensor_id: "a.tip".into(), pressure: 0.0 }];
    assert!(
        matches!(step_grasp_controller(&state, &only_a, 0.01), Err(ControlError::MissingReading(id)) if id == "b.tip")
    );
}

fn sphere_run() -> ClosedLoopRun {
    let hand = default_hand::<f64>();
    let scene = ContactScene::new(
        vec![Shape::Sphere { center_mm: [-5.0, 65.0, 38.0], radius_mm: 33.5 }],
        hand.experiment.penalty_stiffness,
    );
    run_closed_loop(&hand, &scene, &ControllerConfig::default(), 3.5, 0.01).unwrap()
}

fn finger_series(trace: &[TraceRecord], i: usize) -> Vec<(f64, Phase, f64, f64)> {
    trace.iter().map(|r| (r.time, r.fingers[i].phase, r.fingers[i].lead_pressure, r.fingers[i].sensor_kpa)).collect()
}

#[test]
fn sphere_trace_invariants() {
    let run = sphere_run();
    let threshold = ControllerConfig::default().threshold_kpa;
    assert!(run.trace.windows(2).all(|w| w[0].time < w[1].time));
    for i in 0..run.trace[0].fingers.len() {
        let s = finger_series(&run.trace, i);
        let entry = s.iter().position(|x| x.1 == Phase::Hold).expect("every finger reaches hold");
        let crossing = s.iter().position(|x| x.3 > threshold).unwrap();
        assert_eq!(entry, crossing + 1, "finger {i} enters hold one step after its sensor crosses");
        assert!(s[entry..].iter().all(|x| x.1 == Phase::Hold && x.2.to_bits() == s[entry].2.to_bits()));
        assert!(s[entry].2 < ControllerConfig::default().pressure_cap_mpa);
    }
    let pressures: Vec<u64> = run.controller.fingers.iter().map(|f| f.lead_pressure.to_bits()).collect();
    assert!(pressures.iter().any(|&p| p != pressures[0]), "hold pressures adapt per finger");
    assert!(run.trace.iter().flat_map(|r| &r.fingers).all(|f| f.solved));
}

#[test]
fn empty_scene_ramps_to_cap() {
    let hand = default_hand::<f64>();
    let run = run_closed_loop(
        &hand,
        &ContactScene::empty(hand.experiment.penalty_stiffness),
        &ControllerConfig::default(),
        3.5,
        0.01,
    )
    .unwrap();
    let cap = ControllerConfig::default().pressure_cap_mpa;
    for i in 0..run.trace[0].fingers.len() {
        let s = finger_series(&run.trace, i);
        assert!(s.iter().all(|x| x.1 == Phase::Ramp && x.3 == 0.0));
        let first_cap = s.iter().find(|x| x.2 == cap).unwrap().0;
        assert!((first_cap - 3.0).abs() <= 0.01 + 1e-9, "cap at {first_cap} s");
    }
}

#[test]
fn closed_loop_is_deterministic() {
    assert_eq!(sphere_run(), sphere_run());
}
