//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines come out in order.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};

use common::{closed_form_free_strain, energy, kinks, mckibben_raw, single_joint, torque_scale};
use musclesim::control::{run_closed_loop, ControllerConfig, Phase};
use musclesim::experiments::{
    default_objects, force_report, grasp_object_suite, kapandji_test, kapandji_test_with, rom_experiment,
    GraspSettings, MEASURED_FINGERTIP, MEASURED_GRASP,
};
use musclesim::hand::default_hand;
use musclesim::mechanics::{chain_residual, solve_chain, ContactScene, Shape, SolverOptions};
use musclesim::pam::{calibrate_pam, pam_force, pam_free_strain, PamParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn pam_endpoints() -> Outcome {
    let p: PamParams<f64> =
        calibrate_pam((0.5, 38.05), (0.5, 0.301)).map_err(|e| e.to_string())?.into_params(220.0, 0.6);
    let f = pam_force(&p, 0.5, 0.0).map_err(|e| e.to_string())?;
    let e = pam_free_strain(&p, 0.5).map_err(|e| e.to_string())?;
    let rf = (f - 38.05).abs() / 38.05;
    let re = (e - 0.301).abs() / 0.301;
    check(rf <= 1e-6 && re <= 1e-6, format!("F(0.5, 0) = {f:.9} N, free strain {e:.9}"))
}

fn pam_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_root = 0.0f64;
    for i in 0..1000 {
        let p = PamParams {
            rest_length: rng.gen_range(50.0..300.0),
            effective_diameter: rng.gen_range(2.0..12.0),
            braid_angle: rng.gen_range(10.0..50.0),
            tube_stiffness: rng.gen_range(0.0..20.0),
            max_pressure: 0.6,
        };
        let pressure = rng.gen_range(0.01..0.6);
        let (a, b) = (rng.gen_range(0.0..0.99), rng.gen_range(0.0..0.99));
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let f = |p: &PamParams<f64>, pr: f64, s: f64| pam_force(p, pr, s).unwrap();
        if f(&p, pressure, lo) < f(&p, pressure, hi) {
            return Err(format!("draw {i}: force rises between strain {lo} and {hi}"));
        }
        let free = PamParams { tube_stiffness: 0.0, ..p };
        let scale = rng.gen_range(0.0..1.0);
        let (f1, f2) = (f(&free, pressure, lo), f(&free, pressure * scale, lo));
        if (f2 - scale * f1).abs() > 1e-9 * f2.abs().max(1.0) {
            return Err(format!("draw {i}: force not linear in pressure ({f2} vs {})", scale * f1));
        }
        if (pam_free_strain(&free, pressure).unwrap() - closed_form_free_strain(&free)).abs() > 1e-8 {
            return Err(format!("draw {i}: free strain off the closed form"));
        }
        let eps = pam_free_strain(&p, pressure).unwrap();
        if mckibben_raw(&p, pressure, 0.0) > 0.0 {
            worst_root = worst_root.max(mckibben_raw(&p, pressure, eps).abs());
        }
    }
    check(worst_root < 1e-9, format!("1000 draws, worst free-strain residual {worst_root:.2e} N"))
}

fn equilibrium_oracle() -> Outcome {
    const GRID: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_cells = 0.0f64;
    let mut worst_grad = 0.0f64;
    for i in 0..100 {
        let s = single_joint(&mut rng);
        let j = &s.chain.joints[0];
        let sol = solve_chain(&s.chain, &s.pressures, None, &s.chain.rest(), SolverOptions::default())
            .map_err(|e| format!("instance {i}: {e}"))?;
        let cell = (j.max_angle - j.min_angle) / (GRID - 1) as f64;
        let (best, _) = (0..GRID)
            .map(|k| j.min_angle + k as f64 * cell)
            .map(|t| (t, energy(&s, t)))
            .fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        worst_cells = worst_cells.max((sol.config.angles[0] - best).abs() / cell);

        let h = 1e-3;
        let theta = loop {
            let t = rng.gen_range(j.min_angle..j.max_angle);
            if kinks(&s).iter().all(|k| (k - t).abs() > 10.0 * h) {
                break t;
            }
        };
        let r = chain_residual(&s.chain, &[theta], &s.pressures, &[]).unwrap()[0];
        let fd = -((energy(&s, theta + h) - energy(&s, theta - h)) / (2.0 * h)).to_degrees();
        worst_grad = worst_grad.max((r - fd).abs() / torque_scale(&s, theta).max(1.0));
    }
    check(
        worst_cells <= 1.0 && worst_grad <= 1e-6,
        format!("100 instances, worst offset {worst_cells:.3} cells, gradient error {worst_grad:.2e}"),
    )
}

fn rom() -> Outcome {
    let report = rom_experiment(&default_hand()).map_err(|e| e.to_string())?;
    let worst = report.rows.iter().flat_map(|r| r.deviation_deg).fold(0.0, f64::max);
    let relaxed = report.row("relaxed").unwrap().deviation_deg.into_iter().fold(0.0, f64::max);
    check(report.passed() && relaxed < 1e-6, format!("worst deviation {worst:.2e} deg, relaxed {relaxed:.2e} deg"))
}

fn forces() -> Outcome {
    let report = force_report(&default_hand(), &MEASURED_FINGERTIP, &MEASURED_GRASP).map_err(|e| e.to_string())?;
    let tip = report.entries.iter().find(|e| e.kind == "fingertip").unwrap();
    let grasp = report.entries.iter().find(|e| e.kind == "grasp").unwrap();
    let ok = (tip.force_n - 1.95).abs() <= 0.15 && (grasp.force_n - 2.97).abs() <= 0.25;
    check(ok, format!("fingertip {:.3} N, grasp {:.3} N", tip.force_n, grasp.force_n))
}

fn kapandji() -> Outcome {
    let hand = default_hand();
    let score = kapandji_test(&hand).map_err(|e| e.to_string())?.score;
    let mut scores = Vec::new();
    for k in 0..=40 {
        scores.push(kapandji_test_with(&hand, 2.0 * k as f64, false).map_err(|e| e.to_string())?.score);
    }
    let monotone = scores.windows(2).all(|w| w[0] <= w[1]);
    check(score == 6 && monotone, format!("score {score}, monotone over 0..80 mm: {monotone}"))
}

fn controller() -> Outcome {
    let hand = default_hand();
    let config = ControllerConfig::default();
    let dt = 0.01;
    let sphere = ContactScene::new(
        vec![Shape::Sphere { center_mm: [-5.0, 65.0, 38.0], radius_mm: 33.5 }],
        hand.experiment.penalty_stiffness,
    );
    let run = run_closed_loop(&hand, &sphere, &config, 3.5, dt).map_err(|e| e.to_string())?;
    for i in 0..run.trace[0].fingers.len() {
        let f: Vec<_> = run.trace.iter().map(|r| &r.fingers[i]).collect();
        let entry = f.iter().position(|x| x.phase == Phase::Hold).ok_or(format!("finger {i} never holds"))?;
        let crossing = f.iter().position(|x| x.sensor_kpa > config.threshold_kpa).unwrap();
        if entry > crossing + 1 {
            return Err(format!("finger {i} holds at step {entry}, crossed at {crossing}"));
        }
        let frozen = f[entry..].iter().all(|x| x.phase == Phase::Hold && x.lead_pressure == f[entry].lead_pressure);
        if !frozen {
            return Err(format!("finger {i} pressure moves during hold"));
        }
    }
    let empty = ContactScene::empty(hand.experiment.penalty_stiffness);
    let run = run_closed_loop(&hand, &empty, &config, 3.5, dt).map_err(|e| e.to_string())?;
    let at_cap = run
        .trace
        .iter()
        .find(|r| r.fingers.iter().all(|f| f.lead_pressure == config.pressure_cap_mpa))
        .ok_or("cap never reached")?
        .time;
    check((at_cap - 3.0).abs() <= dt + 1e-9, format!("hold frozen, entry within one step, cap at {at_cap:.2} s"))
}

fn suite() -> Outcome {
    let report = grasp_object_suite(&default_hand(), &default_objects(), &GraspSettings::default())
        .map_err(|e| e.to_string())?;
    let get = |n: &str| report.objects.iter().find(|o| o.name == n).unwrap();
    let heavy = get("box_5kg");
    let budget = heavy.diagnostic.as_deref().is_some_and(|d| d.contains("force budget"));
    let ok = get("sphere_67mm").success && get("box_272g").success && !heavy.success && budget;
    let summary: Vec<String> = report.objects.iter().map(|o| format!("{} {}", o.name, o.success)).collect();
    check(ok, summary.join(", "))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &Path| -> Result<Vec<(String, Vec<u8>)>, String> {
        let status = Command::new(env!("CARGO_BIN_EXE_musclesim"))
            .arg("--out")
            .arg(out)
            .args(["run", "suite"])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("run suite exited with {status}"));
        }
        let mut files: Vec<_> = fs::read_dir(out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        Ok(files)
    };
    let a = run(&dir.path().join("a"))?;
    let b = run(&dir.path().join("b"))?;
    check(!a.is_empty() && a == b, format!("{} artifacts compared", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("PAM endpoints", pam_endpoints),
        ("PAM properties", pam_properties),
        ("equilibrium oracle", equilibrium_oracle),
        ("ROM reproduction", rom),
        ("force reproduction", forces),
        ("Kapandji", kapandji),
        ("controller invariants", controller),
        ("grasp suite", suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {}: PASS {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
