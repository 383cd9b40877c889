//! Command-line front end. Exit codes: 0 all tolerances met, 1 a tolerance
//! or golden comparison missed, 2 bad arguments or invalid input, 3 i/o
//! failure, 4 solver failure or calibration without convergence.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::control::{run_closed_loop, write_trace_csv, ControlError, ControllerConfig, DEFAULT_DT_S};
use crate::experiments::{
    calibrate_hand, default_objects, encode_table, force_report, grasp_object_suite, kapandji_test_with, report_files,
    rom_experiment_with, write_artifacts, CalibrationError, CalibrationTargets, ExperimentReport, Format, GraspObject,
    GraspSettings, Manifest, Table, DEFAULT_GRASP_DURATION_S,
};
use crate::hand::{default_hand, initial_hand, parse_hand_description, serialize, validate, HandDescription};
use crate::mechanics::{ContactScene, MechanicsError};
use crate::pam::{force_strain_table, write_curves_csv, PamError};

pub const GOLDEN_ENV: &str = "MUSCLESIM_GOLDEN_DIR";
pub const DEFAULT_GOLDEN_DIR: &str = "golden";
pub const CALIBRATED_HAND_FILE: &str = "calibrated_hand.json";
pub const TRACE_FILE_STEM: &str = "trace";

#[derive(Debug, Parser)]
#[command(name = "musclesim", version, about = "Pneumatic tendon-driven hand simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Hand description (JSON). Defaults to the shipped calibrated hand.
    #[arg(long, global = true)]
    pub hand: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for randomized scenarios; the shipped commands are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Calibration targets (JSON), overriding the measured values.
    #[arg(long, global = true)]
    pub targets: Option<PathBuf>,
    /// Compare the written artifacts against the golden directory.
    #[arg(long, global = true)]
    pub check_golden: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Force-strain curves of the shipped muscle, one CSV per pressure.
    PamCurve {
        /// Comma-separated pressures in MPa.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        pressures: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Run an experiment and write its report.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        /// Object list (JSON array) for `grasp` and `suite`.
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Fit the unpublished parameters; starts from the uncalibrated hand
    /// unless `--hand` is given.
    Calibrate,
    /// Closed-loop grasp of a scene, writing the trace.
    GraspSim {
        scene: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRASP_DURATION_S)]
        duration: f64,
        #[arg(long, default_value_t = DEFAULT_DT_S)]
        dt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Rom,
    Forces,
    Grasp,
    Kapandji,
    Suite,
}

impl Experiment {
    fn as_str(self) -> &'static str {
        match self {
            Self::Rom => "rom",
            Self::Forces => "forces",
            Self::Grasp => "grasp",
            Self::Kapandji => "kapandji",
            Self::Suite => "suite",
        }
    }
}

/// Objects placed in the hand for `grasp-sim`; an empty list is allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub objects: Vec<GraspObject>,
    #[serde(default)]
    pub controller: ControllerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Tolerance = 1,
    Usage = 2,
    Io = 3,
    Solver = 4,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self { exit, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::new(Exit::Io, format!("{}: {e}", path.display()))
}

impl From<MechanicsError> for CliError {
    fn from(e: MechanicsError) -> Self {
        let exit = match e {
            MechanicsError::NoConvergence { .. } | MechanicsError::UnreachableConfig(_) => Exit::Solver,
            _ => Exit::Usage,
        };
        Self::new(exit, format!("{}: {e}", e.code()))
    }
}

impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Mechanics(m) => m.into(),
            e => Self::new(Exit::Usage, e.to_string()),
        }
    }
}

impl From<PamError> for CliError {
    fn from(e: PamError) -> Self {
        Self::new(Exit::Usage, e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::new(Exit::Usage, format!("{}: {e}", path.display())))
}

/// Parses and validates a hand file, reporting every problem found.
pub fn load_hand(path: &Path) -> Result<HandDescription<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let hand = parse_hand_description(&text).map_err(|errs| {
        let lines: Vec<String> = errs.iter().map(|e| e.to_string()).collect();
        CliError::new(Exit::Usage, format!("{}:\n  {}", path.display(), lines.join("\n  ")))
    })?;
    let violations = validate(&hand);
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| format!("{} ({}): {}", v.code, v.path, v.message)).collect();
        return Err(CliError::new(Exit::Usage, format!("{}:\n  {}", path.display(), lines.join("\n  "))));
    }
    Ok(hand)
}

fn hand_or(cli: &Cli, fallback: fn() -> HandDescription<f64>) -> Result<HandDescription<f64>, CliError> {
    cli.hand.as_deref().map_or_else(|| Ok(fallback()), load_hand)
}

fn targets(cli: &Cli) -> Result<CalibrationTargets, CliError> {
    let t: CalibrationTargets = match &cli.targets {
        Some(p) => read_json(p)?,
        None => CalibrationTargets::default(),
    };
    t.check().map_err(|m| CliError::new(Exit::Usage, format!("targets: {m}")))?;
    Ok(t)
}

fn golden_dir() -> PathBuf {
    std::env::var_os(GOLDEN_ENV).map_or_else(|| PathBuf::from(DEFAULT_GOLDEN_DIR), PathBuf::from)
}

/// Byte comparison of every written artifact with its golden counterpart.
fn check_golden(manifest: &Manifest, files: &[(String, Vec<u8>)], subdir: &str) -> Result<(), CliError> {
    let dir = golden_dir().join(subdir);
    let mut missed = Vec::new();
    for entry in &manifest.artifacts {
        let ours = files.iter().find(|(n, _)| *n == entry.file).map(|(_, b)| b.as_slice());
        match fs::read(dir.join(&entry.file)) {
            Ok(golden) if Some(golden.as_slice()) == ours => {}
            Ok(_) => missed.push(format!("{} differs", entry.file)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => missed.push(format!("{} has no golden file", entry.file)),
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    if missed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(Exit::Tolerance, format!("golden mismatch in {}: {}", dir.display(), missed.join(", "))))
    }
}

fn emit(cli: &Cli, files: Vec<(String, Vec<u8>)>, golden: &str) -> Result<(), CliError> {
    let manifest = write_artifacts(files.clone(), &cli.out).map_err(io_err(&cli.out))?;
    if cli.check_golden {
        check_golden(&manifest, &files, golden)?;
    }
    Ok(())
}

fn pam_curve(cli: &Cli, pressures: &[f64], points: usize) -> Result<Exit, CliError> {
    let hand = hand_or(cli, default_hand)?;
    let params = &hand.muscles.first().ok_or_else(|| CliError::new(Exit::Usage, "hand has no muscles"))?.pam;
    let curves = force_strain_table(params, pressures, points)?;
    let mut files = Vec::new();
    for c in &curves {
        let mut bytes = Vec::new();
        write_curves_csv(std::slice::from_ref(c), &mut bytes).map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
        let name = format!("pam_curve_{}mpa", c.pressure);
        let table = Table::from_csv(&name, &bytes).map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
        files.push(encode_table(&table, cli.format));
    }
    emit(cli, files, "pam-curve")?;
    Ok(Exit::Ok)
}

fn objects(path: Option<&Path>) -> Result<Vec<GraspObject>, CliError> {
    path.map_or_else(|| Ok(default_objects()), read_json)
}

fn run(cli: &Cli, experiment: Experiment, objects_path: Option<&Path>) -> Result<Exit, CliError> {
    let hand = hand_or(cli, default_hand)?;
    let t = targets(cli)?;
    let objs = objects(objects_path)?;
    let want = |e: Experiment| experiment == e || experiment == Experiment::Suite;

    let rom = || -> Result<Option<ExperimentReport>, CliError> {
        if !want(Experiment::Rom) {
            return Ok(None);
        }
        Ok(Some(ExperimentReport::Rom(rom_experiment_with(&hand, &t.rom)?)))
    };
    let forces = || -> Result<Option<ExperimentReport>, CliError> {
        if !want(Experiment::Forces) {
            return Ok(None);
        }
        Ok(Some(ExperimentReport::Forces(force_report(&hand, &t.fingertip, &t.grasp)?)))
    };
    let kapandji = || -> Result<Option<ExperimentReport>, CliError> {
        if !want(Experiment::Kapandji) {
            return Ok(None);
        }
        let mut r = kapandji_test_with(&hand, hand.experiment.kapandji_tolerance, false)?;
        r.target_score = t.kapandji_score;
        Ok(Some(ExperimentReport::Kapandji(r)))
    };
    let grasp = || -> Result<Option<ExperimentReport>, CliError> {
        if !want(Experiment::Grasp) {
            return Ok(None);
        }
        Ok(Some(ExperimentReport::Suite(grasp_object_suite(&hand, &objs, &GraspSettings::default())?)))
    };

    // Independent experiments run side by side; the report order is fixed.
    let results = std::thread::scope(|s| {
        let handles = [s.spawn(rom), s.spawn(forces), s.spawn(kapandji), s.spawn(grasp)];
        handles.map(|h| h.join().expect("experiment thread panicked"))
    });
    let mut reports = Vec::new();
    for r in results {
        if let Some(r) = r? {
            reports.push(r);
        }
    }
    emit(cli, report_files(&reports, cli.format), &format!("run-{}", experiment.as_str()))?;
    for r in &reports {
        if !r.passed() {
            return Ok(Exit::Tolerance);
        }
    }
    Ok(Exit::Ok)
}

fn calibrate(cli: &Cli) -> Result<Exit, CliError> {
    let start = hand_or(cli, initial_hand)?;
    let t = targets(cli)?;
    let (hand, report, exit) = match calibrate_hand(&start, &t) {
        Ok((h, r)) => (h, r, Exit::Ok),
        Err(CalibrationError::NoConvergence { hand, report }) => (*hand, *report, Exit::Solver),
        Err(CalibrationError::InvalidTargets(m)) => return Err(CliError::new(Exit::Usage, m)),
        Err(CalibrationError::Mechanics(e)) => return Err(e.into()),
    };
    let mut files = report_files(&[ExperimentReport::Fit(report)], cli.format);
    files.push((CALIBRATED_HAND_FILE.to_string(), serialize(&hand).into_bytes()));
    emit(cli, files, "calibrate")?;
    if exit == Exit::Solver {
        eprintln!("calibration did not meet every target; best-so-far written to {}", cli.out.display());
    }
    Ok(exit)
}

fn grasp_sim(cli: &Cli, scene_path: &Path, duration: f64, dt: f64) -> Result<Exit, CliError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::new(Exit::Usage, format!("--dt must be positive, got {dt}")));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(CliError::new(Exit::Usage, format!("--duration must be positive, got {duration}")));
    }
    let hand = hand_or(cli, default_hand)?;
    let scene: SceneFile = read_json(scene_path)?;
    let shapes = scene.objects.iter().map(|o| o.shape.clone()).collect();
    let contacts = ContactScene::new(shapes, hand.experiment.penalty_stiffness);
    let run = run_closed_loop(&hand, &contacts, &scene.controller, duration, dt)?;
    let mut bytes = Vec::new();
    write_trace_csv(&run.trace, &mut bytes).map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
    let files = match cli.format {
        Format::Csv => vec![(format!("{TRACE_FILE_STEM}.csv"), bytes)],
        Format::Json => {
            let table = Table::from_csv(TRACE_FILE_STEM, &bytes).map_err(|e| CliError::new(Exit::Io, e.to_string()))?;
            vec![encode_table(&table, Format::Json)]
        }
    };
    emit(cli, files, "grasp-sim")?;
    let unsolved = run.trace.iter().flat_map(|r| &r.fingers).filter(|f| !f.solved).count();
    if unsolved > 0 {
        eprintln!("{unsolved} finger steps kept their last good posture after a failed solve");
        return Ok(Exit::Solver);
    }
    Ok(Exit::Ok)
}

pub fn execute(cli: &Cli) -> Result<Exit, CliError> {
    match &cli.command {
        Command::PamCurve { pressures, points } => pam_curve(cli, pressures, *points),
        Command::Run { experiment, objects } => run(cli, *experiment, objects.as_deref()),
        Command::Calibrate => calibrate(cli),
        Command::GraspSim { scene, duration, dt } => grasp_sim(cli, scene, *duration, *dt),
    }
}

/// Parses the arguments and runs; usage errors exit 2 through clap.
pub fn main_with_args<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(exit) => exit.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit.into()
        }
    }
}
