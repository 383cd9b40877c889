use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::calibrate::FitReport;
use super::forces::ForceReport;
use super::kapandji::KapandjiReport;
use super::rom::RomReport;
use super::suite::SuiteReport;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.md";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentReport {
    Rom(RomReport),
    Forces(ForceReport),
    Kapandji(KapandjiReport),
    Suite(SuiteReport),
    Fit(FitReport),
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        match self {
            Self::Rom(r) => r.passed(),
            Self::Forces(r) => r.passed(),
            Self::Kapandji(r) => r.score == r.target_score,
            Self::Suite(r) => r.passed(),
            Self::Fit(r) => r.converged,
        }
    }
}

/// A flat table; the unit both output formats are written from.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn tables(&self) -> Vec<Table> {
        match self {
            Self::Rom(r) => vec![Table {
                name: "rom".into(),
                header: strings(&[
                    "posture",
                    "alpha_deg",
                    "beta_deg",
                    "gamma_deg",
                    "target_alpha",
                    "target_beta",
                    "target_gamma",
                    "deviation_alpha",
                    "deviation_beta",
                    "deviation_gamma",
                    "flexor_pressure_mpa",
                    "extensor_pressure_mpa",
                    "within_tolerance",
                ]),
                rows: r
                    .rows
                    .iter()
                    .map(|row| {
                        let mut v = vec![row.posture.to_string()];
                        v.extend(row.angles_deg.iter().map(|&a| num(a)));
                        v.extend(row.target_deg.iter().map(|&a| num(a)));
                        v.extend(row.deviation_deg.iter().map(|&a| num(a)));
                        v.push(num(row.flexor_pressure_mpa));
                        v.push(num(row.extensor_pressure_mpa));
                        v.push(row.within_tolerance.to_string());
                        v
                    })
                    .collect(),
            }],
            Self::Forces(r) => {
                let mut rows: Vec<Vec<String>> = r
                    .entries
                    .iter()
                    .map(|e| {
                        vec![
                            e.kind.to_string(),
                            opt(e.finger.as_ref()),
                            num(e.pressure_mpa),
                            num(e.force_n),
                            num(e.target_n),
                            num(e.uncertainty_n),
                            num(e.deviation_n),
                            e.within_tolerance.to_string(),
                        ]
                    })
                    .collect();
                for h in &r.human_reference {
                    rows.push(vec![
                        format!("human_{}", h.effort),
                        String::new(),
                        String::new(),
                        String::new(),
                        num(h.force_n),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
                vec![Table {
                    name: "forces".into(),
                    header: strings(&[
                        "kind",
                        "finger",
                        "pressure_mpa",
                        "force_n",
                        "target_n",
                        "uncertainty_n",
                        "deviation_n",
                        "within_tolerance",
                    ]),
                    rows,
                }]
            }
            Self::Kapandji(r) => vec![Table {
                name: "kapandji".into(),
                header: strings(&["index", "target", "x_mm", "y_mm", "z_mm", "distance_mm", "reachable"]),
                rows: r
                    .targets
                    .iter()
                    .map(|t| {
                        vec![
                            t.index.to_string(),
                            t.name.to_string(),
                            num(t.point_mm[0]),
                            num(t.point_mm[1]),
                            num(t.point_mm[2]),
                            num(t.distance_mm),
                            t.reachable.to_string(),
                        ]
                    })
                    .collect(),
            }],
            Self::Suite(r) => vec![Table {
                name: "suite".into(),
                header: strings(&[
                    "object",
                    "mass_kg",
                    "fingers_in_hold",
                    "total_normal_force_n",
                    "required_force_n",
                    "margin_n",
                    "success",
                    "expected_success",
                    "diagnostic",
                ]),
                rows: r
                    .objects
                    .iter()
                    .map(|o| {
                        vec![
                            o.name.clone(),
                            num(o.mass_kg),
                            o.fingers_in_hold.to_string(),
                            num(o.total_normal_force_n),
                            num(o.required_force_n),
                            num(o.margin_n),
                            o.success.to_string(),
                            opt(o.expected_success),
                            opt(o.diagnostic.as_ref()),
                        ]
                    })
                    .collect(),
            }],
            Self::Fit(r) => vec![
                Table {
                    name: "fit_parameters".into(),
                    header: strings(&["parameter", "initial", "value", "lower", "upper"]),
                    rows: r
                        .parameters
                        .iter()
                        .map(|p| vec![p.name.to_string(), num(p.initial), num(p.value), num(p.lower), num(p.upper)])
                        .collect(),
                },
                Table {
                    name: "fit_residuals".into(),
                    header: strings(&["term", "simulated", "target", "scale", "within_tolerance"]),
                    rows: r
                        .residuals
                        .iter()
                        .map(|t| {
                            vec![
                                t.name.clone(),
                                num(t.simulated),
                                num(t.target),
                                num(t.scale),
                                t.within_tolerance.to_string(),
                            ]
                        })
                        .collect(),
                },
            ],
        }
    }
}

impl Table {
    /// Reads back a CSV with a header row.
    pub fn from_csv(name: &str, bytes: &[u8]) -> csv::Result<Self> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<csv::Result<_>>()?;
        Ok(Self { name: name.to_string(), header, rows })
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    /// Same cells as the CSV; numbers and booleans typed, empty cells null.
    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| {
                        let val = if v.is_empty() {
                            Value::Null
                        } else if let Ok(b) = v.parse::<bool>() {
                            Value::Bool(b)
                        } else if let Some(n) = v.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                            Value::Number(n)
                        } else {
                            Value::String(v.clone())
                        };
                        (k.clone(), val)
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let mut out = serde_json::to_vec_pretty(&rows).expect("json value serializes");
        out.push(b'\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

fn f2(v: f64) -> String {
    format!("{v:.2}")
}

/// Human-readable account of the reports with the measured values beside
/// the simulated ones.
pub fn summary_markdown(reports: &[ExperimentReport]) -> String {
    let mut s = String::from("# Experiment summary\n\n");
    s.push_str(
        "Posture and force values are fit-reproductions: moment arms, joint stiffnesses and slack are \
         calibrated so the model reproduces the measurements, not predicted from first principles.\n",
    );
    for r in reports {
        s.push('\n');
        match r {
            ExperimentReport::Rom(r) => {
                let _ = writeln!(s, "## Range of motion ({} finger)\n", r.finger);
                s.push_str("| posture | alpha | beta | gamma | measured | max deviation | ok |\n|---|---|---|---|---|---|---|\n");
                for row in &r.rows {
                    let dev = row.deviation_deg.iter().copied().fold(0.0, f64::max);
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} | {} / {} / {} | {} | {} |",
                        row.posture,
                        f2(row.angles_deg[0]),
                        f2(row.angles_deg[1]),
                        f2(row.angles_deg[2]),
                        row.target_deg[0],
                        row.target_deg[1],
                        row.target_deg[2],
                        f2(dev),
                        if row.within_tolerance { "yes" } else { "no" }
                    );
                }
            }
            ExperimentReport::Forces(r) => {
                s.push_str("## Forces\n\n| setup | pressure (MPa) | simulated (N) | measured (N) | ok |\n|---|---|---|---|---|\n");
                for e in &r.entries {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} ± {} | {} |",
                        e.kind,
                        e.pressure_mpa,
                        f2(e.force_n),
                        e.target_n,
                        e.uncertainty_n,
                        if e.within_tolerance { "yes" } else { "no" }
                    );
                }
                for h in &r.human_reference {
                    let _ = writeln!(s, "| human, {} effort | | | {} | |", h.effort, h.force_n);
                }
            }
            ExperimentReport::Kapandji(r) => {
                let _ = writeln!(
                    s,
                    "## Kapandji\n\nScore {} (measured {}), tolerance {} mm.\n",
                    r.score, r.target_score, r.tolerance_mm
                );
                s.push_str("| # | target | closest approach (mm) | reached |\n|---|---|---|---|\n");
                for t in &r.targets {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} |",
                        t.index,
                        t.name,
                        f2(t.distance_mm),
                        if t.reachable { "yes" } else { "no" }
                    );
                }
            }
            ExperimentReport::Suite(r) => {
                let _ = writeln!(s, "## Object grasps (friction {}, cap {} MPa)\n", r.friction, r.pressure_cap_mpa);
                s.push_str("| object | mass (kg) | fingers in hold | normal force (N) | required (N) | held | expected |\n|---|---|---|---|---|---|---|\n");
                for o in &r.objects {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} | {} | {} | {} |",
                        o.name,
                        o.mass_kg,
                        o.fingers_in_hold,
                        f2(o.total_normal_force_n),
                        f2(o.required_force_n),
                        if o.success { "yes" } else { "no" },
                        o.expected_success.map_or("-", |e| if e { "yes" } else { "no" })
                    );
                }
                for o in r.objects.iter().filter(|o| o.diagnostic.is_some()) {
                    let _ = writeln!(s, "\n{}: {}", o.name, o.diagnostic.as_deref().unwrap_or_default());
                }
            }
            ExperimentReport::Fit(r) => {
                let _ = writeln!(
                    s,
                    "## Calibration\n\n{} iterations, objective {:.3e} -> {:.3e}, targets {}.\n",
                    r.iterations,
                    r.objective_initial,
                    r.objective_final,
                    if r.converged { "met" } else { "not met" }
                );
                s.push_str("| term | simulated | target | ok |\n|---|---|---|---|\n");
                for t in &r.residuals {
                    let _ = writeln!(
                        s,
                        "| {} | {} | {} | {} |",
                        t.name,
                        f2(t.simulated),
                        t.target,
                        if t.within_tolerance { "yes" } else { "no" }
                    );
                }
            }
        }
    }
    s
}

/// Encodes a table in the requested format under `<name>.<ext>`.
pub fn encode_table(t: &Table, format: Format) -> (String, Vec<u8>) {
    match format {
        Format::Csv => (format!("{}.csv", t.name), t.to_csv()),
        Format::Json => (format!("{}.json", t.name), t.to_json()),
    }
}

/// Writes the files atomically and then a manifest listing each with its
/// SHA-256, sorted by file name.
pub fn write_artifacts(mut files: Vec<(String, Vec<u8>)>, out_dir: &Path) -> io::Result<Manifest> {
    fs::create_dir_all(out_dir)?;
    files.sort_by(|a, b| a.0.cmp(&b.0));
    let mut manifest = Manifest::default();
    for (name, bytes) in &files {
        write_atomic(&out_dir.join(name), bytes)?;
        manifest.artifacts.push(ManifestEntry { file: name.clone(), sha256: sha256_hex(bytes) });
    }
    let mut m = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    m.push(b'\n');
    write_atomic(&out_dir.join(MANIFEST_FILE), &m)?;
    Ok(manifest)
}

/// Every table of every report plus a summary, in memory.
pub fn report_files(reports: &[ExperimentReport], format: Format) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> =
        reports.iter().flat_map(|r| r.tables()).map(|t| encode_table(&t, format)).collect();
    if !reports.is_empty() {
        files.push((SUMMARY_FILE.to_string(), summary_markdown(reports).into_bytes()));
    }
    files
}

/// Writes every table of every report plus a summary, then a manifest of
/// all files with their SHA-256. No reports gives an empty manifest.
pub fn export_report(reports: &[ExperimentReport], out_dir: &Path, format: Format) -> io::Result<Manifest> {
    write_artifacts(report_files(reports, format), out_dir)
}
