//! The `nodal` subcommands. Each returns the process exit status.

use std::f64::consts::PI;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nodal_core::model::{build_truncation, ProblemDoc};
use nodal_core::periodic::{self, FixedPoint, PeriodicDoc, TwistReport};
use nodal_core::shoot::sweep::lambda_sweep;
use nodal_core::shoot::{solve_targets, Branch, ProfileRecord, Rejection, SolutionProfile};
use serde::{Deserialize, Serialize};

use crate::battery::{self, BatteryOptions, CheckOutcome};
use crate::config::Loaded;
use crate::json;
use crate::svg::{self, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 3;

/// Output of `solve`, written to `solutions.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionsFile {
    pub problem: ProblemDoc,
    pub lambda: f64,
    pub targets: Vec<u32>,
    pub missing: Vec<u32>,
    pub eta_argmax_pos: Option<f64>,
    pub eta_argmax_neg: Option<f64>,
    pub max_winding: f64,
    pub pair_separation_ok: bool,
    pub classes: Vec<ClassFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassFile {
    pub j: u32,
    pub target: f64,
    pub brackets: usize,
    pub profiles: Vec<ProfileRecord>,
    pub rejected: Vec<Rejection>,
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Small => "small",
        Branch::Large => "large",
    }
}

fn sign_name(s: i8) -> &'static str {
    if s > 0 {
        "pos"
    } else {
        "neg"
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn series_style(sign: i8, branch: Branch) -> (&'static str, bool) {
    let color = if sign > 0 { "#1f5fa8" } else { "#c0392b" };
    (color, branch == Branch::Large)
}

fn profile_series(p: &SolutionProfile) -> Series {
    let (color, dashed) = series_style(p.sign, p.branch);
    Series {
        label: format!("{} {}, η = {:.4e}", branch_name(p.branch), sign_name(p.sign), p.eta),
        color,
        dashed,
        points: p.trajectory.samples.iter().map(|s| (s.r, s.u)).collect(),
    }
}

fn class_title(j: u32, lambda: f64) -> String {
    format!("j = {j}, λ = {lambda}: small (solid) and large (dashed) profiles")
}

pub fn solve(loaded: &Loaded, out: &Path) -> Result<i32> {
    let sys = build_truncation(&loaded.problem)?;
    let targets = &loaded.config.targets;
    if targets.is_empty() {
        bail!("no targets requested");
    }
    let rep = solve_targets(&sys, targets, &loaded.solve_options())?;
    let prof_dir = out.join("profiles");
    let plot_dir = out.join("plots");
    ensure_dir(&prof_dir)?;
    ensure_dir(&plot_dir)?;
    let mut classes = Vec::new();
    for t in &rep.targets {
        let mut records = Vec::new();
        let mut series = Vec::new();
        let mut seen: Vec<(i8, Branch, usize)> = Vec::new();
        for p in &t.profiles {
            let idx = match seen.iter_mut().find(|(s, b, _)| *s == p.sign && *b == p.branch) {
                Some(e) => {
                    e.2 += 1;
                    e.2
                }
                None => {
                    seen.push((p.sign, p.branch, 0));
                    0
                }
            };
            let name = format!("j{}_{}_{}_{}.csv", t.j, sign_name(p.sign), branch_name(p.branch), idx);
            let path = prof_dir.join(&name);
            let f = fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
            p.trajectory.write_csv(BufWriter::new(f))?;
            records.push(p.record(Some(format!("profiles/{name}"))));
            series.push(profile_series(p));
        }
        let svg = svg::render(&class_title(t.j, rep.lambda), "r", "u", &series);
        fs::write(plot_dir.join(format!("j{}.svg", t.j)), svg)?;
        classes.push(ClassFile {
            j: t.j,
            target: t.target,
            brackets: t.brackets,
            profiles: records,
            rejected: t.rejected.clone(),
        });
    }
    let missing = rep.missing();
    let file = SolutionsFile {
        problem: loaded.problem_doc.clone(),
        lambda: rep.lambda,
        targets: targets.clone(),
        missing: missing.clone(),
        eta_argmax_pos: rep.eta_argmax_pos,
        eta_argmax_neg: rep.eta_argmax_neg,
        max_winding: rep.max_winding(),
        pair_separation_ok: rep.pair_separation_ok(),
        classes,
    };
    json::write(&out.join("solutions.json"), &file)?;
    let total: usize = file.classes.iter().map(|c| c.profiles.len()).sum();
    eprintln!("solve: {total} profiles for {} classes", file.classes.len());
    if missing.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("solve: no solution found for j = {missing:?}");
        Ok(EXIT_INCOMPLETE)
    }
}

pub fn sweep(loaded: &Loaded, out: &Path) -> Result<i32> {
    let cfg = &loaded.config.sweep;
    let rep = lambda_sweep(&loaded.problem, &cfg.lambdas, cfg.k_max, &loaded.solve_options())?;
    ensure_dir(out)?;
    json::write(&out.join("sweep.json"), &rep)?;
    let f = fs::File::create(out.join("sweep.csv"))?;
    rep.write_csv(BufWriter::new(f))?;
    for e in &rep.entries {
        eprintln!("sweep: lambda = {} nodal count = {}", e.lambda, e.nodal_count);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicFile {
    pub problem: PeriodicDoc,
    pub k: u32,
    pub twist: Vec<TwistReport>,
    pub lambda: Option<f64>,
    pub witness_radius: Option<f64>,
    pub fixed_points: Vec<PeriodicSolution>,
    pub area_distortion: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicSolution {
    #[serde(flatten)]
    pub point: FixedPoint,
    pub csv_path: String,
}

pub fn periodic(loaded: &Loaded, out: &Path) -> Result<i32> {
    let cfg = &loaded.config.periodic;
    let base = cfg.problem.clone().into_spec()?;
    let lambdas = if cfg.lambdas.is_empty() {
        vec![base.lambda]
    } else {
        cfg.lambdas.clone()
    };
    let reports = periodic::twist_sweep(&base, cfg.k, &lambdas, cfg.radii)?;
    ensure_dir(out)?;
    let mut file = PeriodicFile {
        problem: cfg.problem.clone(),
        k: cfg.k,
        twist: reports.clone(),
        lambda: None,
        witness_radius: None,
        fixed_points: Vec::new(),
        area_distortion: None,
        error: None,
    };
    let found = reports.last().filter(|r| r.found());
    let Some(found) = found else {
        let err = reports
            .last()
            .map_or_else(|| "no lambda given".to_string(), |r| r.require().unwrap_err().to_string());
        eprintln!("periodic: {err}");
        file.error = Some(err);
        json::write(&out.join("periodic.json"), &file)?;
        return Ok(EXIT_INCOMPLETE);
    };
    let spec = base.with_lambda(found.lambda)?;
    let witness = found.require()?;
    file.lambda = Some(found.lambda);
    file.witness_radius = Some(witness);
    let inner = found.circles[0].radius;
    let dir = out.join("periodic");
    ensure_dir(&dir)?;
    let mut status = EXIT_OK;
    for j in 1..=cfg.k {
        match periodic::find_periodic(&spec, j, inner, witness, &cfg.search) {
            Ok(points) => {
                for (i, p) in points.into_iter().enumerate() {
                    let name = format!("orbit_j{j}_{i}.csv");
                    let f = fs::File::create(dir.join(&name))?;
                    periodic::write_orbit_csv(&spec, (p.u0, p.v0), BufWriter::new(f))?;
                    file.fixed_points.push(PeriodicSolution {
                        point: p.rounded(),
                        csv_path: format!("periodic/{name}"),
                    });
                }
            }
            Err(e) => {
                eprintln!("periodic: j = {j}: {e}");
                file.error = Some(e.to_string());
                status = EXIT_INCOMPLETE;
            }
        }
    }
    let z: Vec<(f64, f64)> = file.fixed_points.iter().map(|p| (p.point.u0, p.point.v0)).collect();
    if !z.is_empty() {
        file.area_distortion = Some(periodic::area_distortion(&spec, &z, 1e-5)?);
    }
    eprintln!(
        "periodic: twist at lambda = {}, {} fixed points (winding {:.3} turns)",
        found.lambda,
        file.fixed_points.len(),
        file.fixed_points.first().map_or(0.0, |p| p.point.winding / (2.0 * PI))
    );
    json::write(&out.join("periodic.json"), &file)?;
    Ok(status)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidateFile {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

pub fn validate(loaded: &Loaded, out: &Path, seed: u64) -> Result<i32> {
    let v = &loaded.config.validate;
    let opts = BatteryOptions {
        seed,
        random_systems: v.random_systems,
        rotation_j_max: v.rotation_j_max,
        oracle_shots: v.oracle_shots,
        oracle_panels: v.oracle_panels,
    };
    let checks = battery::run_checks(opts, &v.checks)?;
    for c in &checks {
        eprintln!("[{}] {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    let passed = checks.iter().all(|c| c.passed);
    ensure_dir(out)?;
    json::write(&out.join("validate.json"), &ValidateFile { seed, passed, checks })?;
    Ok(if passed { EXIT_OK } else { EXIT_INCOMPLETE })
}

fn read_profile_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pts = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let r: f64 = row.get(0).context("missing r")?.parse()?;
        let u: f64 = row.get(1).context("missing u")?.parse()?;
        pts.push((r, u));
    }
    Ok(pts)
}

/// Re-renders the per-class plots from `solutions.json` in `out`.
pub fn plot(out: &Path) -> Result<i32> {
    let path = out.join("solutions.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let file: SolutionsFile = serde_json::from_str(&text)?;
    let plot_dir = out.join("plots");
    ensure_dir(&plot_dir)?;
    for c in &file.classes {
        let mut series = Vec::new();
        for p in &c.profiles {
            let Some(rel) = &p.csv_path else { continue };
            let (color, dashed) = series_style(p.sign, p.branch);
            series.push(Series {
                label: format!("{} {}, η = {:.4e}", branch_name(p.branch), sign_name(p.sign), p.eta),
                color,
                dashed,
                points: read_profile_csv(&out.join(PathBuf::from(rel)))?,
            });
        }
        let svg = svg::render(&class_title(c.j, file.lambda), "r", "u", &series);
        fs::write(plot_dir.join(format!("j{}.svg", c.j)), svg)?;
    }
    eprintln!("plot: {} plots written", file.classes.len());
    Ok(EXIT_OK)
}
