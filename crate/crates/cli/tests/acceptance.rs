//! Acceptance suite: one line per criterion.
//!
//! Run with `cargo test --release -p nodal-cli --test acceptance -- --nocapture`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nodal_cli::battery::{Battery, BatteryOptions, CheckOutcome};

struct Line {
    id: u32,
    title: &'static str,
    passed: bool,
    note: String,
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("thread pool")
        .install(f)
}

fn check(battery: &mut Battery, name: &str) -> (CheckOutcome, Duration) {
    let t0 = Instant::now();
    let out = battery.run(name).unwrap_or_else(|e| panic!("check {name} failed to run: {e:#}"));
    (out, t0.elapsed())
}

fn field(c: &CheckOutcome, key: &str) -> String {
    c.details.get(key).map_or_else(|| "-".into(), |v| v.to_string())
}

fn nodal(out: &Path, threads: usize, args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_nodal"))
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--out")
        .arg(out)
        .args(args)
        .status()
        .expect("run nodal");
    status.code().unwrap_or(-1)
}

fn determinism() -> (bool, String) {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("validate.json");
    std::fs::write(&cfg, r#"{"validate": {"checks": ["figure", "oracle", "rotation"]}}"#).expect("write config");
    let cfg = cfg.to_str().expect("utf-8 path");
    let mut files: Vec<Vec<Vec<u8>>> = Vec::new();
    let mut codes = Vec::new();
    for threads in [1, 8] {
        let out = dir.path().join(format!("t{threads}"));
        codes.push(nodal(&out, threads, &["solve"]));
        codes.push(nodal(&out, threads, &["--config", cfg, "validate"]));
        files.push(
            ["solutions.json", "validate.json"]
                .iter()
                .map(|f| std::fs::read(out.join(f)).unwrap_or_default())
                .collect(),
        );
    }
    let same = files[0] == files[1] && files[0].iter().all(|f| !f.is_empty());
    let ok = same && codes.iter().all(|&c| c == 0);
    (ok, format!("exit codes {codes:?}, byte-identical {same}"))
}

#[test]
fn acceptance() {
    let mut battery = Battery::new(BatteryOptions::default()).expect("battery");
    let mut lines = Vec::new();

    let (fig, t_fig) = single_threaded(|| check(&mut battery, "figure"));
    lines.push(Line {
        id: 1,
        title: "figure reproduction",
        passed: fig.passed && t_fig < Duration::from_secs(60),
        note: format!("{} profiles in {:.2?} single-threaded", field(&fig, "profiles"), t_fig),
    });

    let (count, _) = check(&mut battery, "count");
    lines.push(Line {
        id: 2,
        title: "count property",
        passed: count.passed,
        note: format!("nodal count {} (need {})", field(&count, "nodal_count"), field(&count, "required")),
    });

    let (small, _) = check(&mut battery, "small");
    lines.push(Line {
        id: 3,
        title: "small-solution lemma",
        passed: small.passed,
        note: format!(
            "{} shots below eta* = {}, violations {}",
            field(&small, "shots"),
            field(&small, "eta_star"),
            field(&small, "violations")
        ),
    });

    let (oracle, _) = check(&mut battery, "oracle");
    lines.push(Line {
        id: 4,
        title: "oracle equivalence",
        passed: oracle.passed,
        note: format!(
            "max sup distance {}, a-priori bound holds {}",
            field(&oracle, "max_sup_distance"),
            field(&oracle, "bound_holds")
        ),
    });

    let (angular, _) = check(&mut battery, "angular");
    lines.push(Line {
        id: 5,
        title: "angular lemmas",
        passed: angular.passed,
        note: format!(
            "{} trajectories, min pair increment {}, min zero increment {}",
            field(&angular, "trajectories"),
            field(&angular, "min_pair_increment"),
            field(&angular, "min_zero_increment")
        ),
    });

    let (singular, _) = check(&mut battery, "singular");
    let last_slope = singular.details["entries"]
        .as_array()
        .and_then(|e| e.last())
        .map_or("-".into(), |e| e["min_slope"].to_string());
    lines.push(Line {
        id: 6,
        title: "singular limit",
        passed: singular.passed,
        note: format!(
            "distance decreasing {}, min slope at 500 = {last_slope}",
            field(&singular, "distance_decreasing")
        ),
    });

    let (rot, t_rot) = single_threaded(|| check(&mut battery, "rotation"));
    let (energy, _) = check(&mut battery, "energy");
    lines.push(Line {
        id: 7,
        title: "randomized rotation",
        passed: rot.passed && t_rot < Duration::from_secs(120),
        note: format!(
            "100 systems x j = 1..5 in {:.2?} single-threaded; energy monotonicity {}",
            t_rot, energy.passed
        ),
    });

    let (neumann, _) = check(&mut battery, "neumann");
    lines.push(Line {
        id: 8,
        title: "Neumann exclusion",
        passed: neumann.passed,
        note: format!("profiles for j = 0, 1, 2: {}", field(&neumann, "profiles")),
    });

    let (per, _) = check(&mut battery, "periodic");
    lines.push(Line {
        id: 9,
        title: "periodic twist",
        passed: per.passed,
        note: format!(
            "twist at lambda = {}, {} fixed points, max residual {}",
            field(&per, "lambda"),
            field(&per, "fixed_points"),
            field(&per, "max_residual")
        ),
    });

    let (det_ok, det_note) = determinism();
    lines.push(Line {
        id: 10,
        title: "determinism",
        passed: det_ok,
        note: det_note,
    });

    for l in &lines {
        println!(
            "[{}] criterion {:>2}: {} ({})",
            if l.passed { "PASS" } else { "FAIL" },
            l.id,
            l.title,
            l.note
        );
    }
    let failed: Vec<u32> = lines.iter().filter(|l| !l.passed).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
