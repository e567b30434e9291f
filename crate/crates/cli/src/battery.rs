//! The invariant battery run by `nodal validate`.
//!
//! Each check works on a fixed reference setup (the planar ball with
//! `R = 10`, `q = 1`, `g(u) = u^3`) so that its verdict does not depend on
//! the run configuration, apart from the seed and the battery sizes.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use nodal_core::integrate::{picard_solve, shoot_rk, ShotInput, ShotOptions, Trajectory};
use nodal_core::model::build_truncation;
use nodal_core::periodic::{self, PeriodicSpec, SearchOptions};
use nodal_core::phase::{stored_lift, verify_angular_lemmas};
use nodal_core::rotation::{self, BoundPair};
use nodal_core::shoot::small::{eps_limit, estimate_eta_star_small};
use nodal_core::shoot::sweep::singular_limit_diagnostics;
use nodal_core::shoot::{solve_targets, Branch, SolveOptions, SolveReport};
use nodal_core::{BoundaryKind, ProblemSpec, ScalarFn, TruncatedSystem};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

/// Names of all checks, in run order.
pub const CHECKS: [&str; 10] = [
    "figure", "count", "small", "oracle", "angular", "singular", "rotation", "energy", "neumann", "periodic",
];

const RADIUS: f64 = 10.0;
const LAMBDA: f64 = 5.0;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub details: Value,
}

#[derive(Debug, Clone)]
pub struct BatteryOptions {
    pub seed: u64,
    pub random_systems: usize,
    pub rotation_j_max: u32,
    pub oracle_shots: usize,
    pub oracle_panels: usize,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            random_systems: 100,
            rotation_j_max: 5,
            oracle_shots: 20,
            oracle_panels: 1 << 17,
        }
    }
}

/// The reference problem.
pub fn reference_problem(lambda: f64) -> ProblemSpec {
    ProblemSpec::ball(2, RADIUS, lambda, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u))
        .with_delta(1.0)
        .with_superlinear(true)
}

/// The bounds used for the randomized rotation check.
pub fn reference_bounds() -> BoundPair {
    BoundPair::new(
        ScalarFn::new(|s| s),
        ScalarFn::new(|s| 2.0 * s + s * s * s),
        ScalarFn::new(|s| 3.0 * s + s * s * s),
        ScalarFn::new(|s| s),
        1.0,
    )
    .expect("reference bounds are ordered")
}

/// Runs checks and caches the shared work between them.
pub struct Battery {
    opts: BatteryOptions,
    shot: ShotOptions,
    sys: TruncatedSystem,
    figure: Option<SolveReport>,
    small_shots: Option<Vec<Trajectory>>,
    oracle_shots: Option<Vec<Trajectory>>,
}

impl Battery {
    pub fn new(opts: BatteryOptions) -> Result<Self> {
        Ok(Self {
            opts,
            shot: ShotOptions::default(),
            sys: build_truncation(&reference_problem(LAMBDA))?,
            figure: None,
            small_shots: None,
            oracle_shots: None,
        })
    }

    pub fn run(&mut self, name: &str) -> Result<CheckOutcome> {
        let (passed, details) = match name {
            "figure" => self.figure_check()?,
            "count" => self.count_check()?,
            "small" => self.small_check()?,
            "oracle" => self.oracle_check()?,
            "angular" => self.angular_check()?,
            "singular" => self.singular_check()?,
            "rotation" => self.rotation_check()?,
            "energy" => self.energy_check()?,
            "neumann" => self.neumann_check()?,
            "periodic" => self.periodic_check()?,
            other => bail!("unknown check {other:?}; known: {}", CHECKS.join(", ")),
        };
        Ok(CheckOutcome {
            name: name.to_string(),
            passed,
            details,
        })
    }

    fn figure_report(&mut self) -> Result<&SolveReport> {
        if self.figure.is_none() {
            let opts = SolveOptions {
                shot: self.shot,
                ..SolveOptions::default()
            };
            self.figure = Some(solve_targets(&self.sys, &[0, 1, 2, 3], &opts)?);
        }
        Ok(self.figure.as_ref().expect("just computed"))
    }

    /// Small and large profiles of both signs for `j = 0..3`.
    fn figure_check(&mut self) -> Result<(bool, Value)> {
        let rep = self.figure_report()?;
        let mut ok = true;
        let mut classes = Vec::new();
        let mut total = 0;
        for t in &rep.targets {
            let counts: Vec<usize> = [(1, Branch::Small), (1, Branch::Large), (-1, Branch::Small), (-1, Branch::Large)]
                .iter()
                .map(|&(s, b)| t.count(s, b))
                .collect();
            let zeros_ok = t.profiles.iter().all(|p| p.nodal.interior_zeros() == t.j as usize);
            let max_residual = t.profiles.iter().fold(0.0f64, |m, p| m.max(p.boundary_residual));
            let max_slope = t.profiles.iter().fold(0.0f64, |m, p| m.max(p.max_abs_slope));
            // large profiles are nearly piecewise linear with slopes close to -+1
            let large_min_slope = t
                .profiles
                .iter()
                .filter(|p| p.branch == Branch::Large)
                .fold(f64::INFINITY, |m, p| m.min(p.max_abs_slope));
            let class_ok = counts.iter().all(|&c| c >= 1)
                && zeros_ok
                && max_residual < 1e-6
                && max_slope < 1.0
                && large_min_slope > 0.9;
            ok &= class_ok;
            total += t.profiles.len();
            classes.push(json!({
                "j": t.j,
                "positive_small": counts[0],
                "positive_large": counts[1],
                "negative_small": counts[2],
                "negative_large": counts[3],
                "zeros_ok": zeros_ok,
                "max_boundary_residual": max_residual,
                "max_abs_slope": max_slope,
                "large_min_max_abs_slope": large_min_slope,
                "passed": class_ok,
            }));
        }
        ok &= total >= 16;
        Ok((ok, json!({"lambda": LAMBDA, "profiles": total, "classes": classes})))
    }

    /// At least `4k` nodal solutions for `k = 3`, ordered by center value.
    fn count_check(&mut self) -> Result<(bool, Value)> {
        let rep = self.figure_report()?;
        let k = 3u32;
        let nodal = rep.profiles().filter(|p| p.j >= 1 && p.j <= k).count();
        let mut ordering = Vec::new();
        let mut ordered = true;
        for t in rep.targets.iter().filter(|t| t.j >= 1) {
            let etas = |s: i8, b: Branch| t.profiles.iter().filter(move |p| p.sign == s && p.branch == b).map(|p| p.eta);
            let neg_large_max = etas(-1, Branch::Large).fold(f64::NEG_INFINITY, f64::max);
            let neg_small_min = etas(-1, Branch::Small).fold(f64::INFINITY, f64::min);
            let neg_small_max = etas(-1, Branch::Small).fold(f64::NEG_INFINITY, f64::max);
            let pos_small_min = etas(1, Branch::Small).fold(f64::INFINITY, f64::min);
            let pos_small_max = etas(1, Branch::Small).fold(f64::NEG_INFINITY, f64::max);
            let pos_large_min = etas(1, Branch::Large).fold(f64::INFINITY, f64::min);
            let ok = neg_large_max < neg_small_min
                && neg_small_max < 0.0
                && 0.0 < pos_small_min
                && pos_small_max < pos_large_min
                && pos_large_min.is_finite()
                && neg_large_max.is_finite();
            ordered &= ok;
            ordering.push(json!({"j": t.j, "ordered": ok}));
        }
        let passed = nodal as u32 >= 4 * k && ordered;
        Ok((passed, json!({"k": k, "nodal_count": nodal, "required": 4 * k, "ordering": ordering})))
    }

    /// Center values below the small-solution threshold stay within a
    /// quarter turn.
    fn small_check(&mut self) -> Result<(bool, Value)> {
        let eps = 0.99 * eps_limit(RADIUS);
        let thr = estimate_eta_star_small(&self.sys, eps, self.shot)?;
        let n = 100;
        let etas: Vec<f64> = (0..n)
            .flat_map(|k| {
                let e = thr.eta_star * 1e-4f64.powf(k as f64 / (n - 1) as f64);
                [e, -e]
            })
            .collect();
        let shots: Vec<Trajectory> = etas
            .par_iter()
            .map(|&e| shoot_rk(&ShotInput::new(&self.sys, e).with_options(self.shot)))
            .collect::<nodal_core::Result<_>>()?;
        let max_abs = shots.iter().fold(0.0f64, |m, t| m.max(t.winding().abs()));
        let violations = shots.iter().filter(|t| t.winding().abs() >= PI / 2.0).count();
        self.small_shots = Some(shots);
        Ok((
            violations == 0 && etas.len() >= 100,
            json!({
                "eps": thr.eps,
                "eta_hat": thr.eta_hat,
                "eta_star": thr.eta_star,
                "shots": etas.len(),
                "max_abs_winding": max_abs,
                "violations": violations,
            }),
        ))
    }

    /// Runge–Kutta shots agree with the Picard fixed point.
    fn oracle_check(&mut self) -> Result<(bool, Value)> {
        let n = self.opts.oracle_shots.max(2);
        let (lo, hi) = (1e-3, RADIUS + 1.0);
        let etas: Vec<f64> = (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect();
        let panels = self.opts.oracle_panels;
        let runs: Vec<(Trajectory, f64, usize, bool)> = etas
            .par_iter()
            .map(|&e| {
                let input = ShotInput::new(&self.sys, e).with_options(self.shot);
                let rk = shoot_rk(&input)?;
                let pic = picard_solve(&input, panels, 10_000)?;
                let d = rk.sup_distance_u(&pic.trajectory);
                Ok((rk, d, pic.distances.len(), pic.bound_holds()))
            })
            .collect::<nodal_core::Result<_>>()?;
        let max_sup = runs.iter().fold(0.0f64, |m, r| m.max(r.1));
        let bound_ok = runs.iter().all(|r| r.3);
        let shots: Vec<Value> = etas
            .iter()
            .zip(&runs)
            .map(|(e, r)| json!({"eta": e, "sup_distance": r.1, "iterations": r.2, "bound_holds": r.3}))
            .collect();
        self.oracle_shots = Some(runs.into_iter().map(|r| r.0).collect());
        Ok((
            max_sup < 1e-6 && bound_ok,
            json!({"panels": panels, "max_sup_distance": max_sup, "bound_holds": bound_ok, "shots": shots}),
        ))
    }

    /// Angular monotonicity along every trajectory of the checks above.
    fn angular_check(&mut self) -> Result<(bool, Value)> {
        if self.small_shots.is_none() {
            self.small_check()?;
        }
        if self.oracle_shots.is_none() {
            self.oracle_check()?;
        }
        self.figure_report()?;
        let rep = self.figure.as_ref().expect("computed above");
        let trajs: Vec<&Trajectory> = rep
            .profiles()
            .map(|p| &p.trajectory)
            .chain(self.small_shots.iter().flatten())
            .chain(self.oracle_shots.iter().flatten())
            .collect();
        let merged = trajs
            .iter()
            .map(|t| verify_angular_lemmas(t, &stored_lift(t)))
            .reduce(|a, b| a.merge(b));
        let Some(r) = merged else { bail!("no trajectories to check") };
        Ok((
            r.passed(),
            json!({
                "trajectories": trajs.len(),
                "min_pair_increment": r.min_pair_increment,
                "min_zero_increment": r.min_zero_increment,
                "backward_ok": r.backward_ok,
                "crossing_ok": r.crossing_ok,
            }),
        ))
    }

    /// The positive one-signed large solution approaches the cone `R - r`.
    fn singular_check(&mut self) -> Result<(bool, Value)> {
        let opts = SolveOptions {
            shot: self.shot,
            ..SolveOptions::default()
        };
        let rep = singular_limit_diagnostics(&reference_problem(LAMBDA), &[5.0, 50.0, 500.0], &opts)?;
        let last = rep.entries.last().map_or(0.0, |e| e.min_slope);
        let passed = rep.distance_decreasing && last > -1.0 && last <= -0.9 && rep.center_slope_zero;
        Ok((passed, serde_json::to_value(&rep)?))
    }

    /// Squeezed random systems wind past `j pi` within the estimated time.
    fn rotation_check(&mut self) -> Result<(bool, Value)> {
        let bounds = reference_bounds();
        let mut rows = Vec::new();
        let mut ok = true;
        for j in 1..=self.opts.rotation_j_max {
            let est = rotation::estimate_thresholds(&bounds, j)?;
            let v = rotation::validate_random(&bounds, &est, self.opts.random_systems, self.opts.seed);
            ok &= v.passed();
            rows.push(json!({
                "certificate": est.certificate(&bounds),
                "omega_min": est.omega_min,
                "systems": v.systems,
                "min_winding_over_pi": v.min_winding / PI,
                "min_radius_ratio": v.min_radius_ratio,
                "all_wind": v.all_wind,
                "origin_clear": v.origin_clear,
                "spirals_bound": v.spirals_bound,
                "failures": v.failures,
            }));
        }
        Ok((ok, json!({"seed": self.opts.seed, "results": rows})))
    }

    /// Energy monotonicity on the oscillator, on rescaled radial shots, and
    /// its failure on a path outside the bounds.
    fn energy_check(&mut self) -> Result<(bool, Value)> {
        let id = BoundPair::identity(2.0);
        let circle: Vec<(f64, f64)> = (0..400)
            .map(|k| {
                let t = 0.02 * k as f64;
                (0.7 * t.cos(), -0.7 * t.sin())
            })
            .collect();
        let harmonic = rotation::verify_energy_monotonicity(&id, &circle, 1e-12);

        let mut radial = Vec::new();
        let mut radial_ok = true;
        for eta in [0.3, 1.2, 4.0, -2.0] {
            let t = shoot_rk(&ShotInput::new(&self.sys, eta).with_options(self.shot))?;
            let r = rotation::radial_energy_check(&self.sys, &t, 2.5, 7.5, 1e-9)?;
            radial_ok &= r.passed() && r.pairs_checked > 0;
            radial.push(json!({"eta": eta, "report": r}));
        }

        let narrow = BoundPair::new(
            ScalarFn::new(|s| s),
            ScalarFn::new(|s| 2.0 * s),
            ScalarFn::new(|s| 2.0 * s),
            ScalarFn::new(|s| s),
            1.0,
        )?;
        let w = 3f64.sqrt();
        let outside: Vec<(f64, f64)> = (0..400)
            .map(|k| {
                let t = 0.01 * k as f64;
                (0.5 * (w * t).cos(), -0.5 / w * (w * t).sin())
            })
            .collect();
        let violated = rotation::verify_energy_monotonicity(&narrow, &outside, 1e-10);

        let passed = harmonic.passed() && radial_ok && !violated.passed();
        Ok((
            passed,
            json!({"harmonic": harmonic, "radial": radial, "violated_bounds_detected": !violated.passed()}),
        ))
    }

    /// No one-signed Neumann solutions; nodal ones exist.
    fn neumann_check(&mut self) -> Result<(bool, Value)> {
        let sys = build_truncation(&reference_problem(LAMBDA).with_bc(BoundaryKind::Neumann))?;
        let opts = SolveOptions {
            shot: self.shot,
            ..SolveOptions::default()
        };
        let rep = solve_targets(&sys, &[0, 1, 2], &opts)?;
        let counts: Vec<usize> = rep.targets.iter().map(|t| t.profiles.len()).collect();
        let rejected: Vec<usize> = rep.targets.iter().map(|t| t.rejected.len()).collect();
        let passed = counts[0] == 0 && counts[1] > 0 && counts[2] > 0;
        Ok((passed, json!({"lambda": LAMBDA, "j": [0, 1, 2], "profiles": counts, "rejected": rejected})))
    }

    /// Twist of the periodic return map and fixed points inside it.
    fn periodic_check(&mut self) -> Result<(bool, Value)> {
        let base = PeriodicSpec::new(
            2.0 * PI,
            1.0,
            ScalarFn::constant(1.0),
            ScalarFn::new(|u| u * u * u),
            periodic::DEFAULT_STRIP,
        )?;
        let small = base.with_lambda(0.01)?;
        let small_rep = periodic::verify_twist(&small, 1, &periodic::default_radii(&small, 40))?;
        let sweep = periodic::twist_sweep(&base, 1, &[0.1, 1.0, 10.0, 100.0], 60)?;
        let Some(found) = sweep.last().filter(|r| r.found()) else {
            return Ok((false, json!({"twist": false, "sweep": sweep})));
        };
        let spec = base.with_lambda(found.lambda)?;
        let witness = found.require()?;
        let inner = found.circles[0].radius;
        let points = periodic::find_periodic(&spec, 1, inner, witness, &SearchOptions::default())?;
        let z: Vec<(f64, f64)> = points.iter().map(|p| (p.u0, p.v0)).collect();
        let area = periodic::area_distortion(&spec, &z, 1e-5)?;
        let max_residual = points.iter().fold(0.0f64, |m, p| m.max(p.residual));
        let passed = small_rep.witness.is_none()
            && found.max_adjacent_jump < PI
            && points.len() >= 2
            && max_residual < periodic::FIXED_POINT_TOL
            && area < 1e-6;
        Ok((
            passed,
            json!({
                "small_lambda_twist": small_rep.witness.is_some(),
                "lambda": found.lambda,
                "witness_radius": witness,
                "max_adjacent_jump": found.max_adjacent_jump,
                "fixed_points": points.len(),
                "max_residual": max_residual,
                "area_distortion": area,
                "tried": sweep.iter().map(|r| json!({"lambda": r.lambda, "found": r.found()})).collect::<Vec<_>>(),
            }),
        ))
    }
}

/// Runs the named checks (all when empty) in the canonical order.
pub fn run_checks(opts: BatteryOptions, names: &[String]) -> Result<Vec<CheckOutcome>> {
    for n in names {
        if !CHECKS.contains(&n.as_str()) {
            bail!("unknown check {n:?}; known: {}", CHECKS.join(", "));
        }
    }
    let mut battery = Battery::new(opts)?;
    CHECKS
        .iter()
        .filter(|c| names.is_empty() || names.iter().any(|n| n == *c))
        .map(|c| battery.run(c))
        .collect()
}
