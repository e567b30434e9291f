//! Shooting scheme: parameter scans, bracketing, bisection to the target
//! angles, and small/large classification.
//!
//! The terminal angle `theta(r_b; eta)` is continuous in `eta`. It is small
//! for tiny `eta`, rises to a maximum near `eta*`, and falls back to zero
//! once the shot starts outside the truncation strip. Every crossing of a
//! target angle on either flank is a boundary value solution.

pub mod grid;
pub mod small;
pub mod sweep;

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{shoot_rk, ShotInput, ShotOptions, StartKind, Trajectory};
use crate::model::{BoundaryKind, Geometry, TruncatedSystem};
use crate::output::round15;
use crate::phase::{self, NodalSummary};
pub use grid::{EtaGrid, EtaGridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Small,
    Large,
}

/// Summary of one shot of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub eta: f64,
    pub winding: f64,
    pub terminal_u: f64,
    pub terminal_v: f64,
    pub max_abs_u: f64,
    pub max_abs_slope: f64,
    pub nodal: Option<NodalSummary>,
    /// `max |u'| <= gamma`.
    pub slope_bound_ok: bool,
    pub origin_free: bool,
    /// Set when the shot failed; the other fields are then NaN or empty.
    pub error: Option<String>,
}

impl ShotRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    fn failed(eta: f64, err: &Error) -> Self {
        Self {
            eta,
            winding: f64::NAN,
            terminal_u: f64::NAN,
            terminal_v: f64::NAN,
            max_abs_u: f64::NAN,
            max_abs_slope: f64::NAN,
            nodal: None,
            slope_bound_ok: false,
            origin_free: !matches!(err, Error::OriginHit(_)),
            error: Some(err.to_string()),
        }
    }
}

/// Shoots once and summarizes.
pub fn shoot_record(sys: &TruncatedSystem, eta: f64, options: ShotOptions) -> ShotRecord {
    match shoot_rk(&ShotInput::new(sys, eta).with_options(options)) {
        Ok(t) => {
            let lift = phase::stored_lift(&t);
            let nodal = phase::count_nodal(&t, &lift, sys.source.bc).ok();
            let term = t.terminal();
            ShotRecord {
                eta,
                winding: t.winding(),
                terminal_u: term.u,
                terminal_v: term.v,
                max_abs_u: t.max_abs_u(),
                max_abs_slope: t.max_abs_slope(),
                nodal,
                slope_bound_ok: t.max_abs_slope() <= sys.gamma(),
                origin_free: eta == 0.0 || t.min_radius_sq() > 0.0,
                error: None,
            }
        }
        Err(e) => ShotRecord::failed(eta, &e),
    }
}

/// One record per grid value, in grid order. Failed shots are flagged, not fatal.
pub fn scan_eta(sys: &TruncatedSystem, grid: &EtaGrid, options: ShotOptions) -> Vec<ShotRecord> {
    grid.values
        .par_iter()
        .map(|&eta| shoot_record(sys, eta, options))
        .collect()
}

/// Terminal angle that characterizes class `j` for the given start and
/// boundary condition at `r_b`.
pub fn target_angle(start: StartKind, bc: BoundaryKind, j: u32) -> f64 {
    let j = j as f64;
    match (start, bc) {
        (StartKind::Center | StartKind::WallValue, BoundaryKind::Dirichlet) => (j + 0.5) * PI,
        (StartKind::Center | StartKind::WallValue, BoundaryKind::Neumann) => j * PI,
        (StartKind::WallSlope, BoundaryKind::Dirichlet) => j * PI,
        (StartKind::WallSlope, BoundaryKind::Neumann) => (j + 0.5) * PI,
    }
}

/// Interior zeros of a class-`j` solution. On an annulus with Dirichlet data
/// at both walls, class `j` means winding `j pi` and has `j - 1` interior zeros.
pub fn expected_interior_zeros(start: StartKind, bc: BoundaryKind, j: u32) -> Option<usize> {
    match (start, bc) {
        (StartKind::WallSlope, BoundaryKind::Dirichlet) => (j as usize).checked_sub(1),
        _ => Some(j as usize),
    }
}

/// Root acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Acceptance {
    /// On `|theta(r_b) - target|`, radians.
    pub angle_tol: f64,
    /// On `|u(r_b)|` (Dirichlet) or `|u'(r_b)|` (Neumann).
    pub residual_tol: f64,
    /// Bisection stops below this `eta` width, relative to `R`.
    pub eta_rel_tol: f64,
    /// Roots closer than this (relative to `R`) are merged.
    pub dedupe_rel: f64,
}

impl Default for Acceptance {
    fn default() -> Self {
        Self {
            angle_tol: 1e-8,
            residual_tol: 1e-6,
            eta_rel_tol: 1e-13,
            dedupe_rel: 1e-9,
        }
    }
}

/// An accepted boundary value solution.
#[derive(Debug, Clone)]
pub struct SolutionProfile {
    pub eta: f64,
    pub j: u32,
    pub target: f64,
    pub branch: Branch,
    pub sign: i8,
    pub winding: f64,
    pub boundary_residual: f64,
    pub angle_residual: f64,
    pub max_abs_u: f64,
    pub max_abs_slope: f64,
    pub nodal: NodalSummary,
    pub trajectory: Trajectory,
}

/// JSON form of a [`SolutionProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub eta: f64,
    pub j: u32,
    pub branch: Branch,
    pub sign: i8,
    pub winding: f64,
    pub boundary_residual: f64,
    pub max_abs_slope: f64,
    pub zeros: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv_path: Option<String>,
}

impl SolutionProfile {
    pub fn record(&self, csv_path: Option<String>) -> ProfileRecord {
        ProfileRecord {
            eta: round15(self.eta),
            j: self.j,
            branch: self.branch,
            sign: self.sign,
            winding: round15(self.winding),
            boundary_residual: round15(self.boundary_residual),
            max_abs_slope: round15(self.max_abs_slope),
            zeros: self.nodal.zero_locations.iter().map(|&z| round15(z)).collect(),
            csv_path,
        }
    }
}

/// A bisection result that failed validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub eta: f64,
    pub j: u32,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct BisectOutcome {
    pub profiles: Vec<SolutionProfile>,
    pub rejected: Vec<Rejection>,
    pub brackets: usize,
}

/// Boundary residual at `r_b` for the problem's outer condition.
pub fn boundary_residual(sys: &TruncatedSystem, t: &Trajectory) -> f64 {
    let term = t.terminal();
    match sys.source.bc {
        BoundaryKind::Dirichlet => term.u.abs(),
        BoundaryKind::Neumann => term.du.abs(),
    }
}

/// Scan argmax of the winding among records of the given sign.
pub fn winding_argmax(records: &[ShotRecord], sign: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.ok() && r.eta * sign > 0.0)
        .fold(None, |best: Option<&ShotRecord>, r| match best {
            Some(b) if b.winding >= r.winding => Some(b),
            _ => Some(r),
        })
        .map(|r| r.eta)
}

fn classify(eta: f64, separator: Option<f64>) -> Branch {
    match separator {
        Some(s) if eta.abs() < s.abs() => Branch::Small,
        Some(_) => Branch::Large,
        None => Branch::Small,
    }
}

/// Checks a candidate root and builds its profile.
fn validate_root(
    sys: &TruncatedSystem,
    t: Trajectory,
    j: u32,
    target: f64,
    separator: Option<f64>,
    acc: &Acceptance,
) -> std::result::Result<SolutionProfile, String> {
    let winding = t.winding();
    let angle_residual = (winding - target).abs();
    let residual = boundary_residual(sys, &t);
    if !(angle_residual <= acc.angle_tol) {
        return Err(format!("angle residual {angle_residual:e}"));
    }
    if !(residual < acc.residual_tol) {
        return Err(format!("boundary residual {residual:e}"));
    }
    let max_abs_u = t.max_abs_u();
    if !(max_abs_u < sys.strip()) {
        return Err(format!("max |u| = {max_abs_u} leaves the strip"));
    }
    let max_abs_slope = t.max_abs_slope();
    if !(max_abs_slope <= sys.gamma()) {
        return Err(format!("max |u'| = {max_abs_slope} exceeds gamma"));
    }
    let lift = phase::stored_lift(&t);
    let nodal = phase::count_nodal(&t, &lift, sys.source.bc).map_err(|e| e.to_string())?;
    let expected = expected_interior_zeros(t.start, sys.source.bc, j);
    if expected != Some(nodal.interior_zeros()) {
        return Err(format!(
            "{} interior zeros, expected {expected:?}",
            nodal.interior_zeros()
        ));
    }
    Ok(SolutionProfile {
        eta: t.eta,
        j,
        target,
        branch: classify(t.eta, separator),
        sign: if t.eta > 0.0 { 1 } else { -1 },
        winding,
        boundary_residual: residual,
        angle_residual,
        max_abs_u,
        max_abs_slope,
        nodal,
        trajectory: t,
    })
}

/// Bisection on `eta` inside one bracket, returning the shot with the
/// smallest boundary residual.
fn bisect(
    sys: &TruncatedSystem,
    (mut a, mut fa): (f64, f64),
    mut b: f64,
    target: f64,
    options: ShotOptions,
    width_tol: f64,
) -> Result<Trajectory> {
    let mut best: Option<(f64, Trajectory)> = None;
    for _ in 0..200 {
        if (b - a).abs() <= width_tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let t = shoot_rk(&ShotInput::new(sys, m).with_options(options))?;
        let fm = t.winding() - target;
        let res = boundary_residual(sys, &t);
        let done = fm == 0.0;
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, t));
        }
        if done {
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    match best {
        Some((_, t)) => Ok(t),
        None => shoot_rk(&ShotInput::new(sys, 0.5 * (a + b)).with_options(options)),
    }
}

/// Finds every root of `theta(r_b; eta) = target(j)` bracketed by adjacent
/// records, or hit exactly by a record.
///
/// Records must be sorted by `eta`. Returns `NoBracket` when no record pair
/// straddles the target.
pub fn bracket_and_bisect(
    sys: &TruncatedSystem,
    records: &[ShotRecord],
    j: u32,
    options: ShotOptions,
    acc: &Acceptance,
) -> Result<BisectOutcome> {
    let start = StartKind::for_problem(sys);
    let target = target_angle(start, sys.source.bc, j);
    let scale = sys.interval().1;
    let width_tol = acc.eta_rel_tol * scale;
    let sep_pos = winding_argmax(records, 1.0);
    let sep_neg = winding_argmax(records, -1.0);

    enum Candidate {
        Hit(f64),
        Bracket((f64, f64), f64),
    }
    let mut candidates = Vec::new();
    let ok: Vec<&ShotRecord> = records.iter().filter(|r| r.ok()).collect();
    for (i, r) in ok.iter().enumerate() {
        let f = r.winding - target;
        if f == 0.0 {
            candidates.push(Candidate::Hit(r.eta));
            continue;
        }
        if let Some(next) = ok.get(i + 1) {
            let g = next.winding - target;
            // Do not bracket across zero: the two signs are separate problems.
            if g != 0.0 && f.signum() != g.signum() && r.eta * next.eta > 0.0 {
                candidates.push(Candidate::Bracket((r.eta, f), next.eta));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoBracket(target));
    }
    let brackets = candidates.len();
    let roots: Vec<std::result::Result<SolutionProfile, Rejection>> = candidates
        .par_iter()
        .map(|c| {
            let shot = match *c {
                Candidate::Hit(eta) => shoot_rk(&ShotInput::new(sys, eta).with_options(options)),
                Candidate::Bracket(lo, hi) => bisect(sys, lo, hi, target, options, width_tol),
            };
            let eta_hint = match *c {
                Candidate::Hit(eta) => eta,
                Candidate::Bracket((lo, _), hi) => 0.5 * (lo + hi),
            };
            let t = shot.map_err(|e| Rejection {
                eta: eta_hint,
                j,
                reason: e.to_string(),
            })?;
            let eta = t.eta;
            let sep = if eta > 0.0 { sep_pos } else { sep_neg };
            validate_root(sys, t, j, target, sep, acc).map_err(|reason| Rejection { eta, j, reason })
        })
        .collect();

    let mut profiles: Vec<SolutionProfile> = Vec::new();
    let mut rejected = Vec::new();
    for r in roots {
        match r {
            Ok(p) => {
                let dup = profiles
                    .iter()
                    .any(|q| (q.eta - p.eta).abs() <= acc.dedupe_rel * scale);
                if !dup {
                    profiles.push(p);
                }
            }
            Err(rej) => rejected.push(rej),
        }
    }
    Ok(BisectOutcome {
        profiles,
        rejected,
        brackets,
    })
}

/// Which signs of `eta` to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signs {
    Both,
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub shot: ShotOptions,
    pub grid: EtaGridSpec,
    pub acceptance: Acceptance,
    pub signs: Signs,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            shot: ShotOptions::default(),
            grid: EtaGridSpec::default(),
            acceptance: Acceptance::default(),
            signs: Signs::Both,
        }
    }
}

/// Profiles found for one class.
#[derive(Debug, Clone)]
pub struct TargetResult {
    pub j: u32,
    pub target: f64,
    pub profiles: Vec<SolutionProfile>,
    pub rejected: Vec<Rejection>,
    pub brackets: usize,
}

impl TargetResult {
    pub fn count(&self, sign: i8, branch: Branch) -> usize {
        self.profiles
            .iter()
            .filter(|p| p.sign == sign && p.branch == branch)
            .count()
    }
}

/// Annulus scan diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDiagnostics {
    /// The smallest scanned `|eta|` has winding below `pi/2`.
    pub small_slope_ok: bool,
    /// Smallest scanned `|eta|` from which on every winding is below `pi/2`.
    pub elastic_threshold: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub lambda: f64,
    pub records: Vec<ShotRecord>,
    pub eta_argmax_pos: Option<f64>,
    pub eta_argmax_neg: Option<f64>,
    pub targets: Vec<TargetResult>,
    pub annulus: Option<AnnulusDiagnostics>,
}

impl SolveReport {
    /// Classes with no accepted profile.
    pub fn missing(&self) -> Vec<u32> {
        self.targets
            .iter()
            .filter(|t| t.profiles.is_empty())
            .map(|t| t.j)
            .collect()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &SolutionProfile> {
        self.targets.iter().flat_map(|t| t.profiles.iter())
    }

    pub fn max_winding(&self) -> f64 {
        self.records
            .iter()
            .filter(|r| r.ok())
            .fold(f64::NEG_INFINITY, |m, r| m.max(r.winding))
    }

    /// The ordering `eta_small < eta_argmax < eta_large` (mirrored for
    /// negative centers) holds for every class with both branches.
    pub fn pair_separation_ok(&self) -> bool {
        self.targets.iter().all(|t| {
            [(1i8, self.eta_argmax_pos), (-1, self.eta_argmax_neg)]
                .iter()
                .all(|&(sign, sep)| {
                    let Some(sep) = sep else { return true };
                    t.profiles.iter().filter(|p| p.sign == sign).all(|p| match p.branch {
                        Branch::Small => p.eta.abs() < sep.abs(),
                        Branch::Large => p.eta.abs() >= sep.abs(),
                    })
                })
        })
    }
}

/// The scan grid for the problem's geometry.
pub fn default_grid(sys: &TruncatedSystem, spec: &EtaGridSpec) -> Result<EtaGrid> {
    match sys.source.geometry {
        Geometry::Ball { radius } => EtaGrid::ball(spec, radius),
        Geometry::Annulus { .. } => EtaGrid::annulus(spec),
    }
}

/// Scans, brackets and bisects every requested class.
pub fn solve_targets(sys: &TruncatedSystem, targets: &[u32], opts: &SolveOptions) -> Result<SolveReport> {
    let grid = default_grid(sys, &opts.grid)?;
    solve_on_grid(sys, &grid, targets, opts)
}

/// [`solve_targets`] on an explicit positive grid.
pub fn solve_on_grid(
    sys: &TruncatedSystem,
    grid: &EtaGrid,
    targets: &[u32],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let start = StartKind::for_problem(sys);
    let mut values = Vec::new();
    if matches!(opts.signs, Signs::Both | Signs::Negative) {
        values.extend(grid.negated().values);
    }
    if matches!(opts.signs, Signs::Both | Signs::Positive) {
        values.extend(&grid.values);
    }
    let full = EtaGrid::from_values(values)?;
    let records = scan_eta(sys, &full, opts.shot);
    let mut results = Vec::with_capacity(targets.len());
    for &j in targets {
        let target = target_angle(start, sys.source.bc, j);
        if expected_interior_zeros(start, sys.source.bc, j).is_none() {
            return Err(Error::InvalidArgument(format!(
                "class {j} is empty for this boundary condition"
            )));
        }
        let res = match bracket_and_bisect(sys, &records, j, opts.shot, &opts.acceptance) {
            Ok(o) => TargetResult {
                j,
                target,
                profiles: o.profiles,
                rejected: o.rejected,
                brackets: o.brackets,
            },
            Err(Error::NoBracket(_)) => TargetResult {
                j,
                target,
                profiles: Vec::new(),
                rejected: Vec::new(),
                brackets: 0,
            },
            Err(e) => return Err(e),
        };
        results.push(res);
    }
    let annulus = match sys.source.geometry {
        Geometry::Annulus { .. } => Some(annulus_diagnostics(&records)),
        Geometry::Ball { .. } => None,
    };
    Ok(SolveReport {
        lambda: sys.lambda(),
        eta_argmax_pos: winding_argmax(&records, 1.0),
        eta_argmax_neg: winding_argmax(&records, -1.0),
        records,
        targets: results,
        annulus,
    })
}

/// Small- and large-slope rotation checks on an annulus scan.
pub fn annulus_diagnostics(records: &[ShotRecord]) -> AnnulusDiagnostics {
    let mut by_abs: Vec<&ShotRecord> = records.iter().filter(|r| r.ok() && r.eta != 0.0).collect();
    by_abs.sort_by(|a, b| a.eta.abs().total_cmp(&b.eta.abs()));
    let small_slope_ok = by_abs.first().is_some_and(|r| r.winding < FRAC_PI_2);
    let mut elastic_threshold = None;
    for r in by_abs.iter().rev() {
        if r.winding < FRAC_PI_2 {
            elastic_threshold = Some(r.eta.abs());
        } else {
            break;
        }
    }
    AnnulusDiagnostics {
        small_slope_ok,
        elastic_threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_truncation, ProblemSpec, ScalarFn};

    fn fig1(lambda: f64) -> TruncatedSystem {
        let spec = ProblemSpec::ball(2, 10.0, lambda, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u))
            .with_delta(1.0);
        build_truncation(&spec).unwrap()
    }

    fn record(eta: f64, winding: f64) -> ShotRecord {
        ShotRecord {
            eta,
            winding,
            terminal_u: 0.0,
            terminal_v: 0.0,
            max_abs_u: 0.0,
            max_abs_slope: 0.0,
            nodal: None,
            slope_bound_ok: true,
            origin_free: true,
            error: None,
        }
    }

    #[test]
    fn targets_per_start() {
        use BoundaryKind::*;
        assert_eq!(target_angle(StartKind::Center, Dirichlet, 2), 2.5 * PI);
        assert_eq!(target_angle(StartKind::Center, Neumann, 2), 2.0 * PI);
        assert_eq!(target_angle(StartKind::WallSlope, Dirichlet, 3), 3.0 * PI);
        assert_eq!(expected_interior_zeros(StartKind::WallSlope, Dirichlet, 0), None);
        assert_eq!(expected_interior_zeros(StartKind::WallSlope, Dirichlet, 3), Some(2));
    }

    #[test]
    fn scan_endpoints() {
        let sys = fig1(5.0);
        let grid = EtaGrid::ball(&EtaGridSpec::default(), 10.0).unwrap();
        let recs = scan_eta(&sys, &grid, ShotOptions::default());
        assert_eq!(recs.len(), 600);
        assert!(recs.iter().all(|r| r.ok() && r.slope_bound_ok && r.origin_free));
        assert_eq!(recs.last().unwrap().winding, 0.0);
        assert!(recs[0].winding < FRAC_PI_2);
        let max = recs.iter().fold(0.0f64, |m, r| m.max(r.winding));
        assert!(max > 3.5 * PI, "max winding {max}");
    }

    #[test]
    fn single_crossing_gives_one_candidate() {
        // synthetic monotone windings crossing pi/2 once
        let recs = vec![record(1.0, 0.1), record(2.0, 0.2), record(3.0, 5.0), record(4.0, 6.0)];
        let sys = fig1(5.0);
        let acc = Acceptance::default();
        let none = bracket_and_bisect(&sys, &recs[..2], 0, ShotOptions::default(), &acc);
        assert!(matches!(none, Err(Error::NoBracket(_))));
        let out = bracket_and_bisect(&sys, &recs, 0, ShotOptions::default(), &acc).unwrap();
        assert_eq!(out.brackets, 1);
        assert_eq!(out.profiles.len() + out.rejected.len(), 1);
    }

    #[test]
    fn argmax_and_classification() {
        let recs = vec![record(-2.0, 3.0), record(-1.0, 4.0), record(1.0, 1.0), record(2.0, 5.0), record(3.0, 2.0)];
        assert_eq!(winding_argmax(&recs, 1.0), Some(2.0));
        assert_eq!(winding_argmax(&recs, -1.0), Some(-1.0));
        assert_eq!(classify(1.5, Some(2.0)), Branch::Small);
        assert_eq!(classify(-1.5, Some(-1.0)), Branch::Large);
    }

    #[test]
    fn fig1_positive_pairs() {
        let sys = fig1(5.0);
        let opts = SolveOptions {
            signs: Signs::Positive,
            ..SolveOptions::default()
        };
        let rep = solve_targets(&sys, &[0, 1, 2, 3], &opts).unwrap();
        assert!(rep.missing().is_empty());
        for t in &rep.targets {
            assert!(t.count(1, Branch::Small) >= 1, "j = {}", t.j);
            assert!(t.count(1, Branch::Large) >= 1, "j = {}", t.j);
            for p in &t.profiles {
                assert_eq!(p.nodal.interior_zeros(), t.j as usize);
                assert!(p.boundary_residual < 1e-6 && p.max_abs_slope < 1.0);
            }
        }
        assert!(rep.pair_separation_ok());
    }

    #[test]
    fn tiny_lambda_has_no_nodal_roots() {
        let sys = fig1(0.01);
        let opts = SolveOptions {
            signs: Signs::Positive,
            ..SolveOptions::default()
        };
        let rep = solve_targets(&sys, &[1, 2, 3], &opts).unwrap();
        assert_eq!(rep.missing(), vec![1, 2, 3]);
    }
}
