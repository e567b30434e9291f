//! Shooting integrators for the radial problem.
//!
//! [`shoot_rk`] is the production path: an adaptive Dormand–Prince solve of
//! `u' = phi~^{-1}(v / r^{N-1})`, `v' = -lambda r^{N-1} f~(r, u)`.
//! [`picard_solve`] iterates the integral operator from the existence proof on
//! a fixed grid and serves as an independent oracle.

pub mod dopri;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Geometry, BoundaryKind, TruncatedSystem};
use crate::phase;
use dopri::{DenseSegment, StepCheck, StepControl, Tolerances};

/// Largest admissible scaled-angle increment of one accepted step.
pub const MAX_STEP_ROTATION: f64 = std::f64::consts::FRAC_PI_4;

/// Numerical knobs of a shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShotOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Start of the ball integration as a fraction of `R`.
    pub eps_sing: f64,
}

impl Default for ShotOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-11,
            eps_sing: 1e-6,
        }
    }
}

impl ShotOptions {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances::new(self.abs_tol, self.rel_tol)
    }

    pub fn halved(self) -> Self {
        Self {
            abs_tol: self.abs_tol * 0.5,
            rel_tol: self.rel_tol * 0.5,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !(self.eps_sing > 0.0 && self.eps_sing < 1.0) {
            return Err(Error::InvalidArgument("eps_sing must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// How the shooting parameter enters the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Ball: `u(0) = eta`, `u'(0) = 0`.
    Center,
    /// Annulus, Dirichlet at `R1`: `u(R1) = 0`, `u'(R1) = eta`.
    WallSlope,
    /// Annulus, Neumann at `R1`: `u(R1) = eta`, `u'(R1) = 0`.
    WallValue,
}

impl StartKind {
    pub fn for_problem(system: &TruncatedSystem) -> Self {
        match (system.source.geometry, system.source.bc) {
            (Geometry::Ball { .. }, _) => StartKind::Center,
            (Geometry::Annulus { .. }, BoundaryKind::Dirichlet) => StartKind::WallSlope,
            (Geometry::Annulus { .. }, BoundaryKind::Neumann) => StartKind::WallValue,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShotInput<'a> {
    pub system: &'a TruncatedSystem,
    pub eta: f64,
    pub r_span: (f64, f64),
    pub options: ShotOptions,
}

impl<'a> ShotInput<'a> {
    pub fn new(system: &'a TruncatedSystem, eta: f64) -> Self {
        Self {
            system,
            eta,
            r_span: system.interval(),
            options: ShotOptions::default(),
        }
    }

    pub fn with_options(mut self, options: ShotOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_span(mut self, r_span: (f64, f64)) -> Self {
        self.r_span = r_span;
        self
    }

    pub fn start(&self) -> StartKind {
        StartKind::for_problem(self.system)
    }

    fn validate(&self) -> Result<()> {
        self.options.validate()?;
        let (a, b) = self.r_span;
        if !(a >= 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad radial span [{a}, {b}]")));
        }
        if !self.eta.is_finite() {
            return Err(Error::InvalidArgument(format!("eta = {}", self.eta)));
        }
        Ok(())
    }
}

/// One sampled state of a shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub u: f64,
    /// `r^{N-1} phi~(u')`.
    pub v: f64,
    /// `u'`.
    pub du: f64,
    /// Lifted clockwise angle of `(u, v / sqrt(lambda))`.
    pub theta: f64,
}

/// A computed shot with dense output.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub eta: f64,
    pub start: StartKind,
    pub lambda: f64,
    pub samples: Vec<Sample>,
    /// Dense pieces of `(u, v)`; segment `i` spans samples `i` and `i + 1`.
    pub segments: Vec<DenseSegment<2>>,
}

impl Trajectory {
    /// Builds a trajectory from raw states and lifts its angle.
    pub fn from_states(
        eta: f64,
        start: StartKind,
        lambda: f64,
        states: Vec<(f64, f64, f64, f64)>,
        segments: Vec<DenseSegment<2>>,
    ) -> Result<Self> {
        debug_assert_eq!(segments.len() + 1, states.len());
        let sqrt_lambda = lambda.sqrt();
        let pts: Vec<(f64, f64)> = states.iter().map(|s| (s.1, s.2)).collect();
        let theta = phase::lift_states(&pts, sqrt_lambda)?;
        let samples = states
            .into_iter()
            .zip(theta)
            .map(|((r, u, v, du), theta)| Sample { r, u, v, du, theta })
            .collect();
        Ok(Self {
            eta,
            start,
            lambda,
            samples,
            segments,
        })
    }

    pub fn r_span(&self) -> (f64, f64) {
        (self.samples[0].r, self.samples[self.samples.len() - 1].r)
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn terminal(&self) -> &Sample {
        &self.samples[self.samples.len() - 1]
    }

    /// Dense `(u, v)` at `r`, clamped to the span.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if self.segments.is_empty() {
            let s = self.first();
            return (s.u, s.v);
        }
        let idx = self.segments.partition_point(|s| s.t1() < r).min(self.segments.len() - 1);
        let seg = &self.segments[idx];
        if r <= seg.t0 {
            let s = &self.samples[idx];
            return (s.u, s.v);
        }
        if r >= seg.t1() {
            let s = &self.samples[idx + 1];
            return (s.u, s.v);
        }
        let y = seg.eval(r);
        (y[0], y[1])
    }

    pub fn eval_u(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// Winding `theta(r_b) - theta(r_a)`.
    pub fn winding(&self) -> f64 {
        self.terminal().theta - self.first().theta
    }

    pub fn max_abs_u(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.u.abs()))
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.du.abs()))
    }

    pub fn min_slope(&self) -> f64 {
        self.samples.iter().fold(f64::INFINITY, |m, s| m.min(s.du))
    }

    /// Smallest `u^2 + v^2` over the samples.
    pub fn min_radius_sq(&self) -> f64 {
        self.samples
            .iter()
            .fold(f64::INFINITY, |m, s| m.min(s.u * s.u + s.v * s.v))
    }

    /// Sup-norm distance of `u` against `other`, checked at both sample sets
    /// and at the midpoints of this trajectory's steps.
    pub fn sup_distance_u(&self, other: &Trajectory) -> f64 {
        let mut d = 0.0f64;
        for w in self.samples.windows(2) {
            for r in [w[0].r, 0.5 * (w[0].r + w[1].r)] {
                d = d.max((self.eval_u(r) - other.eval_u(r)).abs());
            }
        }
        for s in &other.samples {
            d = d.max((self.eval_u(s.r) - s.u).abs());
        }
        let end = self.terminal().r.min(other.terminal().r);
        d.max((self.eval_u(end) - other.eval_u(end)).abs())
    }

    /// Writes `r,u,v,theta` rows at 15 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "r,u,v,theta")?;
        for s in &self.samples {
            writeln!(w, "{:.14e},{:.14e},{:.14e},{:.14e}", s.r, s.u, s.v, s.theta)?;
        }
        Ok(())
    }
}

/// Right-hand side of the first-order radial system.
#[inline]
fn rhs(sys: &TruncatedSystem, r: f64, y: &[f64; 2]) -> [f64; 2] {
    let p = sys.radial_power(r);
    let du = if p == 0.0 { 0.0 } else { sys.phi_t_inv(y[1] / p) };
    [du, -sys.lambda() * p * sys.f_t(r, y[0])]
}

/// Adaptive shot from the start boundary to `r_b`.
pub fn shoot_rk(input: &ShotInput<'_>) -> Result<Trajectory> {
    input.validate()?;
    let sys = input.system;
    let eta = input.eta;
    let lambda = sys.lambda();
    let sqrt_lambda = lambda.sqrt();
    let (r_a, r_b) = input.r_span;
    let start = input.start();

    let mut states = Vec::new();
    let mut segments = Vec::new();
    let (r0, y0) = match start {
        StartKind::Center => {
            let r_start = r_a.max(input.options.eps_sing * r_b);
            let y_start = center_series(sys, eta, r_start);
            if r_start > r_a {
                let y_a = center_series(sys, eta, r_a);
                let dy_a = rhs(sys, r_a, &y_a);
                let dy_s = rhs(sys, r_start, &y_start);
                states.push((r_a, y_a[0], y_a[1], dy_a[0]));
                segments.push(DenseSegment::hermite(r_a, r_start - r_a, y_a, y_start, dy_a, dy_s));
            }
            (r_start, y_start)
        }
        StartKind::WallSlope => (r_a, [0.0, sys.radial_power(r_a) * sys.phi_t(eta)]),
        StartKind::WallValue => (r_a, [eta, 0.0]),
    };

    let origin_floor = {
        let s = 1e-12 * eta.abs().max(1.0);
        s * s
    };
    let guard_origin = eta != 0.0;
    let control = StepControl::new(input.options.tolerances());
    let sol = dopri::integrate(
        |r, y: &[f64; 2]| rhs(sys, r, y),
        r0,
        y0,
        r_b,
        &control,
        |_, y_old, r_new, y_new| {
            if guard_origin && y_new[0] * y_new[0] + y_new[1] * y_new[1] < origin_floor {
                return StepCheck::Fail(Error::OriginHit(r_new));
            }
            let a0 = phase::scaled_angle(y_old[0], y_old[1], sqrt_lambda);
            let a1 = phase::scaled_angle(y_new[0], y_new[1], sqrt_lambda);
            if phase::principal_increment(a0, a1).abs() >= MAX_STEP_ROTATION {
                StepCheck::Shrink
            } else {
                StepCheck::Accept
            }
        },
    )?;

    states.reserve(sol.t.len());
    for (k, (&r, y)) in sol.t.iter().zip(&sol.y).enumerate() {
        states.push((r, y[0], y[1], sol.dy[k][0]));
    }
    segments.extend(sol.segments);
    Trajectory::from_states(eta, start, lambda, states, segments)
}

/// Initial state near the center from the frozen-source integral.
///
/// With `f~` frozen at `f~(0, eta)` the flux is exactly `v = -c r^N`,
/// `c = lambda f~(0, eta) / N`, and `u = eta - (sqrt(1 + c^2 r^2) - 1) / c`.
/// This agrees with the `r^2` Taylor start to `O(r^4)` and stays accurate when
/// `c r` is not small.
pub fn center_series(sys: &TruncatedSystem, eta: f64, r: f64) -> [f64; 2] {
    let n = sys.dimension() as f64;
    let c = sys.lambda() * sys.f_t(0.0, eta) / n;
    let cr = c * r;
    let drop = c * r * r / ((1.0 + cr * cr).sqrt() + 1.0);
    [eta - drop, -c * r.powi(sys.dimension() as i32)]
}

/// Result of the Picard oracle.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub trajectory: Trajectory,
    /// `d_k = sup |u_{k+1} - u_k|`, starting from the constant iterate.
    pub distances: Vec<f64>,
    /// Contraction constant `L` of the operator.
    pub lipschitz: f64,
    pub radius: f64,
}

impl PicardOutcome {
    /// The a-priori bound `L^k R^{2k} / k! * d_0` (may overflow to infinity).
    pub fn bound(&self, k: usize) -> f64 {
        let d0 = self.distances.first().copied().unwrap_or(0.0);
        let ln = k as f64 * (self.lipschitz.ln() + 2.0 * self.radius.ln()) - ln_factorial(k);
        d0 * ln.exp()
    }

    /// Whether every distance satisfies `d_k <= bound(k)`.
    pub fn bound_holds(&self) -> bool {
        self.distances
            .iter()
            .enumerate()
            .all(|(k, &d)| d <= self.bound(k) * (1.0 + 1e-12) + 1e-300)
    }
}

fn ln_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// A uniform grid on `[0, R]` for the fixed-point operator.
#[derive(Debug, Clone)]
pub struct PicardGrid {
    pub r: Vec<f64>,
    pub h: f64,
}

impl PicardGrid {
    pub fn new(radius: f64, panels: usize) -> Result<Self> {
        if panels < 2 {
            return Err(Error::InvalidArgument("need at least 2 panels".into()));
        }
        let h = radius / panels as f64;
        Ok(Self {
            r: (0..=panels).map(|i| i as f64 * h).collect(),
            h,
        })
    }
}

pub const DEFAULT_PICARD_PANELS: usize = 4096;

/// Cumulative integral of nodal values `f` on a uniform grid.
///
/// Each panel uses the three-point rule `h/12 (5 f_i + 8 f_{i+1} - f_{i+2})`
/// (mirrored on the last panel), the panel-wise form of Simpson's rule.
fn cumulative(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len() - 1;
    out[0] = 0.0;
    for i in 0..n {
        let panel = if i + 2 <= n {
            5.0 * f[i] + 8.0 * f[i + 1] - f[i + 2]
        } else {
            5.0 * f[i + 1] + 8.0 * f[i] - f[i - 1]
        };
        out[i + 1] = out[i] + h / 12.0 * panel;
    }
}

/// One application of the operator `T` to the nodal iterate `u`.
///
/// Returns `(T u, v, u')` where `v(r) = -int_0^r lambda s^{N-1} f~(s, u(s)) ds`.
pub fn picard_operator(
    sys: &TruncatedSystem,
    eta: f64,
    grid: &PicardGrid,
    u: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = grid.r.len();
    let lambda = sys.lambda();
    let src: Vec<f64> = grid
        .r
        .iter()
        .zip(u)
        .map(|(&r, &ui)| lambda * sys.radial_power(r) * sys.f_t(r, ui))
        .collect();
    let mut inner = vec![0.0; n];
    cumulative(&src, grid.h, &mut inner);
    let slope: Vec<f64> = grid
        .r
        .iter()
        .zip(&inner)
        .map(|(&r, &i)| {
            let p = sys.radial_power(r);
            if p == 0.0 {
                0.0
            } else {
                sys.phi_t_inv(-i / p)
            }
        })
        .collect();
    let mut outer = vec![0.0; n];
    cumulative(&slope, grid.h, &mut outer);
    let next = outer.iter().map(|o| eta + o).collect();
    let v = inner.iter().map(|i| -i).collect();
    (next, v, slope)
}

/// Fixed-point iteration of `T` from `u = eta` until successive iterates
/// differ by less than `abs_tol` in sup norm.
pub fn picard_solve(input: &ShotInput<'_>, panels: usize, max_iter: usize) -> Result<PicardOutcome> {
    input.validate()?;
    let sys = input.system;
    let radius = match sys.source.geometry {
        Geometry::Ball { radius } => radius,
        Geometry::Annulus { .. } => {
            return Err(Error::InvalidArgument("Picard oracle is defined on balls".into()))
        }
    };
    if input.r_span != (0.0, radius) {
        return Err(Error::InvalidArgument("Picard oracle runs on [0, R]".into()));
    }
    let grid = PicardGrid::new(radius, panels)?;
    let eta = input.eta;
    let mut u = vec![eta; grid.r.len()];
    let mut distances = Vec::new();
    for _ in 0..max_iter {
        let (next, _, _) = picard_operator(sys, eta, &grid, &u);
        let d = next
            .iter()
            .zip(&u)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        distances.push(d);
        u = next;
        if d < input.options.abs_tol {
            // v and u' of the converged iterate.
            let (_, v, du) = picard_operator(sys, eta, &grid, &u);
            let trajectory = grid_trajectory(sys, eta, &grid, &u, &v, &du)?;
            return Ok(PicardOutcome {
                trajectory,
                distances,
                lipschitz: sys.picard_constant(),
                radius,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        distance: distances.last().copied().unwrap_or(f64::NAN),
    })
}

fn grid_trajectory(
    sys: &TruncatedSystem,
    eta: f64,
    grid: &PicardGrid,
    u: &[f64],
    v: &[f64],
    du: &[f64],
) -> Result<Trajectory> {
    let lambda = sys.lambda();
    let n = grid.r.len();
    let dv: Vec<f64> = (0..n)
        .map(|i| -lambda * sys.radial_power(grid.r[i]) * sys.f_t(grid.r[i], u[i]))
        .collect();
    let states = (0..n).map(|i| (grid.r[i], u[i], v[i], du[i])).collect();
    let segments = (0..n - 1)
        .map(|i| {
            DenseSegment::hermite(
                grid.r[i],
                grid.h,
                [u[i], v[i]],
                [u[i + 1], v[i + 1]],
                [du[i], dv[i]],
                [du[i + 1], dv[i + 1]],
            )
        })
        .collect();
    Trajectory::from_states(eta, StartKind::Center, lambda, states, segments)
}

/// One line of a [`ContinuityReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityEntry {
    pub rho: f64,
    /// `max` of the sup distances for `eta +- rho` against `eta`.
    pub distance: f64,
    /// Grönwall bound `rho exp(L R^2)`; often infinite in floating point.
    pub gronwall_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub eta: f64,
    pub entries: Vec<ContinuityEntry>,
    /// Distances shrink with `rho`, allowing a factor 2 of slack.
    pub monotone: bool,
    pub within_bound: bool,
}

/// Sup-norm distances between neighbouring shots as the offset shrinks.
pub fn continuity_probe(
    sys: &TruncatedSystem,
    eta_center: f64,
    radii: &[f64],
    options: ShotOptions,
) -> Result<ContinuityReport> {
    if radii.windows(2).any(|w| w[1] > w[0]) || radii.iter().any(|&r| r < 0.0) {
        return Err(Error::InvalidArgument("radii must be non-negative and decreasing".into()));
    }
    let base = shoot_rk(&ShotInput::new(sys, eta_center).with_options(options))?;
    let (r_a, r_b) = sys.interval();
    let growth = (sys.picard_constant() * (r_b - r_a).powi(2)).exp();
    let mut entries = Vec::with_capacity(radii.len());
    for &rho in radii {
        let mut distance = 0.0f64;
        if rho > 0.0 {
            for eta in [eta_center - rho, eta_center + rho] {
                let t = shoot_rk(&ShotInput::new(sys, eta).with_options(options))?;
                distance = distance.max(base.sup_distance_u(&t));
            }
        }
        entries.push(ContinuityEntry {
            rho,
            distance,
            gronwall_bound: if rho == 0.0 { 0.0 } else { rho * growth },
        });
    }
    let monotone = entries.windows(2).all(|w| w[1].distance <= 2.0 * w[0].distance);
    let within_bound = entries.iter().all(|e| e.distance <= e.gronwall_bound);
    Ok(ContinuityReport {
        eta: eta_center,
        entries,
        monotone,
        within_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_truncation, ProblemSpec, ScalarFn};

    fn fig1() -> TruncatedSystem {
        let spec = ProblemSpec::ball(2, 10.0, 5.0, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u))
            .with_delta(1.0);
        build_truncation(&spec).unwrap()
    }

    #[test]
    fn outside_strip_is_constant() {
        let sys = fig1();
        let t = shoot_rk(&ShotInput::new(&sys, 11.0)).unwrap();
        assert!(t.samples.iter().all(|s| s.u == 11.0 && s.v == 0.0));
        assert_eq!(t.winding(), 0.0);
    }

    #[test]
    fn zero_shot_is_trivial() {
        let sys = fig1();
        let t = shoot_rk(&ShotInput::new(&sys, 0.0)).unwrap();
        assert!(t.samples.iter().all(|s| s.u == 0.0 && s.v == 0.0));
    }

    #[test]
    fn center_state_is_exact_at_origin() {
        let sys = fig1();
        let t = shoot_rk(&ShotInput::new(&sys, 2.0)).unwrap();
        let s = t.first();
        assert_eq!((s.r, s.u, s.v, s.du), (0.0, 2.0, 0.0, 0.0));
        assert!(t.samples.windows(2).all(|w| w[1].r > w[0].r));
        assert_eq!(t.terminal().r, 10.0);
    }

    #[test]
    fn series_start_matches_taylor() {
        let sys = fig1();
        let eta = 1.5;
        let r = 1e-3;
        let [u, v] = center_series(&sys, eta, r);
        let f0 = eta * eta * eta;
        let taylor = eta - 5.0 * f0 * r * r / 4.0;
        assert!((u - taylor).abs() < 1e-9);
        assert!((v + 5.0 * f0 * r * r / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rk_matches_picard_at_small_eta() {
        let sys = fig1();
        let input = ShotInput::new(&sys, 0.5);
        let rk = shoot_rk(&input).unwrap();
        let opts = ShotOptions {
            abs_tol: 1e-12,
            ..ShotOptions::default()
        };
        let pic = picard_solve(&input.with_options(opts), 1 << 14, 200).unwrap();
        assert!(pic.bound_holds());
        let d = rk.sup_distance_u(&pic.trajectory);
        assert!(d < 1e-6, "sup distance {d}");
        let (ur, vr) = (rk.terminal().u, rk.terminal().v);
        let tp = pic.trajectory.terminal();
        assert!((ur - tp.u).abs() < 1e-6 && (vr - tp.v).abs() < 1e-6);
    }

    #[test]
    fn picard_constant_iterate_outside_strip() {
        let sys = fig1();
        let out = picard_solve(&ShotInput::new(&sys, -11.5), 256, 10).unwrap();
        assert_eq!(out.distances, vec![0.0]);
        assert!(out.trajectory.samples.iter().all(|s| s.u == -11.5));
    }

    #[test]
    fn picard_first_step_contraction() {
        let sys = fig1();
        let grid = PicardGrid::new(10.0, 1024).unwrap();
        let (t0, _, _) = picard_operator(&sys, 0.3, &grid, &vec![0.0; grid.r.len()]);
        let (t1, _, _) = picard_operator(&sys, 0.3, &grid, &vec![1.0; grid.r.len()]);
        let d = t0.iter().zip(&t1).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(d <= sys.picard_constant() * 100.0 * 1.0);
    }

    #[test]
    fn picard_reports_no_convergence() {
        let sys = fig1();
        let err = picard_solve(&ShotInput::new(&sys, 2.0), 256, 2).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 2, .. }));
    }

    #[test]
    fn odd_symmetry() {
        let sys = fig1();
        let a = shoot_rk(&ShotInput::new(&sys, 1.3)).unwrap();
        let b = shoot_rk(&ShotInput::new(&sys, -1.3)).unwrap();
        for k in 0..=200 {
            let r = k as f64 * 0.05;
            assert!((a.eval_u(r) + b.eval_u(r)).abs() < 1e-9);
        }
    }

    #[test]
    fn slope_stays_below_gamma() {
        let sys = fig1();
        for eta in [0.2, 1.0, 3.0, 7.0, 10.5] {
            let t = shoot_rk(&ShotInput::new(&sys, eta)).unwrap();
            assert!(t.max_abs_slope() <= sys.gamma());
            assert!(t.max_abs_slope() < 1.0);
        }
    }

    #[test]
    fn step_rotation_is_bounded() {
        let sys = fig1();
        let t = shoot_rk(&ShotInput::new(&sys, 2.0)).unwrap();
        assert!(t
            .samples
            .windows(2)
            .all(|w| (w[1].theta - w[0].theta).abs() < MAX_STEP_ROTATION));
    }

    #[test]
    fn continuity_probe_shrinks() {
        let sys = fig1();
        let rep = continuity_probe(&sys, 1.0, &[1e-2, 1e-3, 1e-4, 0.0], ShotOptions::default()).unwrap();
        assert!(rep.monotone && rep.within_bound);
        assert_eq!(rep.entries[3].distance, 0.0);
        assert!(rep.entries[2].distance < rep.entries[0].distance);
    }

    #[test]
    fn csv_has_header_and_precision() {
        let sys = fig1();
        let t = shoot_rk(&ShotInput::new(&sys, 0.7)).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("r,u,v,theta"));
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 4);
        assert!(row.starts_with("0.00000000000000e0,7.00000000000000e-1"));
    }

    #[test]
    fn rejects_bad_input() {
        let sys = fig1();
        let bad = ShotInput::new(&sys, 1.0).with_span((5.0, 1.0));
        assert!(shoot_rk(&bad).is_err());
        let nan = ShotInput::new(&sys, f64::NAN);
        assert!(shoot_rk(&nan).is_err());
    }
}
