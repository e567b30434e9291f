//! Rotation estimates for planar systems `x' = X(t, y)`, `y' = -Y(t, x)`
//! squeezed between bound functions.
//!
//! With `a1(s) s <= X(t, s) s <= b1(s) s` and `b2(s) s <= Y(t, s) s <= a2(s) s`
//! every solution turns clockwise, and in the clockwise angle `vartheta` its
//! radius satisfies `d ln(rho) / d vartheta = (xX - yY) / (xY + yX)`. That
//! quotient is increasing in `X` and decreasing in `Y` wherever `xy >= 0`
//! (and the reverse where `xy <= 0`), so the extreme choices give two
//! comparison spirals glued from level curves of
//! `E_A = A1(y) + A2(x)` and `E_B = B1(y) + B2(x)`:
//!
//! * outer: the `b` system on `xy >= 0`, the `a` system on `xy <= 0`;
//! * inner: the `a` system on `xy >= 0`, the `b` system on `xy <= 0`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrate::dopri::{self, Solution, StepCheck, StepControl, Tolerances};
use crate::model::ScalarFn;
use crate::phase;

/// Angular margin of the spiral window beyond `j pi`.
pub const SPAN_MARGIN: f64 = 0.25 * PI;
/// Safety factor on the time bound.
pub const TAU_MARGIN: f64 = 1.1;
/// Start angles tested when sizing the initial radius.
pub const START_ANGLES: usize = 32;
const SPEED_GRID_ANGLES: usize = 256;
const SPEED_GRID_RADII: usize = 64;
/// Radii beyond this multiple of `delta` count as blow-up.
const BLOWUP_FACTOR: f64 = 1e12;

/// Bound functions on `[-delta, delta]`, extended proportionally outside:
/// `f(s) = f(e) s / e` with `e = +-delta`.
#[derive(Debug, Clone)]
pub struct BoundPair {
    pub a1: ScalarFn,
    pub b1: ScalarFn,
    pub a2: ScalarFn,
    pub b2: ScalarFn,
    pub delta: f64,
}

/// Which of the two bounding systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum System {
    A,
    B,
}

/// Which comparison spiral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spiral {
    Outer,
    Inner,
}

impl BoundPair {
    pub fn new(a1: ScalarFn, b1: ScalarFn, a2: ScalarFn, b2: ScalarFn, delta: f64) -> Result<Self> {
        let pair = Self { a1, b1, a2, b2, delta };
        pair.validate()?;
        Ok(pair)
    }

    /// All four bounds equal to the identity: the harmonic oscillator.
    pub fn identity(delta: f64) -> Self {
        let id = || ScalarFn::new(|s| s);
        Self {
            a1: id(),
            b1: id(),
            a2: id(),
            b2: id(),
            delta,
        }
    }

    fn extend(&self, f: &ScalarFn, s: f64) -> f64 {
        if s.abs() <= self.delta {
            f.eval(s)
        } else {
            let e = self.delta.copysign(s);
            f.eval(e) * (s / e)
        }
    }

    pub fn a1(&self, s: f64) -> f64 {
        self.extend(&self.a1, s)
    }
    pub fn b1(&self, s: f64) -> f64 {
        self.extend(&self.b1, s)
    }
    pub fn a2(&self, s: f64) -> f64 {
        self.extend(&self.a2, s)
    }
    pub fn b2(&self, s: f64) -> f64 {
        self.extend(&self.b2, s)
    }

    /// Checks the ordering and sign conditions on a grid and the coercivity
    /// of the extended primitives.
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        let n = 400;
        for k in 1..=n {
            let m = k as f64 / n as f64;
            for s in [m * self.delta, -m * self.delta, 1e-6 * m * self.delta, -1e-6 * m * self.delta] {
                let (a1, b1, a2, b2) = (self.a1(s) * s, self.b1(s) * s, self.a2(s) * s, self.b2(s) * s);
                if !(0.0 < a1 && a1 <= b1 && 0.0 < b2 && b2 <= a2) {
                    return Err(Error::InvalidArgument(format!(
                        "bound ordering fails at s = {s}: a1 s = {a1}, b1 s = {b1}, b2 s = {b2}, a2 s = {a2}"
                    )));
                }
            }
        }
        for f in [&self.a1, &self.b1, &self.a2, &self.b2] {
            for sgn in [1.0, -1.0] {
                let mut prev = self.extended_primitive(f, sgn * self.delta);
                for k in 1..=6 {
                    let big = self.extended_primitive(f, sgn * self.delta * 10f64.powi(k));
                    if !(big > prev) {
                        return Err(Error::InvalidArgument("extended primitive is not coercive".into()));
                    }
                    prev = big;
                }
            }
        }
        Ok(())
    }

    fn pair(&self, sys: System, x: f64, y: f64) -> (f64, f64) {
        match sys {
            System::A => (self.a1(y), self.a2(x)),
            System::B => (self.b1(y), self.b2(x)),
        }
    }

    /// `d ln(rho) / d vartheta` of the chosen spiral at `(x, y)`.
    pub fn spiral_rate(&self, spiral: Spiral, x: f64, y: f64) -> f64 {
        let first_third = x * y >= 0.0;
        let sys = match (spiral, first_third) {
            (Spiral::Outer, true) | (Spiral::Inner, false) => System::B,
            (Spiral::Outer, false) | (Spiral::Inner, true) => System::A,
        };
        let (p, q) = self.pair(sys, x, y);
        let den = q * x + p * y;
        if den == 0.0 {
            0.0
        } else {
            (p * x - q * y) / den
        }
    }

    /// Lower bound `(b2(x) x + a1(y) y) / rho^2` of the clockwise angular speed.
    pub fn angular_speed_floor(&self, x: f64, y: f64) -> f64 {
        (self.b2(x) * x + self.a1(y) * y) / (x * x + y * y)
    }

    /// Primitive of an extended bound, exact on the proportional part.
    fn extended_primitive(&self, f: &ScalarFn, s: f64) -> f64 {
        if s.abs() <= self.delta {
            primitive(|x| f.eval(x), s)
        } else {
            let e = self.delta.copysign(s);
            primitive(|x| f.eval(x), e) + 0.5 * f.eval(e) / e * (s * s - e * e)
        }
    }

    /// `E_A(x, y) = A1(y) + A2(x)`.
    pub fn energy_a(&self, x: f64, y: f64) -> f64 {
        self.extended_primitive(&self.a1, y) + self.extended_primitive(&self.a2, x)
    }

    /// `E_B(x, y) = B1(y) + B2(x)`.
    pub fn energy_b(&self, x: f64, y: f64) -> f64 {
        self.extended_primitive(&self.b1, y) + self.extended_primitive(&self.b2, x)
    }

    /// SHA-256 of the bounds sampled on a fixed grid, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.delta.to_le_bytes());
        for k in -64..=64 {
            let s = self.delta * k as f64 / 64.0;
            for f in [&self.a1, &self.b1, &self.a2, &self.b2] {
                h.update(f.eval(s).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `int_0^s f` by composite five-point Gauss–Legendre.
pub fn primitive(f: impl Fn(f64) -> f64, s: f64) -> f64 {
    let panels = 32;
    let h = s / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * acc
}

/// One comparison spiral `ln rho(vartheta)` with dense output.
#[derive(Debug, Clone)]
pub struct SpiralCurve {
    pub theta0: f64,
    sol: Solution<1>,
}

impl SpiralCurve {
    pub fn radius(&self, theta: f64) -> f64 {
        self.sol.eval(theta)[0].exp()
    }

    pub fn max_radius(&self) -> f64 {
        self.sol.y.iter().fold(0.0f64, |m, y| m.max(y[0].exp()))
    }

    pub fn min_radius(&self) -> f64 {
        self.sol.y.iter().fold(f64::INFINITY, |m, y| m.min(y[0].exp()))
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.sol.t.iter().zip(&self.sol.y).map(|(&t, y)| (t, y[0].exp()))
    }
}

#[derive(Debug, Clone)]
pub struct SpiralPair {
    pub outer: SpiralCurve,
    pub inner: SpiralCurve,
}

fn integrate_spiral(bounds: &BoundPair, spiral: Spiral, rho0: f64, theta0: f64, span: f64) -> Result<SpiralCurve> {
    let ctl = StepControl::new(Tolerances::new(1e-12, 1e-12));
    let hi = (bounds.delta * BLOWUP_FACTOR).ln();
    let sol = dopri::integrate(
        |th, y: &[f64; 1]| {
            let rho = y[0].exp();
            [bounds.spiral_rate(spiral, rho * th.cos(), -rho * th.sin())]
        },
        theta0,
        [rho0.ln()],
        theta0 + span,
        &ctl,
        |_, _, _, y| {
            if !(y[0] < hi) || !y[0].is_finite() {
                StepCheck::Fail(Error::SpiralBlowup(y[0].exp()))
            } else {
                StepCheck::Accept
            }
        },
    )?;
    Ok(SpiralCurve { theta0, sol })
}

/// Outer and inner spirals through `(rho0 cos theta0, -rho0 sin theta0)`
/// over `[theta0, theta0 + span]`.
pub fn build_spirals(bounds: &BoundPair, rho0: f64, theta0: f64, span: f64) -> Result<SpiralPair> {
    if !(rho0 > 0.0 && span > 0.0) {
        return Err(Error::InvalidArgument("spiral needs rho0 > 0 and span > 0".into()));
    }
    Ok(SpiralPair {
        outer: integrate_spiral(bounds, Spiral::Outer, rho0, theta0, span)?,
        inner: integrate_spiral(bounds, Spiral::Inner, rho0, theta0, span)?,
    })
}

/// Time and radius thresholds for `j` half turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralEstimate {
    pub j: u32,
    pub tau_star: f64,
    pub rho_star: f64,
    pub omega_min: f64,
    /// Extreme spiral radii over all start angles.
    pub outer_max: f64,
    pub inner_min: f64,
}

/// JSON certificate for a threshold estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCertificate {
    pub j: u32,
    pub tau_star: f64,
    pub rho_star: f64,
    pub bounds_hash: String,
}

impl SpiralEstimate {
    pub fn certificate(&self, bounds: &BoundPair) -> ThresholdCertificate {
        ThresholdCertificate {
            j: self.j,
            tau_star: crate::output::round15(self.tau_star),
            rho_star: crate::output::round15(self.rho_star),
            bounds_hash: bounds.fingerprint(),
        }
    }
}

fn start_angles() -> impl Iterator<Item = f64> {
    (0..START_ANGLES).map(|k| 2.0 * PI * k as f64 / START_ANGLES as f64)
}

/// `(max outer, min inner)` over the start angles, or `None` on blow-up.
fn spiral_extent(bounds: &BoundPair, rho: f64, span: f64) -> Option<(f64, f64)> {
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    for th in start_angles() {
        let pair = build_spirals(bounds, rho, th, span).ok()?;
        hi = hi.max(pair.outer.max_radius());
        lo = lo.min(pair.inner.min_radius());
    }
    Some((hi, lo))
}

/// Picks `rho*` so that every outer spiral started on the circle of radius
/// `rho*` stays inside the `delta` box for `j pi` plus a margin, then bounds
/// the time needed for `j` half turns from the slowest angular speed in the
/// band between the spirals.
pub fn estimate_thresholds(bounds: &BoundPair, j: u32) -> Result<SpiralEstimate> {
    if j == 0 {
        return Err(Error::InvalidArgument("j must be at least 1".into()));
    }
    let span = j as f64 * PI + SPAN_MARGIN;
    let limit = bounds.delta * (1.0 - 1e-3);
    let fits = |rho: f64| spiral_extent(bounds, rho, span).is_some_and(|(hi, _)| hi < limit);
    let mut lo = (bounds.delta * 1e-150).ln();
    let mut hi = bounds.delta.ln();
    if !fits(lo.exp()) {
        return Err(Error::BoxExceeded(j));
    }
    if fits(limit) {
        lo = limit.ln();
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fits(mid.exp()) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-6 {
                break;
            }
        }
    }
    let rho_star = lo.exp();
    let (outer_max, inner_min) = spiral_extent(bounds, rho_star, span).ok_or(Error::BoxExceeded(j))?;
    let mut omega_min = f64::INFINITY;
    for ia in 0..SPEED_GRID_ANGLES {
        let th = 2.0 * PI * ia as f64 / SPEED_GRID_ANGLES as f64;
        for ir in 0..SPEED_GRID_RADII {
            let t = ir as f64 / (SPEED_GRID_RADII - 1) as f64;
            let rho = inner_min * (outer_max / inner_min).powf(t);
            omega_min = omega_min.min(bounds.angular_speed_floor(rho * th.cos(), -rho * th.sin()));
        }
    }
    if !(omega_min > 0.0) {
        return Err(Error::BoxExceeded(j));
    }
    Ok(SpiralEstimate {
        j,
        tau_star: TAU_MARGIN * j as f64 * PI / omega_min,
        rho_star,
        omega_min,
        outer_max,
        inner_min,
    })
}

/// Checks of the energies along a sampled path `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Most negative relative change of `E_A` on `xy >= 0` steps and most
    /// positive on `xy <= 0` steps, sign-adjusted so that `<= 0` is fine.
    pub worst_a: f64,
    pub worst_b: f64,
    pub pairs_checked: usize,
    pub a_ok: bool,
    pub b_ok: bool,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.a_ok && self.b_ok
    }
}

/// `E_A` must not decrease on steps where `xy >= 0` and not increase where
/// `xy <= 0`; `E_B` the other way round. Steps crossing an axis are skipped.
pub fn verify_energy_monotonicity(bounds: &BoundPair, path: &[(f64, f64)], rel_tol: f64) -> EnergyReport {
    let ea: Vec<f64> = path.iter().map(|&(x, y)| bounds.energy_a(x, y)).collect();
    let eb: Vec<f64> = path.iter().map(|&(x, y)| bounds.energy_b(x, y)).collect();
    let mut worst_a = f64::NEG_INFINITY;
    let mut worst_b = f64::NEG_INFINITY;
    let mut pairs = 0;
    for i in 0..path.len().saturating_sub(1) {
        let p0 = path[i].0 * path[i].1;
        let p1 = path[i + 1].0 * path[i + 1].1;
        let dir = if p0 >= 0.0 && p1 >= 0.0 {
            1.0
        } else if p0 <= 0.0 && p1 <= 0.0 {
            -1.0
        } else {
            continue;
        };
        pairs += 1;
        let sa = ea[i].abs() + ea[i + 1].abs() + f64::MIN_POSITIVE;
        let sb = eb[i].abs() + eb[i + 1].abs() + f64::MIN_POSITIVE;
        // positive values are violations
        worst_a = worst_a.max(-dir * (ea[i + 1] - ea[i]) / sa);
        worst_b = worst_b.max(dir * (eb[i + 1] - eb[i]) / sb);
    }
    EnergyReport {
        worst_a,
        worst_b,
        pairs_checked: pairs,
        a_ok: worst_a <= rel_tol,
        b_ok: worst_b <= rel_tol,
    }
}

/// A squeezed system `X = a1 + s1(t)(b1 - a1)`, `Y = a2 + s2(t)(b2 - a2)`
/// with `s(t) = clamp(c0 + c1 sin(w t + p), 0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedSystem {
    pub s1: [f64; 4],
    pub s2: [f64; 4],
    pub theta0: f64,
}

fn blend(c: &[f64; 4], t: f64) -> f64 {
    (c[0] + c[1] * (c[2] * t + c[3]).sin()).clamp(0.0, 1.0)
}

impl SqueezedSystem {
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut coef = || {
            [
                rng.random_range(-0.2..1.2),
                rng.random_range(0.0..1.0),
                rng.random_range(0.1..10.0),
                rng.random_range(0.0..2.0 * PI),
            ]
        };
        let s1 = coef();
        let s2 = coef();
        Self {
            s1,
            s2,
            theta0: rng.random_range(0.0..2.0 * PI),
        }
    }

    pub fn rhs(&self, bounds: &BoundPair, t: f64, x: f64, y: f64) -> (f64, f64) {
        let (a1, b1) = (bounds.a1(y), bounds.b1(y));
        let (a2, b2) = (bounds.a2(x), bounds.b2(x));
        let xd = a1 + blend(&self.s1, t) * (b1 - a1);
        let yd = -(a2 + blend(&self.s2, t) * (b2 - a2));
        (xd, yd)
    }
}

/// Integrates `sys` from radius `rho0` at its start angle over `[0, t_end]`.
///
/// Returns `(t, x, y, vartheta)` samples.
pub fn run_squeezed(
    bounds: &BoundPair,
    sys: &SqueezedSystem,
    rho0: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64, f64, f64)>> {
    let ctl = StepControl::new(Tolerances::new(1e-12 * rho0, 1e-10));
    let y0 = [rho0 * sys.theta0.cos(), -rho0 * sys.theta0.sin()];
    let sol = dopri::integrate(
        |t, s: &[f64; 2]| {
            let (a, b) = sys.rhs(bounds, t, s[0], s[1]);
            [a, b]
        },
        0.0,
        y0,
        t_end,
        &ctl,
        |_, a, _, b| {
            let inc = phase::principal_increment(phase::scaled_angle(a[0], a[1], 1.0), phase::scaled_angle(b[0], b[1], 1.0));
            if inc.abs() >= PI / 4.0 {
                StepCheck::Shrink
            } else {
                StepCheck::Accept
            }
        },
    )?;
    let pts: Vec<(f64, f64)> = sol.y.iter().map(|y| (y[0], y[1])).collect();
    let mut theta = phase::lift_states(&pts, 1.0)?;
    // anchor the lift at the nominal start angle
    let shift = sys.theta0 - theta[0];
    for t in &mut theta {
        *t += shift;
    }
    Ok(sol
        .t
        .iter()
        .zip(&pts)
        .zip(theta)
        .map(|((&t, &(x, y)), th)| (t, x, y, th))
        .collect())
}

/// Results of the randomized check for one `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomValidation {
    pub j: u32,
    pub systems: usize,
    pub tau_star: f64,
    pub rho_star: f64,
    pub min_winding: f64,
    /// `min rho / rho*` over all runs.
    pub min_radius_ratio: f64,
    pub all_wind: bool,
    pub origin_clear: bool,
    pub spirals_bound: bool,
    pub failures: Vec<String>,
}

impl RandomValidation {
    pub fn passed(&self) -> bool {
        self.all_wind && self.origin_clear && self.spirals_bound && self.failures.is_empty()
    }
}

/// Runs `n` random squeezed systems from `rho*` over `1.05 tau*`.
pub fn validate_random(bounds: &BoundPair, est: &SpiralEstimate, n: usize, seed: u64) -> RandomValidation {
    let j = est.j;
    let t_end = 1.05 * est.tau_star;
    let runs: Vec<std::result::Result<(f64, f64, bool), String>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((j as u64) << 32) ^ i as u64);
            let sys = SqueezedSystem::random(&mut rng);
            let path = run_squeezed(bounds, &sys, est.rho_star, t_end).map_err(|e| format!("system {i}: {e}"))?;
            let th_end = path.last().map_or(sys.theta0, |p| p.3);
            let winding = th_end - sys.theta0;
            let min_r = path
                .iter()
                .fold(f64::INFINITY, |m, p| m.min((p.1 * p.1 + p.2 * p.2).sqrt()));
            let span = (th_end - sys.theta0).max(1e-12) + 1e-9;
            let spirals = build_spirals(bounds, est.rho_star, sys.theta0, span).map_err(|e| format!("system {i}: {e}"))?;
            let slack = 1e-7;
            let bounded = path.iter().all(|p| {
                let r = (p.1 * p.1 + p.2 * p.2).sqrt();
                r <= spirals.outer.radius(p.3) * (1.0 + slack) && r >= spirals.inner.radius(p.3) * (1.0 - slack)
            });
            Ok((winding, min_r / est.rho_star, bounded))
        })
        .collect();
    let mut out = RandomValidation {
        j,
        systems: n,
        tau_star: est.tau_star,
        rho_star: est.rho_star,
        min_winding: f64::INFINITY,
        min_radius_ratio: f64::INFINITY,
        all_wind: true,
        origin_clear: true,
        spirals_bound: true,
        failures: Vec::new(),
    };
    let target = j as f64 * PI;
    for r in runs {
        match r {
            Ok((w, ratio, bounded)) => {
                out.min_winding = out.min_winding.min(w);
                out.min_radius_ratio = out.min_radius_ratio.min(ratio);
                out.all_wind &= w > target;
                out.origin_clear &= ratio >= 1e-6;
                out.spirals_bound &= bounded;
            }
            Err(e) => out.failures.push(e),
        }
    }
    out
}

/// Bounds for the rescaled radial system on `[r_lo, r_hi]`.
///
/// With `t = sqrt(lambda) r`, `x = u`, `y = v / sqrt(lambda)` the radial
/// equation becomes `x' = X(t, y)`, `y' = -Y(t, x)` with
/// `y^2 / (phi'(gamma) r_hi^{N-1}) <= X y <= y^2 / r_lo^{N-1}` and
/// `q_min r_lo^{N-1} g(x) x <= Y x <= q_max r_hi^{N-1} g(x) x`.
pub fn radial_bounds(
    g: ScalarFn,
    dimension: u32,
    slope_at_gamma: f64,
    q_min: f64,
    q_max: f64,
    r_lo: f64,
    r_hi: f64,
    delta: f64,
) -> Result<BoundPair> {
    let p = dimension as i32 - 1;
    let (lo_pow, hi_pow) = (r_lo.powi(p), r_hi.powi(p));
    let a1_c = 1.0 / (slope_at_gamma * hi_pow);
    let b1_c = 1.0 / lo_pow;
    let b2_c = q_min * lo_pow;
    let a2_c = q_max * hi_pow;
    let g2 = g.clone();
    BoundPair::new(
        ScalarFn::new(move |s| a1_c * s),
        ScalarFn::new(move |s| b1_c * s),
        ScalarFn::new(move |s| a2_c * g.eval(s)),
        ScalarFn::new(move |s| b2_c * g2.eval(s)),
        delta,
    )
}

/// Energy check on a radial shot over `[r_lo, r_hi]` after the rescaling
/// `t = sqrt(lambda) r`, `x = u`, `y = v / sqrt(lambda)`, against the bounds
/// of [`radial_bounds`].
pub fn radial_energy_check(
    sys: &crate::model::TruncatedSystem,
    traj: &crate::integrate::Trajectory,
    r_lo: f64,
    r_hi: f64,
    rel_tol: f64,
) -> Result<EnergyReport> {
    let q = sys.f.q();
    let n = 400;
    let (mut q_min, mut q_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..=n {
        let qv = q.eval(r_lo + (r_hi - r_lo) * k as f64 / n as f64);
        q_min = q_min.min(qv);
        q_max = q_max.max(qv);
    }
    let bounds = radial_bounds(
        sys.f.g().clone(),
        sys.dimension(),
        sys.flux.slope_at_gamma(),
        q_min,
        q_max,
        r_lo,
        r_hi,
        sys.strip(),
    )?;
    let sl = sys.lambda().sqrt();
    let path: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|s| s.r >= r_lo && s.r <= r_hi)
        .map(|s| (s.u, s.v / sl))
        .collect();
    Ok(verify_energy_monotonicity(&bounds, &path, rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(a: f64, b: f64) -> BoundPair {
        BoundPair::new(
            ScalarFn::new(move |s| a * s),
            ScalarFn::new(move |s| b * s),
            ScalarFn::new(move |s| b * s),
            ScalarFn::new(move |s| a * s),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn identity_spirals_are_circles() {
        let b = BoundPair::identity(1.0);
        let p = build_spirals(&b, 0.3, 0.7, 4.0 * PI).unwrap();
        for (_, r) in p.outer.samples().chain(p.inner.samples()) {
            assert!((r - 0.3).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_thresholds() {
        let b = BoundPair::identity(1.0);
        for j in 1..=3 {
            let est = estimate_thresholds(&b, j).unwrap();
            assert!((est.omega_min - 1.0).abs() < 1e-12);
            assert!((est.tau_star - 1.1 * j as f64 * PI).abs() < 1e-9);
            assert!(est.rho_star < 1.0 && est.rho_star > 0.99);
        }
    }

    #[test]
    fn linear_spirals_follow_level_curves() {
        // a = s, b = 2 s: E_B = y^2 + x^2 / 2 along the b pieces
        let b = linear(1.0, 2.0);
        // start at vartheta = pi/2 + 0.1, inside the quarter where xy >= 0
        let th0 = PI / 2.0 + 0.1;
        let p = build_spirals(&b, 0.2, th0, 1.2).unwrap();
        let e = |th: f64, r: f64| {
            let (x, y) = (r * th.cos(), -r * th.sin());
            (b.energy_b(x, y), b.energy_a(x, y))
        };
        let (eb0, ea0) = e(th0, 0.2);
        for (th, r) in p.outer.samples().filter(|(t, _)| *t <= PI) {
            assert!((e(th, r).0 - eb0).abs() < 1e-10);
        }
        for (th, r) in p.inner.samples().filter(|(t, _)| *t <= PI) {
            assert!((e(th, r).1 - ea0).abs() < 1e-10);
        }
        // monotone between the two spirals
        for k in 0..=20 {
            let th = th0 + 1.2 * k as f64 / 20.0;
            assert!(p.inner.radius(th) <= p.outer.radius(th) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn spiral_is_continuous_across_axes() {
        let b = linear(1.0, 3.0);
        let p = build_spirals(&b, 0.1, 0.0, 2.0 * PI).unwrap();
        for k in 0..4 {
            let th = k as f64 * PI / 2.0;
            let (l, r) = (p.outer.radius(th - 1e-9), p.outer.radius(th + 1e-9));
            assert!((l - r).abs() < 1e-8 * l);
        }
    }

    #[test]
    fn harmonic_energy_constant() {
        let b = BoundPair::identity(2.0);
        let path: Vec<(f64, f64)> = (0..200).map(|k| {
            let t = k as f64 * 0.05;
            (0.5 * t.cos(), -0.5 * t.sin())
        }).collect();
        let rep = verify_energy_monotonicity(&b, &path, 1e-10);
        assert!(rep.passed());
        assert!(rep.worst_a.abs() < 1e-12 && rep.worst_b.abs() < 1e-12);
    }

    #[test]
    fn violated_bounds_fail_energy_check() {
        // path of the system x' = 3y, y' = -x, which leaves the corridor of a = s, b = 2 s
        let b = linear(1.0, 2.0);
        let path: Vec<(f64, f64)> = (0..400).map(|k| {
            let t = k as f64 * 0.01;
            let w = 3f64.sqrt();
            (0.5 * (w * t).cos(), -0.5 / w * (w * t).sin())
        }).collect();
        let rep = verify_energy_monotonicity(&b, &path, 1e-10);
        assert!(!rep.passed());
    }

    #[test]
    fn random_systems_rotate() {
        let b = linear(1.0, 2.0);
        let est = estimate_thresholds(&b, 2).unwrap();
        let v = validate_random(&b, &est, 10, 7);
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn extension_keeps_ordering() {
        let b = BoundPair::new(
            ScalarFn::new(|s| s * s * s),
            ScalarFn::new(|s| s + s * s * s),
            ScalarFn::new(|s| 2.0 * s),
            ScalarFn::new(|s| s),
            0.5,
        )
        .unwrap();
        for s in [3.0, -7.0, 100.0] {
            assert!(b.a1(s) * s <= b.b1(s) * s && b.b2(s) * s <= b.a2(s) * s);
        }
        assert_eq!(b.a1(2.0), 0.125 * 4.0);
    }

    #[test]
    fn fig1_shot_respects_energies() {
        use crate::model::{build_truncation, ProblemSpec};
        let spec = ProblemSpec::ball(2, 10.0, 5.0, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u));
        let sys = build_truncation(&spec).unwrap();
        for eta in [0.3, 1.2, 4.0] {
            let traj = crate::shoot_rk(&crate::ShotInput::new(&sys, eta)).unwrap();
            let rep = radial_energy_check(&sys, &traj, 2.5, 7.5, 1e-9).unwrap();
            assert!(rep.pairs_checked > 10 && rep.passed(), "eta = {eta}: {rep:?}");
        }
    }

    #[test]
    fn bad_bounds_rejected() {
        let r = BoundPair::new(
            ScalarFn::new(|s| 2.0 * s),
            ScalarFn::new(|s| s),
            ScalarFn::new(|s| s),
            ScalarFn::new(|s| s),
            1.0,
        );
        assert!(r.is_err());
    }
}
