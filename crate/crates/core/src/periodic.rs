//! The `T`-periodic problem `(phi(u'))' + lambda q(t) g(u) = 0` through the
//! return map of the truncated planar system
//! `u' = phi~^{-1}(v)`, `v' = -lambda f~(t, u)`.
//!
//! Angles use the same clockwise convention as the radial solver:
//! `theta = atan2(-v / sqrt(lambda), u)`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::dopri::{self, StepCheck, StepControl, Tolerances};
use crate::integrate::MAX_STEP_ROTATION;
use crate::model::{ScalarFn, TruncatedFlux, TruncatedSource};
use crate::output::round15;
use crate::phase;

/// Default truncation half-width; the problem has no natural strip.
pub const DEFAULT_STRIP: f64 = 10.0;
/// Acceptance threshold on `|P(z) - z|`.
pub const FIXED_POINT_TOL: f64 = 1e-8;

/// A periodic problem with its truncation.
#[derive(Debug, Clone)]
pub struct PeriodicSpec {
    pub period: f64,
    pub lambda: f64,
    pub strip: f64,
    pub source: TruncatedSource,
    pub flux: TruncatedFlux,
    pub tol: Tolerances,
}

/// JSON form of a [`PeriodicSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicDoc {
    pub period: f64,
    pub lambda: f64,
    /// Weight in the variable `t`.
    pub q: String,
    /// Nonlinearity in the variable `u`.
    pub g: String,
    #[serde(default = "default_strip")]
    pub strip: f64,
}

fn default_strip() -> f64 {
    DEFAULT_STRIP
}

impl PeriodicDoc {
    pub fn into_spec(self) -> Result<PeriodicSpec> {
        PeriodicSpec::new(
            self.period,
            self.lambda,
            ScalarFn::parse(&self.q, &["t", "r"])?,
            ScalarFn::parse(&self.g, &["u"])?,
            self.strip,
        )
    }
}

impl PeriodicSpec {
    /// Builds the truncation: `f~ = q g ramp` with the strip `strip`, and the
    /// flux cut at `gamma = phi^{-1}(lambda M T)`, which bounds `|v|` along
    /// any solution with a zero of `v` in each period.
    pub fn new(period: f64, lambda: f64, q: ScalarFn, g: ScalarFn, strip: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidSpec("period must be positive".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidSpec("lambda must be positive".into()));
        }
        if !(strip > 0.0 && strip.is_finite()) {
            return Err(Error::InvalidSpec("strip must be positive".into()));
        }
        let (q0, q1) = (q.eval(0.0), q.eval(period));
        if (q0 - q1).abs() > 1e-9 * (1.0 + q0.abs()) {
            return Err(Error::InvalidSpec(format!("q is not periodic: q(0) = {q0}, q(T) = {q1}")));
        }
        let source = TruncatedSource::new(q, g, strip, 0.0, period)?;
        let flux = TruncatedFlux::from_flux_bound(lambda * source.bound() * period);
        Ok(Self {
            period,
            lambda,
            strip,
            source,
            flux,
            tol: Tolerances::new(1e-12, 1e-12),
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.period, lambda, self.source.q().clone(), self.source.g().clone(), self.strip)
    }

    pub fn gamma(&self) -> f64 {
        self.flux.gamma()
    }

    fn rhs(&self, t: f64, z: &[f64; 2]) -> [f64; 2] {
        [self.flux.phi_inv(z[1]), -self.lambda * self.source.eval(t, z[0])]
    }

    /// Radius in scaled coordinates `(u, v / sqrt(lambda))`.
    pub fn scaled_radius(&self, u: f64, v: f64) -> f64 {
        u.hypot(v / self.lambda.sqrt())
    }

    /// Point of the scaled circle of radius `rho` at clockwise angle `theta`.
    pub fn circle_point(&self, rho: f64, theta: f64) -> (f64, f64) {
        (rho * theta.cos(), -self.lambda.sqrt() * rho * theta.sin())
    }

    /// A circle radius beyond which no point winds a full turn: there either
    /// `|u|` exceeds the strip by more than the drift over one period, or `v`
    /// cannot change sign.
    pub fn outer_radius(&self) -> f64 {
        let drift = 2.0 * self.period;
        let swing = self.lambda.sqrt() * self.source.bound() * self.period;
        1.01 * std::f64::consts::SQRT_2 * (self.strip + 1.0 + drift).max(swing)
    }

    fn flow(&self, z0: (f64, f64)) -> Result<dopri::Solution<2>> {
        let sl = self.lambda.sqrt();
        let ctl = StepControl::new(self.tol);
        dopri::integrate(
            |t, z| self.rhs(t, z),
            0.0,
            [z0.0, z0.1],
            self.period,
            &ctl,
            |_, a, t, b| {
                let inc = phase::principal_increment(
                    phase::scaled_angle(a[0], a[1], sl),
                    phase::scaled_angle(b[0], b[1], sl),
                );
                if inc.abs() >= MAX_STEP_ROTATION {
                    StepCheck::Shrink
                } else if b[0] == 0.0 && b[1] == 0.0 {
                    StepCheck::Fail(Error::OriginHit(t))
                } else {
                    StepCheck::Accept
                }
            },
        )
    }

    /// Samples `(t, u, v)` of the solution through `z0` over one period.
    pub fn orbit(&self, z0: (f64, f64)) -> Result<Vec<(f64, f64, f64)>> {
        let sol = self.flow(z0)?;
        Ok(sol.t.iter().zip(&sol.y).map(|(&t, y)| (t, y[0], y[1])).collect())
    }
}

/// One evaluation of the return map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMapSample {
    pub start: (f64, f64),
    pub end: (f64, f64),
    /// Clockwise winding over `[0, T]`.
    pub winding: f64,
    pub max_abs_u: f64,
    pub max_abs_slope: f64,
}

/// `P(z)` with the lifted winding over one period.
pub fn poincare_map(spec: &PeriodicSpec, z: (f64, f64)) -> Result<ReturnMapSample> {
    if z.0 == 0.0 && z.1 == 0.0 {
        return Ok(ReturnMapSample {
            start: z,
            end: z,
            winding: 0.0,
            max_abs_u: 0.0,
            max_abs_slope: 0.0,
        });
    }
    let sol = spec.flow(z)?;
    let pts: Vec<(f64, f64)> = sol.y.iter().map(|y| (y[0], y[1])).collect();
    let theta = phase::lift_states(&pts, spec.lambda.sqrt())?;
    let end = *pts.last().unwrap_or(&z);
    let max_abs_u = pts.iter().fold(0.0f64, |m, p| m.max(p.0.abs()));
    let max_abs_slope = pts.iter().fold(0.0f64, |m, p| m.max(spec.flux.phi_inv(p.1).abs()));
    Ok(ReturnMapSample {
        start: z,
        end,
        winding: theta.last().copied().unwrap_or(0.0) - theta[0],
        max_abs_u,
        max_abs_slope,
    })
}

/// Windings sampled on one circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleWinding {
    pub radius: f64,
    pub min_winding: f64,
    pub max_winding: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistReport {
    pub lambda: f64,
    pub k: u32,
    pub circles: Vec<CircleWinding>,
    /// Innermost circle winds less than a full turn everywhere.
    pub inner_below: bool,
    /// Outermost circle winds less than a full turn everywhere.
    pub outer_below: bool,
    /// Radius of the first circle winding more than `2 k pi` everywhere.
    pub witness: Option<f64>,
    /// Largest change of the mean winding between adjacent circles.
    pub max_adjacent_jump: f64,
}

impl TwistReport {
    pub fn found(&self) -> bool {
        self.inner_below && self.outer_below && self.witness.is_some()
    }

    /// The witness radius, or `TwistNotFound`.
    pub fn require(&self) -> Result<f64> {
        match (self.found(), self.witness) {
            (true, Some(r)) => Ok(r),
            _ => Err(Error::TwistNotFound(format!(
                "lambda = {}: inner below {}, outer below {}, witness {:?}",
                self.lambda, self.inner_below, self.outer_below, self.witness
            ))),
        }
    }
}

/// Angles sampled per circle.
pub const CIRCLE_POINTS: usize = 32;

/// Geometric radii from `1e-4` to the outer radius.
pub fn default_radii(spec: &PeriodicSpec, count: usize) -> Vec<f64> {
    let lo: f64 = 1e-4;
    let hi = spec.outer_radius();
    let n = count.max(2);
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Samples windings on the scaled circles of the given radii.
pub fn verify_twist(spec: &PeriodicSpec, k: u32, radii: &[f64]) -> Result<TwistReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least two radii".into()));
    }
    let jobs: Vec<(usize, f64)> = radii
        .iter()
        .enumerate()
        .flat_map(|(i, _)| (0..CIRCLE_POINTS).map(move |a| (i, a as f64)))
        .collect();
    let windings: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, a)| {
            let th = 2.0 * PI * a / CIRCLE_POINTS as f64;
            poincare_map(spec, spec.circle_point(radii[i], th)).map(|s| s.winding)
        })
        .collect();
    let mut circles = Vec::with_capacity(radii.len());
    let mut means = Vec::with_capacity(radii.len());
    for (i, &radius) in radii.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for w in &windings[i * CIRCLE_POINTS..(i + 1) * CIRCLE_POINTS] {
            let w = *w.as_ref().map_err(Clone::clone)?;
            lo = lo.min(w);
            hi = hi.max(w);
            sum += w;
        }
        means.push(sum / CIRCLE_POINTS as f64);
        circles.push(CircleWinding {
            radius,
            min_winding: lo,
            max_winding: hi,
        });
    }
    let full = 2.0 * PI;
    let twist = 2.0 * PI * k as f64;
    let witness = circles.iter().find(|c| c.min_winding > twist).map(|c| c.radius);
    let max_adjacent_jump = means.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()));
    Ok(TwistReport {
        lambda: spec.lambda,
        k,
        inner_below: circles[0].max_winding < full,
        outer_below: circles[circles.len() - 1].max_winding < full,
        witness,
        circles,
        max_adjacent_jump,
    })
}

/// First `lambda` of the (ascending) grid with a twist for `k`.
pub fn twist_sweep(spec: &PeriodicSpec, k: u32, lambdas: &[f64], radii_count: usize) -> Result<Vec<TwistReport>> {
    let mut out = Vec::new();
    for &lambda in lambdas {
        let s = spec.with_lambda(lambda)?;
        let rep = verify_twist(&s, k, &default_radii(&s, radii_count))?;
        let done = rep.found();
        out.push(rep);
        if done {
            break;
        }
    }
    Ok(out)
}

/// An accepted fixed point of the return map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub u0: f64,
    pub v0: f64,
    pub residual: f64,
    pub winding: f64,
    pub j: u32,
    pub max_abs_u: f64,
    pub max_abs_slope: f64,
}

impl FixedPoint {
    pub fn rounded(&self) -> Self {
        Self {
            u0: round15(self.u0),
            v0: round15(self.v0),
            residual: round15(self.residual),
            winding: round15(self.winding),
            j: self.j,
            max_abs_u: round15(self.max_abs_u),
            max_abs_slope: round15(self.max_abs_slope),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchOptions {
    pub seed_angles: usize,
    pub seed_radii: usize,
    pub max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed_angles: 16,
            seed_radii: 8,
            max_iter: 60,
        }
    }
}

fn residual_vec(s: &ReturnMapSample) -> [f64; 2] {
    [s.end.0 - s.start.0, s.end.1 - s.start.1]
}

fn norm(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// Levenberg–Marquardt on `P(z) - z` with a forward-difference Jacobian.
fn newton(spec: &PeriodicSpec, seed: (f64, f64), max_iter: usize) -> Option<(f64, f64)> {
    let mut z = seed;
    let mut s = poincare_map(spec, z).ok()?;
    let mut f = residual_vec(&s);
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        if norm(f) < 0.1 * FIXED_POINT_TOL {
            break;
        }
        let hu = 1e-7 * z.0.abs().max(1e-3);
        let hv = 1e-7 * z.1.abs().max(1e-3 * spec.lambda.sqrt());
        let su = poincare_map(spec, (z.0 + hu, z.1)).ok()?;
        let sv = poincare_map(spec, (z.0, z.1 + hv)).ok()?;
        let (fu, fv) = (residual_vec(&su), residual_vec(&sv));
        let j = [
            [(fu[0] - f[0]) / hu, (fv[0] - f[0]) / hv],
            [(fu[1] - f[1]) / hu, (fv[1] - f[1]) / hv],
        ];
        let mut improved = false;
        for _ in 0..12 {
            // (J^T J + mu diag) dz = -J^T f
            let a = j[0][0] * j[0][0] + j[1][0] * j[1][0];
            let b = j[0][0] * j[0][1] + j[1][0] * j[1][1];
            let c = j[0][1] * j[0][1] + j[1][1] * j[1][1];
            let (a, c) = (a * (1.0 + mu), c * (1.0 + mu));
            let g0 = -(j[0][0] * f[0] + j[1][0] * f[1]);
            let g1 = -(j[0][1] * f[0] + j[1][1] * f[1]);
            let det = a * c - b * b;
            if !(det.abs() > 0.0) {
                mu *= 10.0;
                continue;
            }
            let dz = ((c * g0 - b * g1) / det, (a * g1 - b * g0) / det);
            let cand = (z.0 + dz.0, z.1 + dz.1);
            if let Ok(sc) = poincare_map(spec, cand) {
                let fc = residual_vec(&sc);
                if norm(fc) < norm(f) {
                    z = cand;
                    s = sc;
                    f = fc;
                    mu = (mu * 0.2).max(1e-12);
                    improved = true;
                    break;
                }
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let _ = s;
    (norm(f) < FIXED_POINT_TOL).then_some(z)
}

/// Accepts `z` if it is a fixed point with winding `2 j pi` that respects the
/// strip and the slope bound.
fn accept(spec: &PeriodicSpec, z: (f64, f64), j: u32) -> Option<FixedPoint> {
    let s = poincare_map(spec, z).ok()?;
    let residual = norm(residual_vec(&s));
    let target = 2.0 * PI * j as f64;
    let ok = residual < FIXED_POINT_TOL
        && (s.winding - target).abs() < 1e-3
        && s.max_abs_u < spec.strip
        && s.max_abs_slope <= spec.gamma()
        && s.max_abs_slope < 1.0;
    ok.then(|| FixedPoint {
        u0: z.0,
        v0: z.1,
        residual,
        winding: s.winding,
        j,
        max_abs_u: s.max_abs_u,
        max_abs_slope: s.max_abs_slope,
    })
}

/// Best-effort search for fixed points with winding `2 j pi` from seeds on
/// scaled circles between `r_in` and `r_out`.
///
/// Mirror images `-z` of accepted points are checked as well. An empty
/// result means the search missed, not that no solution exists.
pub fn find_periodic(
    spec: &PeriodicSpec,
    j: u32,
    r_in: f64,
    r_out: f64,
    opts: &SearchOptions,
) -> Result<Vec<FixedPoint>> {
    if !(0.0 < r_in && r_in < r_out) {
        return Err(Error::InvalidArgument("need 0 < r_in < r_out".into()));
    }
    let na = opts.seed_angles.max(1);
    let nr = opts.seed_radii.max(1);
    let seeds: Vec<(f64, f64)> = (0..nr)
        .flat_map(|ir| {
            let t = if nr == 1 { 0.5 } else { ir as f64 / (nr - 1) as f64 };
            let rho = r_in * (r_out / r_in).powf(t);
            (0..na).map(move |ia| (rho, 2.0 * PI * (ia as f64 + 0.5) / na as f64))
        })
        .map(|(rho, th)| spec.circle_point(rho, th))
        .collect();
    let found: Vec<Option<FixedPoint>> = seeds
        .par_iter()
        .map(|&z| {
            let s = poincare_map(spec, z).ok()?;
            // only seeds whose winding is near the target are worth refining
            if (s.winding - 2.0 * PI * j as f64).abs() > PI {
                return None;
            }
            newton(spec, z, opts.max_iter).and_then(|z| accept(spec, z, j))
        })
        .collect();
    let mut out: Vec<FixedPoint> = Vec::new();
    let push = |out: &mut Vec<FixedPoint>, p: FixedPoint| {
        let scale = spec.scaled_radius(p.u0, p.v0).max(1e-12);
        let dup = out
            .iter()
            .any(|q| spec.scaled_radius(q.u0 - p.u0, q.v0 - p.v0) < 1e-4 * scale);
        if !dup {
            out.push(p);
        }
    };
    for p in found.into_iter().flatten() {
        push(&mut out, p);
    }
    let mirrors: Vec<FixedPoint> = out
        .par_iter()
        .filter_map(|p| accept(spec, (-p.u0, -p.v0), j))
        .collect();
    for p in mirrors {
        push(&mut out, p);
    }
    if out.is_empty() {
        return Err(Error::NoFixedPoint);
    }
    out.sort_by(|a, b| a.u0.total_cmp(&b.u0).then(a.v0.total_cmp(&b.v0)));
    Ok(out)
}

/// Largest `|det DP(z) - 1|` over the points, with `DP` by central
/// differences of relative step `h`.
pub fn area_distortion(spec: &PeriodicSpec, points: &[(f64, f64)], h: f64) -> Result<f64> {
    let dets: Vec<Result<f64>> = points
        .par_iter()
        .map(|&z| {
            let hu = h * spec.scaled_radius(z.0, z.1).max(1e-3);
            let hv = hu * spec.lambda.sqrt();
            let e = |dz: (f64, f64)| poincare_map(spec, (z.0 + dz.0, z.1 + dz.1)).map(|s| s.end);
            let (up, um) = (e((hu, 0.0))?, e((-hu, 0.0))?);
            let (vp, vm) = (e((0.0, hv))?, e((0.0, -hv))?);
            let a = (up.0 - um.0) / (2.0 * hu);
            let c = (up.1 - um.1) / (2.0 * hu);
            let b = (vp.0 - vm.0) / (2.0 * hv);
            let d = (vp.1 - vm.1) / (2.0 * hv);
            Ok((a * d - b * c - 1.0).abs())
        })
        .collect();
    let mut worst = 0.0f64;
    for d in dets {
        worst = worst.max(d?);
    }
    Ok(worst)
}

/// Writes `t,u,v` samples of the orbit through `z` over one period.
pub fn write_orbit_csv(spec: &PeriodicSpec, z: (f64, f64), mut w: impl Write) -> Result<()> {
    let orbit = spec.orbit(z)?;
    let io = |e: std::io::Error| Error::InvalidArgument(e.to_string());
    writeln!(w, "t,u,v").map_err(io)?;
    for (t, u, v) in orbit {
        writeln!(w, "{t:.14e},{u:.14e},{v:.14e}").map_err(io)?;
    }
    Ok(())
}
