//! Clockwise polar angle of the scaled phase point and nodal bookkeeping.
//!
//! A state `(u, v)` is written `u = rho cos(theta)`, `v = -sqrt(lambda) rho sin(theta)`,
//! so `theta` grows clockwise. Zeros of `u` sit on the lines
//! `theta = pi/2 + k pi`, and the flow crosses those lines only forwards.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{StartKind, Trajectory};
use crate::model::BoundaryKind;

/// Raw increments at or above this size are rejected by the lift.
pub const LIFT_LIMIT: f64 = FRAC_PI_2;
/// Angular distance below which a terminal zero counts as the boundary zero.
pub const BOUNDARY_ANGLE_EPS: f64 = 1e-6;
/// Tolerance of the forward-crossing check at zeros.
pub const CROSSING_TOL: f64 = 1e-8;
/// Relative width to which zeros are refined.
pub const ZERO_REL_TOL: f64 = 1e-10;

/// `atan2(-v / sqrt(lambda), u)`.
#[inline]
pub fn scaled_angle(u: f64, v: f64, sqrt_lambda: f64) -> f64 {
    (-v / sqrt_lambda).atan2(u)
}

/// `a1 - a0` reduced to `(-pi, pi]`.
#[inline]
pub fn principal_increment(a0: f64, a1: f64) -> f64 {
    let mut d = a1 - a0;
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Lifts the angle of the states `(u, v)`.
///
/// The first angle is the principal value in `(-pi, pi]`: `0` for a positive
/// center value, `pi` for a negative one, `-+pi/2` for a wall start with
/// `u = 0` and slope of sign `+-`.
pub fn lift_states(states: &[(f64, f64)], sqrt_lambda: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(states.len());
    let Some(&(u0, v0)) = states.first() else {
        return Ok(out);
    };
    let mut prev = scaled_angle(u0, v0, sqrt_lambda);
    if prev == -PI {
        prev = PI;
    }
    let mut theta = prev;
    out.push(theta);
    for (index, &(u, v)) in states.iter().enumerate().skip(1) {
        let a = scaled_angle(u, v, sqrt_lambda);
        let inc = principal_increment(prev, a);
        if inc.abs() >= LIFT_LIMIT {
            return Err(Error::LiftAmbiguous { index, increment: inc });
        }
        theta += inc;
        prev = a;
        out.push(theta);
    }
    Ok(out)
}

/// Lifted angle of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleLift {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub winding: f64,
}

impl AngleLift {
    /// Winding between two sample indices.
    pub fn winding_between(&self, i: usize, k: usize) -> f64 {
        self.theta[k] - self.theta[i]
    }
}

/// Recomputes the lift of `traj` with the scale `sqrt(lambda)`.
pub fn lift_angle(traj: &Trajectory, lambda: f64) -> Result<AngleLift> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda}")));
    }
    let states: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.u, s.v)).collect();
    let theta = lift_states(&states, lambda.sqrt())?;
    let winding = theta.last().copied().unwrap_or(0.0) - theta.first().copied().unwrap_or(0.0);
    Ok(AngleLift {
        r: traj.samples.iter().map(|s| s.r).collect(),
        theta,
        winding,
    })
}

/// Lift stored on the trajectory itself.
pub fn stored_lift(traj: &Trajectory) -> AngleLift {
    AngleLift {
        r: traj.samples.iter().map(|s| s.r).collect(),
        theta: traj.samples.iter().map(|s| s.theta).collect(),
        winding: traj.winding(),
    }
}

/// Angle offset of the first zero line after the start angle.
fn first_zero_line(start: StartKind) -> f64 {
    match start {
        StartKind::Center | StartKind::WallValue => FRAC_PI_2,
        StartKind::WallSlope => PI,
    }
}

/// Interior zeros implied by a winding `w`: zero lines strictly crossed more
/// than `eps` before the end.
pub fn zeros_from_winding(start: StartKind, winding: f64, eps: f64) -> usize {
    let reach = winding - eps - first_zero_line(start);
    if reach <= 0.0 {
        0
    } else {
        (reach / PI).ceil() as usize
    }
}

/// Zeros and nodal domains of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalSummary {
    /// Interior zeros, strictly increasing.
    pub zero_locations: Vec<f64>,
    pub nodal_domain_count: usize,
    pub sign_at_start: i8,
}

impl NodalSummary {
    pub fn interior_zeros(&self) -> usize {
        self.zero_locations.len()
    }
}

/// Sign changes of `u` refined by bisection of the dense output.
///
/// Returns `(r_zero, sample index just after the zero)`.
pub fn locate_zeros(traj: &Trajectory) -> Vec<(f64, usize)> {
    let (r_a, r_b) = traj.r_span();
    let width = ZERO_REL_TOL * r_b.abs().max(r_b - r_a);
    let mut zeros = Vec::new();
    let mut last: Option<(usize, f64)> = None;
    for (i, s) in traj.samples.iter().enumerate() {
        if s.u == 0.0 {
            if i > 0 && last.is_some() {
                zeros.push((s.r, i));
                last = None;
            }
            continue;
        }
        let sgn = s.u.signum();
        match last {
            Some((j, prev)) if prev != sgn => {
                let mut lo = traj.samples[j].r;
                let mut hi = s.r;
                while hi - lo > width {
                    let mid = 0.5 * (lo + hi);
                    let um = traj.eval_u(mid);
                    if um == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if um.signum() == prev {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                zeros.push((0.5 * (lo + hi), i));
            }
            _ => {}
        }
        last = Some((i, sgn));
    }
    zeros
}

/// Counts interior zeros and reconciles them with the winding.
pub fn count_nodal(traj: &Trajectory, lift: &AngleLift, bc: BoundaryKind) -> Result<NodalSummary> {
    let theta_end = *lift.theta.last().unwrap_or(&0.0);
    let theta0 = lift.theta.first().copied().unwrap_or(0.0);
    let eps = match bc {
        BoundaryKind::Dirichlet => BOUNDARY_ANGLE_EPS,
        BoundaryKind::Neumann => 0.0,
    };
    let line0 = theta0 + first_zero_line(traj.start);
    let mut zero_locations = Vec::new();
    for (r, idx) in locate_zeros(traj) {
        // Angle at the zero, snapped to its zero line.
        let th = lift.theta[idx - 1];
        let k = ((th - line0) / PI).round();
        let line = line0 + k * PI;
        if theta_end - line > eps {
            zero_locations.push(r);
        }
    }
    let from_winding = zeros_from_winding(traj.start, lift.winding, eps);
    if from_winding != zero_locations.len() {
        return Err(Error::CountMismatch {
            sign_changes: zero_locations.len(),
            from_winding: from_winding as i64,
        });
    }
    let first = traj.first();
    let sign_at_start = match traj.start {
        StartKind::WallSlope => first.v.signum(),
        _ => first.u.signum(),
    };
    Ok(NodalSummary {
        nodal_domain_count: zero_locations.len() + 1,
        zero_locations,
        sign_at_start: if sign_at_start == 0.0 { 0 } else { sign_at_start as i8 },
    })
}

/// Outcome of the angular checks along one lift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularReport {
    /// `min over r1 <= r2 of theta(r2) - theta(r1)`.
    pub min_pair_increment: f64,
    /// Smallest increment across a sample pair straddling a zero of `u`.
    pub min_zero_increment: f64,
    pub backward_ok: bool,
    pub crossing_ok: bool,
}

impl AngularReport {
    pub fn passed(&self) -> bool {
        self.backward_ok && self.crossing_ok
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            min_pair_increment: self.min_pair_increment.min(other.min_pair_increment),
            min_zero_increment: self.min_zero_increment.min(other.min_zero_increment),
            backward_ok: self.backward_ok && other.backward_ok,
            crossing_ok: self.crossing_ok && other.crossing_ok,
        }
    }
}

/// Checks that the angle never falls back by `pi` and that it moves forward
/// across every zero of `u` with `v != 0`.
pub fn verify_angular_lemmas(traj: &Trajectory, lift: &AngleLift) -> AngularReport {
    let mut running_max = f64::NEG_INFINITY;
    let mut min_pair = 0.0f64;
    for &t in &lift.theta {
        running_max = running_max.max(t);
        min_pair = min_pair.min(t - running_max);
    }
    let mut min_zero = f64::INFINITY;
    for w in traj.samples.windows(2).zip(lift.theta.windows(2)) {
        let (s, th) = w;
        let straddles = s[0].u * s[1].u < 0.0 || (s[1].u == 0.0 && s[0].u != 0.0);
        if straddles && (s[0].v != 0.0 || s[1].v != 0.0) {
            min_zero = min_zero.min(th[1] - th[0]);
        }
    }
    AngularReport {
        min_pair_increment: min_pair,
        min_zero_increment: min_zero,
        backward_ok: min_pair > -PI,
        crossing_ok: !(min_zero < -CROSSING_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::dopri::DenseSegment;

    /// Clockwise circle `(cos(w r), -sin(w r))` sampled on `[0, r_end]`, with
    /// `lambda = 1`; `w < 0` runs it backwards.
    fn circle(w: f64, r_end: f64, n: usize) -> Trajectory {
        let h = r_end / n as f64;
        let state = |r: f64| ((w * r).cos(), -(w * r).sin());
        let deriv = |r: f64| (-w * (w * r).sin(), -w * (w * r).cos());
        let mut states = Vec::new();
        let mut segs = Vec::new();
        for k in 0..=n {
            let r = k as f64 * h;
            let (u, v) = state(r);
            states.push((r, u, v, deriv(r).0));
            if k < n {
                let (u1, v1) = state(r + h);
                let (du0, dv0) = deriv(r);
                let (du1, dv1) = deriv(r + h);
                segs.push(DenseSegment::hermite(r, h, [u, v], [u1, v1], [du0, dv0], [du1, dv1]));
            }
        }
        Trajectory::from_states(1.0, StartKind::Center, 1.0, states, segs).unwrap()
    }

    #[test]
    fn quarter_turn() {
        let t = circle(1.0, FRAC_PI_2, 50);
        let lift = lift_angle(&t, 1.0).unwrap();
        assert!((lift.winding - FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn principal_increment_wraps() {
        assert!((principal_increment(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-15);
        assert_eq!(principal_increment(0.0, PI), PI);
        assert_eq!(principal_increment(PI, -PI), 0.0);
    }

    #[test]
    fn start_angles() {
        let s = 5f64.sqrt();
        let lift = |u, v| lift_states(&[(u, v)], s).unwrap()[0];
        assert_eq!(lift(2.0, 0.0), 0.0);
        assert_eq!(lift(-2.0, 0.0), PI);
        assert_eq!(lift(-2.0, -0.0), PI);
        assert_eq!(lift(0.0, 1.0), -FRAC_PI_2);
        assert_eq!(lift(0.0, -1.0), FRAC_PI_2);
    }

    #[test]
    fn ambiguous_increment_is_rejected() {
        let err = lift_states(&[(1.0, 0.0), (0.0, -1.0)], 1.0).unwrap_err();
        assert!(matches!(err, Error::LiftAmbiguous { index: 1, .. }));
    }

    #[test]
    fn cosine_zero_count() {
        // u = cos(3r) on [0, 3 pi / 2]: zeros at pi/6 + k pi/3, the last one on the boundary
        let t = circle(3.0, 1.5 * PI, 600);
        let lift = lift_angle(&t, 1.0).unwrap();
        assert!((lift.winding - 4.5 * PI).abs() < 1e-12);
        let nodal = count_nodal(&t, &lift, BoundaryKind::Dirichlet).unwrap();
        assert_eq!(nodal.interior_zeros(), 4);
        assert_eq!(nodal.nodal_domain_count, 5);
        assert_eq!(nodal.sign_at_start, 1);
        for (k, z) in nodal.zero_locations.iter().enumerate() {
            let exact = PI / 6.0 + k as f64 * PI / 3.0;
            assert!((z - exact).abs() < 1e-9, "{z} vs {exact}");
        }
    }

    #[test]
    fn winding_counts_per_start() {
        let c = StartKind::Center;
        assert_eq!(zeros_from_winding(c, 0.5 * PI, 1e-6), 0);
        assert_eq!(zeros_from_winding(c, 1.5 * PI, 1e-6), 1);
        assert_eq!(zeros_from_winding(c, 1.5 * PI, 0.0), 1);
        assert_eq!(zeros_from_winding(c, 1.6 * PI, 0.0), 2);
        assert_eq!(zeros_from_winding(c, 2.0 * PI, 0.0), 2);
        let w = StartKind::WallSlope;
        assert_eq!(zeros_from_winding(w, PI, 1e-6), 0);
        assert_eq!(zeros_from_winding(w, 3.0 * PI, 1e-6), 2);
        assert_eq!(zeros_from_winding(w, 0.4 * PI, 0.0), 0);
    }

    #[test]
    fn clockwise_circle_passes_lemmas() {
        let t = circle(2.0, 2.0 * PI, 400);
        let lift = stored_lift(&t);
        let rep = verify_angular_lemmas(&t, &lift);
        assert!(rep.passed());
        assert_eq!(rep.min_pair_increment, 0.0);
    }

    #[test]
    fn reversed_circle_fails_backward_check() {
        let t = circle(-1.0, 1.5 * PI, 300);
        let lift = stored_lift(&t);
        assert!((lift.winding + 1.5 * PI).abs() < 1e-12);
        let rep = verify_angular_lemmas(&t, &lift);
        assert!(!rep.backward_ok);
        assert!(!rep.crossing_ok);
    }

    #[test]
    fn concatenation_is_exact() {
        let t = circle(2.5, 4.0, 333);
        let lift = stored_lift(&t);
        let m = 123;
        let last = lift.theta.len() - 1;
        assert_eq!(
            lift.winding_between(0, m) + lift.winding_between(m, last),
            lift.winding_between(0, last)
        );
    }
}
