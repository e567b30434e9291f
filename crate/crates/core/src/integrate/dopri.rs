//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.
//!
//! The dense output on each accepted step is the cubic Hermite interpolant of
//! the step end points plus one quartic correction term; with the correction
//! set to zero a [`DenseSegment`] is exactly a cubic Hermite piece, which is
//! how synthetic trajectories are represented.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerances {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn halved(self) -> Self {
        Self {
            abs: self.abs * 0.5,
            rel: self.rel * 0.5,
        }
    }

    pub fn max(&self) -> f64 {
        self.abs.max(self.rel)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            abs: 1e-11,
            rel: 1e-11,
        }
    }
}

/// Step-size controls.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub tol: Tolerances,
    /// Smallest admissible step as a fraction of the integration span.
    pub min_step_fraction: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(tol: Tolerances) -> Self {
        Self {
            tol,
            min_step_fraction: 1e-14,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

/// Outcome of the caller's post-step check.
#[derive(Debug, Clone, PartialEq)]
pub enum StepCheck {
    Accept,
    /// Retry with a smaller step.
    Shrink,
    Fail(Error),
}

/// Dense output on one step `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment<const D: usize> {
    pub t0: f64,
    pub h: f64,
    coef: [[f64; D]; 5],
}

impl<const D: usize> DenseSegment<D> {
    /// Cubic Hermite piece through `(t0, y0, dy0)` and `(t0 + h, y1, dy1)`.
    pub fn hermite(t0: f64, h: f64, y0: [f64; D], y1: [f64; D], dy0: [f64; D], dy1: [f64; D]) -> Self {
        let mut coef = [[0.0; D]; 5];
        for i in 0..D {
            let diff = y1[i] - y0[i];
            let b = h * dy0[i] - diff;
            coef[0][i] = y0[i];
            coef[1][i] = diff;
            coef[2][i] = b;
            coef[3][i] = diff - h * dy1[i] - b;
        }
        Self { t0, h, coef }
    }

    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.coef;
        let mut y = [0.0; D];
        for i in 0..D {
            y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        y
    }
}

/// Accepted steps of one integration.
#[derive(Debug, Clone)]
pub struct Solution<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub dy: Vec<[f64; D]>,
    pub segments: Vec<DenseSegment<D>>,
    pub rejected: usize,
    pub evaluations: usize,
}

impl<const D: usize> Solution<D> {
    pub fn last(&self) -> [f64; D] {
        *self.y.last().expect("solution has at least one sample")
    }

    /// Dense evaluation; clamps to the integration interval.
    pub fn eval(&self, t: f64) -> [f64; D] {
        eval_segments(&self.segments, &self.y, t)
    }
}

/// Locates the segment containing `t` and evaluates it.
pub fn eval_segments<const D: usize>(segments: &[DenseSegment<D>], samples: &[[f64; D]], t: f64) -> [f64; D] {
    if segments.is_empty() {
        return samples[0];
    }
    let idx = segments.partition_point(|s| s.t1() < t).min(segments.len() - 1);
    let seg = &segments[idx];
    if t <= seg.t0 {
        return if idx == 0 { samples[0] } else { seg.eval(seg.t0) };
    }
    if t >= seg.t1() {
        return samples[idx + 1];
    }
    seg.eval(t)
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (`t1 > t0`).
///
/// `check` is called with `(t_old, y_old, t_new, y_new)` after every step that
/// passes the error test; it can force a smaller step or abort.
pub fn integrate<const D: usize, F, C>(
    mut f: F,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    control: &StepControl,
    mut check: C,
) -> Result<Solution<D>>
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
    C: FnMut(f64, &[f64; D], f64, &[f64; D]) -> StepCheck,
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!(
            "integration interval [{t0}, {t1}] is empty"
        )));
    }
    let span = t1 - t0;
    let h_min = control.min_step_fraction * span;
    let tol = control.tol;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut evaluations = 1;

    let mut h = initial_step(&mut f, t, &y, &k1, span, &tol, &mut evaluations).min(control.max_step);
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y0],
        dy: vec![k1],
        segments: Vec::new(),
        rejected: 0,
        evaluations: 0,
    };

    let mut steps = 0usize;
    while t < t1 {
        if steps >= control.max_steps {
            return Err(Error::TooManySteps(t));
        }
        steps += 1;
        let mut last = false;
        if t + h >= t1 || t1 - (t + h) < 1e-12 * span {
            h = t1 - t;
            last = true;
        }
        if h < h_min && !last {
            return Err(Error::StepSizeUnderflow { t, h });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            t + h,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        );
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let t_new = if last { t1 } else { t + h };
        let k7 = f(t_new, &y_new);
        evaluations += 6;

        let mut err_sq = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / D as f64).sqrt();
        if !err.is_finite() {
            sol.rejected += 1;
            h *= 0.25;
            if h < h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            continue;
        }

        if err <= 1.0 {
            match check(t, &y, t_new, &y_new) {
                StepCheck::Accept => {}
                StepCheck::Shrink => {
                    sol.rejected += 1;
                    h *= 0.5;
                    if h < h_min {
                        return Err(Error::StepSizeUnderflow { t, h });
                    }
                    continue;
                }
                StepCheck::Fail(e) => return Err(e),
            }
            let mut seg = DenseSegment::hermite(t, t_new - t, y, y_new, k1, k7);
            for i in 0..D {
                seg.coef[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            sol.segments.push(seg);
            sol.t.push(t_new);
            sol.y.push(y_new);
            sol.dy.push(k7);
            t = t_new;
            y = y_new;
            k1 = k7;
            let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            h = (h * fac).min(control.max_step);
        } else {
            sol.rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= fac;
        }
    }
    sol.evaluations = evaluations;
    Ok(sol)
}

/// Hairer's starting-step heuristic.
fn initial_step<const D: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; D],
    dy: &[f64; D],
    span: f64,
    tol: &Tolerances,
    evaluations: &mut usize,
) -> f64
where
    F: FnMut(f64, &[f64; D]) -> [f64; D],
{
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..D {
        let sc = tol.abs + tol.rel * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (dy[i] / sc).powi(2);
    }
    d0 = (d0 / D as f64).sqrt();
    d1 = (d1 / D as f64).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1 = axpy(y, h0, &[(1.0, dy)]);
    let dy1 = f(t + h0, &y1);
    *evaluations += 1;
    let mut d2 = 0.0;
    for i in 0..D {
        let sc = tol.abs + tol.rel * y[i].abs();
        d2 += ((dy1[i] - dy[i]) / sc).powi(2);
    }
    d2 = (d2 / D as f64).sqrt() / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6 * span)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy() {
        let ctl = StepControl::new(Tolerances::new(1e-12, 1e-12));
        let sol = integrate(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &ctl,
            |_, _, _, _| StepCheck::Accept,
        )
        .unwrap();
        let end = sol.last();
        assert!((end[0] - 10f64.cos()).abs() < 1e-9);
        assert!((end[1] + 10f64.sin()).abs() < 1e-9);
        assert_eq!(*sol.t.last().unwrap(), 10.0);
        // dense output keeps (close to) the step accuracy
        for k in 0..=1000 {
            let t = k as f64 * 0.01;
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn exponential_growth_relative_error() {
        let ctl = StepControl::new(Tolerances::new(1e-13, 1e-11));
        let sol = integrate(|_t, y: &[f64; 1]| [y[0]], 0.0, [1.0], 5.0, &ctl, |_, _, _, _| StepCheck::Accept).unwrap();
        assert!((sol.last()[0] / 5f64.exp() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn guard_forces_small_steps() {
        let ctl = StepControl::new(Tolerances::new(1e-8, 1e-8));
        let sol = integrate(
            |_t, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            10.0,
            &ctl,
            |t0, _, t1, _| if t1 - t0 > 0.05 { StepCheck::Shrink } else { StepCheck::Accept },
        )
        .unwrap();
        assert!(sol.t.windows(2).all(|w| w[1] - w[0] <= 0.05 + 1e-15));
        assert!(sol.t.len() > 200);
    }

    #[test]
    fn failing_guard_aborts() {
        let ctl = StepControl::new(Tolerances::default());
        let res = integrate(
            |_t, y: &[f64; 1]| [y[0]],
            0.0,
            [1.0],
            1.0,
            &ctl,
            |_, _, t1, _| if t1 > 0.5 { StepCheck::Fail(Error::OriginHit(t1)) } else { StepCheck::Accept },
        );
        assert!(matches!(res, Err(Error::OriginHit(_))));
    }

    #[test]
    fn hermite_segment_interpolates_cubics() {
        // y = t^3 - t on [1, 3]
        let y = |t: f64| t * t * t - t;
        let dy = |t: f64| 3.0 * t * t - 1.0;
        let seg = DenseSegment::hermite(1.0, 2.0, [y(1.0)], [y(3.0)], [dy(1.0)], [dy(3.0)]);
        for k in 0..=20 {
            let t = 1.0 + 0.1 * k as f64;
            assert!((seg.eval(t)[0] - y(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_interval_rejected() {
        let ctl = StepControl::new(Tolerances::default());
        assert!(integrate(|_t, y: &[f64; 1]| [y[0]], 1.0, [1.0], 1.0, &ctl, |_, _, _, _| StepCheck::Accept).is_err());
    }
}
