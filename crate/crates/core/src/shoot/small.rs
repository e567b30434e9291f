//! Threshold below which shots cannot complete a quarter turn.
//!
//! If `lambda |q(r) g(u) u| <= eps u^2` for `|u| <= eta_hat` and
//! `sqrt(eps) < pi / (2 R)`, a shot that stays in `[-eta_hat, eta_hat]` is
//! dominated by a slow linear oscillator and its angle stays below `pi/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{shoot_rk, ShotInput, ShotOptions};
use crate::model::{TruncatedSystem, BOUND_GRID_STEP};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallThreshold {
    pub eps: f64,
    /// Largest `u` where the superlinear comparison holds.
    pub eta_hat: f64,
    /// Center values in `(0, eta_star]` keep `|u| <= eta_hat` along the shot.
    pub eta_star: f64,
    pub halvings: u32,
}

/// The admissible bound `(pi / (2 L))^2` on `eps` for an interval of length `L`.
pub fn eps_limit(length: f64) -> f64 {
    (PI / (2.0 * length)).powi(2)
}

fn q_max(sys: &TruncatedSystem) -> f64 {
    let (a, b) = sys.interval();
    let n = (((b - a) / BOUND_GRID_STEP).ceil() as usize).max(1);
    (0..=n)
        .map(|k| sys.f.q().eval(a + (b - a) * k as f64 / n as f64).abs())
        .fold(0.0, f64::max)
}

/// Largest `eta_hat <= delta` with `lambda max|q| |g(u)| <= eps |u|` on
/// `0 < |u| <= eta_hat`, from a geometric grid refined by bisection.
pub fn eta_hat(sys: &TruncatedSystem, eps: f64) -> Result<f64> {
    let lambda_q = sys.lambda() * q_max(sys);
    let g = sys.f.g();
    let holds = |u: f64| lambda_q * g.eval(u).abs() <= eps * u && lambda_q * g.eval(-u).abs() <= eps * u;
    let delta = sys.source.delta;
    let n = 1200;
    let lo = delta * 1e-12;
    let grid: Vec<f64> = (0..n)
        .map(|k| lo * (delta / lo).powf(k as f64 / (n - 1) as f64))
        .collect();
    let Some(fail) = grid.iter().position(|&u| !holds(u)) else {
        return Ok(delta);
    };
    if fail == 0 {
        return Err(Error::NotSuperlinear);
    }
    let (mut a, mut b) = (grid[fail - 1], grid[fail]);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if holds(m) {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(a)
}

/// `eta_hat` for `eps`, shrunk by halving until both `+-eta` shots stay in
/// `[-eta_hat, eta_hat]`.
pub fn estimate_eta_star_small(sys: &TruncatedSystem, eps: f64, options: ShotOptions) -> Result<SmallThreshold> {
    let (a, b) = sys.interval();
    if !(eps > 0.0 && eps < eps_limit(b - a)) {
        return Err(Error::InvalidArgument(format!(
            "eps = {eps} must lie in (0, {})",
            eps_limit(b - a)
        )));
    }
    let hat = eta_hat(sys, eps)?;
    let mut eta = hat;
    for halvings in 0..64 {
        let mut inside = true;
        for e in [eta, -eta] {
            let t = shoot_rk(&ShotInput::new(sys, e).with_options(options))?;
            inside &= t.max_abs_u() <= hat;
        }
        if inside {
            return Ok(SmallThreshold {
                eps,
                eta_hat: hat,
                eta_star: eta,
                halvings,
            });
        }
        eta *= 0.5;
    }
    Err(Error::NotSuperlinear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_truncation, ProblemSpec, ScalarFn};

    fn sys(g: ScalarFn) -> TruncatedSystem {
        build_truncation(&ProblemSpec::ball(2, 10.0, 5.0, ScalarFn::constant(1.0), g).with_delta(1.0)).unwrap()
    }

    #[test]
    fn eps_limit_value() {
        let e = eps_limit(10.0) * 0.99;
        assert!((e - 0.024428).abs() < 1e-5);
    }

    #[test]
    fn cubic_closed_form() {
        let s = sys(ScalarFn::new(|u| u * u * u));
        let eps = 0.02;
        let hat = eta_hat(&s, eps).unwrap();
        assert!((hat - (eps / 5.0f64).sqrt()).abs() < 1e-12);
        let th = estimate_eta_star_small(&s, eps, ShotOptions::default()).unwrap();
        assert!(th.eta_star <= hat && th.eta_star > 0.0);
    }

    #[test]
    fn linear_growth_is_not_superlinear() {
        let s = sys(ScalarFn::new(|u| u));
        assert_eq!(eta_hat(&s, 0.02), Err(Error::NotSuperlinear));
    }

    #[test]
    fn eps_out_of_range() {
        let s = sys(ScalarFn::new(|u| u * u * u));
        assert!(estimate_eta_star_small(&s, 0.03, ShotOptions::default()).is_err());
    }
}
