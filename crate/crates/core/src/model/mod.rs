//! Problem definitions and the truncated (globally Lipschitz) equivalent system.
//!
//! The radial problem is `(r^{N-1} phi(u'))' + lambda r^{N-1} q(r) g(u) = 0` with
//! `phi(s) = s / sqrt(1 - s^2)`. Shooting works on a modified problem where
//! `phi` is continued affinely beyond a slope level `gamma < 1` and the source
//! `q(r) g(u)` is switched off smoothly for `|u| >= R + 1`. Every solution of
//! the modified Dirichlet problem obeys `|u'| <= gamma` and `|u| <= gamma R`, so
//! it never sees either modification and solves the original problem too.

pub mod expr;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use expr::Expr;

/// Grid step used to bound `|f~|` and its Lipschitz constant.
pub const BOUND_GRID_STEP: f64 = 1e-3;
/// Safety factor applied to grid maxima.
pub const BOUND_SAFETY: f64 = 1.05;
/// Width of the band `R < |u| < R + 1` where the source is ramped down.
pub const RAMP_WIDTH: f64 = 1.0;

/// A shareable real function of one variable, optionally carrying the
/// expression it was parsed from.
#[derive(Clone)]
pub struct ScalarFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    source: Option<String>,
}

impl ScalarFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            source: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            f: Arc::new(move |_| c),
            source: Some(format!("{c}")),
        }
    }

    pub fn from_expr(expr: Expr) -> Self {
        let source = expr.source().to_string();
        Self {
            f: Arc::new(move |x| expr.eval(x)),
            source: Some(source),
        }
    }

    /// Parses `src` with the given admissible variable names.
    pub fn parse(src: &str, variables: &[&str]) -> Result<Self> {
        Ok(Self::from_expr(Expr::parse(src, variables)?))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }
}

impl fmt::Debug for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Some(s) => write!(f, "ScalarFn({s})"),
            None => write!(f, "ScalarFn(<closure>)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
}

impl Geometry {
    /// The radial interval `[r_a, r_b]` of the problem.
    pub fn interval(&self) -> (f64, f64) {
        match *self {
            Geometry::Ball { radius } => (0.0, radius),
            Geometry::Annulus { inner, outer } => (inner, outer),
        }
    }

    /// The `R` of the truncation strip: the ball radius or the outer annulus radius.
    pub fn outer_radius(&self) -> f64 {
        self.interval().1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dimension: u32,
    pub geometry: Geometry,
    /// Radial weight, evaluated on the radial interval.
    pub q: ScalarFn,
    /// Nonlinearity, `g(0) = 0` and `g(u) u > 0` near zero.
    pub g: ScalarFn,
    pub lambda: f64,
    pub bc: BoundaryKind,
    /// Radius of the sign condition on `g`.
    pub delta: f64,
    /// Whether `g(u)/u -> 0` at zero is asserted (and checked).
    pub superlinear: bool,
}

/// JSON document form of a [`ProblemSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub dimension: u32,
    pub geometry: GeometryDoc,
    pub lambda: f64,
    pub bc: BoundaryKind,
    pub q: String,
    pub g: String,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superlinear: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryDoc {
    Ball {
        #[serde(rename = "R")]
        radius: f64,
    },
    Annulus {
        #[serde(rename = "R1")]
        inner: f64,
        #[serde(rename = "R2")]
        outer: f64,
    },
}

impl ProblemDoc {
    pub fn into_spec(self) -> Result<ProblemSpec> {
        let geometry = match self.geometry {
            GeometryDoc::Ball { radius } => Geometry::Ball { radius },
            GeometryDoc::Annulus { inner, outer } => Geometry::Annulus { inner, outer },
        };
        let spec = ProblemSpec {
            dimension: self.dimension,
            geometry,
            q: ScalarFn::parse(&self.q, &["r", "t"])?,
            g: ScalarFn::parse(&self.g, &["u"])?,
            lambda: self.lambda,
            bc: self.bc,
            delta: self.delta,
            superlinear: self.superlinear.unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ProblemSpec {
    /// Dirichlet problem on a ball with the given weight and nonlinearity.
    pub fn ball(dimension: u32, radius: f64, lambda: f64, q: ScalarFn, g: ScalarFn) -> Self {
        Self {
            dimension,
            geometry: Geometry::Ball { radius },
            q,
            g,
            lambda,
            bc: BoundaryKind::Dirichlet,
            delta: 0.5 * radius.min(1.0),
            superlinear: false,
        }
    }

    pub fn with_bc(mut self, bc: BoundaryKind) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_superlinear(mut self, superlinear: bool) -> Self {
        self.superlinear = superlinear;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        doc.into_spec()
    }

    /// Document form; closures without a source expression are rejected.
    pub fn to_doc(&self) -> Result<ProblemDoc> {
        let missing = || Error::InvalidSpec("q or g has no expression source".into());
        Ok(ProblemDoc {
            dimension: self.dimension,
            geometry: match self.geometry {
                Geometry::Ball { radius } => GeometryDoc::Ball { radius },
                Geometry::Annulus { inner, outer } => GeometryDoc::Annulus { inner, outer },
            },
            lambda: self.lambda,
            bc: self.bc,
            q: self.q.source().ok_or_else(missing)?.to_string(),
            g: self.g.source().ok_or_else(missing)?.to_string(),
            delta: self.delta,
            superlinear: self.superlinear.then_some(true),
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.geometry.interval()
    }

    /// Checks the structural invariants and samples the sign condition on `g`.
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        match self.geometry {
            Geometry::Ball { radius } => {
                if !(radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidSpec("ball radius must be positive".into()));
                }
            }
            Geometry::Annulus { inner, outer } => {
                if !(inner > 0.0 && outer > inner && outer.is_finite()) {
                    return Err(Error::InvalidSpec("annulus needs 0 < R1 < R2".into()));
                }
            }
        }
        let big_r = self.geometry.outer_radius();
        if !(self.delta > 0.0 && self.delta < big_r) {
            return Err(Error::InvalidSpec(format!(
                "delta must lie in (0, R), got {}",
                self.delta
            )));
        }
        let g0 = self.g.eval(0.0);
        if g0.abs() > 1e-14 {
            return Err(Error::InvalidSpec(format!("g(0) = {g0}, expected 0")));
        }
        for u in sign_grid(self.delta) {
            for s in [u, -u] {
                let gs = self.g.eval(s);
                if !(gs * s > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "sign condition g(u) u > 0 fails at u = {s} (g = {gs})"
                    )));
                }
            }
        }
        if self.superlinear {
            let tol = 1e-3;
            for u in sign_grid(self.delta).into_iter().take(8) {
                for s in [u, -u] {
                    let ratio = self.g.eval(s) / s;
                    if ratio.abs() > tol {
                        return Err(Error::InvalidSpec(format!(
                            "declared superlinear but |g(u)/u| = {} at u = {s}",
                            ratio.abs()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Positive validation points in `(0, delta)`: geometric near zero, then uniform.
fn sign_grid(delta: f64) -> Vec<f64> {
    let mut pts = Vec::with_capacity(460);
    let lo = delta * 1e-8;
    let hi = delta * 1e-2;
    let n_geo = 60;
    for k in 0..n_geo {
        let t = k as f64 / (n_geo - 1) as f64;
        pts.push(lo * (hi / lo).powf(t));
    }
    let n_uni = 400;
    for k in 1..n_uni {
        pts.push(delta * k as f64 / n_uni as f64);
    }
    pts
}

/// The Minkowski flux `phi(s) = s / sqrt(1 - s^2)` on `(-1, 1)`.
pub fn phi(s: f64) -> Result<f64> {
    if !(s.abs() < 1.0) {
        return Err(Error::SlopeOutOfRange(s));
    }
    Ok(s / ((1.0 - s) * (1.0 + s)).sqrt())
}

/// Inverse flux `w / sqrt(1 + w^2)`, defined on all reals.
#[inline]
pub fn phi_inv(w: f64) -> f64 {
    w / (1.0 + w * w).sqrt()
}

/// The flux `phi~`: equal to `phi` on `[-gamma, gamma]`, affine with slope
/// `phi'(gamma)` outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedFlux {
    gamma: f64,
    flux_at_gamma: f64,
    slope_at_gamma: f64,
}

impl TruncatedFlux {
    /// Builds the flux whose slope level is `gamma = phi^{-1}(flux_bound)`.
    ///
    /// `phi(gamma)` and `phi'(gamma)` are recomputed from the rounded `gamma`
    /// so that `phi~` and its derivative are continuous at `+-gamma` to
    /// rounding.
    pub fn from_flux_bound(flux_bound: f64) -> Self {
        let gamma = phi_inv(flux_bound);
        let one_minus_sq = (1.0 - gamma) * (1.0 + gamma);
        Self {
            gamma,
            flux_at_gamma: gamma / one_minus_sq.sqrt(),
            slope_at_gamma: one_minus_sq.powf(-1.5),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `phi(gamma)`.
    pub fn flux_at_gamma(&self) -> f64 {
        self.flux_at_gamma
    }

    /// `phi'(gamma) = (1 - gamma^2)^{-3/2}`.
    pub fn slope_at_gamma(&self) -> f64 {
        self.slope_at_gamma
    }

    #[inline]
    pub fn phi(&self, s: f64) -> f64 {
        if s > self.gamma {
            self.flux_at_gamma + self.slope_at_gamma * (s - self.gamma)
        } else if s < -self.gamma {
            -self.flux_at_gamma + self.slope_at_gamma * (s + self.gamma)
        } else {
            s / ((1.0 - s) * (1.0 + s)).sqrt()
        }
    }

    #[inline]
    pub fn phi_inv(&self, w: f64) -> f64 {
        if w > self.flux_at_gamma {
            self.gamma + (w - self.flux_at_gamma) / self.slope_at_gamma
        } else if w < -self.flux_at_gamma {
            -self.gamma + (w + self.flux_at_gamma) / self.slope_at_gamma
        } else {
            phi_inv(w)
        }
    }

    /// Derivative of `phi~`.
    pub fn phi_prime(&self, s: f64) -> f64 {
        if s.abs() > self.gamma {
            self.slope_at_gamma
        } else {
            ((1.0 - s) * (1.0 + s)).powf(-1.5)
        }
    }

    /// Lipschitz constant of `phi~^{-1}`; its derivative peaks at the origin.
    pub fn inverse_lipschitz(&self) -> f64 {
        1.0
    }
}

/// Cubic Hermite step: 1 on `[0, strip]`, 0 on `[strip + 1, inf)`, C^1.
#[inline]
pub fn ramp(abs_u: f64, strip: f64) -> f64 {
    let t = ((abs_u - strip) / RAMP_WIDTH).clamp(0.0, 1.0);
    1.0 - t * t * (3.0 - 2.0 * t)
}

/// The truncated source `f~(r, u) = q(r) g(u) ramp(|u|)` with certified bounds.
#[derive(Debug, Clone)]
pub struct TruncatedSource {
    q: ScalarFn,
    g: ScalarFn,
    strip: f64,
    bound: f64,
    lipschitz: f64,
}

impl TruncatedSource {
    /// Samples `q` on `[r_lo, r_hi]` and `g ramp` on `[-(strip+1), strip+1]`.
    pub fn new(q: ScalarFn, g: ScalarFn, strip: f64, r_lo: f64, r_hi: f64) -> Result<Self> {
        let n_r = (((r_hi - r_lo) / BOUND_GRID_STEP).ceil() as usize).max(1);
        let mut q_max = 0.0f64;
        for k in 0..=n_r {
            let r = r_lo + (r_hi - r_lo) * k as f64 / n_r as f64;
            let qv = q.eval(r);
            if !qv.is_finite() {
                return Err(Error::NonFiniteWeight(r));
            }
            q_max = q_max.max(qv.abs());
        }
        let u_hi = strip + RAMP_WIDTH;
        let n_u = ((2.0 * u_hi / BOUND_GRID_STEP).ceil() as usize).max(2);
        let h = 2.0 * u_hi / n_u as f64;
        let mut h_max = 0.0f64;
        let mut slope_max = 0.0f64;
        let mut prev: Option<f64> = None;
        for k in 0..=n_u {
            let u = -u_hi + h * k as f64;
            let val = g.eval(u) * ramp(u.abs(), strip);
            if !val.is_finite() {
                return Err(Error::InvalidSpec(format!("g is not finite at u = {u}")));
            }
            h_max = h_max.max(val.abs());
            if let Some(p) = prev {
                slope_max = slope_max.max(((val - p) / h).abs());
            }
            prev = Some(val);
        }
        let bound = q_max * h_max * BOUND_SAFETY;
        if bound == 0.0 {
            return Err(Error::DegenerateProblem);
        }
        Ok(Self {
            q,
            g,
            strip,
            bound,
            lipschitz: q_max * slope_max * BOUND_SAFETY,
        })
    }

    #[inline]
    pub fn eval(&self, r: f64, u: f64) -> f64 {
        let a = u.abs();
        if a >= self.strip + RAMP_WIDTH {
            return 0.0;
        }
        self.q.eval(r) * self.g.eval(u) * ramp(a, self.strip)
    }

    /// Upper bound `M` of `|f~|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Upper bound of the Lipschitz constant of `f~` in `u`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn q(&self) -> &ScalarFn {
        &self.q
    }

    pub fn g(&self) -> &ScalarFn {
        &self.g
    }
}

/// The modified problem used for shooting.
#[derive(Debug, Clone)]
pub struct TruncatedSystem {
    pub source: ProblemSpec,
    pub flux: TruncatedFlux,
    pub f: TruncatedSource,
    pub ramp_width: f64,
}

impl TruncatedSystem {
    pub fn lambda(&self) -> f64 {
        self.source.lambda
    }

    pub fn dimension(&self) -> u32 {
        self.source.dimension
    }

    pub fn gamma(&self) -> f64 {
        self.flux.gamma()
    }

    /// `M`.
    pub fn bound(&self) -> f64 {
        self.f.bound()
    }

    /// The strip radius `R` (ball radius or outer annulus radius).
    pub fn strip(&self) -> f64 {
        self.f.strip()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.source.interval()
    }

    #[inline]
    pub fn phi_t(&self, s: f64) -> f64 {
        self.flux.phi(s)
    }

    #[inline]
    pub fn phi_t_inv(&self, w: f64) -> f64 {
        self.flux.phi_inv(w)
    }

    #[inline]
    pub fn f_t(&self, r: f64, u: f64) -> f64 {
        self.f.eval(r, u)
    }

    /// `r^{N-1}`, with `0^0 = 1`.
    #[inline]
    pub fn radial_power(&self, r: f64) -> f64 {
        match self.source.dimension {
            1 => 1.0,
            2 => r,
            3 => r * r,
            n => r.powi(n as i32 - 1),
        }
    }

    /// `u'` recovered from `v = r^{N-1} phi~(u')`.
    #[inline]
    pub fn slope(&self, r: f64, v: f64) -> f64 {
        let p = self.radial_power(r);
        if p == 0.0 {
            0.0
        } else {
            self.flux.phi_inv(v / p)
        }
    }

    /// Contraction constant `L = (lambda/N) Lip(phi~^{-1}) Lip(f~)` of the
    /// fixed-point operator.
    pub fn picard_constant(&self) -> f64 {
        self.lambda() / self.dimension() as f64 * self.flux.inverse_lipschitz() * self.f.lipschitz()
    }
}

/// Builds the truncated system for `spec`.
///
/// The flux bound is `lambda M R` on a ball. On an annulus `|phi(u')|` can
/// only be bounded by `lambda M (R2 - R1) (R2/R1)^{N-1}`, since the zero of
/// `u'` may sit anywhere in the interval.
pub fn build_truncation(spec: &ProblemSpec) -> Result<TruncatedSystem> {
    spec.validate()?;
    let (r_lo, r_hi) = spec.interval();
    let strip = spec.geometry.outer_radius();
    let f = TruncatedSource::new(spec.q.clone(), spec.g.clone(), strip, r_lo, r_hi)?;
    let m = f.bound();
    let flux_bound = match spec.geometry {
        Geometry::Ball { radius } => spec.lambda * m * radius,
        Geometry::Annulus { inner, outer } => {
            spec.lambda * m * (outer - inner) * (outer / inner).powi(spec.dimension as i32 - 1)
        }
    };
    Ok(TruncatedSystem {
        source: spec.clone(),
        flux: TruncatedFlux::from_flux_bound(flux_bound),
        f,
        ramp_width: RAMP_WIDTH,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> ProblemSpec {
        ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::constant(1.0),
            ScalarFn::parse("u^3", &["u"]).unwrap(),
        )
        .with_delta(1.0)
        .with_superlinear(true)
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert!((phi(0.6).unwrap() - 0.75).abs() < 1e-15);
        assert!((phi(-0.8).unwrap() + 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(phi(1.0), Err(Error::SlopeOutOfRange(1.0)));
        assert!(phi(-1.5).is_err());
        assert!(phi(f64::NAN).is_err());
    }

    #[test]
    fn fig1_bound_and_gamma() {
        let sys = build_truncation(&fig1()).unwrap();
        let m = sys.bound();
        assert!((1000.0..=1331.0 * 1.05).contains(&m), "M = {m}");
        let y = 5.0 * m * 10.0;
        assert_eq!(sys.gamma(), y / (1.0 + y * y).sqrt());
        assert!((sys.phi_t_inv(y) - sys.gamma()).abs() < 1e-15);
    }

    #[test]
    fn flux_continuity_and_agreement() {
        for y in [0.5, 3.0, 10.0, 200.0] {
            let fl = TruncatedFlux::from_flux_bound(y);
            let g = fl.gamma();
            for k in 0..=100 {
                let s = -g + 2.0 * g * k as f64 / 100.0;
                let exact = s / ((1.0 - s) * (1.0 + s)).sqrt();
                assert!((fl.phi(s) - exact).abs() <= 1e-14 * exact.abs().max(1.0));
            }
            // jumps of phi~ and phi~' at +-gamma, and one-sided slopes
            for sgn in [1.0, -1.0] {
                let s = sgn * g;
                let inner = s / ((1.0 - s) * (1.0 + s)).sqrt();
                assert!((inner - fl.phi(s)).abs() <= 1e-12 * inner.abs());
                let d_inner = ((1.0 - s) * (1.0 + s)).powf(-1.5);
                assert!((d_inner - fl.slope_at_gamma()).abs() <= 1e-12 * d_inner);
                let step = 1e-6 * (1.0 - g);
                let d_out = (fl.phi(s + sgn * step) - fl.phi(s)) / (sgn * step);
                assert!((d_out - fl.slope_at_gamma()).abs() <= 1e-4 * d_inner);
            }
            assert!((fl.phi(g) - fl.flux_at_gamma()).abs() <= 1e-12 * fl.flux_at_gamma());
        }
    }

    #[test]
    fn flux_inverse_and_two_sided_bound() {
        let fl = TruncatedFlux::from_flux_bound(25.0);
        for k in -400..=400 {
            let s = k as f64 * 0.01;
            let back = fl.phi_inv(fl.phi(s));
            assert!((back - s).abs() < 1e-12 * s.abs().max(1.0), "s = {s}");
            let w = k as f64 * 0.2;
            let prod = fl.phi_inv(w) * w;
            assert!(prod <= w * w * (1.0 + 1e-15));
            assert!(prod >= w * w / fl.slope_at_gamma() * (1.0 - 1e-12));
        }
        // odd and strictly increasing
        let mut prev = f64::NEG_INFINITY;
        for k in -1000..=1000 {
            let s = k as f64 * 0.003;
            assert_eq!(fl.phi(-s), -fl.phi(s));
            assert!(fl.phi(s) > prev);
            prev = fl.phi(s);
        }
    }

    #[test]
    fn source_truncation() {
        let sys = build_truncation(&fig1()).unwrap();
        assert_eq!(sys.f_t(3.0, 2.0), 8.0);
        assert_eq!(sys.f_t(3.0, -10.0), -1000.0);
        assert_eq!(sys.f_t(3.0, 11.0), 0.0);
        assert_eq!(sys.f_t(3.0, -12.5), 0.0);
        for k in 0..=2000 {
            let u = -12.0 + k as f64 * 0.012;
            assert!(sys.f_t(1.0, u).abs() <= sys.bound());
        }
    }

    #[test]
    fn source_lipschitz_dominates_difference_quotients() {
        let sys = build_truncation(&fig1()).unwrap();
        let lip = sys.f.lipschitz();
        let h = 1e-4;
        for k in 0..5000 {
            let u = -11.5 + k as f64 * 0.0046;
            let dq = (sys.f_t(0.5, u + h) - sys.f_t(0.5, u)) / h;
            assert!(dq.abs() <= lip, "u = {u}: {dq} > {lip}");
        }
    }

    #[test]
    fn ramp_shape() {
        assert_eq!(ramp(3.0, 10.0), 1.0);
        assert_eq!(ramp(10.0, 10.0), 1.0);
        assert_eq!(ramp(11.0, 10.0), 0.0);
        assert!((ramp(10.5, 10.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spec_validation_errors() {
        let bad_lambda = fig1().with_lambda(0.0);
        assert!(matches!(bad_lambda.validate(), Err(Error::InvalidSpec(_))));
        let bad_delta = fig1().with_delta(12.0);
        assert!(bad_delta.validate().is_err());
        let wrong_sign = ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::constant(1.0),
            ScalarFn::parse("-u^3", &["u"]).unwrap(),
        );
        assert!(wrong_sign.validate().is_err());
        let linear = ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::constant(1.0),
            ScalarFn::parse("u", &["u"]).unwrap(),
        )
        .with_superlinear(true);
        assert!(linear.validate().is_err());
        assert!(linear.clone().with_superlinear(false).validate().is_ok());
        let nonzero = ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::constant(1.0),
            ScalarFn::parse("u^3 + 1", &["u"]).unwrap(),
        );
        assert!(nonzero.validate().is_err());
    }

    #[test]
    fn truncation_errors() {
        let spec = ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::new(|r| if r > 5.0 { f64::NAN } else { 1.0 }),
            ScalarFn::parse("u^3", &["u"]).unwrap(),
        );
        assert!(matches!(build_truncation(&spec), Err(Error::NonFiniteWeight(_))));
        let zero = ProblemSpec::ball(
            2,
            10.0,
            5.0,
            ScalarFn::constant(0.0),
            ScalarFn::parse("u^3", &["u"]).unwrap(),
        );
        assert_eq!(build_truncation(&zero).unwrap_err(), Error::DegenerateProblem);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"dimension": 2, "geometry": {"ball": {"R": 10}}, "lambda": 5,
                       "bc": "dirichlet", "q": "1", "g": "u^3", "delta": 1}"#;
        let spec = ProblemSpec::from_json(text).unwrap();
        assert_eq!(spec.geometry, Geometry::Ball { radius: 10.0 });
        assert_eq!(spec.g.eval(-2.0), -8.0);
        let doc = spec.to_doc().unwrap();
        let again: ProblemDoc =
            serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(doc, again);

        let ann = r#"{"dimension": 3, "geometry": {"annulus": {"R1": 1, "R2": 4}}, "lambda": 2,
                      "bc": "neumann", "q": "1 + r", "g": "u^3", "delta": 0.5}"#;
        let spec = ProblemSpec::from_json(ann).unwrap();
        assert_eq!(spec.interval(), (1.0, 4.0));
        assert_eq!(spec.bc, BoundaryKind::Neumann);
        assert!(ProblemSpec::from_json(r#"{"dimension": 2}"#).is_err());
        let bad_var = text.replace("\"1\"", "\"u\"");
        assert!(matches!(ProblemSpec::from_json(&bad_var), Err(Error::Parse(_))));
    }
}
