use thiserror::Error;

/// Errors produced by the solver.
///
/// Several variants are diagnostic rather than fatal: a scan keeps going when a
/// single shot fails, and `NoBracket` only means the requested nodal class is
/// not reachable at the current parameter.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("slope {0} is outside (-1, 1)")]
    SlopeOutOfRange(f64),
    #[error("weight q is not finite at r = {0}")]
    NonFiniteWeight(f64),
    #[error("q*g vanishes identically on the truncation box; shooting is vacuous")]
    DegenerateProblem,
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
    #[error("expression error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t = {0}")]
    TooManySteps(f64),
    #[error("trajectory reached the phase-plane origin at r = {0}")]
    OriginHit(f64),
    #[error("Picard iteration did not converge after {iterations} iterations (last distance {distance:e})")]
    NoConvergence { iterations: usize, distance: f64 },
    #[error("angle increment {increment} at sample {index} is too large to lift unambiguously")]
    LiftAmbiguous { index: usize, increment: f64 },
    #[error("sign changes ({sign_changes}) disagree with winding-derived zero count ({from_winding})")]
    CountMismatch {
        sign_changes: usize,
        from_winding: i64,
    },
    #[error("no bracket straddles target angle {0}")]
    NoBracket(f64),
    #[error("nonlinearity is not superlinear at zero on the search grid")]
    NotSuperlinear,
    #[error("comparison spiral left the admissible range (radius {0:e})")]
    SpiralBlowup(f64),
    #[error("no admissible initial radius keeps the outer spiral inside the box for j = {0}")]
    BoxExceeded(u32),
    #[error("no twist found: {0}")]
    TwistNotFound(String),
    #[error("no fixed point found from any seed")]
    NoFixedPoint,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
