//! Shooting solver for radial nodal solutions of the Minkowski-curvature
//! problem `(r^{N-1} phi(u'))' + lambda r^{N-1} q(r) g(u) = 0`.

pub mod error;
pub mod integrate;
pub mod model;
pub mod output;
pub mod periodic;
pub mod phase;
pub mod rotation;
pub mod shoot;

pub use error::{Error, Result};
pub use integrate::{shoot_rk, ShotInput, ShotOptions, Trajectory};
pub use model::{build_truncation, BoundaryKind, Geometry, ProblemSpec, ScalarFn, TruncatedSystem};
pub use shoot::{solve_targets, Branch, SolutionProfile, SolveOptions};
pub use periodic::{find_periodic, poincare_map, verify_twist, PeriodicDoc, PeriodicSpec};
pub use rotation::{estimate_thresholds, validate_random, BoundPair, SpiralEstimate};
