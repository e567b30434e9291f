//! Run configuration, read from a JSON file.
//!
//! Every field is optional; the defaults reproduce the planar ball problem
//! with `R = 10`, `lambda = 5`, `q = 1`, `g(u) = u^3`.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nodal_core::model::{GeometryDoc, ProblemDoc};
use nodal_core::periodic::{PeriodicDoc, SearchOptions};
use nodal_core::shoot::grid::EtaGridSpec;
use nodal_core::shoot::{Acceptance, Signs, SolveOptions};
use nodal_core::{BoundaryKind, ProblemSpec, ShotOptions};
use serde::{Deserialize, Serialize};

/// A problem given inline or as a path to a JSON file (relative to the
/// config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemRef {
    Path(PathBuf),
    Inline(ProblemDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemRef,
    pub targets: Vec<u32>,
    pub signs: Signs,
    pub shot: ShotOptions,
    pub grid: EtaGridSpec,
    pub acceptance: Acceptance,
    pub sweep: SweepConfig,
    pub periodic: PeriodicConfig,
    pub validate: ValidateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    pub k_max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodicConfig {
    pub problem: PeriodicDoc,
    /// Twist order: some circle must wind more than `2 k pi`.
    pub k: u32,
    /// Ascending values tried in turn; empty means the problem's own value.
    pub lambdas: Vec<f64>,
    pub radii: usize,
    pub search: SearchOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Checks to run; empty means all.
    pub checks: Vec<String>,
    pub random_systems: usize,
    pub rotation_j_max: u32,
    pub oracle_shots: usize,
    pub oracle_panels: usize,
}

pub fn default_problem() -> ProblemDoc {
    ProblemDoc {
        dimension: 2,
        geometry: GeometryDoc::Ball { radius: 10.0 },
        lambda: 5.0,
        bc: BoundaryKind::Dirichlet,
        q: "1".into(),
        g: "u^3".into(),
        delta: 1.0,
        superlinear: Some(true),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let solve = SolveOptions::default();
        Self {
            problem: ProblemRef::Inline(default_problem()),
            targets: vec![0, 1, 2, 3],
            signs: solve.signs,
            shot: solve.shot,
            grid: solve.grid,
            acceptance: solve.acceptance,
            sweep: SweepConfig::default(),
            periodic: PeriodicConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambdas: vec![0.05, 0.5, 5.0, 50.0],
            k_max: 3,
        }
    }
}

impl Default for PeriodicConfig {
    fn default() -> Self {
        Self {
            problem: PeriodicDoc {
                period: 2.0 * std::f64::consts::PI,
                lambda: 10.0,
                q: "1".into(),
                g: "u^3".into(),
                strip: nodal_core::periodic::DEFAULT_STRIP,
            },
            k: 1,
            lambdas: vec![0.1, 1.0, 10.0, 100.0],
            radii: 60,
            search: SearchOptions::default(),
        }
    }
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            random_systems: 100,
            rotation_j_max: 5,
            oracle_shots: 20,
            oracle_panels: 1 << 17,
        }
    }
}

/// A loaded configuration with its problem resolved.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub problem_doc: ProblemDoc,
    pub problem: ProblemSpec,
}

impl Loaded {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            shot: self.config.shot,
            grid: self.config.grid,
            acceptance: self.config.acceptance,
            signs: self.config.signs,
        }
    }
}

/// Reads `path`, or the defaults when no path is given.
pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let (config, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            let config: RunConfig =
                serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?;
            (config, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    let problem_doc = match &config.problem {
        ProblemRef::Inline(doc) => doc.clone(),
        ProblemRef::Path(rel) => {
            let p = base.join(rel);
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading problem {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing problem {}", p.display()))?
        }
    };
    let problem = problem_doc.clone().into_spec().context("invalid problem")?;
    Ok(Loaded {
        config,
        problem_doc,
        problem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn empty_object_is_default() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamda": 3}"#).is_err());
    }

    #[test]
    fn problem_by_path() {
        let dir = tempfile::tempdir().unwrap();
        let doc = default_problem();
        std::fs::write(dir.path().join("p.json"), serde_json::to_string(&doc).unwrap()).unwrap();
        std::fs::write(dir.path().join("run.json"), r#"{"problem": "p.json", "targets": [1]}"#).unwrap();
        let l = load(Some(&dir.path().join("run.json"))).unwrap();
        assert_eq!(l.problem_doc, doc);
        assert_eq!(l.config.targets, vec![1]);
    }
}
