//! Parameter sweeps and the large-parameter limit of positive solutions.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve_targets, Branch, Signs, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{build_truncation, Geometry, ProblemSpec};
use crate::output::{fmt15, round15};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub sign: i8,
    pub branch: Branch,
    pub j: u32,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub max_winding: f64,
    /// Largest class with at least one solution.
    pub max_j: Option<u32>,
    pub counts: Vec<CountRow>,
    /// Solutions with `1 <= j <= k_max`.
    pub nodal_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStar {
    pub k: u32,
    /// Smallest grid value from which on every entry has `nodal_count >= 4k`.
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub lambda_grid: Vec<f64>,
    pub k_max: u32,
    pub entries: Vec<SweepEntry>,
    pub lambda_star: Vec<LambdaStar>,
}

impl SweepReport {
    pub fn count(&self, lambda_index: usize, sign: i8, branch: Branch, j: u32) -> usize {
        self.entries[lambda_index]
            .counts
            .iter()
            .find(|c| c.sign == sign && c.branch == branch && c.j == j)
            .map_or(0, |c| c.count)
    }

    /// Rows `lambda,sign,branch,j,count`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "lambda,sign,branch,j,count")?;
        for e in &self.entries {
            for c in &e.counts {
                let branch = match c.branch {
                    Branch::Small => "small",
                    Branch::Large => "large",
                };
                writeln!(w, "{},{},{},{},{}", fmt15(e.lambda), c.sign, branch, c.j, c.count)?;
            }
        }
        Ok(())
    }
}

/// Runs the solver for every `lambda` and tallies the classes `0..=k_max`.
pub fn lambda_sweep(spec: &ProblemSpec, lambdas: &[f64], k_max: u32, opts: &SolveOptions) -> Result<SweepReport> {
    if lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas.is_empty() {
        return Err(Error::InvalidArgument("lambda grid must be increasing".into()));
    }
    let targets: Vec<u32> = (0..=k_max).collect();
    let entries: Vec<Result<SweepEntry>> = lambdas
        .par_iter()
        .map(|&lambda| {
            let sys = build_truncation(&spec.clone().with_lambda(lambda))?;
            let rep = solve_targets(&sys, &targets, opts)?;
            let mut counts = Vec::new();
            for t in &rep.targets {
                for sign in [1i8, -1] {
                    for branch in [Branch::Small, Branch::Large] {
                        counts.push(CountRow {
                            sign,
                            branch,
                            j: t.j,
                            count: t.count(sign, branch),
                        });
                    }
                }
            }
            let nodal_count = rep.targets.iter().filter(|t| t.j >= 1).map(|t| t.profiles.len()).sum();
            Ok(SweepEntry {
                lambda,
                max_winding: round15(rep.max_winding()),
                max_j: rep.targets.iter().filter(|t| !t.profiles.is_empty()).map(|t| t.j).max(),
                counts,
                nodal_count,
            })
        })
        .collect();
    let entries = entries.into_iter().collect::<Result<Vec<_>>>()?;
    let lambda_star = (1..=k_max)
        .map(|k| {
            let need = 4 * k as usize;
            let mut first = None;
            for e in entries.iter().rev() {
                if e.nodal_count >= need {
                    first = Some(e.lambda);
                } else {
                    break;
                }
            }
            LambdaStar { k, lambda: first }
        })
        .collect();
    Ok(SweepReport {
        lambda_grid: lambdas.to_vec(),
        k_max,
        entries,
        lambda_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularEntry {
    pub lambda: f64,
    pub eta: f64,
    /// `sup |u - (R - r)|`.
    pub cone_distance: f64,
    pub min_slope: f64,
    /// `u'(0)`.
    pub center_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularLimitReport {
    pub entries: Vec<SingularEntry>,
    pub distance_decreasing: bool,
    pub slopes_above_minus_one: bool,
    pub center_slope_zero: bool,
}

/// Follows the positive large one-signed solution as `lambda` grows and
/// measures its distance to the cone `R - r`.
pub fn singular_limit_diagnostics(spec: &ProblemSpec, lambdas: &[f64], opts: &SolveOptions) -> Result<SingularLimitReport> {
    let Geometry::Ball { radius } = spec.geometry else {
        return Err(Error::InvalidArgument("the cone limit is stated on a ball".into()));
    };
    if lambdas.len() < 3 || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("need at least 3 increasing lambdas".into()));
    }
    let opts = SolveOptions {
        signs: Signs::Positive,
        ..*opts
    };
    let mut entries = Vec::new();
    for &lambda in lambdas {
        let sys = build_truncation(&spec.clone().with_lambda(lambda))?;
        let rep = solve_targets(&sys, &[0], &opts)?;
        let prof = rep.targets[0]
            .profiles
            .iter()
            .filter(|p| p.branch == Branch::Large)
            .max_by(|a, b| a.eta.total_cmp(&b.eta))
            .ok_or(Error::NoBracket(rep.targets[0].target))?;
        let t = &prof.trajectory;
        let mut dist = 0.0f64;
        for w in t.samples.windows(2) {
            for r in [w[0].r, 0.5 * (w[0].r + w[1].r), w[1].r] {
                dist = dist.max((t.eval_u(r) - (radius - r)).abs());
            }
        }
        entries.push(SingularEntry {
            lambda,
            eta: prof.eta,
            cone_distance: dist,
            min_slope: t.min_slope(),
            center_slope: t.first().du,
        });
    }
    Ok(SingularLimitReport {
        distance_decreasing: entries.windows(2).all(|w| w[1].cone_distance < w[0].cone_distance),
        slopes_above_minus_one: entries.iter().all(|e| e.min_slope > -1.0),
        center_slope_zero: entries.iter().all(|e| e.center_slope == 0.0),
        entries,
    })
}
