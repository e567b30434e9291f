//! Shooting-parameter grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of a scan: geometric points near zero, then uniform points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtaGridSpec {
    pub n_geometric: usize,
    pub n_uniform: usize,
    /// Lower end of the geometric part as a fraction of the scale.
    pub lo_frac: f64,
    /// Junction of the two parts as a fraction of the scale.
    pub mid_frac: f64,
    /// Upper end of the scan; `None` means `R + 1` on a ball.
    pub upper: Option<f64>,
}

impl Default for EtaGridSpec {
    fn default() -> Self {
        Self {
            n_geometric: 200,
            n_uniform: 400,
            lo_frac: 1e-6,
            mid_frac: 0.1,
            upper: None,
        }
    }
}

/// A sorted list of positive shooting parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaGrid {
    pub values: Vec<f64>,
}

impl EtaGrid {
    /// `n_geometric` points in `[lo_frac scale, mid_frac scale]` and
    /// `n_uniform` points in `(mid_frac scale, upper]`.
    pub fn build(spec: &EtaGridSpec, scale: f64, upper: f64) -> Result<Self> {
        let lo = spec.lo_frac * scale;
        let mid = spec.mid_frac * scale;
        if !(lo > 0.0 && mid > lo && upper > mid) || spec.n_geometric < 2 || spec.n_uniform < 1 {
            return Err(Error::InvalidArgument(format!(
                "bad eta grid: lo {lo}, mid {mid}, upper {upper}"
            )));
        }
        let mut values = Vec::with_capacity(spec.n_geometric + spec.n_uniform);
        let ng = spec.n_geometric;
        for k in 0..ng {
            values.push(lo * (mid / lo).powf(k as f64 / (ng - 1) as f64));
        }
        let nu = spec.n_uniform;
        for k in 1..=nu {
            values.push(mid + (upper - mid) * k as f64 / nu as f64);
        }
        values[ng - 1] = mid;
        values[ng + nu - 1] = upper;
        Ok(Self { values })
    }

    /// The default ball scan on `[1e-6 R, R + 1]`.
    pub fn ball(spec: &EtaGridSpec, radius: f64) -> Result<Self> {
        Self::build(spec, radius, spec.upper.unwrap_or(radius + 1.0))
    }

    /// Slope scan for annulus shots. Slopes are dimensionless, so the scale is
    /// 1 and the default upper end lies beyond the light-cone slope 1, where
    /// the truncated flux takes over.
    pub fn annulus(spec: &EtaGridSpec) -> Result<Self> {
        Self::build(spec, 1.0, spec.upper.unwrap_or(4.0))
    }

    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eta grid value".into()));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values })
    }

    /// Inserts all midpoints.
    pub fn refined(&self) -> Self {
        let mut values = Vec::with_capacity(2 * self.values.len());
        for w in self.values.windows(2) {
            values.push(w[0]);
            values.push(0.5 * (w[0] + w[1]));
        }
        values.extend(self.values.last());
        Self { values }
    }

    /// The grid with every value negated, still sorted ascending.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().rev().map(|v| -v).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ball_layout() {
        let g = EtaGrid::ball(&EtaGridSpec::default(), 10.0).unwrap();
        assert_eq!(g.len(), 600);
        assert!((g.values[0] - 1e-5).abs() < 1e-20);
        assert_eq!(g.values[199], 1.0);
        assert_eq!(*g.values.last().unwrap(), 11.0);
        assert!(g.values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn refinement_keeps_points() {
        let g = EtaGrid::ball(&EtaGridSpec::default(), 10.0).unwrap();
        let f = g.refined();
        assert_eq!(f.len(), 2 * g.len() - 1);
        assert!(g.values.iter().all(|v| f.values.contains(v)));
    }

    #[test]
    fn negation_sorted() {
        let g = EtaGrid::from_values(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(g.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(g.negated().values, vec![-3.0, -2.0, -1.0]);
    }

    #[test]
    fn rejects_bad_layout() {
        let spec = EtaGridSpec {
            mid_frac: 2.0,
            ..EtaGridSpec::default()
        };
        assert!(EtaGrid::ball(&spec, 1.0).is_err());
    }
}
