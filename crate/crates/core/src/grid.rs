//! Sampling grids for triplet, polygon, and function-property scans.
//!
//! A grid is the union of an arithmetic ladder `step, 2*step, ..., max`
//! and a geometric tail `max * ratio^k`, plus any user-supplied extras.
//! The arithmetic part probes additive failure modes, the geometric tail
//! multiplicative ones near zero.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid max must be finite and at least the step, got {0}")]
    BadMax(f64),
    #[error("geometric ratio must lie in (0, 1), got {0}")]
    BadRatio(f64),
    #[error("extra grid value must be positive and finite, got {0}")]
    BadExtra(f64),
    #[error("grid would hold {0} arithmetic values; the cap is 1000000")]
    TooManyValues(u64),
}

/// Parameters describing a scan grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    pub max: f64,
    pub geo_ratio: f64,
    pub geo_levels: u32,
    pub extra: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 0.125,
            max: 16.0,
            geo_ratio: 0.5,
            geo_levels: 12,
            extra: Vec::new(),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(GridError::BadStep(self.step));
        }
        if !(self.max >= self.step && self.max.is_finite()) {
            return Err(GridError::BadMax(self.max));
        }
        if !(self.geo_ratio > 0.0 && self.geo_ratio < 1.0) {
            return Err(GridError::BadRatio(self.geo_ratio));
        }
        for &x in &self.extra {
            if !(x > 0.0 && x.is_finite()) {
                return Err(GridError::BadExtra(x));
            }
        }
        let count = (self.max / self.step).floor();
        if count > 1_000_000.0 {
            return Err(GridError::TooManyValues(count as u64));
        }
        Ok(())
    }

    /// All grid values, positive, sorted ascending, deduplicated.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let count = (self.max / self.step).floor() as u64;
        for k in 1..=count {
            out.push(k as f64 * self.step);
        }
        if out.last().copied() != Some(self.max) {
            out.push(self.max);
        }
        let mut v = self.max;
        for _ in 0..self.geo_levels {
            v *= self.geo_ratio;
            if v > 0.0 {
                out.push(v);
            }
        }
        out.extend(self.extra.iter().copied().filter(|x| *x > 0.0));
        out.sort_by(|x, y| x.partial_cmp(y).expect("grid values are finite"));
        out.dedup();
        out
    }

    pub fn descriptor(&self) -> GridDescriptor {
        GridDescriptor {
            step: self.step,
            max: self.max,
            geo_ratio: self.geo_ratio,
            geo_levels: self.geo_levels,
            extra: self.extra.clone(),
            len: self.values().len(),
        }
    }
}

/// Snapshot of the grid actually used by a scan, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub step: f64,
    pub max: f64,
    pub geo_ratio: f64,
    pub geo_levels: u32,
    pub extra: Vec<f64>,
    pub len: usize,
}

/// Thins `values` to at most `target` entries, keeping the endpoints and
/// an evenly spaced selection in between. Used to keep polygon
/// enumerations inside their tuple budget.
pub fn decimate(values: &[f64], target: usize) -> Vec<f64> {
    if values.len() <= target || target == 0 {
        return values.to_vec();
    }
    if target == 1 {
        return vec![*values.last().expect("nonempty")];
    }
    let mut out = Vec::with_capacity(target);
    let n = values.len();
    for i in 0..target {
        let idx = (i * (n - 1)) / (target - 1);
        out.push(values[idx]);
    }
    out.dedup();
    out
}
