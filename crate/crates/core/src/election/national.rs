use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, StudentsT};

use super::PollingSnapshot;
use crate::error::{Error, Result};

/// A uniform poll-margin shift (percentage points, positive favors the
/// Democratic candidate) and its unnormalized Student-t weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NationalErrorModel {
    pub shift: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NationalErrorGrid {
    pub count: usize,
    pub degrees_of_freedom: f64,
    pub half_span: f64,
    /// Margin points per unit of the t variate.
    pub scale: f64,
}

impl Default for NationalErrorGrid {
    fn default() -> Self {
        NationalErrorGrid {
            count: 25,
            degrees_of_freedom: 10.0,
            half_span: 6.0,
            scale: 2.0,
        }
    }
}

/// Equally spaced shifts on `[-half_span, half_span]`, weighted by the
/// t density at `shift / scale`.
pub fn national_error_grid(grid: &NationalErrorGrid) -> Result<Vec<NationalErrorModel>> {
    if grid.count.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "error grid size must be odd, got {}",
            grid.count
        )));
    }
    if !(grid.half_span > 0.0 && grid.scale > 0.0) {
        return Err(Error::InvalidParameter(
            "error grid span and scale must be positive".into(),
        ));
    }
    let t = StudentsT::new(0.0, 1.0, grid.degrees_of_freedom)
        .map_err(|e| Error::InvalidParameter(format!("t distribution: {e}")))?;
    let half = (grid.count / 2) as f64;
    Ok((0..grid.count)
        .map(|k| {
            let shift = if grid.count == 1 {
                0.0
            } else {
                grid.half_span * (k as f64 - half) / half
            };
            NationalErrorModel {
                shift,
                weight: t.pdf(shift / grid.scale),
            }
        })
        .collect())
}

/// Moves every state's margin by `shift` points, half taken from each
/// candidate, with shares clamped to `[0, 100]`.
pub fn apply_national_error(snapshot: &PollingSnapshot, shift: f64) -> PollingSnapshot {
    PollingSnapshot {
        shares: snapshot
            .shares
            .iter()
            .map(|&(d, r)| ((d + shift / 2.0).clamp(0.0, 100.0), (r - shift / 2.0).clamp(0.0, 100.0)))
            .collect(),
        ..snapshot.clone()
    }
}
