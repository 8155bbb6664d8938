use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::Outcome;
use crate::error::{ensure_len, Error, Result};
use crate::model::StateVector;
use crate::trainer::{TargetSpec, TrainingTrace};

/// |Pearson r| between each state's simulated vote and the simulated
/// national outcome. Zero-variance columns score 0.
pub fn tipping_point_correlations(samples: &[StateVector], outcomes: &[Outcome]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::Empty("tipping-point samples (need at least 2)"));
    }
    ensure_len(samples.len(), outcomes.len())?;
    let n = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            actual: bad.len(),
        });
    }
    let m = samples.len() as f64;
    let y: Vec<f64> = outcomes
        .iter()
        .map(|&o| f64::from(u8::from(o == Outcome::DemWin)))
        .collect();
    let y_mean = y.iter().sum::<f64>() / m;
    let y_var: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    Ok((0..n)
        .map(|s| {
            let x_mean = samples.iter().map(|v| f64::from(v.bits()[s])).sum::<f64>() / m;
            let mut cov = 0.0;
            let mut x_var = 0.0;
            for (v, yk) in samples.iter().zip(&y) {
                let dx = f64::from(v.bits()[s]) - x_mean;
                cov += dx * (yk - y_mean);
                x_var += dx * dx;
            }
            if x_var == 0.0 || y_var == 0.0 {
                0.0
            } else {
                (cov / (x_var * y_var).sqrt()).abs()
            }
        })
        .collect())
}

/// Target first moments and the model's first moments over a run of
/// iterations, for one error model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorWindow {
    pub target_first: Vec<f64>,
    pub model_first: Vec<Vec<f64>>,
}

impl ErrorWindow {
    pub fn new(target_first: Vec<f64>) -> Self {
        ErrorWindow {
            target_first,
            model_first: Vec::new(),
        }
    }

    pub fn push(&mut self, first: Vec<f64>) {
        self.model_first.push(first);
    }

    pub fn from_trace(trace: &TrainingTrace, targets: &TargetSpec, window: RangeInclusive<usize>) -> Result<Self> {
        Ok(ErrorWindow {
            target_first: targets.first().to_vec(),
            model_first: trace
                .window(&window)?
                .iter()
                .map(|r| r.moments.first().to_vec())
                .collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            lo: -5.0,
            hi: 5.0,
            bins: 20,
        }
    }
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 || self.hi.partial_cmp(&self.lo) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParameter(format!(
                "histogram needs bins > 0 and hi > lo, got {} bins on [{}, {}]",
                self.bins, self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// Bin index, or `Err(true)` / `Err(false)` for overflow / underflow.
    fn locate(&self, x: f64) -> std::result::Result<usize, bool> {
        if x < self.lo {
            Err(false)
        } else if x > self.hi {
            Err(true)
        } else {
            Ok((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub spec: HistogramSpec,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub total: u64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl Histogram {
    pub fn new(spec: HistogramSpec) -> Self {
        Histogram {
            spec,
            counts: vec![0; spec.bins],
            underflow: 0,
            overflow: 0,
            total: 0,
            sum: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn add(&mut self, x: f64) {
        match self.spec.locate(x) {
            Ok(k) => self.counts[k] += 1,
            Err(true) => self.overflow += 1,
            Err(false) => self.underflow += 1,
        }
        self.total += 1;
        self.sum += x;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.total as f64
    }

    /// Lower edge of bin `k`.
    pub fn edge(&self, k: usize) -> f64 {
        self.spec.lo + k as f64 * self.spec.width()
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        self.spec.locate(x).ok()
    }
}

/// Per-state histograms of `(target - model) * 100`, pooled over every
/// collected iteration of every error model.
pub fn state_error_distributions(windows: &[ErrorWindow], spec: &HistogramSpec) -> Result<Vec<Histogram>> {
    spec.validate()?;
    let first = windows.first().ok_or(Error::Empty("error windows"))?;
    let n = first.target_first.len();
    let mut hists = vec![Histogram::new(*spec); n];
    for w in windows {
        ensure_len(n, w.target_first.len())?;
        if w.model_first.is_empty() {
            return Err(Error::Empty("error window iterations"));
        }
        for row in &w.model_first {
            ensure_len(n, row.len())?;
            for (s, (t, m)) in w.target_first.iter().zip(row).enumerate() {
                hists[s].add((t - m) * 100.0);
            }
        }
    }
    Ok(hists)
}
