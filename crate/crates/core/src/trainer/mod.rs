//! Moment-matching gradient training.
//!
//! Each iteration estimates the model moments with the configured sampler
//! and moves every parameter along the log-likelihood gradient:
//!
//! ```text
//! b_i  += step * (<s_i>_D     - <s_i>_M)
//! W_ij += step * (<s_i s_j>_D - <s_i s_j>_M)
//! ```

mod experiment;

pub use experiment::{chain_length_experiment, moment_labels, ExperimentConfig, ExperimentReport, ExperimentSampler};

use std::ops::RangeInclusive;

use rand::distributions::{Distribution, Open01};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::model::{BoltzmannMachine, MomentStatistics, SampleBatch, StateVector};
use crate::sampler::SamplerKind;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub reads_per_iteration: usize,
    pub init_scale: f64,
    pub seed: u64,
    /// Store a copy of the parameters with every trace record.
    pub keep_snapshots: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            step_size: 0.1,
            iterations: 200,
            reads_per_iteration: 1000,
            init_scale: 0.05,
            seed: 0,
            keep_snapshots: true,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "step size must be finite, got {}",
                self.step_size
            )));
        }
        if self.iterations == 0 || self.reads_per_iteration == 0 {
            return Err(Error::InvalidParameter(
                "iterations and reads_per_iteration must be at least 1".into(),
            ));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "init scale must be >= 0, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Data-distribution moments the model is trained to reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MomentStatistics", into = "MomentStatistics")]
pub struct TargetSpec(MomentStatistics);

impl TryFrom<MomentStatistics> for TargetSpec {
    type Error = Error;
    fn try_from(m: MomentStatistics) -> Result<Self> {
        TargetSpec::new(m)
    }
}

impl From<TargetSpec> for MomentStatistics {
    fn from(t: TargetSpec) -> Self {
        t.0
    }
}

impl TargetSpec {
    pub fn new(moments: MomentStatistics) -> Result<Self> {
        if let Some(v) = moments.second_flat().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("target moment {v} outside [0, 1]")));
        }
        Ok(TargetSpec(moments))
    }

    pub fn moments(&self) -> &MomentStatistics {
        &self.0
    }

    pub fn n_units(&self) -> usize {
        self.0.n_units()
    }

    pub fn first(&self) -> &[f64] {
        self.0.first()
    }

    pub fn second(&self, i: usize, j: usize) -> f64 {
        self.0.second(i, j)
    }

    /// New first moments with the off-diagonal second moments kept.
    pub fn with_first(&self, first: Vec<f64>) -> Result<Self> {
        TargetSpec::new(self.0.with_first(first)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based, counted across resumed runs.
    pub iteration: usize,
    pub moments: MomentStatistics,
    pub summed_error: f64,
    /// Parameters the moments were estimated from.
    pub parameters: Option<BoltzmannMachine>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingTrace {
    records: Vec<IterationRecord>,
}

impl TrainingTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn summed_errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.summed_error).collect()
    }

    /// Records for the 1-based inclusive iteration range.
    pub fn window(&self, window: &RangeInclusive<usize>) -> Result<&[IterationRecord]> {
        let (start, end) = (*window.start(), *window.end());
        if start == 0 || start > end || end > self.records.len() {
            return Err(Error::InvalidParameter(format!(
                "window {start}..={end} is outside iterations 1..={}",
                self.records.len()
            )));
        }
        Ok(&self.records[start - 1..end])
    }
}

/// What the trainer saw at one iteration, before the update is applied.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub model: &'a BoltzmannMachine,
    pub moments: &'a MomentStatistics,
    pub batch: Option<&'a SampleBatch<StateVector>>,
}

/// Uniform parameters in `[-init_scale, init_scale]`.
pub fn init_model(n: usize, cfg: &TrainerConfig) -> Result<BoltzmannMachine> {
    if n == 0 {
        return Err(Error::InvalidParameter("model needs at least one unit".into()));
    }
    cfg.validate()?;
    let mut bm = BoltzmannMachine::zeros(n);
    if cfg.init_scale == 0.0 {
        return Ok(bm);
    }
    let scale = cfg.init_scale;
    let mut rng = seed::rng(seed::derive(cfg.seed, &[0x1417]));
    for i in 0..n {
        bm.set_bias(i, rng.gen_range(-scale..=scale));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            bm.set_weight(i, j, rng.gen_range(-scale..=scale));
        }
    }
    Ok(bm)
}

/// Sum of squared first-moment errors plus squared errors of the unordered
/// second moments.
pub fn summed_error(model: &MomentStatistics, targets: &TargetSpec) -> Result<f64> {
    ensure_len(targets.n_units(), model.n_units())?;
    let first: f64 = model
        .first()
        .iter()
        .zip(targets.first())
        .map(|(m, t)| (t - m).powi(2))
        .sum();
    let second: f64 = model.pairs().map(|(i, j, m)| (targets.second(i, j) - m).powi(2)).sum();
    Ok(first + second)
}

/// Log-likelihood gradient packaged as a parameter-shaped model:
/// `biases[i] = <s_i>_D - <s_i>_M`, `weights[i][j] = <s_i s_j>_D - <s_i s_j>_M`.
pub fn moment_gradient(model: &MomentStatistics, targets: &TargetSpec) -> Result<BoltzmannMachine> {
    let n = targets.n_units();
    ensure_len(n, model.n_units())?;
    let mut grad = BoltzmannMachine::zeros(n);
    for i in 0..n {
        grad.set_bias(i, targets.first()[i] - model.first()[i]);
        for j in (i + 1)..n {
            grad.set_weight(i, j, targets.second(i, j) - model.second(i, j));
        }
    }
    Ok(grad)
}

fn apply_gradient(model: &mut BoltzmannMachine, grad: &BoltzmannMachine, step: f64) {
    let n = model.n_units();
    for i in 0..n {
        model.set_bias(i, model.bias(i) + step * grad.bias(i));
        for j in (i + 1)..n {
            model.set_weight(i, j, model.weight(i, j) + step * grad.weight(i, j));
        }
    }
}

/// Trains `model` in place for `cfg.iterations` iterations.
pub fn train(
    model: &mut BoltzmannMachine,
    targets: &TargetSpec,
    sampler: &SamplerKind,
    cfg: &TrainerConfig,
) -> Result<TrainingTrace> {
    let mut trace = TrainingTrace::new();
    resume(model, targets, sampler, cfg, &mut trace, |_| {})?;
    Ok(trace)
}

/// Continues training, appending to `trace`. Iteration `t` always samples
/// with a seed derived from `(cfg.seed, t)`, so one long run and a run split
/// into several resumes produce the same trace.
pub fn resume(
    model: &mut BoltzmannMachine,
    targets: &TargetSpec,
    sampler: &SamplerKind,
    cfg: &TrainerConfig,
    trace: &mut TrainingTrace,
    mut observe: impl FnMut(&IterationView<'_>),
) -> Result<()> {
    cfg.validate()?;
    sampler.validate()?;
    ensure_len(model.n_units(), targets.n_units())?;
    for _ in 0..cfg.iterations {
        let iteration = trace.len() + 1;
        let call_seed = seed::derive(cfg.seed, &[iteration as u64]);
        let (moments, batch) = sampler.model_moments(model, cfg.reads_per_iteration, call_seed)?;
        let error = summed_error(&moments, targets)?;
        observe(&IterationView {
            iteration,
            model,
            moments: &moments,
            batch: batch.as_ref(),
        });
        let snapshot = cfg.keep_snapshots.then(|| model.clone());
        let grad = moment_gradient(&moments, targets)?;
        apply_gradient(model, &grad, cfg.step_size);
        trace.records.push(IterationRecord {
            iteration,
            moments,
            summed_error: error,
            parameters: snapshot,
        });
    }
    Ok(())
}

/// Root-mean-square moment error of one iteration, over first moments and
/// unordered second moments.
pub fn moment_rmse(model: &MomentStatistics, targets: &TargetSpec) -> Result<f64> {
    let n = targets.n_units();
    let terms = n + n * (n - 1) / 2;
    Ok((summed_error(model, targets)? / terms as f64).sqrt())
}

/// Mean and population standard deviation of the per-iteration RMSE over a
/// 1-based inclusive iteration window.
pub fn window_rmse(trace: &TrainingTrace, targets: &TargetSpec, window: RangeInclusive<usize>) -> Result<(f64, f64)> {
    let records = trace.window(&window)?;
    let values = records
        .iter()
        .map(|r| moment_rmse(&r.moments, targets))
        .collect::<Result<Vec<f64>>>()?;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok((mean, var.sqrt()))
}

/// Random activation targets `h_i ~ U(0, 1)` with pair targets
/// `c_ij * h_i * h_j`, `c_ij ~ U(0, 1)`.
pub fn generate_random_targets(n: usize, seed: u64) -> Result<TargetSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("target size must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let first: Vec<f64> = (0..n).map(|_| Open01.sample(&mut rng)).collect();
    let h = first.clone();
    TargetSpec::new(MomentStatistics::from_pair_fn(first, |i, j| {
        let c: f64 = Open01.sample(&mut rng);
        c * h[i] * h[j]
    }))
}
