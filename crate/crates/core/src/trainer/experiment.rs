//! Chain-length experiment: train against random targets through the
//! emulated annealer at a given chain multiplier and report the windowed
//! RMSE together with the per-moment convergence series.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{generate_random_targets, init_model, train, window_rmse, TargetSpec, TrainerConfig, TrainingTrace};
use crate::chimera::{minimal_square_graph, SHORE};
use crate::error::{Error, Result};
use crate::sampler::{AnnealConfig, AnnealerSettings, ChainStrength, SamplerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentSampler {
    Annealer,
    /// Exact-moment control run; the chain multiplier is ignored.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub node_count: usize,
    pub chain_multiplier: usize,
    pub target_seed: u64,
    pub trainer_seed: u64,
    pub rmse_window: RangeInclusive<usize>,
    pub trainer: TrainerConfig,
    pub anneal: AnnealConfig,
    pub chain_strength: ChainStrength,
    pub sampler: ExperimentSampler,
    pub chimera: Option<(usize, usize)>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            node_count: 5,
            chain_multiplier: 1,
            target_seed: 0,
            trainer_seed: 0,
            rmse_window: 191..=200,
            trainer: TrainerConfig {
                iterations: 200,
                ..TrainerConfig::default()
            },
            anneal: AnnealConfig::default(),
            chain_strength: ChainStrength::default(),
            sampler: ExperimentSampler::Annealer,
            chimera: None,
        }
    }
}

impl ExperimentConfig {
    pub fn sampler_kind(&self) -> SamplerKind {
        match self.sampler {
            ExperimentSampler::Exact => SamplerKind::Exact,
            ExperimentSampler::Annealer => SamplerKind::Annealer(AnnealerSettings {
                anneal: self.anneal,
                chain_multiplier: self.chain_multiplier,
                chain_strength: self.chain_strength,
                chimera: self.chimera,
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub node_count: usize,
    pub chain_multiplier: usize,
    pub targets: TargetSpec,
    pub trace: TrainingTrace,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

impl ExperimentReport {
    /// Column labels of the flattened moment series: `s0`, `s1`, ...,
    /// then `s0s1`, `s0s2`, ...
    pub fn moment_labels(&self) -> Vec<String> {
        moment_labels(self.node_count)
    }
}

pub fn moment_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("s{i}"))
        .chain((0..n).flat_map(|i| ((i + 1)..n).map(move |j| format!("s{i}s{j}"))))
        .collect()
}

pub fn chain_length_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.node_count == 0 {
        return Err(Error::InvalidParameter("experiment needs at least one node".into()));
    }
    if cfg.sampler == ExperimentSampler::Annealer {
        let logical = cfg.node_count * cfg.chain_multiplier;
        let capacity = match cfg.chimera {
            Some((r, c)) => SHORE * r.min(c),
            None => minimal_square_graph(logical)?.clique_capacity(),
        };
        if logical > capacity {
            return Err(Error::Capacity {
                requested: logical,
                capacity,
            });
        }
    }
    let trainer = TrainerConfig {
        seed: cfg.trainer_seed,
        ..cfg.trainer
    };
    if *cfg.rmse_window.end() > trainer.iterations {
        return Err(Error::InvalidParameter(format!(
            "RMSE window {:?} extends past {} iterations",
            cfg.rmse_window, trainer.iterations
        )));
    }
    let targets = generate_random_targets(cfg.node_count, cfg.target_seed)?;
    let mut model = init_model(cfg.node_count, &trainer)?;
    let trace = train(&mut model, &targets, &cfg.sampler_kind(), &trainer)?;
    let (rmse_mean, rmse_std) = window_rmse(&trace, &targets, cfg.rmse_window.clone())?;
    Ok(ExperimentReport {
        node_count: cfg.node_count,
        chain_multiplier: cfg.chain_multiplier,
        targets,
        trace,
        rmse_mean,
        rmse_std,
    })
}
