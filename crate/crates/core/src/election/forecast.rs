use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::analysis::ErrorWindow;
use super::{
    apply_national_error, build_targets, national_error_grid, tally_election, HistoricalResults, NationalErrorGrid,
    Outcome, PollingSnapshot, SigmoidModel, StateRoster,
};
use crate::error::{Error, Result};
use crate::model::{BoltzmannMachine, StateVector};
use crate::sampler::{exact_sample, SamplerKind};
use crate::seed;
use crate::trainer::{init_model, resume, TargetSpec, TrainerConfig, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    /// Iterations trained on the first date, from a random start.
    pub initial_iterations: usize,
    /// Iterations added at each later date.
    pub update_iterations: usize,
    /// Trailing iterations per date whose samples are tallied.
    pub collect_iterations: usize,
    pub sigmoid: SigmoidModel,
    pub grid: NationalErrorGrid,
    /// Electoral votes needed to win; `None` means a majority of the
    /// whole roster.
    pub threshold: Option<u32>,
    /// Minimum days between modelled snapshots; `None` keeps every one.
    pub cadence_days: Option<u32>,
    pub seed: u64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            initial_iterations: 150,
            update_iterations: 25,
            collect_iterations: 10,
            sigmoid: SigmoidModel::default(),
            grid: NationalErrorGrid::default(),
            threshold: None,
            cadence_days: Some(14),
            seed: 0,
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_iterations == 0 {
            return Err(Error::InvalidParameter("initial iterations must be at least 1".into()));
        }
        if self.collect_iterations == 0 {
            return Err(Error::InvalidParameter("collect iterations must be at least 1".into()));
        }
        if self.collect_iterations > self.initial_iterations {
            return Err(Error::InvalidParameter(format!(
                "cannot collect {} iterations out of {} initial ones",
                self.collect_iterations, self.initial_iterations
            )));
        }
        Ok(())
    }
}

/// P(D win) per date and error model, plus the weighted average per date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub dates: Vec<NaiveDate>,
    pub shifts: Vec<f64>,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    /// `probabilities[d][m]` for date `d` and error model `m`.
    pub probabilities: Vec<Vec<f64>>,
    pub averages: Vec<f64>,
}

impl ForecastSeries {
    pub fn points(&self) -> impl Iterator<Item = ForecastPoint> + '_ {
        self.dates
            .iter()
            .zip(&self.probabilities)
            .flat_map(move |(&date, row)| {
                self.shifts
                    .iter()
                    .zip(&self.weights)
                    .zip(row)
                    .map(move |((&shift, &weight), &p_dem_win)| ForecastPoint {
                        date,
                        shift,
                        weight,
                        p_dem_win,
                    })
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastPoint {
    pub date: NaiveDate,
    pub shift: f64,
    pub weight: f64,
    pub p_dem_win: f64,
}

/// Everything one error model produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub shift: f64,
    pub weight: f64,
    pub seed: u64,
    /// P(D win) per date.
    pub probabilities: Vec<f64>,
    pub summed_errors: Vec<f64>,
    /// Target and model first moments over each date's collected iterations.
    pub windows: Vec<ErrorWindow>,
    /// Samples tallied on the last date.
    pub final_samples: Vec<StateVector>,
    pub final_outcomes: Vec<Outcome>,
    pub final_model: BoltzmannMachine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRun {
    pub series: ForecastSeries,
    pub models: Vec<ModelRun>,
    pub states: Vec<String>,
    pub threshold: u32,
}

/// Keeps the first snapshot and every later one at least `days` after the
/// previously kept one. Input must be sorted by date.
pub fn select_cadence(polls: &[PollingSnapshot], days: Option<u32>) -> Vec<PollingSnapshot> {
    let Some(days) = days else {
        return polls.to_vec();
    };
    let mut kept: Vec<PollingSnapshot> = Vec::new();
    for snap in polls {
        let due = kept
            .last()
            .is_none_or(|last| (snap.date - last.date).num_days() >= i64::from(days));
        if due {
            kept.push(snap.clone());
        }
    }
    kept
}

fn align_snapshot(snap: &PollingSnapshot, names: &[String]) -> Result<PollingSnapshot> {
    let shares = names
        .iter()
        .map(|name| {
            snap.states
                .iter()
                .position(|s| s == name)
                .map(|k| snap.shares[k])
                .ok_or_else(|| Error::Data(format!("no poll for {name} on {}", snap.date)))
        })
        .collect::<Result<Vec<_>>>()?;
    PollingSnapshot::new(snap.date, names.to_vec(), shares)
}

/// Runs the full national-error meta-model. Error models run in parallel,
/// each seeded from `(cfg.seed, model index)`.
pub fn run_forecast(
    polls: &[PollingSnapshot],
    history: &HistoricalResults,
    roster: &StateRoster,
    sampler: &SamplerKind,
    trainer: &TrainerConfig,
    cfg: &ForecastConfig,
) -> Result<ForecastRun> {
    cfg.validate()?;
    trainer.validate()?;
    sampler.validate()?;
    if polls.is_empty() {
        return Err(Error::Empty("polling snapshots"));
    }
    if polls.windows(2).any(|w| w[1].date <= w[0].date) {
        return Err(Error::Data(
            "polling snapshots must have strictly increasing dates".into(),
        ));
    }
    let names = roster.included_names();
    if names.is_empty() {
        return Err(Error::Empty("included states"));
    }
    let history = history.aligned(&names)?;
    let snapshots = select_cadence(polls, cfg.cadence_days)
        .iter()
        .map(|s| align_snapshot(s, &names))
        .collect::<Result<Vec<_>>>()?;
    let threshold = cfg.threshold.unwrap_or_else(|| roster.majority_threshold());
    let grid = national_error_grid(&cfg.grid)?;

    let models = grid
        .par_iter()
        .enumerate()
        .map(|(e, m)| {
            let job = ModelJob {
                snapshots: &snapshots,
                history: &history,
                roster,
                sampler,
                trainer: TrainerConfig {
                    seed: seed::derive(cfg.seed, &[e as u64]),
                    keep_snapshots: false,
                    ..*trainer
                },
                cfg,
                threshold,
            };
            job.run(m.shift, m.weight)
        })
        .collect::<Result<Vec<ModelRun>>>()?;

    let total: f64 = models.iter().map(|m| m.weight).sum();
    let weights: Vec<f64> = models.iter().map(|m| m.weight / total).collect();
    let probabilities: Vec<Vec<f64>> = (0..snapshots.len())
        .map(|d| models.iter().map(|m| m.probabilities[d]).collect())
        .collect();
    let averages = probabilities
        .iter()
        .map(|row| row.iter().zip(&weights).map(|(p, w)| p * w).sum())
        .collect();
    Ok(ForecastRun {
        series: ForecastSeries {
            dates: snapshots.iter().map(|s| s.date).collect(),
            shifts: models.iter().map(|m| m.shift).collect(),
            weights,
            probabilities,
            averages,
        },
        models,
        states: names,
        threshold,
    })
}

struct ModelJob<'a> {
    snapshots: &'a [PollingSnapshot],
    history: &'a HistoricalResults,
    roster: &'a StateRoster,
    sampler: &'a SamplerKind,
    trainer: TrainerConfig,
    cfg: &'a ForecastConfig,
    threshold: u32,
}

impl ModelJob<'_> {
    fn run(&self, shift: f64, weight: f64) -> Result<ModelRun> {
        let n = self.history.states.len();
        let mut model = init_model(n, &self.trainer)?;
        let mut trace = TrainingTrace::new();
        let mut targets: Option<TargetSpec> = None;
        let mut probabilities = Vec::with_capacity(self.snapshots.len());
        let mut windows = Vec::with_capacity(self.snapshots.len());
        let mut final_samples = Vec::new();
        let mut final_outcomes = Vec::new();

        for (d, snap) in self.snapshots.iter().enumerate() {
            let probs = apply_national_error(snap, shift).probabilities(&self.cfg.sigmoid)?;
            // Pair targets are fixed on the first date; later dates only
            // move the first moments.
            let spec = match &targets {
                None => build_targets(&probs, self.history)?,
                Some(t) => t.with_first(probs)?,
            };
            let iterations = if d == 0 {
                self.cfg.initial_iterations
            } else {
                self.cfg.update_iterations
            };
            let collect_from = trace.len() + iterations.saturating_sub(self.cfg.collect_iterations) + 1;
            let reads = self.trainer.reads_per_iteration;

            let mut samples: Vec<StateVector> = Vec::new();
            let mut window = ErrorWindow::new(spec.first().to_vec());
            let mut failure = None;
            resume(
                &mut model,
                &spec,
                self.sampler,
                &TrainerConfig {
                    iterations,
                    ..self.trainer
                },
                &mut trace,
                |view| {
                    if view.iteration < collect_from || failure.is_some() {
                        return;
                    }
                    window.push(view.moments.first().to_vec());
                    match view.batch {
                        Some(batch) => samples.extend(batch.iter().cloned()),
                        None => {
                            let s = seed::derive(self.trainer.seed, &[0xC011, view.iteration as u64]);
                            match exact_sample(view.model, reads, s) {
                                Ok(batch) => samples.extend(batch.into_samples()),
                                Err(e) => failure = Some(e),
                            }
                        }
                    }
                },
            )?;
            if let Some(e) = failure {
                return Err(e);
            }

            let outcomes = samples
                .iter()
                .map(|s| tally_election(s, self.roster, self.threshold).map(|(o, _)| o))
                .collect::<Result<Vec<_>>>()?;
            let wins = outcomes.iter().filter(|&&o| o == Outcome::DemWin).count();
            probabilities.push(wins as f64 / outcomes.len().max(1) as f64);
            windows.push(window);
            if d + 1 == self.snapshots.len() {
                final_samples = samples;
                final_outcomes = outcomes;
            }
            targets = Some(spec);
        }

        Ok(ModelRun {
            shift,
            weight,
            seed: self.trainer.seed,
            probabilities,
            summed_errors: trace.summed_errors(),
            windows,
            final_samples,
            final_outcomes,
            final_model: model,
        })
    }
}
