//! Electoral-college forecasting on top of trained Boltzmann machines.
//!
//! Every unit is a state (1 = Democratic win, 0 = Republican win). Polls
//! set the first moments through a logistic curve in the vote-share margin;
//! historical agreement between states sets the second moments. A family of
//! models, each trained on polls shifted by a different national error, is
//! averaged with Student-t weights.

mod analysis;
mod forecast;
mod national;
mod roster;
mod synth;
mod tally;
mod targets;

pub use analysis::{state_error_distributions, tipping_point_correlations, ErrorWindow, Histogram, HistogramSpec};
pub use forecast::{
    run_forecast, select_cadence, ForecastConfig, ForecastPoint, ForecastRun, ForecastSeries, ModelRun,
};
pub use national::{apply_national_error, national_error_grid, NationalErrorGrid, NationalErrorModel};
pub use roster::{bundled_roster, device_roster, StateEntry, StateRoster};
pub use synth::{synth_country, SyntheticCountry};
pub use tally::{enumerate_win_probability, tally_election, Outcome};
pub use targets::{build_targets, raw_pair_correlation, vote_share_to_probability, SigmoidModel};

use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Projected two-party vote shares (percent) on one date, aligned with the
/// included states of a roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PollingSnapshot {
    pub date: NaiveDate,
    pub states: Vec<String>,
    /// `(dem_share, rep_share)` per state.
    pub shares: Vec<(f64, f64)>,
}

impl PollingSnapshot {
    pub fn new(date: NaiveDate, states: Vec<String>, shares: Vec<(f64, f64)>) -> Result<Self> {
        if states.len() != shares.len() {
            return Err(Error::Dimension {
                expected: states.len(),
                actual: shares.len(),
            });
        }
        for (name, &(d, r)) in states.iter().zip(&shares) {
            if !(0.0..=100.0).contains(&d) || !(0.0..=100.0).contains(&r) {
                return Err(Error::Data(format!(
                    "{date} {name}: shares ({d}, {r}) outside [0, 100]"
                )));
            }
        }
        Ok(PollingSnapshot { date, states, shares })
    }

    /// Per-state win probabilities for the Democratic candidate.
    pub fn probabilities(&self, sigmoid: &SigmoidModel) -> Result<Vec<f64>> {
        self.shares
            .iter()
            .map(|&(d, r)| vote_share_to_probability(d, r, sigmoid))
            .collect()
    }
}

/// State winners of past elections, oldest first. `winners[n][s]` is 1 when
/// state `s` went Democratic in election `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalResults {
    pub years: Vec<i32>,
    pub states: Vec<String>,
    pub winners: Vec<Vec<u8>>,
}

impl HistoricalResults {
    pub fn new(years: Vec<i32>, states: Vec<String>, winners: Vec<Vec<u8>>) -> Result<Self> {
        if years.is_empty() {
            return Err(Error::Empty("historical elections"));
        }
        if winners.len() != years.len() {
            return Err(Error::Dimension {
                expected: years.len(),
                actual: winners.len(),
            });
        }
        for (year, row) in years.iter().zip(&winners) {
            if row.len() != states.len() {
                return Err(Error::Data(format!(
                    "election {year} has {} results for {} states",
                    row.len(),
                    states.len()
                )));
            }
            if row.iter().any(|&w| w > 1) {
                return Err(Error::Data(format!("election {year} has a winner code other than 0/1")));
            }
        }
        Ok(HistoricalResults { years, states, winners })
    }

    pub fn n_elections(&self) -> usize {
        self.years.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Restricts and reorders the state columns to `names`.
    pub fn aligned(&self, names: &[String]) -> Result<HistoricalResults> {
        let index: HashMap<&str, usize> = self.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let cols = names
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::Data(format!("no history for state {n}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(HistoricalResults {
            years: self.years.clone(),
            states: names.to_vec(),
            winners: self
                .winners
                .iter()
                .map(|row| cols.iter().map(|&c| row[c]).collect())
                .collect(),
        })
    }

    /// Swaps every D and R label.
    pub fn flipped(&self) -> HistoricalResults {
        HistoricalResults {
            winners: self
                .winners
                .iter()
                .map(|row| row.iter().map(|&w| 1 - w).collect())
                .collect(),
            ..self.clone()
        }
    }
}
