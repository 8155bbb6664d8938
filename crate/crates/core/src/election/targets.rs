use serde::{Deserialize, Serialize};

use super::HistoricalResults;
use crate::error::{Error, Result};
use crate::model::MomentStatistics;
use crate::trainer::TargetSpec;

/// Logistic map from vote-share margin to win probability; `temperature`
/// is in percentage points per logit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidModel {
    pub temperature: f64,
}

impl Default for SigmoidModel {
    fn default() -> Self {
        SigmoidModel { temperature: 3.0 }
    }
}

pub fn vote_share_to_probability(dem_share: f64, rep_share: f64, sig: &SigmoidModel) -> Result<f64> {
    if !(0.0..=100.0).contains(&dem_share) || !(0.0..=100.0).contains(&rep_share) {
        return Err(Error::InvalidParameter(format!(
            "vote shares ({dem_share}, {rep_share}) outside [0, 100]"
        )));
    }
    if !(sig.temperature > 0.0 && sig.temperature.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigmoid temperature must be positive, got {}",
            sig.temperature
        )));
    }
    Ok(1.0 / (1.0 + (-(dem_share - rep_share) / sig.temperature).exp()))
}

/// Recency-weighted agreement between two states: election `n` (1 = oldest)
/// counts with weight `n` when both states picked the same winner.
pub fn raw_pair_correlation(history: &HistoricalResults, i: usize, j: usize) -> Result<f64> {
    let n_states = history.states.len();
    if i >= n_states || j >= n_states {
        return Err(Error::Data(format!("state index {} not in history", i.max(j))));
    }
    let (mut agree, mut total) = (0u64, 0u64);
    for (k, row) in history.winners.iter().enumerate() {
        let weight = k as u64 + 1;
        total += weight;
        if row[i] == row[j] {
            agree += weight;
        }
    }
    Ok(agree as f64 / total as f64)
}

/// First moments are the state probabilities; each second moment is the raw
/// historical agreement scaled by the smaller of the two probabilities.
pub fn build_targets(probs: &[f64], history: &HistoricalResults) -> Result<TargetSpec> {
    if probs.len() != history.states.len() {
        return Err(Error::Dimension {
            expected: history.states.len(),
            actual: probs.len(),
        });
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    let n = probs.len();
    let mut raw = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            raw[i * n + j] = raw_pair_correlation(history, i, j)?;
        }
    }
    TargetSpec::new(MomentStatistics::from_pair_fn(probs.to_vec(), |i, j| {
        raw[i * n + j] * probs[i].min(probs[j])
    }))
}
