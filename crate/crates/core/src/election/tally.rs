use serde::{Deserialize, Serialize};

use super::StateRoster;
use crate::error::{Error, Result};
use crate::model::{state_probabilities, BoltzmannMachine, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    DemWin,
    /// Losses and exact ties.
    Other,
}

/// Tallies one simulated election over the roster's included states. The
/// Democratic candidate wins with at least `threshold` electoral votes.
pub fn tally_election(sample: &StateVector, roster: &StateRoster, threshold: u32) -> Result<(Outcome, u32)> {
    let votes = roster.included_votes();
    if votes.len() != sample.len() {
        return Err(Error::Dimension {
            expected: votes.len(),
            actual: sample.len(),
        });
    }
    let dem: u32 = votes
        .iter()
        .zip(sample.bits())
        .filter(|(_, &b)| b == 1)
        .map(|(v, _)| v)
        .sum();
    let outcome = if dem >= threshold {
        Outcome::DemWin
    } else {
        Outcome::Other
    };
    Ok((outcome, dem))
}

/// P(D win) by summing the exact probability of every state in which the
/// Democratic candidate reaches `threshold`.
pub fn enumerate_win_probability(bm: &BoltzmannMachine, roster: &StateRoster, threshold: u32) -> Result<f64> {
    let n = bm.n_units();
    let probs = state_probabilities(bm)?;
    let mut total = 0.0;
    for (mask, p) in probs.iter().enumerate() {
        let (outcome, _) = tally_election(&StateVector::from_mask(mask as u64, n), roster, threshold)?;
        if outcome == Outcome::DemWin {
            total += p;
        }
    }
    Ok(total)
}
