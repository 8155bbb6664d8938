use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{HistoricalResults, PollingSnapshot, StateEntry, StateRoster};
use crate::error::{Error, Result};
use crate::seed;

/// A small made-up country for tests and demos.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCountry {
    pub roster: StateRoster,
    /// Biweekly snapshots, oldest first.
    pub polls: Vec<PollingSnapshot>,
    pub history: HistoricalResults,
}

const ELECTIONS: usize = 11;
const SNAPSHOTS: usize = 11;

/// Each state gets a partisan lean (margin points). Past winners follow the
/// lean plus a national swing and state noise, which gives neighbouring
/// leans correlated histories. Polls follow the lean plus a slow drift.
pub fn synth_country(n_states: usize, seed_value: u64) -> Result<SyntheticCountry> {
    if n_states == 0 {
        return Err(Error::InvalidParameter(
            "synthetic country needs at least one state".into(),
        ));
    }
    let mut rng = seed::rng(seed_value);
    let names: Vec<String> = (1..=n_states).map(|s| format!("S{s:02}")).collect();
    let roster = StateRoster::new(
        names
            .iter()
            .map(|name| StateEntry {
                name: name.clone(),
                electoral_votes: rng.gen_range(3..=55),
                included: true,
            })
            .collect(),
    )?;

    let lean_dist = Normal::new(0.0, 8.0).expect("valid normal");
    let swing_dist = Normal::new(0.0, 5.0).expect("valid normal");
    let noise_dist = Normal::new(0.0, 3.0).expect("valid normal");
    let drift_dist = Normal::new(0.0, 0.8).expect("valid normal");
    let leans: Vec<f64> = (0..n_states).map(|_| lean_dist.sample(&mut rng)).collect();

    let winners = (0..ELECTIONS)
        .map(|_| {
            let swing = swing_dist.sample(&mut rng);
            leans
                .iter()
                .map(|lean| u8::from(lean + swing + noise_dist.sample(&mut rng) > 0.0))
                .collect()
        })
        .collect();
    let history = HistoricalResults::new(
        (0..ELECTIONS as i32).map(|n| 1968 + 4 * n).collect(),
        names.clone(),
        winners,
    )?;

    let undecided: Vec<f64> = (0..n_states).map(|_| rng.gen_range(2.0..10.0)).collect();
    let mut margins = leans.clone();
    let start = NaiveDate::from_ymd_opt(2016, 6, 8).expect("valid date");
    let mut polls = Vec::with_capacity(SNAPSHOTS);
    for k in 0..SNAPSHOTS {
        let national = drift_dist.sample(&mut rng);
        for m in margins.iter_mut() {
            *m += national + 0.5 * drift_dist.sample(&mut rng);
        }
        let shares = margins
            .iter()
            .zip(&undecided)
            .map(|(&m, &u)| {
                let decided = 100.0 - u;
                let dem = ((decided + m) / 2.0).clamp(0.0, decided);
                (dem, decided - dem)
            })
            .collect();
        polls.push(PollingSnapshot::new(
            start + Duration::days(14 * k as i64),
            names.clone(),
            shares,
        )?);
    }
    Ok(SyntheticCountry { roster, polls, history })
}
