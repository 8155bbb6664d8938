//! CSV and JSON import/export.
//!
//! Input schemas:
//!
//! ```text
//! roster:  state,electoral_votes,included
//! polls:   date,state,dem_share,rep_share
//! history: year,state,winner          (winner is D or R)
//! ```
//!
//! Exports are headed CSV with shortest round-trip float formatting.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::election::{
    ForecastSeries, Histogram, HistoricalResults, PollingSnapshot, StateEntry, StateRoster, SyntheticCountry,
};
use crate::error::{Error, Result};
use crate::model::MomentStatistics;
use crate::trainer::{ExperimentReport, TargetSpec, TrainingTrace};

/// Validated election inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Datasets {
    pub roster: StateRoster,
    pub polls: Vec<PollingSnapshot>,
    pub history: HistoricalResults,
}

struct Rows {
    path: String,
    reader: csv::Reader<Box<dyn Read>>,
}

impl Rows {
    fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Ok(Self::from_reader(path.display().to_string(), Box::new(file)))
    }

    fn from_reader(path: String, reader: Box<dyn Read>) -> Self {
        Rows {
            path,
            reader: csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader),
        }
    }

    fn expect_header(&mut self, expected: &[&str]) -> Result<()> {
        let header = self.reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                path: self.path.clone(),
                line: 1,
                message: format!("expected header {}", expected.join(",")),
            });
        }
        Ok(())
    }

    /// Calls `row` with each record and its 1-based line number.
    fn each(
        &mut self,
        mut row: impl FnMut(&csv::StringRecord, usize) -> std::result::Result<(), String>,
    ) -> Result<()> {
        for record in self.reader.records() {
            let record = record.map_err(|e| Error::Parse {
                path: self.path.clone(),
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            row(&record, line).map_err(|message| Error::Parse {
                path: self.path.clone(),
                line,
                message,
            })?;
        }
        Ok(())
    }
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, k: usize, name: &str) -> std::result::Result<T, String> {
    let raw = record.get(k).ok_or_else(|| format!("missing {name}"))?;
    raw.parse().map_err(|_| format!("invalid {name} {raw:?}"))
}

fn parse_flag(raw: &str) -> std::result::Result<bool, String> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(format!("invalid included flag {raw:?}")),
    }
}

fn read_roster(mut rows: Rows) -> Result<StateRoster> {
    rows.expect_header(&["state", "electoral_votes", "included"])?;
    let mut states = Vec::new();
    let mut seen = HashSet::new();
    rows.each(|r, _| {
        let name: String = field(r, 0, "state")?;
        let votes: u32 = field(r, 1, "electoral_votes")?;
        if votes == 0 {
            return Err(format!("{name} has zero electoral votes"));
        }
        if !seen.insert(name.clone()) {
            return Err(format!("duplicate state {name}"));
        }
        let included = parse_flag(r.get(2).unwrap_or(""))?;
        states.push(StateEntry {
            name,
            electoral_votes: votes,
            included,
        });
        Ok(())
    })?;
    if states.is_empty() {
        return Err(Error::Empty("roster"));
    }
    StateRoster::new(states)
}

pub fn load_roster(path: &Path) -> Result<StateRoster> {
    read_roster(Rows::open(path)?)
}

fn read_polls(mut rows: Rows, roster: &StateRoster) -> Result<Vec<PollingSnapshot>> {
    rows.expect_header(&["date", "state", "dem_share", "rep_share"])?;
    let known: HashSet<&str> = roster.states().iter().map(|s| s.name.as_str()).collect();
    let mut by_date: BTreeMap<NaiveDate, HashMap<String, (f64, f64)>> = BTreeMap::new();
    rows.each(|r, _| {
        let raw_date = r.get(0).unwrap_or("");
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| format!("invalid date {raw_date:?}"))?;
        let state: String = field(r, 1, "state")?;
        if !known.contains(state.as_str()) {
            return Err(format!("unknown state {state}"));
        }
        let dem: f64 = field(r, 2, "dem_share")?;
        let rep: f64 = field(r, 3, "rep_share")?;
        for (name, v) in [("dem_share", dem), ("rep_share", rep)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(format!("{name} {v} outside [0, 100]"));
            }
        }
        if by_date
            .entry(date)
            .or_default()
            .insert(state.clone(), (dem, rep))
            .is_some()
        {
            return Err(format!("duplicate poll for {state} on {date}"));
        }
        Ok(())
    })?;
    if by_date.is_empty() {
        return Err(Error::Empty("polls"));
    }
    let names = roster.included_names();
    by_date
        .into_iter()
        .map(|(date, shares)| {
            let missing: Vec<&str> = names
                .iter()
                .filter(|n| !shares.contains_key(*n))
                .map(|n| n.as_str())
                .collect();
            if !missing.is_empty() {
                return Err(Error::Data(format!("polls on {date} missing {}", missing.join(", "))));
            }
            let aligned = names.iter().map(|n| shares[n]).collect();
            PollingSnapshot::new(date, names.clone(), aligned)
        })
        .collect()
}

/// Polls grouped into one snapshot per date, aligned with the roster's
/// included states.
pub fn load_polls(path: &Path, roster: &StateRoster) -> Result<Vec<PollingSnapshot>> {
    read_polls(Rows::open(path)?, roster)
}

fn read_history(mut rows: Rows, roster: &StateRoster) -> Result<HistoricalResults> {
    rows.expect_header(&["year", "state", "winner"])?;
    let known: HashSet<&str> = roster.states().iter().map(|s| s.name.as_str()).collect();
    let mut by_year: BTreeMap<i32, HashMap<String, u8>> = BTreeMap::new();
    rows.each(|r, _| {
        let year: i32 = field(r, 0, "year")?;
        let state: String = field(r, 1, "state")?;
        if !known.contains(state.as_str()) {
            return Err(format!("unknown state {state}"));
        }
        let winner = match r.get(2).unwrap_or("") {
            "D" | "d" => 1,
            "R" | "r" => 0,
            other => return Err(format!("winner must be D or R, got {other:?}")),
        };
        if by_year.entry(year).or_default().insert(state.clone(), winner).is_some() {
            return Err(format!("duplicate result for {state} in {year}"));
        }
        Ok(())
    })?;
    if by_year.is_empty() {
        return Err(Error::Empty("history"));
    }
    let names = roster.included_names();
    let missing: Vec<String> = by_year
        .iter()
        .flat_map(|(year, results)| {
            names
                .iter()
                .filter(|n| !results.contains_key(*n))
                .map(move |n| format!("({year}, {n})"))
        })
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!("history missing {}", missing.join(", "))));
    }
    let years: Vec<i32> = by_year.keys().copied().collect();
    let winners = by_year
        .values()
        .map(|results| names.iter().map(|n| results[n]).collect())
        .collect();
    HistoricalResults::new(years, names, winners)
}

/// Past winners, oldest election first, aligned with the roster's included
/// states. Every included state must appear in every year.
pub fn load_history(path: &Path, roster: &StateRoster) -> Result<HistoricalResults> {
    read_history(Rows::open(path)?, roster)
}

pub fn load_datasets(roster: &Path, polls: &Path, history: &Path) -> Result<Datasets> {
    let roster = load_roster(roster)?;
    let polls = load_polls(polls, &roster)?;
    let history = load_history(history, &roster)?;
    Ok(Datasets { roster, polls, history })
}

/// Targets as a JSON object `{"first": [...], "second": [[...], ...]}`.
pub fn load_targets(path: &Path) -> Result<TargetSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let moments: MomentStatistics = serde_json::from_str(&text)?;
    TargetSpec::new(moments)
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_roster<W: Write>(out: W, roster: &StateRoster) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "electoral_votes", "included"])?;
    for s in roster.states() {
        w.write_record([s.name.as_str(), &s.electoral_votes.to_string(), flag(s.included)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_polls<W: Write>(out: W, polls: &[PollingSnapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "state", "dem_share", "rep_share"])?;
    for snap in polls {
        let date = snap.date.to_string();
        for (name, (d, r)) in snap.states.iter().zip(&snap.shares) {
            w.write_record([date.as_str(), name, &d.to_string(), &r.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_history<W: Write>(out: W, history: &HistoricalResults) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["year", "state", "winner"])?;
    for (year, row) in history.years.iter().zip(&history.winners) {
        let year = year.to_string();
        for (name, &win) in history.states.iter().zip(row) {
            w.write_record([year.as_str(), name, if win == 1 { "D" } else { "R" }])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `roster.csv`, `polls.csv` and `history.csv` into `dir`.
pub fn write_country(dir: &Path, country: &SyntheticCountry) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_roster(File::create(dir.join("roster.csv"))?, &country.roster)?;
    write_polls(File::create(dir.join("polls.csv"))?, &country.polls)?;
    write_history(File::create(dir.join("history.csv"))?, &country.history)?;
    Ok(())
}

/// One row per date and error model, then an `average` row per date.
pub fn write_forecast<W: Write>(out: W, series: &ForecastSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["date", "shift", "weight", "p_dem_win"])?;
    for (d, date) in series.dates.iter().enumerate() {
        let date = date.to_string();
        for ((shift, weight), p) in series.shifts.iter().zip(&series.weights).zip(&series.probabilities[d]) {
            w.write_record([date.as_str(), &shift.to_string(), &weight.to_string(), &p.to_string()])?;
        }
        w.write_record([date.as_str(), "average", "1", &series.averages[d].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tipping_points<W: Write>(out: W, states: &[String], correlations: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "abs_pearson_r"])?;
    for (s, r) in states.iter().zip(correlations) {
        w.write_record([s.as_str(), &r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per state and bin, with `underflow` and `overflow`
/// rows using open edges.
pub fn write_state_errors<W: Write>(out: W, states: &[String], hists: &[Histogram]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["state", "bin_lo", "bin_hi", "count", "mean", "min", "max"])?;
    for (s, h) in states.iter().zip(hists) {
        let (mean, min, max) = (h.mean().to_string(), h.min.to_string(), h.max.to_string());
        let mut row = |lo: String, hi: String, count: u64| {
            w.write_record([s.as_str(), &lo, &hi, &count.to_string(), &mean, &min, &max])
        };
        row("-inf".into(), h.spec.lo.to_string(), h.underflow)?;
        for (k, &c) in h.counts.iter().enumerate() {
            row(h.edge(k).to_string(), h.edge(k + 1).to_string(), c)?;
        }
        row(h.spec.hi.to_string(), "inf".into(), h.overflow)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-iteration summed error followed by every model moment, labelled
/// `s0..` and `s0s1..`.
pub fn write_trace<W: Write>(out: W, trace: &TrainingTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = trace.records().first().map_or(0, |r| r.moments.n_units());
    let mut header = vec!["iteration".to_string(), "summed_error".to_string()];
    header.extend(crate::trainer::moment_labels(n));
    w.write_record(&header)?;
    for r in trace.records() {
        let mut row = vec![r.iteration.to_string(), r.summed_error.to_string()];
        row.extend(r.moments.flattened().iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Single-row summary with the windowed RMSE mean and std.
pub fn write_experiment_report<W: Write>(out: W, report: &ExperimentReport, window: (usize, usize)) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "nodes",
        "chain_multiplier",
        "window_start",
        "window_end",
        "rmse_mean",
        "rmse_std",
    ])?;
    w.write_record([
        report.node_count.to_string(),
        report.chain_multiplier.to_string(),
        window.0.to_string(),
        window.1.to_string(),
        report.rmse_mean.to_string(),
        report.rmse_std.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Per-iteration model moments next to their targets.
pub fn write_experiment_series<W: Write>(out: W, report: &ExperimentReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "moment", "model", "target"])?;
    let labels = report.moment_labels();
    let targets = report.targets.moments().flattened();
    for r in report.trace.records() {
        let iteration = r.iteration.to_string();
        for ((label, m), t) in labels.iter().zip(r.moments.flattened()).zip(&targets) {
            w.write_record([iteration.as_str(), label, &m.to_string(), &t.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::election::{bundled_roster, synth_country};

    fn rows(text: &str) -> Rows {
        Rows::from_reader(
            "test.csv".into(),
            Box::new(std::io::Cursor::new(text.as_bytes().to_vec())),
        )
    }

    fn bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn bundled_roster_round_trip() {
        let text = bytes(|b| write_roster(b, &bundled_roster()));
        let roster = read_roster(rows(&text)).unwrap();
        assert_eq!(roster.total_votes(), 538);
        assert_eq!(roster, bundled_roster());
    }

    #[test]
    fn poll_bounds_name_the_line() {
        let roster = read_roster(rows("state,electoral_votes,included\nA,3,1\nB,4,1\n")).unwrap();
        let polls = "date,state,dem_share,rep_share\n2016-06-08,A,45,50\n2016-06-08,B,101,0\n";
        match read_polls(rows(polls), &roster) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("dem_share"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let unknown = "date,state,dem_share,rep_share\n2016-06-08,Z,45,50\n";
        assert!(matches!(
            read_polls(rows(unknown), &roster),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn history_gaps_are_listed() {
        let roster = read_roster(rows("state,electoral_votes,included\nA,3,1\nB,4,1\n")).unwrap();
        let history = "year,state,winner\n2008,A,D\n2008,B,R\n2012,A,D\n";
        let err = read_history(rows(history), &roster).unwrap_err().to_string();
        assert!(err.contains("(2012, B)"), "{err}");
        let bad = "year,state,winner\n2008,A,X\n";
        assert!(matches!(
            read_history(rows(bad), &roster),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn header_is_checked() {
        assert!(matches!(
            read_roster(rows("name,votes\nA,3\n")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn synthetic_country_round_trip() {
        let c = synth_country(4, 11).unwrap();
        let roster = read_roster(rows(&bytes(|b| write_roster(b, &c.roster)))).unwrap();
        let polls = read_polls(rows(&bytes(|b| write_polls(b, &c.polls))), &roster).unwrap();
        let history = read_history(rows(&bytes(|b| write_history(b, &c.history))), &roster).unwrap();
        assert_eq!(roster, c.roster);
        assert_eq!(polls, c.polls);
        assert_eq!(history, c.history);
    }

    #[test]
    fn excluded_states_need_no_data() {
        let roster = read_roster(rows("state,electoral_votes,included\nA,3,1\nB,4,0\n")).unwrap();
        let polls = read_polls(rows("date,state,dem_share,rep_share\n2016-06-08,A,45,50\n"), &roster).unwrap();
        assert_eq!(polls[0].states, vec!["A".to_string()]);
    }
}
