use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateEntry {
    pub name: String,
    pub electoral_votes: u32,
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateRoster {
    states: Vec<StateEntry>,
}

impl StateRoster {
    pub fn new(states: Vec<StateEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &states {
            if s.electoral_votes == 0 {
                return Err(Error::Data(format!("state {} has no electoral votes", s.name)));
            }
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Data(format!("state {} listed twice", s.name)));
            }
        }
        Ok(StateRoster { states })
    }

    pub fn states(&self) -> &[StateEntry] {
        &self.states
    }

    pub fn included(&self) -> impl Iterator<Item = &StateEntry> {
        self.states.iter().filter(|s| s.included)
    }

    pub fn included_names(&self) -> Vec<String> {
        self.included().map(|s| s.name.clone()).collect()
    }

    pub fn included_votes(&self) -> Vec<u32> {
        self.included().map(|s| s.electoral_votes).collect()
    }

    pub fn total_votes(&self) -> u32 {
        self.states.iter().map(|s| s.electoral_votes).sum()
    }

    /// Strict majority of all electoral votes, included or not.
    pub fn majority_threshold(&self) -> u32 {
        self.total_votes() / 2 + 1
    }

    pub fn get(&self, name: &str) -> Option<&StateEntry> {
        self.states.iter().find(|s| s.name == name)
    }

    /// Same roster with the named states excluded.
    pub fn excluding(&self, names: &[&str]) -> StateRoster {
        StateRoster {
            states: self
                .states
                .iter()
                .map(|s| StateEntry {
                    included: s.included && !names.contains(&s.name.as_str()),
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Electoral votes for the 2012 and 2016 elections.
const ELECTORAL_VOTES: [(&str, u32); 51] = [
    ("Alabama", 9),
    ("Alaska", 3),
    ("Arizona", 11),
    ("Arkansas", 6),
    ("California", 55),
    ("Colorado", 9),
    ("Connecticut", 7),
    ("Delaware", 3),
    ("District of Columbia", 3),
    ("Florida", 29),
    ("Georgia", 16),
    ("Hawaii", 4),
    ("Idaho", 4),
    ("Illinois", 20),
    ("Indiana", 11),
    ("Iowa", 6),
    ("Kansas", 6),
    ("Kentucky", 8),
    ("Louisiana", 8),
    ("Maine", 4),
    ("Maryland", 10),
    ("Massachusetts", 11),
    ("Michigan", 16),
    ("Minnesota", 10),
    ("Mississippi", 6),
    ("Missouri", 10),
    ("Montana", 3),
    ("Nebraska", 5),
    ("Nevada", 6),
    ("New Hampshire", 4),
    ("New Jersey", 14),
    ("New Mexico", 5),
    ("New York", 29),
    ("North Carolina", 15),
    ("North Dakota", 3),
    ("Ohio", 18),
    ("Oklahoma", 7),
    ("Oregon", 7),
    ("Pennsylvania", 20),
    ("Rhode Island", 4),
    ("South Carolina", 9),
    ("South Dakota", 3),
    ("Tennessee", 11),
    ("Texas", 38),
    ("Utah", 6),
    ("Vermont", 3),
    ("Virginia", 13),
    ("Washington", 12),
    ("West Virginia", 5),
    ("Wisconsin", 10),
    ("Wyoming", 3),
];

/// All 50 states plus DC, every one included. Maine and Nebraska are
/// treated as winner-take-all.
pub fn bundled_roster() -> StateRoster {
    StateRoster {
        states: ELECTORAL_VOTES
            .iter()
            .map(|&(name, ev)| StateEntry {
                name: name.to_string(),
                electoral_votes: ev,
                included: true,
            })
            .collect(),
    }
}

/// The 49-unit roster that fits the 1,152-qubit device: DC and Maryland are
/// left out.
pub fn device_roster() -> StateRoster {
    bundled_roster().excluding(&["District of Columbia", "Maryland"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_totals() {
        let r = bundled_roster();
        assert_eq!(r.states().len(), 51);
        assert_eq!(r.total_votes(), 538);
        assert_eq!(r.majority_threshold(), 270);
        let p = device_roster();
        assert_eq!(p.included().count(), 49);
        assert_eq!(p.majority_threshold(), 270);
        assert!(!p.get("Maryland").unwrap().included);
    }

    #[test]
    fn roster_validation() {
        let e = |n: &str, v| StateEntry {
            name: n.into(),
            electoral_votes: v,
            included: true,
        };
        assert!(StateRoster::new(vec![e("A", 3), e("A", 4)]).is_err());
        assert!(StateRoster::new(vec![e("A", 0)]).is_err());
        assert!(StateRoster::new(vec![e("A", 3), e("B", 4)]).is_ok());
    }
}
