//! Minute-stamped match data.
//!
//! A [`MatchRecord`] holds the final outcome, the two pre-match team
//! strengths and a per-minute count tensor `counts[kind][minute][side]`
//! covering minutes 1..=90. Stoppage-time events are folded onto minute 45
//! or 90 when parsed.

mod io;
mod split;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{fold_stoppage_minute, parse_dataset, read_dataset, write_events_csv, write_matches_csv};
pub use split::{leave_team_out, train_test_split};
pub use synth::{synthesize_dataset, GroundTruth, SynthesisConfig};

/// Regulation minutes per match.
pub const MINUTES: usize = 90;

/// Minutes above this are accepted but reported as suspicious.
pub const SUSPICIOUS_MINUTE: i64 = 105;

/// In-match event kinds, in their fixed model order.
///
/// The 1-based [`EventKind::number`] is the event index used throughout
/// the design matrix and prior layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Goal,
    ShotOn,
    ShotOff,
    RedCard,
    YellowCard,
    Corner,
    Cross,
    Foul,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::Goal,
        EventKind::ShotOn,
        EventKind::ShotOff,
        EventKind::RedCard,
        EventKind::YellowCard,
        EventKind::Corner,
        EventKind::Cross,
        EventKind::Foul,
    ];

    pub const COUNT: usize = 8;

    /// 0-based position in [`EventKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// 1-based event number k.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EventKind::Goal => "goal",
            EventKind::ShotOn => "shot_on",
            EventKind::ShotOff => "shot_off",
            EventKind::RedCard => "red_card",
            EventKind::YellowCard => "yellow_card",
            EventKind::Corner => "corner",
            EventKind::Cross => "cross",
            EventKind::Foul => "foul",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownEvent(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "H")]
    Home,
    #[serde(rename = "A")]
    Away,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Home, Side::Away];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Side::Home => "H",
            Side::Away => "A",
        }
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Side::Home),
            "A" => Ok(Side::Away),
            other => Err(Error::InvalidArgument(format!("side must be H or A, got `{other}`"))),
        }
    }
}

/// Final result from the home team's perspective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Loss,
    Draw,
    Win,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Loss, Outcome::Draw, Outcome::Win];

    /// Coded value in {-1, 0, 1}.
    pub fn value(self) -> i8 {
        match self {
            Outcome::Loss => -1,
            Outcome::Draw => 0,
            Outcome::Win => 1,
        }
    }

    /// 0-based ordinal category (loss = 0, draw = 1, win = 2).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Outcome::Loss),
            0 => Ok(Outcome::Draw),
            1 => Ok(Outcome::Win),
            other => Err(Error::InvalidOutcome(other)),
        }
    }

    /// Category of a latent value under cutoffs δ₁ < δ₂; the draw interval
    /// is closed.
    pub fn classify(latent: f64, delta: (f64, f64)) -> Self {
        if latent < delta.0 {
            Outcome::Loss
        } else if latent <= delta.1 {
            Outcome::Draw
        } else {
            Outcome::Win
        }
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Outcome::from_value(v).map_err(serde::de::Error::custom)
    }
}

/// Per-minute event counts, `kinds × 90 × 2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventCounts {
    kinds: usize,
    data: Vec<u32>,
}

impl EventCounts {
    pub fn zeros(kinds: usize) -> Self {
        Self { kinds, data: vec![0; kinds * MINUTES * 2] }
    }

    pub fn kinds(&self) -> usize {
        self.kinds
    }

    fn offset(&self, kind: usize, minute: usize, side: Side) -> usize {
        assert!(kind < self.kinds, "event kind {kind} out of range");
        assert!((1..=MINUTES).contains(&minute), "minute {minute} out of range");
        (kind * MINUTES + (minute - 1)) * 2 + side.index()
    }

    /// Count of events of 0-based `kind` in `minute` (1-based) by `side`.
    pub fn get(&self, kind: usize, minute: usize, side: Side) -> u32 {
        self.data[self.offset(kind, minute, side)]
    }

    pub fn add(&mut self, kind: usize, minute: usize, side: Side, n: u32) {
        let i = self.offset(kind, minute, side);
        self.data[i] += n;
    }

    /// Total events of `kind` by `side` over the whole match.
    pub fn total(&self, kind: usize, side: Side) -> u32 {
        (1..=MINUTES).map(|m| self.get(kind, m, side)).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchRecord {
    pub match_id: String,
    pub outcome: Outcome,
    pub home_strength: f64,
    pub away_strength: f64,
    pub counts: EventCounts,
    pub home_team: Option<String>,
    pub away_team: Option<String>,
    pub season: Option<String>,
    pub date: Option<String>,
}

impl MatchRecord {
    pub fn new(match_id: impl Into<String>, outcome: Outcome, home: f64, away: f64, kinds: usize) -> Self {
        Self {
            match_id: match_id.into(),
            outcome,
            home_strength: home,
            away_strength: away,
            counts: EventCounts::zeros(kinds),
            home_team: None,
            away_team: None,
            season: None,
            date: None,
        }
    }

    pub fn involves_team(&self, team: &str) -> bool {
        self.home_team.as_deref() == Some(team) || self.away_team.as_deref() == Some(team)
    }
}

/// An ordered, non-empty collection of matches sharing one event-kind count.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    kinds: usize,
    matches: Vec<MatchRecord>,
}

impl Dataset {
    pub fn new(kinds: usize, matches: Vec<MatchRecord>) -> Result<Self> {
        if matches.is_empty() {
            return Err(Error::InvalidArgument("dataset has no matches".into()));
        }
        if kinds == 0 || kinds > EventKind::COUNT {
            return Err(Error::InvalidArgument(format!("event kind count {kinds} outside 1..=8")));
        }
        let mut seen = HashSet::with_capacity(matches.len());
        for m in &matches {
            if !seen.insert(m.match_id.as_str()) {
                return Err(Error::DuplicateMatch(m.match_id.clone()));
            }
            if m.counts.kinds() != kinds {
                return Err(Error::Dimension { expected: kinds, got: m.counts.kinds() });
            }
            if !m.home_strength.is_finite() || !m.away_strength.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "match `{}` has a non-finite strength",
                    m.match_id
                )));
            }
        }
        Ok(Self { kinds, matches })
    }

    pub fn kinds(&self) -> usize {
        self.kinds
    }

    pub fn n(&self) -> usize {
        self.matches.len()
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        self.matches.iter().map(|m| m.outcome).collect()
    }

    /// Sub-dataset of the given positions, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Self::new(self.kinds, idx.iter().map(|&i| self.matches[i].clone()).collect())
    }

    /// Sub-dataset of the given match ids, in the given order.
    pub fn select_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self> {
        let pos: std::collections::HashMap<&str, usize> =
            self.matches.iter().enumerate().map(|(i, m)| (m.match_id.as_str(), i)).collect();
        let idx = ids
            .iter()
            .map(|id| pos.get(id.as_ref()).copied().ok_or_else(|| Error::UnknownMatch(id.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        self.subset(&idx)
    }
}
