use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use super::{Dataset, EventKind, MatchRecord, Outcome, Side, MINUTES, SUSPICIOUS_MINUTE};
use crate::error::{Error, Result};

pub const MATCHES_HEADER: [&str; 8] =
    ["match_id", "home_team", "away_team", "home_strength", "away_strength", "outcome", "season", "date"];
pub const EVENTS_HEADER: [&str; 5] = ["match_id", "half", "minute", "side", "event"];

/// Map an absolute match minute onto 1..=90, folding stoppage time onto the
/// last minute of its half.
pub fn fold_stoppage_minute(minute: i64, half: i64) -> Result<usize> {
    let bad = || Error::InvalidMinute { minute, half };
    if minute < 1 {
        return Err(bad());
    }
    match half {
        1 => Ok(minute.min(45) as usize),
        2 if minute >= 46 => Ok(minute.min(MINUTES as i64) as usize),
        _ => Err(bad()),
    }
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &StringRecord) -> Self {
        let index = headers.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        Self { index }
    }

    fn required(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    fn optional(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn line_of(rec: &StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn field(rec: &StringRecord, col: usize) -> Result<&str> {
    rec.get(col)
        .map(str::trim)
        .ok_or_else(|| Error::Parse { line: line_of(rec), msg: format!("missing field {col}") })
}

fn parse_num<T: std::str::FromStr>(rec: &StringRecord, col: usize, what: &str) -> Result<T> {
    let raw = field(rec, col)?;
    raw.parse().map_err(|_| Error::Parse { line: line_of(rec), msg: format!("cannot parse {what} `{raw}`") })
}

fn meta(rec: &StringRecord, col: Option<usize>) -> Option<String> {
    col.and_then(|c| rec.get(c)).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string)
}

/// Parse the matches and events tables into a dataset with all eight
/// event kinds.
pub fn parse_dataset<R1: Read, R2: Read>(matches: R1, events: R2) -> Result<Dataset> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(matches);
    let cols = Columns::new(rdr.headers()?);
    let c_id = cols.required("match_id")?;
    let c_home = cols.required("home_strength")?;
    let c_away = cols.required("away_strength")?;
    let c_out = cols.required("outcome")?;
    let c_ht = cols.optional("home_team");
    let c_at = cols.optional("away_team");
    let c_season = cols.optional("season");
    let c_date = cols.optional("date");

    let kinds = EventKind::COUNT;
    let mut records = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = field(&rec, c_id)?.to_string();
        if id.is_empty() {
            return Err(Error::Parse { line: line_of(&rec), msg: "empty match_id".into() });
        }
        let outcome = Outcome::from_value(parse_num::<i64>(&rec, c_out, "outcome")?)?;
        let home: f64 = parse_num(&rec, c_home, "home_strength")?;
        let away: f64 = parse_num(&rec, c_away, "away_strength")?;
        if !home.is_finite() || !away.is_finite() {
            return Err(Error::Parse { line: line_of(&rec), msg: "non-finite strength".into() });
        }
        let mut m = MatchRecord::new(id.clone(), outcome, home, away, kinds);
        m.home_team = meta(&rec, c_ht);
        m.away_team = meta(&rec, c_at);
        m.season = meta(&rec, c_season);
        m.date = meta(&rec, c_date);
        if by_id.insert(id.clone(), records.len()).is_some() {
            return Err(Error::DuplicateMatch(id));
        }
        records.push(m);
    }

    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(events);
    let cols = Columns::new(rdr.headers()?);
    let e_id = cols.required("match_id")?;
    let e_half = cols.required("half")?;
    let e_min = cols.required("minute")?;
    let e_side = cols.required("side")?;
    let e_kind = cols.required("event")?;
    for rec in rdr.records() {
        let rec = rec?;
        let id = field(&rec, e_id)?;
        let &slot = by_id.get(id).ok_or_else(|| Error::UnknownMatch(id.to_string()))?;
        let half: i64 = parse_num(&rec, e_half, "half")?;
        let minute: i64 = parse_num(&rec, e_min, "minute")?;
        let folded = fold_stoppage_minute(minute, half)?;
        if minute > SUSPICIOUS_MINUTE {
            log::warn!("line {}: match `{id}` has an event at minute {minute}", line_of(&rec));
        }
        let side: Side = field(&rec, e_side)?.parse()?;
        let kind: EventKind = field(&rec, e_kind)?.parse()?;
        records[slot].counts.add(kind.index(), folded, side, 1);
    }

    Dataset::new(kinds, records)
}

pub fn read_dataset(matches: &Path, events: &Path) -> Result<Dataset> {
    parse_dataset(File::open(matches)?, File::open(events)?)
}

fn fmt_opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

pub fn write_matches_csv<W: Write>(d: &Dataset, w: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(w);
    wtr.write_record(MATCHES_HEADER)?;
    for m in d.matches() {
        wtr.write_record([
            m.match_id.as_str(),
            fmt_opt(&m.home_team),
            fmt_opt(&m.away_team),
            &m.home_strength.to_string(),
            &m.away_strength.to_string(),
            &m.outcome.value().to_string(),
            fmt_opt(&m.season),
            fmt_opt(&m.date),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// One row per event, ordered by match, minute, kind and side. Minutes 1-45
/// are written as first-half events.
pub fn write_events_csv<W: Write>(d: &Dataset, w: W) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(w);
    wtr.write_record(EVENTS_HEADER)?;
    for m in d.matches() {
        for minute in 1..=MINUTES {
            let half = if minute <= 45 { "1" } else { "2" };
            let minute_s = minute.to_string();
            for kind in 0..d.kinds() {
                let name = EventKind::ALL[kind].name();
                for side in Side::BOTH {
                    for _ in 0..m.counts.get(kind, minute, side) {
                        wtr.write_record([m.match_id.as_str(), half, &minute_s, side.code(), name])?;
                    }
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}
