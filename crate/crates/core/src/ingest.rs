//! Metrica-style tracking and event CSV ingestion.
//!
//! Tracking files carry three header lines (team row, jersey row, column
//! titles) followed by one row per frame: `Period,Frame,Time [s]` and then
//! an `x,y` pair per player with the ball as the last pair. Event files have
//! one header line with fourteen columns.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{GridSpec, NormalizedPoint};

pub const DEFAULT_SAMPLE_RATE: f64 = 25.0;

const TIME_TOLERANCE: f64 = 1e-6;
const BALL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Home, Side::Away];

    pub fn as_str(&self) -> &'static str {
        match self {
            Side::Home => "Home",
            Side::Away => "Away",
        }
    }

    pub fn opponent(&self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Home" => Ok(Side::Home),
            "Away" => Ok(Side::Away),
            other => Err(Error::Config(format!("unknown team `{other}`"))),
        }
    }
}

/// One tracking sample. `positions` is indexed by the player slots of the
/// owning [`TrackingTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingFrame {
    pub period: u8,
    pub frame: u64,
    pub time_s: f64,
    pub positions: Vec<Option<NormalizedPoint>>,
    pub ball: Option<NormalizedPoint>,
}

/// Frames of one or both teams together with the player slot header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackingTable {
    pub players: Vec<String>,
    pub sides: Vec<Side>,
    pub frames: Vec<TrackingFrame>,
    /// Finite coordinates that fell outside the unit square and were clamped.
    pub clamped_values: usize,
}

impl TrackingTable {
    pub fn slot(&self, player: &str) -> Option<usize> {
        self.players.iter().position(|p| p == player)
    }

    pub fn position(&self, frame_index: usize, player: &str) -> Option<NormalizedPoint> {
        let slot = self.slot(player)?;
        self.frames.get(frame_index)?.positions[slot]
    }

    /// Full sampled trajectory of one player slot.
    pub fn trajectory(&self, slot: usize) -> Vec<Option<NormalizedPoint>> {
        self.frames.iter().map(|f| f.positions[slot]).collect()
    }

    pub fn frame_index(&self, frame: u64) -> Option<usize> {
        self.frames.binary_search_by_key(&frame, |f| f.frame).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawEventRecord {
    pub team: Side,
    pub event_type: String,
    pub subtype: Option<String>,
    pub period: u8,
    pub start_frame: u64,
    pub start_time_s: f64,
    pub end_frame: u64,
    pub end_time_s: f64,
    pub from_player: Option<String>,
    pub to_player: Option<String>,
    pub start_pos: Option<NormalizedPoint>,
    pub end_pos: Option<NormalizedPoint>,
}

impl RawEventRecord {
    /// Subtypes are dash-separated tokens, e.g. `ON TARGET-GOAL`.
    pub fn subtype_has(&self, token: &str) -> bool {
        self.subtype
            .as_deref()
            .is_some_and(|s| s.split('-').any(|t| t.trim().eq_ignore_ascii_case(token)))
    }

    pub fn is_goal_shot(&self) -> bool {
        self.event_type == "SHOT" && self.subtype_has("GOAL")
    }
}

pub const EVENT_HEADER: [&str; 14] = [
    "Team",
    "Type",
    "Subtype",
    "Period",
    "Start Frame",
    "Start Time [s]",
    "End Frame",
    "End Time [s]",
    "From",
    "To",
    "Start X",
    "Start Y",
    "End X",
    "End Y",
];

#[derive(Debug, Clone, PartialEq)]
pub struct MatchBundle {
    pub match_id: String,
    pub rosters: BTreeMap<Side, BTreeSet<String>>,
    pub tracking: TrackingTable,
    pub events: Vec<RawEventRecord>,
    pub pitch: GridSpec,
    pub warnings: Vec<String>,
}

impl MatchBundle {
    pub fn side_of(&self, player: &str) -> Option<Side> {
        Side::BOTH
            .into_iter()
            .find(|s| self.rosters.get(s).is_some_and(|r| r.contains(player)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPaths {
    pub tracking_home: PathBuf,
    pub tracking_away: PathBuf,
    pub events: PathBuf,
}

impl MatchPaths {
    /// Locates the three files of a sample-data style match directory
    /// (`*_RawTrackingData_Home_Team.csv`, `*_RawTrackingData_Away_Team.csv`,
    /// `*_RawEventsData.csv`).
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut names: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        names.sort();
        let find = |suffix: &str| {
            names
                .iter()
                .find(|p| {
                    p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.ends_with(suffix))
                })
                .cloned()
                .ok_or_else(|| Error::Io {
                    path: dir.join(format!("*{suffix}")),
                    source: io::Error::new(io::ErrorKind::NotFound, "no matching file"),
                })
        };
        Ok(MatchPaths {
            tracking_home: find("_RawTrackingData_Home_Team.csv")?,
            tracking_away: find("_RawTrackingData_Away_Team.csv")?,
            events: find("_RawEventsData.csv")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    pub sample_rate: f64,
    /// Reflect all period-2 coordinates through the pitch center.
    pub normalize_direction: bool,
    pub pitch: GridSpec,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            sample_rate: DEFAULT_SAMPLE_RATE,
            normalize_direction: false,
            pitch: GridSpec::default(),
        }
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::parse(line, err.to_string())
}

fn parse_number<T: FromStr>(field: &str, line: u64, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::parse(line, format!("non-numeric {what} `{field}`")))
}

/// `None` for empty or `NaN` fields.
fn parse_coordinate(field: &str, line: u64) -> Result<Option<f64>> {
    if field.is_empty() || field.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = parse_number(field, line, "coordinate")?;
    Ok(v.is_finite().then_some(v))
}

fn parse_point(
    x: &str,
    y: &str,
    line: u64,
    clamped: &mut usize,
) -> Result<Option<NormalizedPoint>> {
    match (parse_coordinate(x, line)?, parse_coordinate(y, line)?) {
        (Some(x), Some(y)) => {
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                *clamped += 1;
            }
            Ok(NormalizedPoint::clamped(x, y))
        }
        _ => Ok(None),
    }
}

/// Parses one team's tracking file. Player labels come from the column-title
/// row, prefixed with the side (`Player11` becomes `HomePlayer11`).
pub fn parse_tracking<R: Read>(input: R, side: Side, sample_rate: f64) -> Result<TrackingTable> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Error::Config(format!(
            "sample rate must be positive, got {sample_rate}"
        )));
    }
    let mut reader = csv_reader(input);
    let mut header: Vec<csv::StringRecord> = Vec::new();
    let mut table = TrackingTable::default();
    let mut coordinate_columns = 0usize;
    let mut record = csv::StringRecord::new();

    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = record_line(&record);
        let is_data = record
            .get(0)
            .is_some_and(|f| !f.is_empty() && f.parse::<u8>().is_ok());
        if !is_data {
            if !table.frames.is_empty() {
                return Err(Error::parse(line, "header line after data rows"));
            }
            header.push(record.clone());
            continue;
        }
        if table.frames.is_empty() {
            coordinate_columns = read_tracking_header(&header, side, &mut table, line)?;
        }
        if record.len() != 3 + coordinate_columns {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} columns, found {}",
                    3 + coordinate_columns,
                    record.len()
                ),
            ));
        }
        let period: u8 = parse_number(&record[0], line, "period")?;
        let frame: u64 = parse_number(&record[1], line, "frame")?;
        let time_s: f64 = parse_number(&record[2], line, "time")?;
        if let Some(prev) = table.frames.last() {
            if frame <= prev.frame {
                return Err(Error::parse(
                    line,
                    format!("non-increasing frame {frame} after {}", prev.frame),
                ));
            }
        }
        if (time_s - frame as f64 / sample_rate).abs() > TIME_TOLERANCE {
            return Err(Error::parse(
                line,
                format!("time {time_s} does not match frame {frame} at {sample_rate} Hz"),
            ));
        }
        let pairs = coordinate_columns / 2;
        let mut positions = Vec::with_capacity(pairs - 1);
        for i in 0..pairs - 1 {
            let c = 3 + 2 * i;
            positions.push(parse_point(
                &record[c],
                &record[c + 1],
                line,
                &mut table.clamped_values,
            )?);
        }
        let c = 3 + 2 * (pairs - 1);
        let ball = parse_point(&record[c], &record[c + 1], line, &mut table.clamped_values)?;
        table.frames.push(TrackingFrame {
            period,
            frame,
            time_s,
            positions,
            ball,
        });
    }
    if table.frames.is_empty() {
        let line = header.last().map_or(0, record_line);
        read_tracking_header(&header, side, &mut table, line)?;
    }
    Ok(table)
}

/// Validates the three header lines and fills the player slots. Returns the
/// number of coordinate columns (two per player plus two for the ball).
fn read_tracking_header(
    header: &[csv::StringRecord],
    side: Side,
    table: &mut TrackingTable,
    line: u64,
) -> Result<usize> {
    if header.len() != 3 {
        return Err(Error::parse(
            line,
            format!("expected 3 header lines, found {}", header.len()),
        ));
    }
    let titles = &header[2];
    let line = record_line(titles);
    let fixed: Vec<&str> = titles.iter().take(3).collect();
    if fixed != ["Period", "Frame", "Time [s]"] {
        return Err(Error::parse(
            line,
            format!(
                "column titles must start with `Period,Frame,Time [s]`, found `{}`",
                fixed.join(",")
            ),
        ));
    }
    let coordinate_columns = titles.len().saturating_sub(3);
    if coordinate_columns < 2 || !coordinate_columns.is_multiple_of(2) {
        return Err(Error::parse(
            line,
            format!("odd or missing coordinate column count ({coordinate_columns})"),
        ));
    }
    let pairs = coordinate_columns / 2;
    for i in 0..pairs - 1 {
        let label = &titles[3 + 2 * i];
        if label.is_empty() {
            return Err(Error::parse(
                line,
                format!("empty player label in column {}", 4 + 2 * i),
            ));
        }
        table.players.push(format!("{side}{label}"));
        table.sides.push(side);
    }
    Ok(coordinate_columns)
}

/// Joins home and away frames on frame number. Period and time come from the
/// home side; the ball from whichever side reports it.
pub fn merge_tracking(home: TrackingTable, away: TrackingTable) -> Result<TrackingTable> {
    let mut merged = TrackingTable {
        players: home.players,
        sides: home.sides,
        frames: Vec::with_capacity(home.frames.len()),
        clamped_values: home.clamped_values + away.clamped_values,
    };
    merged.players.extend(away.players);
    merged.sides.extend(away.sides);

    let mut away_frames = away.frames.into_iter();
    for mut h in home.frames {
        let a = match away_frames.next() {
            Some(a) => a,
            None => {
                return Err(Error::FrameMismatch {
                    frame: h.frame,
                    side: "away",
                })
            }
        };
        if a.frame != h.frame {
            return Err(if h.frame < a.frame {
                Error::FrameMismatch {
                    frame: h.frame,
                    side: "away",
                }
            } else {
                Error::FrameMismatch {
                    frame: a.frame,
                    side: "home",
                }
            });
        }
        h.ball = match (h.ball, a.ball) {
            (Some(hb), Some(ab)) => {
                if (hb.x - ab.x).abs() > BALL_TOLERANCE || (hb.y - ab.y).abs() > BALL_TOLERANCE {
                    return Err(Error::BallMismatch { frame: h.frame });
                }
                Some(hb)
            }
            (hb, ab) => hb.or(ab),
        };
        h.positions.extend(a.positions);
        merged.frames.push(h);
    }
    if let Some(a) = away_frames.next() {
        return Err(Error::FrameMismatch {
            frame: a.frame,
            side: "home",
        });
    }
    Ok(merged)
}

/// Parses an event file. Output is sorted by (period, start time, row).
///
/// An all-zero end (`End Frame=0, End Time=0`, used by the provider for
/// instantaneous events such as set pieces) is read as "no end" and set to
/// the start.
pub fn parse_events<R: Read>(input: R) -> Result<Vec<RawEventRecord>> {
    let mut reader = csv_reader(input);
    let mut record = csv::StringRecord::new();
    if !reader.read_record(&mut record).map_err(csv_error)? {
        return Err(Error::parse(1, "missing header line"));
    }
    let header: Vec<&str> = record.iter().collect();
    if header != EVENT_HEADER {
        return Err(Error::parse(
            record_line(&record),
            format!("unexpected event header `{}`", header.join(",")),
        ));
    }

    let mut events = Vec::new();
    let mut clamped = 0usize;
    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = record_line(&record);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != EVENT_HEADER.len() {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} columns, found {}",
                    EVENT_HEADER.len(),
                    record.len()
                ),
            ));
        }
        let team: Side = record[0]
            .parse()
            .map_err(|_| Error::parse(line, format!("unknown team `{}`", &record[0])))?;
        let optional = |s: &str| (!s.is_empty()).then(|| s.to_string());
        let event_type = record[1].to_string();
        if event_type.is_empty() {
            return Err(Error::parse(line, "empty event type"));
        }
        let period: u8 = parse_number(&record[3], line, "period")?;
        let start_frame: u64 = parse_number(&record[4], line, "start frame")?;
        let start_time_s: f64 = parse_number(&record[5], line, "start time")?;
        let mut end_frame: u64 = parse_number(&record[6], line, "end frame")?;
        let mut end_time_s: f64 = parse_number(&record[7], line, "end time")?;
        if end_frame == 0 && end_time_s == 0.0 {
            end_frame = start_frame;
            end_time_s = start_time_s;
        }
        if end_time_s < start_time_s {
            return Err(Error::parse(
                line,
                format!("end time {end_time_s} precedes start time {start_time_s}"),
            ));
        }
        if end_frame < start_frame {
            return Err(Error::parse(
                line,
                format!("end frame {end_frame} precedes start frame {start_frame}"),
            ));
        }
        events.push(RawEventRecord {
            team,
            event_type,
            subtype: optional(&record[2]),
            period,
            start_frame,
            start_time_s,
            end_frame,
            end_time_s,
            from_player: optional(&record[8]),
            to_player: optional(&record[9]),
            start_pos: parse_point(&record[10], &record[11], line, &mut clamped)?,
            end_pos: parse_point(&record[12], &record[13], line, &mut clamped)?,
        });
    }
    if clamped > 0 {
        warn!("{clamped} event coordinates outside the unit square were clamped");
    }
    events.sort_by(|a, b| {
        a.period
            .cmp(&b.period)
            .then(a.start_time_s.total_cmp(&b.start_time_s))
    });
    Ok(events)
}

/// Serializes records in the event-file layout accepted by [`parse_events`].
pub fn write_events(events: &[RawEventRecord]) -> String {
    let mut out = EVENT_HEADER.join(",");
    out.push('\n');
    let opt = |s: &Option<String>| s.clone().unwrap_or_default();
    let coords = |p: &Option<NormalizedPoint>| match p {
        Some(p) => format!("{},{}", p.x, p.y),
        None => "NaN,NaN".to_string(),
    };
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            e.team,
            e.event_type,
            opt(&e.subtype),
            e.period,
            e.start_frame,
            e.start_time_s,
            e.end_frame,
            e.end_time_s,
            opt(&e.from_player),
            opt(&e.to_player),
            coords(&e.start_pos),
            coords(&e.end_pos),
        ));
    }
    out
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_match(
    paths: &MatchPaths,
    match_id: &str,
    options: &LoadOptions,
) -> Result<MatchBundle> {
    options.pitch.validate()?;
    let parse_side = |path: &Path, side| {
        parse_tracking(io::BufReader::new(open(path)?), side, options.sample_rate)
            .map_err(|e| e.in_file(path))
    };
    let home = parse_side(&paths.tracking_home, Side::Home)?;
    let away = parse_side(&paths.tracking_away, Side::Away)?;
    let tracking = merge_tracking(home, away).map_err(|e| e.in_file(&paths.tracking_away))?;
    let events = parse_events(io::BufReader::new(open(&paths.events)?))
        .map_err(|e| e.in_file(&paths.events))?;
    Ok(assemble(match_id, tracking, events, options))
}

/// Builds a bundle from already-parsed inputs: resolves raw event player
/// labels against the tracking rosters and applies direction normalization.
pub fn assemble(
    match_id: &str,
    mut tracking: TrackingTable,
    mut events: Vec<RawEventRecord>,
    options: &LoadOptions,
) -> MatchBundle {
    let mut warnings = Vec::new();
    let mut rosters: BTreeMap<Side, BTreeSet<String>> = Side::BOTH
        .into_iter()
        .map(|s| (s, BTreeSet::new()))
        .collect();
    for (label, side) in tracking.players.iter().zip(&tracking.sides) {
        rosters.entry(*side).or_default().insert(label.clone());
    }

    for e in &mut events {
        for slot in [&mut e.from_player, &mut e.to_player] {
            if let Some(raw) = slot.as_mut() {
                *raw = resolve_player(raw, e.team, &mut rosters, &mut warnings);
            }
        }
    }

    if tracking.clamped_values > 0 {
        warnings.push(format!(
            "{} tracking coordinates outside the unit square were clamped",
            tracking.clamped_values
        ));
    }

    if options.normalize_direction {
        for f in tracking.frames.iter_mut().filter(|f| f.period == 2) {
            for p in f.positions.iter_mut().flatten() {
                *p = p.flipped();
            }
            f.ball = f.ball.map(NormalizedPoint::flipped);
        }
        for e in events.iter_mut().filter(|e| e.period == 2) {
            e.start_pos = e.start_pos.map(NormalizedPoint::flipped);
            e.end_pos = e.end_pos.map(NormalizedPoint::flipped);
        }
    }

    for w in &warnings {
        warn!("{match_id}: {w}");
    }
    MatchBundle {
        match_id: match_id.to_string(),
        rosters,
        tracking,
        events,
        pitch: options.pitch,
        warnings,
    }
}

fn resolve_player(
    raw: &str,
    team: Side,
    rosters: &mut BTreeMap<Side, BTreeSet<String>>,
    warnings: &mut Vec<String>,
) -> String {
    for side in Side::BOTH {
        let label = format!("{side}{raw}");
        if rosters[&side].contains(&label) {
            return label;
        }
    }
    let label = format!("{team}{raw}");
    warnings.push(format!(
        "event player `{raw}` not in any tracking header; added to {team} roster as `{label}`"
    ));
    rosters.entry(team).or_default().insert(label.clone());
    label
}
