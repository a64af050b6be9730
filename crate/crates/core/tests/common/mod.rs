//! Seeded synthetic matches in the provider CSV layout.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod micro;

use pitchlog::ingest::{
    assemble, merge_tracking, parse_events, parse_tracking, LoadOptions, MatchBundle, MatchPaths,
    Side,
};

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub seed: u64,
    pub frames_per_period: u64,
    pub players_per_side: u32,
    pub events_per_period: usize,
    /// Chance per frame that a player starts a run of missing samples.
    pub gap_rate: f64,
    pub step: f64,
}

impl SynthParams {
    pub fn small(seed: u64) -> Self {
        SynthParams {
            seed,
            frames_per_period: 750,
            players_per_side: 3,
            events_per_period: 25,
            gap_rate: 0.002,
            step: 0.01,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthMatch {
    pub home: String,
    pub away: String,
    pub events: String,
}

fn fmt_coord(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.5}"),
        None => "NaN".into(),
    }
}

fn walk(rng: &mut ChaCha8Rng, v: f64, step: f64) -> f64 {
    let mut n = v + rng.gen_range(-step..=step);
    if n < 0.0 {
        n = -n;
    }
    if n > 1.0 {
        n = 2.0 - n;
    }
    n.clamp(0.0, 1.0)
}

/// One tracking row: period, frame, per-player positions.
type TrackRow = (u8, u64, Vec<Option<(f64, f64)>>);

fn tracking_csv(
    side: &str,
    numbers: &[u32],
    rows: &[TrackRow],
    ball: &[Option<(f64, f64)>],
) -> String {
    let mut s = String::new();
    let mut teams = vec![String::new(); 3];
    let mut jerseys = vec![String::new(); 3];
    let mut titles = vec!["Period".to_string(), "Frame".into(), "Time [s]".into()];
    for n in numbers {
        teams.extend([side.to_string(), String::new()]);
        jerseys.extend([n.to_string(), String::new()]);
        titles.extend([format!("Player{n}"), String::new()]);
    }
    teams.extend([String::new(), String::new()]);
    jerseys.extend([String::new(), String::new()]);
    titles.extend(["Ball".to_string(), String::new()]);
    for line in [teams, jerseys, titles] {
        s += &line.join(",");
        s.push('\n');
    }
    for (i, (period, frame, pos)) in rows.iter().enumerate() {
        let _ = write!(s, "{period},{frame},{:.2}", *frame as f64 / 25.0);
        for p in pos.iter().chain(std::iter::once(&ball[i])) {
            let _ = write!(
                s,
                ",{},{}",
                fmt_coord(p.map(|p| p.0)),
                fmt_coord(p.map(|p| p.1))
            );
        }
        s.push('\n');
    }
    s
}

struct EventRow {
    team: Side,
    kind: &'static str,
    subtype: String,
    period: u8,
    start: u64,
    end: u64,
    from: String,
    to: String,
    start_pos: Option<(f64, f64)>,
    end_pos: Option<(f64, f64)>,
}

pub fn generate(p: &SynthParams) -> SynthMatch {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let k = p.players_per_side;
    let home_numbers: Vec<u32> = (1..=k).collect();
    let away_numbers: Vec<u32> = (k + 1..=2 * k).collect();
    let n_players = (2 * k) as usize;

    let mut positions: Vec<(f64, f64)> = (0..n_players).map(|_| (rng.gen(), rng.gen())).collect();
    let mut gap_left = vec![0u32; n_players];
    let mut ball = (0.5, 0.5);
    let mut rows = Vec::new();
    let mut balls = Vec::new();
    for period in 1..=2u8 {
        let first = (u64::from(period) - 1) * p.frames_per_period + 1;
        for frame in first..first + p.frames_per_period {
            let mut row = Vec::with_capacity(n_players);
            for (i, pos) in positions.iter_mut().enumerate() {
                *pos = (walk(&mut rng, pos.0, p.step), walk(&mut rng, pos.1, p.step));
                if gap_left[i] == 0 && rng.gen_bool(p.gap_rate) {
                    gap_left[i] = rng.gen_range(1..40);
                }
                if gap_left[i] > 0 {
                    gap_left[i] -= 1;
                    row.push(None);
                } else {
                    row.push(Some(*pos));
                }
            }
            ball = (
                walk(&mut rng, ball.0, 3.0 * p.step),
                walk(&mut rng, ball.1, 3.0 * p.step),
            );
            balls.push(if rng.gen_bool(0.01) { None } else { Some(ball) });
            rows.push((period, frame, row));
        }
    }
    let split = k as usize;
    let home_rows: Vec<_> = rows
        .iter()
        .map(|(a, b, r)| (*a, *b, r[..split].to_vec()))
        .collect();
    let away_rows: Vec<_> = rows
        .iter()
        .map(|(a, b, r)| (*a, *b, r[split..].to_vec()))
        .collect();

    let pick = |rng: &mut ChaCha8Rng, side: Side| -> String {
        let nums = if side == Side::Home {
            &home_numbers
        } else {
            &away_numbers
        };
        format!("Player{}", nums[rng.gen_range(0..nums.len())])
    };
    let point = |rng: &mut ChaCha8Rng| -> Option<(f64, f64)> {
        if rng.gen_bool(0.05) {
            None
        } else {
            Some((rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0)))
        }
    };

    let mut events: Vec<EventRow> = Vec::new();
    for period in 1..=2u8 {
        let first = (u64::from(period) - 1) * p.frames_per_period + 1;
        let last = first + p.frames_per_period - 1;
        let mut team = if period == 1 { Side::Home } else { Side::Away };
        let mut frame = first + 10;
        let mut restart: Option<&'static str> = Some("KICK OFF");
        let mut count = 0;
        while count < p.events_per_period && frame + 60 < last {
            if let Some(sub) = restart.take() {
                let zero_end = rng.gen_bool(0.3);
                let at = point(&mut rng);
                events.push(EventRow {
                    team,
                    kind: "SET PIECE",
                    subtype: sub.into(),
                    period,
                    start: frame,
                    end: if zero_end { 0 } else { frame },
                    from: pick(&mut rng, team),
                    to: String::new(),
                    start_pos: if zero_end { None } else { at },
                    end_pos: if zero_end { None } else { at },
                });
                count += 1;
                frame += rng.gen_range(1..5);
            }
            let dur = rng.gen_range(5..40);
            let roll: f64 = rng.gen();
            let from = pick(&mut rng, team);
            let mut row = EventRow {
                team,
                kind: "PASS",
                subtype: String::new(),
                period,
                start: frame,
                end: frame + dur,
                from,
                to: String::new(),
                start_pos: point(&mut rng),
                end_pos: point(&mut rng),
            };
            if roll < 0.5 {
                row.to = pick(&mut rng, team);
                events.push(row);
            } else if roll < 0.6 {
                row.kind = "CARRY";
                events.push(row);
            } else if roll < 0.7 {
                row.kind = "BALL LOST";
                row.subtype = "INTERCEPTION".into();
                events.push(row);
                team = team.opponent();
                frame += dur;
                events.push(EventRow {
                    team,
                    kind: "RECOVERY",
                    subtype: "INTERCEPTION".into(),
                    period,
                    start: frame,
                    end: frame,
                    from: pick(&mut rng, team),
                    to: String::new(),
                    start_pos: point(&mut rng),
                    end_pos: None,
                });
                count += 1;
            } else if roll < 0.8 {
                let goal = rng.gen_bool(0.35);
                row.kind = "SHOT";
                row.subtype = if goal {
                    "ON TARGET-GOAL".into()
                } else {
                    "OFF TARGET-OUT".into()
                };
                events.push(row);
                team = team.opponent();
                restart = Some(if goal { "KICK OFF" } else { "GOAL KICK" });
            } else if roll < 0.87 {
                row.kind = "BALL OUT";
                row.end_pos = Some((
                    rng.gen_range(0.0..=1.0),
                    if rng.gen_bool(0.5) { 0.0 } else { 1.0 },
                ));
                events.push(row);
                team = team.opponent();
                restart = Some("THROW IN");
            } else if roll < 0.95 {
                let opp = team.opponent();
                events.push(EventRow {
                    team: opp,
                    kind: "CHALLENGE",
                    subtype: "GROUND-LOST".into(),
                    period,
                    start: frame,
                    end: frame,
                    from: pick(&mut rng, opp),
                    to: String::new(),
                    start_pos: point(&mut rng),
                    end_pos: None,
                });
            } else {
                let opp = team.opponent();
                events.push(EventRow {
                    team: opp,
                    kind: "CARD",
                    subtype: "YELLOW".into(),
                    period,
                    start: frame,
                    end: frame,
                    from: pick(&mut rng, opp),
                    to: String::new(),
                    start_pos: None,
                    end_pos: None,
                });
            }
            count += 1;
            frame += dur + rng.gen_range(1..30);
        }
    }

    let mut ev = String::from(
        "Team,Type,Subtype,Period,Start Frame,Start Time [s],End Frame,End Time [s],From,To,Start X,Start Y,End X,End Y\n",
    );
    for e in &events {
        let t = |f: u64| {
            if f == 0 {
                "0".to_string()
            } else {
                format!("{:.2}", f as f64 / 25.0)
            }
        };
        let _ = writeln!(
            ev,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.team,
            e.kind,
            e.subtype,
            e.period,
            e.start,
            t(e.start),
            e.end,
            t(e.end),
            e.from,
            e.to,
            fmt_coord(e.start_pos.map(|p| p.0)),
            fmt_coord(e.start_pos.map(|p| p.1)),
            fmt_coord(e.end_pos.map(|p| p.0)),
            fmt_coord(e.end_pos.map(|p| p.1)),
        );
    }

    SynthMatch {
        home: tracking_csv("Home", &home_numbers, &home_rows, &balls),
        away: tracking_csv("Away", &away_numbers, &away_rows, &balls),
        events: ev,
    }
}

impl SynthMatch {
    /// Writes the three files with provider naming into `dir/name`.
    pub fn write(&self, dir: &Path, name: &str) -> PathBuf {
        let d = dir.join(name);
        fs::create_dir_all(&d).unwrap();
        fs::write(
            d.join(format!("{name}_RawTrackingData_Home_Team.csv")),
            &self.home,
        )
        .unwrap();
        fs::write(
            d.join(format!("{name}_RawTrackingData_Away_Team.csv")),
            &self.away,
        )
        .unwrap();
        fs::write(d.join(format!("{name}_RawEventsData.csv")), &self.events).unwrap();
        d
    }

    pub fn bundle(&self, match_id: &str) -> MatchBundle {
        let home = parse_tracking(self.home.as_bytes(), Side::Home, 25.0).unwrap();
        let away = parse_tracking(self.away.as_bytes(), Side::Away, 25.0).unwrap();
        let tracking = merge_tracking(home, away).unwrap();
        let events = parse_events(self.events.as_bytes()).unwrap();
        assemble(match_id, tracking, events, &LoadOptions::default())
    }
}

pub fn paths(dir: &Path) -> MatchPaths {
    MatchPaths::from_dir(dir).unwrap()
}

/// Location of the real sample matches: `METRICA_DATA_DIR` or `data/metrica`
/// under the workspace root, with `Sample_Game_1` and `Sample_Game_2` inside.
pub fn sample_data_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("METRICA_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/metrica"));
    let ok = ["Sample_Game_1", "Sample_Game_2"]
        .iter()
        .all(|g| MatchPaths::from_dir(&dir.join(g)).is_ok());
    ok.then_some(dir)
}

/// Movement-chain checks over one match: (continuity breaks between
/// consecutive non-gapped events of a player, players whose summed
/// per-event distance exceeds their trajectory length).
pub fn movement_chain_violations(
    tracking: &pitchlog::ingest::TrackingTable,
    events: &[pitchlog::derive::ActivityEvent],
    spec: &pitchlog::spatial::GridSpec,
) -> (usize, usize) {
    use pitchlog::derive::{ActivityEvent, EventClass};
    use std::collections::BTreeMap;

    let mut per_player: BTreeMap<&str, Vec<&ActivityEvent>> = BTreeMap::new();
    for e in events
        .iter()
        .filter(|e| e.class == EventClass::PositionBased)
    {
        if let Some(p) = e.first_player() {
            per_player.entry(p).or_default().push(e);
        }
    }
    let (mut breaks, mut overshoot) = (0, 0);
    for (player, evs) in per_player {
        let Some(slot) = tracking.slot(player) else {
            breaks += evs.len();
            continue;
        };
        // absent[i] = missing samples among frames[..i]
        let mut absent = vec![0usize; tracking.frames.len() + 1];
        for (i, f) in tracking.frames.iter().enumerate() {
            absent[i + 1] = absent[i] + usize::from(f.positions[slot].is_none());
        }
        let at = |t: f64| tracking.frames.partition_point(|f| f.time_s < t - 1e-9);
        let upto = |t: f64| tracking.frames.partition_point(|f| f.time_s <= t + 1e-9);
        for w in evs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let gapped = a.period != b.period || absent[upto(b.time_s)] > absent[at(a.time_s)];
            if !gapped && a.attr_str("to_cell") != b.attr_str("from_cell") {
                breaks += 1;
            }
        }
        let total: f64 = evs
            .iter()
            .filter_map(|e| e.attrs.get("distance_m").and_then(|v| v.as_f64()))
            .sum();
        let full = pitchlog::spatial::path_length(&tracking.trajectory(slot), spec).unwrap_or(0.0);
        if total > full + 1e-6 {
            overshoot += 1;
        }
    }
    (breaks, overshoot)
}
