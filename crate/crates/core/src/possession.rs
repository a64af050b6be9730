//! Possession segmentation.
//!
//! A possession opens at the first controlling event of a team other than
//! the one currently in possession and runs until the next such event or
//! the end of the period. Spans never cross a period boundary.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{RawEventRecord, Side};

/// Provider event types that establish ball control.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PossessionRules {
    pub controlling: BTreeSet<String>,
}

impl Default for PossessionRules {
    fn default() -> Self {
        PossessionRules {
            controlling: ["SET PIECE", "RECOVERY", "PASS", "SHOT", "CARRY"]
                .into_iter()
                .map(String::from)
                .collect(),
        }
    }
}

impl PossessionRules {
    pub fn is_controlling(&self, event: &RawEventRecord) -> bool {
        self.controlling.contains(&event.event_type)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Goal,
    Shot,
    Lost,
    OutThenLost,
    PeriodEnd,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Goal => "goal",
            Outcome::Shot => "shot",
            Outcome::Lost => "lost",
            Outcome::OutThenLost => "out_then_lost",
            Outcome::PeriodEnd => "period_end",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "goal" => Outcome::Goal,
            "shot" => Outcome::Shot,
            "lost" => Outcome::Lost,
            "out_then_lost" => Outcome::OutThenLost,
            "period_end" => Outcome::PeriodEnd,
            other => {
                return Err(Error::Config(format!(
                    "unknown possession outcome `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PossessionSpan {
    pub id: String,
    pub team: Side,
    pub period: u8,
    pub start_time_s: f64,
    pub end_time_s: f64,
    pub start_frame: u64,
    pub end_frame: u64,
    pub outcome: Outcome,
}

impl PossessionSpan {
    /// Half-open containment `[start, end)` within the same period. See
    /// [`possession_at`] for the period-end rule.
    pub fn contains(&self, t: f64, period: u8) -> bool {
        self.period == period && self.start_time_s <= t && t < self.end_time_s
    }
}

/// Two-letter prefix for the match at `index` in load order: AA, AB, ..., AZ, BA, ...
pub fn match_prefix(index: usize) -> String {
    let first = (b'A' + ((index / 26) % 26) as u8) as char;
    let second = (b'A' + (index % 26) as u8) as char;
    format!("{first}{second}")
}

pub fn possession_id(prefix: &str, counter: usize) -> String {
    format!("{prefix}{counter:03}")
}

struct OpenSpan {
    team: Side,
    start_time_s: f64,
    start_frame: u64,
    members: Vec<usize>,
}

/// Segments time-ordered events into possessions.
pub fn segment_possessions(
    events: &[RawEventRecord],
    match_prefix: &str,
    rules: &PossessionRules,
) -> Vec<PossessionSpan> {
    let mut spans = Vec::new();
    let mut counter = 0usize;
    let mut i = 0;
    while i < events.len() {
        let period = events[i].period;
        let mut j = i;
        while j < events.len() && events[j].period == period {
            j += 1;
        }
        let period_events = &events[i..j];
        let period_end_time = period_events
            .iter()
            .map(|e| e.end_time_s.max(e.start_time_s))
            .fold(f64::NEG_INFINITY, f64::max);
        let period_end_frame = period_events
            .iter()
            .map(|e| e.end_frame.max(e.start_frame))
            .max()
            .unwrap_or(0);

        let mut open: Vec<OpenSpan> = Vec::new();
        for (k, e) in period_events.iter().enumerate() {
            let flips = rules.is_controlling(e) && open.last().is_none_or(|s| s.team != e.team);
            if flips {
                open.push(OpenSpan {
                    team: e.team,
                    start_time_s: e.start_time_s,
                    start_frame: e.start_frame,
                    members: Vec::new(),
                });
            }
            if let Some(current) = open.last_mut() {
                current.members.push(k);
            }
        }

        let count = open.len();
        for (n, span) in open.iter().enumerate() {
            let last = n + 1 == count;
            let (end_time_s, end_frame) = match open.get(n + 1) {
                Some(next) => (next.start_time_s, next.start_frame),
                None => (period_end_time, period_end_frame),
            };
            counter += 1;
            spans.push(PossessionSpan {
                id: possession_id(match_prefix, counter),
                team: span.team,
                period,
                start_time_s: span.start_time_s,
                end_time_s: end_time_s.max(span.start_time_s),
                start_frame: span.start_frame,
                end_frame: end_frame.max(span.start_frame),
                outcome: classify(span, period_events, rules, last),
            });
        }
        i = j;
    }
    spans
}

fn classify(
    span: &OpenSpan,
    events: &[RawEventRecord],
    rules: &PossessionRules,
    last_in_period: bool,
) -> Outcome {
    let members = || span.members.iter().map(|&k| &events[k]);
    let own_shots = || members().filter(|e| e.team == span.team && e.event_type == "SHOT");
    if own_shots().any(RawEventRecord::is_goal_shot) {
        return Outcome::Goal;
    }
    if own_shots().next().is_some() {
        return Outcome::Shot;
    }
    if last_in_period {
        return Outcome::PeriodEnd;
    }
    let last_out = span
        .members
        .iter()
        .rposition(|&k| events[k].event_type == "BALL OUT");
    let last_control = span
        .members
        .iter()
        .rposition(|&k| events[k].team == span.team && rules.is_controlling(&events[k]));
    match (last_out, last_control) {
        (Some(out), Some(control)) if out > control => Outcome::OutThenLost,
        (Some(_), None) => Outcome::OutThenLost,
        _ => Outcome::Lost,
    }
}

/// The span containing time `t` of `period`, if any. `spans` must be sorted
/// by (period, start time) as produced by [`segment_possessions`].
///
/// Intervals are half-open except for the last span of a period, which also
/// contains the period end.
pub fn possession_at(t: f64, period: u8, spans: &[PossessionSpan]) -> Option<&PossessionSpan> {
    let idx = spans.partition_point(|s| (s.period, s.start_time_s) <= (period, t));
    let candidate = spans.get(idx.checked_sub(1)?)?;
    let last_in_period = spans.get(idx).is_none_or(|next| next.period != period);
    let inside = candidate.contains(t, period)
        || (last_in_period && candidate.period == period && t == candidate.end_time_s);
    inside.then_some(candidate)
}

/// Violations of the segmentation invariants: team alternation within a
/// period, each controlling event inside exactly one span, and one goal span
/// per goal-marked shot.
pub fn check_invariants(
    events: &[RawEventRecord],
    spans: &[PossessionSpan],
    rules: &PossessionRules,
) -> Vec<String> {
    let mut out = Vec::new();
    for w in spans.windows(2) {
        if w[0].period == w[1].period && w[0].team == w[1].team {
            out.push(format!(
                "{} and {} belong to the same team",
                w[0].id, w[1].id
            ));
        }
    }
    for e in events.iter().filter(|e| rules.is_controlling(e)) {
        let (t, period) = (e.start_time_s, e.period);
        let n = spans
            .iter()
            .enumerate()
            .filter(|(k, s)| {
                let last = spans.get(k + 1).is_none_or(|next| next.period != s.period);
                s.contains(t, period) || (last && s.period == period && t == s.end_time_s)
            })
            .count();
        if n != 1 {
            out.push(format!(
                "{} at {:.2}s (period {}) lies in {n} spans",
                e.event_type, e.start_time_s, e.period
            ));
        }
    }
    let goals = spans.iter().filter(|s| s.outcome == Outcome::Goal).count();
    let goal_shots = events
        .iter()
        .filter(|e| e.event_type == "SHOT" && e.is_goal_shot())
        .count();
    if goals != goal_shots {
        out.push(format!(
            "{goals} goal spans but {goal_shots} goal-marked shots"
        ));
    }
    out
}
