//! End-to-end conversion from provider files to an object-centric log.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::derive::{
    backfill_positions, decompose_events, detect_movement_events, enrich, merge_streams,
    ActivityTable, EventComponent, MovementOptions,
};
use crate::error::{Error, Result};
use crate::ingest::{load_match, LoadOptions, MatchBundle, MatchPaths};
use crate::ocel::{
    build_log, build_objects, check_conformance, default_epoch, IdentityScope, MatchLog, OcelLog,
};
use crate::possession::{check_invariants, match_prefix, segment_possessions};
use crate::spatial::GridSpec;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub load: LoadOptions,
    pub scope: IdentityScope,
    pub movement: MovementOptions,
    pub activities: ActivityTable,
    /// Fill missing event coordinates from the ball position in tracking.
    pub backfill: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            load: LoadOptions::default(),
            scope: IdentityScope::Global,
            movement: MovementOptions::default(),
            activities: ActivityTable::default(),
            backfill: true,
        }
    }
}

impl PipelineConfig {
    pub fn grid(&self) -> &GridSpec {
        &self.load.pitch
    }
}

#[derive(Debug, Clone)]
pub struct MatchInput {
    pub match_id: String,
    pub paths: MatchPaths,
}

/// Per-match counts that make the totals attributable.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MatchReport {
    pub match_id: String,
    pub provider_events: usize,
    pub primary_events: usize,
    pub end_events: usize,
    pub movement_events: usize,
    pub possessions: usize,
    pub players: usize,
    pub frames: usize,
    pub backfilled_positions: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub log: OcelLog,
    pub matches: Vec<MatchLog>,
    pub reports: Vec<MatchReport>,
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "match {}: {} provider events -> {} primary + {} end events, {} movement events, {} possessions, {} players, {} frames",
            self.match_id,
            self.provider_events,
            self.primary_events,
            self.end_events,
            self.movement_events,
            self.possessions,
            self.players,
            self.frames
        )
    }
}

/// Derives the enriched event stream and possessions of one loaded match.
/// `index` is the match's position in load order and fixes its id prefix and
/// epoch.
pub fn process_match(
    mut bundle: MatchBundle,
    index: usize,
    config: &PipelineConfig,
) -> Result<(MatchLog, MatchReport)> {
    let prefix = match_prefix(index);
    let spec = bundle.pitch;
    let backfilled = if config.backfill {
        backfill_positions(&mut bundle.events, &bundle.tracking)
    } else {
        0
    };
    let rules = config.activities.possession_rules();
    let spans = segment_possessions(&bundle.events, &prefix, &rules);
    let violations = check_invariants(&bundle.events, &spans, &rules);
    if !violations.is_empty() {
        return Err(Error::Invariant(format!(
            "match {}: {}",
            bundle.match_id,
            violations.join("; ")
        )));
    }
    let game = decompose_events(&bundle.events, &spec, &config.activities)?;
    let movement = detect_movement_events(&bundle.tracking, &spec, &config.movement);
    let count = |c| game.iter().filter(|e| e.component == c).count();
    let report = MatchReport {
        match_id: bundle.match_id.clone(),
        provider_events: bundle.events.len(),
        primary_events: count(EventComponent::Primary),
        end_events: count(EventComponent::End),
        movement_events: movement.len(),
        possessions: spans.len(),
        players: bundle.rosters.values().map(|r| r.len()).sum(),
        frames: bundle.tracking.frames.len(),
        backfilled_positions: backfilled,
        warnings: bundle.warnings.clone(),
    };
    let stream = enrich(
        merge_streams(game, movement, &prefix),
        &spans,
        &bundle.rosters,
    );
    log::info!("{report}");
    Ok((
        MatchLog {
            match_id: bundle.match_id,
            epoch: default_epoch(index),
            rosters: bundle.rosters,
            spans,
            events: stream,
        },
        report,
    ))
}

/// Builds and validates the combined log. Structural violations are reported
/// as [`Error::Invariant`].
pub fn assemble_log(
    matches: Vec<MatchLog>,
    reports: Vec<MatchReport>,
    config: &PipelineConfig,
) -> Result<Conversion> {
    let objects = build_objects(&matches, config.scope, config.grid())?;
    let log = build_log(&matches, objects, config.scope)?;
    let conformance = check_conformance(&log);
    if !conformance.is_conformant() {
        return Err(Error::Invariant(conformance.violations().join("; ")));
    }
    log::info!(
        "assembled log: {} events, {} objects from {} matches",
        log.events.len(),
        log.objects.len(),
        matches.len()
    );
    Ok(Conversion {
        log,
        matches,
        reports,
    })
}

/// Loads and converts every match. Matches are processed in parallel; the
/// result does not depend on scheduling.
pub fn convert(inputs: &[MatchInput], config: &PipelineConfig) -> Result<Conversion> {
    config.grid().validate()?;
    let processed: Vec<(MatchLog, MatchReport)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| {
            let bundle = load_match(&input.paths, &input.match_id, &config.load)?;
            log::info!(
                "loaded match {}: {} frames, {} events",
                input.match_id,
                bundle.tracking.frames.len(),
                bundle.events.len()
            );
            process_match(bundle, i, config)
        })
        .collect::<Result<_>>()?;
    let (matches, reports) = processed.into_iter().unzip();
    assemble_log(matches, reports, config)
}

/// Same as [`convert`] for matches that are already loaded.
pub fn convert_bundles(bundles: Vec<MatchBundle>, config: &PipelineConfig) -> Result<Conversion> {
    let processed: Vec<(MatchLog, MatchReport)> = bundles
        .into_par_iter()
        .enumerate()
        .map(|(i, b)| process_match(b, i, config))
        .collect::<Result<_>>()?;
    let (matches, reports) = processed.into_iter().unzip();
    assemble_log(matches, reports, config)
}

/// Component breakdown summed over matches.
pub fn breakdown(reports: &[MatchReport]) -> BTreeMap<&'static str, usize> {
    let mut m = BTreeMap::new();
    for r in reports {
        for (k, v) in [
            ("provider_events", r.provider_events),
            ("primary_events", r.primary_events),
            ("end_events", r.end_events),
            ("movement_events", r.movement_events),
            ("possessions", r.possessions),
            ("roster_players", r.players),
            ("frames", r.frames),
            ("backfilled_positions", r.backfilled_positions),
        ] {
            *m.entry(k).or_insert(0) += v;
        }
    }
    m
}
