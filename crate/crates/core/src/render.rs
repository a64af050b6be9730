//! DOT output for directly-follows graphs and SVG maps of single possessions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::attrs::AttrValue;
use crate::error::{Error, Result};
use crate::mining::OcDfg;
use crate::ocel::{ObjectType, OcelLog};
use crate::spatial::{GridCell, GridSpec, NormalizedPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderOptions {
    pub colors: BTreeMap<ObjectType, String>,
    pub node_counts: bool,
    pub edge_labels: bool,
    pub grid_lines: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        let colors = [
            (ObjectType::Match, "#7f7f7f"),
            (ObjectType::Team, "#9467bd"),
            (ObjectType::Player, "#1f77b4"),
            (ObjectType::Possession, "#2ca02c"),
            (ObjectType::GridPosition, "#8c564b"),
            (ObjectType::Ball, "#d62728"),
        ]
        .into_iter()
        .map(|(t, c)| (t, c.to_string()))
        .collect();
        RenderOptions {
            colors,
            node_counts: true,
            edge_labels: true,
            grid_lines: true,
            width: 840,
            height: 544,
        }
    }
}

impl RenderOptions {
    pub fn validate(&self) -> Result<()> {
        let distinct: BTreeSet<&String> = self.colors.values().collect();
        if distinct.len() != self.colors.len() {
            return Err(Error::Config("object type colors must be distinct".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("output dimensions must be positive".into()));
        }
        Ok(())
    }

    fn color(&self, t: ObjectType) -> &str {
        self.colors.get(&t).map_or("#000000", String::as_str)
    }
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n")
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders a Graphviz digraph. Nodes and edges are emitted in sorted order so
/// equal graphs give identical text.
pub fn dfg_to_dot(g: &OcDfg, opts: &RenderOptions) -> String {
    let mut out =
        String::from("digraph ocdfg {\n  rankdir=LR;\n  node [shape=box, style=rounded];\n");
    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for d in g.types.values() {
        for (a, n) in &d.nodes {
            *totals.entry(a).or_default() += n;
        }
    }
    for (a, n) in &totals {
        let label = if opts.node_counts {
            format!("{a} ({n})")
        } else {
            a.to_string()
        };
        let _ = writeln!(
            out,
            "  \"{}\" [label=\"{}\"];",
            dot_escape(a),
            dot_escape(&label)
        );
    }
    for (t, d) in &g.types {
        for ((a, b), n) in &d.edges {
            let _ = write!(
                out,
                "  \"{}\" -> \"{}\" [color=\"{}\"",
                dot_escape(a),
                dot_escape(b),
                opts.color(*t)
            );
            if opts.edge_labels {
                let _ = write!(out, ", label=\"{}:{}\"", t.as_str(), n);
            }
            out.push_str("];\n");
        }
    }
    out.push_str("}\n");
    out
}

/// One event as placed on the pitch.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub event_id: String,
    pub activity: String,
    pub cell: GridCell,
    pub point: NormalizedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceTrace {
    pub object_id: String,
    pub object_type: ObjectType,
    pub points: Vec<TracePoint>,
}

impl InstanceTrace {
    /// Cell labels in trace order with consecutive repeats collapsed.
    pub fn cell_path(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for p in &self.points {
            let label = p.cell.label();
            if out.last() != Some(&label) {
                out.push(label);
            }
        }
        out
    }
}

fn event_point(
    attrs: &crate::attrs::Attrs,
    spec: &GridSpec,
) -> Option<(GridCell, NormalizedPoint)> {
    let cell = attrs
        .get("cell")
        .and_then(AttrValue::as_str)
        .and_then(|c| c.parse::<GridCell>().ok());
    let x = attrs.get("x").and_then(AttrValue::as_f64);
    let y = attrs.get("y").and_then(AttrValue::as_f64);
    match (x, y) {
        (Some(x), Some(y)) => {
            let p = NormalizedPoint::clamped(x, y)?;
            Some((cell.unwrap_or_else(|| spec.cell(p)), p))
        }
        _ => cell.map(|c| (c, spec.cell_center(c))),
    }
}

/// Traces of every object of the requested types that shares an event with
/// the possession, restricted to that possession's events. Events without a
/// location are skipped; movement events sit at their destination cell.
pub fn instance_traces(
    log: &OcelLog,
    possession_id: &str,
    types: &BTreeSet<ObjectType>,
    spec: &GridSpec,
) -> Result<Vec<InstanceTrace>> {
    let index = log.object_index();
    match index.get(possession_id) {
        Some(o) if o.object_type == ObjectType::Possession => {}
        _ => return Err(Error::UnknownPossession(possession_id.to_string())),
    }
    let mut events: Vec<&crate::ocel::OcelEvent> = log
        .events
        .iter()
        .filter(|e| e.relations.iter().any(|r| r.object_id == possession_id))
        .collect();
    events.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));

    let mut traces: BTreeMap<(ObjectType, &str), Vec<TracePoint>> = BTreeMap::new();
    for e in events {
        let Some((cell, point)) = event_point(&e.attrs, spec) else {
            continue;
        };
        let mut seen = BTreeSet::new();
        for r in &e.relations {
            let Some(o) = index.get(r.object_id.as_str()) else {
                continue;
            };
            if !types.contains(&o.object_type) || !seen.insert(r.object_id.as_str()) {
                continue;
            }
            traces
                .entry((o.object_type, &o.id))
                .or_default()
                .push(TracePoint {
                    event_id: e.id.clone(),
                    activity: e.activity.clone(),
                    cell,
                    point,
                });
        }
    }
    Ok(traces
        .into_iter()
        .map(|((object_type, id), points)| InstanceTrace {
            object_id: id.to_string(),
            object_type,
            points,
        })
        .collect())
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#aec7e8",
];

/// SVG map of one possession: the pitch grid with A1 at the bottom left and
/// one arrow chain per related object.
pub fn spatial_instance_svg(
    log: &OcelLog,
    possession_id: &str,
    types: &BTreeSet<ObjectType>,
    spec: &GridSpec,
    opts: &RenderOptions,
) -> Result<String> {
    spec.validate()?;
    opts.validate()?;
    let traces = instance_traces(log, possession_id, types, spec)?;

    let margin = 30.0;
    let legend_h = 18.0 * (traces.len() as f64) + 40.0;
    let (w, h) = (f64::from(opts.width), f64::from(opts.height));
    let total_w = w + 2.0 * margin;
    let total_h = h + 2.0 * margin + legend_h;
    // Provider y grows downwards from the top touchline, which already puts
    // row 1 at the bottom of the screen.
    let sx = |p: NormalizedPoint| margin + p.x * w;
    let sy = |p: NormalizedPoint| margin + p.y * h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.0} {total_h:.0}">"#
    );
    let _ = writeln!(
        s,
        "  <title>possession {}</title>",
        xml_escape(possession_id)
    );
    s.push_str("  <defs>\n");
    let mut colors: Vec<String> = Vec::new();
    let mut player_i = 0;
    for t in &traces {
        let c = match t.object_type {
            ObjectType::Ball => opts.color(ObjectType::Ball).to_string(),
            _ => {
                player_i += 1;
                PALETTE[(player_i - 1) % PALETTE.len()].to_string()
            }
        };
        colors.push(c);
    }
    for (i, c) in colors.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"    <marker id="head{i}" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L10,5 L0,10 z" fill="{c}"/></marker>"#
        );
    }
    s.push_str("  </defs>\n");

    let _ = writeln!(
        s,
        r##"  <rect class="pitch" x="{margin}" y="{margin}" width="{w}" height="{h}" fill="#e8f4e8" stroke="#333333"/>"##
    );
    s.push_str("  <g class=\"grid\">\n");
    let (cols, rows) = (f64::from(spec.cols), f64::from(spec.rows));
    if opts.grid_lines {
        for c in 1..spec.cols {
            let x = margin + w * f64::from(c) / cols;
            let _ = writeln!(
                s,
                r##"    <line x1="{x:.2}" y1="{margin}" x2="{x:.2}" y2="{:.2}" stroke="#999999"/>"##,
                margin + h
            );
        }
        for r in 1..spec.rows {
            let y = margin + h * f64::from(r) / rows;
            let _ = writeln!(
                s,
                r##"    <line x1="{margin}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999999"/>"##,
                margin + w
            );
        }
    }
    for cell in spec.cells() {
        let x = margin + w * f64::from(cell.col) / cols + 4.0;
        let y = margin + h * (rows - f64::from(cell.row)) / rows - 4.0;
        let _ = writeln!(
            s,
            r##"    <text class="cell-label" x="{x:.2}" y="{y:.2}" font-size="11" fill="#666666">{}</text>"##,
            cell.label()
        );
    }
    s.push_str("  </g>\n");

    for (i, t) in traces.iter().enumerate() {
        let ball = t.object_type == ObjectType::Ball;
        let (width, dash) = if ball {
            (3.0, r#" stroke-dasharray="8,4""#)
        } else {
            (1.5, "")
        };
        let _ = writeln!(
            s,
            r#"  <g class="trace" data-object="{}" data-type="{}">"#,
            xml_escape(&t.object_id),
            t.object_type.as_str()
        );
        for pair in t.points.windows(2) {
            let (a, b) = (pair[0].point, pair[1].point);
            let _ = writeln!(
                s,
                r#"    <line class="arrow" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="{width}"{dash} marker-end="url(#head{i})"/>"#,
                sx(a),
                sy(a),
                sx(b),
                sy(b),
                colors[i]
            );
        }
        for p in &t.points {
            let shape_r = if ball { 5.0 } else { 3.5 };
            let _ = writeln!(
                s,
                r#"    <circle class="event" cx="{:.2}" cy="{:.2}" r="{shape_r}" fill="{}"><title>{} {} ({})</title></circle>"#,
                sx(p.point),
                sy(p.point),
                colors[i],
                xml_escape(&p.event_id),
                xml_escape(&p.activity),
                p.cell.label()
            );
        }
        s.push_str("  </g>\n");
    }

    let ly = margin * 2.0 + h;
    s.push_str("  <g class=\"legend\">\n");
    for (i, t) in traces.iter().enumerate() {
        let y = ly + 18.0 * i as f64;
        let dash = if t.object_type == ObjectType::Ball {
            r#" stroke-dasharray="8,4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"    <line x1="{margin}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"{dash}/>"#,
            margin + 30.0,
            colors[i]
        );
        let _ = writeln!(
            s,
            r#"    <text x="{:.2}" y="{:.2}" font-size="12">{} ({})</text>"#,
            margin + 38.0,
            y + 4.0,
            xml_escape(&t.object_id),
            t.object_type.as_str()
        );
    }
    s.push_str("  </g>\n</svg>\n");
    Ok(s)
}
