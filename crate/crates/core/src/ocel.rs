//! Object-centric event log model, relation wiring and OCEL 2.0 JSON I/O.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Duration, NaiveDate, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::attrs::{AttrValue, Attrs};
use crate::derive::{ActivityEvent, EventClass, PlayerRole};
use crate::error::{Error, Result};
use crate::ingest::Side;
use crate::possession::PossessionSpan;
use crate::spatial::{GridCell, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectType {
    Match,
    Team,
    Player,
    Possession,
    GridPosition,
    Ball,
}

impl ObjectType {
    pub const ALL: [ObjectType; 6] = [
        ObjectType::Match,
        ObjectType::Team,
        ObjectType::Player,
        ObjectType::Possession,
        ObjectType::GridPosition,
        ObjectType::Ball,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectType::Match => "match",
            ObjectType::Team => "team",
            ObjectType::Player => "player",
            ObjectType::Possession => "possession",
            ObjectType::GridPosition => "grid_position",
            ObjectType::Ball => "ball",
        }
    }
}

impl fmt::Display for ObjectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObjectType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ObjectType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown object type `{s}`")))
    }
}

/// Parses a comma-separated list of object types.
pub fn parse_object_types(list: &str) -> Result<BTreeSet<ObjectType>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    Match,
    Team,
    ExecutingPlayer,
    ReceivingPlayer,
    Possession,
    AtCell,
    FromCell,
    ToCell,
    Ball,
}

impl Qualifier {
    const ALL: [Qualifier; 9] = [
        Qualifier::Match,
        Qualifier::Team,
        Qualifier::ExecutingPlayer,
        Qualifier::ReceivingPlayer,
        Qualifier::Possession,
        Qualifier::AtCell,
        Qualifier::FromCell,
        Qualifier::ToCell,
        Qualifier::Ball,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Qualifier::Match => "match",
            Qualifier::Team => "team",
            Qualifier::ExecutingPlayer => "executing_player",
            Qualifier::ReceivingPlayer => "receiving_player",
            Qualifier::Possession => "possession",
            Qualifier::AtCell => "at_cell",
            Qualifier::FromCell => "from_cell",
            Qualifier::ToCell => "to_cell",
            Qualifier::Ball => "ball",
        }
    }
}

impl FromStr for Qualifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Qualifier::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown qualifier `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub object_id: String,
    pub qualifier: Qualifier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcelObject {
    pub id: String,
    pub object_type: ObjectType,
    pub attrs: Attrs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcelEvent {
    pub id: String,
    pub activity: String,
    pub time: DateTime<Utc>,
    pub attrs: Attrs,
    pub relations: Vec<Relation>,
}

impl OcelEvent {
    pub fn class(&self) -> Option<EventClass> {
        self.attrs
            .get("class")
            .and_then(AttrValue::as_str)
            .and_then(EventClass::parse)
    }

    pub fn related(&self, qualifier: Qualifier) -> impl Iterator<Item = &str> {
        self.relations
            .iter()
            .filter(move |r| r.qualifier == qualifier)
            .map(|r| r.object_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDecl {
    pub name: String,
    pub type_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub attributes: Vec<AttributeDecl>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OcelLog {
    pub object_types: Vec<TypeDecl>,
    pub event_types: Vec<TypeDecl>,
    pub objects: Vec<OcelObject>,
    pub events: Vec<OcelEvent>,
}

impl OcelLog {
    pub fn object(&self, id: &str) -> Option<&OcelObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_index(&self) -> BTreeMap<&str, &OcelObject> {
        self.objects.iter().map(|o| (o.id.as_str(), o)).collect()
    }

    /// Recomputes the declared attribute schemas from the content.
    pub fn refresh_schemas(&mut self) {
        let mut objects: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for o in &self.objects {
            let decl = objects
                .entry(o.object_type.as_str().to_string())
                .or_default();
            for (k, v) in &o.attrs {
                decl.entry(k.clone())
                    .or_insert_with(|| v.type_name().to_string());
            }
        }
        let mut events: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for e in &self.events {
            let decl = events.entry(e.activity.clone()).or_default();
            for (k, v) in &e.attrs {
                decl.entry(k.clone())
                    .or_insert_with(|| v.type_name().to_string());
            }
        }
        let to_decls = |m: BTreeMap<String, BTreeMap<String, String>>| {
            m.into_iter()
                .map(|(name, attrs)| TypeDecl {
                    name,
                    attributes: attrs
                        .into_iter()
                        .map(|(name, type_name)| AttributeDecl { name, type_name })
                        .collect(),
                })
                .collect()
        };
        self.object_types = to_decls(objects);
        self.event_types = to_decls(events);
    }

    fn sort_events(&mut self) {
        self.events
            .sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
    }
}

/// How team, player, ball and grid objects are shared across matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityScope {
    /// One Home/Away team pair, one ball and one grid for the whole log;
    /// players identified by label.
    #[default]
    Global,
    /// Separate team, player, ball and grid objects per match.
    PerMatch,
}

impl FromStr for IdentityScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(IdentityScope::Global),
            "per-match" => Ok(IdentityScope::PerMatch),
            other => Err(Error::Config(format!("unknown identity scope `{other}`"))),
        }
    }
}

impl IdentityScope {
    fn scoped(&self, match_id: &str, local: &str) -> String {
        match self {
            IdentityScope::Global => local.to_string(),
            IdentityScope::PerMatch => format!("{match_id}/{local}"),
        }
    }

    pub fn team_id(&self, match_id: &str, side: Side) -> String {
        self.scoped(match_id, side.as_str())
    }

    pub fn player_id(&self, match_id: &str, label: &str) -> String {
        self.scoped(match_id, label)
    }

    pub fn ball_id(&self, match_id: &str) -> String {
        self.scoped(match_id, "ball")
    }

    pub fn cell_id(&self, match_id: &str, cell: GridCell) -> String {
        self.scoped(match_id, &cell.label())
    }
}

/// Everything needed to materialize one match in a log.
#[derive(Debug, Clone)]
pub struct MatchLog {
    pub match_id: String,
    pub epoch: DateTime<Utc>,
    pub rosters: BTreeMap<Side, BTreeSet<String>>,
    pub spans: Vec<PossessionSpan>,
    pub events: Vec<ActivityEvent>,
}

/// Synthetic kick-off timestamp for the match at `index` in load order.
pub fn default_epoch(index: usize) -> DateTime<Utc> {
    let base = NaiveDate::from_ymd_opt(2000, 1, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time")
        .and_utc();
    base + Duration::days(index as i64)
}

pub fn absolute_time(epoch: DateTime<Utc>, time_s: f64) -> DateTime<Utc> {
    epoch + Duration::milliseconds((time_s * 1000.0).round() as i64)
}

pub fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

struct ObjectSet {
    objects: Vec<OcelObject>,
    seen: HashSet<String>,
}

impl ObjectSet {
    fn add(&mut self, id: String, object_type: ObjectType, attrs: Attrs) -> Result<()> {
        if !self.seen.insert(id.clone()) {
            return Err(Error::DuplicateObject(id));
        }
        self.objects.push(OcelObject {
            id,
            object_type,
            attrs,
        });
        Ok(())
    }

    /// Adds unless an object with the same id already exists.
    fn share(&mut self, id: String, object_type: ObjectType, attrs: Attrs) {
        if !self.seen.contains(&id) {
            self.seen.insert(id.clone());
            self.objects.push(OcelObject {
                id,
                object_type,
                attrs,
            });
        }
    }
}

pub fn build_objects(
    matches: &[MatchLog],
    scope: IdentityScope,
    grid: &GridSpec,
) -> Result<Vec<OcelObject>> {
    let mut set = ObjectSet {
        objects: Vec::new(),
        seen: HashSet::new(),
    };
    for m in matches {
        let mut attrs = Attrs::new();
        attrs.insert("epoch".into(), format_time(&m.epoch).into());
        set.add(m.match_id.clone(), ObjectType::Match, attrs)?;
    }
    let shared = scope == IdentityScope::Global;
    for (i, m) in matches.iter().enumerate() {
        let put = |set: &mut ObjectSet, id: String, t: ObjectType, attrs: Attrs| {
            if shared {
                set.share(id, t, attrs);
                Ok(())
            } else {
                set.add(id, t, attrs)
            }
        };
        if shared && i > 0 {
            // teams, ball and grid already exist; only new players may appear
        } else {
            for side in Side::BOTH {
                let mut attrs = Attrs::new();
                attrs.insert("side".into(), side.as_str().into());
                put(
                    &mut set,
                    scope.team_id(&m.match_id, side),
                    ObjectType::Team,
                    attrs,
                )?;
            }
            put(
                &mut set,
                scope.ball_id(&m.match_id),
                ObjectType::Ball,
                Attrs::new(),
            )?;
            for cell in grid.cells() {
                let mut attrs = Attrs::new();
                attrs.insert("col".into(), u32::from(cell.col).into());
                attrs.insert("row".into(), u32::from(cell.row).into());
                put(
                    &mut set,
                    scope.cell_id(&m.match_id, cell),
                    ObjectType::GridPosition,
                    attrs,
                )?;
            }
        }
        for (side, roster) in &m.rosters {
            for label in roster {
                let mut attrs = Attrs::new();
                attrs.insert("side".into(), side.as_str().into());
                put(
                    &mut set,
                    scope.player_id(&m.match_id, label),
                    ObjectType::Player,
                    attrs,
                )?;
            }
        }
        for span in &m.spans {
            let mut attrs = Attrs::new();
            attrs.insert("match".into(), m.match_id.as_str().into());
            attrs.insert("team".into(), span.team.as_str().into());
            attrs.insert("outcome".into(), span.outcome.as_str().into());
            attrs.insert("period".into(), u32::from(span.period).into());
            attrs.insert("start_s".into(), span.start_time_s.into());
            attrs.insert("end_s".into(), span.end_time_s.into());
            set.add(span.id.clone(), ObjectType::Possession, attrs)?;
        }
    }
    Ok(set.objects)
}

fn event_relations(m: &MatchLog, e: &ActivityEvent, scope: IdentityScope) -> Vec<Relation> {
    let rel = |object_id: String, qualifier| Relation {
        object_id,
        qualifier,
    };
    let mut out = vec![rel(m.match_id.clone(), Qualifier::Match)];
    if let Some(team) = e.team {
        out.push(rel(scope.team_id(&m.match_id, team), Qualifier::Team));
    }
    for (player, role) in &e.players {
        let q = match role {
            PlayerRole::Executing => Qualifier::ExecutingPlayer,
            PlayerRole::Receiving => Qualifier::ReceivingPlayer,
        };
        out.push(rel(scope.player_id(&m.match_id, player), q));
    }
    if let Some(p) = e.attr_str("possession_id") {
        out.push(rel(p.to_string(), Qualifier::Possession));
    }
    match e.class {
        EventClass::GameBased | EventClass::Ball => {
            if let Some(cell) = e.cell {
                out.push(rel(scope.cell_id(&m.match_id, cell), Qualifier::AtCell));
            }
            if e.class == EventClass::Ball {
                out.push(rel(scope.ball_id(&m.match_id), Qualifier::Ball));
            }
        }
        EventClass::PositionBased => {
            for (attr, q) in [
                ("from_cell", Qualifier::FromCell),
                ("to_cell", Qualifier::ToCell),
            ] {
                if let Some(label) = e.attr_str(attr) {
                    out.push(rel(scope.scoped(&m.match_id, label), q));
                }
            }
        }
    }
    out
}

/// Wires enriched events to objects and assembles the log. Fails on the
/// first relation to an unknown object.
pub fn build_log(
    matches: &[MatchLog],
    objects: Vec<OcelObject>,
    scope: IdentityScope,
) -> Result<OcelLog> {
    let known: HashSet<&str> = objects.iter().map(|o| o.id.as_str()).collect();
    let mut events = Vec::new();
    for m in matches {
        for e in &m.events {
            let relations = event_relations(m, e, scope);
            if let Some(r) = relations
                .iter()
                .find(|r| !known.contains(r.object_id.as_str()))
            {
                return Err(Error::UnknownObject {
                    event: e.event_id.clone(),
                    object: r.object_id.clone(),
                });
            }
            let mut attrs = e.attrs.clone();
            attrs.insert("class".into(), e.class.as_str().into());
            attrs.insert("component".into(), e.component.as_str().into());
            attrs.insert("period".into(), u32::from(e.period).into());
            attrs.insert("time_s".into(), e.time_s.into());
            if let Some(team) = e.team {
                attrs.insert("team".into(), team.as_str().into());
            }
            if let Some(p) = e.position {
                attrs.insert("x".into(), p.x.into());
                attrs.insert("y".into(), p.y.into());
            }
            if let Some(cell) = e.cell {
                attrs.insert("cell".into(), cell.label().into());
            }
            events.push(OcelEvent {
                id: e.event_id.clone(),
                activity: e.activity.clone(),
                time: absolute_time(m.epoch, e.time_s),
                attrs,
                relations,
            });
        }
    }
    let mut log = OcelLog {
        object_types: Vec::new(),
        event_types: Vec::new(),
        objects,
        events,
    };
    log.sort_events();
    log.refresh_schemas();
    Ok(log)
}

/// Structural checks over a finished log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ConformanceReport {
    pub duplicate_objects: usize,
    pub unresolved_relations: usize,
    pub out_of_order_events: usize,
    pub ball_events: usize,
    pub ball_events_with_ball: usize,
    pub position_events: usize,
    pub position_events_conformant: usize,
}

impl ConformanceReport {
    pub fn is_conformant(&self) -> bool {
        self.duplicate_objects == 0
            && self.unresolved_relations == 0
            && self.out_of_order_events == 0
            && self.ball_events == self.ball_events_with_ball
            && self.position_events == self.position_events_conformant
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.duplicate_objects > 0 {
            out.push(format!("{} duplicate object ids", self.duplicate_objects));
        }
        if self.unresolved_relations > 0 {
            out.push(format!(
                "{} unresolved relationships",
                self.unresolved_relations
            ));
        }
        if self.out_of_order_events > 0 {
            out.push(format!(
                "{} events out of time order",
                self.out_of_order_events
            ));
        }
        if self.ball_events != self.ball_events_with_ball {
            out.push(format!(
                "{} of {} ball events lack a ball relation",
                self.ball_events - self.ball_events_with_ball,
                self.ball_events
            ));
        }
        if self.position_events != self.position_events_conformant {
            out.push(format!(
                "{} of {} position events lack exactly one player and two cells",
                self.position_events - self.position_events_conformant,
                self.position_events
            ));
        }
        out
    }
}

pub fn check_conformance(log: &OcelLog) -> ConformanceReport {
    let mut report = ConformanceReport::default();
    let mut ids: HashSet<&str> = HashSet::new();
    let mut types: BTreeMap<&str, ObjectType> = BTreeMap::new();
    for o in &log.objects {
        if !ids.insert(&o.id) {
            report.duplicate_objects += 1;
        }
        types.insert(&o.id, o.object_type);
    }
    for (i, e) in log.events.iter().enumerate() {
        if i > 0 {
            let prev = &log.events[i - 1];
            if (prev.time, &prev.id) > (e.time, &e.id) {
                report.out_of_order_events += 1;
            }
        }
        report.unresolved_relations += e
            .relations
            .iter()
            .filter(|r| !types.contains_key(r.object_id.as_str()))
            .count();
        let count_type = |t: ObjectType| {
            e.relations
                .iter()
                .filter(|r| types.get(r.object_id.as_str()) == Some(&t))
                .count()
        };
        match e.class() {
            Some(EventClass::Ball) => {
                report.ball_events += 1;
                if count_type(ObjectType::Ball) >= 1 {
                    report.ball_events_with_ball += 1;
                }
            }
            Some(EventClass::PositionBased) => {
                report.position_events += 1;
                let cells =
                    e.related(Qualifier::FromCell).count() + e.related(Qualifier::ToCell).count();
                if count_type(ObjectType::Player) == 1
                    && cells == 2
                    && count_type(ObjectType::GridPosition) == 2
                {
                    report.position_events_conformant += 1;
                }
            }
            _ => {}
        }
    }
    report
}

fn attrs_to_json(attrs: &Attrs, with_time: bool) -> Value {
    Value::Array(
        attrs
            .iter()
            .map(|(name, value)| {
                let mut m = Map::new();
                m.insert("name".into(), Value::String(name.clone()));
                if with_time {
                    m.insert(
                        "time".into(),
                        Value::String("1970-01-01T00:00:00.000Z".into()),
                    );
                }
                m.insert("value".into(), serde_json::to_value(value).expect("scalar"));
                Value::Object(m)
            })
            .collect(),
    )
}

fn decls_to_json(decls: &[TypeDecl]) -> Value {
    Value::Array(
        decls
            .iter()
            .map(|d| {
                json!({
                    "name": d.name,
                    "attributes": d.attributes.iter()
                        .map(|a| json!({"name": a.name, "type": a.type_name}))
                        .collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

pub fn to_json(log: &OcelLog) -> Value {
    let objects: Vec<Value> = log
        .objects
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "type": o.object_type.as_str(),
                "attributes": attrs_to_json(&o.attrs, true),
            })
        })
        .collect();
    let events: Vec<Value> = log
        .events
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "type": e.activity,
                "time": format_time(&e.time),
                "attributes": attrs_to_json(&e.attrs, false),
                "relationships": e.relations.iter()
                    .map(|r| json!({"objectId": r.object_id, "qualifier": r.qualifier.as_str()}))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "objectTypes": decls_to_json(&log.object_types),
        "eventTypes": decls_to_json(&log.event_types),
        "objects": objects,
        "events": events,
    })
}

pub fn to_json_string(log: &OcelLog) -> String {
    let mut s = serde_json::to_string(&to_json(log)).expect("serializable");
    s.push('\n');
    s
}

pub fn write_ocel_json(log: &OcelLog, path: &Path) -> Result<()> {
    std::fs::write(path, to_json_string(log)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_ocel_json(path: &Path) -> Result<OcelLog> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_json_str(&text).map_err(|e| e.in_file(path))
}

pub fn from_json_str(text: &str) -> Result<OcelLog> {
    let value: Value = serde_json::from_str(text)?;
    from_json(&value)
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.as_object()
        .ok_or_else(|| schema(path, "expected an object"))?
        .get(key)
        .ok_or_else(|| schema(path, format!("missing field `{key}`")))
}

fn str_field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected a string"))
}

fn array_field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Vec<Value>> {
    field(obj, key, path)?
        .as_array()
        .ok_or_else(|| schema(&format!("{path}.{key}"), "expected an array"))
}

fn read_decls(root: &Value, key: &str) -> Result<Vec<TypeDecl>> {
    array_field(root, key, "$")?
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let path = format!("$.{key}[{i}]");
            let attributes = array_field(d, "attributes", &path)?
                .iter()
                .enumerate()
                .map(|(j, a)| {
                    let apath = format!("{path}.attributes[{j}]");
                    Ok(AttributeDecl {
                        name: str_field(a, "name", &apath)?.to_string(),
                        type_name: str_field(a, "type", &apath)?.to_string(),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(TypeDecl {
                name: str_field(d, "name", &path)?.to_string(),
                attributes,
            })
        })
        .collect()
}

fn read_value(v: &Value, declared: Option<&str>, path: &str) -> Result<AttrValue> {
    let bad = || {
        schema(
            path,
            format!("value does not match declared type {declared:?}"),
        )
    };
    Ok(match declared {
        Some("float") => AttrValue::Float(v.as_f64().ok_or_else(bad)?),
        Some("integer") => AttrValue::Int(v.as_i64().ok_or_else(bad)?),
        Some("boolean") => AttrValue::Bool(v.as_bool().ok_or_else(bad)?),
        Some("string") => AttrValue::Str(v.as_str().ok_or_else(bad)?.to_string()),
        _ => match v {
            Value::Bool(b) => AttrValue::Bool(*b),
            Value::Number(n) if n.is_i64() => AttrValue::Int(n.as_i64().expect("i64")),
            Value::Number(n) => AttrValue::Float(n.as_f64().ok_or_else(bad)?),
            Value::String(s) => AttrValue::Str(s.clone()),
            _ => return Err(schema(path, "attribute values must be scalars")),
        },
    })
}

fn read_attrs(item: &Value, path: &str, decl: Option<&TypeDecl>) -> Result<Attrs> {
    let mut attrs = Attrs::new();
    let Some(list) = item.get("attributes") else {
        return Ok(attrs);
    };
    let list = list
        .as_array()
        .ok_or_else(|| schema(&format!("{path}.attributes"), "expected an array"))?;
    for (j, a) in list.iter().enumerate() {
        let apath = format!("{path}.attributes[{j}]");
        let name = str_field(a, "name", &apath)?;
        let declared = decl
            .and_then(|d| d.attributes.iter().find(|x| x.name == name))
            .map(|x| x.type_name.as_str());
        let value = read_value(
            field(a, "value", &apath)?,
            declared,
            &format!("{apath}.value"),
        )?;
        attrs.insert(name.to_string(), value);
    }
    Ok(attrs)
}

fn parse_time(s: &str, path: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| schema(path, format!("invalid ISO-8601 time `{s}`: {e}")))
}

/// Reads and validates an OCEL 2.0 JSON document. Relationship targets must
/// resolve to declared objects.
pub fn from_json(root: &Value) -> Result<OcelLog> {
    let object_types = read_decls(root, "objectTypes")?;
    let event_types = read_decls(root, "eventTypes")?;

    let mut objects = Vec::new();
    for (i, o) in array_field(root, "objects", "$")?.iter().enumerate() {
        let path = format!("$.objects[{i}]");
        let type_name = str_field(o, "type", &path)?;
        let object_type: ObjectType = type_name.parse().map_err(|_| {
            schema(
                &format!("{path}.type"),
                format!("unknown object type `{type_name}`"),
            )
        })?;
        let decl = object_types.iter().find(|d| d.name == type_name);
        objects.push(OcelObject {
            id: str_field(o, "id", &path)?.to_string(),
            object_type,
            attrs: read_attrs(o, &path, decl)?,
        });
    }
    let mut ids = HashSet::new();
    for (i, o) in objects.iter().enumerate() {
        if !ids.insert(o.id.as_str()) {
            return Err(schema(
                &format!("$.objects[{i}].id"),
                format!("duplicate object id `{}`", o.id),
            ));
        }
    }

    let mut events = Vec::new();
    for (i, e) in array_field(root, "events", "$")?.iter().enumerate() {
        let path = format!("$.events[{i}]");
        let activity = str_field(e, "type", &path)?;
        let decl = event_types.iter().find(|d| d.name == activity);
        let time = parse_time(str_field(e, "time", &path)?, &format!("{path}.time"))?;
        let mut relations = Vec::new();
        if let Some(rels) = e.get("relationships") {
            let rels = rels
                .as_array()
                .ok_or_else(|| schema(&format!("{path}.relationships"), "expected an array"))?;
            for (j, r) in rels.iter().enumerate() {
                let rpath = format!("{path}.relationships[{j}]");
                let object_id = str_field(r, "objectId", &rpath)?;
                if !ids.contains(object_id) {
                    return Err(schema(
                        &format!("{rpath}.objectId"),
                        format!("unknown object `{object_id}`"),
                    ));
                }
                let q = str_field(r, "qualifier", &rpath)?;
                let qualifier = q.parse().map_err(|_| {
                    schema(
                        &format!("{rpath}.qualifier"),
                        format!("unknown qualifier `{q}`"),
                    )
                })?;
                relations.push(Relation {
                    object_id: object_id.to_string(),
                    qualifier,
                });
            }
        }
        events.push(OcelEvent {
            id: str_field(e, "id", &path)?.to_string(),
            activity: activity.to_string(),
            time,
            attrs: read_attrs(e, &path, decl)?,
            relations,
        });
    }
    Ok(OcelLog {
        object_types,
        event_types,
        objects,
        events,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LogStats {
    pub events: usize,
    pub events_per_activity: BTreeMap<String, usize>,
    pub events_per_class: BTreeMap<String, usize>,
    pub events_per_component: BTreeMap<String, usize>,
    pub objects: usize,
    pub objects_per_type: BTreeMap<String, usize>,
    pub possessions: usize,
    pub matches: usize,
}

impl LogStats {
    /// Events excluding decomposed end events (one per provider record plus
    /// movement events).
    pub fn events_without_end_events(&self) -> usize {
        self.events - self.events_per_component.get("end").copied().unwrap_or(0)
    }
}

pub fn stats(log: &OcelLog) -> LogStats {
    let mut s = LogStats {
        events: log.events.len(),
        objects: log.objects.len(),
        ..LogStats::default()
    };
    for t in ObjectType::ALL {
        s.objects_per_type.insert(t.as_str().to_string(), 0);
    }
    for o in &log.objects {
        *s.objects_per_type
            .entry(o.object_type.as_str().to_string())
            .or_default() += 1;
    }
    s.possessions = s.objects_per_type[ObjectType::Possession.as_str()];
    s.matches = s.objects_per_type[ObjectType::Match.as_str()];
    for e in &log.events {
        *s.events_per_activity.entry(e.activity.clone()).or_default() += 1;
        let class = e
            .attrs
            .get("class")
            .map_or("unknown".to_string(), |v| v.to_string());
        *s.events_per_class.entry(class).or_default() += 1;
        let component = e
            .attrs
            .get("component")
            .map_or("unknown".to_string(), |v| v.to_string());
        *s.events_per_component.entry(component).or_default() += 1;
    }
    s
}

impl fmt::Display for LogStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "events\t{}", self.events)?;
        writeln!(
            f,
            "events_without_end_events\t{}",
            self.events_without_end_events()
        )?;
        for (k, v) in &self.events_per_component {
            writeln!(f, "events.component.{k}\t{v}")?;
        }
        for (k, v) in &self.events_per_class {
            writeln!(f, "events.class.{k}\t{v}")?;
        }
        for (k, v) in &self.events_per_activity {
            writeln!(f, "events.activity.{k}\t{v}")?;
        }
        writeln!(f, "objects\t{}", self.objects)?;
        for (k, v) in &self.objects_per_type {
            writeln!(f, "objects.type.{k}\t{v}")?;
        }
        writeln!(f, "possessions\t{}", self.possessions)?;
        write!(f, "matches\t{}", self.matches)
    }
}
