//! Log filtering and object-centric directly-follows discovery.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ocel::{ObjectType, OcelLog};

/// One `attr=value` test against an object attribute, compared on the
/// attribute's display form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub attribute: String,
    pub value: String,
}

/// Keeps events related to at least one object of `object_type` that
/// satisfies every condition. `object_type: None` is the constant-true
/// predicate. `retain: None` keeps relations of all types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LogFilter {
    pub object_type: Option<ObjectType>,
    pub conditions: Vec<Condition>,
    pub retain: Option<BTreeSet<ObjectType>>,
}

/// A parsed `--where type.attr=value` clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhereClause {
    pub object_type: ObjectType,
    pub condition: Condition,
}

impl FromStr for WhereClause {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("expected <type>.<attr>=<value>, got `{s}`"));
        let (lhs, value) = s.split_once('=').ok_or_else(bad)?;
        let (t, attribute) = lhs.split_once('.').ok_or_else(bad)?;
        if attribute.is_empty() {
            return Err(bad());
        }
        Ok(WhereClause {
            object_type: t.trim().parse()?,
            condition: Condition {
                attribute: attribute.trim().to_string(),
                value: value.trim().to_string(),
            },
        })
    }
}

impl LogFilter {
    /// Combines clauses into one filter. All clauses must name the same
    /// object type.
    pub fn from_clauses(
        clauses: &[WhereClause],
        retain: Option<BTreeSet<ObjectType>>,
    ) -> Result<Self> {
        let types: BTreeSet<ObjectType> = clauses.iter().map(|c| c.object_type).collect();
        if types.len() > 1 {
            return Err(Error::Config(
                "all --where clauses must refer to the same object type".into(),
            ));
        }
        Ok(LogFilter {
            object_type: types.into_iter().next(),
            conditions: clauses.iter().map(|c| c.condition.clone()).collect(),
            retain,
        })
    }
}

pub fn filter_log(log: &OcelLog, filter: &LogFilter) -> Result<OcelLog> {
    let selected: Option<HashSet<&str>> = match filter.object_type {
        None => None,
        Some(t) => {
            let type_decl = log.object_types.iter().find(|d| d.name == t.as_str());
            for c in &filter.conditions {
                let declared =
                    type_decl.is_some_and(|d| d.attributes.iter().any(|a| a.name == c.attribute));
                let present = log
                    .objects
                    .iter()
                    .any(|o| o.object_type == t && o.attrs.contains_key(&c.attribute));
                if !declared && !present {
                    return Err(Error::UnknownAttribute {
                        object_type: t.as_str().to_string(),
                        attribute: c.attribute.clone(),
                    });
                }
            }
            Some(
                log.objects
                    .iter()
                    .filter(|o| o.object_type == t)
                    .filter(|o| {
                        filter.conditions.iter().all(|c| {
                            o.attrs
                                .get(&c.attribute)
                                .is_some_and(|v| v.to_string() == c.value)
                        })
                    })
                    .map(|o| o.id.as_str())
                    .collect(),
            )
        }
    };

    let types: HashMap<&str, ObjectType> = log
        .objects
        .iter()
        .map(|o| (o.id.as_str(), o.object_type))
        .collect();
    let originally_referenced: HashSet<&str> = log
        .events
        .iter()
        .flat_map(|e| e.relations.iter().map(|r| r.object_id.as_str()))
        .collect();

    let mut events = Vec::new();
    for e in &log.events {
        let keep = match &selected {
            None => true,
            Some(ids) => e
                .relations
                .iter()
                .any(|r| ids.contains(r.object_id.as_str())),
        };
        if !keep {
            continue;
        }
        let mut e = e.clone();
        if let Some(retain) = &filter.retain {
            e.relations.retain(|r| {
                types
                    .get(r.object_id.as_str())
                    .is_some_and(|t| retain.contains(t))
            });
        }
        events.push(e);
    }

    let referenced: HashSet<&str> = events
        .iter()
        .flat_map(|e| e.relations.iter().map(|r| r.object_id.as_str()))
        .collect();
    let objects = log
        .objects
        .iter()
        .filter(|o| {
            referenced.contains(o.id.as_str()) || !originally_referenced.contains(o.id.as_str())
        })
        .filter(|o| {
            filter
                .retain
                .as_ref()
                .is_none_or(|r| r.contains(&o.object_type))
        })
        .cloned()
        .collect();

    let mut out = OcelLog {
        object_types: Vec::new(),
        event_types: Vec::new(),
        objects,
        events,
    };
    out.refresh_schemas();
    Ok(out)
}

/// Directly-follows counts for one object type.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TypeDfg {
    /// Trace positions per activity.
    pub nodes: BTreeMap<String, usize>,
    pub edges: BTreeMap<(String, String), usize>,
    pub starts: BTreeMap<String, usize>,
    pub ends: BTreeMap<String, usize>,
    /// Objects with at least one event.
    pub objects: usize,
}

impl TypeDfg {
    fn merge(mut self, other: TypeDfg) -> TypeDfg {
        for (k, v) in other.nodes {
            *self.nodes.entry(k).or_default() += v;
        }
        for (k, v) in other.edges {
            *self.edges.entry(k).or_default() += v;
        }
        for (k, v) in other.starts {
            *self.starts.entry(k).or_default() += v;
        }
        for (k, v) in other.ends {
            *self.ends.entry(k).or_default() += v;
        }
        self.objects += other.objects;
        self
    }

    fn from_trace(trace: &[&str]) -> TypeDfg {
        let mut g = TypeDfg::default();
        let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
            return g;
        };
        g.objects = 1;
        *g.starts.entry(first.to_string()).or_default() += 1;
        *g.ends.entry(last.to_string()).or_default() += 1;
        for a in trace {
            *g.nodes.entry(a.to_string()).or_default() += 1;
        }
        for w in trace.windows(2) {
            *g.edges
                .entry((w[0].to_string(), w[1].to_string()))
                .or_default() += 1;
        }
        g
    }

    pub fn edge(&self, from: &str, to: &str) -> usize {
        self.edges
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn successors<'a>(&'a self, from: &'a str) -> impl Iterator<Item = (&'a str, usize)> + 'a {
        self.edges
            .iter()
            .filter(move |((a, _), _)| a == from)
            .map(|((_, b), n)| (b.as_str(), *n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct OcDfg {
    pub types: BTreeMap<ObjectType, TypeDfg>,
}

impl OcDfg {
    pub fn is_empty(&self) -> bool {
        self.types.values().all(|g| g.nodes.is_empty())
    }

    pub fn activities(&self) -> BTreeSet<&str> {
        self.types
            .values()
            .flat_map(|g| g.nodes.keys().map(String::as_str))
            .collect()
    }
}

/// Per-object traces in log order (time, then event id). An event related
/// to the same object more than once appears once in its trace.
pub fn object_traces<'a>(
    log: &'a OcelLog,
    types: &BTreeSet<ObjectType>,
) -> BTreeMap<&'a str, (ObjectType, Vec<&'a str>)> {
    let type_of: HashMap<&str, ObjectType> = log
        .objects
        .iter()
        .filter(|o| types.contains(&o.object_type))
        .map(|o| (o.id.as_str(), o.object_type))
        .collect();
    let mut order: Vec<usize> = (0..log.events.len()).collect();
    order.sort_by(|&a, &b| {
        let (ea, eb) = (&log.events[a], &log.events[b]);
        ea.time.cmp(&eb.time).then_with(|| ea.id.cmp(&eb.id))
    });
    let mut traces: BTreeMap<&str, (ObjectType, Vec<&str>)> = BTreeMap::new();
    for i in order {
        let e = &log.events[i];
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for r in &e.relations {
            if let Some(&t) = type_of.get(r.object_id.as_str()) {
                if seen.insert(&r.object_id) {
                    traces
                        .entry(&r.object_id)
                        .or_insert_with(|| (t, Vec::new()))
                        .1
                        .push(&e.activity);
                }
            }
        }
    }
    traces
}

pub fn discover_ocdfg(log: &OcelLog, types: &BTreeSet<ObjectType>) -> OcDfg {
    let present: BTreeSet<ObjectType> = log.objects.iter().map(|o| o.object_type).collect();
    for t in types.difference(&present) {
        log::warn!("object type `{t}` does not occur in the log");
    }
    let traces = object_traces(log, types);
    let per_object: Vec<(ObjectType, TypeDfg)> = traces
        .par_iter()
        .map(|(_, (t, trace))| (*t, TypeDfg::from_trace(trace)))
        .collect();
    let mut dfg = OcDfg {
        types: types.iter().map(|t| (*t, TypeDfg::default())).collect(),
    };
    for (t, g) in per_object {
        let slot = dfg.types.entry(t).or_default();
        *slot = std::mem::take(slot).merge(g);
    }
    dfg
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TypeMetrics {
    pub nodes: usize,
    pub edges: usize,
    pub self_loops: usize,
    pub max_edge: Option<(String, String, usize)>,
    pub max_self_loop: Option<(String, usize)>,
}

/// Per-type summary. Ties on maxima resolve to the lexicographically first
/// edge.
pub fn dfg_metrics(g: &OcDfg) -> BTreeMap<ObjectType, TypeMetrics> {
    g.types
        .iter()
        .map(|(t, d)| {
            let mut m = TypeMetrics {
                nodes: d.nodes.len(),
                edges: d.edges.len(),
                ..TypeMetrics::default()
            };
            for ((a, b), &n) in &d.edges {
                if m.max_edge.as_ref().is_none_or(|(_, _, best)| n > *best) {
                    m.max_edge = Some((a.clone(), b.clone(), n));
                }
                if a == b {
                    m.self_loops += n;
                    if m.max_self_loop.as_ref().is_none_or(|(_, best)| n > *best) {
                        m.max_self_loop = Some((a.clone(), n));
                    }
                }
            }
            (*t, m)
        })
        .collect()
}
