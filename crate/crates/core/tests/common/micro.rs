//! Micro-logs and a brute-force directly-follows counter.

use std::collections::BTreeSet;

use chrono::Duration;

use pitchlog::attrs::Attrs;
use pitchlog::mining::{discover_ocdfg, OcDfg, TypeDfg};
use pitchlog::ocel::{
    default_epoch, ObjectType, OcelEvent, OcelLog, OcelObject, Qualifier, Relation,
};

pub const OBJECTS: [(&str, ObjectType); 3] = [
    ("o1", ObjectType::Ball),
    ("o2", ObjectType::Player),
    ("o3", ObjectType::Player),
];
pub const ACTIVITIES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];

/// Event i carries `acts[i]` and relates to the objects whose bits are set in
/// `masks[i]`. Times are strictly increasing; events are stored in reverse
/// so discovery has to order them itself.
pub fn micro_log(acts: &[usize], masks: &[u8]) -> OcelLog {
    let mut events: Vec<OcelEvent> = acts
        .iter()
        .zip(masks)
        .enumerate()
        .map(|(i, (&a, &m))| OcelEvent {
            id: format!("e{i}"),
            activity: ACTIVITIES[a].to_string(),
            time: default_epoch(0) + Duration::seconds(i as i64),
            attrs: Attrs::new(),
            relations: OBJECTS
                .iter()
                .enumerate()
                .filter(|(k, _)| m & (1 << k) != 0)
                .map(|(_, (id, _))| Relation {
                    object_id: id.to_string(),
                    qualifier: Qualifier::Ball,
                })
                .collect(),
        })
        .collect();
    events.reverse();
    OcelLog {
        objects: OBJECTS
            .iter()
            .map(|(id, t)| OcelObject {
                id: id.to_string(),
                object_type: *t,
                attrs: Attrs::new(),
            })
            .collect(),
        events,
        ..OcelLog::default()
    }
}

/// Counts a→b for every pair of events i<j sharing an object with no event
/// in between that also involves it.
pub fn brute_force(acts: &[usize], masks: &[u8]) -> OcDfg {
    let mut out = OcDfg {
        types: [ObjectType::Ball, ObjectType::Player]
            .into_iter()
            .map(|t| (t, TypeDfg::default()))
            .collect(),
    };
    let n = acts.len();
    for (k, (_, t)) in OBJECTS.iter().enumerate() {
        let has = |i: usize| masks[i] & (1 << k) != 0;
        let g = out.types.get_mut(t).unwrap();
        let act = |i: usize| ACTIVITIES[acts[i]].to_string();
        let mut any = false;
        for i in 0..n {
            if !has(i) {
                continue;
            }
            any = true;
            *g.nodes.entry(act(i)).or_default() += 1;
            if (0..i).all(|p| !has(p)) {
                *g.starts.entry(act(i)).or_default() += 1;
            }
            if (i + 1..n).all(|p| !has(p)) {
                *g.ends.entry(act(i)).or_default() += 1;
            }
            for j in i + 1..n {
                if has(j) && (i + 1..j).all(|p| !has(p)) {
                    *g.edges.entry((act(i), act(j))).or_default() += 1;
                }
            }
        }
        g.objects += usize::from(any);
    }
    out
}

pub fn types() -> BTreeSet<ObjectType> {
    BTreeSet::from([ObjectType::Ball, ObjectType::Player])
}

/// Calls `f` for every assignment of `n` digits in base `base`.
pub fn for_each_tuple(n: usize, base: usize, mut f: impl FnMut(&[usize])) {
    let mut digits = vec![0usize; n];
    loop {
        f(&digits);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            digits[i] += 1;
            if digits[i] < base {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Runs discovery and the oracle on every log of the family; returns
/// (logs checked, mismatches).
pub fn check_family(max_events: usize, activities: usize, distinct_labels: bool) -> (usize, usize) {
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for n in 0..=max_events {
        let choices = if distinct_labels { 8 } else { activities * 8 };
        for_each_tuple(n, choices, |choice| {
            let acts: Vec<usize> = if distinct_labels {
                (0..n).collect()
            } else {
                choice.iter().map(|c| c / 8).collect()
            };
            let masks: Vec<u8> = choice.iter().map(|c| (c % 8) as u8).collect();
            let got = discover_ocdfg(&micro_log(&acts, &masks), &types());
            mismatches += usize::from(got != brute_force(&acts, &masks));
            checked += 1;
        });
    }
    (checked, mismatches)
}
