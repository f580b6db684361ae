//! Interpretation checks: each applied edit's postconditions are evaluated
//! against the symbolic graph and against the observation from a viewpoint.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ids::NodeId;
use crate::scene::*;
use crate::task::edit::{apply_edits, CheckReport, Edit, EditStatus, Mismatch, Source, ViewNote};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown viewpoint {0}: not an agent or room")]
    UnknownViewpoint(NodeId),
}

/// Facts about one node the batch should have established, each tagged
/// with the index of the edit that last asserted it.
#[derive(Debug, Default, Clone)]
struct Expect {
    exists: Option<(bool, usize)>,
    parent: Option<(Relation, usize)>,
    states: BTreeMap<StateKey, (Option<StateValue>, usize)>,
    attrs: Option<(ObjectNode, usize)>,
}

fn expectations(edits: &[Edit], applied: &[bool]) -> BTreeMap<NodeId, Expect> {
    let mut facts: BTreeMap<NodeId, Expect> = BTreeMap::new();
    for (i, e) in edits.iter().enumerate() {
        if !applied.get(i).copied().unwrap_or(false) {
            continue;
        }
        match e {
            Edit::Add { object, relation, target } => {
                let f = facts.entry(object.id.clone()).or_default();
                f.exists = Some((true, i));
                f.parent = Some((Relation { kind: *relation, src: object.id.clone(), dst: target.clone() }, i));
                f.states = StateKey::ALL.iter().map(|k| (*k, (object.states.get(*k), i))).collect();
                f.attrs = Some((object.clone(), i));
            }
            Edit::Remove { object_id } => {
                facts.insert(object_id.clone(), Expect { exists: Some((false, i)), ..Default::default() });
                // Anything it carried was hoisted; its old location no longer holds.
                for f in facts.values_mut() {
                    if f.parent.as_ref().is_some_and(|(r, _)| &r.dst == object_id) {
                        f.parent = None;
                    }
                }
            }
            Edit::Replace { object_id, object } => {
                let mut f = facts.remove(object_id).unwrap_or_default();
                if &object.id != object_id {
                    facts.insert(object_id.clone(), Expect { exists: Some((false, i)), ..Default::default() });
                    for g in facts.values_mut() {
                        if let Some((r, _)) = g.parent.as_mut() {
                            if &r.dst == object_id {
                                r.dst = object.id.clone();
                            }
                        }
                    }
                    if let Some((r, _)) = f.parent.as_mut() {
                        r.src = object.id.clone();
                    }
                }
                f.exists = Some((true, i));
                f.states = StateKey::ALL.iter().map(|k| (*k, (object.states.get(*k), i))).collect();
                f.attrs = Some((object.clone(), i));
                facts.insert(object.id.clone(), f);
            }
            Edit::Move { object_id, relation, target } => {
                let f = facts.entry(object_id.clone()).or_default();
                f.parent = Some((Relation { kind: *relation, src: object_id.clone(), dst: target.clone() }, i));
            }
            Edit::SetState { object_id, key, value } => {
                let f = facts.entry(object_id.clone()).or_default();
                f.states.insert(*key, (*value, i));
            }
        }
    }
    facts
}

fn state_pred(id: &NodeId, key: StateKey, v: Option<StateValue>) -> String {
    match v {
        Some(v) => format!("{v}({id})"),
        None => format!("no {}({id})", key.as_str()),
    }
}

fn attrs_differ(a: &ObjectNode, b: &ObjectNode) -> Option<&'static str> {
    if a.category != b.category {
        Some("category")
    } else if a.display_name != b.display_name {
        Some("name")
    } else if a.affordances != b.affordances {
        Some("affordances")
    } else if a.lock != b.lock {
        Some("lock")
    } else if a.clue != b.clue {
        Some("clue")
    } else if a.color != b.color {
        Some("color")
    } else {
        None
    }
}

/// What the viewpoint shows of one object.
enum Seen<'a> {
    Object(&'a crate::scene::observe::VisibleObject),
    Door(&'a crate::scene::observe::DoorView),
    Not,
}

fn seen<'a>(obs: &'a Observation, id: &NodeId) -> Seen<'a> {
    if let Some(o) = obs.object(id) {
        Seen::Object(o)
    } else if let Some(d) = obs.doors.iter().find(|d| &d.door == id) {
        Seen::Door(d)
    } else {
        Seen::Not
    }
}

/// Checks the postconditions of every applied edit in `edits` (verdicts come
/// from `applied`, the report [`apply_edits`] returned) against `graph` and
/// against the observation from `viewpoint`, an agent or a room.
pub fn interpretation_check(
    graph: &SceneGraph,
    edits: &[Edit],
    applied: &CheckReport,
    viewpoint: &NodeId,
) -> Result<CheckReport, CheckError> {
    let obs = if graph.agent(viewpoint).is_some() {
        observe(graph, viewpoint).map_err(|_| CheckError::UnknownViewpoint(viewpoint.clone()))?
    } else if graph.room(viewpoint).is_some() {
        observe_room(graph, viewpoint).map_err(|_| CheckError::UnknownViewpoint(viewpoint.clone()))?
    } else {
        return Err(CheckError::UnknownViewpoint(viewpoint.clone()));
    };
    let ok: Vec<bool> = (0..edits.len())
        .map(|i| applied.verdicts.iter().any(|v| v.index == i && v.status == EditStatus::Applied))
        .collect();

    let mut report = CheckReport { verdicts: applied.verdicts.clone(), mismatches: Vec::new(), passed: false };
    let mut notes: BTreeMap<usize, ViewNote> = BTreeMap::new();
    let mut miss = |edit: usize, expected: String, observed: String, source: Source| {
        report.mismatches.push(Mismatch { edit, expected, observed, source });
    };

    for (id, f) in expectations(edits, &ok) {
        let agent_fact = graph.agent(&id).is_some();
        let node = graph.object(&id);

        // Graph side.
        let mut graph_ok = true;
        if let Some((want, i)) = f.exists {
            let present = node.is_some() || (agent_fact && graph.agent(&id).is_some());
            if want != present {
                graph_ok = false;
                let (e, o) = if want { (format!("exists({id})"), "absent") } else { (format!("absent({id})"), "present") };
                miss(i, e, o.into(), Source::Graph);
            }
        }
        let actual_parent = graph.parent(&id);
        if let Some((want, i)) = &f.parent {
            if actual_parent != Some(want) {
                graph_ok = false;
                let o = actual_parent.map(|r| r.to_string()).unwrap_or_else(|| "absent".into());
                miss(*i, want.to_string(), o, Source::Graph);
            }
        }
        for (key, (want, i)) in &f.states {
            let have = node.and_then(|n| n.states.get(*key));
            if node.is_none() || have != *want {
                graph_ok = false;
                let o = if node.is_none() { "absent".to_string() } else { state_pred(&id, *key, have) };
                miss(*i, state_pred(&id, *key, *want), o, Source::Graph);
            }
        }
        if let (Some((want, i)), Some(n)) = (&f.attrs, node) {
            if let Some(field) = attrs_differ(want, n) {
                graph_ok = false;
                miss(*i, format!("attributes({id})"), format!("{field} differs"), Source::Graph);
            }
        }
        if agent_fact || !graph_ok {
            continue;
        }

        // View side: only for what the viewpoint can legitimately perceive.
        // A removal can wipe the only fact about something it carried.
        let Some(last) = [f.exists.map(|x| x.1), f.parent.as_ref().map(|x| x.1), f.attrs.as_ref().map(|x| x.1)]
            .into_iter()
            .flatten()
            .chain(f.states.values().map(|x| x.1))
            .max()
        else {
            continue;
        };
        if node.is_none() {
            if let Seen::Object(_) | Seen::Door(_) = seen(&obs, &id) {
                miss(last, format!("absent({id})"), "visible".into(), Source::View);
            }
            continue;
        }
        let perception = if graph.is_door(&id) {
            if graph.door_rooms(&id).contains(&&obs.room_id) { Perception::Visible } else { Perception::Elsewhere }
        } else {
            perceive(graph, &obs.room_id, &id)
        };
        let note = match perception {
            Perception::Visible => None,
            Perception::Hidden | Perception::Enclosed(_) => Some(ViewNote::Occluded),
            Perception::Elsewhere => Some(ViewNote::OutOfView),
        };
        if let Some(note) = note {
            for i in [f.exists.map(|x| x.1), f.parent.as_ref().map(|x| x.1), f.attrs.as_ref().map(|x| x.1)]
                .into_iter()
                .flatten()
                .chain(f.states.values().map(|x| x.1))
            {
                let slot = notes.entry(i).or_insert(note);
                if note == ViewNote::Occluded {
                    *slot = ViewNote::Occluded;
                }
            }
            if let Seen::Object(_) = seen(&obs, &id) {
                miss(last, format!("not visible({id})"), "visible".into(), Source::View);
            }
            continue;
        }
        match seen(&obs, &id) {
            Seen::Not => miss(last, format!("visible({id})"), "not in view".into(), Source::View),
            Seen::Object(vo) => {
                if let Some((want, i)) = &f.parent {
                    if &vo.location != want {
                        miss(*i, want.to_string(), vo.location.to_string(), Source::View);
                    }
                }
                for (key, (want, i)) in &f.states {
                    if *key != StateKey::Visibility && vo.states.get(*key) != *want {
                        miss(*i, state_pred(&id, *key, *want), state_pred(&id, *key, vo.states.get(*key)), Source::View);
                    }
                }
                if let Some((want, i)) = &f.attrs {
                    if vo.category != want.category || vo.name != want.display_name || vo.affordances != want.affordances {
                        miss(*i, format!("attributes({id})"), "view differs".into(), Source::View);
                    }
                }
            }
            Seen::Door(d) => {
                for (key, (want, i)) in &f.states {
                    if *key != StateKey::Visibility && d.states.get(*key) != *want {
                        miss(*i, state_pred(&id, *key, *want), state_pred(&id, *key, d.states.get(*key)), Source::View);
                    }
                }
                if let Some((want, i)) = &f.attrs {
                    if d.name != want.display_name || d.affordances != want.affordances {
                        miss(*i, format!("attributes({id})"), "view differs".into(), Source::View);
                    }
                }
            }
        }
    }

    for v in report.verdicts.iter_mut() {
        v.view = notes.get(&v.index).copied();
    }
    report.settle();
    Ok(report)
}

/// [`apply_edits`] followed by [`interpretation_check`] on the result.
pub fn apply_and_check(graph: &SceneGraph, edits: &[Edit], viewpoint: &NodeId) -> Result<(SceneGraph, CheckReport), CheckError> {
    if graph.agent(viewpoint).is_none() && graph.room(viewpoint).is_none() {
        return Err(CheckError::UnknownViewpoint(viewpoint.clone()));
    }
    let (g, partial) = apply_edits(graph, edits);
    let report = interpretation_check(&g, edits, &partial, viewpoint)?;
    Ok((g, report))
}
