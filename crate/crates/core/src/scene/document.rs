//! Canonical JSON interchange form of a scene graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use crate::ids::NodeId;
use crate::scene::graph::SceneGraph;
use crate::scene::invariants::check_invariants;
use crate::scene::types::*;
use crate::scene::{SceneError, SchemaError};

/// Serialized layout. Arrays are written in id order (relations by
/// source, kind, target) so equal graphs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub rooms: Vec<RoomNode>,
    pub objects: Vec<ObjectNode>,
    pub agents: Vec<AgentNode>,
    pub relations: Vec<Relation>,
    pub revision: u64,
}

pub fn to_document(g: &SceneGraph) -> SceneDocument {
    SceneDocument {
        rooms: g.rooms().cloned().collect(),
        objects: g.objects().cloned().collect(),
        agents: g.agents().cloned().collect(),
        relations: g.relations().cloned().collect(),
        revision: g.revision(),
    }
}

pub fn to_json(g: &SceneGraph) -> String {
    serde_json::to_string_pretty(&to_document(g)).expect("scene documents always serialize")
}

/// Parses a document and checks referential integrity. Other invariants are
/// not checked; see [`from_json_validated`].
pub fn from_json(text: &str) -> Result<SceneGraph, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: SceneDocument = serde_path_to_error::deserialize(de).map_err(|e| path_error(e.path(), e.inner()))?;
    from_document(doc)
}

pub fn from_value(value: serde_json::Value) -> Result<SceneGraph, SchemaError> {
    let doc: SceneDocument =
        serde_path_to_error::deserialize(value).map_err(|e| path_error(e.path(), e.inner()))?;
    from_document(doc)
}

/// [`from_json`] followed by the full invariant check.
pub fn from_json_validated(text: &str) -> Result<SceneGraph, SceneError> {
    let g = from_json(text).map_err(SceneError::Schema)?;
    let v = check_invariants(&g);
    if v.is_empty() {
        Ok(g)
    } else {
        Err(SceneError::InvariantViolation(v))
    }
}

/// Converts a serde error location into a JSON pointer. A missing field is
/// reported at the field's own path rather than at its parent.
pub(crate) fn path_error(path: &serde_path_to_error::Path, err: &dyn std::fmt::Display) -> SchemaError {
    let mut pointer = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
            Segment::Map { key } => pointer.push_str(&format!("/{key}")),
            Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
            Segment::Unknown => pointer.push_str("/?"),
        }
    }
    let message = err.to_string();
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            pointer.push('/');
            pointer.push_str(field);
        }
    }
    if pointer.is_empty() {
        pointer.push('/');
    }
    SchemaError::new(pointer, message)
}

fn from_document(doc: SceneDocument) -> Result<SceneGraph, SchemaError> {
    let mut ids: BTreeSet<&NodeId> = BTreeSet::new();
    let all = doc
        .rooms
        .iter()
        .enumerate()
        .map(|(i, r)| (format!("/rooms/{i}/id"), &r.id))
        .chain(doc.objects.iter().enumerate().map(|(i, o)| (format!("/objects/{i}/id"), &o.id)))
        .chain(doc.agents.iter().enumerate().map(|(i, a)| (format!("/agents/{i}/id"), &a.id)));
    for (path, id) in all {
        if !ids.insert(id) {
            return Err(SchemaError::new(path, format!("duplicate id {id}")));
        }
    }
    let dangling = |path: String, what: String, id: &NodeId| {
        SchemaError::new(path, format!("dangling reference: {what} names unknown node {id}"))
    };
    for (i, r) in doc.relations.iter().enumerate() {
        for (field, id) in [("src", &r.src), ("dst", &r.dst)] {
            if !ids.contains(id) {
                return Err(dangling(format!("/relations/{i}/{field}"), r.to_string(), id));
            }
        }
    }
    for (i, o) in doc.objects.iter().enumerate() {
        if let Some(k) = o.lock.as_ref().and_then(|l| l.key_id.as_ref()) {
            if !ids.contains(k) {
                return Err(dangling(format!("/objects/{i}/lock/key_id"), format!("lock of {}", o.id), k));
            }
        }
        if let Some(r) = o.clue.as_ref().and_then(|c| c.referent.as_ref()) {
            if !ids.contains(r) {
                return Err(dangling(format!("/objects/{i}/clue/referent"), format!("clue of {}", o.id), r));
            }
        }
    }
    for (i, a) in doc.agents.iter().enumerate() {
        for (j, h) in a.holding.iter().enumerate() {
            if !ids.contains(h) {
                return Err(dangling(format!("/agents/{i}/holding/{j}"), format!("agent {}", a.id), h));
            }
        }
    }
    for (i, room) in doc.rooms.iter().enumerate() {
        if let Some(a) = &room.arrangement {
            for (field, id) in [("target", &a.target), ("reveals", &a.reveals)] {
                if !ids.contains(id) {
                    return Err(dangling(format!("/rooms/{i}/arrangement/{field}"), format!("room {}", room.id), id));
                }
            }
        }
    }
    Ok(SceneGraph::from_parts(doc.rooms, doc.objects, doc.agents, doc.relations, doc.revision))
}

/// `#[serde(with = ...)]` adapter embedding a graph as its document form.
pub mod serde_graph {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &SceneGraph, s: S) -> Result<S::Ok, S::Error> {
        to_document(g).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SceneGraph, D::Error> {
        let doc = SceneDocument::deserialize(d)?;
        from_document(doc).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::fixtures;

    #[test]
    fn round_trip_preserves_graph() {
        let g = fixtures::locked_door_pair();
        let back = from_json(&to_json(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn missing_rooms_points_at_rooms() {
        let err = from_json(r#"{"objects":[],"agents":[],"relations":[],"revision":0}"#).unwrap_err();
        assert_eq!(err.path, "/rooms");
    }

    #[test]
    fn nested_error_path() {
        let text = r#"{"rooms":[{"id":"r","name":"R"}],"objects":[{"id":"a","category":"box","name":"b",
            "affordances":["flying"]}],"agents":[],"relations":[],"revision":0}"#;
        let err = from_json(text).unwrap_err();
        assert_eq!(err.path, "/objects/0/affordances/0");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = from_json(r#"{"rooms":[],"objects":[],"agents":[],"relations":[],"revision":0,"extra":1}"#)
            .unwrap_err();
        assert!(err.message.contains("extra"), "{err}");
    }

    #[test]
    fn dangling_relation_reported() {
        let text = r#"{"rooms":[{"id":"r","name":"R"}],"objects":[],"agents":[],
            "relations":[{"kind":"in_room","src":"ghost","dst":"r"}],"revision":0}"#;
        let err = from_json(text).unwrap_err();
        assert_eq!(err.path, "/relations/0/src");
        assert!(err.message.contains("dangling reference"));
        assert!(err.message.contains("ghost"));
    }
}
