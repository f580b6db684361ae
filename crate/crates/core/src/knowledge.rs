//! What can be inferred from clues that have been read.
//!
//! A trusted clue with a referent and no payload marks the referent as a
//! known location. A digit payload is a code fragment for the referent lock;
//! fragments combine in clue-object id order. A comma-separated colour
//! payload states the arrangement order for the referent surface.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::action::{is_digits, Action, UnlockWith};
use crate::ids::NodeId;
use crate::scene::{Color, RelationKind, SceneGraph, Veracity};

/// Which read clues inference may use.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeFilter {
    /// Every accurate clue.
    #[default]
    All,
    /// Exactly these clue objects, whatever their veracity.
    Only(BTreeSet<NodeId>),
}

impl KnowledgeFilter {
    fn trusts(&self, object: &NodeId, veracity: Veracity) -> bool {
        match self {
            KnowledgeFilter::All => veracity == Veracity::Accurate,
            KnowledgeFilter::Only(set) => set.contains(object),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Knowledge {
    pub locations: BTreeSet<NodeId>,
    pub codes: BTreeMap<NodeId, String>,
    pub orders: BTreeMap<NodeId, Vec<Color>>,
}

pub fn parse_colours(payload: &str) -> Option<Vec<Color>> {
    let v: Option<Vec<Color>> = payload.split(',').map(|s| Color::parse(s.trim())).collect();
    v.filter(|v| !v.is_empty())
}

/// Team knowledge: the union over every agent's read clues.
pub fn derive(g: &SceneGraph, filter: &KnowledgeFilter) -> Knowledge {
    let mut k = Knowledge::default();
    let mut fragments: BTreeMap<NodeId, BTreeMap<NodeId, String>> = BTreeMap::new();
    for a in g.agents() {
        for rc in &a.read_clues {
            if !filter.trusts(&rc.object, rc.clue.veracity) {
                continue;
            }
            let Some(r) = &rc.clue.referent else { continue };
            match rc.clue.payload.as_deref() {
                None => {
                    k.locations.insert(r.clone());
                }
                Some(p) if is_digits(p) => {
                    fragments.entry(r.clone()).or_default().insert(rc.object.clone(), p.to_string());
                }
                Some(p) => {
                    if let Some(order) = parse_colours(p) {
                        k.orders.insert(r.clone(), order);
                    }
                }
            }
        }
    }
    for (lock, frags) in fragments {
        k.codes.insert(lock, frags.into_values().collect());
    }
    k
}

/// Containers some clue points at as a hiding place. Their contents stay
/// off-limits to the solver until the location is known.
pub fn secret_containers(g: &SceneGraph) -> BTreeSet<NodeId> {
    g.objects()
        .filter_map(|o| o.clue.as_ref())
        .filter(|c| c.payload.is_none())
        .filter_map(|c| c.referent.clone())
        .filter(|r| g.object(r).is_some())
        .collect()
}

/// Whether a knowledge-respecting solver may take `action`.
pub fn permits(g: &SceneGraph, k: &Knowledge, secrets: &BTreeSet<NodeId>, action: &Action) -> bool {
    match action {
        Action::PickUp { object } | Action::Read { object } => g
            .ancestors(object)
            .iter()
            .filter(|(kind, _)| *kind == RelationKind::Inside)
            .all(|(_, c)| !secrets.contains(c) || k.locations.contains(c)),
        Action::Unlock { object, with: UnlockWith::Code(c) } => k.codes.get(object) == Some(c),
        Action::Arrange { objects, target } => match g.arrangement_for(target) {
            Some(_) => {
                let colours: Option<Vec<Color>> = objects.iter().map(|o| g.object(o).and_then(|x| x.color)).collect();
                colours.is_some() && k.orders.get(target) == colours.as_ref()
            }
            None => true,
        },
        _ => true,
    }
}
