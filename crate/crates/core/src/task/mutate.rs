//! Random edit batches, for exercising the edit protocol on real scenes.

use rand::Rng;

use crate::ids::NodeId;
use crate::rng::{pick, seeded, stream, SimRng};
use crate::scene::{Affordance, ObjectNode, RelationKind, SceneGraph, StateKey, StateValue};
use crate::task::edit::Edit;

const KINDS: [(&str, &[Affordance]); 4] = [
    ("ball", &[Affordance::Graspable]),
    ("crate", &[Affordance::Container, Affordance::Openable]),
    ("tray", &[Affordance::Surface, Affordance::Graspable]),
    ("lamp", &[Affordance::Toggleable]),
];

/// `n` edits drawn for `g` from `seed`. Each edit is built against the
/// graph as the previous edits leave it, so most of them apply; some are
/// rejected (cycles, occupied hands, missing hosts) on purpose.
pub fn random_edits(g: &SceneGraph, seed: u64, n: usize) -> Vec<Edit> {
    let mut rng = seeded(seed, stream::FUZZ);
    let mut cur = g.clone();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let Some(e) = one(&cur, &mut rng, seed, k) else { continue };
        let _ = crate::task::apply_edit(&mut cur, &e);
        out.push(e);
    }
    out
}

fn movable(g: &SceneGraph) -> Vec<NodeId> {
    g.objects().filter(|o| !g.is_door(&o.id)).map(|o| o.id.clone()).collect()
}

/// A random parent for a new or moved object.
fn host(g: &SceneGraph, rng: &mut SimRng, graspable: bool) -> (RelationKind, NodeId) {
    let mut hosts: Vec<(RelationKind, NodeId)> = g.rooms().map(|r| (RelationKind::InRoom, r.id.clone())).collect();
    for o in g.objects().filter(|o| !g.is_door(&o.id)) {
        if o.has(Affordance::Container) {
            hosts.push((RelationKind::Inside, o.id.clone()));
        }
        if o.has(Affordance::Surface) {
            hosts.push((RelationKind::OnTop, o.id.clone()));
        }
    }
    if graspable {
        hosts.extend(g.agents().map(|a| (RelationKind::HeldBy, a.id.clone())));
    }
    pick(rng, &hosts).clone()
}

fn one(g: &SceneGraph, rng: &mut SimRng, seed: u64, k: usize) -> Option<Edit> {
    let objects = movable(g);
    let op = if objects.is_empty() { 0 } else { rng.gen_range(0..10) };
    match op {
        0..=2 => {
            let (category, aff) = KINDS[rng.gen_range(0..KINDS.len())];
            let id = NodeId::from(format!("{category}_x{seed}_{k}").as_str());
            let mut object = ObjectNode::new(id, category, category, aff);
            if aff.contains(&Affordance::Openable) {
                object.states.set(if rng.gen_bool(0.5) { StateValue::Open } else { StateValue::Closed });
            }
            if aff.contains(&Affordance::Toggleable) {
                object.states.set(StateValue::Off);
            }
            let (relation, target) = host(g, rng, aff.contains(&Affordance::Graspable));
            Some(Edit::Add { object, relation, target })
        }
        3..=5 => {
            let id = pick(rng, &objects).clone();
            let graspable = g.object(&id).is_some_and(|o| o.has(Affordance::Graspable));
            let (relation, target) = host(g, rng, graspable);
            Some(Edit::Move { object_id: id, relation, target })
        }
        6..=7 => {
            let flippable: Vec<&ObjectNode> = g
                .objects()
                .filter(|o| !o.is_locked() && (o.has(Affordance::Openable) || o.has(Affordance::Toggleable)))
                .collect();
            if flippable.is_empty() {
                return None;
            }
            let o = *pick(rng, &flippable);
            let (key, value) = if o.has(Affordance::Openable) {
                (StateKey::Openness, if o.states.is(StateValue::Open) { StateValue::Closed } else { StateValue::Open })
            } else {
                (StateKey::Power, if o.states.is(StateValue::On) { StateValue::Off } else { StateValue::On })
            };
            Some(Edit::SetState { object_id: o.id.clone(), key, value: Some(value) })
        }
        8 => {
            let id = pick(rng, &objects).clone();
            let mut object = g.object(&id)?.clone();
            object.display_name = format!("worn {}", object.display_name);
            Some(Edit::Replace { object_id: id, object })
        }
        _ => Some(Edit::Remove { object_id: pick(rng, &objects).clone() }),
    }
}
