use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use proptest::prelude::*;
use symenv_core::action::{apply, legal_actions, step_multi, validate, Action, PlaceRelation, UnlockWith};
use symenv_core::escape::{generate, GeneratedRoom, LevelConfig};
use symenv_core::eval::household_base;
use symenv_core::scene::*;
use symenv_core::task::*;
use symenv_core::NodeId;

const SEEDS_PER_LEVEL: u64 = 6;

fn rooms() -> &'static [GeneratedRoom] {
    static ROOMS: OnceLock<Vec<GeneratedRoom>> = OnceLock::new();
    ROOMS.get_or_init(|| {
        (1..=4)
            .flat_map(|level| (0..SEEDS_PER_LEVEL).map(move |seed| generate(&LevelConfig::new(level, seed)).unwrap()))
            .collect()
    })
}

fn agent() -> NodeId {
    NodeId::from("agent_1")
}

/// Every syntactic action over the graph's ids, except arrangements.
fn action_space(g: &SceneGraph) -> Vec<Action> {
    let objects: Vec<NodeId> = g.objects().map(|o| o.id.clone()).collect();
    let mut out: Vec<Action> = g.rooms().map(|r| Action::GoTo { room: r.id.clone() }).collect();
    out.push(Action::Wait);
    for o in &objects {
        let object = o.clone();
        out.extend([
            Action::Open { object: object.clone() },
            Action::Close { object: object.clone() },
            Action::PickUp { object: object.clone() },
            Action::Lock { object: object.clone() },
            Action::Read { object: object.clone() },
            Action::Toggle { object: object.clone() },
            Action::Unlock { object: object.clone(), with: UnlockWith::Code("0000".into()) },
        ]);
        if let Some(code) = g.object(o).and_then(|x| x.lock.as_ref()).and_then(|l| l.code.clone()) {
            out.push(Action::Unlock { object: object.clone(), with: UnlockWith::Code(code) });
        }
        for k in &objects {
            out.push(Action::Unlock { object: object.clone(), with: UnlockWith::Key(k.clone()) });
            for relation in [PlaceRelation::Inside, PlaceRelation::OnTop] {
                out.push(Action::Place { object: object.clone(), relation, target: k.clone() });
            }
        }
    }
    out
}

/// Raw-relation visibility: the parent chain reaches the room (or an agent
/// standing in it) without passing a closed container or a hidden node.
fn visible_by_hand(g: &SceneGraph, room: &NodeId, id: &NodeId) -> bool {
    let parent = |x: &NodeId| g.relations().find(|r| &r.src == x && r.kind.is_parent()).cloned();
    let hidden = |x: &NodeId| g.object(x).is_some_and(|o| o.states.is(StateValue::Hidden));
    if g.is_door(id) || hidden(id) {
        return false;
    }
    let mut cur = id.clone();
    for _ in 0..64 {
        let Some(p) = parent(&cur) else { return false };
        match p.kind {
            RelationKind::InRoom => return &p.dst == room,
            RelationKind::HeldBy => return parent(&p.dst).is_some_and(|r| &r.dst == room),
            RelationKind::Inside => {
                let closed = g.object(&p.dst).is_some_and(|c| c.states.is(StateValue::Closed));
                if closed || hidden(&p.dst) {
                    return false;
                }
            }
            RelationKind::OnTop => {
                if hidden(&p.dst) {
                    return false;
                }
            }
            RelationKind::Connects => return false,
        }
        cur = p.dst;
    }
    false
}

fn check_state(g: &SceneGraph) -> Result<(), TestCaseError> {
    prop_assert_eq!(check_invariants(g), vec![]);
    let me = agent();
    let obs = observe(g, &me).unwrap();
    let seen: BTreeSet<&NodeId> = obs.visible_objects.iter().map(|o| &o.id).collect();
    let want: BTreeSet<&NodeId> = g.objects().map(|o| &o.id).filter(|id| visible_by_hand(g, &obs.room_id, id)).collect();
    prop_assert_eq!(seen, want);

    let legal: BTreeSet<Action> = legal_actions(g, &me).unwrap().into_iter().collect();
    for a in &legal {
        prop_assert_eq!(validate(g, &me, a).unwrap(), Ok(()), "{} is on the menu but invalid", a);
    }
    for a in action_space(g) {
        let verdict = validate(g, &me, &a).unwrap();
        // Wait and unread codes are valid but never offered.
        let offerable = !matches!(a, Action::Wait | Action::Unlock { with: UnlockWith::Code(_), .. });
        if offerable {
            prop_assert_eq!(verdict.is_ok(), legal.contains(&a), "{} validate={:?}", a, verdict);
        }
        let (next, outcome) = apply(g, &me, &a).unwrap();
        prop_assert_eq!(outcome.is_ok(), verdict.is_ok());
        if !outcome.is_ok() {
            prop_assert_eq!(next.revision(), g.revision());
            prop_assert!(next.content_eq(g));
        }
        let (multi, outs) = step_multi(g, &[(me.clone(), a.clone())]).unwrap();
        prop_assert_eq!(&outs[0], &outcome);
        prop_assert!(multi.content_eq(&next) && multi.revision() == next.revision());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Random walks over legal and illegal actions keep every state valid,
    /// observations exact, and validate, apply, step_multi, and the legal
    /// menu in agreement.
    #[test]
    fn random_walks_preserve_the_action_contract(
        room in 0..(4 * SEEDS_PER_LEVEL as usize),
        picks in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>()), 1..12),
    ) {
        let mut g = rooms()[room].graph.clone();
        let me = agent();
        check_state(&g)?;
        for (legal_only, ix) in picks {
            let menu = if legal_only { legal_actions(&g, &me).unwrap() } else { action_space(&g) };
            if menu.is_empty() {
                break;
            }
            let (next, _) = apply(&g, &me, &menu[ix.index(menu.len())]).unwrap();
            g = next;
            check_state(&g)?;
        }
    }

    /// add_node and remove_node either keep the graph valid or change nothing.
    #[test]
    fn node_mutations_are_atomic(
        room in 0..(4 * SEEDS_PER_LEVEL as usize),
        ops in prop::collection::vec((any::<bool>(), any::<prop::sample::Index>(), any::<prop::sample::Index>()), 1..16),
    ) {
        let mut g = rooms()[room].graph.clone();
        for (k, (add, a, b)) in ops.into_iter().enumerate() {
            let ids: Vec<NodeId> = g.rooms().map(|r| r.id.clone())
                .chain(g.objects().map(|o| o.id.clone()))
                .chain(g.agents().map(|x| x.id.clone()))
                .collect();
            if ids.is_empty() {
                break;
            }
            let before = g.clone();
            let result = if add {
                let id = NodeId::from(format!("thing_{k}").as_str());
                let node = ObjectNode::new(id.clone(), "thing", "thing", &[Affordance::Graspable, Affordance::Container]);
                let kinds = [RelationKind::InRoom, RelationKind::Inside, RelationKind::OnTop, RelationKind::HeldBy];
                let at = Relation::new(kinds[b.index(4)], id, ids[a.index(ids.len())].clone());
                g.add_node(Node::Object(node), Some(at))
            } else {
                g.remove_node(&ids[a.index(ids.len())])
            };
            match result {
                Ok(()) => {
                    prop_assert_eq!(check_invariants(&g), vec![]);
                    prop_assert_eq!(g.revision(), before.revision() + 1);
                }
                Err(_) => {
                    prop_assert!(g.content_eq(&before));
                    prop_assert_eq!(g.revision(), before.revision());
                }
            }
        }
    }

    /// Serialization round-trips and diff/apply_edits closes on randomly
    /// edited generator rooms.
    #[test]
    fn edit_batches_round_trip_and_diff_closes(room in 0..(4 * SEEDS_PER_LEVEL as usize), seed in any::<u64>(), n in 1usize..12) {
        let before = &rooms()[room].graph;
        let edits = random_edits(before, seed, n);
        let (after, _) = apply_edits(before, &edits);
        prop_assert_eq!(check_invariants(&after), vec![]);
        let back = from_json(&to_json(&after)).unwrap();
        prop_assert!(back.content_eq(&after));
        prop_assert_eq!(to_json(&back), to_json(&after));
        let d = diff(before, &after).unwrap();
        let (replayed, report) = apply_edits(before, &d);
        prop_assert!(report.passed, "{:?}", report);
        prop_assert!(replayed.content_eq(&after));
    }

    /// A failing edit leaves the graph exactly as it was.
    #[test]
    fn failed_edits_change_nothing(room in 0..(4 * SEEDS_PER_LEVEL as usize), seed in any::<u64>(), n in 1usize..16) {
        let mut g = rooms()[room].graph.clone();
        for e in random_edits(&g, seed, n) {
            let before = g.clone();
            if apply_edit(&mut g, &e).is_err() {
                prop_assert!(g.content_eq(&before));
                prop_assert_eq!(g.revision(), before.revision());
            }
        }
    }

    /// Honest batches (only edits that apply) always pass the check.
    #[test]
    fn honest_batches_pass_the_interpretation_check(room in 0..(4 * SEEDS_PER_LEVEL as usize), seed in any::<u64>(), n in 1usize..12) {
        let before = &rooms()[room].graph;
        let edits = random_edits(before, seed, n);
        let (_, first) = apply_edits(before, &edits);
        let honest: Vec<Edit> = edits
            .into_iter()
            .zip(&first.verdicts)
            .filter(|(_, v)| v.status == EditStatus::Applied)
            .map(|(e, _)| e)
            .collect();
        let (_, report) = apply_and_check(before, &honest, &agent()).unwrap();
        prop_assert!(report.passed, "{:?}", report);
    }

    /// Instantiated specs bind each category requirement to distinct objects
    /// carrying the demanded affordances.
    #[test]
    fn instantiation_binds_distinct_capable_objects(
        seed in 0u64..1000,
        picks in prop::collection::vec((0usize..5, 1u32..3), 1..4),
    ) {
        let menu = [
            ("object_in", "ball", "box"),
            ("object_on", "cup", "table"),
            ("state_is", "", "lamp"),
            ("held_by", "key", ""),
            ("object_in", "sock", "basket"),
        ];
        let subgoals: Vec<serde_json::Value> = picks
            .iter()
            .map(|(i, inst)| {
                let (kind, object, target) = menu[*i];
                let mut v = serde_json::json!({ "kind": kind });
                if !object.is_empty() {
                    v["object_category"] = object.into();
                    v["object_instance"] = (*inst).into();
                }
                if !target.is_empty() {
                    v["target_category"] = target.into();
                }
                if kind == "state_is" {
                    v["state"] = "on".into();
                }
                v
            })
            .collect();
        let spec = validate_task_spec(&serde_json::json!({ "description": "fuzz", "subgoals": subgoals })).unwrap();
        let base = household_base(seed, 1);
        let (g, goal) = instantiate(&spec, &base, seed).unwrap();
        prop_assert_eq!(check_invariants(&g), vec![]);
        prop_assert_eq!(g.revision(), base.revision() + 1);

        let mut bound: BTreeMap<ObjRef, NodeId> = BTreeMap::new();
        for (sg, p) in spec.subgoals.iter().zip(&goal.conjuncts) {
            let ids = p.ids();
            for (role, at) in [(Role::Object, 0usize), (Role::Target, usize::from(sg.reference(Role::Object).is_some()))] {
                let Some(r) = sg.reference(role) else { continue };
                let id = ids[at].clone();
                let o = g.object(&id).unwrap();
                prop_assert!(o.affordances.contains_all(sg.demands(role)));
                if let ObjRef::Category { category, .. } = &r {
                    prop_assert_eq!(&o.category, category);
                }
                if let Some(prev) = bound.insert(r, id.clone()) {
                    prop_assert_eq!(prev, id);
                }
            }
        }
        let distinct: BTreeSet<&NodeId> = bound.values().collect();
        prop_assert_eq!(distinct.len(), bound.len());
        let needed: usize = required_objects(&spec).iter().map(|r| r.count).sum();
        prop_assert_eq!(needed, bound.len());
    }
}
