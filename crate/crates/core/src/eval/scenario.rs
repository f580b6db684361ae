//! Household scenes and the task specs run on them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::goal::GoalSpec;
use crate::harness::allocate_subgoals;
use crate::ids::NodeId;
use crate::rng::{pick, seeded, shuffled, stream};
use crate::scene::{Affordance, AgentNode, ObjectNode, Relation, RoomNode, SceneGraph, StateValue};
use crate::task::{instantiate, Assignment, Constraint, InstantiationError, SubGoal, SubGoalKind, TaskSpec};

const ROOMS: [(&str, &str); 3] = [("room_1", "living room"), ("room_2", "kitchen"), ("room_3", "bedroom")];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HouseholdTask {
    CleanFloor,
    WatchTv,
    FindObject,
    PrepareFood,
    CleanRoom,
}

impl HouseholdTask {
    pub const ALL: [HouseholdTask; 5] = [
        HouseholdTask::CleanFloor,
        HouseholdTask::WatchTv,
        HouseholdTask::FindObject,
        HouseholdTask::PrepareFood,
        HouseholdTask::CleanRoom,
    ];

    pub fn title(self) -> &'static str {
        match self {
            HouseholdTask::CleanFloor => "Clean Floor",
            HouseholdTask::WatchTv => "Watch TV",
            HouseholdTask::FindObject => "Find Object",
            HouseholdTask::PrepareFood => "Prepare Food",
            HouseholdTask::CleanRoom => "Clean Room",
        }
    }

    pub fn agents(self) -> usize {
        match self {
            HouseholdTask::PrepareFood | HouseholdTask::CleanRoom => 2,
            _ => 1,
        }
    }

    pub fn spec(self) -> TaskSpec {
        let spec = |description: &str, subgoals: Vec<SubGoal>, constraints: Vec<Constraint>| TaskSpec {
            schema_version: crate::task::SCHEMA_VERSION.into(),
            description: description.into(),
            subgoals,
            constraints,
        };
        match self {
            HouseholdTask::CleanFloor => {
                spec("Pick the sock up off the floor and put it in the basket.", vec![put_in("sock", "basket")], vec![])
            }
            HouseholdTask::WatchTv => spec(
                "Find the remote, then turn the tv on.",
                vec![held("remote"), switch_on("tv")],
                vec![Constraint::Order([0, 1])],
            ),
            HouseholdTask::FindObject => spec("Find the phone and hold on to it.", vec![held("phone")], vec![]),
            HouseholdTask::PrepareFood => spec(
                "One agent puts the pan on the counter while the other turns the stove on.",
                vec![put_on("pan", "counter"), switch_on("stove")],
                vec![
                    Constraint::Assign(Assignment { subgoal: 0, agent: "agent_1".into() }),
                    Constraint::Assign(Assignment { subgoal: 1, agent: "agent_2".into() }),
                ],
            ),
            HouseholdTask::CleanRoom => spec(
                "Put the sock in the basket and the book on the shelf.",
                vec![put_in("sock", "basket"), put_on("book", "shelf")],
                vec![],
            ),
        }
    }
}

fn subgoal(kind: SubGoalKind) -> SubGoal {
    SubGoal {
        kind,
        object_id: None,
        object_category: None,
        object_instance: None,
        target_id: None,
        target_category: None,
        target_instance: None,
        state: None,
        agent: None,
    }
}

fn put_in(object: &str, container: &str) -> SubGoal {
    SubGoal {
        object_category: Some(object.into()),
        target_category: Some(container.into()),
        ..subgoal(SubGoalKind::ObjectIn)
    }
}

fn put_on(object: &str, surface: &str) -> SubGoal {
    SubGoal { object_category: Some(object.into()), target_category: Some(surface.into()), ..subgoal(SubGoalKind::ObjectOn) }
}

fn switch_on(object: &str) -> SubGoal {
    SubGoal { target_category: Some(object.into()), state: Some(StateValue::On), ..subgoal(SubGoalKind::StateIs) }
}

fn held(object: &str) -> SubGoal {
    SubGoal { object_category: Some(object.into()), ..subgoal(SubGoalKind::HeldBy) }
}

fn fixture(id: &str, category: &str, aff: &[Affordance]) -> ObjectNode {
    let mut o = ObjectNode::new(id, category, category, aff);
    if aff.contains(&Affordance::Openable) {
        o.states.set(StateValue::Closed);
    }
    if aff.contains(&Affordance::Toggleable) {
        o.states.set(StateValue::Off);
    }
    o
}

/// A three-room house: living room in the middle, kitchen and bedroom off
/// it through open doors. Small items and agents are placed by `seed`; the
/// phone always starts inside a closed container.
pub fn household_base(seed: u64, agents: usize) -> SceneGraph {
    use Affordance::*;
    let mut rng = seeded(seed, stream::SCENARIO);
    let rooms: Vec<RoomNode> = ROOMS.iter().map(|(id, name)| RoomNode::new(*id, *name)).collect();
    let mut objects = Vec::new();
    let mut rels = Vec::new();
    let put = |o: ObjectNode, at: Relation, objects: &mut Vec<ObjectNode>, rels: &mut Vec<Relation>| {
        rels.push(Relation { src: o.id.clone(), ..at });
        objects.push(o);
    };
    let floor = |room: &str| Relation::in_room("tmp", room);
    let fixtures = [
        (fixture("sofa_1", "sofa", &[Surface]), "room_1"),
        (fixture("tv_1", "tv", &[Toggleable]), "room_1"),
        (fixture("basket_1", "basket", &[Container]), "room_1"),
        (fixture("shelf_1", "shelf", &[Surface]), "room_1"),
        (fixture("fridge_1", "fridge", &[Container, Openable]), "room_2"),
        (fixture("counter_1", "counter", &[Surface]), "room_2"),
        (fixture("stove_1", "stove", &[Surface, Toggleable]), "room_2"),
        (fixture("drawer_1", "drawer", &[Container, Openable]), "room_2"),
        (fixture("bed_1", "bed", &[Surface]), "room_3"),
        (fixture("wardrobe_1", "wardrobe", &[Container, Openable]), "room_3"),
    ];
    for (o, room) in fixtures {
        put(o, floor(room), &mut objects, &mut rels);
    }
    for (id, a, b) in [("door_1", "room_1", "room_2"), ("door_2", "room_1", "room_3")] {
        objects.push(fixture(id, "door", &[Openable]).with_state(StateValue::Open));
        rels.push(Relation::in_room(id, a));
        rels.push(Relation::connects(id, a));
        rels.push(Relation::connects(id, b));
    }

    let anywhere = |rng: &mut crate::rng::SimRng| -> Relation {
        let spots = [
            floor("room_1"),
            floor("room_2"),
            floor("room_3"),
            Relation::on_top("tmp", "sofa_1"),
            Relation::on_top("tmp", "bed_1"),
            Relation::on_top("tmp", "shelf_1"),
        ];
        pick(rng, &spots).clone()
    };
    let hidden = [Relation::inside("tmp", "fridge_1"), Relation::inside("tmp", "drawer_1"), Relation::inside("tmp", "wardrobe_1")];
    let sock = pick(&mut rng, &[floor("room_1"), floor("room_2"), floor("room_3")]).clone();
    put(fixture("sock_1", "sock", &[Graspable]), sock, &mut objects, &mut rels);
    let remote = pick(&mut rng, &[Relation::on_top("tmp", "sofa_1"), Relation::on_top("tmp", "bed_1"), hidden[1].clone()]).clone();
    put(fixture("remote_1", "remote", &[Graspable]), remote, &mut objects, &mut rels);
    let book = pick(&mut rng, &[floor("room_1"), floor("room_3"), Relation::on_top("tmp", "bed_1")]).clone();
    put(fixture("book_1", "book", &[Graspable]), book, &mut objects, &mut rels);
    let pan = pick(&mut rng, &[floor("room_2"), hidden[1].clone(), hidden[0].clone()]).clone();
    put(fixture("pan_1", "pan", &[Graspable, Surface]), pan, &mut objects, &mut rels);
    let phone = pick(&mut rng, &hidden).clone();
    put(fixture("phone_1", "phone", &[Graspable]), phone, &mut objects, &mut rels);
    let cup = anywhere(&mut rng);
    put(fixture("cup_1", "cup", &[Graspable]), cup, &mut objects, &mut rels);

    let mut agent_nodes = Vec::new();
    for i in 1..=agents {
        let id = format!("agent_{i}");
        let room = ROOMS[rng.gen_range(0..ROOMS.len())].0;
        rels.push(Relation::in_room(id.as_str(), room));
        agent_nodes.push(AgentNode::new(id.as_str()));
    }
    SceneGraph::from_parts(rooms, objects, agent_nodes, rels, 0)
}

/// Builds the scene for a household task. Two-agent tasks get their
/// unassigned subgoals allocated.
pub fn household(task: HouseholdTask, seed: u64, agents: usize) -> Result<(SceneGraph, GoalSpec), InstantiationError> {
    let base = household_base(seed, agents);
    let (g, mut goal) = instantiate(&task.spec(), &base, seed)?;
    if agents > 1 {
        let ids: Vec<NodeId> = g.agent_ids().cloned().collect();
        goal.assignments = allocate_subgoals(&goal, &ids, &g);
    }
    Ok((g, goal))
}

/// Subgoals a paired task draws from. None of them ties up a hand.
fn paired_pool() -> Vec<SubGoal> {
    vec![
        put_in("sock", "basket"),
        put_on("book", "shelf"),
        switch_on("tv"),
        switch_on("stove"),
        put_on("cup", "counter"),
        put_on("pan", "counter"),
        put_in("remote", "basket"),
    ]
}

/// A two-agent, two-subgoal household task for `seed`, with subgoals
/// allocated between the agents.
pub fn paired_task(seed: u64) -> Result<(SceneGraph, GoalSpec), InstantiationError> {
    let mut rng = seeded(seed, stream::SCENARIO + 1);
    let picked: Vec<SubGoal> = shuffled(&mut rng, &paired_pool()).into_iter().take(2).collect();
    let spec = TaskSpec {
        schema_version: crate::task::SCHEMA_VERSION.into(),
        description: "Two household chores.".into(),
        subgoals: picked,
        constraints: vec![],
    };
    let base = household_base(seed, 2);
    let (g, mut goal) = instantiate(&spec, &base, seed)?;
    let ids: Vec<NodeId> = g.agent_ids().cloned().collect();
    goal.assignments = allocate_subgoals(&goal, &ids, &g);
    Ok((g, goal))
}

/// The same world with only `agent_1`, and the goal without assignments.
pub fn single_agent(g: &SceneGraph, goal: &GoalSpec) -> (SceneGraph, GoalSpec) {
    let mut solo = g.clone();
    let others: Vec<NodeId> = g.agent_ids().filter(|a| a.as_str() != "agent_1").cloned().collect();
    for a in others {
        solo.remove_node(&a).expect("agent exists");
    }
    (solo, GoalSpec { assignments: Default::default(), ..goal.clone() })
}
