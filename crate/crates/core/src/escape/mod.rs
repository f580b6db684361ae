//! Seeded escape-room generation and the breadth-first solvability oracle.

mod generate;
mod solve;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{apply_in_place, Action, Status};
use crate::goal::GoalSpec;
use crate::ids::NodeId;
use crate::scene::document::serde_graph;
use crate::scene::SceneGraph;

pub use generate::generate;
pub use solve::{canonical_key, search, search_where, solve, successors, SolveError, SolveOptions, DEFAULT_BUDGET};

pub const MAX_ATTEMPTS: u32 = 32;

/// Level parameters. Unset fields take the per-level defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub level: u8,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub room_count: Option<usize>,
    #[serde(default = "default_decoys")]
    pub decoy_objects: usize,
    #[serde(default = "default_code_length")]
    pub code_length: usize,
}

fn default_decoys() -> usize {
    3
}

fn default_code_length() -> usize {
    4
}

impl LevelConfig {
    pub fn new(level: u8, seed: u64) -> Self {
        LevelConfig { level, seed, room_count: None, decoy_objects: default_decoys(), code_length: default_code_length() }
    }

    pub fn rooms(&self) -> usize {
        self.room_count.unwrap_or(match self.level {
            1 | 2 => 1,
            _ => 2,
        })
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if !(1..=4).contains(&self.level) {
            return Err(ConfigError(format!("level must be 1-4, got {}", self.level)));
        }
        let rooms = self.rooms();
        if !(1..=4).contains(&rooms) {
            return Err(ConfigError(format!("room_count must be 1-4, got {rooms}")));
        }
        if self.level == 3 && rooms < 2 {
            return Err(ConfigError("level 3 places its two puzzles in separate rooms; room_count must be at least 2".into()));
        }
        if !(2..=8).contains(&self.code_length) {
            return Err(ConfigError(format!("code_length must be 2-8, got {}", self.code_length)));
        }
        if self.decoy_objects > 12 {
            return Err(ConfigError(format!("decoy_objects must be at most 12, got {}", self.decoy_objects)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid level config: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("generation failed after {attempts} attempts: {last}")]
    GenerationFailure { attempts: u32, last: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub agent: NodeId,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionCertificate {
    pub plan: Vec<PlanStep>,
    pub optimal_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRoom {
    pub level: u8,
    pub seed: u64,
    #[serde(with = "serde_graph")]
    pub graph: SceneGraph,
    pub goal: GoalSpec,
    pub certificate: SolutionCertificate,
}

impl GeneratedRoom {
    pub fn exit_door(&self) -> &NodeId {
        match &self.goal.conjuncts[0] {
            crate::goal::Predicate::DoorOpen { door } => door,
            other => other.focus(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("certificate fails at step {index}: {reason}")]
pub struct CertificateMismatch {
    pub index: usize,
    pub reason: String,
}

/// Replays a plan; `Err` names the first step that is rejected, or the plan
/// length if the goal is still unmet at the end.
pub fn replay(graph: &SceneGraph, goal: &GoalSpec, plan: &[PlanStep]) -> Result<SceneGraph, CertificateMismatch> {
    let mut g = graph.clone();
    for (index, step) in plan.iter().enumerate() {
        match apply_in_place(&mut g, &step.agent, &step.action) {
            Ok(o) if o.status == Status::Ok => {}
            Ok(o) => {
                let reason = o.reason.map(|r| r.to_string()).unwrap_or_default();
                return Err(CertificateMismatch { index, reason: format!("{} rejected: {reason}", step.action) });
            }
            Err(e) => return Err(CertificateMismatch { index, reason: e.to_string() }),
        }
    }
    if goal.satisfied(&g) {
        Ok(g)
    } else {
        Err(CertificateMismatch { index: plan.len(), reason: "goal not satisfied after the last step".into() })
    }
}

pub fn verify(room: &GeneratedRoom) -> Result<(), CertificateMismatch> {
    replay(&room.graph, &room.goal, &room.certificate.plan).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::{validate, PlaceRelation, UnlockWith};
    use crate::goal::Predicate;
    use crate::knowledge::{derive, permits, secret_containers, KnowledgeFilter};
    use crate::scene::{to_json, StateValue};

    fn room(level: u8, seed: u64) -> GeneratedRoom {
        generate(&LevelConfig::new(level, seed)).expect("generates")
    }

    #[test]
    fn same_seed_same_bytes() {
        for level in 1..=4 {
            let a = room(level, 11);
            let b = room(level, 11);
            assert_eq!(to_json(&a.graph), to_json(&b.graph));
            assert_eq!(a.certificate, b.certificate);
        }
        assert_ne!(to_json(&room(1, 1).graph), to_json(&room(1, 2).graph));
    }

    #[test]
    fn bad_configs_rejected() {
        for cfg in [
            LevelConfig::new(0, 1),
            LevelConfig::new(5, 1),
            LevelConfig { room_count: Some(1), ..LevelConfig::new(3, 1) },
            LevelConfig { code_length: 1, ..LevelConfig::new(3, 1) },
            LevelConfig { decoy_objects: 13, ..LevelConfig::new(1, 1) },
        ] {
            assert!(matches!(generate(&cfg), Err(GenerateError::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn certificates_replay() {
        for level in 1..=4 {
            for seed in 0..3 {
                let r = room(level, seed);
                assert_eq!(r.certificate.plan.len(), r.certificate.optimal_length);
                verify(&r).unwrap();
            }
        }
    }

    #[test]
    fn level_three_fragments_spell_the_code() {
        let r = room(3, 5);
        let exit = r.exit_door().clone();
        let code = r.graph.object(&exit).unwrap().lock.as_ref().unwrap().code.clone().unwrap();
        let mut frags: Vec<(&NodeId, &str)> = r
            .graph
            .objects()
            .filter_map(|o| {
                let c = o.clue.as_ref()?;
                (c.referent.as_ref() == Some(&exit)).then(|| (&o.id, c.payload.as_deref().unwrap()))
            })
            .collect();
        frags.sort();
        assert_eq!(frags.len(), 2);
        assert_eq!(format!("{}{}", frags[0].1, frags[1].1), code);
        let unlock = r.certificate.plan.iter().find(|s| matches!(s.action, Action::Unlock { .. })).unwrap();
        assert_eq!(unlock.action, Action::Unlock { object: exit, with: UnlockWith::Code(code) });
    }

    #[test]
    fn removing_the_key_makes_it_unsolvable() {
        let mut r = room(1, 3);
        let key = r.graph.object(r.exit_door()).unwrap().lock.as_ref().unwrap().key_id.clone().unwrap();
        r.graph.remove_node(&key).unwrap();
        assert!(matches!(solve(&r.graph, &r.goal, &SolveOptions::default()), Err(SolveError::Unsolvable { .. })));
    }

    #[test]
    fn satisfied_goal_needs_no_steps() {
        let r = room(1, 3);
        let goal = GoalSpec::single(
            Predicate::StateIs { object: r.exit_door().clone(), state: StateValue::Closed },
            "keep it shut",
        );
        let cert = solve(&r.graph, &goal, &SolveOptions::default()).unwrap();
        assert!(cert.plan.is_empty());
        assert_eq!(cert.optimal_length, 0);
    }

    #[test]
    fn budget_is_reported() {
        let r = room(2, 3);
        let res = solve(&r.graph, &r.goal, &SolveOptions::with_budget(3));
        assert!(matches!(res, Err(SolveError::BudgetExceeded { .. })), "{res:?}");
    }

    #[test]
    fn tampered_certificates_fail() {
        let mut r = room(1, 4);
        let mut short = r.clone();
        short.certificate.plan.pop();
        let err = verify(&short).unwrap_err();
        assert_eq!(err.index, short.certificate.plan.len());

        // Replay checks physics only: a skipped read is still a valid plan.
        let mut no_read = r.clone();
        no_read.certificate.plan.retain(|s| !matches!(s.action, Action::Read { .. }));
        verify(&no_read).unwrap();
        let mut reordered = r.clone();
        reordered.certificate.plan.reverse();
        assert_eq!(verify(&reordered).unwrap_err().index, 0);

        let other = room(1, 9);
        r.certificate = other.certificate;
        if r.certificate.plan != room(1, 4).certificate.plan {
            assert!(verify(&r).is_err());
        }
    }

    #[test]
    fn deceptive_clue_alone_leads_nowhere() {
        for seed in 0..5 {
            let r = room(4, seed);
            let lies: Vec<NodeId> = r
                .graph
                .objects()
                .filter(|o| o.clue.as_ref().is_some_and(|c| c.veracity == crate::scene::Veracity::Deceptive))
                .map(|o| o.id.clone())
                .collect();
            assert_eq!(lies.len(), 1);
            let opts = SolveOptions { knowledge: KnowledgeFilter::Only(lies.into_iter().collect()), ..Default::default() };
            assert!(matches!(solve(&r.graph, &r.goal, &opts), Err(SolveError::Unsolvable { .. })));
        }
    }

    /// Every syntactically possible action over the graph's ids, without
    /// consulting the enumeration used by the solver.
    fn universe(g: &SceneGraph) -> Vec<Action> {
        let objs: Vec<NodeId> = g.objects().map(|o| o.id.clone()).collect();
        let codes: Vec<String> = g
            .objects()
            .filter_map(|o| o.lock.as_ref().and_then(|l| l.code.clone()))
            .collect();
        let mut out: Vec<Action> = g.rooms().map(|r| Action::GoTo { room: r.id.clone() }).collect();
        for o in &objs {
            out.push(Action::Open { object: o.clone() });
            out.push(Action::Close { object: o.clone() });
            out.push(Action::PickUp { object: o.clone() });
            out.push(Action::Read { object: o.clone() });
            for t in &objs {
                out.push(Action::Place { object: o.clone(), relation: PlaceRelation::Inside, target: t.clone() });
                out.push(Action::Place { object: o.clone(), relation: PlaceRelation::OnTop, target: t.clone() });
                out.push(Action::Unlock { object: o.clone(), with: UnlockWith::Key(t.clone()) });
            }
            for c in &codes {
                out.push(Action::Unlock { object: o.clone(), with: UnlockWith::Code(c.clone()) });
            }
        }
        out
    }

    fn iddfs(g: &SceneGraph, goal: &GoalSpec, depth: usize, acts: &[Action], secrets: &std::collections::BTreeSet<NodeId>) -> bool {
        if goal.satisfied(g) {
            return true;
        }
        if depth == 0 {
            return false;
        }
        let agent: NodeId = "agent_1".into();
        let k = derive(g, &KnowledgeFilter::All);
        for a in acts {
            if validate(g, &agent, a).unwrap().is_err() || !permits(g, &k, secrets, a) {
                continue;
            }
            let (next, _) = crate::action::apply(g, &agent, a).unwrap();
            if iddfs(&next, goal, depth - 1, acts, secrets) {
                return true;
            }
        }
        false
    }

    #[test]
    fn breadth_first_length_matches_iterative_deepening() {
        for seed in 0..3 {
            let cfg = LevelConfig { decoy_objects: 1, ..LevelConfig::new(1, seed) };
            let r = generate(&cfg).unwrap();
            let acts = universe(&r.graph);
            let secrets = secret_containers(&r.graph);
            let found = (0..=8).find(|&d| iddfs(&r.graph, &r.goal, d, &acts, &secrets));
            assert_eq!(found, Some(r.certificate.optimal_length), "seed {seed}");
        }
    }
}
