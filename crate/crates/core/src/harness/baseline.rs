//! Random and scripted baselines.

use rand::Rng;

use crate::action::Action;
use crate::goal::GoalSpec;
use crate::harness::{Policy, PolicyError, PolicyMemory, Turn};
use crate::rng::{seeded, stream};

/// ChaCha words reserved per decision, so decision `t` always starts from
/// the same point of the stream.
const WORDS_PER_TURN: u128 = 16;

#[derive(Debug, Clone)]
pub struct RandomPolicy {
    pub seed: u64,
}

/// Uniform over the legal menu; waits when the menu is empty.
pub fn random_policy(seed: u64) -> RandomPolicy {
    RandomPolicy { seed }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&self, turn: &Turn<'_>, _goal: &GoalSpec, mut mem: PolicyMemory) -> Result<(Action, PolicyMemory), PolicyError> {
        mem.note(turn.observation);
        if turn.legal.is_empty() {
            return Ok((Action::Wait, mem));
        }
        let mut rng = seeded(self.seed, stream::RANDOM_POLICY);
        rng.set_word_pos(u128::from(mem.turns) * WORDS_PER_TURN);
        let i = rng.gen_range(0..turn.legal.len());
        Ok((turn.legal[i].clone(), mem))
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    pub plan: Vec<Action>,
}

/// Replays `plan` one action per turn, then waits.
pub fn scripted_policy(plan: Vec<Action>) -> ScriptedPolicy {
    ScriptedPolicy { plan }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn decide(&self, turn: &Turn<'_>, _goal: &GoalSpec, mut mem: PolicyMemory) -> Result<(Action, PolicyMemory), PolicyError> {
        mem.note(turn.observation);
        let next = usize::try_from(mem.turns).ok().and_then(|t| self.plan.get(t)).cloned().unwrap_or(Action::Wait);
        Ok((next, mem))
    }
}
