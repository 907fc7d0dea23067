//! Subtask termination and intrinsic rewards for the low-level policy.

use serde::{Deserialize, Serialize};

use crate::domain::{SubtaskId, UserGoal};
use crate::error::{Error, Result};
use crate::tracker::DialogueState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubtaskStatus {
    InProgress,
    Success,
    Fail,
}

impl SubtaskStatus {
    pub fn is_terminal(self) -> bool {
        self != SubtaskStatus::InProgress
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntrinsicSpec {
    pub success_bonus: f64,
    pub fail_penalty: f64,
    pub step_cost: f64,
    pub budget: usize,
}

impl Default for IntrinsicSpec {
    fn default() -> Self {
        IntrinsicSpec {
            success_bonus: 2.0,
            fail_penalty: -1.0,
            step_cost: -0.05,
            budget: 30,
        }
    }
}

impl IntrinsicSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.success_bonus > 0.0 && 0.0 > self.step_cost && self.step_cost > self.fail_penalty) {
            return Err(Error::config(
                "intrinsic",
                "need success_bonus > 0 > step_cost > fail_penalty",
            ));
        }
        if self.budget == 0 {
            return Err(Error::config("intrinsic.budget", "must be positive"));
        }
        Ok(())
    }
}

/// Whether subtask `g` is done from the agent's point of view.
///
/// The goal, when known, adds its inform slots of `g` to the conditions; the
/// request condition covers user requests of `g` seen so far plus any goal
/// requests of `g`.
pub fn subtask_status(
    state: &DialogueState,
    g: SubtaskId,
    goal: Option<&UserGoal>,
    turns_in_subtask: usize,
    episode_over: bool,
    spec: &IntrinsicSpec,
) -> SubtaskStatus {
    let requests_filled = state
        .user_requested
        .iter()
        .filter(|s| s.subtask() == g)
        .all(|s| state.filled_requests.contains(s))
        && goal.is_none_or(|goal| {
            goal.request_slots_of(g).all(|s| state.filled_requests.contains(s))
        });
    let informs_known = goal.is_none_or(|goal| {
        goal.inform_slots_of(g).all(|s| state.user_informed.contains_key(&s))
    });
    let done = requests_filled && informs_known && state.is_booked(g) && !state.has_violation_involving(g);
    if done {
        SubtaskStatus::Success
    } else if turns_in_subtask >= spec.budget || episode_over {
        SubtaskStatus::Fail
    } else {
        SubtaskStatus::InProgress
    }
}

pub fn intrinsic_reward(prev: SubtaskStatus, next: SubtaskStatus, spec: &IntrinsicSpec) -> f64 {
    debug_assert_eq!(prev, SubtaskStatus::InProgress);
    match next {
        SubtaskStatus::Success => spec.step_cost + spec.success_bonus,
        SubtaskStatus::Fail => spec.step_cost + spec.fail_penalty,
        SubtaskStatus::InProgress => spec.step_cost,
    }
}
