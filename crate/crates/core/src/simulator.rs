//! Agenda-based simulated user.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{parse_value, DialogueAct, Intent, ParsedValue, SlotName, Speaker, SubtaskId, UserGoal};
use crate::error::{Error, Result};
use crate::kb::{BookingShadow, Kb};
use crate::tracker::DialogueState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub max_turn: usize,
    pub success_reward: f64,
    pub failure_reward: f64,
    pub per_turn: f64,
}

impl RewardSpec {
    pub fn new(max_turn: usize) -> Self {
        RewardSpec {
            max_turn,
            success_reward: 2.0 * max_turn as f64,
            failure_reward: -(max_turn as f64),
            per_turn: -1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_turn == 0 {
            return Err(Error::config("max_turn", "must be positive"));
        }
        if !(self.success_reward > 0.0 && 0.0 > self.per_turn && self.per_turn > self.failure_reward) {
            return Err(Error::config(
                "rewards",
                "need success_reward > 0 > per_turn > failure_reward",
            ));
        }
        Ok(())
    }
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec::new(60)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgendaItem {
    Inform(SlotName),
    Request(SlotName),
}

/// Legal replacement values per slot, for the noise model.
#[derive(Debug, Clone, Default)]
pub struct ValuePools {
    pools: BTreeMap<SlotName, Vec<String>>,
}

impl ValuePools {
    pub fn from_kb(kb: &Kb) -> Self {
        ValuePools {
            pools: SlotName::ALL.iter().map(|s| (*s, kb.value_pool(*s))).collect(),
        }
    }

    pub fn get(&self, slot: SlotName) -> &[String] {
        self.pools.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Corrupts slot values with probability `error_prob` each and the intent
/// with probability `error_prob / 2`.
pub fn apply_noise(act: &DialogueAct, error_prob: f64, pools: &ValuePools, rng: &mut impl Rng) -> DialogueAct {
    if error_prob <= 0.0 {
        return act.clone();
    }
    let mut out = act.clone();
    for (slot, value) in out.slots.iter_mut() {
        if value.is_empty() || !rng.gen_bool(error_prob.min(1.0)) {
            continue;
        }
        let others: Vec<&String> = pools.get(*slot).iter().filter(|v| *v != value).collect();
        if let Some(v) = others.choose(rng) {
            *value = (*v).clone();
        } else if let Ok(ParsedValue::Count(n)) = parse_value(*slot, value) {
            *value = (n % 6 + 1).to_string();
        }
    }
    if rng.gen_bool((error_prob / 2.0).min(1.0)) {
        let has_empty = out.slots.values().any(|v| v.is_empty());
        let compatible: &[Intent] = if has_empty {
            &[Intent::Request]
        } else if out.slots.is_empty() {
            &[Intent::Thanks, Intent::Closing, Intent::Deny, Intent::Book]
        } else {
            &[
                Intent::Inform,
                Intent::ConfirmQuestion,
                Intent::ConfirmAnswer,
                Intent::NotAvailable,
                Intent::Book,
                Intent::Deny,
            ]
        };
        let choices: Vec<Intent> = compatible.iter().copied().filter(|i| *i != out.intent).collect();
        if let Some(i) = choices.choose(rng) {
            out.intent = *i;
        }
    }
    out
}

/// Result of one agent turn against the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// The user's reply as the agent perceives it (after noise); `None` when
    /// the dialogue ended without a reply.
    pub user_act: Option<DialogueAct>,
    pub done: bool,
    pub reward: f64,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone)]
pub struct SimulatorConfig {
    pub reward: RewardSpec,
    pub error_prob: f64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig {
            reward: RewardSpec::default(),
            error_prob: 0.0,
        }
    }
}

/// One simulated user for one episode.
#[derive(Debug, Clone)]
pub struct UserSimulator {
    kb: Arc<Kb>,
    pools: Arc<ValuePools>,
    config: SimulatorConfig,
    pub goal: UserGoal,
    pub agenda: Vec<AgendaItem>,
    /// Index into each soft slot's candidate list.
    pub chosen: BTreeMap<SlotName, usize>,
    pub first_subtask: SubtaskId,
    /// Agent turns taken so far.
    pub turn: usize,
    pub done: bool,
    pub outcome: Option<Outcome>,
    /// Noise-free view of the dialogue, used to judge success.
    pub state: DialogueState,
    pub booked: [bool; SubtaskId::COUNT],
    shadow: BookingShadow,
    rng: ChaCha8Rng,
    started: bool,
}

impl UserSimulator {
    pub fn new(kb: Arc<Kb>, pools: Arc<ValuePools>, goal: UserGoal, config: SimulatorConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first_subtask = goal.preferred_first_subtask.unwrap_or_else(|| {
            if rng.gen_bool(0.5) {
                SubtaskId::BookFlightTicket
            } else {
                SubtaskId::ReserveHotel
            }
        });
        let other = first_subtask.other();
        let mut agenda = Vec::new();
        for g in [other, first_subtask] {
            agenda.extend(goal.inform_slots_of(g).collect::<Vec<_>>().into_iter().rev().map(AgendaItem::Inform));
        }
        for g in [other, first_subtask] {
            agenda.extend(goal.request_slots_of(g).collect::<Vec<_>>().into_iter().rev().map(AgendaItem::Request));
        }
        let state = DialogueState::new(&kb, config.reward.max_turn);
        UserSimulator {
            kb,
            pools,
            config,
            goal,
            agenda,
            chosen: BTreeMap::new(),
            first_subtask,
            turn: 0,
            done: false,
            outcome: None,
            state,
            booked: [false; SubtaskId::COUNT],
            shadow: BookingShadow::default(),
            rng,
            started: false,
        }
    }

    pub fn kb(&self) -> &Arc<Kb> {
        &self.kb
    }

    pub fn reward_spec(&self) -> &RewardSpec {
        &self.config.reward
    }

    /// Currently chosen value of a goal inform slot.
    pub fn value_of(&self, slot: SlotName) -> Option<&str> {
        let values = self.goal.inform.get(&slot)?;
        let i = self.chosen.get(&slot).copied().unwrap_or(0);
        values.get(i).map(String::as_str)
    }

    /// The opening user turn; callable once, before the first agent turn.
    pub fn initial_act(&mut self) -> Result<DialogueAct> {
        if self.started {
            return Err(Error::SteppedAfterDone);
        }
        self.started = true;
        let g = self.first_subtask;
        let mut informs: Vec<SlotName> = Vec::new();
        for s in [SlotName::OrCity, SlotName::DstCity] {
            if self.goal.inform.contains_key(&s) {
                informs.push(s);
            }
        }
        let mut rest: Vec<SlotName> = self
            .goal
            .inform_slots_of(g)
            .filter(|s| !informs.contains(s))
            .collect();
        rest.shuffle(&mut self.rng);
        let mut extra = self.rng.gen_range(0..=2usize);
        if g == SubtaskId::ReserveHotel {
            extra = extra.max(1);
        }
        let need = extra.max(2usize.saturating_sub(informs.len()));
        informs.extend(rest.into_iter().take(need));
        if informs.len() < 2 {
            let mut others: Vec<SlotName> = self
                .goal
                .inform
                .keys()
                .copied()
                .filter(|s| !informs.contains(s))
                .collect();
            others.shuffle(&mut self.rng);
            informs.extend(others.into_iter().take(2 - informs.len()));
        }

        let ask_request = self.rng.gen_bool(0.5);
        let request = if ask_request {
            let preferred: Vec<SlotName> = self.goal.request_slots_of(g).collect();
            let pool = if preferred.is_empty() {
                self.goal.request.iter().copied().collect()
            } else {
                preferred
            };
            pool.choose(&mut self.rng).copied()
        } else {
            None
        };

        let mut act = DialogueAct::new(
            Speaker::User,
            if request.is_some() { Intent::Request } else { Intent::Inform },
        );
        for s in &informs {
            act.slots.insert(*s, self.value_of(*s).unwrap().to_string());
            self.agenda.retain(|item| *item != AgendaItem::Inform(*s));
        }
        if let Some(r) = request {
            act.slots.insert(r, String::new());
            self.agenda.retain(|item| *item != AgendaItem::Request(r));
        }
        self.emit(act)
    }

    /// Records a clean user act and returns what the agent perceives.
    fn emit(&mut self, act: DialogueAct) -> Result<DialogueAct> {
        self.state.apply(&act, &self.kb)?;
        Ok(apply_noise(&act, self.config.error_prob, &self.pools, &mut self.rng))
    }

    pub fn step(&mut self, agent_act: &DialogueAct) -> Result<StepResult> {
        if self.done {
            return Err(Error::SteppedAfterDone);
        }
        if !self.started {
            self.initial_act()?;
        }
        self.state.apply(agent_act, &self.kb)?;
        self.turn += 1;
        let spec = self.config.reward;
        let mut reward = spec.per_turn;

        if agent_act.intent == Intent::Book {
            if let Some(g) = agent_act.subtask() {
                self.try_book(g)?;
            }
        }

        if self.turn >= spec.max_turn {
            return Ok(self.finish(Outcome::Failure, reward + spec.failure_reward, None));
        }
        if self.succeeded() {
            let thanks = self.emit(DialogueAct::new(Speaker::User, Intent::Thanks))?;
            return Ok(self.finish(Outcome::Success, reward + spec.success_reward, Some(thanks)));
        }

        let reply = match agent_act.intent {
            Intent::Closing => None,
            Intent::Request => Some(self.answer_request(agent_act)),
            Intent::NotAvailable => match self.revise(agent_act) {
                Revision::Switched(act) => Some(act),
                Revision::Irrelevant => Some(DialogueAct::new(Speaker::User, Intent::Deny)),
                Revision::GiveUp => {
                    reward += spec.failure_reward;
                    let bye = self.emit(DialogueAct::new(Speaker::User, Intent::Closing))?;
                    return Ok(self.finish(Outcome::Failure, reward, Some(bye)));
                }
            },
            _ => Some(self.next_from_agenda()),
        };
        match reply {
            None => Ok(self.finish(Outcome::Failure, reward + spec.failure_reward, None)),
            Some(act) => {
                let perceived = self.emit(act)?;
                Ok(StepResult {
                    user_act: Some(perceived),
                    done: false,
                    reward,
                    outcome: None,
                })
            }
        }
    }

    fn finish(&mut self, outcome: Outcome, reward: f64, user_act: Option<DialogueAct>) -> StepResult {
        self.done = true;
        self.outcome = Some(outcome);
        StepResult {
            user_act,
            done: true,
            reward,
            outcome: Some(outcome),
        }
    }

    fn succeeded(&self) -> bool {
        self.booked.iter().all(|b| *b)
            && self.goal.request.iter().all(|s| self.state.filled_requests.contains(*s))
            && self.state.constraint_violations.is_empty()
    }

    /// A booking counts only when every goal constraint of the subtask has
    /// been conveyed with its current value and a record has room.
    fn try_book(&mut self, g: SubtaskId) -> Result<()> {
        let conveyed = self
            .goal
            .inform_slots_of(g)
            .all(|s| self.state.user_informed.get(&s).map(String::as_str) == self.value_of(s));
        self.booked[g.index()] = false;
        self.shadow.release(g);
        if !conveyed {
            return Ok(());
        }
        let people = match g {
            SubtaskId::BookFlightTicket => SlotName::NumberOfPeople,
            SubtaskId::ReserveHotel => SlotName::HotelNumberOfPeople,
        };
        let people = match self.value_of(people).map(|v| parse_value(people, v)) {
            Some(Ok(ParsedValue::Count(n))) => n,
            _ => 1,
        };
        let constraints: Vec<(SlotName, String)> = self
            .goal
            .inform_slots_of(g)
            .filter(|s| s.is_queryable())
            .map(|s| (s, self.value_of(s).unwrap().to_string()))
            .collect();
        let held = self.shadow.book(
            &self.kb,
            g,
            constraints.iter().map(|(s, v)| (*s, v.as_str())),
            people,
        )?;
        self.booked[g.index()] = held.is_some();
        Ok(())
    }

    fn answer_request(&mut self, agent_act: &DialogueAct) -> DialogueAct {
        let mut act = DialogueAct::new(Speaker::User, Intent::Inform);
        for slot in agent_act.requested_slots() {
            if let Some(v) = self.value_of(slot) {
                act.slots.insert(slot, v.to_string());
            }
        }
        if act.slots.is_empty() {
            return DialogueAct::new(Speaker::User, Intent::Deny);
        }
        for s in act.slots.keys() {
            self.agenda.retain(|item| *item != AgendaItem::Inform(*s));
        }
        act
    }

    /// Relaxes the blamed slot when it is soft; otherwise another soft slot
    /// of the same subtask with values left to try.
    fn revise(&mut self, agent_act: &DialogueAct) -> Revision {
        let Some(blamed) = agent_act.slots.keys().next().copied() else {
            return Revision::Irrelevant;
        };
        let g = blamed.subtask();
        let candidates: Vec<SlotName> = std::iter::once(blamed)
            .chain(self.goal.soft_slots().filter(|s| s.subtask() == g))
            .collect();
        for slot in candidates {
            let Some(values) = self.goal.inform.get(&slot) else {
                continue;
            };
            let i = self.chosen.get(&slot).copied().unwrap_or(0);
            if i + 1 < values.len() {
                let next = values[i + 1].clone();
                self.chosen.insert(slot, i + 1);
                self.booked[g.index()] = false;
                self.shadow.release(g);
                return Revision::Switched(DialogueAct::inform(Speaker::User, slot, next));
            }
        }
        Revision::GiveUp
    }

    fn next_from_agenda(&mut self) -> DialogueAct {
        while let Some(item) = self.agenda.pop() {
            match item {
                AgendaItem::Inform(s) => {
                    let v = self.value_of(s).unwrap().to_string();
                    if self.state.user_informed.get(&s) != Some(&v) {
                        return DialogueAct::inform(Speaker::User, s, v);
                    }
                }
                AgendaItem::Request(s) => {
                    if !self.state.filled_requests.contains(s) {
                        return DialogueAct::request(Speaker::User, s);
                    }
                }
            }
        }
        // Goal slots whose current value was never conveyed (e.g. after a
        // soft switch the agent did not hear) come back first.
        let missing = self
            .goal
            .inform
            .keys()
            .copied()
            .find(|s| self.state.user_informed.get(s).map(String::as_str) != self.value_of(*s));
        if let Some(s) = missing {
            return DialogueAct::inform(Speaker::User, s, self.value_of(s).unwrap().to_string());
        }
        let pending = self
            .goal
            .request
            .iter()
            .copied()
            .find(|s| !self.state.filled_requests.contains(*s));
        if let Some(s) = pending {
            return DialogueAct::request(Speaker::User, s);
        }
        DialogueAct::new(Speaker::User, Intent::Book)
    }
}

enum Revision {
    Switched(DialogueAct),
    Irrelevant,
    GiveUp,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goals::{sample_goal, UserType};
    use crate::kb::{default_city_pool, generate_kb};

    fn setup(user_type: UserType, seed: u64) -> UserSimulator {
        let kb = Arc::new(generate_kb(5, 120, 60, &default_city_pool(), 0.7).unwrap());
        let pools = Arc::new(ValuePools::from_kb(&kb));
        let goal = sample_goal(user_type, &kb, seed).unwrap();
        UserSimulator::new(kb, pools, goal, SimulatorConfig::default(), seed)
    }

    #[test]
    fn reward_constants() {
        let spec = RewardSpec::new(60);
        assert_eq!(spec.success_reward, 120.0);
        assert_eq!(spec.failure_reward, -60.0);
        assert_eq!(spec.per_turn, -1.0);
        spec.validate().unwrap();
    }

    #[test]
    fn first_act_rules() {
        for seed in 0..200 {
            let mut sim = setup(UserType::A, seed);
            let act = sim.initial_act().unwrap();
            assert!(act.valued_slots().count() >= 2);
            assert!(act.slots.contains_key(&SlotName::OrCity));
            assert!(act.slots.contains_key(&SlotName::DstCity));
            if act.intent == Intent::Request {
                assert_eq!(act.requested_slots().count(), 1);
            } else {
                assert_eq!(act.intent, Intent::Inform);
            }
        }
    }

    #[test]
    fn ordinary_turn_costs_one() {
        let mut sim = setup(UserType::A, 1);
        sim.initial_act().unwrap();
        let r = sim
            .step(&DialogueAct::request(Speaker::Agent, SlotName::NumberOfPeople))
            .unwrap();
        assert_eq!(r.reward, -1.0);
        assert!(!r.done);
        let reply = r.user_act.unwrap();
        assert_eq!(reply.intent, Intent::Inform);
        assert!(reply.slots.contains_key(&SlotName::NumberOfPeople));
    }

    #[test]
    fn timeout_fails() {
        let mut sim = setup(UserType::A, 2);
        sim.initial_act().unwrap();
        let mut total = 0.0;
        let mut last = None;
        while !sim.done {
            let r = sim
                .step(&DialogueAct::request(Speaker::Agent, SlotName::Seat))
                .unwrap();
            total += r.reward;
            last = Some(r);
        }
        let last = last.unwrap();
        assert_eq!(last.outcome, Some(Outcome::Failure));
        assert_eq!(last.reward, -61.0);
        assert_eq!(sim.turn, 60);
        assert_eq!(total, -60.0 - 60.0);
        assert!(matches!(
            sim.step(&DialogueAct::new(Speaker::Agent, Intent::Closing)),
            Err(Error::SteppedAfterDone)
        ));
    }

    #[test]
    fn soft_slot_is_revised_on_not_available() {
        let mut sim = setup(UserType::B, 3);
        sim.initial_act().unwrap();
        let slot = sim.goal.soft_slots().next().unwrap();
        let second = sim.goal.inform[&slot][1].clone();
        let r = sim
            .step(&DialogueAct::new(Speaker::Agent, Intent::NotAvailable).with_slot(slot, "x"))
            .unwrap();
        let reply = r.user_act.unwrap();
        assert_eq!(reply.slots.get(&slot), Some(&second));
        let r = sim
            .step(&DialogueAct::new(Speaker::Agent, Intent::NotAvailable).with_slot(slot, "x"))
            .unwrap();
        assert_eq!(r.outcome, Some(Outcome::Failure));
        assert_eq!(r.reward, -61.0);
    }

    #[test]
    fn noise_boundaries() {
        let kb = generate_kb(5, 60, 30, &default_city_pool(), 0.7).unwrap();
        let pools = ValuePools::from_kb(&kb);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let act = DialogueAct::new(Speaker::User, Intent::Inform)
            .with_slot(SlotName::DstCity, "Cancun")
            .with_slot(SlotName::NumberOfPeople, "2");
        assert_eq!(apply_noise(&act, 0.0, &pools, &mut rng), act);
        let noisy = apply_noise(&act, 1.0, &pools, &mut rng);
        for (slot, v) in &act.slots {
            assert_ne!(&noisy.slots[slot], v);
        }
    }
}
