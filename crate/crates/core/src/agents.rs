//! Agent action set, hand-written policies and the two learning agents.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::critic::{subtask_status, IntrinsicSpec, SubtaskStatus};
use crate::domain::{DialogueAct, Intent, MonthDay, SlotKind, SlotName, Speaker, SubtaskId, UserGoal};
use crate::error::{Error, QnetError, Result};
use crate::kb::{Kb, RecordRef};
use crate::qnet::{masked_argmax, NetCheckpoint, QNetwork, ReplayBuffer, Sample};
use crate::tracker::{DialogueState, FEATURE_WIDTH, FEATURE_WIDTH_WITH_SUBTASK};

/// Bumped whenever [`action_set`] changes.
pub const ACTION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentAction {
    Request(SlotName),
    Inform(SlotName),
    NotAvailable(SubtaskId),
    Book(SubtaskId),
    Closing,
}

impl AgentAction {
    pub fn subtask(self) -> Option<SubtaskId> {
        match self {
            AgentAction::Request(s) | AgentAction::Inform(s) => Some(s.subtask()),
            AgentAction::NotAvailable(g) | AgentAction::Book(g) => Some(g),
            AgentAction::Closing => None,
        }
    }

    pub fn index(self) -> usize {
        action_set()
            .iter()
            .position(|a| *a == self)
            .expect("every action is in the action set")
    }
}

/// The fixed primitive action set shared by every learning agent.
pub fn action_set() -> &'static [AgentAction] {
    static ACTIONS: OnceLock<Vec<AgentAction>> = OnceLock::new();
    ACTIONS.get_or_init(|| {
        let mut a = Vec::new();
        a.extend(SlotName::ALL.iter().filter(|s| s.is_user_informable()).map(|s| AgentAction::Request(*s)));
        a.extend(SlotName::ALL.iter().filter(|s| s.is_agent_answerable()).map(|s| AgentAction::Inform(*s)));
        a.extend(SubtaskId::ALL.iter().map(|g| AgentAction::NotAvailable(*g)));
        a.extend(SubtaskId::ALL.iter().map(|g| AgentAction::Book(*g)));
        a.push(AgentAction::Closing);
        a
    })
}

pub fn num_actions() -> usize {
    action_set().len()
}

/// Allowed actions when the low-level policy is confined to subtask `g`.
pub fn subtask_action_mask(g: SubtaskId) -> Vec<bool> {
    action_set()
        .iter()
        .map(|a| a.subtask().is_none_or(|h| h == g))
        .collect()
}

fn parse_date(v: Option<&str>) -> Option<MonthDay> {
    v.and_then(MonthDay::parse)
}

fn record_consistent(state: &DialogueState, kb: &Kb, g: SubtaskId, i: usize) -> bool {
    let known = |s| state.merged_value(s);
    match kb.record(g, i) {
        Some(RecordRef::Flight(f)) => {
            parse_date(known(SlotName::HotelDateCheckin)).is_none_or(|d| f.depart_date_dep <= d)
                && parse_date(known(SlotName::HotelDateCheckout)).is_none_or(|d| f.return_date_dep >= d)
                && known(SlotName::HotelCity).is_none_or(|c| f.dst_city == c)
        }
        Some(RecordRef::Hotel(h)) => {
            parse_date(known(SlotName::DepartDateDep)).is_none_or(|d| h.window_contains(d))
                && parse_date(known(SlotName::ReturnDateDep)).is_none_or(|d| h.window_contains(d))
                && known(SlotName::DstCity).is_none_or(|c| h.hotel_city == c)
        }
        None => false,
    }
}

/// The record the agent talks about for subtask `g`: the first match under
/// the user's constraints that fits what is known about the other subtask.
pub fn select_record(state: &DialogueState, kb: &Kb, g: SubtaskId) -> Option<usize> {
    let idx = kb.matching_indices(g, state.user_constraints(g)).ok()?;
    idx.iter()
        .copied()
        .find(|&i| record_consistent(state, kb, g, i))
        .or_else(|| idx.first().copied())
}

fn placeholder(slot: SlotName) -> &'static str {
    match slot.kind() {
        SlotKind::Date => "01/01",
        SlotKind::Time => "00:00",
        SlotKind::Count | SlotKind::Price => "1",
        _ => "none",
    }
}

/// Value the agent informs for `slot`.
pub fn inform_value(state: &DialogueState, kb: &Kb, slot: SlotName) -> String {
    let g = slot.subtask();
    let index = select_record(state, kb, g).or(if kb.len_of(g) > 0 { Some(0) } else { None });
    let Some(record) = index.and_then(|i| kb.record(g, i)) else {
        return placeholder(slot).to_string();
    };
    match record {
        RecordRef::Flight(f) => f.value(slot),
        RecordRef::Hotel(h) => {
            if slot == SlotName::HotelDateCheckout {
                let checkin = parse_date(state.merged_value(SlotName::HotelDateCheckin));
                let fits = |d: &MonthDay| h.window_contains(*d) && checkin.is_none_or(|c| *d >= c);
                let ret = parse_date(state.merged_value(SlotName::ReturnDateDep)).filter(fits);
                Some(ret.unwrap_or(h.hotel_date_checkout).to_string())
            } else {
                h.value(slot)
            }
        }
    }
    .unwrap_or_else(|| placeholder(slot).to_string())
}

/// The slot the agent names when reporting that nothing matches.
pub fn blamed_slot(state: &DialogueState, kb: &Kb, g: SubtaskId) -> (SlotName, String) {
    let informed: Vec<(SlotName, &str)> = state.user_constraints(g).collect();
    for (slot, value) in &informed {
        let rest = informed.iter().copied().filter(|(s, _)| s != slot);
        if kb.count_with(g, rest).is_ok_and(|n| n > 0) {
            return (*slot, value.to_string());
        }
    }
    if let Some((slot, value)) = informed.first() {
        return (*slot, value.to_string());
    }
    let city = match g {
        SubtaskId::BookFlightTicket => SlotName::DstCity,
        SubtaskId::ReserveHotel => SlotName::HotelCity,
    };
    (city, "any".to_string())
}

/// Turns an action into a concrete agent act given the current state.
pub fn render_action(action: AgentAction, state: &DialogueState, kb: &Kb) -> DialogueAct {
    match action {
        AgentAction::Request(s) => DialogueAct::request(Speaker::Agent, s),
        AgentAction::Inform(s) => DialogueAct::inform(Speaker::Agent, s, inform_value(state, kb, s)),
        AgentAction::NotAvailable(g) => {
            let (slot, value) = blamed_slot(state, kb, g);
            DialogueAct::new(Speaker::Agent, Intent::NotAvailable).with_slot(slot, value)
        }
        AgentAction::Book(g) => {
            let price = g.price_slot();
            DialogueAct::new(Speaker::Agent, Intent::Book).with_slot(price, inform_value(state, kb, price))
        }
        AgentAction::Closing => DialogueAct::new(Speaker::Agent, Intent::Closing),
    }
}

const RULE_SLOTS: [&[SlotName]; 2] = [
    &[
        SlotName::OrCity,
        SlotName::DstCity,
        SlotName::DepartDateDep,
        SlotName::NumberOfPeople,
    ],
    &[SlotName::HotelCity, SlotName::HotelDateCheckin],
];

/// The subtask a rule agent is working on: the first one not yet booked.
pub fn rule_phase(state: &DialogueState) -> SubtaskId {
    SubtaskId::ALL
        .into_iter()
        .find(|g| !state.is_booked(*g))
        .unwrap_or(SubtaskId::ReserveHotel)
}

fn rule_common(state: &DialogueState, exhaustive: bool) -> AgentAction {
    let all_booked = SubtaskId::ALL.iter().all(|g| state.is_booked(*g));
    let g = rule_phase(state);
    let asked = |s: &SlotName| state.user_informed.contains_key(s) || state.agent_requested.contains(*s);
    if exhaustive {
        if let Some(s) = g.slots().filter(|s| s.is_user_informable()).find(|s| !asked(s)) {
            return AgentAction::Request(s);
        }
        if let Some(s) = g
            .slots()
            .filter(|s| s.is_agent_answerable())
            .find(|s| !state.agent_informed.contains_key(s) && !state.user_informed.contains_key(s))
        {
            return AgentAction::Inform(s);
        }
    } else if let Some(s) = RULE_SLOTS[g.index()].iter().find(|s| !asked(s)) {
        return AgentAction::Request(*s);
    }
    if let Some(slot) = state.pending_requests().find(|s| s.is_agent_answerable()) {
        return AgentAction::Inform(slot);
    }
    if all_booked {
        return AgentAction::Closing;
    }
    AgentAction::Book(g)
}

/// Hand-written baseline that asks a fixed subset of slots per subtask.
pub fn rule_next_act(state: &DialogueState) -> AgentAction {
    rule_common(state, false)
}

/// Like [`rule_next_act`] but walks every slot of the subtask before booking.
pub fn rule_plus_next_act(state: &DialogueState) -> AgentAction {
    rule_common(state, true)
}

/// ε-greedy choice; ties go to the lowest index.
pub fn epsilon_greedy(q: &[f64], epsilon: f64, mask: Option<&[bool]>, rng: &mut impl Rng) -> usize {
    if epsilon > 0.0 && rng.gen_bool(epsilon.min(1.0)) {
        let allowed: Vec<usize> = (0..q.len()).filter(|i| mask.is_none_or(|m| m[*i])).collect();
        return allowed[rng.gen_range(0..allowed.len())];
    }
    masked_argmax(q, mask).expect("at least one allowed action")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub hidden: usize,
    pub lr: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub capacity: usize,
    pub clip: f64,
    /// Multiplier applied to extrinsic rewards before they reach a network.
    pub reward_scale: f64,
    pub action_mask: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            hidden: 80,
            lr: 1e-3,
            gamma: 0.95,
            batch_size: 16,
            capacity: 10_000,
            clip: 1.0,
            reward_scale: 1.0 / 60.0,
            action_mask: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatTransition {
    pub s: Box<[f64]>,
    pub a: usize,
    pub r: f64,
    pub s_next: Box<[f64]>,
    pub terminal: bool,
}

/// Flat DQN over the full action set, trained on extrinsic reward only.
#[derive(Debug, Clone)]
pub struct FlatAgent {
    pub q: QNetwork,
    pub buffer: ReplayBuffer<FlatTransition>,
    pub config: LearnerConfig,
}

impl FlatAgent {
    pub fn new(config: LearnerConfig, seed: u64) -> Result<Self> {
        Ok(FlatAgent {
            q: QNetwork::new(FEATURE_WIDTH, config.hidden, num_actions(), config.lr, config.clip, seed)?,
            buffer: ReplayBuffer::new(config.capacity),
            config,
        })
    }

    pub fn select_action(&mut self, features: &[f64], epsilon: f64, rng: &mut impl Rng) -> usize {
        let q = self.q.q_values(features);
        epsilon_greedy(q, epsilon, None, rng)
    }

    pub fn observe(&mut self, s: &[f64], a: usize, r_e: f64, s_next: &[f64], terminal: bool) {
        self.buffer.push(FlatTransition {
            s: s.into(),
            a,
            r: r_e,
            s_next: s_next.into(),
            terminal,
        });
    }

    pub fn train_step(&mut self, rng: &mut impl Rng) -> Result<f64> {
        let idx = self.buffer.sample_indices(self.config.batch_size, rng)?;
        let (gamma, scale) = (self.config.gamma, self.config.reward_scale);
        let mut targets = Vec::with_capacity(idx.len());
        for &i in &idx {
            let t = self.buffer.get(i).unwrap();
            let next = if t.terminal { 0.0 } else { self.q.target_max(&t.s_next, None) };
            targets.push(crate::qnet::td_target_low(t.r * scale, next, t.terminal, gamma));
        }
        let batch: Vec<Sample<'_>> = idx
            .iter()
            .zip(&targets)
            .map(|(&i, &y)| {
                let t = self.buffer.get(i).unwrap();
                Sample {
                    x: &t.s,
                    action: t.a,
                    target: y,
                }
            })
            .collect();
        Ok(self.q.train(&batch)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopTransition {
    pub s: Box<[f64]>,
    pub g: SubtaskId,
    /// Discounted extrinsic return of the segment, unscaled.
    pub reward: f64,
    pub s_next: Box<[f64]>,
    pub steps: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowTransition {
    pub s: Box<[f64]>,
    pub g: SubtaskId,
    pub a: usize,
    pub r: f64,
    pub s_next: Box<[f64]>,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub g: SubtaskId,
    pub s0: Box<[f64]>,
    pub reward: f64,
    pub steps: usize,
}

/// Two-level agent: Q1 picks a subtask, Q2 picks primitive actions within it.
#[derive(Debug, Clone)]
pub struct HrlAgent {
    pub q1: QNetwork,
    pub q2: QNetwork,
    pub d1: ReplayBuffer<TopTransition>,
    pub d2: ReplayBuffer<LowTransition>,
    pub config: LearnerConfig,
    pub eps_g: f64,
    pub eps_c: f64,
    segment: Option<Segment>,
    next_segment: usize,
    input: Vec<f64>,
}

fn with_subtask(s: &[f64], g: SubtaskId, out: &mut Vec<f64>) {
    out.clear();
    out.extend_from_slice(s);
    out.resize(FEATURE_WIDTH_WITH_SUBTASK, 0.0);
    out[FEATURE_WIDTH + g.index()] = 1.0;
}

impl HrlAgent {
    pub fn new(config: LearnerConfig, seed: u64) -> Result<Self> {
        let q1 = QNetwork::new(FEATURE_WIDTH, config.hidden, SubtaskId::COUNT, config.lr, config.clip, seed)?;
        let q2 = QNetwork::new(
            FEATURE_WIDTH_WITH_SUBTASK,
            config.hidden,
            num_actions(),
            config.lr,
            config.clip,
            seed.wrapping_add(0x9e37_79b9),
        )?;
        Ok(HrlAgent {
            q1,
            q2,
            d1: ReplayBuffer::new(config.capacity),
            d2: ReplayBuffer::new(config.capacity),
            config,
            eps_g: 0.1,
            eps_c: 0.1,
            segment: None,
            next_segment: 0,
            input: Vec::with_capacity(FEATURE_WIDTH_WITH_SUBTASK),
        })
    }

    pub fn segment(&self) -> Option<&Segment> {
        self.segment.as_ref()
    }

    /// Drops any open segment without storing it (used between episodes in
    /// evaluation).
    pub fn reset_segment(&mut self) {
        self.segment = None;
    }

    /// ε_g-greedy over Q1 restricted to `allowed`, then opens a segment.
    pub fn select_subtask(&mut self, state: &DialogueState, allowed: [bool; 2], rng: &mut impl Rng) -> Result<SubtaskId> {
        if self.segment.is_some() {
            return Err(Error::SegmentAlreadyOpen);
        }
        let s = state.featurize();
        let q = self.q1.q_values(&s).to_vec();
        let mask = if allowed.iter().any(|a| *a) { allowed } else { [true; 2] };
        let g = SubtaskId::from_index(epsilon_greedy(&q, self.eps_g, Some(&mask), rng)).unwrap();
        self.open_segment(g, &s)?;
        Ok(g)
    }

    pub fn open_segment(&mut self, g: SubtaskId, s0: &[f64]) -> Result<()> {
        if self.segment.is_some() {
            return Err(Error::SegmentAlreadyOpen);
        }
        self.segment = Some(Segment {
            id: self.next_segment,
            g,
            s0: s0.into(),
            reward: 0.0,
            steps: 0,
        });
        self.next_segment += 1;
        Ok(())
    }

    pub fn select_action(&mut self, state: &DialogueState, g: SubtaskId, rng: &mut impl Rng) -> Result<usize> {
        match &self.segment {
            Some(seg) if seg.g == g => {}
            _ => return Err(Error::NoOpenSegment),
        }
        let s = state.featurize();
        let mut input = std::mem::take(&mut self.input);
        with_subtask(&s, g, &mut input);
        let mask = self.config.action_mask.then(|| subtask_action_mask(g));
        let q = self.q2.q_values(&input).to_vec();
        self.input = input;
        Ok(epsilon_greedy(&q, self.eps_c, mask.as_deref(), rng))
    }

    /// Records one low-level step; closes the segment and stores its
    /// top-level transition when the subtask terminates or the episode ends.
    #[allow(clippy::too_many_arguments)]
    pub fn observe(
        &mut self,
        s: &[f64],
        g: SubtaskId,
        a: usize,
        r_e: f64,
        r_i: f64,
        s_next: &[f64],
        status: SubtaskStatus,
        episode_done: bool,
    ) -> Result<Option<Segment>> {
        let gamma = self.config.gamma;
        let seg = match self.segment.as_mut() {
            Some(seg) if seg.g == g => seg,
            _ => return Err(Error::NoOpenSegment),
        };
        let ends = status.is_terminal() || episode_done;
        self.d2.push(LowTransition {
            s: s.into(),
            g,
            a,
            r: r_i,
            s_next: s_next.into(),
            terminal: ends,
        });
        seg.reward += gamma.powi(seg.steps as i32) * r_e;
        seg.steps += 1;
        if !ends {
            return Ok(None);
        }
        let seg = self.segment.take().unwrap();
        self.d1.push(TopTransition {
            s: seg.s0.clone(),
            g,
            reward: seg.reward,
            s_next: s_next.into(),
            steps: seg.steps,
            terminal: episode_done,
        });
        Ok(Some(seg))
    }

    pub fn train_top(&mut self, rng: &mut impl Rng) -> Result<f64> {
        let idx = self.d1.sample_indices(self.config.batch_size, rng)?;
        let (gamma, scale) = (self.config.gamma, self.config.reward_scale);
        let mut targets = Vec::with_capacity(idx.len());
        for &i in &idx {
            let t = self.d1.get(i).unwrap();
            let next = if t.terminal { 0.0 } else { self.q1.target_max(&t.s_next, None) };
            targets.push(crate::qnet::td_target_top(t.reward * scale, next, t.steps, t.terminal, gamma));
        }
        let batch: Vec<Sample<'_>> = idx
            .iter()
            .zip(&targets)
            .map(|(&i, &y)| {
                let t = self.d1.get(i).unwrap();
                Sample {
                    x: &t.s,
                    action: t.g.index(),
                    target: y,
                }
            })
            .collect();
        Ok(self.q1.train(&batch)?)
    }

    pub fn train_low(&mut self, rng: &mut impl Rng) -> Result<f64> {
        let idx = self.d2.sample_indices(self.config.batch_size, rng)?;
        let gamma = self.config.gamma;
        let width = FEATURE_WIDTH_WITH_SUBTASK;
        let mut inputs = vec![0.0; idx.len() * width];
        let mut next = Vec::with_capacity(width);
        let mut targets = Vec::with_capacity(idx.len());
        for (k, &i) in idx.iter().enumerate() {
            let t = self.d2.get(i).unwrap();
            let row = &mut inputs[k * width..(k + 1) * width];
            row[..FEATURE_WIDTH].copy_from_slice(&t.s);
            row[FEATURE_WIDTH + t.g.index()] = 1.0;
            let best = if t.terminal {
                0.0
            } else {
                with_subtask(&t.s_next, t.g, &mut next);
                let mask = self.config.action_mask.then(|| subtask_action_mask(t.g));
                self.q2.target_max(&next, mask.as_deref())
            };
            targets.push(crate::qnet::td_target_low(t.r, best, t.terminal, gamma));
        }
        let batch: Vec<Sample<'_>> = idx
            .iter()
            .enumerate()
            .map(|(k, &i)| Sample {
                x: &inputs[k * width..(k + 1) * width],
                action: self.d2.get(i).unwrap().a,
                target: targets[k],
            })
            .collect();
        Ok(self.q2.train(&batch)?)
    }

    /// One minibatch update of each level.
    pub fn train_step(&mut self, rng: &mut impl Rng) -> Result<(f64, f64)> {
        if self.d1.is_empty() || self.d2.is_empty() {
            return Err(QnetError::EmptyBuffer.into());
        }
        let l1 = self.train_top(rng)?;
        let l2 = self.train_low(rng)?;
        Ok((l1, l2))
    }

    pub fn sync_targets(&mut self) {
        self.q1.sync_target();
        self.q2.sync_target();
    }
}

/// Read-only policy used for greedy inference (evaluation, chat service).
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum PolicySnapshot {
    Rule,
    RulePlus,
    Flat(QNetwork),
    Hrl { q1: QNetwork, q2: QNetwork, action_mask: bool },
}

/// Per-dialogue bookkeeping for a hierarchical snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HrlCursor {
    pub subtask: Option<SubtaskId>,
    pub turns: usize,
}

impl PolicySnapshot {
    pub fn name(&self) -> &'static str {
        match self {
            PolicySnapshot::Rule => "rule",
            PolicySnapshot::RulePlus => "rule+",
            PolicySnapshot::Flat(_) => "flat",
            PolicySnapshot::Hrl { .. } => "hrl",
        }
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self, PolicySnapshot::Hrl { .. })
    }

    /// Greedy top-level choice among `allowed` subtasks (all if none are).
    pub fn pick_subtask(&self, features: &[f64], allowed: [bool; 2]) -> SubtaskId {
        match self {
            PolicySnapshot::Hrl { q1, .. } => {
                let q = q1.online.forward(features).expect("feature width");
                let mask = if allowed.iter().any(|a| *a) { allowed } else { [true; 2] };
                SubtaskId::from_index(masked_argmax(&q, Some(&mask)).unwrap()).unwrap()
            }
            _ => rule_phase_from(allowed),
        }
    }

    /// Greedy primitive action; `g` is the active subtask of a hierarchical
    /// policy and ignored otherwise.
    pub fn pick_action(&self, state: &DialogueState, features: &[f64], g: Option<SubtaskId>) -> usize {
        match self {
            PolicySnapshot::Rule => rule_next_act(state).index(),
            PolicySnapshot::RulePlus => rule_plus_next_act(state).index(),
            PolicySnapshot::Flat(q) => {
                let out = q.online.forward(features).expect("feature width");
                masked_argmax(&out, None).unwrap()
            }
            PolicySnapshot::Hrl { q2, action_mask, .. } => {
                let g = g.unwrap_or(SubtaskId::BookFlightTicket);
                let mut input = Vec::with_capacity(FEATURE_WIDTH_WITH_SUBTASK);
                with_subtask(features, g, &mut input);
                let out = q2.online.forward(&input).expect("feature width");
                let mask = action_mask.then(|| subtask_action_mask(g));
                masked_argmax(&out, mask.as_deref()).unwrap()
            }
        }
    }

    /// Greedy action for an interactive dialogue. For the hierarchical
    /// policy the internal critic closes the cursor's segment before a new
    /// subtask is chosen.
    pub fn act(
        &self,
        state: &DialogueState,
        cursor: &mut HrlCursor,
        goal: Option<&UserGoal>,
        spec: &IntrinsicSpec,
    ) -> AgentAction {
        let s = state.featurize();
        if !self.is_hierarchical() {
            return action_set()[self.pick_action(state, &s, None)];
        }
        if let Some(g) = cursor.subtask {
            if subtask_status(state, g, goal, cursor.turns, false, spec).is_terminal() {
                cursor.subtask = None;
            }
        }
        let g = match cursor.subtask {
            Some(g) => g,
            None => {
                let g = self.pick_subtask(&s, initiation_mask(state, goal, spec));
                cursor.subtask = Some(g);
                cursor.turns = 0;
                g
            }
        };
        cursor.turns += 1;
        action_set()[self.pick_action(state, &s, Some(g))]
    }
}

fn rule_phase_from(allowed: [bool; 2]) -> SubtaskId {
    if allowed[0] || !allowed[1] {
        SubtaskId::BookFlightTicket
    } else {
        SubtaskId::ReserveHotel
    }
}

/// Subtasks the top level may open: those the critic does not already
/// consider complete.
pub fn initiation_mask(state: &DialogueState, goal: Option<&UserGoal>, spec: &IntrinsicSpec) -> [bool; 2] {
    SubtaskId::ALL.map(|g| subtask_status(state, g, goal, 0, false, spec) != SubtaskStatus::Success)
}

/// Serialized learning agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub kind: String,
    pub action_schema_version: u32,
    pub eps_g: f64,
    pub eps_c: f64,
    pub action_mask: bool,
    pub nets: Vec<NetCheckpoint>,
}

impl AgentCheckpoint {
    pub fn from_snapshot(snapshot: &PolicySnapshot) -> Self {
        let (nets, action_mask) = match snapshot {
            PolicySnapshot::Rule | PolicySnapshot::RulePlus => (vec![], false),
            PolicySnapshot::Flat(q) => (vec![q.checkpoint()], false),
            PolicySnapshot::Hrl { q1, q2, action_mask } => (vec![q1.checkpoint(), q2.checkpoint()], *action_mask),
        };
        AgentCheckpoint {
            kind: snapshot.name().to_string(),
            action_schema_version: ACTION_SCHEMA_VERSION,
            eps_g: 0.0,
            eps_c: 0.0,
            action_mask,
            nets,
        }
    }

    pub fn to_snapshot(&self) -> Result<PolicySnapshot> {
        if self.action_schema_version != ACTION_SCHEMA_VERSION {
            return Err(QnetError::Checkpoint(format!(
                "action schema {} does not match {}",
                self.action_schema_version, ACTION_SCHEMA_VERSION
            ))
            .into());
        }
        let net = |i: usize, in_dim: usize, out_dim: usize| -> Result<QNetwork> {
            let ck = self
                .nets
                .get(i)
                .ok_or_else(|| QnetError::Checkpoint(format!("missing network {i}")))?;
            if ck.in_dim != in_dim || ck.out_dim != out_dim {
                return Err(QnetError::DimensionMismatch {
                    expected: in_dim * 1000 + out_dim,
                    actual: ck.in_dim * 1000 + ck.out_dim,
                }
                .into());
            }
            Ok(QNetwork::from_checkpoint(ck)?)
        };
        Ok(match self.kind.as_str() {
            "rule" => PolicySnapshot::Rule,
            "rule+" => PolicySnapshot::RulePlus,
            "flat" => PolicySnapshot::Flat(net(0, FEATURE_WIDTH, num_actions())?),
            "hrl" => PolicySnapshot::Hrl {
                q1: net(0, FEATURE_WIDTH, SubtaskId::COUNT)?,
                q2: net(1, FEATURE_WIDTH_WITH_SUBTASK, num_actions())?,
                action_mask: self.action_mask,
            },
            other => return Err(Error::config("kind", format!("unknown agent kind `{other}`"))),
        })
    }
}
