//! Episode runner, training loop, evaluation and metrics.

use std::fmt::Write as _;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    action_set, initiation_mask, render_action, rule_next_act, rule_phase, rule_plus_next_act, FlatAgent, HrlAgent,
    LearnerConfig, PolicySnapshot,
};
use crate::critic::{intrinsic_reward, subtask_status, IntrinsicSpec, SubtaskStatus};
use crate::domain::{DialogueAct, Speaker, SubtaskId, UserGoal};
use crate::error::{Error, Result};
use crate::goals::{generate_goal_corpus, UserType};
use crate::kb::{default_city_pool, generate_kb, Kb};
use crate::simulator::{Outcome, RewardSpec, SimulatorConfig, UserSimulator, ValuePools};
use crate::tracker::DialogueState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Rule,
    #[serde(rename = "rule+")]
    RulePlus,
    Flat,
    Hrl,
}

impl std::str::FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rule" => Ok(AgentKind::Rule),
            "rule+" | "rule_plus" | "ruleplus" => Ok(AgentKind::RulePlus),
            "flat" | "dqn" => Ok(AgentKind::Flat),
            "hrl" => Ok(AgentKind::Hrl),
            other => Err(Error::config("agent", format!("unknown agent `{other}`"))),
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AgentKind::Rule => "rule",
            AgentKind::RulePlus => "rule+",
            AgentKind::Flat => "flat",
            AgentKind::Hrl => "hrl",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub agent: AgentKind,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub dialogues_per_epoch: usize,
    pub probe_dialogues: usize,
    pub eval_dialogues: usize,
    pub user_type: UserType,
    pub error_prob: f64,
    pub max_turn: usize,
    pub warm_start_dialogues: usize,
    /// `None` means: measure the rule agent's success rate at startup.
    pub flush_threshold: Option<f64>,
    pub learner: LearnerConfig,
    pub eps_start: f64,
    pub eps_end: f64,
    pub intrinsic: IntrinsicSpec,
    pub switch_termination: bool,
    pub kb_seed: u64,
    pub n_flights: usize,
    pub n_hotels: usize,
    pub coverage: f64,
    pub corpus_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            agent: AgentKind::Hrl,
            seeds: vec![1],
            epochs: 300,
            dialogues_per_epoch: 100,
            probe_dialogues: 200,
            eval_dialogues: 500,
            user_type: UserType::B,
            error_prob: 0.0,
            max_turn: 60,
            warm_start_dialogues: 100,
            flush_threshold: None,
            learner: LearnerConfig::default(),
            eps_start: 0.1,
            eps_end: 0.01,
            intrinsic: IntrinsicSpec::default(),
            switch_termination: false,
            kb_seed: 2017,
            n_flights: 200,
            n_hotels: 80,
            coverage: 0.7,
            corpus_size: 759,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("dialogues_per_epoch", self.dialogues_per_epoch),
            ("probe_dialogues", self.probe_dialogues),
            ("eval_dialogues", self.eval_dialogues),
            ("max_turn", self.max_turn),
            ("warm_start_dialogues", self.warm_start_dialogues),
            ("n_flights", self.n_flights),
            ("n_hotels", self.n_hotels),
            ("corpus_size", self.corpus_size),
            ("hidden", self.learner.hidden),
            ("batch_size", self.learner.batch_size),
            ("capacity", self.learner.capacity),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let unit = [
            ("error_prob", Some(self.error_prob)),
            ("flush_threshold", self.flush_threshold),
            ("eps_start", Some(self.eps_start)),
            ("eps_end", Some(self.eps_end)),
            ("coverage", Some(self.coverage)),
        ];
        for (field, v) in unit {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(field, format!("{v} is outside [0, 1]")));
                }
            }
        }
        if !(self.learner.gamma > 0.0 && self.learner.gamma <= 1.0) {
            return Err(Error::config("gamma", "must be in (0, 1]"));
        }
        if self.learner.lr.is_nan() || self.learner.lr <= 0.0 {
            return Err(Error::config("lr", "must be positive"));
        }
        self.intrinsic.validate()?;
        RewardSpec::new(self.max_turn).validate()
    }

    /// Exploration rate for an epoch: linear from `eps_start` to `eps_end`
    /// over the first half of training, then flat.
    pub fn epsilon(&self, epoch: usize) -> f64 {
        let half = (self.epochs / 2).max(1);
        if epoch >= half {
            self.eps_end
        } else {
            self.eps_start + (self.eps_end - self.eps_start) * epoch as f64 / half as f64
        }
    }
}

/// Knowledge base and goal sets shared by every run of a configuration.
#[derive(Debug, Clone)]
pub struct Environment {
    pub kb: Arc<Kb>,
    pub pools: Arc<ValuePools>,
    pub train_goals: Vec<UserGoal>,
    pub probe_goals: Vec<UserGoal>,
    pub eval_goals: Vec<UserGoal>,
    pub sim: SimulatorConfig,
}

const PROBE_STREAM: u64 = 0x5052_4f42;
const EVAL_STREAM: u64 = 0x4556_414c;

pub fn mix_for(user_type: UserType) -> [f64; 3] {
    match user_type {
        UserType::A => [1.0, 0.0, 0.0],
        UserType::B => [0.0, 1.0, 0.0],
        UserType::C => [0.0, 0.0, 1.0],
    }
}

impl Environment {
    pub fn build(config: &TrainConfig) -> Result<Self> {
        let kb = generate_kb(
            config.kb_seed,
            config.n_flights,
            config.n_hotels,
            &default_city_pool(),
            config.coverage,
        )?;
        Self::from_kb(kb, config)
    }

    /// Samples train, probe and eval goals for `config.user_type` from `kb`.
    pub fn from_kb(kb: Kb, config: &TrainConfig) -> Result<Self> {
        let mix = mix_for(config.user_type);
        let train_goals = generate_goal_corpus(config.corpus_size, mix, &kb, config.kb_seed)?;
        let probe_goals = generate_goal_corpus(config.probe_dialogues, mix, &kb, config.kb_seed ^ PROBE_STREAM)?;
        let eval_goals = generate_goal_corpus(config.eval_dialogues, mix, &kb, config.kb_seed ^ EVAL_STREAM)?;
        Ok(Self::with_goals(kb, train_goals, probe_goals, eval_goals, config))
    }

    pub fn with_goals(
        kb: Kb,
        train_goals: Vec<UserGoal>,
        probe_goals: Vec<UserGoal>,
        eval_goals: Vec<UserGoal>,
        config: &TrainConfig,
    ) -> Self {
        let pools = Arc::new(ValuePools::from_kb(&kb));
        Environment {
            kb: Arc::new(kb),
            pools,
            train_goals,
            probe_goals,
            eval_goals,
            sim: SimulatorConfig {
                reward: RewardSpec::new(config.max_turn),
                error_prob: config.error_prob,
            },
        }
    }

    pub fn simulator(&self, goal: &UserGoal, seed: u64) -> UserSimulator {
        UserSimulator::new(self.kb.clone(), self.pools.clone(), goal.clone(), self.sim.clone(), seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub speaker: Speaker,
    pub act: DialogueAct,
    pub r_e: f64,
    pub r_i: Option<f64>,
    pub subtask: Option<SubtaskId>,
    pub segment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub goal: UserGoal,
    pub turns: Vec<TurnRecord>,
    pub outcome: Outcome,
    pub total_reward: f64,
    pub agent_turns: usize,
    pub switches: usize,
}

impl EpisodeRecord {
    pub fn success(&self) -> bool {
        self.outcome == Outcome::Success
    }
}

/// Aggregated bookkeeping checks over hierarchical training episodes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub episodes: usize,
    pub segments: usize,
    pub agent_turns: usize,
    pub max_reward_error: f64,
    pub d1_mismatches: usize,
    pub d2_mismatches: usize,
    pub bonus_violations: usize,
    pub reward_identity_failures: usize,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.max_reward_error < 1e-9
            && self.d1_mismatches == 0
            && self.d2_mismatches == 0
            && self.bonus_violations == 0
            && self.reward_identity_failures == 0
    }

    pub fn merge(&mut self, other: &AuditReport) {
        self.episodes += other.episodes;
        self.segments += other.segments;
        self.agent_turns += other.agent_turns;
        self.max_reward_error = self.max_reward_error.max(other.max_reward_error);
        self.d1_mismatches += other.d1_mismatches;
        self.d2_mismatches += other.d2_mismatches;
        self.bonus_violations += other.bonus_violations;
        self.reward_identity_failures += other.reward_identity_failures;
    }
}

/// What the runner tells a controller after each agent turn.
pub struct StepView<'a> {
    pub s: &'a [f64],
    pub g: Option<SubtaskId>,
    pub a: usize,
    pub r_e: f64,
    pub r_i: f64,
    pub s_next: &'a [f64],
    pub status: SubtaskStatus,
    pub done: bool,
}

/// Chooses actions for the episode runner and optionally learns from them.
pub trait Controller {
    fn hierarchical(&self) -> bool;

    fn pick_subtask(&mut self, _state: &DialogueState, _s: &[f64], allowed: [bool; 2]) -> Result<SubtaskId> {
        Ok(if allowed[0] || !allowed[1] {
            SubtaskId::BookFlightTicket
        } else {
            SubtaskId::ReserveHotel
        })
    }

    fn pick_action(&mut self, state: &DialogueState, s: &[f64], g: Option<SubtaskId>) -> Result<usize>;

    /// Returns the stored discounted return when a segment was closed.
    fn observe(&mut self, _step: &StepView<'_>) -> Result<Option<f64>> {
        Ok(None)
    }

    /// Cumulative (top-level, low-level) buffer pushes.
    fn push_counts(&self) -> (u64, u64) {
        (0, 0)
    }
}

/// Greedy inference through a snapshot; never writes anything.
pub struct SnapshotController<'a>(pub &'a PolicySnapshot);

impl Controller for SnapshotController<'_> {
    fn hierarchical(&self) -> bool {
        self.0.is_hierarchical()
    }

    fn pick_subtask(&mut self, _state: &DialogueState, s: &[f64], allowed: [bool; 2]) -> Result<SubtaskId> {
        Ok(self.0.pick_subtask(s, allowed))
    }

    fn pick_action(&mut self, state: &DialogueState, s: &[f64], g: Option<SubtaskId>) -> Result<usize> {
        Ok(self.0.pick_action(state, s, g))
    }
}

pub struct FlatController<'a, R: Rng> {
    pub agent: &'a mut FlatAgent,
    pub rng: &'a mut R,
    pub epsilon: f64,
    /// Let the rule agent act while the learner only records.
    pub rule_driven: bool,
}

impl<R: Rng> Controller for FlatController<'_, R> {
    fn hierarchical(&self) -> bool {
        false
    }

    fn pick_action(&mut self, state: &DialogueState, s: &[f64], _g: Option<SubtaskId>) -> Result<usize> {
        if self.rule_driven {
            return Ok(rule_next_act(state).index());
        }
        Ok(self.agent.select_action(s, self.epsilon, self.rng))
    }

    fn observe(&mut self, step: &StepView<'_>) -> Result<Option<f64>> {
        self.agent.observe(step.s, step.a, step.r_e, step.s_next, step.done);
        Ok(None)
    }

    fn push_counts(&self) -> (u64, u64) {
        (0, self.agent.buffer.total_pushes())
    }
}

pub struct HrlController<'a, R: Rng> {
    pub agent: &'a mut HrlAgent,
    pub rng: &'a mut R,
    pub rule_driven: bool,
}

impl<R: Rng> Controller for HrlController<'_, R> {
    fn hierarchical(&self) -> bool {
        true
    }

    fn pick_subtask(&mut self, state: &DialogueState, s: &[f64], allowed: [bool; 2]) -> Result<SubtaskId> {
        if self.rule_driven {
            let g = rule_phase(state);
            self.agent.open_segment(g, s)?;
            return Ok(g);
        }
        self.agent.select_subtask(state, allowed, self.rng)
    }

    fn pick_action(&mut self, state: &DialogueState, _s: &[f64], g: Option<SubtaskId>) -> Result<usize> {
        if self.rule_driven {
            return Ok(rule_next_act(state).index());
        }
        let g = g.ok_or(Error::NoOpenSegment)?;
        self.agent.select_action(state, g, self.rng)
    }

    fn observe(&mut self, step: &StepView<'_>) -> Result<Option<f64>> {
        let g = step.g.ok_or(Error::NoOpenSegment)?;
        let closed = self
            .agent
            .observe(step.s, g, step.a, step.r_e, step.r_i, step.s_next, step.status, step.done)?;
        Ok(closed.map(|seg| seg.reward))
    }

    fn push_counts(&self) -> (u64, u64) {
        (self.agent.d1.total_pushes(), self.agent.d2.total_pushes())
    }
}

pub struct RuleController {
    pub plus: bool,
}

impl Controller for RuleController {
    fn hierarchical(&self) -> bool {
        false
    }

    fn pick_action(&mut self, state: &DialogueState, _s: &[f64], _g: Option<SubtaskId>) -> Result<usize> {
        Ok(if self.plus {
            rule_plus_next_act(state).index()
        } else {
            rule_next_act(state).index()
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EpisodeOptions {
    pub intrinsic: IntrinsicSpec,
    pub gamma: f64,
    pub switch_termination: bool,
    /// Keep every act in the record (off for bulk training).
    pub keep_turns: bool,
}

impl EpisodeOptions {
    pub fn from_config(config: &TrainConfig) -> Self {
        EpisodeOptions {
            intrinsic: config.intrinsic,
            gamma: config.learner.gamma,
            switch_termination: config.switch_termination,
            keep_turns: true,
        }
    }
}

struct OpenSegment {
    id: usize,
    g: SubtaskId,
    turns: usize,
    rewards: Vec<f64>,
    terminal_bonuses: usize,
    off_subtask_run: usize,
}

/// Plays one dialogue from the user's opening act to the end.
pub fn run_episode<C: Controller>(
    ctrl: &mut C,
    env: &Environment,
    goal: &UserGoal,
    sim_seed: u64,
    opts: &EpisodeOptions,
    mut audit: Option<&mut AuditReport>,
) -> Result<EpisodeRecord> {
    let kb = &env.kb;
    let max_turn = env.sim.reward.max_turn;
    let mut sim = env.simulator(goal, sim_seed);
    let mut state = DialogueState::new(kb, max_turn);
    let mut turns = Vec::new();
    let opening = sim.initial_act()?;
    state.apply(&opening, kb)?;
    let mut act_count = 1;
    if opts.keep_turns {
        turns.push(TurnRecord {
            turn: 0,
            speaker: Speaker::User,
            act: opening,
            r_e: 0.0,
            r_i: None,
            subtask: None,
            segment: None,
        });
    }

    let hierarchical = ctrl.hierarchical();
    let pushes_before = ctrl.push_counts();
    let mut segment: Option<OpenSegment> = None;
    let mut next_segment = 0;
    let mut closed_segments = 0;
    let mut last_subtask: Option<SubtaskId> = None;
    let mut switches = 0;
    let mut total = 0.0;
    let mut agent_turns = 0;
    let mut s = state.featurize();
    let mut s_next = vec![0.0; s.len()];

    let outcome = loop {
        if agent_turns >= max_turn {
            return Err(Error::TurnLimitBug(agent_turns));
        }
        if hierarchical && segment.is_none() {
            let allowed = initiation_mask(&state, Some(goal), &opts.intrinsic);
            let g = ctrl.pick_subtask(&state, &s, allowed)?;
            segment = Some(OpenSegment {
                id: next_segment,
                g,
                turns: 0,
                rewards: Vec::new(),
                terminal_bonuses: 0,
                off_subtask_run: 0,
            });
            next_segment += 1;
        }
        let g = segment.as_ref().map(|seg| seg.g);
        let a = ctrl.pick_action(&state, &s, g)?;
        let action = action_set()[a];
        let act = render_action(action, &state, kb);
        state.apply(&act, kb)?;
        let step = sim.step(&act)?;
        agent_turns += 1;
        total += step.reward;
        if let Some(h) = action.subtask() {
            if last_subtask.is_some_and(|p| p != h) {
                switches += 1;
            }
            last_subtask = Some(h);
        }
        let agent_turn_index = act_count;
        act_count += 1;
        if let Some(reply) = &step.user_act {
            state.apply(reply, kb)?;
        }
        state.featurize_into(&mut s_next);

        let mut r_i = None;
        let mut status = SubtaskStatus::InProgress;
        if let Some(seg) = segment.as_mut() {
            seg.turns += 1;
            status = subtask_status(&state, seg.g, Some(goal), seg.turns, step.done, &opts.intrinsic);
            if opts.switch_termination && status == SubtaskStatus::InProgress {
                match action.subtask() {
                    Some(h) if h != seg.g => seg.off_subtask_run += 1,
                    _ => seg.off_subtask_run = 0,
                }
                if seg.off_subtask_run >= 2 {
                    status = SubtaskStatus::Fail;
                }
            }
            let ri = intrinsic_reward(SubtaskStatus::InProgress, status, &opts.intrinsic);
            if status.is_terminal() {
                seg.terminal_bonuses += 1;
            }
            seg.rewards.push(step.reward);
            r_i = Some(ri);
        }
        let stored = ctrl.observe(&StepView {
            s: &s,
            g,
            a,
            r_e: step.reward,
            r_i: r_i.unwrap_or(0.0),
            s_next: &s_next,
            status,
            done: step.done,
        })?;

        if opts.keep_turns {
            turns.push(TurnRecord {
                turn: agent_turn_index,
                speaker: Speaker::Agent,
                act,
                r_e: step.reward,
                r_i,
                subtask: g,
                segment: segment.as_ref().map(|seg| seg.id),
            });
            if let Some(reply) = &step.user_act {
                turns.push(TurnRecord {
                    turn: act_count,
                    speaker: Speaker::User,
                    act: reply.clone(),
                    r_e: 0.0,
                    r_i: None,
                    subtask: None,
                    segment: None,
                });
            }
        }
        if step.user_act.is_some() {
            act_count += 1;
        }

        if status.is_terminal() || (step.done && segment.is_some()) {
            let seg = segment.take().unwrap();
            closed_segments += 1;
            if let Some(audit) = audit.as_deref_mut() {
                audit.segments += 1;
                if seg.terminal_bonuses > 1 {
                    audit.bonus_violations += 1;
                }
                if let Some(stored) = stored {
                    let recomputed: f64 = seg
                        .rewards
                        .iter()
                        .enumerate()
                        .map(|(k, r)| opts.gamma.powi(k as i32) * r)
                        .sum();
                    audit.max_reward_error = audit.max_reward_error.max((stored - recomputed).abs());
                }
            }
        }
        std::mem::swap(&mut s, &mut s_next);
        if step.done {
            break step.outcome.expect("finished simulators carry an outcome");
        }
    };

    if let Some(audit) = audit {
        audit.episodes += 1;
        audit.agent_turns += agent_turns;
        let (d1, d2) = ctrl.push_counts();
        if hierarchical && d1 - pushes_before.0 != closed_segments as u64 {
            audit.d1_mismatches += 1;
        }
        if d2 - pushes_before.1 != agent_turns as u64 {
            audit.d2_mismatches += 1;
        }
        let spec = env.sim.reward;
        let terminal = if outcome == Outcome::Success {
            spec.success_reward
        } else {
            spec.failure_reward
        };
        if (total - (terminal + spec.per_turn * agent_turns as f64)).abs() > 1e-9 {
            audit.reward_identity_failures += 1;
        }
    }

    Ok(EpisodeRecord {
        goal: goal.clone(),
        turns,
        outcome,
        total_reward: total,
        agent_turns,
        switches,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub success_rate: f64,
    pub avg_turns: f64,
    pub avg_reward: f64,
    /// Mean subtask switches over successful dialogues (0 when none).
    pub avg_switches_success: f64,
}

impl Metrics {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a EpisodeSummary>) -> Metrics {
        let (mut n, mut succ, mut turns, mut reward, mut sw) = (0usize, 0usize, 0usize, 0.0, 0usize);
        for r in records {
            n += 1;
            turns += r.agent_turns;
            reward += r.total_reward;
            if r.success {
                succ += 1;
                sw += r.switches;
            }
        }
        let n_f = n.max(1) as f64;
        Metrics {
            success_rate: succ as f64 / n_f,
            avg_turns: turns as f64 / n_f,
            avg_reward: reward / n_f,
            avg_switches_success: if succ == 0 { 0.0 } else { sw as f64 / succ as f64 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub success: bool,
    pub agent_turns: usize,
    pub total_reward: f64,
    pub switches: usize,
}

impl From<&EpisodeRecord> for EpisodeSummary {
    fn from(r: &EpisodeRecord) -> Self {
        EpisodeSummary {
            success: r.success(),
            agent_turns: r.agent_turns,
            total_reward: r.total_reward,
            switches: r.switches,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metrics: Metrics,
    pub episodes: Vec<EpisodeSummary>,
}

fn eval_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64)
}

/// Greedy evaluation over `goals` (cycled to `n` dialogues). Episodes are
/// independent, so the result depends only on the snapshot, goals and seed.
pub fn evaluate_goals(
    snapshot: &PolicySnapshot,
    env: &Environment,
    goals: &[UserGoal],
    n: usize,
    seed: u64,
    opts: &EpisodeOptions,
    mut log: Option<&mut dyn Write>,
) -> Result<EvalReport> {
    if n == 0 || goals.is_empty() {
        return Err(Error::InvalidCount("evaluation needs at least one dialogue"));
    }
    let mut opts = *opts;
    opts.keep_turns = log.is_some();
    let mut episodes = Vec::with_capacity(n);
    for i in 0..n {
        let goal = &goals[i % goals.len()];
        let mut ctrl = SnapshotController(snapshot);
        let record = run_episode(&mut ctrl, env, goal, eval_seed(seed, i), &opts, None)?;
        if let Some(w) = log.as_deref_mut() {
            serde_json::to_writer(&mut *w, &record)?;
            w.write_all(b"\n")?;
        }
        episodes.push(EpisodeSummary::from(&record));
    }
    Ok(EvalReport {
        metrics: Metrics::from_records(&episodes),
        episodes,
    })
}

pub fn evaluate(
    snapshot: &PolicySnapshot,
    env: &Environment,
    n: usize,
    seed: u64,
    opts: &EpisodeOptions,
    log: Option<&mut dyn Write>,
) -> Result<EvalReport> {
    evaluate_goals(snapshot, env, &env.eval_goals, n, seed, opts, log)
}

#[allow(clippy::large_enum_variant)]
enum Learner {
    Flat(FlatAgent),
    Hrl(HrlAgent),
    Fixed(PolicySnapshot),
}

impl Learner {
    fn snapshot(&self) -> PolicySnapshot {
        match self {
            Learner::Flat(a) => PolicySnapshot::Flat(a.q.clone()),
            Learner::Hrl(a) => PolicySnapshot::Hrl {
                q1: a.q1.clone(),
                q2: a.q2.clone(),
                action_mask: a.config.action_mask,
            },
            Learner::Fixed(p) => p.clone(),
        }
    }

    fn buffer_lens(&self) -> (usize, usize) {
        match self {
            Learner::Flat(a) => (0, a.buffer.len()),
            Learner::Hrl(a) => (a.d1.len(), a.d2.len()),
            Learner::Fixed(_) => (0, 0),
        }
    }

    fn push_counts(&self) -> (u64, u64) {
        match self {
            Learner::Flat(a) => (0, a.buffer.total_pushes()),
            Learner::Hrl(a) => (a.d1.total_pushes(), a.d2.total_pushes()),
            Learner::Fixed(_) => (0, 0),
        }
    }
}

fn train_episode(
    learner: &mut Learner,
    env: &Environment,
    rng: &mut ChaCha8Rng,
    epsilon: f64,
    rule_driven: bool,
    opts: &EpisodeOptions,
    audit: &mut AuditReport,
) -> Result<EpisodeRecord> {
    let goal = &env.train_goals[rng.gen_range(0..env.train_goals.len())];
    let sim_seed: u64 = rng.gen();
    match learner {
        Learner::Flat(agent) => {
            let mut ctrl = FlatController {
                agent,
                rng,
                epsilon,
                rule_driven,
            };
            run_episode(&mut ctrl, env, goal, sim_seed, opts, Some(audit))
        }
        Learner::Hrl(agent) => {
            agent.eps_g = epsilon;
            agent.eps_c = epsilon;
            let mut ctrl = HrlController {
                agent,
                rng,
                rule_driven,
            };
            run_episode(&mut ctrl, env, goal, sim_seed, opts, Some(audit))
        }
        Learner::Fixed(p) => run_episode(&mut SnapshotController(p), env, goal, sim_seed, opts, None),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_success: f64,
    pub probe: Metrics,
    pub loss_top: f64,
    pub loss_low: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seed: u64,
    pub curve: Vec<EpochStats>,
    pub flush_epoch: Option<usize>,
    pub threshold: f64,
    pub best_epoch: usize,
    pub best: PolicySnapshot,
    pub eval: EvalReport,
    pub audit: AuditReport,
}

impl RunResult {
    /// Learning curve as `epoch,success,turns,reward` lines.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("epoch,success,turns,reward\n");
        for e in &self.curve {
            writeln!(
                out,
                "{},{:.4},{:.4},{:.4}",
                e.epoch, e.probe.success_rate, e.probe.avg_turns, e.probe.avg_reward
            )
            .unwrap();
        }
        out
    }
}

/// Success rate of the rule agent on the probe goals.
pub fn measure_rule_success(env: &Environment, opts: &EpisodeOptions, seed: u64) -> Result<f64> {
    let report = evaluate_goals(
        &PolicySnapshot::Rule,
        env,
        &env.probe_goals,
        env.probe_goals.len(),
        seed,
        opts,
        None,
    )?;
    Ok(report.metrics.success_rate)
}

/// Trains one agent for one seed, reporting per-epoch probe metrics.
pub fn run_seed(config: &TrainConfig, env: &Environment, seed: u64) -> Result<RunResult> {
    run_seed_with(config, env, seed, |_| {})
}

pub fn run_seed_with(
    config: &TrainConfig,
    env: &Environment,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<RunResult> {
    config.validate()?;
    let mut opts = EpisodeOptions::from_config(config);
    opts.keep_turns = false;
    let probe_seed = config.kb_seed ^ PROBE_STREAM;
    let threshold = match config.flush_threshold {
        Some(t) => t,
        None => measure_rule_success(env, &opts, probe_seed)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut learner = match config.agent {
        AgentKind::Flat => Learner::Flat(FlatAgent::new(config.learner, seed)?),
        AgentKind::Hrl => Learner::Hrl(HrlAgent::new(config.learner, seed)?),
        AgentKind::Rule => Learner::Fixed(PolicySnapshot::Rule),
        AgentKind::RulePlus => Learner::Fixed(PolicySnapshot::RulePlus),
    };
    let mut audit = AuditReport::default();

    for _ in 0..config.warm_start_dialogues {
        train_episode(&mut learner, env, &mut rng, 0.0, true, &opts, &mut audit)?;
    }
    if let Learner::Flat(a) = &mut learner {
        a.q.sync_target();
    }
    if let Learner::Hrl(a) = &mut learner {
        a.sync_targets();
    }

    let mut curve = Vec::with_capacity(config.epochs);
    let mut flush_epoch = None;
    let mut best: Option<(usize, Metrics, PolicySnapshot)> = None;
    for epoch in 0..config.epochs {
        let epsilon = config.epsilon(epoch);
        let pushes_before = learner.push_counts();
        let mut successes = 0;
        for _ in 0..config.dialogues_per_epoch {
            let record = train_episode(&mut learner, env, &mut rng, epsilon, false, &opts, &mut audit)?;
            successes += record.success() as usize;
        }
        let train_success = successes as f64 / config.dialogues_per_epoch as f64;
        if flush_epoch.is_none() && train_success >= threshold {
            let (p1, p2) = learner.push_counts();
            let (l1, l2) = learner.buffer_lens();
            let old1 = l1.saturating_sub((p1 - pushes_before.0) as usize);
            let old2 = l2.saturating_sub((p2 - pushes_before.1) as usize);
            match &mut learner {
                Learner::Flat(a) => a.buffer.drop_oldest(old2),
                Learner::Hrl(a) => {
                    a.d1.drop_oldest(old1);
                    a.d2.drop_oldest(old2);
                }
                Learner::Fixed(_) => {}
            }
            flush_epoch = Some(epoch);
        }

        let batch = config.learner.batch_size;
        let (mut loss_top, mut loss_low) = (0.0, 0.0);
        match &mut learner {
            Learner::Flat(a) => {
                let steps = a.buffer.len().div_ceil(batch);
                for _ in 0..steps {
                    loss_low += a.train_step(&mut rng)?;
                }
                loss_low /= steps.max(1) as f64;
                a.q.sync_target();
            }
            Learner::Hrl(a) => {
                let steps = a.d1.len().div_ceil(batch);
                for _ in 0..steps {
                    loss_top += a.train_top(&mut rng)?;
                }
                loss_top /= steps.max(1) as f64;
                let steps = a.d2.len().div_ceil(batch);
                for _ in 0..steps {
                    loss_low += a.train_low(&mut rng)?;
                }
                loss_low /= steps.max(1) as f64;
                a.sync_targets();
            }
            Learner::Fixed(_) => {}
        }

        let snapshot = learner.snapshot();
        let probe = evaluate_goals(
            &snapshot,
            env,
            &env.probe_goals,
            env.probe_goals.len(),
            probe_seed,
            &opts,
            None,
        )?
        .metrics;
        let better = match &best {
            None => true,
            Some((_, m, _)) => {
                probe.success_rate > m.success_rate
                    || (probe.success_rate == m.success_rate && probe.avg_reward > m.avg_reward)
            }
        };
        if better {
            best = Some((epoch, probe, snapshot));
        }
        let stats = EpochStats {
            epoch,
            train_success,
            probe,
            loss_top,
            loss_low,
        };
        on_epoch(&stats);
        curve.push(stats);
    }

    let (best_epoch, _, best) = best.expect("at least one epoch");
    let eval = evaluate(&best, env, config.eval_dialogues, config.kb_seed ^ EVAL_STREAM, &opts, None)?;
    Ok(RunResult {
        seed,
        curve,
        flush_epoch,
        threshold,
        best_epoch,
        best,
        eval,
        audit,
    })
}

/// Runs every configured seed.
pub fn run_training(config: &TrainConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    let env = Environment::build(config)?;
    config.seeds.iter().map(|&seed| run_seed(config, &env, seed)).collect()
}
