//! Episode orchestration: the prep/test phase gate, visibility, reward
//! emission, tagging, and termination.
//!
//! An episode runs for `max_env_steps` physics ticks. Agents choose actions
//! every `decision_interval` ticks and per-frame rewards are emitted at those
//! decision boundaries. For the first 40% of the episode (the prep phase)
//! seekers are pinned in place: their actions are discarded and collisions
//! cannot displace them, so hiders can set up.

pub mod scenario;

use crate::math::{ray_box, Vec3};
use crate::world::{
    step_physics_pinned, try_manipulate_mut, AgentAction, BodyId, BodyKind, OpeningId, WorldError,
    WorldState,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("signal strength undefined for coincident positions")]
    CoincidentPositions,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Episode timing: total ticks, prep share, and the decision cadence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    pub max_env_steps: u64,
    pub prep_fraction: f64,
    pub decision_interval: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig { max_env_steps: 3072, prep_fraction: 0.40, decision_interval: 3 }
    }
}

impl PhaseConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.prep_fraction > 0.0 && self.prep_fraction < 1.0) {
            return Err(format!("prep_fraction {} outside (0, 1)", self.prep_fraction));
        }
        if self.decision_interval < 1 {
            return Err("decision_interval must be at least 1".into());
        }
        if self.max_env_steps % self.decision_interval != 0 {
            return Err(format!(
                "max_env_steps {} not divisible by decision_interval {}",
                self.max_env_steps, self.decision_interval
            ));
        }
        Ok(())
    }

    pub fn prep_steps(&self) -> u64 {
        (self.max_env_steps as f64 * self.prep_fraction).floor() as u64
    }

    pub fn test_steps(&self) -> u64 {
        self.max_env_steps - self.prep_steps()
    }

    pub fn decisions_per_episode(&self) -> u64 {
        self.max_env_steps / self.decision_interval
    }
}

/// Ticks of the prep phase: 40% of the episode, floored to a whole tick.
pub fn prep_steps(max_env_steps: u64) -> u64 {
    PhaseConfig { max_env_steps, ..Default::default() }.prep_steps()
}

/// Ticks of the test phase: the exact complement, so prep + test is the
/// whole episode.
pub fn test_steps(max_env_steps: u64) -> u64 {
    max_env_steps - prep_steps(max_env_steps)
}

/// Forward-alignment-over-distance pursuit signal: positive when the target
/// is ahead, growing as it gets closer.
pub fn signal_strength(p1: Vec3, p2: Vec3, forward: Vec3) -> Result<f64, GameError> {
    let a = p2 - p1;
    let r_d = a.norm();
    if r_d == 0.0 {
        return Err(GameError::CoincidentPositions);
    }
    let d = forward.dot(a * (1.0 / r_d));
    Ok(d / r_d)
}

/// Field-of-view cone and occlusion rule used for sight rewards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityConfig {
    /// Horizontal half-angle of the frontal cone, degrees per side.
    pub fov_half_angle_deg: f64,
    pub max_distance: f64,
}

impl Default for VisibilityConfig {
    fn default() -> Self {
        VisibilityConfig { fov_half_angle_deg: 84.0, max_distance: 20.0 }
    }
}

/// True iff the hider's center sits inside the seeker's frontal cone, within
/// range, and no wall, boundary, or locked prop blocks the line between
/// their centers. Unlocked props and obstacles do not occlude; hiding
/// behind cover means locking it down.
pub fn visible(
    state: &WorldState,
    seeker_id: BodyId,
    hider_id: BodyId,
    config: &VisibilityConfig,
) -> bool {
    let (Some(seeker), Some(hider)) = (state.body(seeker_id), state.body(hider_id)) else {
        return false;
    };
    let rel = hider.position - seeker.position;
    let dist = rel.norm();
    if dist > config.max_distance || dist == 0.0 {
        return false;
    }
    let local = rel.rotate_yaw_inv(seeker.yaw);
    let az = local.x.atan2(local.z).abs();
    if az > config.fov_half_angle_deg.to_radians() {
        return false;
    }
    let dir = rel * (1.0 / dist);
    for b in &state.bodies {
        let occludes = matches!(b.kind, BodyKind::Wall | BodyKind::Boundary)
            || (b.kind == BodyKind::Prop && b.locked);
        if !occludes {
            continue;
        }
        if let Some(t) = ray_box(seeker.position, dir, &b.aabb()) {
            if t < dist {
                return false;
            }
        }
    }
    true
}

/// Reward schedule. Per-frame magnitudes stay far below terminal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    pub hider_hidden_per_frame: f64,
    pub seeker_sight_per_frame: f64,
    pub seeker_tag: f64,
    /// Penalty on the tagged hider; zero by default to keep negative rewards
    /// minimal, exposed for experiments.
    pub hider_tagged: f64,
    /// One-time bonus per opening, paid to every hider when it first becomes
    /// blocked.
    pub opening_blocked_bonus: f64,
    /// Share the tag reward across the whole seeker team.
    pub team_shared: bool,
    // Single-agent scenario shaping.
    pub in_target_per_frame: f64,
    pub reach_target: f64,
    pub look_at_per_frame: f64,
    pub collide_penalty: f64,
    pub wall_collide_penalty: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            hider_hidden_per_frame: 0.001,
            seeker_sight_per_frame: 0.001,
            seeker_tag: 1.0,
            hider_tagged: 0.0,
            opening_blocked_bonus: 0.1,
            team_shared: true,
            in_target_per_frame: 0.0,
            reach_target: 0.0,
            look_at_per_frame: 0.0,
            collide_penalty: 0.0,
            wall_collide_penalty: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardCause {
    HiddenFrame,
    SightFrame,
    Tag,
    Tagged,
    BlockedOpening,
    ScenarioSpecific,
}

impl RewardCause {
    pub fn name(self) -> &'static str {
        match self {
            RewardCause::HiddenFrame => "hidden_frame",
            RewardCause::SightFrame => "sight_frame",
            RewardCause::Tag => "tag",
            RewardCause::Tagged => "tagged",
            RewardCause::BlockedOpening => "blocked_opening",
            RewardCause::ScenarioSpecific => "scenario_specific",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardEvent {
    pub tick: u64,
    pub agent_id: BodyId,
    pub amount: f64,
    pub cause: RewardCause,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Prep,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Tag,
    StepLimit,
}

/// Per-episode bookkeeping: phase, termination, and the reward ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStatus {
    pub phase: Phase,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
    pub cumulative_reward: BTreeMap<BodyId, f64>,
    pub decisions: u64,
    openings_paid: BTreeSet<OpeningId>,
}

impl EpisodeStatus {
    pub fn new(state: &WorldState) -> Self {
        EpisodeStatus {
            phase: Phase::Prep,
            done: false,
            done_reason: None,
            cumulative_reward: state.agent_ids().into_iter().map(|id| (id, 0.0)).collect(),
            decisions: 0,
            openings_paid: BTreeSet::new(),
        }
    }
}

/// Everything step_episode needs beyond the state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub phase: PhaseConfig,
    pub rewards: RewardConfig,
    pub visibility: VisibilityConfig,
    /// Curriculum multiplier applied to per-frame rewards (level 4 halves
    /// them).
    pub reward_scale: f64,
    pub dt: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            phase: PhaseConfig::default(),
            rewards: RewardConfig::default(),
            visibility: VisibilityConfig::default(),
            reward_scale: 1.0,
            dt: 0.02,
        }
    }
}

/// Advance one physics tick of an episode, emitting reward events. Pure over
/// (state, status); see [`step_episode_mut`] for the in-place form.
pub fn step_episode(
    state: &WorldState,
    status: &EpisodeStatus,
    actions: &BTreeMap<BodyId, AgentAction>,
    config: &EpisodeConfig,
) -> Result<(WorldState, EpisodeStatus, Vec<RewardEvent>), GameError> {
    let mut state = state.clone();
    let mut status = status.clone();
    let events = step_episode_mut(&mut state, &mut status, actions, config)?;
    Ok((state, status, events))
}

pub fn step_episode_mut(
    state: &mut WorldState,
    status: &mut EpisodeStatus,
    actions: &BTreeMap<BodyId, AgentAction>,
    config: &EpisodeConfig,
) -> Result<Vec<RewardEvent>, GameError> {
    if status.done {
        return Err(GameError::EpisodeFinished);
    }
    let prep_ticks = config.phase.prep_steps();
    let in_prep = state.tick < prep_ticks;
    let interval = config.phase.decision_interval;

    // Seekers are immobilized during prep: their actions are replaced by
    // zero and the physics pins them against pushes.
    let seekers: BTreeSet<BodyId> = state.seeker_ids().into_iter().collect();
    let mut effective: BTreeMap<BodyId, AgentAction> = BTreeMap::new();
    for (id, action) in actions {
        if in_prep && seekers.contains(id) {
            effective.insert(*id, AgentAction::ZERO);
        } else {
            effective.insert(*id, *action);
        }
    }

    // Manipulation happens on decision ticks, once per chosen action.
    if state.tick % interval == 0 {
        let ids: Vec<BodyId> = effective.keys().copied().collect();
        for id in ids {
            let act = effective[&id];
            try_manipulate_mut(state, id, act.manipulate);
        }
    }

    let pinned = if in_prep { seekers.clone() } else { BTreeSet::new() };
    step_physics_pinned(state, &effective, config.dt, &pinned)?;

    let mut events = Vec::new();
    let hiders = state.hider_ids();
    let seekers: Vec<BodyId> = seekers.into_iter().collect();

    let tags = state.detect_tags();
    if !tags.is_empty() {
        status.done = true;
        status.done_reason = Some(DoneReason::Tag);
        let taggers: BTreeSet<BodyId> = tags.iter().map(|(s, _)| *s).collect();
        let tagged: BTreeSet<BodyId> = tags.iter().map(|(_, h)| *h).collect();
        let paid: Vec<BodyId> = if config.rewards.team_shared {
            seekers.clone()
        } else {
            taggers.into_iter().collect()
        };
        for s in paid {
            events.push(RewardEvent {
                tick: state.tick,
                agent_id: s,
                amount: config.rewards.seeker_tag,
                cause: RewardCause::Tag,
            });
        }
        if config.rewards.hider_tagged != 0.0 {
            for h in tagged {
                events.push(RewardEvent {
                    tick: state.tick,
                    agent_id: h,
                    amount: config.rewards.hider_tagged,
                    cause: RewardCause::Tagged,
                });
            }
        }
    } else if state.tick % interval == 0 {
        // A decision frame just completed: emit per-frame rewards from one
        // shared visibility evaluation.
        status.decisions += 1;
        let mut seen_by_any: BTreeMap<BodyId, bool> = hiders.iter().map(|h| (*h, false)).collect();
        for s in &seekers {
            let mut sees = false;
            for h in &hiders {
                if visible(state, *s, *h, &config.visibility) {
                    sees = true;
                    seen_by_any.insert(*h, true);
                }
            }
            if sees {
                events.push(RewardEvent {
                    tick: state.tick,
                    agent_id: *s,
                    amount: config.rewards.seeker_sight_per_frame * config.reward_scale,
                    cause: RewardCause::SightFrame,
                });
            }
        }
        for h in &hiders {
            if !seen_by_any[h] {
                events.push(RewardEvent {
                    tick: state.tick,
                    agent_id: *h,
                    amount: config.rewards.hider_hidden_per_frame * config.reward_scale,
                    cause: RewardCause::HiddenFrame,
                });
            }
        }
        // First-time blocked openings pay every hider once.
        let opening_ids: Vec<OpeningId> =
            state.enabled_openings().map(|o| o.id).collect();
        for oid in opening_ids {
            if status.openings_paid.contains(&oid) {
                continue;
            }
            if state.opening_blocked(oid)? {
                status.openings_paid.insert(oid);
                for h in &hiders {
                    events.push(RewardEvent {
                        tick: state.tick,
                        agent_id: *h,
                        amount: config.rewards.opening_blocked_bonus,
                        cause: RewardCause::BlockedOpening,
                    });
                }
            }
        }
    }

    if !status.done && state.tick >= config.phase.max_env_steps {
        status.done = true;
        status.done_reason = Some(DoneReason::StepLimit);
    }
    status.phase = if state.tick < prep_ticks { Phase::Prep } else { Phase::Test };
    for e in &events {
        *status.cumulative_reward.entry(e.agent_id).or_insert(0.0) += e.amount;
    }
    Ok(events)
}
