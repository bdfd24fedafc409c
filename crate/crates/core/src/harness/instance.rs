//! One self-contained environment instance: world, episode bookkeeping,
//! per-instance randomness, trajectory assembly, and episode summaries.
//!
//! Instances step in whole decisions. At each decision every agent picks an
//! action (learned policies sample from the instance's stream), the world
//! advances `decision_interval` ticks with the actions held, and frame
//! rewards land on the pending trajectory entries. Episodes finalize into
//! buffer entries with GAE applied per agent.

use super::{
    action_from_sample, body_id_u32, learned_sample, scripted_action, HarnessError, PolicyRef,
    TeamPolicies,
};
use crate::config::RunConfig;
use crate::curriculum::LevelSpec;
use crate::game::scenario::{ScenarioEpisode, ScenarioSpec};
use crate::game::{step_episode_mut, DoneReason, EpisodeConfig, EpisodeStatus, RewardCause};
use crate::learn::{gae, policy_forward, value_forward, value_forward_team, Entry, Team};
use crate::rng::stream;
use crate::sensors::{observe, ObsConfig};
use crate::world::{build_arena_with, AgentAction, BodyId, BodyKind, WorldState};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Immutable per-run settings an instance needs, with the observation
/// layout resolved once.
#[derive(Debug, Clone)]
pub struct InstanceConfig {
    pub run: RunConfig,
    pub obs: ObsConfig,
    pub scenario: Option<ScenarioSpec>,
    pub gamma: f64,
    pub lambda: f64,
}

impl InstanceConfig {
    pub fn new(run: &RunConfig) -> Self {
        InstanceConfig {
            obs: run.obs_config(),
            scenario: run.scenario_spec(),
            gamma: run.hp.gamma,
            lambda: run.hp.gae_lambda,
            run: run.clone(),
        }
    }
}

/// What one finished episode looked like.
#[derive(Debug, Clone)]
pub struct EpisodeSummary {
    pub instance: u32,
    pub episode: u64,
    pub level: u8,
    pub decisions: u64,
    pub ticks: u64,
    pub done_reason: DoneReason,
    /// Mean per-agent cumulative reward for each team present.
    pub team_mean_reward: BTreeMap<Team, f64>,
    pub per_agent_reward: BTreeMap<u32, f64>,
    /// Hidden decision-frames over (hiders x decisions); zero for scenarios.
    pub hidden_fraction: f64,
    pub openings_blocked: u32,
    pub openings_enabled: u32,
    pub tagged: bool,
    pub recorded: Option<super::RecordedEpisode>,
}

enum EnvState {
    HideSeek { world: WorldState, status: EpisodeStatus },
    Scenario(ScenarioEpisode),
    Empty,
}

struct AgentTraj {
    team: Team,
    entries: Vec<Entry>,
    values: Vec<f64>,
}

/// A single environment instance with its own seeds and episode state.
pub struct EnvInstance {
    pub instance_id: u32,
    cfg: InstanceConfig,
    level: LevelSpec,
    env: EnvState,
    episode_index: u64,
    action_rng: ChaCha8Rng,
    actions: BTreeMap<BodyId, AgentAction>,
    trajs: BTreeMap<BodyId, AgentTraj>,
    hidden_events: u64,
    episode_ticks_start: u64,
    pub ticks_total: u64,
    recording: Option<super::RecordedEpisode>,
    episode_cfg: EpisodeConfig,
}

impl EnvInstance {
    pub fn new(instance_id: u32, cfg: InstanceConfig, level: LevelSpec) -> Self {
        let episode_cfg = EpisodeConfig {
            phase: cfg.run.phase,
            rewards: cfg.run.rewards,
            visibility: cfg.run.visibility,
            reward_scale: level.reward_scale,
            dt: 0.02,
        };
        EnvInstance {
            instance_id,
            cfg,
            level,
            env: EnvState::Empty,
            episode_index: 0,
            action_rng: stream(0, "unseeded", &[]),
            actions: BTreeMap::new(),
            trajs: BTreeMap::new(),
            hidden_events: 0,
            episode_ticks_start: 0,
            ticks_total: 0,
            recording: None,
            episode_cfg,
        }
    }

    /// Difficulty applied on the next episode reset.
    pub fn set_level(&mut self, level: LevelSpec) {
        self.level = level;
    }

    /// Drop any in-progress episode (used between training phases).
    pub fn reset_hard(&mut self) {
        self.env = EnvState::Empty;
        self.trajs.clear();
        self.actions.clear();
        self.recording = None;
    }

    pub fn current_level(&self) -> u8 {
        self.level.level
    }

    fn reset_episode(&mut self) -> Result<(), HarnessError> {
        let run = &self.cfg.run;
        let seed_ix = [u64::from(self.instance_id), self.episode_index];
        let world_seed = crate::rng::derive_seed(run.seed, "world", &seed_ix);
        self.action_rng = stream(run.seed, "actions", &seed_ix);
        self.actions.clear();
        self.trajs.clear();
        self.hidden_events = 0;
        self.episode_cfg.reward_scale = self.level.reward_scale;

        let record = run.harness.replay_record_every > 0
            && self.episode_index % run.harness.replay_record_every == 0;
        match &self.cfg.scenario {
            Some(spec) => {
                let ep = ScenarioEpisode::new(spec.clone(), world_seed);
                self.recording = record.then(|| {
                    super::RecordedEpisode::new_scenario(spec, world_seed, self.instance_id, self.episode_index)
                });
                self.env = EnvState::Scenario(ep);
            }
            None => {
                let world = build_arena_with(
                    &run.arena,
                    self.level.level,
                    self.level.prop_count,
                    run.counts,
                    world_seed,
                )?;
                let status = EpisodeStatus::new(&world);
                self.recording = record.then(|| {
                    super::RecordedEpisode::new_hideseek(
                        self.level.level,
                        self.level.prop_count,
                        run.counts,
                        world_seed,
                        self.level.reward_scale,
                        self.instance_id,
                        self.episode_index,
                    )
                });
                self.env = EnvState::HideSeek { world, status };
            }
        }
        self.episode_ticks_start = self.ticks_total;
        Ok(())
    }

    fn done(&self) -> bool {
        match &self.env {
            EnvState::HideSeek { status, .. } => status.done,
            EnvState::Scenario(ep) => ep.done,
            EnvState::Empty => true,
        }
    }

    fn world(&self) -> &WorldState {
        match &self.env {
            EnvState::HideSeek { world, .. } => world,
            EnvState::Scenario(ep) => &ep.world,
            EnvState::Empty => unreachable!("no active episode"),
        }
    }

    fn scenario_target(&self) -> Option<crate::math::Vec3> {
        match &self.env {
            EnvState::Scenario(ep) if ep.spec.known_target => Some(ep.target),
            _ => None,
        }
    }

    fn observe_agent(&self, id: BodyId) -> Result<Vec<f64>, HarnessError> {
        Ok(observe(
            self.world(),
            id,
            &self.cfg.obs,
            self.cfg.run.phase.max_env_steps,
            self.scenario_target(),
        )?)
    }

    /// Run one decision. Returns the episode summary when this decision
    /// finished the episode; finalized entries append to `out`.
    pub fn run_decision(
        &mut self,
        policies: &TeamPolicies,
        learning: Option<Team>,
        out: &mut Vec<Entry>,
    ) -> Result<Option<EpisodeSummary>, HarnessError> {
        if self.done() {
            self.reset_episode()?;
        }
        let interval = self.cfg.run.phase.decision_interval;

        let agents: Vec<(BodyId, BodyKind)> = self
            .world()
            .bodies
            .iter()
            .filter(|b| b.kind.is_agent())
            .map(|b| (b.id, b.kind))
            .collect();

        // Observations for learned policies, keyed by agent.
        let mut obs_map: BTreeMap<BodyId, Vec<f64>> = BTreeMap::new();
        for (id, kind) in &agents {
            if matches!(policies.for_kind(*kind), PolicyRef::Learned { .. }) {
                obs_map.insert(*id, self.observe_agent(*id)?);
            }
        }

        self.actions.clear();
        for (id, kind) in &agents {
            let policy = policies.for_kind(*kind);
            match policy {
                PolicyRef::Learned { params, deterministic } => {
                    let obs = &obs_map[id];
                    let head = policy_forward(params, obs)?;
                    let sample = learned_sample(&head, deterministic, &mut self.action_rng);
                    self.actions.insert(*id, action_from_sample(&sample));

                    let team = if *kind == BodyKind::Seeker { Team::Seekers } else { Team::Hiders };
                    if learning == Some(team) {
                        let team_critic = params.layout.spec.encoder_dim.is_some();
                        let teammates: Vec<Vec<f64>> = if team_critic {
                            agents
                                .iter()
                                .filter(|(oid, okind)| okind == kind && oid != id)
                                .map(|(oid, _)| obs_map[oid].clone())
                                .collect()
                        } else {
                            Vec::new()
                        };
                        let value = if team_critic {
                            value_forward_team(params, obs, &teammates)?.0
                        } else {
                            value_forward(params, obs)?.0
                        };
                        let traj = self.trajs.entry(*id).or_insert_with(|| AgentTraj {
                            team,
                            entries: Vec::new(),
                            values: Vec::new(),
                        });
                        traj.values.push(value);
                        traj.entries.push(Entry {
                            obs: obs.clone(),
                            teammate_obs: teammates,
                            action_c: sample.continuous,
                            action_d: sample.discrete,
                            log_prob: sample.log_prob,
                            reward: 0.0,
                            value,
                            done: false,
                            team,
                            instance: self.instance_id,
                            advantage: 0.0,
                            target: 0.0,
                        });
                    }
                }
                _ => {
                    // Field access splits the borrow: env read-only, rng mut.
                    let world = match &self.env {
                        EnvState::HideSeek { world, .. } => world,
                        EnvState::Scenario(ep) => &ep.world,
                        EnvState::Empty => unreachable!(),
                    };
                    let body = world.body(*id).unwrap().clone();
                    let action = scripted_action(&policy, world, &body, &mut self.action_rng);
                    self.actions.insert(*id, action);
                }
            }
        }

        if let Some(rec) = &mut self.recording {
            rec.push_decision(&self.actions);
        }

        // Advance the world with the actions held.
        let mut frame_rewards: BTreeMap<BodyId, f64> = BTreeMap::new();
        for _ in 0..interval {
            let events = match &mut self.env {
                EnvState::HideSeek { world, status } => {
                    step_episode_mut(world, status, &self.actions, &self.episode_cfg)?
                }
                EnvState::Scenario(ep) => ep.step(
                    &self.actions,
                    &self.episode_cfg.phase,
                    &self.episode_cfg.rewards,
                    self.episode_cfg.dt,
                )?,
                EnvState::Empty => unreachable!(),
            };
            self.ticks_total += 1;
            for e in &events {
                *frame_rewards.entry(e.agent_id).or_insert(0.0) += e.amount;
                if e.cause == RewardCause::HiddenFrame {
                    self.hidden_events += 1;
                }
            }
            if self.done() {
                break;
            }
        }

        let finished = self.done();
        for (id, traj) in self.trajs.iter_mut() {
            if let Some(last) = traj.entries.last_mut() {
                last.reward += frame_rewards.get(id).copied().unwrap_or(0.0);
                if finished {
                    last.done = true;
                }
            }
        }

        if finished {
            self.finalize_segment(policies, out, true)?;
            let summary = self.summarize();
            self.episode_index += 1;
            Ok(Some(summary))
        } else {
            Ok(None)
        }
    }

    /// Close the open trajectory segment, bootstrapping values from the
    /// learning policy when the episode keeps running (quota cuts), and emit
    /// finalized entries in agent-id order.
    pub fn finalize_segment(
        &mut self,
        policies: &TeamPolicies,
        out: &mut Vec<Entry>,
        terminal: bool,
    ) -> Result<(), HarnessError> {
        let ids: Vec<BodyId> = self.trajs.keys().copied().collect();
        for id in ids {
            let mut traj = self.trajs.remove(&id).unwrap();
            if traj.entries.is_empty() {
                continue;
            }
            let bootstrap = if terminal {
                0.0
            } else {
                self.bootstrap_value(policies, id, traj.team)?
            };
            traj.values.push(bootstrap);
            let rewards: Vec<f64> = traj.entries.iter().map(|e| e.reward).collect();
            let (advs, targets) = gae(&rewards, &traj.values, self.cfg.gamma, self.cfg.lambda)?;
            for ((entry, adv), target) in traj.entries.iter_mut().zip(advs).zip(targets) {
                entry.advantage = adv;
                entry.target = target;
            }
            out.extend(traj.entries);
        }
        Ok(())
    }

    fn bootstrap_value(
        &self,
        policies: &TeamPolicies,
        id: BodyId,
        team: Team,
    ) -> Result<f64, HarnessError> {
        let kind = if team == Team::Seekers { BodyKind::Seeker } else { BodyKind::Hider };
        let PolicyRef::Learned { params, .. } = policies.for_kind(kind) else {
            return Ok(0.0);
        };
        let obs = self.observe_agent(id)?;
        let v = if params.layout.spec.encoder_dim.is_some() {
            let mut teammates = Vec::new();
            for b in &self.world().bodies {
                if b.kind == kind && b.id != id {
                    teammates.push(self.observe_agent(b.id)?);
                }
            }
            value_forward_team(params, &obs, &teammates)?.0
        } else {
            value_forward(params, &obs)?.0
        };
        Ok(v)
    }

    fn summarize(&mut self) -> EpisodeSummary {
        let summary = match &self.env {
            EnvState::HideSeek { world, status } => {
                let blocked = world
                    .enabled_openings()
                    .filter(|o| world.opening_blocked(o.id).unwrap_or(false))
                    .count() as u32;
                let hiders = world.bodies_of_kind(BodyKind::Hider).count() as u64;
                let team_of = |id: &BodyId| match world.body(*id).map(|b| b.kind) {
                    Some(BodyKind::Seeker) => Team::Seekers,
                    _ => Team::Hiders,
                };
                build_summary(
                    self.instance_id,
                    self.episode_index,
                    world.level,
                    status.decisions,
                    self.ticks_total - self.episode_ticks_start,
                    status.done_reason.unwrap_or(DoneReason::StepLimit),
                    &status.cumulative_reward,
                    team_of,
                    self.hidden_events,
                    hiders,
                    blocked,
                    world.enabled_openings().count() as u32,
                )
            }
            EnvState::Scenario(ep) => build_summary(
                self.instance_id,
                self.episode_index,
                1,
                ep.decisions,
                self.ticks_total - self.episode_ticks_start,
                ep.done_reason.unwrap_or(DoneReason::StepLimit),
                &ep.cumulative_reward,
                |_| Team::Hiders,
                0,
                0,
                0,
                0,
            ),
            EnvState::Empty => unreachable!(),
        };
        EpisodeSummary { recorded: self.recording.take(), ..summary }
    }

    /// Entries currently pending in open trajectories.
    pub fn pending_entries(&self) -> usize {
        self.trajs.values().map(|t| t.entries.len()).sum()
    }
}

#[allow(clippy::too_many_arguments)]
fn build_summary(
    instance: u32,
    episode: u64,
    level: u8,
    decisions: u64,
    ticks: u64,
    done_reason: DoneReason,
    per_agent: &BTreeMap<BodyId, f64>,
    team_of: impl Fn(&BodyId) -> Team,
    hidden_events: u64,
    hiders: u64,
    openings_blocked: u32,
    openings_enabled: u32,
) -> EpisodeSummary {
    let mut team_sums: BTreeMap<Team, (f64, u32)> = BTreeMap::new();
    for (id, total) in per_agent {
        let slot = team_sums.entry(team_of(id)).or_insert((0.0, 0));
        slot.0 += total;
        slot.1 += 1;
    }
    let team_mean_reward = team_sums
        .into_iter()
        .map(|(t, (s, n))| (t, s / f64::from(n.max(1))))
        .collect();
    let hidden_fraction = if decisions > 0 && hiders > 0 {
        hidden_events as f64 / (decisions * hiders) as f64
    } else {
        0.0
    };
    EpisodeSummary {
        instance,
        episode,
        level,
        decisions,
        ticks,
        done_reason,
        team_mean_reward,
        per_agent_reward: per_agent.iter().map(|(k, v)| (body_id_u32(*k), *v)).collect(),
        hidden_fraction,
        openings_blocked,
        openings_enabled,
        tagged: done_reason == DoneReason::Tag,
        recorded: None,
    }
}
