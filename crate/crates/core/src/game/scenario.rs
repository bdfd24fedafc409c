//! The three single-team warm-up scenarios: a hovering collector
//! (hummingbird), a target tagger (drone_target), and a gaze-and-approach
//! task with an ally to avoid (eye). They exercise flight control, shaping,
//! and collision penalties without the adversarial machinery.

use super::{DoneReason, GameError, PhaseConfig, RewardCause, RewardConfig, RewardEvent};
use crate::math::{Aabb, Vec3};
use crate::world::{
    build_open_arena, step_physics_mut, AgentAction, ArenaConfig, BodyId, BodyKind, WorldState,
};
use crate::rng::stream;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("unknown scenario {0:?}; valid names: hummingbird, drone_target, eye")]
pub struct UnknownScenario(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Hummingbird,
    DroneTarget,
    Eye,
}

impl ScenarioKind {
    pub fn parse(name: &str) -> Result<Self, UnknownScenario> {
        match name {
            "hummingbird" => Ok(ScenarioKind::Hummingbird),
            "drone_target" => Ok(ScenarioKind::DroneTarget),
            "eye" => Ok(ScenarioKind::Eye),
            other => Err(UnknownScenario(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Hummingbird => "hummingbird",
            ScenarioKind::DroneTarget => "drone_target",
            ScenarioKind::Eye => "eye",
        }
    }
}

/// Reward schedule of each warm-up scenario.
pub fn scenario_rewards(kind: ScenarioKind) -> RewardConfig {
    let zeroed = RewardConfig {
        hider_hidden_per_frame: 0.0,
        seeker_sight_per_frame: 0.0,
        seeker_tag: 0.0,
        opening_blocked_bonus: 0.0,
        ..Default::default()
    };
    match kind {
        ScenarioKind::Hummingbird => RewardConfig {
            in_target_per_frame: 0.01,
            collide_penalty: -0.5,
            ..zeroed
        },
        ScenarioKind::DroneTarget => RewardConfig {
            in_target_per_frame: 1.0,
            collide_penalty: -1.0,
            ..zeroed
        },
        ScenarioKind::Eye => RewardConfig {
            reach_target: 1.0,
            look_at_per_frame: 0.001,
            collide_penalty: -0.2,
            wall_collide_penalty: -0.5,
            ..zeroed
        },
    }
}

/// Arena shape, agent count, and target behavior of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub arena: ArenaConfig,
    pub agents: u32,
    pub target_half: f64,
    /// Known targets appear in the observation as a relative position.
    pub known_target: bool,
    /// Dynamic targets teleport on every reach.
    pub dynamic_target: bool,
    /// Tag-style scenarios end the episode on the first reach.
    pub end_on_reach: bool,
}

impl ScenarioSpec {
    pub fn preset(kind: ScenarioKind) -> Self {
        match kind {
            // Stationary known target, wide boundaries.
            ScenarioKind::Hummingbird => ScenarioSpec {
                kind,
                arena: ArenaConfig { width: 30.0, height: 10.0, depth: 30.0 },
                agents: 1,
                target_half: 1.0,
                known_target: true,
                dynamic_target: false,
                end_on_reach: false,
            },
            // Dynamic known target, normal boundaries.
            ScenarioKind::DroneTarget => ScenarioSpec {
                kind,
                arena: ArenaConfig::default(),
                agents: 1,
                target_half: 1.0,
                known_target: true,
                dynamic_target: true,
                end_on_reach: true,
            },
            // Dynamic unknown target, small boundaries, an ally to avoid.
            ScenarioKind::Eye => ScenarioSpec {
                kind,
                arena: ArenaConfig { width: 8.0, height: 6.0, depth: 8.0 },
                agents: 2,
                target_half: 0.6,
                known_target: false,
                dynamic_target: true,
                end_on_reach: false,
            },
        }
    }
}

/// A running scenario episode: open-arena world, one target region, and the
/// rising-edge collision trackers.
#[derive(Debug, Clone)]
pub struct ScenarioEpisode {
    pub spec: ScenarioSpec,
    pub world: WorldState,
    pub target: Vec3,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
    pub cumulative_reward: BTreeMap<BodyId, f64>,
    pub decisions: u64,
    in_wall_contact: BTreeMap<BodyId, bool>,
    in_ally_contact: BTreeMap<BodyId, bool>,
    rng: ChaCha8Rng,
}

impl ScenarioEpisode {
    pub fn new(spec: ScenarioSpec, seed: u64) -> Self {
        let world = build_open_arena(&spec.arena, spec.agents, seed);
        let mut rng = stream(seed, "scenario", &[]);
        let agent_pos = world.bodies[0].position;
        let target = sample_target(&mut rng, &spec, agent_pos);
        let agents = world.agent_ids();
        ScenarioEpisode {
            spec,
            cumulative_reward: agents.iter().map(|id| (*id, 0.0)).collect(),
            in_wall_contact: agents.iter().map(|id| (*id, false)).collect(),
            in_ally_contact: agents.iter().map(|id| (*id, false)).collect(),
            world,
            target,
            done: false,
            done_reason: None,
            decisions: 0,
            rng,
        }
    }

    pub fn target_box(&self) -> Aabb {
        Aabb::new(self.target, Vec3::splat(self.spec.target_half))
    }

    /// One physics tick; rewards fire on decision boundaries.
    pub fn step(
        &mut self,
        actions: &BTreeMap<BodyId, AgentAction>,
        phase: &PhaseConfig,
        rewards: &RewardConfig,
        dt: f64,
    ) -> Result<Vec<RewardEvent>, GameError> {
        if self.done {
            return Err(GameError::EpisodeFinished);
        }
        step_physics_mut(&mut self.world, actions, dt)?;
        let tick = self.world.tick;
        let mut events = Vec::new();
        let agents = self.world.agent_ids();

        if tick % phase.decision_interval == 0 {
            self.decisions += 1;
            let target_box = self.target_box();
            let mut reached = false;
            for id in &agents {
                let body = self.world.body(*id).unwrap().clone();
                let mut push = |amount: f64| {
                    if amount != 0.0 {
                        events.push(RewardEvent {
                            tick,
                            agent_id: *id,
                            amount,
                            cause: RewardCause::ScenarioSpecific,
                        });
                    }
                };

                if body.aabb().intersects(&target_box) {
                    push(rewards.in_target_per_frame);
                    push(rewards.reach_target);
                    reached = true;
                }

                if rewards.look_at_per_frame != 0.0 {
                    let rel = self.target - body.position;
                    let dist = rel.norm();
                    if dist > 0.0 {
                        let cos = body.facing().dot(rel * (1.0 / dist));
                        if cos >= 15f64.to_radians().cos() {
                            push(rewards.look_at_per_frame);
                        }
                    }
                }

                // Rising-edge collision penalties.
                let wall_contact = self.world.bodies.iter().any(|b| {
                    matches!(b.kind, BodyKind::Wall | BodyKind::Boundary)
                        && b.aabb().intersects(&body.aabb())
                });
                let was = self.in_wall_contact[id];
                if wall_contact && !was {
                    let amount = if rewards.wall_collide_penalty != 0.0 {
                        rewards.wall_collide_penalty
                    } else {
                        rewards.collide_penalty
                    };
                    push(amount);
                }
                self.in_wall_contact.insert(*id, wall_contact);

                let ally_contact = agents.iter().any(|other| {
                    *other != *id
                        && self.world.body(*other).unwrap().aabb().intersects(&body.aabb())
                });
                let was = self.in_ally_contact[id];
                if ally_contact && !was {
                    push(rewards.collide_penalty);
                }
                self.in_ally_contact.insert(*id, ally_contact);
            }

            if reached {
                if self.spec.end_on_reach {
                    self.done = true;
                    self.done_reason = Some(DoneReason::Tag);
                } else if self.spec.dynamic_target {
                    let anchor = self.world.bodies[0].position;
                    self.target = sample_target(&mut self.rng, &self.spec, anchor);
                }
            }
        }

        if !self.done && tick >= phase.max_env_steps {
            self.done = true;
            self.done_reason = Some(DoneReason::StepLimit);
        }
        for e in &events {
            *self.cumulative_reward.entry(e.agent_id).or_insert(0.0) += e.amount;
        }
        Ok(events)
    }
}

fn sample_target(rng: &mut ChaCha8Rng, spec: &ScenarioSpec, away_from: Vec3) -> Vec3 {
    let hx = spec.arena.width / 2.0 - spec.target_half - 1.0;
    let hy = spec.arena.height;
    let hz = spec.arena.depth / 2.0 - spec.target_half - 1.0;
    let min_sep = (spec.arena.width.min(spec.arena.depth) / 4.0).min(3.0);
    let mut p = Vec3::ZERO;
    for _ in 0..100 {
        p = Vec3::new(
            rng.random_range(-hx..hx),
            rng.random_range(spec.target_half + 0.6..hy - spec.target_half - 0.6),
            rng.random_range(-hz..hz),
        );
        if (p - away_from).norm() >= min_sep {
            break;
        }
    }
    p
}
