//! Rollout collection, the phase-structured training loop, evaluation, and
//! the run artifacts (metrics, checkpoints, replays).
//!
//! Parallelism model: environment instances are fully independent, each
//! owning its world, episode bookkeeping, and randomness streams. Workers
//! may step instances concurrently, but results always merge in instance-id
//! order, so the worker count never changes any output byte.

mod instance;
mod metrics;
mod replay;
mod rollout;
mod train;

pub mod eval;

pub use instance::{EnvInstance, EpisodeSummary, InstanceConfig};
pub use metrics::{smooth, MetricsRow, UpdateRow};
pub use replay::{export_replay, RecordedEpisode};
pub use rollout::{collect_episodes, collect_quota, run_instances, CollectOutput};
pub use train::{train, TrainOutput};

pub use eval::{evaluate, EvalSummary};

use crate::game::signal_strength;
use crate::learn::{greedy_action, sample_action, ActionSample, PolicyParams};
use crate::math::Vec3;
use crate::world::{AgentAction, Body, BodyId, BodyKind, Manipulate, WorldState};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
    #[error(transparent)]
    Learn(#[from] crate::learn::LearnError),
    #[error(transparent)]
    Sensor(#[from] crate::sensors::SensorError),
    #[error(transparent)]
    World(#[from] crate::world::WorldError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("io {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("replay: {0}")]
    Replay(String),
}

pub(crate) fn io_err(path: &std::path::Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), msg: e.to_string() }
}

/// How one team picks actions during collection.
#[derive(Debug, Clone, Copy)]
pub enum PolicyRef<'a> {
    Learned { params: &'a PolicyParams, deterministic: bool },
    /// Uniform random actions, including manipulation.
    Random,
    Stationary,
    /// Scripted pursuit: steer toward the hider with the strongest signal.
    Chaser,
    /// Scripted evasion: thrust away from the nearest seeker.
    Evader,
    /// Team absent (single-agent scenarios).
    None,
}

#[derive(Debug, Clone, Copy)]
pub struct TeamPolicies<'a> {
    pub hiders: PolicyRef<'a>,
    pub seekers: PolicyRef<'a>,
}

impl<'a> TeamPolicies<'a> {
    pub fn for_kind(&self, kind: BodyKind) -> PolicyRef<'a> {
        match kind {
            BodyKind::Seeker => self.seekers,
            _ => self.hiders,
        }
    }
}

/// Scripted controller kinds, exposed for demos and oracle tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptedKind {
    Random,
    Stationary,
    Chaser,
    Evader,
}

/// Run one scripted controller for one agent.
pub fn scripted_policy_action(
    kind: ScriptedKind,
    world: &WorldState,
    agent: &Body,
    rng: &mut ChaCha8Rng,
) -> AgentAction {
    let policy = match kind {
        ScriptedKind::Random => PolicyRef::Random,
        ScriptedKind::Stationary => PolicyRef::Stationary,
        ScriptedKind::Chaser => PolicyRef::Chaser,
        ScriptedKind::Evader => PolicyRef::Evader,
    };
    scripted_action(&policy, world, agent, rng)
}

/// Scripted or sampled action for one agent. Learned policies also report
/// the sample they drew so the caller can store it.
pub(crate) fn scripted_action(
    policy: &PolicyRef,
    world: &WorldState,
    agent: &Body,
    rng: &mut ChaCha8Rng,
) -> AgentAction {
    match policy {
        PolicyRef::Stationary | PolicyRef::None => AgentAction::ZERO,
        PolicyRef::Random => AgentAction {
            thrust: Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ),
            yaw_rate: rng.random_range(-1.0..1.0),
            manipulate: Manipulate::from_index(rng.random_range(0..3)),
        },
        PolicyRef::Chaser => {
            let mut best: Option<(f64, Vec3)> = None;
            for h in world.bodies_of_kind(BodyKind::Hider) {
                if let Ok(s) = signal_strength(agent.position, h.position, agent.facing()) {
                    if best.is_none_or(|(b, _)| s > b) {
                        best = Some((s, h.position));
                    }
                }
            }
            match best {
                Some((_, target)) => steer_toward(agent, target),
                None => AgentAction::ZERO,
            }
        }
        PolicyRef::Evader => {
            let nearest = world
                .bodies_of_kind(BodyKind::Seeker)
                .map(|s| (s.position - agent.position).norm())
                .zip(world.bodies_of_kind(BodyKind::Seeker))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            match nearest {
                Some((_, seeker)) => {
                    let away = agent.position - seeker.position;
                    let mut act = steer_toward(agent, agent.position + away);
                    // Jink a little so evasion is not perfectly predictable.
                    act.thrust.y = rng.random_range(-0.3..0.3);
                    act
                }
                None => AgentAction::ZERO,
            }
        }
        PolicyRef::Learned { .. } => AgentAction::ZERO, // handled by the caller
    }
}

fn steer_toward(agent: &Body, target: Vec3) -> AgentAction {
    let rel = target - agent.position;
    let dist = rel.norm();
    if dist < 1e-9 {
        return AgentAction::ZERO;
    }
    let local = rel.rotate_yaw_inv(agent.yaw) * (1.0 / dist);
    let az_err = local.x.atan2(local.z);
    AgentAction {
        thrust: local.clamp_components(-1.0, 1.0),
        yaw_rate: (az_err / std::f64::consts::FRAC_PI_4).clamp(-1.0, 1.0),
        manipulate: Manipulate::None,
    }
}

/// Draw or pick the greedy action from a learned policy head.
pub(crate) fn learned_sample(
    out: &crate::learn::PolicyOut,
    deterministic: bool,
    rng: &mut ChaCha8Rng,
) -> ActionSample {
    if deterministic {
        greedy_action(out)
    } else {
        sample_action(out, rng)
    }
}

pub(crate) fn action_from_sample(sample: &ActionSample) -> AgentAction {
    AgentAction {
        thrust: Vec3::new(sample.continuous[0], sample.continuous[1], sample.continuous[2]),
        yaw_rate: sample.continuous[3],
        manipulate: Manipulate::from_index(sample.discrete),
    }
    .clamped()
}

/// Layout descriptor binding checkpoints to their network and observation
/// spaces.
pub fn policy_descriptor(cfg: &crate::config::RunConfig, team: crate::learn::Team) -> String {
    let obs = cfg.obs_config();
    let spec = team_mlp_spec(cfg, team);
    format!("{} | {} | team={}", obs.layout_descriptor(), spec.descriptor(), team.name())
}

/// Network spec per team: seekers with more than one member get the
/// team-critic encoder, everyone else trains solo critics.
pub fn team_mlp_spec(cfg: &crate::config::RunConfig, team: crate::learn::Team) -> crate::learn::MlpSpec {
    let obs_dim = cfg.obs_config().dim();
    match team {
        crate::learn::Team::Seekers if cfg.counts.seekers > 1 => {
            crate::learn::MlpSpec::team(obs_dim, cfg.hidden_units, cfg.encoder_dim)
        }
        _ => crate::learn::MlpSpec::solo(obs_dim, cfg.hidden_units),
    }
}

pub(crate) fn body_id_u32(id: BodyId) -> u32 {
    id.0
}
