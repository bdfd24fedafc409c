//! Policy learning: a fixed-topology MLP with hand-written gradients,
//! generalized advantage estimation, clipped-surrogate updates, and a
//! team-critic variant for shared-reward seeker teams.
//!
//! Everything runs in f64 on the CPU with plain gradient descent. Updates
//! are deterministic given the parameter state, the buffer contents, and an
//! explicit shuffle stream, which is what makes whole training runs
//! replayable byte for byte.

mod buffer;
mod checkpoint;
mod gae;
mod mlp;
mod update;

pub use buffer::{buffer_size, Entry, RolloutBuffer, Team};
pub use checkpoint::{load_checkpoint, save_checkpoint, spec_hash, Checkpoint};
pub use gae::gae;
pub use mlp::{
    entropy_of, greedy_action, log_prob_of, mlp_forward, policy_forward, sample_action,
    value_forward, value_forward_team, ActionSample, MlpSpec, NetLayout, OptimizerState,
    PolicyOut, PolicyParams, CONTINUOUS_DIM, DISCRETE_OPTIONS,
};
pub use update::{gradient_check, poca_update, ppo_update, UpdateStats};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("observation dim {got} does not match network input {want}")]
    DimMismatch { got: usize, want: usize },
    #[error("buffer size overflow: {0} * {1} * {2}")]
    Overflow(u64, u64, u64),
    #[error("rollout buffer is full (capacity {0})")]
    BufferFull(usize),
    #[error("update on an empty buffer")]
    EmptyBuffer,
    #[error("buffer mixes teams {0:?} and {1:?}")]
    MixedTeams(Team, Team),
    #[error("non-finite parameter after update")]
    NonFinite,
    #[error("gae length mismatch: {rewards} rewards need {rewards}+1 values, got {values}")]
    GaeLength { rewards: usize, values: usize },
    #[error("checkpoint io: {0}")]
    CheckpointIo(String),
    #[error("checkpoint spec hash mismatch: file {file:#x}, expected {expected:#x}")]
    SpecHashMismatch { file: u64, expected: u64 },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
}

/// Gradient step rule. Plain descent is the default; the adaptive variant
/// keeps per-parameter moment estimates inside the parameter state (and in
/// checkpoints), so either way a run stays deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sgd" => Some(OptimizerKind::Sgd),
            "adam" => Some(OptimizerKind::Adam),
            _ => None,
        }
    }
}

/// Optimizer and objective constants. The batch size is the one the whole
/// buffer sizing derives from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub batch_size: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub epochs_per_update: u32,
    pub entropy_coefficient: f64,
    pub value_coefficient: f64,
    pub optimizer: OptimizerKind,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            batch_size: 3072,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            learning_rate: 3e-4,
            epochs_per_update: 3,
            entropy_coefficient: 0.005,
            value_coefficient: 0.5,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(format!("gamma {} outside (0, 1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(format!("gae_lambda {} outside [0, 1]", self.gae_lambda));
        }
        if self.clip_epsilon <= 0.0 {
            return Err(format!("clip_epsilon {} must be positive", self.clip_epsilon));
        }
        if self.batch_size == 0 || self.epochs_per_update == 0 {
            return Err("batch_size and epochs_per_update must be positive".into());
        }
        Ok(())
    }
}
