//! Aerial hide-and-seek: a self-contained multi-agent simulator and trainer.
//!
//! Two teams of flying agents compete in a walled arena. Hiders earn reward
//! for every decision frame they stay out of all seekers' view and can drag
//! props into door/window slots and lock them there; seekers earn reward for
//! keeping hiders in view and for tagging them by collision, which ends the
//! episode. Difficulty is scheduled by a four-level curriculum that enables
//! wall chunks, openings, and props as the learning team's reward crosses a
//! threshold.
//!
//! The crate is split along those seams:
//!
//! - [`world`] — arena construction, box physics, prop drag/lock, tagging
//! - [`sensors`] — spatial/frontal grid scans, sphere raycasts, proprioception
//! - [`game`] — phase gating, reward emission, visibility, episode stepping
//! - [`curriculum`] — difficulty levels and threshold-triggered advancement
//! - [`learn`] — MLP policies, GAE, PPO and team-critic updates, checkpoints
//! - [`harness`] — parallel rollout collection, training loop, eval, metrics
//! - [`config`] — run configuration files and scenario presets
//!
//! Everything is deterministic: a run is fully specified by its config and
//! seed, and parallel rollout workers merge results in instance order so the
//! worker count never changes an outcome.

pub mod config;
pub mod curriculum;
pub mod game;
pub mod harness;
pub mod learn;
pub mod math;
pub mod rng;
pub mod sensors;
pub mod world;
