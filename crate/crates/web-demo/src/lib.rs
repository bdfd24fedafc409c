//! Browser demo bindings.
//!
//! The page drives three interactive views from one simulation:
//!
//! 1. a live episode (scripted evader hiders vs chaser seekers) drawn
//!    top-down on a canvas,
//! 2. the selected agent's raycast fan and frontal grid sensor, and
//! 3. the pursuit signal-strength field around a seeker.
//!
//! Rust only simulates and serializes flat draw lists; the page's small
//! script does the actual canvas painting. Everything here also compiles
//! and runs on the host, which is how it is tested.

use rand_chacha::ChaCha8Rng;
use skyseek_core::game::{
    signal_strength, EpisodeConfig, EpisodeStatus, Phase, PhaseConfig,
};
use skyseek_core::harness::{scripted_policy_action, ScriptedKind};
use skyseek_core::math::Vec3;
use skyseek_core::rng::stream;
use skyseek_core::sensors::{grid_scan, raycast_sweep, GridSensorConfig, RaycastConfig};
use skyseek_core::world::{build_arena, AgentAction, AgentCounts, BodyId, BodyKind, WorldState};
use std::collections::BTreeMap;
use wasm_bindgen::prelude::wasm_bindgen;

fn kind_code(kind: BodyKind) -> f32 {
    match kind {
        BodyKind::Hider => 0.0,
        BodyKind::Seeker => 1.0,
        BodyKind::Prop => 2.0,
        BodyKind::Obstacle => 3.0,
        BodyKind::Wall => 4.0,
        BodyKind::Boundary => 5.0,
    }
}

/// One interactive episode plus its sensor views.
#[wasm_bindgen]
pub struct Demo {
    state: WorldState,
    status: EpisodeStatus,
    cfg: EpisodeConfig,
    rng: ChaCha8Rng,
    level: u8,
    counts: AgentCounts,
    seed: u64,
    episode: u64,
    frontal: GridSensorConfig,
    rays: RaycastConfig,
    team_totals: (f64, f64),
}

#[wasm_bindgen]
impl Demo {
    /// Build a fresh arena at the given difficulty level.
    #[wasm_bindgen(constructor)]
    pub fn new(level: u8, hiders: u32, seekers: u32, seed: u64) -> Result<Demo, String> {
        let counts = AgentCounts { hiders, seekers };
        let state = build_arena(level, level.clamp(1, 4) as u32, counts, seed)
            .map_err(|e| e.to_string())?;
        let status = EpisodeStatus::new(&state);
        Ok(Demo {
            state,
            status,
            cfg: EpisodeConfig {
                phase: PhaseConfig { max_env_steps: 1536, ..Default::default() },
                ..Default::default()
            },
            rng: stream(seed, "demo", &[]),
            level,
            counts,
            seed,
            episode: 0,
            frontal: GridSensorConfig::frontal(12.0),
            rays: RaycastConfig::default(),
            team_totals: (0.0, 0.0),
        })
    }

    pub fn reset(&mut self, seed: u64) -> Result<(), String> {
        self.seed = seed;
        self.episode = 0;
        self.team_totals = (0.0, 0.0);
        self.respawn()
    }

    fn respawn(&mut self) -> Result<(), String> {
        self.state = build_arena(
            self.level,
            self.level.clamp(1, 4) as u32,
            self.counts,
            self.seed.wrapping_add(self.episode),
        )
        .map_err(|e| e.to_string())?;
        self.status = EpisodeStatus::new(&self.state);
        self.rng = stream(self.seed, "demo", &[self.episode]);
        Ok(())
    }

    /// Advance the episode by whole decisions (scripted policies). Rolls
    /// into a fresh episode when the current one ends.
    pub fn step(&mut self, decisions: u32) -> Result<(), String> {
        for _ in 0..decisions {
            if self.status.done {
                self.episode += 1;
                self.respawn()?;
            }
            let mut actions: BTreeMap<BodyId, AgentAction> = BTreeMap::new();
            for body in self.state.bodies.iter().filter(|b| b.kind.is_agent()) {
                let kind = if body.kind == BodyKind::Seeker {
                    ScriptedKind::Chaser
                } else {
                    ScriptedKind::Evader
                };
                actions.insert(
                    body.id,
                    scripted_policy_action(kind, &self.state, body, &mut self.rng),
                );
            }
            for _ in 0..self.cfg.phase.decision_interval {
                let events = skyseek_core::game::step_episode_mut(
                    &mut self.state,
                    &mut self.status,
                    &actions,
                    &self.cfg,
                )
                .map_err(|e| e.to_string())?;
                for e in events {
                    match self.state.body(e.agent_id).map(|b| b.kind) {
                        Some(BodyKind::Seeker) => self.team_totals.1 += e.amount,
                        _ => self.team_totals.0 += e.amount,
                    }
                }
                if self.status.done {
                    break;
                }
            }
        }
        Ok(())
    }

    // --- draw lists ---

    /// [min_x, min_y, min_z, max_x, max_y, max_z]
    pub fn arena(&self) -> Vec<f32> {
        let b = self.state.arena_bounds;
        vec![
            b.min().x as f32,
            b.min().y as f32,
            b.min().z as f32,
            b.max().x as f32,
            b.max().y as f32,
            b.max().z as f32,
        ]
    }

    /// Per body, 11 values: id, kind code, x, y, z, yaw, half x/y/z,
    /// locked, dragged.
    pub fn bodies(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.state.bodies.len() * 11);
        for b in &self.state.bodies {
            out.extend_from_slice(&[
                b.id.0 as f32,
                kind_code(b.kind),
                b.position.x as f32,
                b.position.y as f32,
                b.position.z as f32,
                b.yaw as f32,
                b.half_extents.x as f32,
                b.half_extents.y as f32,
                b.half_extents.z as f32,
                f32::from(b.locked),
                f32::from(b.dragged_by.is_some()),
            ]);
        }
        out
    }

    /// Per opening, 10 values: id, kind (0 door, 1 window), center xyz,
    /// half xyz, enabled, blocked.
    pub fn openings(&self) -> Vec<f32> {
        let mut out = Vec::new();
        for o in &self.state.openings {
            out.extend_from_slice(&[
                o.id.0 as f32,
                match o.kind {
                    skyseek_core::world::OpeningKind::Door => 0.0,
                    skyseek_core::world::OpeningKind::Window => 1.0,
                },
                o.slot_center.x as f32,
                o.slot_center.y as f32,
                o.slot_center.z as f32,
                o.slot_half_extents.x as f32,
                o.slot_half_extents.y as f32,
                o.slot_half_extents.z as f32,
                f32::from(o.enabled),
                f32::from(self.state.opening_blocked(o.id).unwrap_or(false)),
            ]);
        }
        out
    }

    pub fn agent_count(&self) -> usize {
        self.state.agent_ids().len()
    }

    pub fn agent_kind(&self, index: usize) -> String {
        self.agent(index)
            .map(|b| b.kind.name().to_string())
            .unwrap_or_else(|| "none".to_string())
    }

    fn agent(&self, index: usize) -> Option<&skyseek_core::world::Body> {
        let ids = self.state.agent_ids();
        ids.get(index).and_then(|id| self.state.body(*id))
    }

    /// Raycast fan of one agent: per ray [world azimuth, hit distance in
    /// meters (ray length when clear)].
    pub fn rays(&self, agent_index: usize) -> Vec<f32> {
        let Some(agent) = self.agent(agent_index) else {
            return Vec::new();
        };
        let values = match raycast_sweep(&self.state, agent.id, &self.rays) {
            Ok(v) => v,
            Err(_) => return Vec::new(),
        };
        let per = self.rays.values_per_ray();
        let mut out = Vec::with_capacity(self.rays.ray_count() * 2);
        for (k, az) in self.rays.angles().into_iter().enumerate() {
            let dist = values[k * per] * self.rays.ray_length;
            out.push((az + agent.yaw) as f32);
            out.push(dist as f32);
        }
        out
    }

    pub fn frontal_rows(&self) -> usize {
        self.frontal.rows()
    }

    pub fn frontal_cols(&self) -> usize {
        self.frontal.cols()
    }

    /// Frontal grid of one agent, row-major: per cell [occupancy, kind code
    /// (-1 when empty), normalized distance].
    pub fn frontal_grid(&self, agent_index: usize) -> Vec<f32> {
        let Some(agent) = self.agent(agent_index) else {
            return Vec::new();
        };
        let obs = match grid_scan(&self.state, agent.id, &self.frontal) {
            Ok(o) => o,
            Err(_) => return Vec::new(),
        };
        let mut out = Vec::with_capacity(obs.rows * obs.cols * 3);
        for r in 0..obs.rows {
            for c in 0..obs.cols {
                let cell = obs.cell(r, c);
                let occupied = cell[0];
                let kind = (1..7).find(|k| cell[*k] == 1.0).map(|k| k - 1);
                out.push(occupied as f32);
                out.push(kind.map(|k| k as f32).unwrap_or(-1.0));
                out.push(cell[7] as f32);
            }
        }
        out
    }

    /// Pursuit signal strength sampled over the horizontal plane at the
    /// seeker's height: res x res values, row-major over (x, z).
    pub fn signal_field(&self, agent_index: usize, res: usize) -> Vec<f32> {
        let Some(agent) = self.agent(agent_index) else {
            return Vec::new();
        };
        let bounds = self.state.arena_bounds;
        let mut out = Vec::with_capacity(res * res);
        for iz in 0..res {
            for ix in 0..res {
                let p = Vec3::new(
                    bounds.min().x + (ix as f64 + 0.5) / res as f64 * 2.0 * bounds.half.x,
                    agent.position.y,
                    bounds.min().z + (iz as f64 + 0.5) / res as f64 * 2.0 * bounds.half.z,
                );
                let s = signal_strength(agent.position, p, agent.facing()).unwrap_or(0.0);
                out.push(s as f32);
            }
        }
        out
    }

    // --- status ---

    pub fn tick(&self) -> u32 {
        self.state.tick as u32
    }

    pub fn max_ticks(&self) -> u32 {
        self.cfg.phase.max_env_steps as u32
    }

    pub fn phase(&self) -> String {
        match self.status.phase {
            Phase::Prep => "prep".to_string(),
            Phase::Test => "test".to_string(),
        }
    }

    pub fn episode(&self) -> u32 {
        self.episode as u32
    }

    pub fn done_reason(&self) -> String {
        match self.status.done_reason {
            Some(skyseek_core::game::DoneReason::Tag) => "tag".to_string(),
            Some(skyseek_core::game::DoneReason::StepLimit) => "step_limit".to_string(),
            None => "running".to_string(),
        }
    }

    /// [hider team total, seeker team total] across the session.
    pub fn team_rewards(&self) -> Vec<f32> {
        vec![self.team_totals.0 as f32, self.team_totals.1 as f32]
    }

    pub fn level(&self) -> u8 {
        self.level
    }
}
