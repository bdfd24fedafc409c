//! Arena state: bodies, openings, and the queries the game layer needs.
//!
//! The simulator is box-only on purpose. Every behavior the game cares about
//! (dragging, locking, gliding obstacles, tagging) is a function of overlap
//! and displacement, and axis-aligned boxes keep stepping exactly
//! reproducible across runs and platforms.

mod arena;
mod physics;

pub use arena::{
    build_arena, build_arena_with, build_open_arena, zero_actions, AgentCounts, ArenaConfig,
};
pub use physics::{
    step_physics, step_physics_mut, step_physics_pinned, try_manipulate, try_manipulate_mut,
};

use crate::math::{Aabb, Vec3};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use thiserror::Error;

/// Stable identifier of a body within one world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BodyId(pub u32);

/// Stable identifier of an opening slot within one world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpeningId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BodyKind {
    Hider,
    Seeker,
    Prop,
    Obstacle,
    Wall,
    Boundary,
}

impl BodyKind {
    pub const ALL: [BodyKind; 6] = [
        BodyKind::Hider,
        BodyKind::Seeker,
        BodyKind::Prop,
        BodyKind::Obstacle,
        BodyKind::Wall,
        BodyKind::Boundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BodyKind::Hider => "hider",
            BodyKind::Seeker => "seeker",
            BodyKind::Prop => "prop",
            BodyKind::Obstacle => "obstacle",
            BodyKind::Wall => "wall",
            BodyKind::Boundary => "boundary",
        }
    }

    pub fn is_agent(self) -> bool {
        matches!(self, BodyKind::Hider | BodyKind::Seeker)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    pub id: BodyId,
    pub kind: BodyKind,
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
    pub half_extents: Vec3,
    pub gravity_scale: f64,
    pub locked: bool,
    pub dragged_by: Option<BodyId>,
}

impl Body {
    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.position, self.half_extents)
    }

    /// Unit forward vector in the horizontal plane; yaw 0 faces +z.
    pub fn facing(&self) -> Vec3 {
        Vec3::new(self.yaw.sin(), 0.0, self.yaw.cos())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpeningKind {
    Door,
    Window,
}

impl OpeningKind {
    pub fn name(self) -> &'static str {
        match self {
            OpeningKind::Door => "door",
            OpeningKind::Window => "window",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Opening {
    pub id: OpeningId,
    pub kind: OpeningKind,
    pub slot_center: Vec3,
    pub slot_half_extents: Vec3,
    pub enabled: bool,
}

impl Opening {
    pub fn slot(&self) -> Aabb {
        Aabb::new(self.slot_center, self.slot_half_extents)
    }
}

/// One of the four L-shaped interior wall groups. Disabled groups contribute
/// no wall bodies; the group record itself always exists.
#[derive(Debug, Clone, PartialEq)]
pub struct WallGroup {
    pub enabled: bool,
    pub body_ids: Vec<BodyId>,
}

/// Tunable physical constants, embedded in the state so stepping needs no
/// out-of-band configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub gravity: f64,
    /// Acceleration produced by a full-scale thrust component, m/s^2.
    pub accel_gain: f64,
    /// Linear velocity damping for agents and props, 1/s.
    pub drag: f64,
    /// Much lighter damping for obstacles so a shove keeps them gliding.
    pub obstacle_drag: f64,
    /// Maximum yaw rate at full stick, rad/s.
    pub yaw_rate_max: f64,
    pub grab_radius: f64,
    /// A dragged prop rides this far in front of its carrier.
    pub drag_offset: f64,
    pub pushout_iterations: u32,
    /// A locked prop must cover at least this fraction of the slot volume
    /// for the opening to count as blocked.
    pub block_coverage: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            gravity: 9.81,
            accel_gain: 10.0,
            drag: 2.0,
            obstacle_drag: 0.1,
            yaw_rate_max: std::f64::consts::PI,
            grab_radius: 1.5,
            drag_offset: 1.0,
            pushout_iterations: 4,
            block_coverage: 0.9,
        }
    }
}

impl PhysicsParams {
    /// Analytic top speed per axis under full thrust: accel_gain / drag.
    pub fn terminal_speed(&self) -> f64 {
        self.accel_gain / self.drag
    }
}

/// Full simulation state. Cheap to clone; a value, never shared.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub tick: u64,
    pub bodies: Vec<Body>,
    pub openings: Vec<Opening>,
    pub level: u8,
    pub arena_bounds: Aabb,
    /// Seed the arena was built from; the opaque remainder of the build
    /// randomness, kept so serialized states identify their origin.
    pub seed: u64,
    pub wall_groups: Vec<WallGroup>,
    pub physics: PhysicsParams,
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("configuration error: {field} = {value} outside {range}")]
    Config {
        field: &'static str,
        value: i64,
        range: &'static str,
    },
    #[error("unknown body id {0:?}")]
    UnknownBody(BodyId),
    #[error("action for body {0:?} which is not a hider or seeker")]
    NotAnAgent(BodyId),
    #[error("non-finite action for body {0:?}")]
    NonFiniteAction(BodyId),
    #[error("unknown opening id {0:?}")]
    UnknownOpening(OpeningId),
    #[error("dt must be positive, got {0}")]
    BadDt(f64),
}

/// What an agent asks of one physics step. Components are clamped to their
/// ranges before use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentAction {
    /// Body-frame acceleration command, each component in [-1, 1].
    pub thrust: Vec3,
    /// Yaw stick in [-1, 1].
    pub yaw_rate: f64,
    pub manipulate: Manipulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manipulate {
    None,
    GrabOrLock,
    Release,
}

impl Manipulate {
    pub const OPTIONS: usize = 3;

    pub fn from_index(ix: usize) -> Manipulate {
        match ix {
            1 => Manipulate::GrabOrLock,
            2 => Manipulate::Release,
            _ => Manipulate::None,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Manipulate::None => 0,
            Manipulate::GrabOrLock => 1,
            Manipulate::Release => 2,
        }
    }
}

impl AgentAction {
    pub const ZERO: AgentAction = AgentAction {
        thrust: Vec3 { x: 0.0, y: 0.0, z: 0.0 },
        yaw_rate: 0.0,
        manipulate: Manipulate::None,
    };

    pub fn clamped(self) -> AgentAction {
        AgentAction {
            thrust: self.thrust.clamp_components(-1.0, 1.0),
            yaw_rate: self.yaw_rate.clamp(-1.0, 1.0),
            manipulate: self.manipulate,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.thrust.is_finite() && self.yaw_rate.is_finite()
    }
}

impl WorldState {
    pub fn body(&self, id: BodyId) -> Option<&Body> {
        self.bodies.iter().find(|b| b.id == id)
    }

    pub fn body_mut(&mut self, id: BodyId) -> Option<&mut Body> {
        self.bodies.iter_mut().find(|b| b.id == id)
    }

    pub fn opening(&self, id: OpeningId) -> Option<&Opening> {
        self.openings.iter().find(|o| o.id == id)
    }

    pub fn bodies_of_kind(&self, kind: BodyKind) -> impl Iterator<Item = &Body> {
        self.bodies.iter().filter(move |b| b.kind == kind)
    }

    pub fn hider_ids(&self) -> Vec<BodyId> {
        self.bodies_of_kind(BodyKind::Hider).map(|b| b.id).collect()
    }

    pub fn seeker_ids(&self) -> Vec<BodyId> {
        self.bodies_of_kind(BodyKind::Seeker).map(|b| b.id).collect()
    }

    pub fn agent_ids(&self) -> Vec<BodyId> {
        self.bodies.iter().filter(|b| b.kind.is_agent()).map(|b| b.id).collect()
    }

    /// The prop this agent is currently dragging, if any.
    pub fn dragged_prop(&self, agent: BodyId) -> Option<&Body> {
        self.bodies.iter().find(|b| b.dragged_by == Some(agent))
    }

    /// Every (seeker, hider) pair whose boxes overlap at the current tick,
    /// in ascending id order.
    pub fn detect_tags(&self) -> Vec<(BodyId, BodyId)> {
        let mut out = Vec::new();
        for s in self.bodies_of_kind(BodyKind::Seeker) {
            for h in self.bodies_of_kind(BodyKind::Hider) {
                if s.aabb().intersects(&h.aabb()) {
                    out.push((s.id, h.id));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// True iff a locked prop covers the slot of an enabled opening to the
    /// configured coverage fraction.
    pub fn opening_blocked(&self, id: OpeningId) -> Result<bool, WorldError> {
        let opening = self.opening(id).ok_or(WorldError::UnknownOpening(id))?;
        if !opening.enabled {
            return Ok(false);
        }
        let slot = opening.slot();
        let slot_vol = slot.volume();
        Ok(self
            .bodies
            .iter()
            .filter(|b| b.kind == BodyKind::Prop && b.locked)
            .any(|p| p.aabb().intersection_volume(&slot) >= self.physics.block_coverage * slot_vol))
    }

    pub fn enabled_openings(&self) -> impl Iterator<Item = &Opening> {
        self.openings.iter().filter(|o| o.enabled)
    }

    /// Check the structural invariants of a hide-and-seek arena. Returns a
    /// description of the first violation, if any.
    pub fn validate_hideseek(&self) -> Result<(), String> {
        let count = |k: BodyKind| self.bodies_of_kind(k).count();
        if count(BodyKind::Boundary) != 4 {
            return Err(format!("expected 4 boundary bodies, found {}", count(BodyKind::Boundary)));
        }
        if self.wall_groups.len() != 4 {
            return Err(format!("expected 4 wall groups, found {}", self.wall_groups.len()));
        }
        let hiders = count(BodyKind::Hider);
        if !(1..=2).contains(&hiders) {
            return Err(format!("hider count {hiders} outside 1..2"));
        }
        let seekers = count(BodyKind::Seeker);
        if !(1..=4).contains(&seekers) {
            return Err(format!("seeker count {seekers} outside 1..4"));
        }
        let props = count(BodyKind::Prop);
        if !(1..=4).contains(&props) {
            return Err(format!("prop count {props} outside 1..4"));
        }
        if count(BodyKind::Obstacle) != 5 {
            return Err(format!("obstacle count {} != 5", count(BodyKind::Obstacle)));
        }
        if !(1..=4).contains(&self.level) {
            return Err(format!("level {} outside 1..4", self.level));
        }
        self.validate_basic()
    }

    /// Invariants that hold for any world, hide-and-seek or scenario.
    pub fn validate_basic(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for b in &self.bodies {
            if !seen.insert(b.id) {
                return Err(format!("duplicate body id {:?}", b.id));
            }
            if !(b.half_extents.x > 0.0 && b.half_extents.y > 0.0 && b.half_extents.z > 0.0) {
                return Err(format!("body {:?} has non-positive half extents", b.id));
            }
            if !b.position.is_finite() || !b.velocity.is_finite() || !b.yaw.is_finite() {
                return Err(format!("body {:?} has non-finite state", b.id));
            }
            if b.locked && b.kind != BodyKind::Prop {
                return Err(format!("locked non-prop body {:?}", b.id));
            }
            if b.dragged_by.is_some() && (b.kind != BodyKind::Prop || b.locked) {
                return Err(format!("bad dragged_by on body {:?}", b.id));
            }
            if matches!(b.kind, BodyKind::Wall | BodyKind::Boundary) && b.velocity != Vec3::ZERO {
                return Err(format!("static body {:?} has velocity", b.id));
            }
            if !self.arena_bounds.contains_box(&b.aabb()) {
                return Err(format!("body {:?} outside arena bounds", b.id));
            }
        }
        for o in &self.openings {
            if o.kind == OpeningKind::Window {
                let agent_half_height = self
                    .bodies
                    .iter()
                    .filter(|b| b.kind.is_agent())
                    .map(|b| b.half_extents.y)
                    .fold(0.0, f64::max);
                if o.slot_center.y <= agent_half_height {
                    return Err(format!("window {:?} not elevated above agent half-height", o.id));
                }
            }
        }
        Ok(())
    }

    /// Versioned line-delimited record of the full state, one body per line.
    /// This is the frame format the replay exporter writes.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let b = self.arena_bounds;
        writeln!(
            s,
            "world v1 tick={} level={} seed={} bounds={},{},{},{},{},{}",
            self.tick,
            self.level,
            self.seed,
            b.min().x,
            b.min().y,
            b.min().z,
            b.max().x,
            b.max().y,
            b.max().z
        )
        .unwrap();
        for body in &self.bodies {
            writeln!(
                s,
                "body id={} kind={} pos={},{},{} vel={},{},{} yaw={} half={},{},{} grav={} locked={} dragged={}",
                body.id.0,
                body.kind.name(),
                body.position.x,
                body.position.y,
                body.position.z,
                body.velocity.x,
                body.velocity.y,
                body.velocity.z,
                body.yaw,
                body.half_extents.x,
                body.half_extents.y,
                body.half_extents.z,
                body.gravity_scale,
                u8::from(body.locked),
                body.dragged_by.map_or_else(|| "-".to_string(), |d| d.0.to_string()),
            )
            .unwrap();
        }
        for o in &self.openings {
            writeln!(
                s,
                "opening id={} kind={} center={},{},{} half={},{},{} enabled={}",
                o.id.0,
                o.kind.name(),
                o.slot_center.x,
                o.slot_center.y,
                o.slot_center.z,
                o.slot_half_extents.x,
                o.slot_half_extents.y,
                o.slot_half_extents.z,
                u8::from(o.enabled),
            )
            .unwrap();
        }
        s
    }
}
