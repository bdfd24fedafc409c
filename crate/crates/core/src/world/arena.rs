//! Deterministic arena construction.
//!
//! The hide-and-seek arena is a 20 x 8 x 20 m box bounded by four thin
//! boundary slabs, with a full-height 10 x 10 m inner room whose perimeter is
//! split into four L-shaped wall chunks. Each chunk carries one opening slot
//! (doors at floor level, windows elevated). Level `k` instantiates chunks
//! `0..k`; `prop_count` enables that many opening slots and spawns one prop
//! per enabled slot.

use super::{
    AgentAction, Body, BodyId, BodyKind, Opening, OpeningId, OpeningKind, PhysicsParams, WallGroup,
    WorldError, WorldState,
};
use crate::math::{Aabb, Vec3};
use crate::rng::stream;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Outer arena dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArenaConfig {
    pub width: f64,
    pub height: f64,
    pub depth: f64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        ArenaConfig { width: 20.0, height: 8.0, depth: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentCounts {
    pub hiders: u32,
    pub seekers: u32,
}

pub(crate) const AGENT_HALF: f64 = 0.3;
const BOUNDARY_HALF_THICKNESS: f64 = 0.25;
const ROOM_HALF: f64 = 5.0;
const WALL_HALF_THICKNESS: f64 = 0.15;
const OBSTACLE_COUNT: usize = 5;

const DOOR_SLOT_HALF: Vec3 = Vec3 { x: 0.75, y: 1.0, z: 0.3 };
const WINDOW_SLOT_HALF: Vec3 = Vec3 { x: 0.75, y: 0.75, z: 0.3 };
const WINDOW_CENTER_Y: f64 = 3.5;
const DOOR_PROP_HALF: Vec3 = Vec3 { x: 0.7, y: 1.05, z: 0.4 };
// Window slots sit in walls of either orientation; the prop is square in
// plan so it covers the slot whichever way the wall runs.
const WINDOW_PROP_HALF: Vec3 = Vec3 { x: 0.7, y: 0.8, z: 0.7 };

/// Build the hide-and-seek arena. Identical inputs produce a bit-identical
/// state.
pub fn build_arena(
    level: u8,
    prop_count: u32,
    counts: AgentCounts,
    seed: u64,
) -> Result<WorldState, WorldError> {
    build_arena_with(&ArenaConfig::default(), level, prop_count, counts, seed)
}

pub fn build_arena_with(
    cfg: &ArenaConfig,
    level: u8,
    prop_count: u32,
    counts: AgentCounts,
    seed: u64,
) -> Result<WorldState, WorldError> {
    if !(1..=4).contains(&level) {
        return Err(WorldError::Config { field: "level", value: level as i64, range: "1..4" });
    }
    if !(1..=4).contains(&prop_count) {
        return Err(WorldError::Config {
            field: "prop_count",
            value: prop_count as i64,
            range: "1..4",
        });
    }
    if !(1..=2).contains(&counts.hiders) {
        return Err(WorldError::Config {
            field: "hiders",
            value: counts.hiders as i64,
            range: "1..2",
        });
    }
    if !(1..=4).contains(&counts.seekers) {
        return Err(WorldError::Config {
            field: "seekers",
            value: counts.seekers as i64,
            range: "1..4",
        });
    }

    let mut rng = stream(seed, "arena", &[level as u64, prop_count as u64]);
    let bounds = Aabb::new(
        Vec3::new(0.0, cfg.height / 2.0, 0.0),
        Vec3::new(cfg.width / 2.0, cfg.height / 2.0, cfg.depth / 2.0),
    );

    // Openings: one candidate slot per wall chunk, the first `prop_count`
    // enabled, one prop spawned per enabled slot.
    let slots = opening_slots();
    let mut openings = Vec::new();
    for (ix, (kind, center, half)) in slots.iter().enumerate() {
        openings.push(Opening {
            id: OpeningId(ix as u32),
            kind: *kind,
            slot_center: *center,
            slot_half_extents: *half,
            enabled: (ix as u32) < prop_count,
        });
    }

    // Static geometry first so spawn rejection can see it; bodies are still
    // allocated agents-first so agent ids stay stable across levels.
    let mut static_boxes: Vec<Aabb> = boundary_bodies(bounds).iter().map(Body::aabb).collect();
    let mut chunk_boxes: Vec<Vec<Aabb>> = Vec::new();
    for chunk in 0..4usize {
        let boxes = if chunk < level as usize {
            chunk_wall_boxes(chunk, &openings[chunk], cfg.height)
        } else {
            Vec::new()
        };
        static_boxes.extend(boxes.iter().copied());
        chunk_boxes.push(boxes);
    }

    let mut bodies: Vec<Body> = Vec::new();
    let mut next_id = 0u32;
    let mut alloc = |bodies: &mut Vec<Body>, body: Body| -> BodyId {
        let id = BodyId(next_id);
        next_id += 1;
        bodies.push(Body { id, ..body });
        id
    };

    for _ in 0..counts.hiders {
        let position = spawn_point(&mut rng, &bodies, &static_boxes, hider_region(), AGENT_HALF);
        alloc(
            &mut bodies,
            agent_body(BodyKind::Hider, position, rng.random_range(0.0..std::f64::consts::TAU)),
        );
    }
    // Seekers spawn anywhere in the arena, inner room included, so higher
    // levels stay harder for hiders.
    let seeker_region = (
        Vec3::new(-(cfg.width / 2.0 - 1.0), 0.5, -(cfg.depth / 2.0 - 1.0)),
        Vec3::new(cfg.width / 2.0 - 1.0, 2.5, cfg.depth / 2.0 - 1.0),
    );
    for _ in 0..counts.seekers {
        let position = spawn_point(&mut rng, &bodies, &static_boxes, seeker_region, AGENT_HALF);
        alloc(
            &mut bodies,
            agent_body(BodyKind::Seeker, position, rng.random_range(0.0..std::f64::consts::TAU)),
        );
    }

    for opening in openings.iter().filter(|o| o.enabled) {
        let half = match opening.kind {
            OpeningKind::Door => DOOR_PROP_HALF,
            OpeningKind::Window => WINDOW_PROP_HALF,
        };
        let region = prop_region(half);
        let position = spawn_point(&mut rng, &bodies, &static_boxes, region, half.x.max(half.z));
        alloc(
            &mut bodies,
            Body {
                id: BodyId(0),
                kind: BodyKind::Prop,
                position: Vec3::new(position.x, half.y, position.z),
                velocity: Vec3::ZERO,
                yaw: 0.0,
                half_extents: half,
                gravity_scale: 0.0,
                locked: false,
                dragged_by: None,
            },
        );
    }

    for _ in 0..OBSTACLE_COUNT {
        let position = spawn_point(&mut rng, &bodies, &static_boxes, obstacle_region(), 0.5);
        alloc(
            &mut bodies,
            Body {
                id: BodyId(0),
                kind: BodyKind::Obstacle,
                position,
                velocity: Vec3::ZERO,
                yaw: 0.0,
                half_extents: Vec3::splat(0.5),
                gravity_scale: 0.1,
                locked: false,
                dragged_by: None,
            },
        );
    }

    for b in boundary_bodies(bounds) {
        alloc(&mut bodies, b);
    }

    // Interior wall chunks; level k instantiates chunks 0..k.
    let mut wall_groups = Vec::new();
    for (chunk, boxes) in chunk_boxes.iter().enumerate() {
        let enabled = chunk < level as usize;
        let mut body_ids = Vec::new();
        if enabled {
            for aabb in boxes.iter().copied() {
                let id = alloc(
                    &mut bodies,
                    Body {
                        id: BodyId(0),
                        kind: BodyKind::Wall,
                        position: aabb.center,
                        velocity: Vec3::ZERO,
                        yaw: 0.0,
                        half_extents: aabb.half,
                        gravity_scale: 0.0,
                        locked: false,
                        dragged_by: None,
                    },
                );
                body_ids.push(id);
            }
        }
        wall_groups.push(WallGroup { enabled, body_ids });
    }

    Ok(WorldState {
        tick: 0,
        bodies,
        openings,
        level,
        arena_bounds: bounds,
        seed,
        wall_groups,
        physics: PhysicsParams::default(),
    })
}

/// An open arena with boundaries only: the pre-experiment scenarios and
/// sensor tests run here. All agents are spawned as hiders.
pub fn build_open_arena(cfg: &ArenaConfig, agents: u32, seed: u64) -> WorldState {
    let mut rng = stream(seed, "open-arena", &[]);
    let bounds = Aabb::new(
        Vec3::new(0.0, cfg.height / 2.0, 0.0),
        Vec3::new(cfg.width / 2.0, cfg.height / 2.0, cfg.depth / 2.0),
    );
    let mut bodies = Vec::new();
    for ix in 0..agents {
        let margin = AGENT_HALF + BOUNDARY_HALF_THICKNESS * 2.0 + 0.2;
        let position = Vec3::new(
            rng.random_range(-(cfg.width / 2.0 - margin)..cfg.width / 2.0 - margin),
            rng.random_range(AGENT_HALF + 0.2..cfg.height - AGENT_HALF - 0.2),
            rng.random_range(-(cfg.depth / 2.0 - margin)..cfg.depth / 2.0 - margin),
        );
        bodies.push(Body {
            id: BodyId(ix),
            ..agent_body(BodyKind::Hider, position, rng.random_range(0.0..std::f64::consts::TAU))
        });
    }
    let mut next = agents;
    for b in boundary_bodies(bounds) {
        bodies.push(Body { id: BodyId(next), ..b });
        next += 1;
    }
    WorldState {
        tick: 0,
        bodies,
        openings: Vec::new(),
        level: 1,
        arena_bounds: bounds,
        seed,
        wall_groups: (0..4).map(|_| WallGroup { enabled: false, body_ids: Vec::new() }).collect(),
        physics: PhysicsParams::default(),
    }
}

fn agent_body(kind: BodyKind, position: Vec3, yaw: f64) -> Body {
    Body {
        id: BodyId(0),
        kind,
        position,
        velocity: Vec3::ZERO,
        yaw,
        half_extents: Vec3::splat(AGENT_HALF),
        gravity_scale: 0.0,
        locked: false,
        dragged_by: None,
    }
}

fn boundary_bodies(bounds: Aabb) -> Vec<Body> {
    let hx = bounds.half.x;
    let hy = bounds.half.y;
    let hz = bounds.half.z;
    let cy = bounds.center.y;
    let t = BOUNDARY_HALF_THICKNESS;
    let mk = |center: Vec3, half: Vec3| Body {
        id: BodyId(0),
        kind: BodyKind::Boundary,
        position: center,
        velocity: Vec3::ZERO,
        yaw: 0.0,
        half_extents: half,
        gravity_scale: 0.0,
        locked: false,
        dragged_by: None,
    };
    vec![
        mk(Vec3::new(0.0, cy, hz - t), Vec3::new(hx, hy, t)),
        mk(Vec3::new(0.0, cy, -(hz - t)), Vec3::new(hx, hy, t)),
        mk(Vec3::new(hx - t, cy, 0.0), Vec3::new(t, hy, hz)),
        mk(Vec3::new(-(hx - t), cy, 0.0), Vec3::new(t, hy, hz)),
    ]
}

/// Candidate opening slots, one per chunk. Chunks 0 and 2 carry doors;
/// 1 and 3 carry windows.
fn opening_slots() -> [(OpeningKind, Vec3, Vec3); 4] {
    [
        (OpeningKind::Door, Vec3::new(-2.5, 1.0, ROOM_HALF), DOOR_SLOT_HALF),
        (
            OpeningKind::Window,
            Vec3::new(ROOM_HALF, WINDOW_CENTER_Y, 2.5),
            // Window in a wall running along z: swap slot x/z extents.
            Vec3::new(WINDOW_SLOT_HALF.z, WINDOW_SLOT_HALF.y, WINDOW_SLOT_HALF.x),
        ),
        (OpeningKind::Door, Vec3::new(2.5, 1.0, -ROOM_HALF), DOOR_SLOT_HALF),
        (
            OpeningKind::Window,
            Vec3::new(-ROOM_HALF, WINDOW_CENTER_Y, -2.5),
            Vec3::new(WINDOW_SLOT_HALF.z, WINDOW_SLOT_HALF.y, WINDOW_SLOT_HALF.x),
        ),
    ]
}

/// Wall boxes of one L-shaped chunk, with the opening hole carved out of the
/// run that hosts it when the opening is enabled.
fn chunk_wall_boxes(chunk: usize, opening: &Opening, height: f64) -> Vec<Aabb> {
    let t = WALL_HALF_THICKNESS;
    let r = ROOM_HALF;
    // Each chunk: (run hosting the opening, plain run). Runs are described by
    // (axis, fixed coordinate, span lo, span hi); axis 0 = run along x.
    let (host, plain) = match chunk {
        // North-west corner: north wall west half hosts a door; west wall
        // north half is plain.
        0 => (((0usize, r, -r, 0.0)), (1usize, -r, 0.0, r)),
        // North-east corner: east wall north half hosts a window.
        1 => (((1, r, 0.0, r)), (0, r, 0.0, r)),
        // South-east corner: south wall east half hosts a door.
        2 => (((0, -r, 0.0, r)), (1, r, -r, 0.0)),
        // South-west corner: west wall south half hosts a window.
        _ => (((1, -r, -r, 0.0)), (0, -r, -r, 0.0)),
    };

    let mut boxes = Vec::new();
    let run_box = |axis: usize, fixed: f64, lo: f64, hi: f64, y0: f64, y1: f64| {
        let mid = (lo + hi) / 2.0;
        let half_len = (hi - lo) / 2.0;
        let cy = (y0 + y1) / 2.0;
        let hy = (y1 - y0) / 2.0;
        if axis == 0 {
            Aabb::new(Vec3::new(mid, cy, fixed), Vec3::new(half_len, hy, t))
        } else {
            Aabb::new(Vec3::new(fixed, cy, mid), Vec3::new(t, hy, half_len))
        }
    };

    let (axis, fixed, lo, hi) = host;
    if opening.enabled {
        let (c_along, s_along) = if axis == 0 {
            (opening.slot_center.x, opening.slot_half_extents.x)
        } else {
            (opening.slot_center.z, opening.slot_half_extents.z)
        };
        let y_lo = opening.slot_center.y - opening.slot_half_extents.y;
        let y_hi = opening.slot_center.y + opening.slot_half_extents.y;
        // Side pieces.
        if c_along - s_along > lo {
            boxes.push(run_box(axis, fixed, lo, c_along - s_along, 0.0, height));
        }
        if hi > c_along + s_along {
            boxes.push(run_box(axis, fixed, c_along + s_along, hi, 0.0, height));
        }
        // Lintel above and, for windows, the sill below.
        if y_hi < height {
            boxes.push(run_box(axis, fixed, c_along - s_along, c_along + s_along, y_hi, height));
        }
        if y_lo > 0.0 {
            boxes.push(run_box(axis, fixed, c_along - s_along, c_along + s_along, 0.0, y_lo));
        }
    } else {
        boxes.push(run_box(axis, fixed, lo, hi, 0.0, height));
    }

    let (axis, fixed, lo, hi) = plain;
    boxes.push(run_box(axis, fixed, lo, hi, 0.0, height));
    boxes
}

fn hider_region() -> (Vec3, Vec3) {
    (Vec3::new(-3.8, 0.5, -3.8), Vec3::new(3.8, 2.5, 3.8))
}

fn prop_region(half: Vec3) -> (Vec3, Vec3) {
    let m = 3.6;
    (Vec3::new(-m, half.y, -m), Vec3::new(m, half.y, m))
}

fn obstacle_region() -> (Vec3, Vec3) {
    (Vec3::new(-4.0, 0.6, -4.0), Vec3::new(4.0, 3.0, 4.0))
}

fn spawn_point(
    rng: &mut ChaCha8Rng,
    existing: &[Body],
    static_boxes: &[Aabb],
    region: (Vec3, Vec3),
    half: f64,
) -> Vec3 {
    let (lo, hi) = region;
    let sample = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            if lo.x < hi.x { rng.random_range(lo.x..hi.x) } else { lo.x },
            if lo.y < hi.y { rng.random_range(lo.y..hi.y) } else { lo.y },
            if lo.z < hi.z { rng.random_range(lo.z..hi.z) } else { lo.z },
        )
    };
    let mut p = sample(rng);
    for _ in 0..200 {
        let aabb = Aabb::new(p, Vec3::splat(half + 0.2));
        if existing.iter().all(|b| !b.aabb().intersects(&aabb))
            && static_boxes.iter().all(|b| !b.intersects(&aabb))
        {
            return p;
        }
        p = sample(rng);
    }
    p
}

/// Convenience for tests and the demo: a zero action for every agent.
pub fn zero_actions(state: &WorldState) -> std::collections::BTreeMap<BodyId, AgentAction> {
    state.agent_ids().into_iter().map(|id| (id, AgentAction::ZERO)).collect()
}
