//! Physics-lite stepping: damped thrust integration for agents, light
//! gravity for obstacles, kinematic prop carry, and minimal-translation
//! pushout between axis-aligned boxes.

use super::{AgentAction, Body, BodyId, BodyKind, Manipulate, WorldError, WorldState};
use crate::math::Vec3;
use std::collections::{BTreeMap, BTreeSet};

/// Pure step: validates actions, integrates one tick of `dt` seconds, and
/// returns the successor state. Replaying the same inputs reproduces the
/// same output bit for bit.
pub fn step_physics(
    state: &WorldState,
    actions: &BTreeMap<BodyId, AgentAction>,
    dt: f64,
) -> Result<WorldState, WorldError> {
    let mut next = state.clone();
    step_physics_mut(&mut next, actions, dt)?;
    Ok(next)
}

/// In-place variant of [`step_physics`] for hot loops.
pub fn step_physics_mut(
    state: &mut WorldState,
    actions: &BTreeMap<BodyId, AgentAction>,
    dt: f64,
) -> Result<(), WorldError> {
    step_physics_pinned(state, actions, dt, &BTreeSet::new())
}

/// Step with a set of agents pinned in place. Pinned agents ignore their
/// actions, are immovable to collisions, and keep zero velocity — the prep
/// phase pins seekers through this.
pub fn step_physics_pinned(
    state: &mut WorldState,
    actions: &BTreeMap<BodyId, AgentAction>,
    dt: f64,
    pinned: &BTreeSet<BodyId>,
) -> Result<(), WorldError> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(WorldError::BadDt(dt));
    }
    for (id, action) in actions {
        let body = state.body(*id).ok_or(WorldError::UnknownBody(*id))?;
        if !body.kind.is_agent() {
            return Err(WorldError::NotAnAgent(*id));
        }
        if !action.is_finite() {
            return Err(WorldError::NonFiniteAction(*id));
        }
    }

    let params = state.physics;

    // Velocity integration.
    for ix in 0..state.bodies.len() {
        let id = state.bodies[ix].id;
        let kind = state.bodies[ix].kind;
        match kind {
            BodyKind::Hider | BodyKind::Seeker => {
                if pinned.contains(&id) {
                    state.bodies[ix].velocity = Vec3::ZERO;
                    continue;
                }
                let action = actions.get(&id).copied().unwrap_or(AgentAction::ZERO).clamped();
                let body = &mut state.bodies[ix];
                let accel = action.thrust.rotate_yaw(body.yaw) * params.accel_gain;
                body.velocity += (accel - body.velocity * params.drag) * dt;
                body.yaw = wrap_angle(body.yaw + action.yaw_rate * params.yaw_rate_max * dt);
            }
            BodyKind::Obstacle => {
                let body = &mut state.bodies[ix];
                let gravity = Vec3::new(0.0, -params.gravity * body.gravity_scale, 0.0);
                body.velocity += (gravity - body.velocity * params.obstacle_drag) * dt;
            }
            BodyKind::Prop => {
                let body = &mut state.bodies[ix];
                if body.locked {
                    body.velocity = Vec3::ZERO;
                } else if body.dragged_by.is_none() {
                    let gravity = Vec3::new(0.0, -params.gravity * body.gravity_scale, 0.0);
                    body.velocity += (gravity - body.velocity * params.drag) * dt;
                }
                // Dragged props take their carrier's velocity below.
            }
            BodyKind::Wall | BodyKind::Boundary => {}
        }
    }

    // Position integration for everything that moves on its own.
    for ix in 0..state.bodies.len() {
        let body = &state.bodies[ix];
        if is_static(body) || body.dragged_by.is_some() {
            continue;
        }
        let v = body.velocity;
        state.bodies[ix].position += v * dt;
    }

    // Dragged props ride a fixed offset in front of their carrier.
    for ix in 0..state.bodies.len() {
        if let Some(carrier_id) = state.bodies[ix].dragged_by {
            if let Some(carrier) = state.body(carrier_id) {
                let target = carrier.position + carrier.facing() * params.drag_offset;
                let vel = carrier.velocity;
                let body = &mut state.bodies[ix];
                body.position = target;
                body.velocity = vel;
            }
        }
    }

    resolve_collisions(state, pinned);
    clamp_to_bounds(state, pinned);
    state.tick += 1;
    Ok(())
}

fn wrap_angle(a: f64) -> f64 {
    a.rem_euclid(std::f64::consts::TAU)
}

fn is_static(body: &Body) -> bool {
    matches!(body.kind, BodyKind::Wall | BodyKind::Boundary)
        || (body.kind == BodyKind::Prop && body.locked)
}

/// Pushout priority: lower rank pushes, higher rank yields; equal ranks split
/// the translation. Statics and pinned agents never move.
fn push_rank(body: &Body, pinned: &BTreeSet<BodyId>) -> u8 {
    if is_static(body) || (body.kind.is_agent() && pinned.contains(&body.id)) {
        return 0; // immovable
    }
    match body.kind {
        BodyKind::Hider | BodyKind::Seeker => 1,
        BodyKind::Prop if body.dragged_by.is_some() => 1,
        _ => 2,
    }
}

fn resolve_collisions(state: &mut WorldState, pinned: &BTreeSet<BodyId>) {
    let n = state.bodies.len();
    for _ in 0..state.physics.pushout_iterations {
        let mut moved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                // A carrier never collides with the prop it is holding.
                let (bi, bj) = (&state.bodies[i], &state.bodies[j]);
                if bi.dragged_by == Some(bj.id) || bj.dragged_by == Some(bi.id) {
                    continue;
                }
                let rank_i = push_rank(bi, pinned);
                let rank_j = push_rank(bj, pinned);
                if rank_i == 0 && rank_j == 0 {
                    continue;
                }
                let Some(mtv) = bi.aabb().min_translation(&bj.aabb()) else {
                    continue;
                };
                moved = true;
                // mtv moves body i away from body j.
                if rank_j == 0 || (rank_i != 0 && rank_i > rank_j) {
                    apply_push(state, i, j, mtv);
                } else if rank_i == 0 || rank_j > rank_i {
                    apply_push(state, j, i, -mtv);
                } else {
                    apply_push(state, i, j, mtv * 0.5);
                    apply_push(state, j, i, -(mtv * 0.5));
                }
            }
        }
        if !moved {
            break;
        }
    }
}

/// Push body `mover` by `mtv` out of body `other`, adjusting velocity along
/// the push axis: obstacles shoved by agents inherit the agent's velocity on
/// that axis (the glide), everything else just stops approaching.
fn apply_push(state: &mut WorldState, mover: usize, other: usize, mtv: Vec3) {
    let other_vel = state.bodies[other].velocity;
    let glides = state.bodies[mover].kind == BodyKind::Obstacle
        && state.bodies[other].kind.is_agent();
    let body = &mut state.bodies[mover];
    body.position += mtv;
    let (axis_vel, push): (&mut f64, f64) = if mtv.x != 0.0 {
        (&mut body.velocity.x, mtv.x)
    } else if mtv.y != 0.0 {
        (&mut body.velocity.y, mtv.y)
    } else {
        (&mut body.velocity.z, mtv.z)
    };
    let other_axis_vel = if mtv.x != 0.0 {
        other_vel.x
    } else if mtv.y != 0.0 {
        other_vel.y
    } else {
        other_vel.z
    };
    if glides {
        *axis_vel = other_axis_vel;
    } else if (push > 0.0 && *axis_vel < 0.0) || (push < 0.0 && *axis_vel > 0.0) {
        *axis_vel = 0.0;
    }
}

fn clamp_to_bounds(state: &mut WorldState, pinned: &BTreeSet<BodyId>) {
    let bounds = state.arena_bounds;
    for ix in 0..state.bodies.len() {
        let body = &state.bodies[ix];
        if is_static(body) || (body.kind.is_agent() && pinned.contains(&body.id)) {
            continue;
        }
        let body = &mut state.bodies[ix];
        let lo = bounds.min() + body.half_extents;
        let hi = bounds.max() - body.half_extents;
        clamp_axis(&mut body.position.x, &mut body.velocity.x, lo.x, hi.x);
        clamp_axis(&mut body.position.y, &mut body.velocity.y, lo.y, hi.y);
        clamp_axis(&mut body.position.z, &mut body.velocity.z, lo.z, hi.z);
    }
}

fn clamp_axis(pos: &mut f64, vel: &mut f64, lo: f64, hi: f64) {
    if *pos < lo {
        *pos = lo;
        if *vel < 0.0 {
            *vel = 0.0;
        }
    } else if *pos > hi {
        *pos = hi;
        if *vel > 0.0 {
            *vel = 0.0;
        }
    }
}

/// Pure prop manipulation. Failure cases are all no-ops: unknown agents,
/// seekers, out-of-range grabs, and locked targets leave the state unchanged
/// so the discrete action head never needs masking.
pub fn try_manipulate(
    state: &WorldState,
    agent_id: BodyId,
    action: Manipulate,
) -> WorldState {
    let mut next = state.clone();
    try_manipulate_mut(&mut next, agent_id, action);
    next
}

/// In-place variant of [`try_manipulate`]. Returns true when a prop changed.
pub fn try_manipulate_mut(state: &mut WorldState, agent_id: BodyId, action: Manipulate) -> bool {
    let Some(agent) = state.body(agent_id) else {
        return false;
    };
    // Only hiders handle props; seekers get no counter-tool.
    if agent.kind != BodyKind::Hider {
        return false;
    }
    let agent_pos = agent.position;
    let held: Option<BodyId> = state.dragged_prop(agent_id).map(|p| p.id);

    match (action, held) {
        (Manipulate::None, _) => false,
        (Manipulate::Release, Some(prop_id)) => {
            state.body_mut(prop_id).unwrap().dragged_by = None;
            true
        }
        (Manipulate::Release, None) => false,
        (Manipulate::GrabOrLock, None) => {
            let grab_radius = state.physics.grab_radius;
            let mut best: Option<(f64, BodyId)> = None;
            for b in &state.bodies {
                if b.kind != BodyKind::Prop || b.locked || b.dragged_by.is_some() {
                    continue;
                }
                let d = (b.position - agent_pos).norm();
                if d <= grab_radius && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, b.id));
                }
            }
            match best {
                Some((_, prop_id)) => {
                    state.body_mut(prop_id).unwrap().dragged_by = Some(agent_id);
                    true
                }
                None => false,
            }
        }
        (Manipulate::GrabOrLock, Some(prop_id)) => {
            let prop_box = state.body(prop_id).unwrap().aabb();
            let slot = state
                .openings
                .iter()
                .filter(|o| o.enabled && o.slot().intersects(&prop_box))
                .find(|o| !state.opening_blocked(o.id).unwrap_or(false))
                .map(|o| o.slot_center);
            match slot {
                Some(center) => {
                    let prop = state.body_mut(prop_id).unwrap();
                    prop.locked = true;
                    prop.dragged_by = None;
                    prop.position = center;
                    prop.velocity = Vec3::ZERO;
                    true
                }
                None => false,
            }
        }
    }
}
