//! Observation generation: spherical grid sensors (360-degree spatial and
//! forward-facing frontal), 2D sphere raycasts, and the proprioceptive
//! vector.
//!
//! Grid scans are lidar-like: the grid buckets directions around the agent
//! (rows by latitude, columns by longitude, both in the agent's yaw-aligned
//! frame) and each cell reports the nearest body hit by a ray through the
//! cell center, as occupancy, kind tags, and a normalized distance. Nothing
//! here reads pixels; geometry is the whole sensor.
//!
//! # Observation layout (version `obs-v1`)
//!
//! A full observation vector concatenates, in order, whichever blocks the
//! [`ObsConfig`] enables:
//!
//! 1. proprioception, 12 values: normalized position xyz, normalized
//!    velocity xyz, facing xyz, normalized yaw, dragging flag, timer
//! 2. raycasts, `2 * rays_per_direction` rays ordered by signed azimuth
//!    ascending, each `1 + 6` values: normalized distance then kind tags in
//!    [`BodyKind::ALL`] order
//! 3. spatial grid, row-major `rows x cols x channels`
//! 4. frontal grid, same ordering
//! 5. target relative position (agent frame, clamped to [-1, 1]), 3 values
//!
//! Grid channels default to occupancy, the six kind tags, and nearest
//! distance, in that order.

use crate::math::{ray_box, sphere_sweep_box, Aabb, Vec3};
use crate::world::{Body, BodyId, BodyKind, WorldState};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SensorError {
    #[error("unknown agent id {0:?}")]
    UnknownAgent(BodyId),
    #[error("invalid sensor config: {0}")]
    BadConfig(String),
}

/// Feature channels a grid cell can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureChannel {
    Occupancy,
    /// One channel per body kind, in [`BodyKind::ALL`] order.
    KindTags,
    NearestDistance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSensorConfig {
    /// Upward field-of-view latitude, degrees.
    pub lat_angle_north: f64,
    /// Downward field-of-view latitude, degrees.
    pub lat_angle_south: f64,
    /// Longitude half-angle per side, degrees; total horizontal FOV is twice
    /// this.
    pub lon_angle: f64,
    /// Near clipping distance, meters.
    pub min_distance: f64,
    /// Far clipping distance, meters.
    pub max_distance: f64,
    /// Arc angle of a single cell, degrees; sets the resolution.
    pub cell_arc: f64,
    /// Distance normalization exponent in (0, 1]; below 1 stretches
    /// resolution toward close range.
    pub normalization_exponent: f64,
    /// Starting capacity of the detection candidate list; it doubles
    /// whenever exceeded.
    pub initial_collider_buffer: usize,
    pub feature_channels: Vec<FeatureChannel>,
}

impl GridSensorConfig {
    /// Surround sensor: full 360-degree horizontal view.
    pub fn spatial(cell_arc: f64) -> Self {
        GridSensorConfig {
            lat_angle_north: 90.0,
            lat_angle_south: 90.0,
            lon_angle: 180.0,
            min_distance: 0.3,
            max_distance: 20.0,
            cell_arc,
            normalization_exponent: 0.5,
            initial_collider_buffer: 32,
            feature_channels: default_channels(),
        }
    }

    /// Forward sensor: 84 degrees per side, 168 total.
    pub fn frontal(cell_arc: f64) -> Self {
        GridSensorConfig {
            lat_angle_north: 90.0,
            lat_angle_south: 90.0,
            lon_angle: 84.0,
            min_distance: 0.3,
            max_distance: 20.0,
            cell_arc,
            normalization_exponent: 0.5,
            initial_collider_buffer: 400,
            feature_channels: default_channels(),
        }
    }

    pub fn rows(&self) -> usize {
        ((self.lat_angle_north + self.lat_angle_south) / self.cell_arc).round() as usize
    }

    pub fn cols(&self) -> usize {
        (2.0 * self.lon_angle / self.cell_arc).round() as usize
    }

    pub fn channels(&self) -> usize {
        self.feature_channels
            .iter()
            .map(|c| match c {
                FeatureChannel::KindTags => BodyKind::ALL.len(),
                _ => 1,
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), SensorError> {
        let err = |msg: String| Err(SensorError::BadConfig(msg));
        if !(self.min_distance > 0.0 && self.min_distance < self.max_distance) {
            return err(format!(
                "need 0 < min_distance < max_distance, got {} and {}",
                self.min_distance, self.max_distance
            ));
        }
        if self.cell_arc <= 0.0 {
            return err(format!("cell_arc must be positive, got {}", self.cell_arc));
        }
        for (span, what) in [
            (self.lat_angle_north + self.lat_angle_south, "lat_north + lat_south"),
            (2.0 * self.lon_angle, "2 * lon_angle"),
        ] {
            let ratio = span / self.cell_arc;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return err(format!("cell_arc {} does not divide {what} = {span}", self.cell_arc));
            }
        }
        if !(self.normalization_exponent > 0.0 && self.normalization_exponent <= 1.0) {
            return err(format!(
                "normalization_exponent must be in (0, 1], got {}",
                self.normalization_exponent
            ));
        }
        Ok(())
    }
}

fn default_channels() -> Vec<FeatureChannel> {
    vec![FeatureChannel::Occupancy, FeatureChannel::KindTags, FeatureChannel::NearestDistance]
}

/// Row-major grid of per-cell feature values, all in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GridObservation {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl GridObservation {
    pub fn cell(&self, row: usize, col: usize) -> &[f64] {
        let base = (row * self.cols + col) * self.channels;
        &self.values[base..base + self.channels]
    }

    /// One CSV line per grid row; cells flattened channel-major within the
    /// row, matching the documented layout.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> = self.values
                [(r * self.cols * self.channels)..((r + 1) * self.cols * self.channels)]
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Center point of a grid cell from its corner and size.
pub fn cell_center(corner: Vec3, size: Vec3) -> Vec3 {
    corner + size * 0.5
}

/// Binary occupancy of a box cell: 1 iff any object's box intersects the
/// closed cell.
pub fn cell_occupancy(cell: &Aabb, objects: &[Body]) -> u8 {
    u8::from(objects.iter().any(|b| b.aabb().intersects(cell)))
}

/// Per-cell feature vector aggregated over the objects intersecting the
/// closed cell: occupancy by max, kind tags by max, and nearest distance as
/// the distance from the cell center to the closest intersecting object,
/// normalized by the cell half-diagonal. An empty cell is all zeros with
/// distance 1.
pub fn cell_features(cell: &Aabb, objects: &[Body], channels: &[FeatureChannel]) -> Vec<f64> {
    let hits: Vec<&Body> = objects.iter().filter(|b| b.aabb().intersects(cell)).collect();
    let mut out = Vec::new();
    for ch in channels {
        match ch {
            FeatureChannel::Occupancy => out.push(f64::from(!hits.is_empty())),
            FeatureChannel::KindTags => {
                for kind in BodyKind::ALL {
                    out.push(f64::from(hits.iter().any(|b| b.kind == kind)));
                }
            }
            FeatureChannel::NearestDistance => {
                let half_diag = cell.half.norm();
                let d = hits
                    .iter()
                    .map(|b| b.aabb().distance_to_point(cell.center) / half_diag)
                    .fold(f64::INFINITY, f64::min);
                out.push(if d.is_finite() { d.clamp(0.0, 1.0) } else { 1.0 });
            }
        }
    }
    out
}

/// Arc length subtended by `cell_arc` degrees at distance `d`: the physical
/// cell size the angular resolution yields at that range.
pub fn cell_size_at_distance(cell_arc: f64, d: f64) -> f64 {
    TAU * d * (cell_arc / 360.0)
}

/// Candidate list with the doubling growth policy of the original sensor:
/// starts at the configured capacity and doubles whenever it would overflow.
#[derive(Debug)]
pub struct CandidateBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    pub doublings: u32,
}

impl<T> CandidateBuffer<T> {
    pub fn new(initial_capacity: usize) -> Self {
        let capacity = initial_capacity.max(1);
        CandidateBuffer { items: Vec::with_capacity(capacity), capacity, doublings: 0 }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.capacity *= 2;
            self.items.reserve(self.capacity - self.items.len());
            self.doublings += 1;
        }
        self.items.push(item);
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }
}

/// Scan the world around an agent into a grid observation.
pub fn grid_scan(
    state: &WorldState,
    agent_id: BodyId,
    config: &GridSensorConfig,
) -> Result<GridObservation, SensorError> {
    config.validate()?;
    let agent = state.body(agent_id).ok_or(SensorError::UnknownAgent(agent_id))?;
    let origin = agent.position;
    let yaw = agent.yaw;

    let rows = config.rows();
    let cols = config.cols();
    let channels = config.channels();
    let mut grid =
        GridObservation { rows, cols, channels, values: vec![0.0; rows * cols * channels] };

    // Empty cells read distance 1.
    if let Some(off) = channel_offset(&config.feature_channels, FeatureChannel::NearestDistance) {
        for cell in 0..rows * cols {
            grid.values[cell * channels + off] = 1.0;
        }
    }

    let mut candidates: CandidateBuffer<&Body> =
        CandidateBuffer::new(config.initial_collider_buffer);
    for b in &state.bodies {
        if b.id == agent_id {
            continue;
        }
        if b.aabb().distance_to_point(origin) <= config.max_distance {
            candidates.push(b);
        }
    }

    let arc_rad = config.cell_arc.to_radians();
    let lat_n = config.lat_angle_north.to_radians();
    let lat_s = config.lat_angle_south.to_radians();
    let lon = config.lon_angle.to_radians();

    // Nearest hit per cell, tracked so closer bodies overwrite farther ones.
    let mut best_t = vec![f64::INFINITY; rows * cols];

    for body in candidates.items() {
        let (az_range, (el_lo, el_hi)) = angular_bounds(origin, yaw, &body.aabb());
        if el_lo > lat_n || el_hi < -lat_s {
            continue;
        }
        let row_lo = (((lat_n - el_hi) / arc_rad).floor() as isize).clamp(0, rows as isize - 1);
        let row_hi = (((lat_n - el_lo) / arc_rad).ceil() as isize).clamp(0, rows as isize - 1);
        let (col_lo, col_hi) = match az_range {
            None => (0, cols as isize - 1),
            Some((a_lo, a_hi)) => {
                if a_hi < -lon || a_lo > lon {
                    continue;
                }
                (
                    (((a_lo + lon) / arc_rad).floor() as isize).clamp(0, cols as isize - 1),
                    (((a_hi + lon) / arc_rad).ceil() as isize).clamp(0, cols as isize - 1),
                )
            }
        };
        let aabb = body.aabb();
        for row in row_lo..=row_hi {
            let el = lat_n - (row as f64 + 0.5) * arc_rad;
            let (el_sin, el_cos) = el.sin_cos();
            for col in col_lo..=col_hi {
                let az = -lon + (col as f64 + 0.5) * arc_rad;
                let dir_agent = Vec3::new(az.sin() * el_cos, el_sin, az.cos() * el_cos);
                let dir = dir_agent.rotate_yaw(yaw);
                let Some(t) = ray_box(origin, dir, &aabb) else {
                    continue;
                };
                if t < config.min_distance || t > config.max_distance {
                    continue;
                }
                let cell = row as usize * cols + col as usize;
                if t >= best_t[cell] {
                    continue;
                }
                best_t[cell] = t;
                write_cell(
                    &mut grid.values[cell * channels..(cell + 1) * channels],
                    &config.feature_channels,
                    body.kind,
                    (t / config.max_distance).powf(config.normalization_exponent),
                );
            }
        }
    }
    Ok(grid)
}

fn channel_offset(channels: &[FeatureChannel], wanted: FeatureChannel) -> Option<usize> {
    let mut off = 0;
    for c in channels {
        if *c == wanted {
            return Some(off);
        }
        off += match c {
            FeatureChannel::KindTags => BodyKind::ALL.len(),
            _ => 1,
        };
    }
    None
}

fn write_cell(cell: &mut [f64], channels: &[FeatureChannel], kind: BodyKind, norm_dist: f64) {
    let mut off = 0;
    for c in channels {
        match c {
            FeatureChannel::Occupancy => {
                cell[off] = 1.0;
                off += 1;
            }
            FeatureChannel::KindTags => {
                for (k, tag_kind) in BodyKind::ALL.iter().enumerate() {
                    cell[off + k] = f64::from(*tag_kind == kind);
                }
                off += BodyKind::ALL.len();
            }
            FeatureChannel::NearestDistance => {
                cell[off] = norm_dist;
                off += 1;
            }
        }
    }
}

/// Conservative azimuth/elevation bounds of a box as seen from `origin` in
/// the yaw-aligned frame. Azimuth is `None` when the box surrounds the
/// vertical axis through the origin or straddles the rear seam; callers fall
/// back to the full column range.
fn angular_bounds(origin: Vec3, yaw: f64, aabb: &Aabb) -> (Option<(f64, f64)>, (f64, f64)) {
    let min = aabb.min();
    let max = aabb.max();
    let inside_xz =
        origin.x >= min.x && origin.x <= max.x && origin.z >= min.z && origin.z <= max.z;

    // Horizontal distance range to the box footprint; yaw-invariant.
    let d_min_h: f64 = if inside_xz {
        0.0
    } else {
        let dx = (min.x - origin.x).max(0.0).max(origin.x - max.x);
        let dz = (min.z - origin.z).max(0.0).max(origin.z - max.z);
        (dx * dx + dz * dz).sqrt()
    };
    let mut d_max_h: f64 = 0.0;
    let mut az_lo = f64::INFINITY;
    let mut az_hi = f64::NEG_INFINITY;
    for cx in [min.x, max.x] {
        for cz in [min.z, max.z] {
            let rel = Vec3::new(cx - origin.x, 0.0, cz - origin.z).rotate_yaw_inv(yaw);
            let h = (rel.x * rel.x + rel.z * rel.z).sqrt();
            d_max_h = d_max_h.max(h);
            if h > 1e-12 {
                let az = rel.x.atan2(rel.z);
                az_lo = az_lo.min(az);
                az_hi = az_hi.max(az);
            }
        }
    }

    let y_lo = min.y - origin.y;
    let y_hi = max.y - origin.y;
    let el_hi = y_hi.atan2(if y_hi > 0.0 { d_min_h } else { d_max_h });
    let el_lo = y_lo.atan2(if y_lo < 0.0 { d_min_h } else { d_max_h });

    let az = if inside_xz || az_hi - az_lo > std::f64::consts::PI {
        None
    } else {
        Some((az_lo, az_hi))
    };
    (az, (el_lo, el_hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaycastConfig {
    pub rays_per_direction: usize,
    pub max_ray_degrees: f64,
    pub sphere_radius: f64,
    pub ray_length: f64,
}

impl Default for RaycastConfig {
    fn default() -> Self {
        RaycastConfig {
            rays_per_direction: 8,
            max_ray_degrees: 180.0,
            sphere_radius: 0.3,
            ray_length: 20.0,
        }
    }
}

impl RaycastConfig {
    pub fn ray_count(&self) -> usize {
        2 * self.rays_per_direction
    }

    /// Signed ray azimuths (radians, agent frame), ascending. Rays sit at
    /// half-step offsets so the two directions tile the span without a
    /// duplicated rear ray.
    pub fn angles(&self) -> Vec<f64> {
        let n = self.rays_per_direction as f64;
        let step = self.max_ray_degrees.to_radians() / n;
        (0..self.ray_count())
            .map(|k| -self.max_ray_degrees.to_radians() + (k as f64 + 0.5) * step)
            .collect()
    }

    pub fn values_per_ray(&self) -> usize {
        1 + BodyKind::ALL.len()
    }
}

/// Sweep the horizontal ray fan. Each ray reports normalized hit distance
/// (1 when nothing is hit) followed by the kind tags of the nearest body.
pub fn raycast_sweep(
    state: &WorldState,
    agent_id: BodyId,
    config: &RaycastConfig,
) -> Result<Vec<f64>, SensorError> {
    let agent = state.body(agent_id).ok_or(SensorError::UnknownAgent(agent_id))?;
    let origin = agent.position;
    let mut out = Vec::with_capacity(config.ray_count() * config.values_per_ray());
    for az in config.angles() {
        let dir = Vec3::new(az.sin(), 0.0, az.cos()).rotate_yaw(agent.yaw);
        let mut best: Option<(f64, BodyKind)> = None;
        for b in &state.bodies {
            if b.id == agent_id {
                continue;
            }
            if let Some(t) = sphere_sweep_box(origin, dir, config.sphere_radius, &b.aabb()) {
                if t <= config.ray_length && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, b.kind));
                }
            }
        }
        match best {
            Some((t, kind)) => {
                out.push(t / config.ray_length);
                for k in BodyKind::ALL {
                    out.push(f64::from(k == kind));
                }
            }
            None => {
                out.push(1.0);
                out.extend(std::iter::repeat_n(0.0, BodyKind::ALL.len()));
            }
        }
    }
    Ok(out)
}

/// The scripted real-time values every agent reads about itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ProprioVector {
    pub normalized_position: Vec3,
    pub normalized_velocity: Vec3,
    pub facing_direction: Vec3,
    pub normalized_yaw: f64,
    pub is_dragging: f64,
    pub normalized_timer: f64,
}

impl ProprioVector {
    pub const DIM: usize = 12;

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.normalized_position.x,
            self.normalized_position.y,
            self.normalized_position.z,
            self.normalized_velocity.x,
            self.normalized_velocity.y,
            self.normalized_velocity.z,
            self.facing_direction.x,
            self.facing_direction.y,
            self.facing_direction.z,
            self.normalized_yaw,
            self.is_dragging,
            self.normalized_timer,
        ]
    }
}

pub fn proprio(
    state: &WorldState,
    agent_id: BodyId,
    max_env_steps: u64,
) -> Result<ProprioVector, SensorError> {
    let agent = state.body(agent_id).ok_or(SensorError::UnknownAgent(agent_id))?;
    let bounds = state.arena_bounds;
    let extent = bounds.half * 2.0;
    let rel = agent.position - bounds.min();
    let terminal = state.physics.terminal_speed();
    Ok(ProprioVector {
        normalized_position: Vec3::new(
            (rel.x / extent.x).clamp(0.0, 1.0),
            (rel.y / extent.y).clamp(0.0, 1.0),
            (rel.z / extent.z).clamp(0.0, 1.0),
        ),
        normalized_velocity: (agent.velocity * (1.0 / terminal)).clamp_components(-1.0, 1.0),
        facing_direction: agent.facing(),
        normalized_yaw: agent.yaw.rem_euclid(TAU) / TAU,
        is_dragging: f64::from(state.dragged_prop(agent_id).is_some()),
        normalized_timer: (state.tick as f64 / max_env_steps as f64).clamp(0.0, 1.0),
    })
}

/// Which blocks make up an agent's policy observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsConfig {
    pub proprio: bool,
    pub raycast: Option<RaycastConfig>,
    pub spatial: Option<GridSensorConfig>,
    pub frontal: Option<GridSensorConfig>,
    /// Known-target scenarios append the target's relative position.
    pub target_relpos: bool,
}

impl ObsConfig {
    pub fn dim(&self) -> usize {
        let mut dim = 0;
        if self.proprio {
            dim += ProprioVector::DIM;
        }
        if let Some(rc) = &self.raycast {
            dim += rc.ray_count() * rc.values_per_ray();
        }
        for grid in [&self.spatial, &self.frontal].into_iter().flatten() {
            dim += grid.rows() * grid.cols() * grid.channels();
        }
        if self.target_relpos {
            dim += 3;
        }
        dim
    }

    /// Canonical description of the layout; hashed into checkpoints so
    /// incompatible observation spaces refuse to load.
    pub fn layout_descriptor(&self) -> String {
        let mut parts = vec!["obs-v1".to_string()];
        if self.proprio {
            parts.push("proprio12".to_string());
        }
        if let Some(rc) = &self.raycast {
            parts.push(format!("rays{}x{}", rc.ray_count(), rc.values_per_ray()));
        }
        if let Some(g) = &self.spatial {
            parts.push(format!("spatial{}x{}x{}", g.rows(), g.cols(), g.channels()));
        }
        if let Some(g) = &self.frontal {
            parts.push(format!("frontal{}x{}x{}", g.rows(), g.cols(), g.channels()));
        }
        if self.target_relpos {
            parts.push("target3".to_string());
        }
        parts.join("+")
    }
}

/// Assemble the full observation vector for one agent.
pub fn observe(
    state: &WorldState,
    agent_id: BodyId,
    config: &ObsConfig,
    max_env_steps: u64,
    target: Option<Vec3>,
) -> Result<Vec<f64>, SensorError> {
    let mut out = Vec::with_capacity(config.dim());
    if config.proprio {
        out.extend(proprio(state, agent_id, max_env_steps)?.to_vec());
    }
    if let Some(rc) = &config.raycast {
        out.extend(raycast_sweep(state, agent_id, rc)?);
    }
    if let Some(g) = &config.spatial {
        out.extend(grid_scan(state, agent_id, g)?.values);
    }
    if let Some(g) = &config.frontal {
        out.extend(grid_scan(state, agent_id, g)?.values);
    }
    if config.target_relpos {
        let agent = state.body(agent_id).ok_or(SensorError::UnknownAgent(agent_id))?;
        let rel = match target {
            Some(t) => (t - agent.position).rotate_yaw_inv(agent.yaw) * (1.0 / 20.0),
            None => Vec3::ZERO,
        };
        let rel = rel.clamp_components(-1.0, 1.0);
        out.extend([rel.x, rel.y, rel.z]);
    }
    debug_assert_eq!(out.len(), config.dim());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_arena, AgentCounts};
    use rand::RngExt;

    fn open_world_with(bodies: Vec<Body>) -> WorldState {
        let mut state = crate::world::build_open_arena(&Default::default(), 1, 5);
        state.bodies[0].position = Vec3::new(0.0, 4.0, 0.0);
        state.bodies[0].yaw = 0.0;
        state.bodies[0].velocity = Vec3::ZERO;
        // Strip the boundaries so scans see only what the test adds.
        state.bodies.retain(|b| b.kind.is_agent());
        state.arena_bounds = Aabb::new(Vec3::new(0.0, 4.0, 0.0), Vec3::splat(100.0));
        state.bodies.extend(bodies);
        state
    }

    fn prop_at(id: u32, pos: Vec3, half: Vec3) -> Body {
        Body {
            id: BodyId(id),
            kind: BodyKind::Prop,
            position: pos,
            velocity: Vec3::ZERO,
            yaw: 0.0,
            half_extents: half,
            gravity_scale: 0.0,
            locked: false,
            dragged_by: None,
        }
    }

    #[test]
    fn cell_center_is_corner_plus_half_size() {
        assert_eq!(cell_center(Vec3::ZERO, Vec3::splat(1.0)), Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(
            cell_center(Vec3::new(2.0, 0.0, -2.0), Vec3::splat(2.0)),
            Vec3::new(3.0, 1.0, -1.0)
        );
        assert_eq!(cell_center(Vec3::splat(-1.0), Vec3::splat(2.0)), Vec3::ZERO);
    }

    #[test]
    fn cell_size_at_distance_is_arc_length() {
        assert!((cell_size_at_distance(360.0, 1.0) - TAU).abs() < 1e-12);
        assert!((cell_size_at_distance(90.0, 2.0) - std::f64::consts::PI).abs() < 1e-12);
        // Independent evaluation: fraction of the circumference.
        let expected = 2.0 * std::f64::consts::PI * 10.0 * (4.0 / 360.0);
        assert!((cell_size_at_distance(4.0, 10.0) - expected).abs() < 1e-12);
        assert!((cell_size_at_distance(4.0, 10.0) - 0.6981).abs() < 1e-4);
    }

    #[test]
    fn occupancy_closed_cell_convention() {
        let cell = Aabb::new(Vec3::ZERO, Vec3::splat(0.5));
        let inside = prop_at(10, Vec3::ZERO, Vec3::splat(0.1));
        let touching = prop_at(11, Vec3::new(0.7, 0.0, 0.0), Vec3::splat(0.2));
        let outside = prop_at(12, Vec3::new(5.0, 0.0, 0.0), Vec3::splat(0.2));
        assert_eq!(cell_occupancy(&cell, &[inside.clone()]), 1);
        assert_eq!(cell_occupancy(&cell, &[touching.clone()]), 1, "face contact counts");
        assert_eq!(cell_occupancy(&cell, &[outside.clone()]), 0);
        assert_eq!(cell_occupancy(&cell, &[outside, touching, inside]), 1);
    }

    #[test]
    fn occupancy_matches_dense_point_sampling_oracle() {
        let mut rng = crate::rng::stream(0xACC2, "occ", &[]);
        let mut checked = 0;
        for _ in 0..50 {
            let objects: Vec<Body> = (0..4)
                .map(|k| {
                    prop_at(
                        100 + k,
                        Vec3::new(
                            rng.random_range(-3.0..3.0),
                            rng.random_range(-3.0..3.0),
                            rng.random_range(-3.0..3.0),
                        ),
                        Vec3::new(
                            rng.random_range(0.2..1.5),
                            rng.random_range(0.2..1.5),
                            rng.random_range(0.2..1.5),
                        ),
                    )
                })
                .collect();
            for _ in 0..20 {
                let cell = Aabb::new(
                    Vec3::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                    ),
                    Vec3::splat(rng.random_range(0.3..1.0)),
                );
                // Skip degenerate cells whose boundary grazes an object face.
                let degenerate = objects.iter().any(|b| {
                    let sep = b.position - cell.center;
                    let lim = b.half_extents + cell.half;
                    [(sep.x, lim.x), (sep.y, lim.y), (sep.z, lim.z)]
                        .iter()
                        .any(|(s, l)| (s.abs() - l).abs() < 1e-6)
                });
                if degenerate {
                    continue;
                }
                // 10^3 sample points per cell.
                let n = 10;
                let mut any = false;
                'outer: for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let p = cell.min()
                                + Vec3::new(
                                    (i as f64 + 0.5) / n as f64 * 2.0 * cell.half.x,
                                    (j as f64 + 0.5) / n as f64 * 2.0 * cell.half.y,
                                    (k as f64 + 0.5) / n as f64 * 2.0 * cell.half.z,
                                );
                            if objects.iter().any(|b| b.aabb().contains_point(p)) {
                                any = true;
                                break 'outer;
                            }
                        }
                    }
                }
                let got = cell_occupancy(&cell, &objects);
                // Interior sampling can miss thin boundary slivers but never
                // sees ghosts: sampled-occupied must imply occupied, and
                // reported-empty must imply no sample found anything.
                if any {
                    assert_eq!(got, 1, "sampling found occupancy the sensor missed");
                }
                if got == 0 {
                    assert!(!any);
                }
                checked += 1;
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn features_empty_cell_and_tag_aggregation() {
        let cell = Aabb::new(Vec3::ZERO, Vec3::splat(0.5));
        let channels = default_channels();
        let empty = cell_features(&cell, &[], &channels);
        assert_eq!(empty.len(), 8);
        assert_eq!(&empty[..7], &[0.0; 7]);
        assert_eq!(empty[7], 1.0);

        let one = prop_at(1, Vec3::new(0.2, 0.0, 0.0), Vec3::splat(0.2));
        let two = prop_at(2, Vec3::new(-0.2, 0.0, 0.0), Vec3::splat(0.2));
        let single = cell_features(&cell, &[one.clone()], &channels);
        // Tag channels aggregate by max: same-kind duplicates change nothing.
        let double = cell_features(&cell, &[one, two], &channels);
        assert_eq!(&single[..7], &double[..7]);
        let prop_tag = 1 + 2; // occupancy + hider + seeker precede prop
        assert_eq!(single[prop_tag], 1.0);
        assert_eq!(single[0], 1.0);
    }

    #[test]
    fn grid_resolution_from_angles() {
        let cfg = GridSensorConfig::spatial(10.0);
        assert_eq!((cfg.rows(), cfg.cols()), (18, 36));
        let cfg = GridSensorConfig::frontal(12.0);
        assert_eq!((cfg.rows(), cfg.cols()), (15, 14));
        assert!(GridSensorConfig::spatial(7.0).validate().is_err());
    }

    #[test]
    fn empty_arena_scan_is_all_clear() {
        let state = open_world_with(vec![]);
        let obs = grid_scan(&state, BodyId(0), &GridSensorConfig::spatial(10.0)).unwrap();
        for r in 0..obs.rows {
            for c in 0..obs.cols {
                let cell = obs.cell(r, c);
                assert_eq!(cell[0], 0.0);
                assert_eq!(cell[7], 1.0);
            }
        }
    }

    #[test]
    fn single_body_dead_ahead_lands_in_forward_cells_with_expected_distance() {
        // Analytic oracle: independent slab arithmetic decides which center
        // rays pierce the front face and at what distance. The box spans
        // several cells of the 10-degree grid.
        let half = Vec3::new(1.5, 1.5, 0.2);
        let d = 8.0;
        let mut body = prop_at(50, Vec3::new(0.0, 4.0, d), half);
        body.kind = BodyKind::Hider;
        let state = open_world_with(vec![body]);
        let cfg = GridSensorConfig::spatial(10.0);
        let obs = grid_scan(&state, BodyId(0), &cfg).unwrap();

        let face_z = d - half.z;
        let mut hit_cells = 0;
        for r in 0..obs.rows {
            for c in 0..obs.cols {
                let el = (90.0 - (r as f64 + 0.5) * 10.0).to_radians();
                let az = (-180.0 + (c as f64 + 0.5) * 10.0).to_radians();
                let dir = Vec3::new(az.sin() * el.cos(), el.sin(), az.cos() * el.cos());
                let expect_hit = dir.z > 0.0 && {
                    let t = face_z / dir.z;
                    let x = dir.x * t;
                    let y = dir.y * t;
                    x.abs() <= half.x && y.abs() <= half.y && t <= cfg.max_distance
                };
                let cell = obs.cell(r, c);
                assert_eq!(cell[0], f64::from(expect_hit), "cell ({r},{c}) occupancy mismatch");
                if expect_hit {
                    hit_cells += 1;
                    let t = face_z / dir.z;
                    let want = (t / cfg.max_distance).powf(cfg.normalization_exponent);
                    assert!((cell[7] - want).abs() < 1e-9, "distance channel mismatch");
                    assert_eq!(cell[1], 1.0, "hider tag set");
                }
            }
        }
        assert!(hit_cells >= 1, "the forward cell group must light up");
        // Magnitude sanity: the struck cells sit near (d/max)^p.
        let approx = (d / cfg.max_distance).powf(cfg.normalization_exponent);
        let center = obs.cell(obs.rows / 2 - 1, obs.cols / 2);
        assert!((center[7] - approx).abs() < 0.05);
    }

    #[test]
    fn grid_values_in_range_and_frame_invariant() {
        let mut rng = crate::rng::stream(0x51AB, "inv", &[]);
        for trial in 0..30u64 {
            let state = build_arena(
                1 + (trial % 4) as u8,
                1 + (trial % 4) as u32,
                AgentCounts { hiders: 1 + (trial % 2) as u32, seekers: 1 + (trial % 3) as u32 },
                trial,
            )
            .unwrap();
            let agents = state.agent_ids();
            let agent = agents[trial as usize % agents.len()];
            let cfg = GridSensorConfig::spatial(15.0);
            let obs = grid_scan(&state, agent, &cfg).unwrap();
            assert!(obs.values.iter().all(|v| (0.0..=1.0).contains(v)));

            // Translate everything by the same offset: identical scan.
            let offset = Vec3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-0.5..0.5),
                rng.random_range(-2.0..2.0),
            );
            let mut moved = state.clone();
            for b in &mut moved.bodies {
                b.position += offset;
            }
            moved.arena_bounds =
                Aabb::new(state.arena_bounds.center + offset, state.arena_bounds.half);
            let obs_t = grid_scan(&moved, agent, &cfg).unwrap();
            for (a, b) in obs.values.iter().zip(&obs_t.values) {
                assert!((a - b).abs() < 1e-9, "translation changed the scan");
            }

            // Rotate world and agent a quarter turn about the agent's axis;
            // boxes stay axis-aligned so the scan must be unchanged.
            let quarter = std::f64::consts::FRAC_PI_2;
            let pivot = state.body(agent).unwrap().position;
            let mut rotated = state.clone();
            for b in &mut rotated.bodies {
                b.position = pivot + (b.position - pivot).rotate_yaw(quarter);
                b.yaw += quarter;
                let h = b.half_extents;
                b.half_extents = Vec3::new(h.z, h.y, h.x);
            }
            rotated.arena_bounds = Aabb::new(
                pivot + (state.arena_bounds.center - pivot).rotate_yaw(quarter),
                {
                    let h = state.arena_bounds.half;
                    Vec3::new(h.z, h.y, h.x)
                },
            );
            let obs_r = grid_scan(&rotated, agent, &cfg).unwrap();
            for (ix, (a, b)) in obs.values.iter().zip(&obs_r.values).enumerate() {
                assert!(
                    (a - b).abs() < 1e-9,
                    "trial {trial}: quarter-turn changed value {ix}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn buffer_doubling_is_transparent() {
        let state = build_arena(4, 4, AgentCounts { hiders: 2, seekers: 4 }, 99).unwrap();
        let agent = state.agent_ids()[0];
        let mut tiny = GridSensorConfig::spatial(15.0);
        tiny.initial_collider_buffer = 1;
        let big = GridSensorConfig::spatial(15.0);
        assert_eq!(grid_scan(&state, agent, &tiny).unwrap(), grid_scan(&state, agent, &big).unwrap());
        let mut buf: CandidateBuffer<u32> = CandidateBuffer::new(2);
        for i in 0..9 {
            buf.push(i);
        }
        assert_eq!(buf.items().len(), 9);
        assert_eq!(buf.doublings, 3); // 2 -> 4 -> 8 -> 16
    }

    #[test]
    fn monotone_distance_normalization() {
        let cfg = GridSensorConfig::spatial(10.0);
        let mut last = 0.0;
        for d in [2.0, 5.0, 9.0, 14.0, 19.0] {
            // Grow the box with range so the same grid cell stays covered.
            let body = prop_at(60, Vec3::new(0.0, 4.0, d), Vec3::splat(0.05 + 0.12 * d));
            let state = open_world_with(vec![body]);
            let obs = grid_scan(&state, BodyId(0), &cfg).unwrap();
            let center = obs.cell(obs.rows / 2 - 1, obs.cols / 2);
            assert_eq!(center[0], 1.0);
            assert!(center[7] > last, "distance channel must grow with range");
            last = center[7];
        }
    }

    #[test]
    fn raycast_empty_arena_and_frontal_wall() {
        let state = open_world_with(vec![]);
        let cfg = RaycastConfig::default();
        let rays = raycast_sweep(&state, BodyId(0), &cfg).unwrap();
        assert_eq!(rays.len(), 16 * 7);
        for r in 0..16 {
            assert_eq!(rays[r * 7], 1.0, "empty arena ray {r}");
        }

        // Yaw the agent so ray 8 points along world +z, then put a slab with
        // its near face exactly 10 m out: contact at (10 - radius) / length.
        let angles = cfg.angles();
        let mut s = open_world_with(vec![]);
        s.bodies[0].yaw = -angles[8];
        let mut w = prop_at(71, Vec3::new(0.0, 4.0, 12.0), Vec3::new(8.0, 4.0, 2.0));
        w.kind = BodyKind::Wall;
        s.bodies.push(w);
        let rays = raycast_sweep(&s, BodyId(0), &cfg).unwrap();
        let want = (10.0 - cfg.sphere_radius) / cfg.ray_length;
        assert!((rays[8 * 7] - want).abs() < 1e-9, "got {} want {want}", rays[8 * 7]);
        let wall_tag = 1 + 4; // distance, then hider/seeker/prop/obstacle precede wall
        assert_eq!(rays[8 * 7 + wall_tag], 1.0);
    }

    #[test]
    fn raycast_symmetric_enclosure_gives_mirror_symmetric_reads() {
        let mut s = open_world_with(vec![]);
        for (ix, (x, z)) in
            [(9.0, 0.0), (-9.0, 0.0), (0.0, 9.0), (0.0, -9.0)].into_iter().enumerate()
        {
            let mut w = prop_at(
                80 + ix as u32,
                Vec3::new(x, 4.0, z),
                if x == 0.0 { Vec3::new(12.0, 4.0, 0.5) } else { Vec3::new(0.5, 4.0, 12.0) },
            );
            w.kind = BodyKind::Boundary;
            s.bodies.push(w);
        }
        let cfg = RaycastConfig::default();
        let rays = raycast_sweep(&s, BodyId(0), &cfg).unwrap();
        // Mirror pairs (k, 15-k) read the same distance by symmetry.
        for k in 0..8 {
            let a = rays[k * 7];
            let b = rays[(15 - k) * 7];
            assert!((a - b).abs() < 1e-9, "ray {k} vs {}", 15 - k);
        }
    }

    #[test]
    fn raycast_matches_marching_oracle_on_arena_scenes() {
        let mut tested = 0;
        for trial in 0..35u64 {
            let state = build_arena(4, 4, AgentCounts { hiders: 2, seekers: 2 }, trial).unwrap();
            let agents = state.agent_ids();
            let agent = agents[(trial % 4) as usize];
            let cfg = RaycastConfig::default();
            let rays = raycast_sweep(&state, agent, &cfg).unwrap();
            let origin = state.body(agent).unwrap().position;
            let yaw = state.body(agent).unwrap().yaw;
            for (k, az) in cfg.angles().into_iter().enumerate() {
                let dir = Vec3::new(az.sin(), 0.0, az.cos()).rotate_yaw(yaw);
                // Independent oracle: march the scene's surface distance and
                // bisect the first crossing.
                let sd = |t: f64| {
                    state
                        .bodies
                        .iter()
                        .filter(|b| b.id != agent)
                        .map(|b| b.aabb().distance_to_point(origin + dir * t))
                        .fold(f64::INFINITY, f64::min)
                        - cfg.sphere_radius
                };
                let mut hit = None;
                if sd(0.0) <= 0.0 {
                    hit = Some(0.0);
                } else {
                    let steps = 4000;
                    let dt = cfg.ray_length / steps as f64;
                    let mut prev = 0.0;
                    for i in 1..=steps {
                        let t = i as f64 * dt;
                        if sd(t) <= 0.0 {
                            let (mut lo, mut hi) = (prev, t);
                            for _ in 0..60 {
                                let mid = 0.5 * (lo + hi);
                                if sd(mid) <= 0.0 {
                                    hi = mid;
                                } else {
                                    lo = mid;
                                }
                            }
                            hit = Some(0.5 * (lo + hi));
                            break;
                        }
                        prev = t;
                    }
                }
                let got = rays[k * cfg.values_per_ray()];
                match hit {
                    Some(t) => {
                        assert!(
                            (got - t / cfg.ray_length).abs() < 1e-6,
                            "trial {trial} ray {k}: got {got} want {}",
                            t / cfg.ray_length
                        );
                        tested += 1;
                    }
                    None => assert_eq!(got, 1.0, "trial {trial} ray {k} should miss"),
                }
            }
        }
        assert!(tested >= 500, "need at least 500 verified rays, got {tested}");
    }

    #[test]
    fn proprio_corners_and_timer() {
        let mut state = build_arena(1, 1, AgentCounts { hiders: 1, seekers: 1 }, 0).unwrap();
        let hider = state.hider_ids()[0];
        let min = state.arena_bounds.min();
        state.body_mut(hider).unwrap().position = min + state.body(hider).unwrap().half_extents;
        let p = proprio(&state, hider, 3072).unwrap();
        assert!(p.normalized_position.norm() < 0.05);
        assert_eq!(p.normalized_timer, 0.0);
        assert!((p.facing_direction.norm() - 1.0).abs() < 1e-9);

        state.tick = 3072;
        let p = proprio(&state, hider, 3072).unwrap();
        assert_eq!(p.normalized_timer, 1.0);

        let prop_id = state.bodies_of_kind(BodyKind::Prop).next().unwrap().id;
        state.body_mut(prop_id).unwrap().dragged_by = Some(hider);
        let p = proprio(&state, hider, 3072).unwrap();
        assert_eq!(p.is_dragging, 1.0);
        assert_eq!(p.to_vec().len(), ProprioVector::DIM);
    }

    #[test]
    fn observation_assembly_matches_declared_dim() {
        let state = build_arena(2, 2, AgentCounts { hiders: 2, seekers: 2 }, 8).unwrap();
        let cfg = ObsConfig {
            proprio: true,
            raycast: Some(RaycastConfig::default()),
            spatial: Some(GridSensorConfig::spatial(20.0)),
            frontal: Some(GridSensorConfig::frontal(12.0)),
            target_relpos: false,
        };
        let obs = observe(&state, state.agent_ids()[0], &cfg, 3072, None).unwrap();
        assert_eq!(obs.len(), cfg.dim());
        assert!(obs.iter().all(|v| v.is_finite()));
        assert!(cfg.layout_descriptor().starts_with("obs-v1+proprio12+rays16x7"));
    }

    #[test]
    fn observation_ranges_hold_on_randomized_worlds() {
        let cfg = ObsConfig {
            proprio: true,
            raycast: Some(RaycastConfig::default()),
            spatial: Some(GridSensorConfig::spatial(30.0)),
            frontal: None,
            target_relpos: false,
        };
        let mut rng = crate::rng::stream(0xFACE, "ranges", &[]);
        let mut checked = 0usize;
        for seed in 0..80u64 {
            let mut state = build_arena(
                1 + (seed % 4) as u8,
                1 + (seed % 4) as u32,
                AgentCounts { hiders: 1 + (seed % 2) as u32, seekers: 1 + (seed % 4) as u32 },
                seed,
            )
            .unwrap();
            for _ in 0..5 {
                let actions: std::collections::BTreeMap<_, _> = state
                    .agent_ids()
                    .into_iter()
                    .map(|id| {
                        (
                            id,
                            crate::world::AgentAction {
                                thrust: Vec3::new(
                                    rng.random_range(-1.0..1.0),
                                    rng.random_range(-1.0..1.0),
                                    rng.random_range(-1.0..1.0),
                                ),
                                yaw_rate: rng.random_range(-1.0..1.0),
                                manipulate: crate::world::Manipulate::None,
                            },
                        )
                    })
                    .collect();
                crate::world::step_physics_mut(&mut state, &actions, 0.02).unwrap();
            }
            for agent in state.agent_ids() {
                let obs = observe(&state, agent, &cfg, 3072, None).unwrap();
                for (ix, v) in obs.iter().enumerate() {
                    assert!(
                        (-1.0..=1.0).contains(v),
                        "seed {seed} agent {agent:?} obs[{ix}] = {v} out of range"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 10_000);
    }
}
