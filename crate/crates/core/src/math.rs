//! Vector and box geometry shared by the simulator and the sensors.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// A 3D vector of f64 components (meters or meters/second).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        Vec3::new(self.x / n, self.y / n, self.z / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn clamp_components(self, lo: f64, hi: f64) -> Vec3 {
        Vec3::new(self.x.clamp(lo, hi), self.y.clamp(lo, hi), self.z.clamp(lo, hi))
    }

    pub fn min(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x.min(other.x), self.y.min(other.y), self.z.min(other.z))
    }

    pub fn max(self, other: Vec3) -> Vec3 {
        Vec3::new(self.x.max(other.x), self.y.max(other.y), self.z.max(other.z))
    }

    /// Rotate about the vertical (y) axis so that yaw 0 faces +z.
    pub fn rotate_yaw(self, yaw: f64) -> Vec3 {
        let (s, c) = yaw.sin_cos();
        Vec3::new(self.x * c + self.z * s, self.y, self.z * c - self.x * s)
    }

    /// Inverse of [`Vec3::rotate_yaw`].
    pub fn rotate_yaw_inv(self, yaw: f64) -> Vec3 {
        self.rotate_yaw(-yaw)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned box, stored as center and (strictly positive) half extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub center: Vec3,
    pub half: Vec3,
}

impl Aabb {
    pub fn new(center: Vec3, half: Vec3) -> Self {
        Aabb { center, half }
    }

    pub fn from_min_max(min: Vec3, max: Vec3) -> Self {
        Aabb {
            center: (min + max) * 0.5,
            half: (max - min) * 0.5,
        }
    }

    pub fn min(&self) -> Vec3 {
        self.center - self.half
    }

    pub fn max(&self) -> Vec3 {
        self.center + self.half
    }

    /// Closed-box overlap: shared faces and edges count as intersecting.
    pub fn intersects(&self, other: &Aabb) -> bool {
        let d = self.center - other.center;
        let r = self.half + other.half;
        d.x.abs() <= r.x && d.y.abs() <= r.y && d.z.abs() <= r.z
    }

    /// Closed-box point containment.
    pub fn contains_point(&self, p: Vec3) -> bool {
        let d = p - self.center;
        d.x.abs() <= self.half.x && d.y.abs() <= self.half.y && d.z.abs() <= self.half.z
    }

    /// True when `other` lies entirely inside `self` (boundaries allowed).
    pub fn contains_box(&self, other: &Aabb) -> bool {
        let d = other.center - self.center;
        d.x.abs() + other.half.x <= self.half.x
            && d.y.abs() + other.half.y <= self.half.y
            && d.z.abs() + other.half.z <= self.half.z
    }

    /// Volume of the intersection with `other` (0 when disjoint).
    pub fn intersection_volume(&self, other: &Aabb) -> f64 {
        let lo = self.min().max(other.min());
        let hi = self.max().min(other.max());
        let e = hi - lo;
        if e.x <= 0.0 || e.y <= 0.0 || e.z <= 0.0 {
            0.0
        } else {
            e.x * e.y * e.z
        }
    }

    pub fn volume(&self) -> f64 {
        8.0 * self.half.x * self.half.y * self.half.z
    }

    /// Penetration depth and axis index of the minimal-translation pushout,
    /// or `None` when the boxes do not strictly overlap. The returned vector
    /// moves `self` out of `other`.
    pub fn min_translation(&self, other: &Aabb) -> Option<Vec3> {
        let d = self.center - other.center;
        let px = self.half.x + other.half.x - d.x.abs();
        let py = self.half.y + other.half.y - d.y.abs();
        let pz = self.half.z + other.half.z - d.z.abs();
        if px <= 0.0 || py <= 0.0 || pz <= 0.0 {
            return None;
        }
        if px <= py && px <= pz {
            Some(Vec3::new(if d.x >= 0.0 { px } else { -px }, 0.0, 0.0))
        } else if py <= pz {
            Some(Vec3::new(0.0, if d.y >= 0.0 { py } else { -py }, 0.0))
        } else {
            Some(Vec3::new(0.0, 0.0, if d.z >= 0.0 { pz } else { -pz }))
        }
    }

    /// Distance from `p` to the closest point of the box (0 inside).
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let d = p - self.center;
        let qx = (d.x.abs() - self.half.x).max(0.0);
        let qy = (d.y.abs() - self.half.y).max(0.0);
        let qz = (d.z.abs() - self.half.z).max(0.0);
        (qx * qx + qy * qy + qz * qz).sqrt()
    }
}

/// Slab-method ray/box intersection. Returns the entry parameter `t >= 0`
/// along `dir` (unit length not required) or `None` on a miss. A ray that
/// starts inside the box reports `t = 0`.
pub fn ray_box(origin: Vec3, dir: Vec3, aabb: &Aabb) -> Option<f64> {
    let mut t_lo = 0.0f64;
    let mut t_hi = f64::INFINITY;
    let min = aabb.min();
    let max = aabb.max();
    for (o, d, lo, hi) in [
        (origin.x, dir.x, min.x, max.x),
        (origin.y, dir.y, min.y, max.y),
        (origin.z, dir.z, min.z, max.z),
    ] {
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
        } else {
            let inv = 1.0 / d;
            let (t0, t1) = if inv >= 0.0 {
                ((lo - o) * inv, (hi - o) * inv)
            } else {
                ((hi - o) * inv, (lo - o) * inv)
            };
            t_lo = t_lo.max(t0);
            t_hi = t_hi.min(t1);
            if t_lo > t_hi {
                return None;
            }
        }
    }
    Some(t_lo)
}

/// Sweep a sphere of radius `r` from `origin` along unit `dir` against a box.
/// Returns the center travel distance at first contact, or `None` on a miss.
///
/// Exact rounded-box intersection: the Minkowski sum of a box and a sphere is
/// the box inflated by `r` with edges replaced by cylinder quarters and
/// corners by sphere octants. The slab hit against the inflated box is kept
/// when it lands on a flat face; otherwise the ray is tested against the 12
/// edge cylinders and 8 corner spheres and the nearest valid root wins.
pub fn sphere_sweep_box(origin: Vec3, dir: Vec3, r: f64, aabb: &Aabb) -> Option<f64> {
    debug_assert!((dir.norm() - 1.0).abs() < 1e-9);
    let inflated = Aabb::new(aabb.center, aabb.half + Vec3::splat(r));
    let t_face = ray_box(origin, dir, &inflated)?;

    // A sphere already in contact reports zero travel.
    if aabb.distance_to_point(origin) <= r {
        return Some(0.0);
    }

    let p = origin + dir * t_face;
    let q = p - aabb.center;
    let inside_x = q.x.abs() <= aabb.half.x;
    let inside_y = q.y.abs() <= aabb.half.y;
    let inside_z = q.z.abs() <= aabb.half.z;
    // Flat-face contact: the hit point projects onto the original box in the
    // two axes orthogonal to the pierced slab.
    let on_face = (inside_y && inside_z && q.x.abs() >= aabb.half.x)
        || (inside_x && inside_z && q.y.abs() >= aabb.half.y)
        || (inside_x && inside_y && q.z.abs() >= aabb.half.z);
    if on_face {
        return Some(t_face);
    }

    let mut best: Option<f64> = None;
    let mut consider = |t: f64| {
        if t >= 0.0 && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };

    let hx = aabb.half.x;
    let hy = aabb.half.y;
    let hz = aabb.half.z;

    // Corner spheres.
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                let c = aabb.center + Vec3::new(sx * hx, sy * hy, sz * hz);
                if let Some(t) = ray_sphere(origin, dir, c, r) {
                    consider(t);
                }
            }
        }
    }

    // Edge cylinders, one set per axis; the hit must project onto the edge
    // segment or it belongs to a corner sphere instead.
    for axis in 0..3 {
        let (ha, signs) = match axis {
            0 => (hx, [(hy, hz); 1]),
            1 => (hy, [(hx, hz); 1]),
            _ => (hz, [(hx, hy); 1]),
        };
        let (hu, hv) = signs[0];
        for su in [-1.0, 1.0] {
            for sv in [-1.0, 1.0] {
                let (o2, d2, c2) = match axis {
                    0 => (
                        (origin.y, origin.z),
                        (dir.y, dir.z),
                        (aabb.center.y + su * hu, aabb.center.z + sv * hv),
                    ),
                    1 => (
                        (origin.x, origin.z),
                        (dir.x, dir.z),
                        (aabb.center.x + su * hu, aabb.center.z + sv * hv),
                    ),
                    _ => (
                        (origin.x, origin.y),
                        (dir.x, dir.y),
                        (aabb.center.x + su * hu, aabb.center.y + sv * hv),
                    ),
                };
                if let Some(t) = ray_circle_2d(o2, d2, c2, r) {
                    let along = match axis {
                        0 => origin.x + dir.x * t - aabb.center.x,
                        1 => origin.y + dir.y * t - aabb.center.y,
                        _ => origin.z + dir.z * t - aabb.center.z,
                    };
                    if along.abs() <= ha {
                        consider(t);
                    }
                }
            }
        }
    }

    best
}

fn ray_sphere(origin: Vec3, dir: Vec3, center: Vec3, r: f64) -> Option<f64> {
    let m = origin - center;
    let b = m.dot(dir);
    let c = m.dot(m) - r * r;
    if c > 0.0 && b > 0.0 {
        return None;
    }
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    Some(t.max(0.0))
}

/// Ray vs circle in the 2D plane of the two components orthogonal to a box
/// edge; used for the edge-cylinder cases of the sphere sweep.
fn ray_circle_2d(o: (f64, f64), d: (f64, f64), c: (f64, f64), r: f64) -> Option<f64> {
    let mx = o.0 - c.0;
    let my = o.1 - c.1;
    let a = d.0 * d.0 + d.1 * d.1;
    if a == 0.0 {
        return None;
    }
    let b = mx * d.0 + my * d.1;
    let cc = mx * mx + my * my - r * r;
    if cc > 0.0 && b > 0.0 {
        return None;
    }
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return None;
    }
    let t = (-b - disc.sqrt()) / a;
    Some(t.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mtv_pushes_out_along_least_axis() {
        let a = Aabb::new(Vec3::new(0.9, 0.0, 0.0), Vec3::splat(0.5));
        let b = Aabb::new(Vec3::ZERO, Vec3::splat(0.5));
        let mtv = a.min_translation(&b).unwrap();
        assert!((mtv.x - 0.1).abs() < 1e-12);
        assert_eq!(mtv.y, 0.0);
        assert_eq!(mtv.z, 0.0);
    }

    #[test]
    fn touching_boxes_have_no_mtv_but_do_intersect() {
        let a = Aabb::new(Vec3::new(1.0, 0.0, 0.0), Vec3::splat(0.5));
        let b = Aabb::new(Vec3::ZERO, Vec3::splat(0.5));
        assert!(a.min_translation(&b).is_none());
        assert!(a.intersects(&b));
    }

    #[test]
    fn ray_box_frontal_face() {
        let aabb = Aabb::new(Vec3::new(0.0, 0.0, 10.0), Vec3::splat(1.0));
        let t = ray_box(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), &aabb).unwrap();
        assert!((t - 9.0).abs() < 1e-12);
        assert!(ray_box(Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0), &aabb).is_none());
    }

    #[test]
    fn sphere_sweep_face_matches_inflated_slab() {
        let aabb = Aabb::new(Vec3::new(0.0, 0.0, 10.0), Vec3::new(2.0, 2.0, 0.5));
        let t = sphere_sweep_box(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), 0.3, &aabb).unwrap();
        assert!((t - (9.5 - 0.3)).abs() < 1e-12);
    }

    // Independent oracle: bisection on the exact box signed distance along
    // the ray, after a fine bracketing scan.
    fn sweep_oracle(origin: Vec3, dir: Vec3, r: f64, aabb: &Aabb) -> Option<f64> {
        let sd = |t: f64| aabb.distance_to_point(origin + dir * t) - r;
        if sd(0.0) <= 0.0 {
            return Some(0.0);
        }
        let t_max = 60.0;
        let steps = 60_000;
        let dt = t_max / steps as f64;
        let mut prev = 0.0;
        for i in 1..=steps {
            let t = i as f64 * dt;
            if sd(t) <= 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if sd(mid) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(0.5 * (lo + hi));
            }
            prev = t;
        }
        None
    }

    #[test]
    fn sphere_sweep_matches_bisection_oracle_on_random_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xB0C5);
        let mut hits = 0;
        for _ in 0..500 {
            let aabb = Aabb::new(
                Vec3::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(4.0..12.0),
                ),
                Vec3::new(
                    rng.random_range(0.2..3.0),
                    rng.random_range(0.2..3.0),
                    rng.random_range(0.2..3.0),
                ),
            );
            let dir = Vec3::new(
                rng.random_range(-0.4..0.4),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.3..1.0),
            )
            .normalized();
            let origin = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let r = rng.random_range(0.05..0.6);
            let got = sphere_sweep_box(origin, dir, r, &aabb);
            let want = sweep_oracle(origin, dir, r, &aabb);
            match (got, want) {
                (None, None) => {}
                (Some(a), Some(b)) => {
                    assert!((a - b).abs() < 1e-6, "sweep {a} vs oracle {b}");
                    hits += 1;
                }
                (a, b) => panic!("hit disagreement: sweep {a:?} oracle {b:?}"),
            }
        }
        assert!(hits > 100, "oracle comparison needs real hits, got {hits}");
    }

    #[test]
    fn yaw_rotation_roundtrip() {
        let v = Vec3::new(0.3, -1.2, 2.0);
        let w = v.rotate_yaw(1.1).rotate_yaw_inv(1.1);
        assert!((v - w).norm() < 1e-12);
        // yaw 0 faces +z
        let f = Vec3::new(0.0, 0.0, 1.0).rotate_yaw(std::f64::consts::FRAC_PI_2);
        assert!((f.x - 1.0).abs() < 1e-12 && f.z.abs() < 1e-12);
    }
}
