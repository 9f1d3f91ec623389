//! Small geometric helpers shared by the scene, channel and protocol layers.
//!
//! Everything is expressed in a local east-north-up frame in meters.

use std::f64::consts::TAU;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    // rem_euclid can return TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Azimuth (from +x, counter-clockwise) and elevation of a direction vector.
pub fn azimuth_elevation(dir: &Vec3) -> (f64, f64) {
    let horizontal = (dir.x * dir.x + dir.y * dir.y).sqrt();
    (dir.y.atan2(dir.x), dir.z.atan2(horizontal))
}

/// Axis-aligned box used for buildings and quick rejection tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn shrunk(&self, by: f64) -> Option<Aabb> {
        let min = self.min.add_scalar(by);
        let max = self.max.add_scalar(-by);
        if (0..3).all(|k| min[k] < max[k]) {
            Some(Aabb { min, max })
        } else {
            None
        }
    }

    pub fn contains_strict(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] > self.min[k] && p[k] < self.max[k])
    }

    /// Slab test. Returns the parameter interval `[t_enter, t_exit]` of the
    /// segment `p1 + t (p2 - p1)`, `t ∈ [0, 1]`, that lies inside the closed box.
    pub fn clip_segment(&self, p1: &Vec3, p2: &Vec3) -> Option<(f64, f64)> {
        let d = p2 - p1;
        let mut t0 = 0.0_f64;
        let mut t1 = 1.0_f64;
        for k in 0..3 {
            if d[k].abs() < 1e-300 {
                if p1[k] < self.min[k] || p1[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d[k];
            let mut ta = (self.min[k] - p1[k]) * inv;
            let mut tb = (self.max[k] - p1[k]) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// True iff the segment passes through the interior of the box over a
    /// non-degenerate stretch. Grazing contact with a face, edge or corner,
    /// and segments that merely start or end on the surface and leave it,
    /// do not count.
    pub fn segment_crosses_interior(&self, p1: &Vec3, p2: &Vec3) -> bool {
        let Some((t0, t1)) = self.clip_segment(p1, p2) else {
            return false;
        };
        if t1 - t0 <= 1e-12 {
            return false;
        }
        // The clipped chord touches the closed box; make sure its midpoint
        // is strictly inside, otherwise it runs along a face.
        let mid = p1 + (p2 - p1) * (0.5 * (t0 + t1));
        let tol = 1e-9;
        (0..3).all(|k| mid[k] > self.min[k] + tol && mid[k] < self.max[k] - tol)
    }
}
