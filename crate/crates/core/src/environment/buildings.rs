//! Buildings and statistical urban layouts.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Vec2, Vec3};
use crate::rng;

/// An axis-aligned, flat-roofed building standing on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub footprint_min: Vec2,
    pub footprint_max: Vec2,
    pub height: f64,
}

impl Building {
    pub fn new(footprint_min: Vec2, footprint_max: Vec2, height: f64) -> Result<Self> {
        let b = Building {
            footprint_min,
            footprint_max,
            height,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.footprint_min.x < self.footprint_max.x && self.footprint_min.y < self.footprint_max.y) {
            return Err(Error::invalid("building.footprint", "min must be below max on both axes"));
        }
        if !(self.height > 0.0) || !self.height.is_finite() {
            return Err(Error::invalid("building.height", "must be positive"));
        }
        Ok(())
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(
            Vec3::new(self.footprint_min.x, self.footprint_min.y, 0.0),
            Vec3::new(self.footprint_max.x, self.footprint_max.y, self.height),
        )
    }

    pub fn footprint_area(&self) -> f64 {
        let d = self.footprint_max - self.footprint_min;
        d.x * d.y
    }

    fn overlaps_footprint(&self, other: &Building) -> bool {
        self.footprint_min.x < other.footprint_max.x
            && other.footprint_min.x < self.footprint_max.x
            && self.footprint_min.y < other.footprint_max.y
            && other.footprint_min.y < self.footprint_max.y
    }
}

/// Statistical description of a built-up area: built fraction `alpha`,
/// building density `beta` (per km²) and Rayleigh height scale `gamma` (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P1410Params {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl P1410Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("p1410.alpha", "must lie in (0, 1)"));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid("p1410.beta", "must be non-negative"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::invalid("p1410.gamma", "must be positive"));
        }
        Ok(())
    }

    /// Side length of the square footprint in meters.
    pub fn footprint_side(&self) -> f64 {
        (self.alpha / (self.beta * 1e-6)).sqrt()
    }
}

/// A rectangular region on the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent2 {
    pub min: Vec2,
    pub max: Vec2,
}

impl Extent2 {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Extent2 { min, max }
    }

    pub fn square(side: f64) -> Self {
        Extent2::new(Vec2::zeros(), Vec2::new(side, side))
    }

    pub fn area(&self) -> f64 {
        let d = self.max - self.min;
        d.x * d.y
    }
}

const MAX_ATTEMPTS_PER_BUILDING: usize = 2000;

/// Draws a random, non-overlapping building layout.
///
/// The count is Poisson with mean `beta × area`, footprints are squares of
/// side `√(alpha/beta)` and heights are Rayleigh distributed with scale
/// `gamma`. Placement is sequential rejection sampling; when a building
/// cannot be placed after a bounded number of attempts the layout is
/// declared infeasible.
pub fn generate_buildings(params: &P1410Params, area: &Extent2, seed: u64) -> Result<Vec<Building>> {
    params.validate()?;
    let extent = area.max - area.min;
    if !(extent.x > 0.0 && extent.y > 0.0) {
        return Err(Error::invalid("area", "must have positive extent"));
    }
    if params.beta == 0.0 {
        return Ok(Vec::new());
    }
    let mut rng = rng::stream(seed, "environment/buildings");
    let mean = params.beta * area.area() * 1e-6;
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("p1410.beta", e.to_string()))?
        .sample(&mut rng) as usize;

    let side = params.footprint_side();
    if side >= extent.x || side >= extent.y {
        return Err(Error::InfeasibleDensity {
            placed: 0,
            requested: count,
        });
    }

    let mut buildings: Vec<Building> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS_PER_BUILDING {
            let x = area.min.x + rng.random::<f64>() * (extent.x - side);
            let y = area.min.y + rng.random::<f64>() * (extent.y - side);
            let candidate = Building {
                footprint_min: Vec2::new(x, y),
                footprint_max: Vec2::new(x + side, y + side),
                height: 1.0,
            };
            if buildings.iter().all(|b| !b.overlaps_footprint(&candidate)) {
                let u: f64 = rng.random();
                let height = params.gamma * (-2.0 * (1.0 - u).ln()).sqrt();
                buildings.push(Building {
                    height: height.max(1e-3),
                    ..candidate
                });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasibleDensity {
                placed: buildings.len(),
                requested: count,
            });
        }
    }
    Ok(buildings)
}

pub fn write_buildings_csv<W: Write>(out: W, buildings: &[Building]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xmin", "ymin", "xmax", "ymax", "height"])?;
    for b in buildings {
        w.write_record(&[
            b.footprint_min.x.to_string(),
            b.footprint_min.y.to_string(),
            b.footprint_max.x.to_string(),
            b.footprint_max.y.to_string(),
            b.height.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
