use crate::geometry::{Aabb, Vec3};

use super::buildings::Building;

/// Static urban geometry. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    buildings: Vec<Building>,
    boxes: Vec<Aabb>,
}

impl Scene {
    pub fn new(buildings: Vec<Building>) -> Self {
        let boxes = buildings.iter().map(Building::aabb).collect();
        Scene { buildings, boxes }
    }

    pub fn empty() -> Self {
        Scene::default()
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    pub fn max_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.height).fold(0.0, f64::max)
    }

    /// True iff the open segment `p1 → p2` passes through any building volume.
    pub fn segment_occluded(&self, p1: &Vec3, p2: &Vec3) -> bool {
        self.occluders(p1, p2).next().is_some()
    }

    /// Indices of the buildings whose interior the segment crosses.
    pub fn occluders<'a>(&'a self, p1: &'a Vec3, p2: &'a Vec3) -> impl Iterator<Item = usize> + 'a {
        let lo = p1.inf(p2);
        let hi = p1.sup(p2);
        self.boxes.iter().enumerate().filter_map(move |(i, b)| {
            let disjoint = (0..3).any(|k| hi[k] < b.min[k] || lo[k] > b.max[k]);
            if !disjoint && b.segment_crosses_interior(p1, p2) {
                Some(i)
            } else {
                None
            }
        })
    }
}
