//! Urban scene, drone kinematics and mission geometry.

mod buildings;
mod missions;
mod scene;
mod trajectory;

pub use buildings::{generate_buildings, write_buildings_csv, Building, Extent2, P1410Params};
pub use missions::{circle_trajectory, make_mission_preset, MissionConfig, MissionPreset};
pub use scene::Scene;
pub use trajectory::{DroneState, Trajectory, Waypoint};

/// Kinematic state of `traj` at time `t`.
pub fn trajectory_state(traj: &Trajectory, t: f64) -> DroneState {
    traj.state_at(t)
}

/// True iff the open segment between two points crosses a building.
pub fn segment_occluded(p1: &crate::geometry::Vec3, p2: &crate::geometry::Vec3, scene: &Scene) -> bool {
    scene.segment_occluded(p1, p2)
}
