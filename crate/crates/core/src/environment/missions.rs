//! Flight mission presets for the two-drone measurement flights.
//!
//! Mission 1: the transmitter hovers at 15 m; the receiver flies 30 m
//! radius circles around it at several heights.
//! Mission 2: same receiver circles, transmitter hovering outside them.
//! Mission 3: both drones at 20 m on parallel tracks, repeatedly closing to
//! about 10 m and separating to about 60 m.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::trajectory::{Trajectory, Waypoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MissionConfig {
    pub circle_radius: f64,
    /// One lap per entry, flown in order.
    pub circle_heights: Vec<f64>,
    pub circle_waypoints: usize,
    pub circle_speed: f64,
    pub climb_speed: f64,
    pub tx_height: f64,
    /// Yaw of the hovering transmitter in missions 1 and 2.
    pub tx_heading: f64,
    /// Horizontal distance of the mission 2 hover point from the circle center.
    pub m2_tx_offset: f64,
    pub m3_height: f64,
    /// Cross-track distance between the two mission 3 tracks.
    pub m3_lateral_offset: f64,
    /// Along-track gap at closest and farthest approach.
    pub m3_min_gap: f64,
    pub m3_max_gap: f64,
    pub m3_speed: f64,
    pub m3_cycles: usize,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            circle_radius: 30.0,
            circle_heights: vec![10.0, 15.0, 20.0, 15.0],
            circle_waypoints: 24,
            circle_speed: 4.0,
            climb_speed: 2.0,
            tx_height: 15.0,
            tx_heading: 5f64.to_radians(),
            m2_tx_offset: 45.0,
            m3_height: 20.0,
            m3_lateral_offset: 8.5,
            m3_min_gap: 6.2,
            m3_max_gap: 63.0,
            m3_speed: 4.0,
            m3_cycles: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MissionPreset {
    pub id: u8,
    pub tx: Trajectory,
    pub rx: Trajectory,
    /// Time needed to fly the whole mission once.
    pub duration: f64,
}

/// A closed circle approximated by `n` waypoints, flown counter-clockwise.
pub fn circle_trajectory(center: Vec3, radius: f64, n: usize, speed: f64) -> Result<Trajectory> {
    if n < 3 {
        return Err(Error::invalid("circle_waypoints", "need at least 3"));
    }
    let wps = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            Waypoint::new(center + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0), speed, 0.0)
        })
        .collect();
    Trajectory::new(wps, true)
}

fn receiver_laps(cfg: &MissionConfig) -> Result<Trajectory> {
    if cfg.circle_waypoints < 3 {
        return Err(Error::invalid("mission.circle_waypoints", "need at least 3"));
    }
    if cfg.circle_heights.is_empty() {
        return Err(Error::invalid("mission.circle_heights", "need at least one lap"));
    }
    let n = cfg.circle_waypoints;
    let mut wps = Vec::with_capacity((n + 1) * cfg.circle_heights.len());
    for &h in &cfg.circle_heights {
        for k in 0..n {
            let a = TAU * k as f64 / n as f64;
            wps.push(Waypoint::new(
                Vec3::new(cfg.circle_radius * a.cos(), cfg.circle_radius * a.sin(), h),
                cfg.circle_speed,
                0.0,
            ));
        }
        // close the lap; the next leg is the vertical transition
        wps.push(Waypoint::new(Vec3::new(cfg.circle_radius, 0.0, h), cfg.climb_speed, 0.0));
    }
    // drop vertical legs of zero length between equal heights
    wps.dedup_by(|b, a| {
        if a.position == b.position {
            a.speed_to_next = b.speed_to_next;
            true
        } else {
            false
        }
    });
    // the first leg leaves tangentially, so start the yaw along +y
    Trajectory::with_heading(wps, false, PI / 2.0)
}

pub fn make_mission_preset(id: u8, cfg: &MissionConfig) -> Result<MissionPreset> {
    let (tx, rx) = match id {
        1 => (
            Trajectory::hover(Vec3::new(0.0, 0.0, cfg.tx_height), cfg.tx_heading),
            receiver_laps(cfg)?,
        ),
        2 => (
            Trajectory::hover(Vec3::new(cfg.m2_tx_offset, 0.0, cfg.tx_height), cfg.tx_heading),
            receiver_laps(cfg)?,
        ),
        3 => {
            let half = cfg.m3_lateral_offset / 2.0;
            let (near, far) = (cfg.m3_min_gap / 2.0, cfg.m3_max_gap / 2.0);
            if !(far > near && near >= 0.0) {
                return Err(Error::invalid("mission.m3_max_gap", "must exceed m3_min_gap"));
            }
            let h = cfg.m3_height;
            let v = cfg.m3_speed;
            let tx = Trajectory::new(
                vec![
                    Waypoint::new(Vec3::new(-far, half, h), v, 0.0),
                    Waypoint::new(Vec3::new(-near, half, h), v, 0.0),
                ],
                true,
            )?;
            let rx = Trajectory::new(
                vec![
                    Waypoint::new(Vec3::new(far, -half, h), v, 0.0),
                    Waypoint::new(Vec3::new(near, -half, h), v, 0.0),
                ],
                true,
            )?;
            let duration = tx.duration() * cfg.m3_cycles as f64;
            return Ok(MissionPreset { id, tx, rx, duration });
        }
        _ => return Err(Error::invalid("mission.id", format!("unknown mission {id}, expected 1, 2 or 3"))),
    };
    let duration = rx.duration();
    Ok(MissionPreset { id, tx, rx, duration })
}
