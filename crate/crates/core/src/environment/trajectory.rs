//! Piecewise-linear waypoint following.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_two_pi, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: Vec3,
    /// Ground speed on the leg that starts at this waypoint, m/s.
    #[serde(default)]
    pub speed_to_next: f64,
    /// Time spent hovering at this waypoint before leaving it, s.
    #[serde(default)]
    pub hold_duration: f64,
}

impl Waypoint {
    pub fn new(position: Vec3, speed_to_next: f64, hold_duration: f64) -> Self {
        Waypoint {
            position,
            speed_to_next,
            hold_duration,
        }
    }
}

/// Kinematic state of a drone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneState {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Yaw in `[0, 2π)`, measured counter-clockwise from east.
    pub heading: f64,
}

impl DroneState {
    pub fn hovering(position: Vec3, heading: f64) -> Self {
        DroneState {
            position,
            velocity: Vec3::zeros(),
            heading: wrap_two_pi(heading),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Leg {
    from: usize,
    to: usize,
    hold_start: f64,
    move_start: f64,
    end: f64,
    heading: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TrajectorySpec {
    waypoints: Vec<Waypoint>,
    #[serde(default, rename = "loop")]
    looped: bool,
    #[serde(default)]
    initial_heading: f64,
}

/// An ordered waypoint list flown leg by leg: hold at a waypoint, then fly
/// straight to the next one at the configured speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrajectorySpec", into = "TrajectorySpec")]
pub struct Trajectory {
    waypoints: Vec<Waypoint>,
    looped: bool,
    initial_heading: f64,
    legs: Vec<Leg>,
}

impl TryFrom<TrajectorySpec> for Trajectory {
    type Error = Error;

    fn try_from(s: TrajectorySpec) -> Result<Self> {
        Trajectory::with_heading(s.waypoints, s.looped, s.initial_heading)
    }
}

impl From<Trajectory> for TrajectorySpec {
    fn from(t: Trajectory) -> Self {
        TrajectorySpec {
            waypoints: t.waypoints,
            looped: t.looped,
            initial_heading: t.initial_heading,
        }
    }
}

impl Trajectory {
    pub fn new(waypoints: Vec<Waypoint>, looped: bool) -> Result<Self> {
        Self::with_heading(waypoints, looped, 0.0)
    }

    /// `initial_heading` is the yaw used while no leg has been flown yet,
    /// e.g. by a drone hovering at a single waypoint.
    pub fn with_heading(waypoints: Vec<Waypoint>, looped: bool, initial_heading: f64) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::invalid("trajectory.waypoints", "at least one waypoint required"));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if !w.position.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("trajectory.waypoints[{i}].position"), "must be finite"));
            }
            if !(w.speed_to_next >= 0.0) || !w.speed_to_next.is_finite() {
                return Err(Error::invalid(format!("trajectory.waypoints[{i}].speed_to_next"), "must be >= 0"));
            }
            if !(w.hold_duration >= 0.0) || !w.hold_duration.is_finite() {
                return Err(Error::invalid(format!("trajectory.waypoints[{i}].hold_duration"), "must be >= 0"));
            }
        }

        let n = waypoints.len();
        let n_legs = if n == 1 {
            0
        } else if looped {
            n
        } else {
            n - 1
        };
        let mut legs = Vec::with_capacity(n_legs);
        let mut t = 0.0;
        let mut heading = wrap_two_pi(initial_heading);
        for from in 0..n_legs {
            let to = (from + 1) % n;
            let a = &waypoints[from];
            let delta = waypoints[to].position - a.position;
            let dist = delta.norm();
            if dist == 0.0 && a.hold_duration == 0.0 {
                return Err(Error::invalid(
                    format!("trajectory.waypoints[{to}]"),
                    "duplicate consecutive position needs a positive hold_duration",
                ));
            }
            if dist > 0.0 && a.speed_to_next == 0.0 {
                return Err(Error::invalid(
                    format!("trajectory.waypoints[{from}].speed_to_next"),
                    "must be positive to reach the next waypoint",
                ));
            }
            if delta.x.hypot(delta.y) > 1e-9 {
                heading = wrap_two_pi(delta.y.atan2(delta.x));
            }
            let move_start = t + a.hold_duration;
            let end = if dist > 0.0 { move_start + dist / a.speed_to_next } else { move_start };
            legs.push(Leg {
                from,
                to,
                hold_start: t,
                move_start,
                end,
                heading,
            });
            t = end;
        }
        Ok(Trajectory {
            waypoints,
            looped,
            initial_heading: wrap_two_pi(initial_heading),
            legs,
        })
    }

    /// A stationary hover.
    pub fn hover(position: Vec3, heading: f64) -> Self {
        Self::with_heading(vec![Waypoint::new(position, 0.0, 0.0)], false, heading)
            .expect("single finite waypoint is always valid")
    }

    pub fn waypoints(&self) -> &[Waypoint] {
        &self.waypoints
    }

    pub fn is_loop(&self) -> bool {
        self.looped
    }

    pub fn initial_heading(&self) -> f64 {
        self.initial_heading
    }

    /// Time to fly all legs once (the period of a looped trajectory).
    pub fn duration(&self) -> f64 {
        self.legs.last().map_or(0.0, |l| l.end)
    }

    pub fn max_speed(&self) -> f64 {
        self.legs
            .iter()
            .filter(|l| l.end > l.move_start)
            .map(|l| self.waypoints[l.from].speed_to_next)
            .fold(0.0, f64::max)
    }

    /// Wraps or clamps `t` onto the leg timeline.
    fn leg_time(&self, t: f64) -> Option<(usize, f64)> {
        let total = self.duration();
        if self.legs.is_empty() || total <= 0.0 {
            return None;
        }
        let tt = if self.looped {
            t.rem_euclid(total)
        } else if t >= total {
            return None;
        } else {
            t.max(0.0)
        };
        let idx = self.legs.partition_point(|l| l.hold_start <= tt).saturating_sub(1);
        Some((idx, tt))
    }

    pub fn state_at(&self, t: f64) -> DroneState {
        match self.leg_time(t) {
            None => {
                if let (false, Some(last)) = (self.looped, self.legs.last()) {
                    if t >= self.duration() {
                        return DroneState::hovering(self.waypoints[last.to].position, last.heading);
                    }
                }
                DroneState::hovering(self.waypoints[0].position, self.initial_heading)
            }
            Some((idx, tt)) => {
                let leg = &self.legs[idx];
                let a = self.waypoints[leg.from].position;
                if tt < leg.move_start || leg.end <= leg.move_start {
                    return DroneState::hovering(a, leg.heading);
                }
                let b = self.waypoints[leg.to].position;
                let frac = ((tt - leg.move_start) / (leg.end - leg.move_start)).clamp(0.0, 1.0);
                let dir = (b - a).normalize();
                DroneState {
                    position: a + (b - a) * frac,
                    velocity: dir * self.waypoints[leg.from].speed_to_next,
                    heading: leg.heading,
                }
            }
        }
    }

    pub fn position_at(&self, t: f64) -> Vec3 {
        self.state_at(t).position
    }

    /// Positions of up to `k` waypoints still ahead at time `t`.
    pub fn upcoming_waypoints(&self, t: f64, k: usize) -> Vec<Vec3> {
        let Some((idx, _)) = self.leg_time(t) else {
            return Vec::new();
        };
        let n = self.waypoints.len();
        let first = self.legs[idx].to;
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let w = first + j;
            if !self.looped && w >= n {
                break;
            }
            out.push(self.waypoints[w % n].position);
        }
        out
    }

    /// Copy of this trajectory with independent Gaussian offsets on every
    /// waypoint coordinate.
    pub fn with_jitter<R: Rng + ?Sized>(&self, sigma: f64, rng: &mut R) -> Result<Trajectory> {
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid("waypoint_jitter_sigma", e.to_string()))?;
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| {
                let offset = Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng));
                Waypoint {
                    position: w.position + offset,
                    ..*w
                }
            })
            .collect();
        Trajectory::with_heading(waypoints, self.looped, self.initial_heading)
    }
}
