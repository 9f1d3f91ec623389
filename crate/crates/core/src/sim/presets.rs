//! Ready-made scenarios: the two-drone flight missions and the density
//! requirement scenario.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::AirframeShadowMask;
use crate::environment::{make_mission_preset, MissionConfig, Trajectory, Waypoint};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rng::stream;

use super::report::SimulationReport;
use super::run::run;
use super::scenario::{DroneConfig, OutputConfig, RadioPreset, RadioSpec, Scenario};

pub const MISSION_TX_ID: u32 = 1;
pub const MISSION_RX_ID: u32 = 2;

/// Mission geometry plus the airframe shadowing of the two hexacopters.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionCalibration {
    pub mission: MissionConfig,
    pub tx_mask: AirframeShadowMask,
    pub rx_mask: AirframeShadowMask,
}

impl Default for MissionCalibration {
    fn default() -> Self {
        MissionCalibration {
            mission: MissionConfig::default(),
            tx_mask: AirframeShadowMask::hexacopter(24.3),
            // The flying drone shadows its own antenna less than the hovering one.
            rx_mask: AirframeShadowMask::hexacopter(12.0),
        }
    }
}

/// Transmitter (id 1) and receiver (id 2) flying one of the missions.
/// Only the transmitter beacons.
pub fn mission_scenario(id: u8, radio: RadioPreset, seed: u64, cal: &MissionCalibration) -> Result<Scenario> {
    let preset = make_mission_preset(id, &cal.mission)?;
    let mut sc = Scenario::new(preset.duration, seed);
    sc.protocol.ca.enabled = false;
    let mut tx = DroneConfig::new(MISSION_TX_ID, preset.tx, radio.profile(), cal.tx_mask);
    tx.radio = RadioSpec::Preset(radio);
    let mut rx = DroneConfig::new(MISSION_RX_ID, preset.rx, radio.profile(), cal.rx_mask);
    rx.radio = RadioSpec::Preset(radio);
    rx.beacon_enabled = false;
    sc.drones = vec![tx, rx];
    Ok(sc)
}

pub fn replicate_mission(id: u8, radio: RadioPreset, seed: u64) -> Result<SimulationReport> {
    run(&mission_scenario(id, radio, seed, &MissionCalibration::default())?)
}

/// `n` drones flying lawnmower patterns in disjoint cells of a square area,
/// so no two tracks ever come closer than about 30 % of a cell.
pub fn density_scenario(n: usize, area_km2: f64, duration: f64, seed: u64) -> Result<Scenario> {
    if n < 1 {
        return Err(Error::invalid("n", "need at least one drone"));
    }
    if !(area_km2 > 0.0) {
        return Err(Error::invalid("area_km2", "must be positive"));
    }
    let side = area_km2.sqrt() * 1000.0;
    let per_row = (n as f64).sqrt().ceil() as usize;
    let cell = side / per_row as f64;
    let margin = 0.15 * cell;
    let mut sc = Scenario::new(duration, seed);
    sc.output = OutputConfig::quiet();
    let mut cells: Vec<usize> = (0..per_row * per_row).collect();
    cells.shuffle(&mut stream(seed, "density/cells"));
    for (k, &c) in cells.iter().take(n).enumerate() {
        let id = k as u32 + 1;
        let mut rng = stream(seed, &format!("density/drone/{id}"));
        let (ci, cj) = ((c % per_row) as f64, (c / per_row) as f64);
        let x0 = -side / 2.0 + ci * cell + margin;
        let y0 = -side / 2.0 + cj * cell + margin;
        let span = cell - 2.0 * margin;
        let alt = rng.random_range(30.0..120.0);
        let speed = rng.random_range(5.0..15.0);
        let lanes = 3;
        let mut pts = Vec::new();
        for l in 0..lanes {
            let y = y0 + span * l as f64 / (lanes - 1) as f64;
            let (a, b) = if l % 2 == 0 { (x0, x0 + span) } else { (x0 + span, x0) };
            pts.push(Vec3::new(a, y, alt));
            pts.push(Vec3::new(b, y, alt));
        }
        let start = rng.random_range(0..pts.len());
        pts.rotate_left(start);
        let traj = Trajectory::new(pts.into_iter().map(|p| Waypoint::new(p, speed, 0.0)).collect(), true)?;
        let mut d = DroneConfig::new(id, traj, RadioPreset::Cots.profile(), AirframeShadowMask::transparent());
        d.radio = RadioSpec::Preset(RadioPreset::Cots);
        sc.drones.push(d);
    }
    Ok(sc)
}

pub fn density_stress(n: usize, area_km2: f64, duration: f64, seed: u64) -> Result<SimulationReport> {
    run(&density_scenario(n, area_km2, duration, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mission_scenarios_validate() {
        for id in 1..=3 {
            for radio in [RadioPreset::Experimental, RadioPreset::Cots] {
                mission_scenario(id, radio, 0, &MissionCalibration::default()).unwrap().validate().unwrap();
            }
        }
    }

    #[test]
    fn density_tracks_keep_apart() {
        let sc = density_scenario(16, 0.16, 10.0, 3).unwrap();
        assert_eq!(sc.drones.len(), 16);
        // cell 100 m, margin 15 m
        for t in [0.0, 3.3, 7.1] {
            for a in 0..sc.drones.len() {
                for b in a + 1..sc.drones.len() {
                    let pa = sc.drones[a].trajectory.position_at(t);
                    let pb = sc.drones[b].trajectory.position_at(t);
                    assert!((pa.xy() - pb.xy()).norm() >= 30.0 - 1e-9);
                }
            }
        }
    }
}
