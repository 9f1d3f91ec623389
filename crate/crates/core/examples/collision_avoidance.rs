//! Two drones on crossing courses at the same altitude. Each predicts the
//! other's path from its beacons, and both stop when the predicted miss
//! distance drops below the threshold.

use dronecast_sim::channel::AirframeShadowMask;
use dronecast_sim::environment::{Trajectory, Waypoint};
use dronecast_sim::geometry::Vec3;
use dronecast_sim::protocol::ca::HoldPolicy;
use dronecast_sim::sim::{run, DroneConfig, RadioPreset, RadioSpec, Scenario};

fn leg(from: Vec3, to: Vec3, speed: f64) -> Trajectory {
    Trajectory::new(vec![Waypoint::new(from, speed, 0.0), Waypoint::new(to, 0.0, 0.0)], false).unwrap()
}

fn main() -> dronecast_sim::Result<()> {
    let policy = match std::env::args().nth(1).as_deref() {
        Some("lower-id-first") => HoldPolicy::LowerIdFirst,
        _ => HoldPolicy::HoldBoth,
    };
    let mut sc = Scenario::new(40.0, 5);
    sc.protocol.ca.policy = policy;
    let a = leg(Vec3::new(-100.0, 0.0, 30.0), Vec3::new(100.0, 0.0, 30.0), 8.0);
    let b = leg(Vec3::new(0.0, -100.0, 30.0), Vec3::new(0.0, 100.0, 30.0), 8.0);
    for (id, traj) in [(1, a), (2, b)] {
        let mut d = DroneConfig::new(id, traj, RadioPreset::Cots.profile(), AirframeShadowMask::transparent());
        d.radio = RadioSpec::Preset(RadioPreset::Cots);
        sc.drones.push(d);
    }

    let r = run(&sc)?;
    for e in &r.ca_events {
        println!(
            "t={:>6.2} drone {} {:>8} -> {:<8} partner {:?} predicted miss {:.1} m",
            e.t,
            e.drone_id,
            e.from.as_str(),
            e.to.as_str(),
            e.partner,
            e.d_min_pred
        );
    }
    println!(
        "closest approach {:.1} m at t={:.2} s (threshold {} m)",
        r.min_separation.unwrap(),
        r.min_separation_t.unwrap(),
        sc.protocol.ca.threshold_m
    );
    Ok(())
}
