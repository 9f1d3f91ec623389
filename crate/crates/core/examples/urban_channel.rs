//! Channel between a drone flying down a street and a drone hovering above
//! the block, sampled every 10 m. Shows the LOS path disappearing behind
//! the building and the multipath that is left.

use dronecast_sim::channel::{channel_snapshot, narrowband_gain, place_channel_elements, AirframeShadowMask, ChannelConfig, ElementConfig, Terminal};
use dronecast_sim::environment::{Building, DroneState, Extent2, Scene};
use dronecast_sim::geometry::{Vec2, Vec3};

fn main() -> dronecast_sim::Result<()> {
    let scene = Scene::new(vec![
        Building::new(Vec2::new(-60.0, 10.0), Vec2::new(-10.0, 50.0), 35.0)?,
        Building::new(Vec2::new(10.0, 10.0), Vec2::new(60.0, 50.0), 25.0)?,
    ]);
    let cfg = ElementConfig {
        ground_extent: Some(Extent2::new(Vec2::new(-100.0, -60.0), Vec2::new(100.0, 120.0))),
        ..ElementConfig::default()
    };
    let elements = place_channel_elements(&scene, &cfg, 3)?;
    println!("{} scatterers, {} reflectors", elements.scatterers.len(), elements.reflectors.len());

    let ch = ChannelConfig::default();
    let hover = Terminal::new(DroneState::hovering(Vec3::new(35.0, 90.0, 20.0), 0.0), AirframeShadowMask::transparent());
    println!("{:>6} {:>5} {:>10} {:>10} {:>6}", "y [m]", "los", "los [dB]", "total [dB]", "paths");
    for k in 0..=14 {
        let y = -40.0 + 10.0 * k as f64;
        let flyer = Terminal::new(DroneState::hovering(Vec3::new(0.0, y, 15.0), 0.0), AirframeShadowMask::transparent());
        let snap = channel_snapshot(1, &flyer, 2, &hover, &scene, &elements, 0.0, &ch);
        let (_, total) = narrowband_gain(&snap);
        let los = snap.los();
        let kind = match los {
            None => "none",
            Some(c) if c.diffracted => "diff",
            Some(_) => "yes",
        };
        let los_db = los.map_or(f64::NEG_INFINITY, |c| 20.0 * c.amplitude.norm().log10());
        println!("{:>6.0} {:>5} {:>10.1} {:>10.1} {:>6}", y, kind, los_db, total, snap.components.len());
    }
    Ok(())
}
