//! Encodes a position beacon, prints the frame and decodes it again.

use dronecast_sim::geometry::Vec3;
use dronecast_sim::protocol::beacon::{BeaconMessage, BeaconStatus, GeoOrigin};

fn main() {
    let origin = GeoOrigin::default();
    let route = [Vec3::new(50.0, 0.0, 20.0), Vec3::new(50.0, 50.0, 25.0), Vec3::new(0.0, 50.0, 20.0)];
    let msg = BeaconMessage::from_local(
        7,
        1042,
        104.2,
        &Vec3::new(12.34, -5.6, 20.0),
        &Vec3::new(4.0, 0.5, 0.0),
        BeaconStatus::Cruise,
        &route,
        &origin,
    );
    let bytes = msg.encode();
    println!("{} bytes", bytes.len());
    for row in bytes.chunks(12) {
        let hex: Vec<String> = row.iter().map(|b| format!("{b:02x}")).collect();
        println!("  {}", hex.join(" "));
    }

    let back = BeaconMessage::decode(&bytes).expect("valid frame");
    assert_eq!(back, msg);
    let p = origin.to_enu(&back.position);
    println!("drone {} seq {} at t={:.3}s", back.drone_id, back.seq, back.time());
    println!("position [{:.3}, {:.3}, {:.3}] m, velocity {:?} m/s", p.x, p.y, p.z, back.velocity_enu().as_slice());

    let mut broken = bytes.clone();
    broken.truncate(bytes.len() - 3);
    println!("truncated frame: {:?}", BeaconMessage::decode(&broken).unwrap_err());
}
