//! The density requirement: a hundred drones per square kilometre, all
//! beaconing at 10 Hz on one channel.
//!
//!     cargo run --release --example density_stress -- 100 1.0 60

use std::time::Instant;

use dronecast_sim::sim::{density_stress, Summary};

fn main() -> dronecast_sim::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let n = args.first().copied().unwrap_or(100.0) as usize;
    let area = args.get(1).copied().unwrap_or(1.0);
    let duration = args.get(2).copied().unwrap_or(60.0);

    let t0 = Instant::now();
    let r = density_stress(n, area, duration, 0)?;
    let s = Summary::from_report(&r);
    println!("{n} drones over {area} km² for {duration} s, {:.1} s wall clock", t0.elapsed().as_secs_f64());
    println!("receptions: {}", s.totals.transmissions);
    println!("beacon update interval p50/p95: {:?} / {:?} s", s.beacon_age_p50, s.beacon_age_p95);
    println!("MAC collision rate: {:.4}", s.mac_collision_rate);
    println!("PER: {:.4}", s.per);
    Ok(())
}
