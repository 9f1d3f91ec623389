//! Replays one of the two-drone flight missions.
//!
//!     cargo run --release --example mission_replication -- 2 experimental 7

use dronecast_sim::sim::presets::MissionCalibration;
use dronecast_sim::sim::{replicate_mission, RadioPreset, Summary};

fn main() -> dronecast_sim::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: u8 = args.first().map_or(1, |s| s.parse().expect("mission id 1..3"));
    let radio = match args.get(1).map(String::as_str) {
        Some("cots") => RadioPreset::Cots,
        _ => RadioPreset::Experimental,
    };
    let seed: u64 = args.get(2).map_or(0, |s| s.parse().expect("seed"));

    let r = replicate_mission(id, radio, seed)?;
    print!("{}", Summary::from_report(&r).table());

    // where on the hovering drone's airframe did the losses happen
    let mask = MissionCalibration::default().tx_mask;
    let lost: Vec<_> = r.packets.iter().filter(|p| !p.delivered).collect();
    let in_lobe = lost.iter().filter(|p| mask.in_lobe(p.tx_azimuth)).count();
    println!("losses inside a shadow lobe of the transmitter: {in_lobe}/{}", lost.len());

    let snr: Vec<f64> = r.packets.iter().map(|p| p.snr_db).collect();
    let lo = snr.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = snr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("SNR range: {lo:.1} .. {hi:.1} dB");
    Ok(())
}
