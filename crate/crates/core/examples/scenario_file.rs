//! Loads a scenario file, runs it and writes the result files.
//!
//!     cargo run --release --example scenario_file -- examples/scenarios/crossing.toml out/crossing

use std::path::PathBuf;

use dronecast_sim::sim::{run, write_outputs, Scenario, Summary};

fn main() -> dronecast_sim::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/crossing.toml").to_string());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/scenario".to_string()));

    let sc = Scenario::load(&path)?;
    let report = run(&sc)?;
    write_outputs(&report, &out)?;
    print!("{}", Summary::from_report(&report).table());
    println!("results in {}", out.display());
    Ok(())
}
