use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dronecast_sim::sim::{density_scenario, mission_scenario, run, write_outputs, MissionCalibration, RadioPreset, Scenario, Summary};

#[derive(Parser)]
#[command(name = "dronecast-sim", version, about = "Drone-to-drone broadcast link simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Replicate one of the two-drone flight missions.
    Mission {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
        #[arg(long, value_enum, default_value_t = Radio::Experimental)]
        radio: Radio,
        #[command(flatten)]
        common: Common,
    },
    /// Many drones in disjoint cells of a square area.
    Density {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        area_km2: f64,
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Overrides the seed in a scenario file.
    #[arg(long)]
    seed: Option<u64>,
    /// Run this many consecutive seeds in parallel, one output subdirectory each.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Worker threads for a seed sweep; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[arg(long, env = "DRONECAST_SIM_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Radio {
    Experimental,
    Cots,
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let sc = Scenario::load(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    sc.validate().map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    Ok(sc)
}

fn dispatch(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Validate { scenario } => {
            load(&scenario)?;
            println!("OK");
            Ok(())
        }
        Cmd::Run { scenario, common } => {
            let base = load(&scenario)?;
            let first = common.seed.unwrap_or(base.seed);
            execute(&common, first, |seed| {
                let mut sc = base.clone();
                sc.seed = seed;
                Ok(sc)
            })
        }
        Cmd::Mission { id, radio, common } => {
            let preset = match radio {
                Radio::Experimental => RadioPreset::Experimental,
                Radio::Cots => RadioPreset::Cots,
            };
            let cal = MissionCalibration::default();
            execute(&common, common.seed.unwrap_or(0), |seed| mission_scenario(id, preset, seed, &cal))
        }
        Cmd::Density { n, area_km2, duration, common } => {
            execute(&common, common.seed.unwrap_or(0), |seed| density_scenario(n, area_km2, duration, seed))
        }
    }
}

fn execute<F>(common: &Common, first: u64, build: F) -> Result<(), Failure>
where
    F: Fn(u64) -> dronecast_sim::Result<Scenario> + Sync,
{
    let seeds: Vec<u64> = (0..common.seeds.max(1)).map(|k| first + k).collect();
    let scenarios = seeds
        .iter()
        .map(|&s| {
            let sc = build(s).map_err(|e| Failure::Invalid(e.to_string()))?;
            sc.validate().map_err(|e| Failure::Invalid(e.to_string()))?;
            Ok(sc)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let single = scenarios.len() == 1;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|sc| {
                let report = run(sc)?;
                let dir = if single { common.out.clone() } else { common.out.join(format!("seed_{}", sc.seed)) };
                write_outputs(&report, &dir)?;
                Ok((sc.seed, Summary::from_report(&report)))
            })
            .collect::<Vec<dronecast_sim::Result<_>>>()
    });
    for r in results {
        let (seed, summary) = r.map_err(|e| Failure::Runtime(e.to_string()))?;
        if !single {
            println!("seed {seed}");
        }
        print!("{}", summary.table());
    }
    Ok(())
}
