//! Scenario loading, the simulation loop, presets and result files.

pub mod output;
pub mod presets;
pub mod report;
pub mod run;
pub mod scenario;

pub use output::{write_outputs, Summary};
pub use presets::{density_scenario, density_stress, mission_scenario, replicate_mission, MissionCalibration};
pub use report::{LinkStats, PacketKind, PacketRecord, SimulationReport};
pub use run::run;
pub use scenario::{DroneConfig, GroundStationConfig, RadioPreset, RadioSpec, Scenario, StationRole};
