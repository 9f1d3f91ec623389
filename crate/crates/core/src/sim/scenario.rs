//! Scenario description: everything a run needs, loadable from TOML.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{AirframeShadowMask, ChannelConfig, ElementConfig};
use crate::environment::{Building, Extent2, P1410Params, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::protocol::{CaConfig, GeoOrigin, MacConfig, TrackingConfig};
use crate::radio::RadioProfile;
use crate::tesla::TeslaConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadioPreset {
    Experimental,
    Cots,
}

impl RadioPreset {
    pub fn profile(&self) -> RadioProfile {
        match self {
            RadioPreset::Experimental => RadioProfile::experimental(),
            RadioPreset::Cots => RadioProfile::cots(),
        }
    }
}

/// Either a named preset (`radio = "cots"`) or a full profile table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RadioSpec {
    Preset(RadioPreset),
    Profile(RadioProfile),
}

impl Default for RadioSpec {
    fn default() -> Self {
        RadioSpec::Preset(RadioPreset::Cots)
    }
}

impl RadioSpec {
    pub fn profile(&self) -> RadioProfile {
        match self {
            RadioSpec::Preset(p) => p.profile(),
            RadioSpec::Profile(p) => p.clone(),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DroneConfig {
    pub id: u32,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub radio: RadioSpec,
    #[serde(default)]
    pub mask: AirframeShadowMask,
    #[serde(default = "yes")]
    pub beacon_enabled: bool,
    /// Offset of the first beacon; drawn per drone when absent.
    #[serde(default)]
    pub beacon_phase_s: Option<f64>,
    /// Standard deviation of navigation error added to every waypoint, m.
    #[serde(default)]
    pub jitter_sigma: f64,
    /// Receiver clock offset seen by authentication, s.
    #[serde(default)]
    pub clock_skew_s: f64,
}

impl DroneConfig {
    pub fn new(id: u32, trajectory: Trajectory, radio: RadioProfile, mask: AirframeShadowMask) -> Self {
        DroneConfig {
            id,
            trajectory,
            radio: RadioSpec::Profile(radio),
            mask,
            beacon_enabled: true,
            beacon_phase_s: None,
            jitter_sigma: 0.0,
            clock_skew_s: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StationRole {
    Monitor,
    Gbas,
}

fn gbas_rate() -> f64 {
    2.0
}

fn gbas_payload() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStationConfig {
    pub id: u32,
    pub position: Vec3,
    pub role: StationRole,
    #[serde(default)]
    pub radio: RadioSpec,
    #[serde(default = "AirframeShadowMask::transparent")]
    pub mask: AirframeShadowMask,
    /// Correction messages per second (GBAS only).
    #[serde(default = "gbas_rate")]
    pub gbas_rate_hz: f64,
    #[serde(default = "gbas_payload")]
    pub gbas_payload_bytes: usize,
}

impl GroundStationConfig {
    pub fn new(id: u32, position: Vec3, role: StationRole) -> Self {
        GroundStationConfig {
            id,
            position,
            role,
            radio: RadioSpec::default(),
            mask: AirframeShadowMask::transparent(),
            gbas_rate_hz: gbas_rate(),
            gbas_payload_bytes: gbas_payload(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub buildings: Vec<Building>,
    /// Statistical layout generated over `area`, added to `buildings`.
    pub p1410: Option<P1410Params>,
    pub area: Option<Extent2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub ca: CaConfig,
    pub mac: MacConfig,
    pub tracking: TrackingConfig,
    pub track_snapshot_interval_s: f64,
    /// Each beacon leaves up to this long after its nominal time, drawn
    /// afresh per beacon, so two drones never stay locked in phase. s
    pub beacon_jitter_s: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            ca: CaConfig::default(),
            mac: MacConfig::default(),
            tracking: TrackingConfig::default(),
            track_snapshot_interval_s: 1.0,
            beacon_jitter_s: 1e-3,
        }
    }
}

/// Backup infrastructure link carrying beacons to monitoring stations when
/// the direct link fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultilinkConfig {
    pub enabled: bool,
    pub latency_s: f64,
    pub availability: f64,
}

impl Default for MultilinkConfig {
    fn default() -> Self {
        MultilinkConfig {
            enabled: false,
            latency_s: 0.15,
            availability: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub packet_log: bool,
    pub separation_history: bool,
    pub track_log: bool,
    pub auth_log: bool,
    /// Sampling interval of the separation history, s.
    pub history_interval_s: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            packet_log: true,
            separation_history: true,
            track_log: true,
            auth_log: true,
            history_interval_s: 0.1,
        }
    }
}

impl OutputConfig {
    pub fn quiet() -> Self {
        OutputConfig {
            packet_log: false,
            separation_history: false,
            track_log: false,
            auth_log: false,
            ..OutputConfig::default()
        }
    }
}

fn default_step() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub duration: f64,
    #[serde(default = "default_step")]
    pub time_step: f64,
    #[serde(default)]
    pub origin: GeoOrigin,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub scene: SceneConfig,
    /// Scatterers and reflectors placed on the scene; none when absent.
    #[serde(default)]
    pub elements: Option<ElementConfig>,
    #[serde(default)]
    pub drones: Vec<DroneConfig>,
    #[serde(default)]
    pub ground_stations: Vec<GroundStationConfig>,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub tesla: TeslaConfig,
    #[serde(default)]
    pub multilink: MultilinkConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Scenario {
    pub fn new(duration: f64, seed: u64) -> Self {
        Scenario {
            seed,
            duration,
            time_step: default_step(),
            origin: GeoOrigin::default(),
            channel: ChannelConfig::default(),
            scene: SceneConfig::default(),
            elements: None,
            drones: Vec::new(),
            ground_stations: Vec::new(),
            protocol: ProtocolConfig::default(),
            tesla: TeslaConfig::default(),
            multilink: MultilinkConfig::default(),
            output: OutputConfig::default(),
        }
    }

    /// Parses and validates a TOML scenario.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be a non-negative number of seconds"));
        }
        if !(self.time_step > 0.0) {
            return Err(Error::invalid("time_step", "must be positive"));
        }
        if !(self.channel.carrier_hz > 0.0) {
            return Err(Error::invalid("channel.carrier_hz", "must be positive"));
        }
        if !(self.channel.diffraction_clearance_m >= 0.0) {
            return Err(Error::invalid("channel.diffraction_clearance_m", "must be non-negative"));
        }
        for (k, b) in self.scene.buildings.iter().enumerate() {
            b.validate().map_err(|e| nest(e, &format!("scene.buildings[{k}]")))?;
        }
        match (&self.scene.p1410, &self.scene.area) {
            (Some(p), Some(_)) => p.validate().map_err(|e| nest(e, "scene.p1410"))?,
            (Some(_), None) => return Err(Error::invalid("scene.area", "required with scene.p1410")),
            _ => {}
        }
        if let Some(e) = &self.elements {
            e.validate().map_err(|err| nest(err, "elements"))?;
        }
        let mut ids = BTreeSet::new();
        for (k, d) in self.drones.iter().enumerate() {
            let at = format!("drones[{k}]");
            if !ids.insert(d.id) {
                return Err(Error::invalid(format!("{at}.id"), format!("duplicate id {}", d.id)));
            }
            let radio = d.radio.profile();
            radio.validate().map_err(|e| nest(e, &at))?;
            d.mask.validate().map_err(|e| nest(e, &at))?;
            if self.time_step > 1.0 / radio.beacon_rate + 1e-12 {
                return Err(Error::invalid("time_step", format!("exceeds the beacon interval of drone {}", d.id)));
            }
            if let Some(p) = d.beacon_phase_s {
                if !(p >= 0.0) {
                    return Err(Error::invalid(format!("{at}.beacon_phase_s"), "must be non-negative"));
                }
            }
            if !(d.jitter_sigma >= 0.0) {
                return Err(Error::invalid(format!("{at}.jitter_sigma"), "must be non-negative"));
            }
        }
        for (k, g) in self.ground_stations.iter().enumerate() {
            let at = format!("ground_stations[{k}]");
            if !ids.insert(g.id) {
                return Err(Error::invalid(format!("{at}.id"), format!("duplicate id {}", g.id)));
            }
            g.radio.profile().validate().map_err(|e| nest(e, &at))?;
            if g.role == StationRole::Gbas && !(g.gbas_rate_hz > 0.0) {
                return Err(Error::invalid(format!("{at}.gbas_rate_hz"), "must be positive"));
            }
            if g.gbas_payload_bytes > u16::MAX as usize {
                return Err(Error::invalid(format!("{at}.gbas_payload_bytes"), "too large"));
            }
        }
        let ca = &self.protocol.ca;
        if !(ca.threshold_m > 0.0 && ca.horizon_s > 0.0 && ca.dt_s > 0.0 && ca.hysteresis_m >= 0.0 && ca.dwell_s >= 0.0) {
            return Err(Error::invalid("protocol.ca", "threshold, horizon and dt must be positive; hysteresis and dwell non-negative"));
        }
        let tr = &self.protocol.tracking;
        if !(tr.stale_after_s > 0.0 && tr.lost_after_s >= tr.stale_after_s) {
            return Err(Error::invalid("protocol.tracking", "need 0 < stale_after_s <= lost_after_s"));
        }
        if !(self.protocol.track_snapshot_interval_s > 0.0) {
            return Err(Error::invalid("protocol.track_snapshot_interval_s", "must be positive"));
        }
        let jitter = self.protocol.beacon_jitter_s;
        if !(jitter >= 0.0) || self.drones.iter().any(|d| jitter * d.radio.profile().beacon_rate >= 1.0) {
            return Err(Error::invalid("protocol.beacon_jitter_s", "must be non-negative and shorter than the beacon period"));
        }
        let mac = &self.protocol.mac;
        if !(mac.slot_s > 0.0 && mac.aifs_s >= 0.0 && mac.phy_rate_bps > 0.0 && mac.preamble_s >= 0.0) {
            return Err(Error::invalid("protocol.mac", "timing values must be positive"));
        }
        self.tesla.validate()?;
        let ml = &self.multilink;
        if !((0.0..=1.0).contains(&ml.availability) && ml.latency_s >= 0.0) {
            return Err(Error::invalid("multilink", "availability must lie in [0, 1] and latency be non-negative"));
        }
        if !(self.output.history_interval_s > 0.0) {
            return Err(Error::invalid("output.history_interval_s", "must be positive"));
        }
        Ok(())
    }
}

fn nest(e: Error, prefix: &str) -> Error {
    match e {
        Error::Invalid { field, reason } => {
            let last = prefix.rsplit('.').next().unwrap_or(prefix);
            let field = match field.strip_prefix(last) {
                Some(rest) if rest.is_empty() || rest.starts_with('.') => format!("{prefix}{rest}"),
                _ => format!("{prefix}.{field}"),
            };
            Error::Invalid { field, reason }
        }
        other => other,
    }
}
