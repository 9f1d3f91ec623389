//! What a run produces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::protocol::ca::CaMode;
use crate::protocol::tracking::TrackSnapshot;
use crate::radio::LossReason;
use crate::tesla::{AuthCounts, AuthVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PacketKind {
    Beacon,
    Gbas,
}

/// One transmission as seen by one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    /// Reception time: end of the transmission.
    pub t: f64,
    pub tx_id: u32,
    pub rx_id: u32,
    pub kind: PacketKind,
    pub seq: u32,
    pub snr_db: f64,
    pub rx_power_dbm: f64,
    pub delivered: bool,
    pub reason: LossReason,
    pub distance: f64,
    /// Body-frame azimuth of the direct path at the transmitter, rad.
    pub tx_azimuth: f64,
    pub rx_azimuth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LinkStats {
    pub transmissions: u64,
    pub delivered: u64,
    pub weak_signal: u64,
    pub overdrive: u64,
    pub mac_collision: u64,
    pub malformed: u64,
}

impl LinkStats {
    pub fn record(&mut self, reason: LossReason) {
        self.transmissions += 1;
        match reason {
            LossReason::None => self.delivered += 1,
            LossReason::WeakSignal => self.weak_signal += 1,
            LossReason::Overdrive => self.overdrive += 1,
            LossReason::MacCollision => self.mac_collision += 1,
            LossReason::Malformed => self.malformed += 1,
        }
    }

    pub fn losses(&self) -> u64 {
        self.weak_signal + self.overdrive + self.mac_collision + self.malformed
    }

    /// Packet error rate; zero for a link that carried nothing.
    pub fn per(&self) -> f64 {
        if self.transmissions == 0 {
            0.0
        } else {
            self.losses() as f64 / self.transmissions as f64
        }
    }

    pub fn merge(&mut self, o: &LinkStats) {
        self.transmissions += o.transmissions;
        self.delivered += o.delivered;
        self.weak_signal += o.weak_signal;
        self.overdrive += o.overdrive;
        self.mac_collision += o.mac_collision;
        self.malformed += o.malformed;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaEvent {
    pub t: f64,
    pub drone_id: u32,
    pub from: CaMode,
    pub to: CaMode,
    pub partner: Option<u32>,
    pub d_min_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthEvent {
    pub t: f64,
    pub station_id: u32,
    pub rx_id: u32,
    pub seq: u32,
    pub verdict: AuthVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationSample {
    pub t: f64,
    pub min_distance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackAvailability {
    pub station_id: u32,
    pub drone_id: u32,
    /// Fraction of the run during which the track was LIVE.
    pub live_fraction: f64,
}

/// Histogram of the time between consecutive beacon deliveries on a link,
/// 1 ms bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeHistogram {
    pub bin_s: f64,
    pub counts: Vec<u64>,
    pub overflow: u64,
}

impl Default for AgeHistogram {
    fn default() -> Self {
        AgeHistogram {
            bin_s: 1e-3,
            counts: vec![0; 10_000],
            overflow: 0,
        }
    }
}

impl AgeHistogram {
    pub fn add(&mut self, age: f64) {
        let k = (age / self.bin_s).floor();
        if k >= 0.0 && (k as usize) < self.counts.len() {
            self.counts[k as usize] += 1;
        } else {
            self.overflow += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }

    /// Upper edge of the bin holding the q-quantile; `None` without samples
    /// and infinity when it falls in the overflow.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let target = ((q * n as f64).ceil() as u64).max(1);
        let mut acc = 0;
        for (k, &c) in self.counts.iter().enumerate() {
            acc += c;
            if acc >= target {
                return Some((k + 1) as f64 * self.bin_s);
            }
        }
        Some(f64::INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulationReport {
    pub seed: u64,
    pub duration: f64,
    pub time_step: f64,
    /// Frames put on the air.
    pub transmissions: u64,
    pub packets: Vec<PacketRecord>,
    pub links: BTreeMap<(u32, u32), LinkStats>,
    pub ca_events: Vec<CaEvent>,
    pub auth_events: Vec<AuthEvent>,
    pub auth_counts: AuthCounts,
    pub min_separation: Option<f64>,
    pub min_separation_t: Option<f64>,
    pub separation_history: Vec<SeparationSample>,
    pub track_snapshots: Vec<TrackSnapshot>,
    pub tracker_availability: Vec<TrackAvailability>,
    pub beacon_update_interval: AgeHistogram,
    pub backup_deliveries: u64,
}

impl SimulationReport {
    pub fn total(&self) -> LinkStats {
        let mut s = LinkStats::default();
        for l in self.links.values() {
            s.merge(l);
        }
        s
    }

    pub fn per(&self) -> f64 {
        self.total().per()
    }

    pub fn link(&self, tx: u32, rx: u32) -> LinkStats {
        self.links.get(&(tx, rx)).copied().unwrap_or_default()
    }

    /// Share of receptions lost to overlapping transmissions.
    pub fn mac_collision_rate(&self) -> f64 {
        let t = self.total();
        if t.transmissions == 0 {
            0.0
        } else {
            t.mac_collision as f64 / t.transmissions as f64
        }
    }

    pub fn beacon_age_p50(&self) -> Option<f64> {
        self.beacon_update_interval.quantile(0.5)
    }

    pub fn beacon_age_p95(&self) -> Option<f64> {
        self.beacon_update_interval.quantile(0.95)
    }

    pub fn holds(&self) -> usize {
        self.ca_events.iter().filter(|e| e.to == CaMode::Holding).count()
    }
}
