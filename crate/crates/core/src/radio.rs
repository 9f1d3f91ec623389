//! Link budget and packet reception.
//!
//! Reception succeeds inside an SNR window. Below it the signal is too weak;
//! above it a receiver without automatic gain control is overdriven. Both
//! edges are logistic in dB.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioProfile {
    /// Output power of the radio before the external amplifier, dBm.
    pub tx_power: f64,
    pub amp_gain: f64,
    /// Cable, connector and antenna-mismatch losses lumped together, dB.
    pub system_loss: f64,
    pub noise_figure: f64,
    /// Hz
    pub bandwidth: f64,
    pub snr_decode_min: f64,
    pub snr_overdrive_start: f64,
    /// Logistic scale of both window edges, dB.
    pub edge_steepness: f64,
    pub agc: bool,
    /// bytes
    pub beacon_payload: usize,
    /// Hz
    pub beacon_rate: f64,
}

impl Default for RadioProfile {
    fn default() -> Self {
        RadioProfile {
            tx_power: 10.0,
            amp_gain: 0.0,
            system_loss: 0.0,
            noise_figure: 7.0,
            bandwidth: 5e6,
            snr_decode_min: 8.0,
            snr_overdrive_start: 38.0,
            edge_steepness: 1.5,
            agc: false,
            beacon_payload: 125,
            beacon_rate: 10.0,
        }
    }
}

impl RadioProfile {
    /// SDR with the 21 dB external amplifier and no AGC, as flown.
    pub fn experimental() -> Self {
        RadioProfile {
            tx_power: 2.0,
            amp_gain: 21.0,
            system_loss: 15.0,
            edge_steepness: 0.5,
            ..RadioProfile::default()
        }
    }

    /// Commercial 802.11p unit with working AGC.
    pub fn cots() -> Self {
        RadioProfile {
            tx_power: 23.0,
            amp_gain: 0.0,
            system_loss: 0.0,
            noise_figure: 5.0,
            snr_decode_min: 5.0,
            edge_steepness: 0.5,
            agc: true,
            ..RadioProfile::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) {
            return Err(Error::invalid("radio.bandwidth", "must be positive"));
        }
        if !self.agc && !(self.snr_decode_min < self.snr_overdrive_start) {
            return Err(Error::invalid("radio.snr_overdrive_start", "must exceed snr_decode_min without AGC"));
        }
        if !(self.edge_steepness > 0.0) {
            return Err(Error::invalid("radio.edge_steepness", "must be positive"));
        }
        if self.beacon_payload > 125 {
            return Err(Error::invalid("radio.beacon_payload", "at most 125 bytes"));
        }
        if !(self.beacon_rate > 0.0) {
            return Err(Error::invalid("radio.beacon_rate", "must be positive"));
        }
        Ok(())
    }

    /// Effective radiated power, dBm.
    pub fn eirp(&self) -> f64 {
        self.tx_power + self.amp_gain - self.system_loss
    }

    pub fn noise_floor(&self) -> f64 {
        THERMAL_NOISE_DBM_HZ + 10.0 * self.bandwidth.log10() + self.noise_figure
    }

    pub fn window_midpoint(&self) -> f64 {
        0.5 * (self.snr_decode_min + self.snr_overdrive_start)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LossReason {
    None,
    WeakSignal,
    Overdrive,
    MacCollision,
    Malformed,
}

impl LossReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossReason::None => "NONE",
            LossReason::WeakSignal => "WEAK_SIGNAL",
            LossReason::Overdrive => "OVERDRIVE",
            LossReason::MacCollision => "MAC_COLLISION",
            LossReason::Malformed => "MALFORMED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOutcome {
    pub delivered: bool,
    pub loss_reason: LossReason,
    pub snr: f64,
}

/// Received power in dBm for a channel gain in dB (`-∞` stays `-∞`).
pub fn received_power(profile: &RadioProfile, channel_power_db: f64) -> f64 {
    profile.eirp() + channel_power_db
}

pub fn snr(rx_power_dbm: f64, profile: &RadioProfile) -> f64 {
    rx_power_dbm - profile.noise_floor()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn packet_success_probability(profile: &RadioProfile, snr_db: f64) -> f64 {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return 0.0;
    }
    let s = profile.edge_steepness;
    let lower = logistic((snr_db - profile.snr_decode_min) / s);
    if profile.agc {
        lower
    } else {
        lower * logistic((profile.snr_overdrive_start - snr_db) / s)
    }
}

/// One Bernoulli reception trial. Consumes exactly one draw from `rng`.
pub fn packet_outcome<R: Rng + ?Sized>(profile: &RadioProfile, snr_db: f64, rng: &mut R) -> PacketOutcome {
    let p = packet_success_probability(profile, snr_db);
    let u: f64 = rng.random();
    if u < p {
        PacketOutcome {
            delivered: true,
            loss_reason: LossReason::None,
            snr: snr_db,
        }
    } else {
        let reason = if !profile.agc && snr_db > profile.window_midpoint() {
            LossReason::Overdrive
        } else {
            LossReason::WeakSignal
        };
        PacketOutcome {
            delivered: false,
            loss_reason: reason,
            snr: snr_db,
        }
    }
}

/// Frames sent through a fixed attenuator on the bench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabPoint {
    pub attenuation_db: f64,
    pub snr_db: f64,
    pub sent: u64,
    pub weak_signal: u64,
    pub overdrive: u64,
}

impl LabPoint {
    pub fn lost(&self) -> u64 {
        self.weak_signal + self.overdrive
    }

    pub fn per(&self) -> f64 {
        if self.sent == 0 {
            0.0
        } else {
            self.lost() as f64 / self.sent as f64
        }
    }
}

/// Cabled link through each attenuation in turn, `packets` frames per
/// point. Each point draws from its own stream.
pub fn lab_sweep(profile: &RadioProfile, attenuations_db: &[f64], packets: u64, seed: u64) -> Vec<LabPoint> {
    attenuations_db
        .iter()
        .map(|&a| {
            let snr_db = snr(received_power(profile, -a), profile);
            let mut rng = crate::rng::stream(seed, &format!("lab/{}/{}", profile.eirp(), a));
            let mut pt = LabPoint {
                attenuation_db: a,
                snr_db,
                sent: packets,
                weak_signal: 0,
                overdrive: 0,
            };
            for _ in 0..packets {
                match packet_outcome(profile, snr_db, &mut rng).loss_reason {
                    LossReason::WeakSignal => pt.weak_signal += 1,
                    LossReason::Overdrive => pt.overdrive += 1,
                    _ => {}
                }
            }
            pt
        })
        .collect()
}
