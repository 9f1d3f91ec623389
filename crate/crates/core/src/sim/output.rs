//! Result files and the run summary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::tesla::AuthCounts;

use super::report::{LinkStats, SimulationReport, TrackAvailability};

#[derive(Debug, Clone, Serialize)]
pub struct LinkSummary {
    pub tx_id: u32,
    pub rx_id: u32,
    #[serde(flatten)]
    pub stats: LinkStats,
    pub per: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub duration: f64,
    pub time_step: f64,
    pub transmissions: u64,
    pub per: f64,
    pub totals: LinkStats,
    pub links: Vec<LinkSummary>,
    pub min_separation: Option<f64>,
    pub min_separation_t: Option<f64>,
    pub ca_events: usize,
    pub holds: usize,
    pub tesla: AuthCounts,
    pub tracker_availability: Vec<TrackAvailability>,
    pub beacon_age_p50: Option<f64>,
    pub beacon_age_p95: Option<f64>,
    pub mac_collision_rate: f64,
    pub backup_deliveries: u64,
}

impl Summary {
    pub fn from_report(r: &SimulationReport) -> Self {
        Summary {
            seed: r.seed,
            duration: r.duration,
            time_step: r.time_step,
            transmissions: r.transmissions,
            per: r.per(),
            totals: r.total(),
            links: r
                .links
                .iter()
                .map(|(&(tx_id, rx_id), s)| LinkSummary {
                    tx_id,
                    rx_id,
                    stats: *s,
                    per: s.per(),
                })
                .collect(),
            min_separation: r.min_separation,
            min_separation_t: r.min_separation_t,
            ca_events: r.ca_events.len(),
            holds: r.holds(),
            tesla: r.auth_counts,
            tracker_availability: r.tracker_availability.clone(),
            beacon_age_p50: r.beacon_age_p50(),
            beacon_age_p95: r.beacon_age_p95().filter(|v| v.is_finite()),
            mac_collision_rate: r.mac_collision_rate(),
            backup_deliveries: r.backup_deliveries,
        }
    }

    /// Human-readable table, values to three significant figures.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let t = &self.totals;
        s.push_str(&format!("transmissions on air: {}\n", self.transmissions));
        s.push_str("link        rx      ok   weak  ovrdr   coll  malf     PER\n");
        let mut row = |name: String, l: &LinkStats| {
            s.push_str(&format!(
                "{:<10} {:>4} {:>7} {:>6} {:>6} {:>6} {:>5} {:>7}\n",
                name,
                l.transmissions,
                l.delivered,
                l.weak_signal,
                l.overdrive,
                l.mac_collision,
                l.malformed,
                sig3(l.per())
            ));
        };
        if self.links.len() <= 20 {
            for l in &self.links {
                row(format!("{}->{}", l.tx_id, l.rx_id), &l.stats);
            }
        }
        row("all".to_string(), t);
        let opt = |v: Option<f64>| v.map_or("-".to_string(), sig3);
        s.push_str(&format!("min separation [m]: {}\n", opt(self.min_separation)));
        s.push_str(&format!("CA events: {} (holds: {})\n", self.ca_events, self.holds));
        s.push_str(&format!(
            "TESLA accept/reject/pending: {}/{}/{}\n",
            self.tesla.accepted, self.tesla.rejected, self.tesla.pending
        ));
        s.push_str(&format!(
            "beacon update interval p50/p95 [s]: {}/{}\n",
            opt(self.beacon_age_p50),
            opt(self.beacon_age_p95)
        ));
        s.push_str(&format!("MAC collision rate: {}\n", sig3(self.mac_collision_rate)));
        s
    }
}

/// Formats a value with three significant figures.
pub fn sig3(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mut mag = v.abs().log10().floor() as i32;
    let mut r = (v * 10f64.powi(2 - mag)).round() / 10f64.powi(2 - mag);
    if r.abs() >= 10f64.powi(mag + 1) {
        mag += 1;
        r = (v * 10f64.powi(2 - mag)).round() / 10f64.powi(2 - mag);
    }
    format!("{:.*}", (2 - mag).max(0) as usize, r)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

/// Writes packets.csv, snr.csv, ca_events.csv, tracks.jsonl, auth.csv and
/// report.json into `dir`, creating it if needed.
pub fn write_outputs(r: &SimulationReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("packets.csv"))?;
    w.write_record(["t", "tx_id", "rx_id", "seq", "snr_dB", "outcome", "reason"])?;
    for p in &r.packets {
        w.write_record([
            num(p.t),
            p.tx_id.to_string(),
            p.rx_id.to_string(),
            p.seq.to_string(),
            num(p.snr_db),
            if p.delivered { "DELIVERED" } else { "LOST" }.to_string(),
            p.reason.as_str().to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("snr.csv"))?;
    w.write_record(["t", "tx_id", "rx_id", "snr_dB", "rx_power_dBm", "distance_m", "tx_azimuth_deg", "rx_azimuth_deg"])?;
    for p in &r.packets {
        w.write_record([
            num(p.t),
            p.tx_id.to_string(),
            p.rx_id.to_string(),
            num(p.snr_db),
            num(p.rx_power_dbm),
            num(p.distance),
            num(p.tx_azimuth.to_degrees()),
            num(p.rx_azimuth.to_degrees()),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("ca_events.csv"))?;
    w.write_record(["t", "drone_id", "transition", "partner", "d_min_pred"])?;
    for e in &r.ca_events {
        w.write_record([
            num(e.t),
            e.drone_id.to_string(),
            format!("{}->{}", e.from.as_str(), e.to.as_str()),
            e.partner.map_or(String::new(), |p| p.to_string()),
            num(e.d_min_pred),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("auth.csv"))?;
    w.write_record(["t", "station_id", "rx_id", "seq", "verdict"])?;
    for e in &r.auth_events {
        w.write_record([num(e.t), e.station_id.to_string(), e.rx_id.to_string(), e.seq.to_string(), e.verdict.as_str().to_string()])?;
    }
    w.flush()?;

    let mut f = BufWriter::new(File::create(dir.join("tracks.jsonl"))?);
    for s in &r.track_snapshots {
        serde_json::to_writer(&mut f, s)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;

    let f = BufWriter::new(File::create(dir.join("report.json"))?);
    serde_json::to_writer_pretty(f, &Summary::from_report(r))?;
    Ok(())
}
