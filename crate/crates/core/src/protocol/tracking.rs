//! Ground-station track table fed by received beacons.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::beacon::BeaconMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TrackStatus {
    Live,
    Stale,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackingConfig {
    pub stale_after_s: f64,
    pub lost_after_s: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        TrackingConfig {
            stale_after_s: 1.0,
            lost_after_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEntry {
    pub last: BeaconMessage,
    pub last_heard: f64,
    pub status: TrackStatus,
}

impl TrackEntry {
    pub fn age(&self, t: f64) -> f64 {
        t - self.last_heard
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackTable {
    pub cfg: TrackingConfig,
    entries: BTreeMap<u32, TrackEntry>,
}

fn status_for(age: f64, cfg: &TrackingConfig) -> TrackStatus {
    if age > cfg.lost_after_s {
        TrackStatus::Lost
    } else if age > cfg.stale_after_s {
        TrackStatus::Stale
    } else {
        TrackStatus::Live
    }
}

impl TrackTable {
    pub fn new(cfg: TrackingConfig) -> Self {
        TrackTable {
            cfg,
            entries: BTreeMap::new(),
        }
    }

    pub fn get(&self, drone_id: u32) -> Option<&TrackEntry> {
        self.entries.get(&drone_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&u32, &TrackEntry)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stores a beacon received at `t`. Returns false, leaving the table
    /// untouched, if its sequence number is not newer than the stored one.
    pub fn update(&mut self, beacon: &BeaconMessage, t: f64) -> bool {
        if let Some(e) = self.entries.get(&beacon.drone_id) {
            if beacon.seq <= e.last.seq {
                return false;
            }
        }
        self.entries.insert(
            beacon.drone_id,
            TrackEntry {
                last: beacon.clone(),
                last_heard: t,
                status: TrackStatus::Live,
            },
        );
        true
    }

    /// Re-derives every track status from its age at `t`.
    pub fn age(&mut self, t: f64) {
        let cfg = self.cfg;
        for e in self.entries.values_mut() {
            e.status = status_for(e.age(t), &cfg);
        }
    }
}

pub fn ground_track_update(table: &mut TrackTable, beacon: &BeaconMessage, t: f64) -> bool {
    table.update(beacon, t)
}

pub fn ground_track_age(table: &mut TrackTable, t: f64) {
    table.age(t)
}

/// One line of the per-second track log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSnapshot {
    pub t: f64,
    pub station_id: u32,
    pub tracks: Vec<TrackRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub drone_id: u32,
    pub status: TrackStatus,
    pub age_s: f64,
    pub seq: u32,
    pub lat_e7: i32,
    pub lon_e7: i32,
    pub alt_mm: i32,
    pub beacon_status: u8,
}

impl TrackTable {
    pub fn snapshot(&self, station_id: u32, t: f64) -> TrackSnapshot {
        TrackSnapshot {
            t,
            station_id,
            tracks: self
                .entries
                .iter()
                .map(|(&id, e)| TrackRecord {
                    drone_id: id,
                    status: e.status,
                    age_s: e.age(t),
                    seq: e.last.seq,
                    lat_e7: e.last.position.lat_e7,
                    lon_e7: e.last.position.lon_e7,
                    alt_mm: e.last.position.alt_mm,
                    beacon_status: e.last.status as u8,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::protocol::beacon::{BeaconStatus, GeoOrigin};

    fn beacon(id: u32, seq: u32) -> BeaconMessage {
        let o = GeoOrigin::default();
        BeaconMessage::from_local(id, seq, 0.1 * seq as f64, &Vec3::zeros(), &Vec3::zeros(), BeaconStatus::Cruise, &[], &o)
    }

    #[test]
    fn fresh_beacon_is_live() {
        let mut t = TrackTable::default();
        assert!(t.update(&beacon(3, 1), 10.0));
        t.age(10.0);
        let e = t.get(3).unwrap();
        assert_eq!(e.status, TrackStatus::Live);
        assert_eq!(e.age(10.0), 0.0);
    }

    #[test]
    fn silence_degrades() {
        let mut t = TrackTable::default();
        t.update(&beacon(3, 1), 10.0);
        t.age(11.0);
        assert_eq!(t.get(3).unwrap().status, TrackStatus::Live);
        t.age(12.0);
        assert_eq!(t.get(3).unwrap().status, TrackStatus::Stale);
        t.age(15.0);
        assert_eq!(t.get(3).unwrap().status, TrackStatus::Stale);
        t.age(15.01);
        assert_eq!(t.get(3).unwrap().status, TrackStatus::Lost);
    }

    #[test]
    fn seq_regression_ignored() {
        let mut t = TrackTable::default();
        t.update(&beacon(3, 5), 1.0);
        let before = t.clone();
        assert!(!t.update(&beacon(3, 4), 2.0));
        assert!(!t.update(&beacon(3, 5), 2.0));
        assert_eq!(t, before);
    }

    #[test]
    fn updates_commute_across_drones() {
        let mut a = TrackTable::default();
        let mut b = TrackTable::default();
        a.update(&beacon(1, 1), 1.0);
        a.update(&beacon(2, 1), 1.0);
        b.update(&beacon(2, 1), 1.0);
        b.update(&beacon(1, 1), 1.0);
        assert_eq!(a, b);
    }
}
