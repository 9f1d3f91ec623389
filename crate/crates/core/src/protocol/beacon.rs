//! Beacon wire format.
//!
//! Little-endian, fixed layout:
//!
//! ```text
//! offset size field
//!      0    4 drone_id      u32
//!      4    4 seq           u32
//!      8    8 time_ms       u64
//!     16   12 position      3 × i32  (lat, lon in 1e-7 deg; alt in mm)
//!     28    6 velocity      3 × i16  (east, north, up in cm/s)
//!     34    1 status        u8       (0 cruise, 1 holding, 2 emergency)
//!     35    1 n_waypoints   u8       (≤ 7)
//!     36 12·n waypoints     n × 3 × i32, same encoding as position
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

pub const BEACON_HEADER_LEN: usize = 36;
pub const BEACON_WAYPOINT_LEN: usize = 12;
pub const MAX_BEACON_WAYPOINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BeaconError {
    #[error("beacon length {actual} does not match {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("beacon declares {0} waypoints, at most 7 allowed")]
    TooManyWaypoints(u8),
    #[error("unknown beacon status {0}")]
    BadStatus(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum BeaconStatus {
    Cruise = 0,
    Holding = 1,
    Emergency = 2,
}

impl TryFrom<u8> for BeaconStatus {
    type Error = BeaconError;

    fn try_from(v: u8) -> Result<Self, BeaconError> {
        match v {
            0 => Ok(BeaconStatus::Cruise),
            1 => Ok(BeaconStatus::Holding),
            2 => Ok(BeaconStatus::Emergency),
            other => Err(BeaconError::BadStatus(other)),
        }
    }
}

/// Geodetic position in wire units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat_e7: i32,
    pub lon_e7: i32,
    pub alt_mm: i32,
}

/// Tangent-plane anchor for converting local east-north-up meters to
/// geodetic coordinates (WGS84 radii of curvature at the origin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoOrigin {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl Default for GeoOrigin {
    fn default() -> Self {
        // an airfield in southern Bavaria
        GeoOrigin {
            lat_deg: 48.0833,
            lon_deg: 11.2833,
            alt_m: 590.0,
        }
    }
}

const WGS84_A: f64 = 6_378_137.0;
const WGS84_E2: f64 = 6.694_379_990_14e-3;

impl GeoOrigin {
    fn radii(&self) -> (f64, f64) {
        let s = self.lat_deg.to_radians().sin();
        let w = 1.0 - WGS84_E2 * s * s;
        let prime_vertical = WGS84_A / w.sqrt();
        let meridian = WGS84_A * (1.0 - WGS84_E2) / (w * w.sqrt());
        (meridian, prime_vertical)
    }

    pub fn to_geo(&self, enu: &Vec3) -> GeoPoint {
        let (rm, rn) = self.radii();
        let lat = self.lat_deg + (enu.y / rm).to_degrees();
        let lon = self.lon_deg + (enu.x / (rn * self.lat_deg.to_radians().cos())).to_degrees();
        let alt = self.alt_m + enu.z;
        GeoPoint {
            lat_e7: (lat * 1e7).round() as i32,
            lon_e7: (lon * 1e7).round() as i32,
            alt_mm: (alt * 1e3).round() as i32,
        }
    }

    pub fn to_enu(&self, g: &GeoPoint) -> Vec3 {
        let (rm, rn) = self.radii();
        let lat = g.lat_e7 as f64 * 1e-7;
        let lon = g.lon_e7 as f64 * 1e-7;
        Vec3::new(
            (lon - self.lon_deg).to_radians() * rn * self.lat_deg.to_radians().cos(),
            (lat - self.lat_deg).to_radians() * rm,
            g.alt_mm as f64 * 1e-3 - self.alt_m,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconMessage {
    pub drone_id: u32,
    pub seq: u32,
    pub time_ms: u64,
    pub position: GeoPoint,
    /// East, north, up in cm/s.
    pub velocity: [i16; 3],
    pub status: BeaconStatus,
    pub waypoints: Vec<GeoPoint>,
}

fn cm_per_s(v: f64) -> i16 {
    (v * 100.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

impl BeaconMessage {
    /// Builds a beacon from local kinematics. Waypoints beyond the seventh
    /// are dropped.
    #[allow(clippy::too_many_arguments)]
    pub fn from_local(
        drone_id: u32,
        seq: u32,
        t: f64,
        position: &Vec3,
        velocity: &Vec3,
        status: BeaconStatus,
        waypoints: &[Vec3],
        origin: &GeoOrigin,
    ) -> Self {
        BeaconMessage {
            drone_id,
            seq,
            time_ms: (t * 1e3).round().max(0.0) as u64,
            position: origin.to_geo(position),
            velocity: [cm_per_s(velocity.x), cm_per_s(velocity.y), cm_per_s(velocity.z)],
            status,
            waypoints: waypoints.iter().take(MAX_BEACON_WAYPOINTS).map(|w| origin.to_geo(w)).collect(),
        }
    }

    pub fn encoded_len(&self) -> usize {
        BEACON_HEADER_LEN + BEACON_WAYPOINT_LEN * self.waypoints.len()
    }

    pub fn time(&self) -> f64 {
        self.time_ms as f64 * 1e-3
    }

    pub fn velocity_enu(&self) -> Vec3 {
        Vec3::new(self.velocity[0] as f64, self.velocity[1] as f64, self.velocity[2] as f64) * 0.01
    }

    /// Serializes the message. Panics if it carries more than seven
    /// waypoints, which `from_local` never produces.
    pub fn encode(&self) -> Vec<u8> {
        assert!(self.waypoints.len() <= MAX_BEACON_WAYPOINTS, "beacon carries too many waypoints");
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&self.drone_id.to_le_bytes());
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&self.time_ms.to_le_bytes());
        put_geo(&mut out, &self.position);
        for v in self.velocity {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.status as u8);
        out.push(self.waypoints.len() as u8);
        for w in &self.waypoints {
            put_geo(&mut out, w);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, BeaconError> {
        if bytes.len() < BEACON_HEADER_LEN {
            return Err(BeaconError::SizeMismatch {
                expected: BEACON_HEADER_LEN,
                actual: bytes.len(),
            });
        }
        let n = bytes[35];
        if n as usize > MAX_BEACON_WAYPOINTS {
            return Err(BeaconError::TooManyWaypoints(n));
        }
        let expected = BEACON_HEADER_LEN + BEACON_WAYPOINT_LEN * n as usize;
        if bytes.len() != expected {
            return Err(BeaconError::SizeMismatch {
                expected,
                actual: bytes.len(),
            });
        }
        let status = BeaconStatus::try_from(bytes[34])?;
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let i16_at = |o: usize| i16::from_le_bytes(bytes[o..o + 2].try_into().unwrap());
        Ok(BeaconMessage {
            drone_id: u32_at(0),
            seq: u32_at(4),
            time_ms: u64::from_le_bytes(bytes[8..16].try_into().unwrap()),
            position: get_geo(&bytes[16..28]),
            velocity: [i16_at(28), i16_at(30), i16_at(32)],
            status,
            waypoints: (0..n as usize)
                .map(|k| {
                    let o = BEACON_HEADER_LEN + BEACON_WAYPOINT_LEN * k;
                    get_geo(&bytes[o..o + 12])
                })
                .collect(),
        })
    }
}

fn put_geo(out: &mut Vec<u8>, g: &GeoPoint) {
    out.extend_from_slice(&g.lat_e7.to_le_bytes());
    out.extend_from_slice(&g.lon_e7.to_le_bytes());
    out.extend_from_slice(&g.alt_mm.to_le_bytes());
}

fn get_geo(b: &[u8]) -> GeoPoint {
    let i = |o: usize| i32::from_le_bytes(b[o..o + 4].try_into().unwrap());
    GeoPoint {
        lat_e7: i(0),
        lon_e7: i(4),
        alt_mm: i(8),
    }
}
