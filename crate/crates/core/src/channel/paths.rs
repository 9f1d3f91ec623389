//! Individual propagation paths: direct, point-scattered and specular.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::environment::{DroneState, Scene};
use crate::geometry::{azimuth_elevation, Vec3, SPEED_OF_LIGHT};

use super::airframe::AirframeShadowMask;
use super::elements::{PointScatterer, ReflectionSurface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PathType {
    Los,
    Scatter,
    Reflect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathComponent {
    /// s
    pub delay: f64,
    /// Linear voltage gain with the carrier phase embedded.
    pub amplitude: Complex64,
    pub path_type: PathType,
    /// LOS that survives a shallow building-edge obstruction with a penalty.
    pub diffracted: bool,
    pub departure_dir: Vec3,
    pub arrival_dir: Vec3,
}

/// One end of a link: where the radio is, which way the airframe points,
/// and how the airframe shadows it.
#[derive(Debug, Clone, Copy)]
pub struct Terminal {
    pub state: DroneState,
    pub mask: AirframeShadowMask,
}

impl Terminal {
    pub fn new(state: DroneState, mask: AirframeShadowMask) -> Self {
        Terminal { state, mask }
    }

    pub fn position(&self) -> Vec3 {
        self.state.position
    }

    /// Airframe attenuation towards a world-frame direction leaving this terminal.
    pub fn attenuation_towards(&self, dir: &Vec3) -> f64 {
        let (az, el) = azimuth_elevation(dir);
        self.mask.attenuation(az - self.state.heading, el)
    }

    /// Body-relative azimuth of a world-frame direction.
    pub fn body_azimuth(&self, dir: &Vec3) -> f64 {
        crate::geometry::wrap_two_pi(azimuth_elevation(dir).0 - self.state.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub carrier_hz: f64,
    /// Extra loss on a LOS path clipped by a single building edge, dB.
    pub diffraction_penalty_db: f64,
    /// How deep into a building the LOS may pass and still count as edge
    /// diffraction, m. Zero disables diffraction.
    pub diffraction_clearance_m: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            carrier_hz: 5050e6,
            diffraction_penalty_db: 20.0,
            diffraction_clearance_m: 1.0,
        }
    }
}

impl ChannelConfig {
    pub fn free_space(carrier_hz: f64) -> Self {
        ChannelConfig {
            carrier_hz,
            diffraction_clearance_m: 0.0,
            ..ChannelConfig::default()
        }
    }
}

/// Friis free-space path loss in dB.
pub fn fspl_db(distance: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * PI * distance * carrier_hz / SPEED_OF_LIGHT).log10()
}

fn component(
    path_length: f64,
    extra_loss_db: f64,
    carrier_hz: f64,
    path_type: PathType,
    departure_dir: Vec3,
    arrival_dir: Vec3,
) -> MultipathComponent {
    let loss = fspl_db(path_length, carrier_hz) + extra_loss_db;
    let magnitude = 10f64.powf(-loss / 20.0);
    let phase = -2.0 * PI * carrier_hz * path_length / SPEED_OF_LIGHT;
    MultipathComponent {
        delay: path_length / SPEED_OF_LIGHT,
        amplitude: Complex64::from_polar(magnitude, phase.rem_euclid(2.0 * PI)),
        path_type,
        diffracted: false,
        departure_dir,
        arrival_dir,
    }
}

/// The direct path, or `None` when a building blocks it. With diffraction
/// enabled, a path obstructed by exactly one building and only within the
/// clearance margin of its surface survives with a fixed penalty.
pub fn los_component(tx: &Terminal, rx: &Terminal, scene: &Scene, cfg: &ChannelConfig) -> Option<MultipathComponent> {
    let (a, b) = (tx.position(), rx.position());
    let delta = b - a;
    let d = delta.norm();
    if d == 0.0 {
        return None;
    }
    let mut penalty = 0.0;
    let mut diffracted = false;
    let blockers: Vec<usize> = scene.occluders(&a, &b).collect();
    if !blockers.is_empty() {
        if blockers.len() != 1 || cfg.diffraction_clearance_m <= 0.0 {
            return None;
        }
        let core = scene.boxes()[blockers[0]].shrunk(cfg.diffraction_clearance_m);
        if core.is_some_and(|c| c.segment_crosses_interior(&a, &b)) {
            return None;
        }
        penalty = cfg.diffraction_penalty_db;
        diffracted = true;
    }
    let dir = delta / d;
    let airframe = tx.attenuation_towards(&dir) + rx.attenuation_towards(&-dir);
    let mut c = component(d, airframe + penalty, cfg.carrier_hz, PathType::Los, dir, dir);
    c.diffracted = diffracted;
    Some(c)
}

pub fn scatter_component(
    s: &PointScatterer,
    tx: &Terminal,
    rx: &Terminal,
    scene: &Scene,
    cfg: &ChannelConfig,
) -> Option<MultipathComponent> {
    let (a, b) = (tx.position(), rx.position());
    let to_tx = a - s.position;
    let to_rx = b - s.position;
    let (d1, d2) = (to_tx.norm(), to_rx.norm());
    if d1 == 0.0 || d2 == 0.0 {
        return None;
    }
    let cos_open = s.opening_angle.cos();
    if to_tx.dot(&s.surface_normal) / d1 < cos_open || to_rx.dot(&s.surface_normal) / d2 < cos_open {
        return None;
    }
    if scene.segment_occluded(&a, &s.position) || scene.segment_occluded(&s.position, &b) {
        return None;
    }
    let departure = -to_tx / d1;
    let arrival = to_rx / d2;
    let airframe = tx.attenuation_towards(&departure) + rx.attenuation_towards(&-arrival);
    Some(component(
        d1 + d2,
        s.scattering_loss + airframe,
        cfg.carrier_hz,
        PathType::Scatter,
        departure,
        arrival,
    ))
}

/// Mirror image of `p` in the plane of `r`.
pub fn mirror_point(r: &ReflectionSurface, p: &Vec3) -> Vec3 {
    p - r.normal * (2.0 * (p - r.center).dot(&r.normal))
}

/// Specular reflection via the image method.
pub fn reflection_component(
    r: &ReflectionSurface,
    tx: &Terminal,
    rx: &Terminal,
    scene: &Scene,
    cfg: &ChannelConfig,
) -> Option<MultipathComponent> {
    let (a, b) = (tx.position(), rx.position());
    let ha = (a - r.center).dot(&r.normal);
    let hb = (b - r.center).dot(&r.normal);
    if ha <= 0.0 || hb <= 0.0 {
        return None;
    }
    let image = mirror_point(r, &a);
    let along = b - image;
    // the plane splits image and receiver, so this lies in (0, 1)
    let t = ha / (ha + hb);
    let p = image + along * t;
    let local = p - r.center;
    if local.dot(&r.u_axis).abs() > r.half_extents.x || local.dot(&r.v_axis()).abs() > r.half_extents.y {
        return None;
    }
    if scene.segment_occluded(&a, &p) || scene.segment_occluded(&p, &b) {
        return None;
    }
    let total = along.norm();
    let departure = (p - a).normalize();
    let arrival = (b - p).normalize();
    let airframe = tx.attenuation_towards(&departure) + rx.attenuation_towards(&-arrival);
    Some(component(
        total,
        r.reflection_loss + airframe,
        cfg.carrier_hz,
        PathType::Reflect,
        departure,
        arrival,
    ))
}
