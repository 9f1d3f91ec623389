//! Stochastic scatterers and reflection surfaces attached to the scene.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::environment::{Extent2, Scene};
use crate::error::{Error, Result};
use crate::geometry::{Vec2, Vec3};
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub position: Vec3,
    pub surface_normal: Vec3,
    /// Half-angle of the cone about the normal, rad.
    pub opening_angle: f64,
    /// dB
    pub scattering_loss: f64,
}

/// A finite planar reflector. The in-plane axes are `u_axis` and
/// `normal × u_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSurface {
    pub center: Vec3,
    pub normal: Vec3,
    pub u_axis: Vec3,
    pub half_extents: Vec2,
    /// dB
    pub reflection_loss: f64,
}

impl ReflectionSurface {
    /// Builds a surface with in-plane axes derived from the normal: for
    /// walls the first axis is horizontal and the second vertical, for
    /// floors and roofs they are east and north.
    pub fn new(center: Vec3, normal: Vec3, half_extents: Vec2, reflection_loss: f64) -> Self {
        let normal = normal.normalize();
        let u_axis = if normal.z.abs() > 0.9 {
            Vec3::x()
        } else {
            Vec3::z().cross(&normal).normalize()
        };
        ReflectionSurface {
            center,
            normal,
            u_axis,
            half_extents,
            reflection_loss,
        }
    }

    pub fn v_axis(&self) -> Vec3 {
        self.normal.cross(&self.u_axis)
    }

    /// Flat ground at z = 0 centered on the origin.
    pub fn ground(half_extent: f64, reflection_loss: f64) -> Self {
        ReflectionSurface::new(Vec3::zeros(), Vec3::z(), Vec2::new(half_extent, half_extent), reflection_loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundReflector {
    pub half_extent: f64,
    pub reflection_loss: f64,
}

/// Distributions for element placement. Ranges are `[min, max]` of a
/// uniform draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElementConfig {
    /// Scatterers per m² of building wall and roof.
    pub scatterer_density: f64,
    /// Scatterers per m² of open ground.
    pub ground_scatterer_density: f64,
    /// Ground region for ground scatterers. Defaults to the building bounding box.
    pub ground_extent: Option<Extent2>,
    pub opening_angle_deg: [f64; 2],
    pub scattering_loss_db: [f64; 2],
    pub reflection_loss_db: [f64; 2],
    /// Reflector size as a fraction of its wall, per axis.
    pub reflector_size_fraction: [f64; 2],
    pub ground_reflector: Option<GroundReflector>,
}

impl Default for ElementConfig {
    fn default() -> Self {
        ElementConfig {
            scatterer_density: 0.005,
            ground_scatterer_density: 0.0005,
            ground_extent: None,
            opening_angle_deg: [20.0, 80.0],
            scattering_loss_db: [10.0, 25.0],
            reflection_loss_db: [6.0, 15.0],
            reflector_size_fraction: [0.3, 1.0],
            ground_reflector: None,
        }
    }
}

impl ElementConfig {
    /// No stochastic elements at all.
    pub fn none() -> Self {
        ElementConfig {
            scatterer_density: 0.0,
            ground_scatterer_density: 0.0,
            ..ElementConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scatterer_density >= 0.0 && self.ground_scatterer_density >= 0.0) {
            return Err(Error::invalid("elements.density", "must be >= 0"));
        }
        let check = |name: &str, r: [f64; 2], lo: f64, hi: f64| {
            if !(r[0] <= r[1] && r[0] >= lo && r[1] <= hi) {
                Err(Error::invalid(format!("elements.{name}"), format!("range must satisfy {lo} <= min <= max <= {hi}")))
            } else {
                Ok(())
            }
        };
        check("opening_angle_deg", self.opening_angle_deg, 1e-6, 90.0)?;
        check("scattering_loss_db", self.scattering_loss_db, 0.0, f64::INFINITY)?;
        check("reflection_loss_db", self.reflection_loss_db, 0.0, f64::INFINITY)?;
        check("reflector_size_fraction", self.reflector_size_fraction, 1e-6, 1.0)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelElements {
    pub scatterers: Vec<PointScatterer>,
    pub reflectors: Vec<ReflectionSurface>,
}

fn uniform(rng: &mut SimRng, r: [f64; 2]) -> f64 {
    r[0] + rng.random::<f64>() * (r[1] - r[0])
}

fn poisson(rng: &mut SimRng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|p| p.sample(rng) as usize).unwrap_or(0)
}

/// A rectangular patch of a building surface.
struct Face {
    origin: Vec3,
    u: Vec3,
    v: Vec3,
    normal: Vec3,
}

impl Face {
    fn area(&self) -> f64 {
        self.u.norm() * self.v.norm()
    }
}

fn building_faces(min: &Vec3, max: &Vec3) -> ([Face; 4], Face) {
    let (dx, dy, dz) = (max.x - min.x, max.y - min.y, max.z - min.z);
    let up = Vec3::new(0.0, 0.0, dz);
    let walls = [
        Face { origin: Vec3::new(min.x, min.y, 0.0), u: Vec3::new(dx, 0.0, 0.0), v: up, normal: -Vec3::y() },
        Face { origin: Vec3::new(max.x, min.y, 0.0), u: Vec3::new(0.0, dy, 0.0), v: up, normal: Vec3::x() },
        Face { origin: Vec3::new(max.x, max.y, 0.0), u: Vec3::new(-dx, 0.0, 0.0), v: up, normal: Vec3::y() },
        Face { origin: Vec3::new(min.x, max.y, 0.0), u: Vec3::new(0.0, -dy, 0.0), v: up, normal: -Vec3::x() },
    ];
    let roof = Face {
        origin: Vec3::new(min.x, min.y, max.z),
        u: Vec3::new(dx, 0.0, 0.0),
        v: Vec3::new(0.0, dy, 0.0),
        normal: Vec3::z(),
    };
    (walls, roof)
}

fn scatter_on(face: &Face, density: f64, cfg: &ElementConfig, rng: &mut SimRng, out: &mut Vec<PointScatterer>) {
    let n = poisson(rng, density * face.area());
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        out.push(PointScatterer {
            position: face.origin + face.u * a + face.v * b,
            surface_normal: face.normal,
            opening_angle: uniform(rng, cfg.opening_angle_deg).to_radians(),
            scattering_loss: uniform(rng, cfg.scattering_loss_db),
        });
    }
}

/// Draws scatterers on walls, roofs and open ground plus one reflector per
/// wall. A pure function of the scene, the configuration and the seed.
pub fn place_channel_elements(scene: &Scene, cfg: &ElementConfig, seed: u64) -> Result<ChannelElements> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, "channel/elements");
    let mut out = ChannelElements::default();

    for b in scene.boxes() {
        let (walls, roof) = building_faces(&b.min, &b.max);
        for wall in &walls {
            scatter_on(wall, cfg.scatterer_density, cfg, &mut rng, &mut out.scatterers);
        }
        scatter_on(&roof, cfg.scatterer_density, cfg, &mut rng, &mut out.scatterers);

        for wall in &walls {
            let (w, h) = (wall.u.norm(), wall.v.norm());
            let hu = 0.5 * w * uniform(&mut rng, cfg.reflector_size_fraction);
            let hv = 0.5 * h * uniform(&mut rng, cfg.reflector_size_fraction);
            let cu = hu + rng.random::<f64>() * (w - 2.0 * hu);
            let cv = hv + rng.random::<f64>() * (h - 2.0 * hv);
            let center = wall.origin + wall.u.normalize() * cu + Vec3::z() * cv;
            let loss = uniform(&mut rng, cfg.reflection_loss_db);
            out.reflectors.push(ReflectionSurface::new(center, wall.normal, Vec2::new(hu, hv), loss));
        }
    }

    let ground = cfg.ground_extent.or_else(|| {
        let bs = scene.buildings();
        if bs.is_empty() {
            return None;
        }
        let min = bs.iter().fold(Vec2::repeat(f64::MAX), |m, b| m.inf(&b.footprint_min));
        let max = bs.iter().fold(Vec2::repeat(f64::MIN), |m, b| m.sup(&b.footprint_max));
        Some(Extent2::new(min, max))
    });
    if let Some(area) = ground {
        let n = poisson(&mut rng, cfg.ground_scatterer_density * area.area());
        let size = area.max - area.min;
        for _ in 0..n {
            let p = Vec3::new(
                area.min.x + rng.random::<f64>() * size.x,
                area.min.y + rng.random::<f64>() * size.y,
                0.0,
            );
            let opening_angle = uniform(&mut rng, cfg.opening_angle_deg).to_radians();
            let scattering_loss = uniform(&mut rng, cfg.scattering_loss_db);
            let inside = scene
                .buildings()
                .iter()
                .any(|b| p.x >= b.footprint_min.x && p.x <= b.footprint_max.x && p.y >= b.footprint_min.y && p.y <= b.footprint_max.y);
            if !inside {
                out.scatterers.push(PointScatterer {
                    position: p,
                    surface_normal: Vec3::z(),
                    opening_angle,
                    scattering_loss,
                });
            }
        }
    }

    if let Some(g) = cfg.ground_reflector {
        out.reflectors.push(ReflectionSurface::ground(g.half_extent, g.reflection_loss));
    }
    Ok(out)
}

pub fn write_elements_csv<W: Write>(out: W, elements: &ChannelElements) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "x", "y", "z", "nx", "ny", "nz", "opening_angle_or_half_u", "half_v", "loss_db"])?;
    for s in &elements.scatterers {
        w.write_record(&[
            "scatterer".to_string(),
            s.position.x.to_string(),
            s.position.y.to_string(),
            s.position.z.to_string(),
            s.surface_normal.x.to_string(),
            s.surface_normal.y.to_string(),
            s.surface_normal.z.to_string(),
            s.opening_angle.to_string(),
            String::new(),
            s.scattering_loss.to_string(),
        ])?;
    }
    for r in &elements.reflectors {
        w.write_record(&[
            "reflector".to_string(),
            r.center.x.to_string(),
            r.center.y.to_string(),
            r.center.z.to_string(),
            r.normal.x.to_string(),
            r.normal.y.to_string(),
            r.normal.z.to_string(),
            r.half_extents.x.to_string(),
            r.half_extents.y.to_string(),
            r.reflection_loss.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Building;

    fn block() -> Scene {
        Scene::new(vec![Building::new(Vec2::new(0.0, 0.0), Vec2::new(10.0, 10.0), 20.0).unwrap()])
    }

    #[test]
    fn empty_scene_without_ground_density_is_empty() {
        let cfg = ElementConfig {
            ground_scatterer_density: 0.0,
            ..ElementConfig::default()
        };
        let e = place_channel_elements(&Scene::empty(), &cfg, 1).unwrap();
        assert!(e.scatterers.is_empty());
        assert!(e.reflectors.is_empty());
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = ElementConfig::default();
        assert_eq!(
            place_channel_elements(&block(), &cfg, 5).unwrap(),
            place_channel_elements(&block(), &cfg, 5).unwrap()
        );
    }

    // Face area 4·10·20 + 10·10 = 900 m², mean count 9 at 0.01/m².
    // Poisson(9) two-sided 99% interval is [2, 17].
    #[test]
    fn scatterer_count_matches_poisson() {
        let cfg = ElementConfig {
            scatterer_density: 0.01,
            ground_scatterer_density: 0.0,
            ..ElementConfig::default()
        };
        let mut outside = 0;
        let mut total = 0;
        for seed in 0..100 {
            let n = place_channel_elements(&block(), &cfg, seed).unwrap().scatterers.len();
            total += n;
            if !(2..=17).contains(&n) {
                outside += 1;
            }
        }
        assert!(outside <= 3, "{outside} seeds outside the 99% band");
        let mean = total as f64 / 100.0;
        assert!((mean - 9.0).abs() < 3.0 * (9.0f64 / 100.0).sqrt() + 0.1, "mean {mean}");
    }

    #[test]
    fn elements_sit_on_the_building() {
        let e = place_channel_elements(&block(), &ElementConfig::default(), 2).unwrap();
        let b = block().boxes()[0];
        for s in &e.scatterers {
            let p = s.position;
            let on_surface = (0..3).any(|k| (p[k] - b.min[k]).abs() < 1e-9 || (p[k] - b.max[k]).abs() < 1e-9);
            assert!(on_surface || p.z == 0.0);
            assert!((s.surface_normal.norm() - 1.0).abs() < 1e-12);
            assert!(s.opening_angle > 0.0 && s.opening_angle <= std::f64::consts::FRAC_PI_2);
        }
        assert_eq!(e.reflectors.len(), 4);
        for r in &e.reflectors {
            // reflector stays inside its wall
            let lo = r.center - r.u_axis.abs() * r.half_extents.x - r.v_axis().abs() * r.half_extents.y;
            let hi = r.center + r.u_axis.abs() * r.half_extents.x + r.v_axis().abs() * r.half_extents.y;
            for k in 0..3 {
                assert!(lo[k] >= b.min[k] - 1e-9 && hi[k] <= b.max[k] + 1e-9);
            }
        }
    }
}
