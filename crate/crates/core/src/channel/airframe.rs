use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction-dependent attenuation caused by the drone's own airframe.
///
/// Arms produce `lobe_count` equally spaced azimuth lobes starting at the
/// nose; the body above a belly-mounted antenna shadows everything above
/// `cap_elevation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AirframeShadowMask {
    pub lobe_count: u32,
    /// dB
    pub lobe_depth: f64,
    /// rad
    pub cap_elevation: f64,
    /// dB
    pub cap_depth: f64,
}

impl Default for AirframeShadowMask {
    fn default() -> Self {
        AirframeShadowMask {
            lobe_count: 6,
            lobe_depth: 0.0,
            cap_elevation: PI / 5.0,
            cap_depth: 0.0,
        }
    }
}

impl AirframeShadowMask {
    /// A mask that never attenuates.
    pub fn transparent() -> Self {
        AirframeShadowMask::default()
    }

    pub fn hexacopter(lobe_depth: f64) -> Self {
        AirframeShadowMask {
            lobe_depth,
            cap_depth: 15.0,
            ..AirframeShadowMask::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lobe_count < 1 {
            return Err(Error::invalid("mask.lobe_count", "must be >= 1"));
        }
        if !(self.lobe_depth >= 0.0 && self.cap_depth >= 0.0) {
            return Err(Error::invalid("mask", "depths must be >= 0"));
        }
        Ok(())
    }

    /// Attenuation in dB towards a body-relative azimuth and an elevation.
    pub fn attenuation(&self, azimuth: f64, elevation: f64) -> f64 {
        let c = (self.lobe_count as f64 * azimuth).cos().max(0.0);
        let lobe = self.lobe_depth * c * c;
        let cap = if elevation > self.cap_elevation { self.cap_depth } else { 0.0 };
        lobe + cap
    }

    /// True when the azimuth falls in one of the lobes (the lobe term is non-zero).
    pub fn in_lobe(&self, azimuth: f64) -> bool {
        (self.lobe_count as f64 * azimuth).cos() > 0.0
    }
}

pub fn airframe_attenuation(mask: &AirframeShadowMask, azimuth: f64, elevation: f64) -> f64 {
    mask.attenuation(azimuth, elevation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_depth_is_transparent() {
        let m = AirframeShadowMask::transparent();
        for k in 0..100 {
            let a = k as f64 * 0.1;
            assert_eq!(m.attenuation(a, a - 5.0), 0.0);
        }
    }

    #[test]
    fn between_lobes_is_zero() {
        let m = AirframeShadowMask::hexacopter(20.0);
        assert!(m.attenuation(PI / 6.0, 0.0) < 1e-20);
        assert!((m.attenuation(0.0, 0.0) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn cap_applies_above_elevation() {
        let m = AirframeShadowMask::hexacopter(0.0);
        assert_eq!(m.attenuation(0.0, 1.0), 15.0);
        assert_eq!(m.attenuation(0.0, -1.0), 0.0);
    }

    proptest! {
        #[test]
        fn periodic_in_azimuth(az in -10.0f64..10.0, el in -1.5f64..1.5, n in 1u32..12, depth in 0.0f64..40.0) {
            let m = AirframeShadowMask { lobe_count: n, lobe_depth: depth, cap_elevation: 0.5, cap_depth: 3.0 };
            let a = m.attenuation(az, el);
            let b = m.attenuation(az + 2.0 * PI / n as f64, el);
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
