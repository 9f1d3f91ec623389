use num_complex::Complex64;

use crate::environment::Scene;

use super::elements::ChannelElements;
use super::paths::{los_component, reflection_component, scatter_component, ChannelConfig, MultipathComponent, PathType, Terminal};

/// All multipath components between one transmitter and one receiver at a
/// single instant, sorted by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    pub t: f64,
    pub tx_id: u32,
    pub rx_id: u32,
    pub components: Vec<MultipathComponent>,
}

impl ChannelSnapshot {
    pub fn los(&self) -> Option<&MultipathComponent> {
        self.components.iter().find(|c| c.path_type == PathType::Los)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn channel_snapshot(
    tx_id: u32,
    tx: &Terminal,
    rx_id: u32,
    rx: &Terminal,
    scene: &Scene,
    elements: &ChannelElements,
    t: f64,
    cfg: &ChannelConfig,
) -> ChannelSnapshot {
    let mut components = Vec::new();
    components.extend(los_component(tx, rx, scene, cfg));
    components.extend(elements.scatterers.iter().filter_map(|s| scatter_component(s, tx, rx, scene, cfg)));
    components.extend(elements.reflectors.iter().filter_map(|r| reflection_component(r, tx, rx, scene, cfg)));
    components.sort_by(|a, b| a.delay.total_cmp(&b.delay));
    ChannelSnapshot { t, tx_id, rx_id, components }
}

/// Superposed narrowband gain and its power in dB. An empty snapshot gives
/// `-∞` dB.
pub fn narrowband_gain(snapshot: &ChannelSnapshot) -> (Complex64, f64) {
    let g: Complex64 = snapshot.components.iter().map(|c| c.amplitude).sum();
    let power_db = if snapshot.components.is_empty() { f64::NEG_INFINITY } else { 20.0 * g.norm().log10() };
    (g, power_db)
}
