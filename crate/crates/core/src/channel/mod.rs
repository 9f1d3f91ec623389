//! Geometrical-statistical drone-to-drone channel.
//!
//! Scatterers and reflectors are drawn once per scenario and then frozen;
//! snapshots are pure functions of the drone states.

mod airframe;
mod elements;
mod paths;
mod snapshot;

pub use airframe::{airframe_attenuation, AirframeShadowMask};
pub use elements::{place_channel_elements, write_elements_csv, ChannelElements, ElementConfig, GroundReflector, PointScatterer, ReflectionSurface};
pub use paths::{fspl_db, los_component, mirror_point, reflection_component, scatter_component, ChannelConfig, MultipathComponent, PathType, Terminal};
pub use snapshot::{channel_snapshot, narrowband_gain, ChannelSnapshot};
