//! Beaconing, medium access, collision avoidance and ground tracking.

pub mod beacon;
pub mod ca;
pub mod mac;
pub mod tracking;

pub use beacon::{BeaconError, BeaconMessage, BeaconStatus, GeoOrigin, GeoPoint};
pub use ca::{
    ca_step, predict_min_separation, CaCommand, CaConfig, CaMode, CaState, CaStep, CaTransition, HoldPolicy, MotionModel,
    PartnerIntent, TimedTrajectory,
};
pub use mac::{mac_arbitrate, reception_verdict, CsmaMedium, MacConfig, MacVerdict, Transmission};
pub use tracking::{ground_track_age, ground_track_update, TrackStatus, TrackTable, TrackingConfig};
