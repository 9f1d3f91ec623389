//! Tactical collision avoidance from exchanged trajectories.
//!
//! Each drone predicts its own planned path against the intent beaconed by
//! every partner. A predicted loss of separation below the threshold within
//! the horizon makes the drone stop and hover; it resumes once the
//! re-prediction has stayed clear (threshold plus hysteresis) for a dwell
//! time.

use serde::{Deserialize, Serialize};

use crate::environment::{Trajectory, Waypoint};
use crate::geometry::Vec3;

use super::beacon::{BeaconMessage, BeaconStatus, GeoOrigin};

/// Anything that can say where a drone will be at an absolute time.
pub trait MotionModel {
    fn position_at(&self, t: f64) -> Vec3;
    /// Upper bound on speed, used to skip far-away partners.
    fn max_speed(&self) -> f64;
}

impl MotionModel for Trajectory {
    fn position_at(&self, t: f64) -> Vec3 {
        Trajectory::position_at(self, t)
    }

    fn max_speed(&self) -> f64 {
        Trajectory::max_speed(self)
    }
}

/// A trajectory whose time origin sits at absolute time `t_start`.
#[derive(Debug, Clone, Copy)]
pub struct TimedTrajectory<'a> {
    pub traj: &'a Trajectory,
    pub t_start: f64,
}

impl MotionModel for TimedTrajectory<'_> {
    fn position_at(&self, t: f64) -> Vec3 {
        self.traj.position_at((t - self.t_start).max(0.0))
    }

    fn max_speed(&self) -> f64 {
        self.traj.max_speed()
    }
}

/// Minimum 3D distance over `t ∈ [t0, t0 + horizon]` sampled every `dt`,
/// and the earliest time it occurs.
pub fn predict_min_separation<A: MotionModel + ?Sized, B: MotionModel + ?Sized>(
    a: &A,
    b: &B,
    t0: f64,
    horizon: f64,
    dt: f64,
) -> (f64, f64) {
    assert!(horizon > 0.0 && dt > 0.0, "horizon and dt must be positive");
    let steps = (horizon / dt - 1e-9).ceil() as usize;
    let mut best = (f64::INFINITY, t0);
    for k in 0..=steps {
        let t = (t0 + k as f64 * dt).min(t0 + horizon);
        let d = (a.position_at(t) - b.position_at(t)).norm();
        if d < best.0 {
            best = (d, t);
        }
    }
    best
}

/// What a drone knows about a partner's plan, reconstructed from its last beacon.
#[derive(Debug, Clone)]
pub struct PartnerIntent {
    pub drone_id: u32,
    pub t_ref: f64,
    pub status: BeaconStatus,
    pub speed: f64,
    pub path: Trajectory,
}

impl PartnerIntent {
    /// Partner flies from its reported position through the reported
    /// waypoints at its reported speed; a holding or slow partner stays put.
    pub fn from_beacon(msg: &BeaconMessage, origin: &GeoOrigin) -> Self {
        let p0 = origin.to_enu(&msg.position);
        let speed = msg.velocity_enu().norm();
        let stationary = speed < 0.05 || msg.status != BeaconStatus::Cruise || msg.waypoints.is_empty();
        let path = if stationary {
            Trajectory::hover(p0, 0.0)
        } else {
            let mut pts = vec![p0];
            for w in &msg.waypoints {
                let p = origin.to_enu(w);
                if (p - *pts.last().unwrap()).norm() > 0.01 {
                    pts.push(p);
                }
            }
            let n = pts.len();
            let wps = pts
                .into_iter()
                .enumerate()
                .map(|(i, p)| Waypoint::new(p, if i + 1 < n { speed } else { 0.0 }, 0.0))
                .collect();
            Trajectory::new(wps, false).unwrap_or_else(|_| Trajectory::hover(p0, 0.0))
        };
        PartnerIntent {
            drone_id: msg.drone_id,
            t_ref: msg.time(),
            status: msg.status,
            speed: if stationary { 0.0 } else { speed },
            path,
        }
    }

    pub fn hover(drone_id: u32, position: Vec3, t_ref: f64) -> Self {
        PartnerIntent {
            drone_id,
            t_ref,
            status: BeaconStatus::Holding,
            speed: 0.0,
            path: Trajectory::hover(position, 0.0),
        }
    }
}

impl MotionModel for PartnerIntent {
    fn position_at(&self, t: f64) -> Vec3 {
        self.path.position_at((t - self.t_ref).max(0.0))
    }

    fn max_speed(&self) -> f64 {
        self.speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldPolicy {
    /// Both drones of a conflicting pair stop.
    HoldBoth,
    /// The lower id stops first; the other one stops only if the conflict
    /// persists after that.
    LowerIdFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaConfig {
    pub enabled: bool,
    pub threshold_m: f64,
    pub horizon_s: f64,
    pub dt_s: f64,
    pub hysteresis_m: f64,
    pub dwell_s: f64,
    /// Under `LowerIdFirst`, how long the higher id waits for its partner
    /// to stop before stopping itself.
    pub yield_grace_s: f64,
    pub policy: HoldPolicy,
}

impl Default for CaConfig {
    fn default() -> Self {
        CaConfig {
            enabled: true,
            threshold_m: 20.0,
            horizon_s: 10.0,
            dt_s: 0.1,
            hysteresis_m: 5.0,
            dwell_s: 2.0,
            yield_grace_s: 0.5,
            policy: HoldPolicy::HoldBoth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CaMode {
    Cruise,
    Conflict,
    Holding,
    Resume,
}

impl CaMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaMode::Cruise => "CRUISE",
            CaMode::Conflict => "CONFLICT",
            CaMode::Holding => "HOLDING",
            CaMode::Resume => "RESUME",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaState {
    pub mode: CaMode,
    pub conflict_partner: Option<u32>,
    pub hold_since: Option<f64>,
    pub conflict_since: Option<f64>,
    pub clear_since: Option<f64>,
}

impl Default for CaState {
    fn default() -> Self {
        CaState {
            mode: CaMode::Cruise,
            conflict_partner: None,
            hold_since: None,
            conflict_since: None,
            clear_since: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaCommand {
    Hold,
    Resume,
    SendEmergency,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaTransition {
    pub from: CaMode,
    pub to: CaMode,
    pub partner: Option<u32>,
    pub d_min_pred: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaStep {
    pub commands: Vec<CaCommand>,
    pub transitions: Vec<CaTransition>,
}

/// Predicted miss distance against one partner, or a cheap lower bound when
/// the pair cannot come within `reach` over the horizon.
fn predicted<M: MotionModel + ?Sized>(own: &M, p: &PartnerIntent, t: f64, cfg: &CaConfig, reach: f64) -> (f64, f64) {
    let now = (own.position_at(t) - p.position_at(t)).norm();
    let bound = now - (own.max_speed() + p.max_speed()) * cfg.horizon_s;
    if bound > reach {
        return (bound, t);
    }
    predict_min_separation(own, p, t, cfg.horizon_s, cfg.dt_s)
}

fn worst<M: MotionModel + ?Sized>(own: &M, partners: &[PartnerIntent], t: f64, cfg: &CaConfig) -> Option<(u32, f64)> {
    let reach = cfg.threshold_m + cfg.hysteresis_m;
    partners
        .iter()
        .map(|p| (p.drone_id, predicted(own, p, t, cfg, reach).0))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

/// Advances one drone's avoidance state machine by one evaluation.
///
/// `own` is the drone's planned motion as if it kept flying from now on
/// (also while holding, so that resuming can be assessed).
pub fn ca_step<M: MotionModel + ?Sized>(
    state: &CaState,
    own_id: u32,
    own: &M,
    partners: &[PartnerIntent],
    t: f64,
    cfg: &CaConfig,
) -> (CaState, CaStep) {
    let mut s = *state;
    let mut out = CaStep::default();
    if !cfg.enabled || partners.is_empty() {
        return (s, out);
    }
    let transition = |s: &mut CaState, to: CaMode, partner: Option<u32>, d: f64, out: &mut CaStep| {
        out.transitions.push(CaTransition {
            from: s.mode,
            to,
            partner,
            d_min_pred: d,
        });
        s.mode = to;
    };
    let hold = |s: &mut CaState, out: &mut CaStep| {
        s.hold_since = Some(t);
        s.clear_since = None;
        out.commands.push(CaCommand::Hold);
        out.commands.push(CaCommand::SendEmergency);
    };

    if s.mode == CaMode::Resume {
        transition(&mut s, CaMode::Cruise, None, f64::NAN, &mut out);
        s.conflict_partner = None;
        s.hold_since = None;
        s.clear_since = None;
        s.conflict_since = None;
    }

    match s.mode {
        CaMode::Cruise => {
            if let Some((partner, d)) = worst(own, partners, t, cfg) {
                if d < cfg.threshold_m {
                    transition(&mut s, CaMode::Conflict, Some(partner), d, &mut out);
                    s.conflict_partner = Some(partner);
                    s.conflict_since = Some(t);
                    if cfg.policy == HoldPolicy::HoldBoth || own_id < partner {
                        transition(&mut s, CaMode::Holding, Some(partner), d, &mut out);
                        hold(&mut s, &mut out);
                    }
                }
            }
        }
        CaMode::Conflict => {
            let partner = s.conflict_partner;
            let intent = partners.iter().find(|p| Some(p.drone_id) == partner);
            let d = intent.map_or(f64::INFINITY, |p| predicted(own, p, t, cfg, cfg.threshold_m + cfg.hysteresis_m).0);
            let partner_stopped = intent.is_some_and(|p| p.status != BeaconStatus::Cruise);
            let waited = t - s.conflict_since.unwrap_or(t) >= cfg.yield_grace_s;
            if d >= cfg.threshold_m + cfg.hysteresis_m {
                transition(&mut s, CaMode::Cruise, partner, d, &mut out);
                s.conflict_partner = None;
                s.conflict_since = None;
            } else if d < cfg.threshold_m && (partner_stopped || waited) {
                transition(&mut s, CaMode::Holding, partner, d, &mut out);
                hold(&mut s, &mut out);
            }
        }
        CaMode::Holding => {
            let d = worst(own, partners, t, cfg).map_or(f64::INFINITY, |w| w.1);
            if d >= cfg.threshold_m + cfg.hysteresis_m {
                let since = *s.clear_since.get_or_insert(t);
                if t - since >= cfg.dwell_s - 1e-9 {
                    let partner = s.conflict_partner;
                    transition(&mut s, CaMode::Resume, partner, d, &mut out);
                    s.conflict_partner = None;
                    out.commands.push(CaCommand::Resume);
                }
            } else {
                s.clear_since = None;
            }
        }
        CaMode::Resume => unreachable!("handled above"),
    }
    (s, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(from: Vec3, to: Vec3, speed: f64) -> Trajectory {
        Trajectory::new(vec![Waypoint::new(from, speed, 0.0), Waypoint::new(to, 0.0, 0.0)], false).unwrap()
    }

    fn intent_of(id: u32, traj: &Trajectory, t: f64) -> PartnerIntent {
        let origin = GeoOrigin::default();
        let s = traj.state_at(t);
        let msg = BeaconMessage::from_local(id, 0, t, &s.position, &s.velocity, BeaconStatus::Cruise, &traj.upcoming_waypoints(t, 7), &origin);
        PartnerIntent::from_beacon(&msg, &origin)
    }

    #[test]
    fn identical_paths_have_zero_separation() {
        let a = straight(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), 5.0);
        assert_eq!(predict_min_separation(&a, &a, 0.0, 10.0, 0.1).0, 0.0);
    }

    #[test]
    fn parallel_tracks_keep_distance() {
        let a = straight(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), 5.0);
        let b = straight(Vec3::new(0.0, 30.0, 0.0), Vec3::new(100.0, 30.0, 0.0), 5.0);
        let (d, t) = predict_min_separation(&a, &b, 0.0, 10.0, 0.1);
        assert!((d - 30.0).abs() < 1e-9);
        assert_eq!(t, 0.0);
    }

    #[test]
    fn no_beacons_no_change() {
        let a = straight(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), 5.0);
        let s = CaState::default();
        let (n, step) = ca_step(&s, 1, &a, &[], 3.0, &CaConfig::default());
        assert_eq!(n, s);
        assert!(step.commands.is_empty());
    }

    // Head-on at 2 m/s each: hold is issued once the gap drops below 20 + 4·10 m.
    #[test]
    fn head_on_holds_inside_sixty_meters() {
        let cfg = CaConfig::default();
        let a = straight(Vec3::new(0.0, 0.0, 30.0), Vec3::new(200.0, 0.0, 30.0), 2.0);
        let b = straight(Vec3::new(200.0, 0.0, 30.0), Vec3::new(0.0, 0.0, 30.0), 2.0);
        let mut s = CaState::default();
        let mut held_at = None;
        for k in 0..5000 {
            let t = k as f64 * 0.01;
            let (n, step) = ca_step(&s, 1, &a, &[intent_of(2, &b, t)], t, &cfg);
            s = n;
            if step.commands.contains(&CaCommand::Hold) {
                held_at = Some(t);
                break;
            }
        }
        let t = held_at.expect("hold issued");
        let gap = (a.position_at(t) - b.position_at(t)).norm();
        // beacon positions are quantized to about 1 cm
        assert!(gap < 60.05 && gap > 59.5, "gap {gap}");
        assert_eq!(s.mode, CaMode::Holding);
        assert_eq!(s.conflict_partner, Some(2));
    }

    #[test]
    fn resumes_after_dwell_once_clear() {
        let cfg = CaConfig::default();
        let own = straight(Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), 2.0);
        let mut s = CaState {
            mode: CaMode::Holding,
            conflict_partner: Some(2),
            hold_since: Some(0.0),
            ..CaState::default()
        };
        // partner already past and far away
        let far = PartnerIntent::hover(2, Vec3::new(-200.0, 0.0, 0.0), 0.0);
        let mut resumed = None;
        for k in 0..400 {
            let t = 1.0 + k as f64 * 0.01;
            let own_now = TimedTrajectory { traj: &own, t_start: t };
            let (n, step) = ca_step(&s, 1, &own_now, std::slice::from_ref(&far), t, &cfg);
            s = n;
            if step.commands.contains(&CaCommand::Resume) {
                resumed = Some(t);
                break;
            }
        }
        let t = resumed.expect("resumed");
        assert!((t - 1.0 - cfg.dwell_s).abs() <= 0.01 + 1e-9);
        assert_eq!(s.mode, CaMode::Resume);
        let (n, _) = ca_step(&s, 1, &own, std::slice::from_ref(&far), t + 0.01, &cfg);
        assert_eq!(n.mode, CaMode::Cruise);
        assert_eq!(n.conflict_partner, None);
    }

    #[test]
    fn lower_id_holds_first() {
        let cfg = CaConfig {
            policy: HoldPolicy::LowerIdFirst,
            ..CaConfig::default()
        };
        let a = straight(Vec3::new(0.0, 0.0, 30.0), Vec3::new(200.0, 0.0, 30.0), 2.0);
        let b = straight(Vec3::new(50.0, 0.0, 30.0), Vec3::new(0.0, 0.0, 30.0), 2.0);
        let (sa, stepa) = ca_step(&CaState::default(), 1, &a, &[intent_of(2, &b, 0.0)], 0.0, &cfg);
        let (sb, stepb) = ca_step(&CaState::default(), 2, &b, &[intent_of(1, &a, 0.0)], 0.0, &cfg);
        assert_eq!(sa.mode, CaMode::Holding);
        assert!(stepa.commands.contains(&CaCommand::Hold));
        assert_eq!(sb.mode, CaMode::Conflict);
        assert!(stepb.commands.is_empty());
        // partner reports holding but b's path still runs through it
        let held = PartnerIntent::hover(1, Vec3::new(30.0, 0.0, 30.0), 0.1);
        let (sb2, stepb2) = ca_step(&sb, 2, &b, &[held], 0.1, &cfg);
        assert_eq!(sb2.mode, CaMode::Holding);
        assert!(stepb2.commands.contains(&CaCommand::Hold));
    }
}
