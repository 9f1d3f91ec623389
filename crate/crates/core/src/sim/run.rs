//! The fixed-step simulation loop.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use crate::channel::{channel_snapshot, narrowband_gain, place_channel_elements, AirframeShadowMask, ChannelElements, Terminal};
use crate::environment::{generate_buildings, DroneState, Scene, Trajectory};
use crate::error::Result;
use crate::protocol::ca::{ca_step, CaCommand, CaMode, CaState, PartnerIntent, TimedTrajectory};
use crate::protocol::mac::{reception_verdict, CsmaMedium, MacVerdict, Transmission};
use crate::protocol::tracking::{TrackStatus, TrackTable};
use crate::protocol::{BeaconMessage, BeaconStatus};
use crate::radio::{packet_outcome, received_power, snr, LossReason, RadioProfile};
use crate::rng::{stream, SimRng};
use crate::tesla::{AuthenticatedMessage, KeyChain, Verifier};

use super::report::{AuthEvent, CaEvent, PacketKind, PacketRecord, SeparationSample, SimulationReport, TrackAvailability};
use super::scenario::{Scenario, StationRole};

#[derive(Debug, Clone)]
struct Frame {
    kind: PacketKind,
    seq: u32,
    bytes: Vec<u8>,
}

struct DroneRt {
    id: u32,
    traj: Trajectory,
    radio: RadioProfile,
    mask: AirframeShadowMask,
    beacon_enabled: bool,
    phase: f64,
    next_beacon: u64,
    jitter_rng: SimRng,
    next_jitter: f64,
    seq: u32,
    tau: f64,
    holding: bool,
    ca: CaState,
    intents: BTreeMap<u32, PartnerIntent>,
    heard: bool,
    emergency_pending: bool,
    clock_skew: f64,
    verifiers: BTreeMap<u32, Verifier>,
    last_delivery: BTreeMap<u32, f64>,
}

impl DroneRt {
    fn state(&self) -> DroneState {
        let s = self.traj.state_at(self.tau);
        if self.holding {
            DroneState::hovering(s.position, s.heading)
        } else {
            s
        }
    }

    fn status(&self) -> BeaconStatus {
        if self.holding {
            BeaconStatus::Holding
        } else {
            BeaconStatus::Cruise
        }
    }
}

struct StationRt {
    id: u32,
    role: StationRole,
    state: DroneState,
    radio: RadioProfile,
    mask: AirframeShadowMask,
    chain: Option<KeyChain>,
    rate: f64,
    payload_bytes: usize,
    phase: f64,
    next_msg: u64,
    seq: u32,
    payload_rng: SimRng,
    tracks: TrackTable,
    live_time: BTreeMap<u32, f64>,
}

#[derive(Clone, Copy)]
enum NodeRef {
    Drone(usize),
    Station(usize),
}

/// Seed bytes for a GBAS station's key chain.
pub fn chain_seed(seed: u64, station_id: u32) -> Vec<u8> {
    let mut v = seed.to_le_bytes().to_vec();
    v.extend_from_slice(&station_id.to_le_bytes());
    v
}

/// Runs a scenario to completion. The report is a pure function of the
/// scenario, including its seed.
pub fn run(sc: &Scenario) -> Result<SimulationReport> {
    sc.validate()?;
    let seed = sc.seed;

    let mut buildings = sc.scene.buildings.clone();
    if let (Some(p), Some(area)) = (&sc.scene.p1410, &sc.scene.area) {
        buildings.extend(generate_buildings(p, area, seed)?);
    }
    let scene = Scene::new(buildings);
    let elements = match &sc.elements {
        Some(cfg) => place_channel_elements(&scene, cfg, seed)?,
        None => ChannelElements::default(),
    };

    let mut drones: Vec<DroneRt> = Vec::with_capacity(sc.drones.len());
    for d in &sc.drones {
        let radio = d.radio.profile();
        let traj = if d.jitter_sigma > 0.0 {
            d.trajectory.with_jitter(d.jitter_sigma, &mut stream(seed, &format!("nav/{}", d.id)))?
        } else {
            d.trajectory.clone()
        };
        let phase = d
            .beacon_phase_s
            .unwrap_or_else(|| stream(seed, &format!("beacon/phase/{}", d.id)).random::<f64>() / radio.beacon_rate);
        drones.push(DroneRt {
            id: d.id,
            traj,
            radio,
            mask: d.mask,
            beacon_enabled: d.beacon_enabled,
            phase,
            next_beacon: 0,
            jitter_rng: stream(seed, &format!("beacon/jitter/{}", d.id)),
            next_jitter: 0.0,
            seq: 0,
            tau: 0.0,
            holding: false,
            ca: CaState::default(),
            intents: BTreeMap::new(),
            heard: false,
            emergency_pending: false,
            clock_skew: d.clock_skew_s,
            verifiers: BTreeMap::new(),
            last_delivery: BTreeMap::new(),
        });
    }
    drones.sort_by_key(|d| d.id);

    let mut stations: Vec<StationRt> = Vec::with_capacity(sc.ground_stations.len());
    for g in &sc.ground_stations {
        let chain = match g.role {
            StationRole::Gbas => Some(KeyChain::from_config(&chain_seed(seed, g.id), &sc.tesla)?),
            StationRole::Monitor => None,
        };
        stations.push(StationRt {
            id: g.id,
            role: g.role,
            state: DroneState::hovering(g.position, 0.0),
            radio: g.radio.profile(),
            mask: g.mask,
            chain,
            rate: g.gbas_rate_hz,
            payload_bytes: g.gbas_payload_bytes,
            phase: stream(seed, &format!("gbas/phase/{}", g.id)).random::<f64>() / g.gbas_rate_hz,
            next_msg: 0,
            seq: 0,
            payload_rng: stream(seed, &format!("gbas/payload/{}", g.id)),
            tracks: TrackTable::new(sc.protocol.tracking),
            live_time: BTreeMap::new(),
        });
    }
    stations.sort_by_key(|s| s.id);
    // anchors are distributed out of band
    for s in &stations {
        if let Some(chain) = &s.chain {
            for d in drones.iter_mut() {
                d.verifiers.insert(s.id, Verifier::new(chain.anchor(), sc.tesla));
            }
        }
    }

    let mut nodes: BTreeMap<u32, NodeRef> = BTreeMap::new();
    for (k, d) in drones.iter().enumerate() {
        nodes.insert(d.id, NodeRef::Drone(k));
    }
    for (k, s) in stations.iter().enumerate() {
        nodes.insert(s.id, NodeRef::Station(k));
    }
    let node_ids: Vec<u32> = nodes.keys().copied().collect();
    let radios: BTreeMap<u32, RadioProfile> = drones
        .iter()
        .map(|d| (d.id, d.radio.clone()))
        .chain(stations.iter().map(|s| (s.id, s.radio.clone())))
        .collect();

    let mut report = SimulationReport {
        seed,
        duration: sc.duration,
        time_step: sc.time_step,
        ..SimulationReport::default()
    };

    let dt = sc.time_step;
    let steps = (sc.duration / dt).round() as u64;
    let mac_cfg = sc.protocol.mac;
    let mut medium: CsmaMedium<Frame> = CsmaMedium::new(mac_cfg);
    let mut in_flight: Vec<Transmission<Frame>> = Vec::new();
    let mut recent: Vec<Transmission<()>> = Vec::new();
    let mut link_rngs: HashMap<(u32, u32), SimRng> = HashMap::new();
    let mut backoff_rngs: HashMap<u32, SimRng> = HashMap::new();
    let mut backup_rngs: HashMap<(u32, u32), SimRng> = HashMap::new();
    let mut backup_queue: Vec<(f64, u32, BeaconMessage)> = Vec::new();
    let mut next_snapshot = sc.protocol.track_snapshot_interval_s;
    let mut next_history = 0.0;
    let monitors: Vec<usize> = (0..stations.len()).filter(|&k| stations[k].role == StationRole::Monitor).collect();

    for k in 0..steps {
        let t = k as f64 * dt;
        let t_end = (k + 1) as f64 * dt;

        // kinematic state at the start of the step
        let states: BTreeMap<u32, (DroneState, AirframeShadowMask)> = nodes
            .iter()
            .map(|(&id, r)| match *r {
                NodeRef::Drone(i) => (id, (drones[i].state(), drones[i].mask)),
                NodeRef::Station(i) => (id, (stations[i].state, stations[i].mask)),
            })
            .collect();
        let terminal = |id: u32| {
            let (s, m) = states[&id];
            Terminal::new(s, m)
        };
        let radio_of = |id: u32| -> &RadioProfile { &radios[&id] };
        let mut gain_cache: HashMap<(u32, u32), f64> = HashMap::new();
        let mut channel_db = |tx: u32, rx: u32| -> f64 {
            *gain_cache.entry((tx, rx)).or_insert_with(|| {
                let snap = channel_snapshot(tx, &terminal(tx), rx, &terminal(rx), &scene, &elements, t, &sc.channel);
                narrowband_gain(&snap).1
            })
        };

        separation_metrics(&drones, t, &mut report, sc, &mut next_history);

        // backup-link deliveries due in this step
        backup_queue.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        while let Some((at, _, _)) = backup_queue.first() {
            if *at >= t_end {
                break;
            }
            let (at, station, msg) = backup_queue.remove(0);
            if let Some(NodeRef::Station(i)) = nodes.get(&station) {
                stations[*i].tracks.update(&msg, at);
                report.backup_deliveries += 1;
            }
        }

        // schedule beacons and corrections due in this step
        let beacon_jitter = sc.protocol.beacon_jitter_s;
        for d in drones.iter_mut() {
            if !d.beacon_enabled {
                continue;
            }
            let period = 1.0 / d.radio.beacon_rate;
            let state = d.state();
            let mut due: Vec<(f64, BeaconStatus)> = Vec::new();
            if d.emergency_pending {
                due.push((t, BeaconStatus::Emergency));
                d.emergency_pending = false;
            }
            loop {
                let at = d.phase + d.next_beacon as f64 * period + d.next_jitter;
                if at >= t_end {
                    break;
                }
                d.next_beacon += 1;
                if beacon_jitter > 0.0 {
                    d.next_jitter = d.jitter_rng.random_range(0.0..beacon_jitter);
                }
                if at >= t {
                    due.push((at, d.status()));
                }
            }
            for (at, status) in due {
                d.seq += 1;
                let pos = state.position + state.velocity * (at - t);
                let wps = d.traj.upcoming_waypoints(d.tau, crate::protocol::beacon::MAX_BEACON_WAYPOINTS);
                let msg = BeaconMessage::from_local(d.id, d.seq, at, &pos, &state.velocity, status, &wps, &sc.origin);
                let bytes = msg.encode();
                let airtime = mac_cfg.airtime(bytes.len().max(d.radio.beacon_payload));
                medium.request(
                    d.id,
                    at,
                    airtime,
                    Frame {
                        kind: PacketKind::Beacon,
                        seq: d.seq,
                        bytes,
                    },
                );
            }
        }
        for s in stations.iter_mut() {
            let Some(chain) = &s.chain else { continue };
            loop {
                let at = s.phase + s.next_msg as f64 / s.rate;
                if at >= t_end {
                    break;
                }
                s.next_msg += 1;
                if at < t {
                    continue;
                }
                let payload: Vec<u8> = (0..s.payload_bytes).map(|_| s.payload_rng.random()).collect();
                // no authenticated traffic before the first disclosable interval
                if let Ok(m) = chain.sign(&payload, at) {
                    s.seq += 1;
                    let bytes = m.encode();
                    medium.request(
                        s.id,
                        at,
                        mac_cfg.airtime(bytes.len()),
                        Frame {
                            kind: PacketKind::Gbas,
                            seq: s.seq,
                            bytes,
                        },
                    );
                }
            }
        }

        let granted = medium.grant_until(
            t_end,
            |listener, talker| received_power(radio_of(talker), channel_db(talker, listener)),
            |node| {
                backoff_rngs
                    .entry(node)
                    .or_insert_with(|| stream(seed, &format!("mac/backoff/{node}")))
                    .random_range(0..=mac_cfg.contention_window)
            },
        );
        report.transmissions += granted.len() as u64;
        in_flight.extend(granted);

        // receptions that complete within this step
        let (mut done, pending): (Vec<_>, Vec<_>) = in_flight.drain(..).partition(|tx| tx.end() <= t_end);
        in_flight = pending;
        done.sort_by(|a, b| a.end().total_cmp(&b.end()).then(a.tx_id.cmp(&b.tx_id)));
        let context: Vec<Transmission<()>> = recent
            .iter()
            .cloned()
            .chain(done.iter().chain(in_flight.iter()).map(|x| Transmission {
                tx_id: x.tx_id,
                start: x.start,
                duration: x.duration,
                payload: (),
            }))
            .collect();

        for tx in &done {
            let tx_radio = radio_of(tx.tx_id).clone();
            let overlapping: Vec<&Transmission<()>> = context
                .iter()
                .filter(|o| !(o.tx_id == tx.tx_id && o.start == tx.start) && o.overlaps(tx))
                .collect();
            for &rx_id in &node_ids {
                if rx_id == tx.tx_id || !listens(&nodes, &stations, rx_id, tx.kind_of()) {
                    continue;
                }
                let rx_radio = radio_of(rx_id).clone();
                let gain = channel_db(tx.tx_id, rx_id);
                let p_rx = received_power(&tx_radio, gain);
                let snr_db = snr(p_rx, &rx_radio);

                let mut group: Vec<Transmission<()>> = vec![Transmission {
                    tx_id: tx.tx_id,
                    start: tx.start,
                    duration: tx.duration,
                    payload: (),
                }];
                let mut powers = vec![p_rx];
                for o in &overlapping {
                    group.push((*o).clone());
                    powers.push(if o.tx_id == rx_id {
                        f64::INFINITY
                    } else {
                        received_power(radio_of(o.tx_id), channel_db(o.tx_id, rx_id))
                    });
                }
                let verdict = reception_verdict(0, &group, rx_id, &powers, mac_cfg.capture_margin_db);

                let rng = link_rngs
                    .entry((tx.tx_id, rx_id))
                    .or_insert_with(|| stream(seed, &format!("radio/{}/{}", tx.tx_id, rx_id)));
                let outcome = packet_outcome(&rx_radio, snr_db, rng);
                let mut reason = if verdict == MacVerdict::Collided {
                    LossReason::MacCollision
                } else {
                    outcome.loss_reason
                };

                let t_rx = tx.end();
                if reason == LossReason::None {
                    let ok = deliver(tx, rx_id, t_rx, &nodes, &mut drones, &mut stations, &mut report, sc);
                    if !ok {
                        reason = LossReason::Malformed;
                    }
                } else if tx.payload.kind == PacketKind::Beacon && sc.multilink.enabled {
                    if let Some(NodeRef::Station(i)) = nodes.get(&rx_id) {
                        if stations[*i].role == StationRole::Monitor {
                            let r = backup_rngs
                                .entry((tx.tx_id, rx_id))
                                .or_insert_with(|| stream(seed, &format!("multilink/{}/{}", tx.tx_id, rx_id)));
                            if r.random::<f64>() < sc.multilink.availability {
                                if let Ok(msg) = BeaconMessage::decode(&tx.payload.bytes) {
                                    backup_queue.push((t_rx + sc.multilink.latency_s, rx_id, msg));
                                }
                            }
                        }
                    }
                }

                report.links.entry((tx.tx_id, rx_id)).or_default().record(reason);
                if sc.output.packet_log {
                    let (ts, rs) = (terminal(tx.tx_id), terminal(rx_id));
                    let dir = rs.position() - ts.position();
                    report.packets.push(PacketRecord {
                        t: t_rx,
                        tx_id: tx.tx_id,
                        rx_id,
                        kind: tx.payload.kind,
                        seq: tx.payload.seq,
                        snr_db,
                        rx_power_dbm: p_rx,
                        delivered: reason == LossReason::None,
                        reason,
                        distance: dir.norm(),
                        tx_azimuth: ts.body_azimuth(&dir),
                        rx_azimuth: rs.body_azimuth(&(-dir)),
                    });
                }
            }
        }
        recent.extend(done.iter().map(|x| Transmission {
            tx_id: x.tx_id,
            start: x.start,
            duration: x.duration,
            payload: (),
        }));
        recent.retain(|x| x.end() > t_end - 0.05);

        // kinematics, then collision avoidance at the end of the step
        for d in drones.iter_mut() {
            if !d.holding {
                d.tau += dt;
            }
        }
        if sc.protocol.ca.enabled {
            for d in drones.iter_mut() {
                let active = matches!(d.ca.mode, CaMode::Conflict | CaMode::Holding | CaMode::Resume);
                if !(d.heard || active) {
                    continue;
                }
                d.heard = false;
                let own = TimedTrajectory {
                    traj: &d.traj,
                    t_start: t_end - d.tau,
                };
                let partners: Vec<PartnerIntent> = d.intents.values().cloned().collect();
                let (next, step) = ca_step(&d.ca, d.id, &own, &partners, t_end, &sc.protocol.ca);
                for tr in &step.transitions {
                    report.ca_events.push(CaEvent {
                        t: t_end,
                        drone_id: d.id,
                        from: tr.from,
                        to: tr.to,
                        partner: tr.partner,
                        d_min_pred: tr.d_min_pred,
                    });
                }
                for c in &step.commands {
                    match c {
                        CaCommand::Hold => d.holding = true,
                        CaCommand::Resume => d.holding = false,
                        CaCommand::SendEmergency => d.emergency_pending = true,
                    }
                }
                d.ca = next;
            }
        }

        for &i in &monitors {
            let s = &mut stations[i];
            s.tracks.age(t_end);
            for d in &drones {
                let live = s.tracks.get(d.id).is_some_and(|e| e.status == TrackStatus::Live);
                *s.live_time.entry(d.id).or_insert(0.0) += if live { dt } else { 0.0 };
            }
            if sc.output.track_log && t_end + 1e-9 >= next_snapshot {
                report.track_snapshots.push(s.tracks.snapshot(s.id, t_end));
            }
        }
        if t_end + 1e-9 >= next_snapshot {
            next_snapshot += sc.protocol.track_snapshot_interval_s;
        }
    }
    if steps > 0 {
        separation_metrics(&drones, steps as f64 * dt, &mut report, sc, &mut next_history);
    }

    for &i in &monitors {
        let s = &stations[i];
        for d in &drones {
            report.tracker_availability.push(TrackAvailability {
                station_id: s.id,
                drone_id: d.id,
                live_fraction: if sc.duration > 0.0 { s.live_time.get(&d.id).copied().unwrap_or(0.0) / (steps as f64 * dt) } else { 0.0 },
            });
        }
    }
    for d in &drones {
        for v in d.verifiers.values() {
            let c = v.counts();
            report.auth_counts.accepted += c.accepted;
            report.auth_counts.rejected += c.rejected;
            report.auth_counts.pending += v.pending() as u64;
        }
    }
    Ok(report)
}

trait FrameKind {
    fn kind_of(&self) -> PacketKind;
}

impl FrameKind for Transmission<Frame> {
    fn kind_of(&self) -> PacketKind {
        self.payload.kind
    }
}

/// Drones hear everything; monitoring stations only beacons; GBAS stations
/// only transmit.
fn listens(nodes: &BTreeMap<u32, NodeRef>, stations: &[StationRt], rx_id: u32, kind: PacketKind) -> bool {
    match nodes[&rx_id] {
        NodeRef::Drone(_) => true,
        NodeRef::Station(i) => stations[i].role == StationRole::Monitor && kind == PacketKind::Beacon,
    }
}

/// Hands a decoded frame to the receiver. Returns false if it does not parse.
#[allow(clippy::too_many_arguments)]
fn deliver(
    tx: &Transmission<Frame>,
    rx_id: u32,
    t_rx: f64,
    nodes: &BTreeMap<u32, NodeRef>,
    drones: &mut [DroneRt],
    stations: &mut [StationRt],
    report: &mut SimulationReport,
    sc: &Scenario,
) -> bool {
    match (tx.payload.kind, nodes[&rx_id]) {
        (PacketKind::Beacon, NodeRef::Drone(i)) => {
            let Ok(msg) = BeaconMessage::decode(&tx.payload.bytes) else {
                return false;
            };
            let d = &mut drones[i];
            if let Some(prev) = d.last_delivery.insert(msg.drone_id, t_rx) {
                report.beacon_update_interval.add(t_rx - prev);
            }
            let newer = d.intents.get(&msg.drone_id).is_none_or(|p| p.t_ref <= msg.time());
            if newer {
                d.intents.insert(msg.drone_id, PartnerIntent::from_beacon(&msg, &sc.origin));
                d.heard = true;
            }
            true
        }
        (PacketKind::Beacon, NodeRef::Station(i)) => {
            let Ok(msg) = BeaconMessage::decode(&tx.payload.bytes) else {
                return false;
            };
            stations[i].tracks.update(&msg, t_rx);
            true
        }
        (PacketKind::Gbas, NodeRef::Drone(i)) => {
            let Ok(msg) = AuthenticatedMessage::decode(&tx.payload.bytes) else {
                return false;
            };
            let d = &mut drones[i];
            let Some(v) = d.verifiers.get_mut(&tx.tx_id) else {
                return true;
            };
            let res = v.verify(&msg, t_rx + d.clock_skew, tx.payload.seq as u64);
            if sc.output.auth_log {
                for (handle, verdict) in res.resolved {
                    report.auth_events.push(AuthEvent {
                        t: t_rx,
                        station_id: tx.tx_id,
                        rx_id,
                        seq: handle as u32,
                        verdict,
                    });
                }
                report.auth_events.push(AuthEvent {
                    t: t_rx,
                    station_id: tx.tx_id,
                    rx_id,
                    seq: tx.payload.seq,
                    verdict: res.verdict,
                });
            }
            true
        }
        (PacketKind::Gbas, NodeRef::Station(_)) => true,
    }
}

fn separation_metrics(drones: &[DroneRt], t: f64, report: &mut SimulationReport, sc: &Scenario, next_history: &mut f64) {
    if drones.len() < 2 {
        return;
    }
    let pos: Vec<_> = drones.iter().map(|d| d.state().position).collect();
    let mut best = f64::INFINITY;
    for a in 0..pos.len() {
        for b in a + 1..pos.len() {
            best = best.min((pos[a] - pos[b]).norm());
        }
    }
    if report.min_separation.is_none_or(|m| best < m) {
        report.min_separation = Some(best);
        report.min_separation_t = Some(t);
    }
    if sc.output.separation_history && t + 1e-9 >= *next_history {
        report.separation_history.push(SeparationSample { t, min_distance: best });
        *next_history += sc.output.history_interval_s;
    }
}
