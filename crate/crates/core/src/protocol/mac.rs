//! Carrier-sense medium access and per-receiver collision arbitration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MacConfig {
    pub capture_margin_db: f64,
    /// Energy a node must see to consider the medium busy, dBm.
    pub cs_threshold_dbm: f64,
    /// Slot time; a transmission is sensed only once it has been on air this long.
    pub slot_s: f64,
    pub aifs_s: f64,
    /// Backoff is uniform in `0..=contention_window` slots.
    pub contention_window: u32,
    pub phy_rate_bps: f64,
    pub preamble_s: f64,
    /// MAC header, LLC and FCS bytes added to every payload.
    pub frame_overhead_bytes: usize,
}

impl Default for MacConfig {
    // 802.11p timing scaled to a 5 MHz channel, QPSK 1/2
    fn default() -> Self {
        MacConfig {
            capture_margin_db: 10.0,
            cs_threshold_dbm: -85.0,
            slot_s: 21e-6,
            aifs_s: 106e-6,
            contention_window: 15,
            phy_rate_bps: 3e6,
            preamble_s: 80e-6,
            frame_overhead_bytes: 36,
        }
    }
}

impl MacConfig {
    pub fn airtime(&self, payload_bytes: usize) -> f64 {
        self.preamble_s + ((payload_bytes + self.frame_overhead_bytes) * 8) as f64 / self.phy_rate_bps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission<K = ()> {
    pub tx_id: u32,
    pub start: f64,
    pub duration: f64,
    pub payload: K,
}

impl<K> Transmission<K> {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn overlaps<J>(&self, other: &Transmission<J>) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MacVerdict {
    Clear,
    Collided,
}

/// Outcome of every transmission at one receiver.
///
/// `power_at_rx[k]` is the received power of `transmissions[k]`. A
/// reception survives overlap only if it beats every overlapping signal by
/// the capture margin. The receiver cannot hear anything while it is
/// transmitting itself; its own transmissions are reported as clear.
pub fn mac_arbitrate<K>(transmissions: &[Transmission<K>], rx_id: u32, power_at_rx: &[f64], capture_margin_db: f64) -> Vec<MacVerdict> {
    assert_eq!(transmissions.len(), power_at_rx.len());
    (0..transmissions.len())
        .map(|k| reception_verdict(k, transmissions, rx_id, power_at_rx, capture_margin_db))
        .collect()
}

pub fn reception_verdict<K>(
    target: usize,
    transmissions: &[Transmission<K>],
    rx_id: u32,
    power_at_rx: &[f64],
    capture_margin_db: f64,
) -> MacVerdict {
    let t = &transmissions[target];
    if t.tx_id == rx_id {
        return MacVerdict::Clear;
    }
    for (j, other) in transmissions.iter().enumerate() {
        if j == target || !t.overlaps(other) {
            continue;
        }
        if other.tx_id == rx_id {
            return MacVerdict::Collided;
        }
        if !(power_at_rx[target] >= power_at_rx[j] + capture_margin_db) {
            return MacVerdict::Collided;
        }
    }
    MacVerdict::Clear
}

struct Pending<K> {
    candidate: f64,
    order: u64,
    tx: Transmission<K>,
}

impl<K> PartialEq for Pending<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<K> Eq for Pending<K> {}
impl<K> PartialOrd for Pending<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<K> Ord for Pending<K> {
    // min-heap on (candidate, order)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .candidate
            .total_cmp(&self.candidate)
            .then_with(|| other.order.cmp(&self.order))
    }
}

/// Shared broadcast medium with carrier sensing.
///
/// Requests are granted in order of their candidate start time. A node that
/// senses a transmission above the threshold defers until it ends, waits
/// AIFS plus a random backoff, and tries again. Transmissions that started
/// less than one slot earlier go unnoticed, so near-simultaneous starts
/// still collide.
pub struct CsmaMedium<K> {
    cfg: MacConfig,
    queue: BinaryHeap<Pending<K>>,
    on_air: Vec<Transmission<()>>,
    counter: u64,
}

impl<K> CsmaMedium<K> {
    pub fn new(cfg: MacConfig) -> Self {
        CsmaMedium {
            cfg,
            queue: BinaryHeap::new(),
            on_air: Vec::new(),
            counter: 0,
        }
    }

    pub fn request(&mut self, tx_id: u32, desired_start: f64, duration: f64, payload: K) {
        assert!(duration > 0.0, "transmission duration must be positive");
        self.counter += 1;
        self.queue.push(Pending {
            candidate: desired_start,
            order: self.counter,
            tx: Transmission {
                tx_id,
                start: desired_start,
                duration,
                payload,
            },
        });
    }

    /// Earliest time a queued request could start.
    pub fn next_candidate(&self) -> Option<f64> {
        self.queue.peek().map(|p| p.candidate)
    }

    /// Grants every request that can start before `until`.
    ///
    /// `sensed_power(listener, talker)` is the power the listener receives
    /// from the talker, dBm; `backoff_slots(node)` draws a backoff count.
    pub fn grant_until(
        &mut self,
        until: f64,
        mut sensed_power: impl FnMut(u32, u32) -> f64,
        mut backoff_slots: impl FnMut(u32) -> u32,
    ) -> Vec<Transmission<K>> {
        let mut granted = Vec::new();
        while let Some(top) = self.queue.peek() {
            if top.candidate >= until {
                break;
            }
            let mut p = self.queue.pop().expect("peeked");
            let t = p.candidate;
            let me = p.tx.tx_id;
            let busy_until = self
                .on_air
                .iter()
                .filter(|o| o.tx_id != me && o.start + self.cfg.slot_s <= t && o.end() > t)
                .filter(|o| sensed_power(me, o.tx_id) >= self.cfg.cs_threshold_dbm)
                .map(|o| o.end())
                .fold(f64::NEG_INFINITY, f64::max);
            if busy_until > t {
                let slots = backoff_slots(me).min(self.cfg.contention_window);
                p.candidate = busy_until + self.cfg.aifs_s + slots as f64 * self.cfg.slot_s;
                self.queue.push(p);
                continue;
            }
            p.tx.start = t;
            self.on_air.push(Transmission {
                tx_id: me,
                start: t,
                duration: p.tx.duration,
                payload: (),
            });
            granted.push(p.tx);
        }
        self.on_air.retain(|o| o.end() > until - 1.0);
        granted
    }
}
