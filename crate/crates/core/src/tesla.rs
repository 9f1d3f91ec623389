//! TESLA broadcast authentication with delayed key disclosure.
//!
//! The sender owns a one-way hash chain `K_i = H(K_{i+1})` and MACs every
//! message of interval `i` with a key derived from `K_i`, disclosing
//! `K_{i-d}` alongside. Receivers holding the authentic anchor `K_0` buffer
//! a message until its key is disclosed, check that key against the chain,
//! and only then check the MAC.

use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::{Error, Result};

pub type Key = [u8; 32];
pub const TAG_LEN: usize = 16;

type HmacSha256 = Hmac<Sha256>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TeslaConfig {
    pub interval_s: f64,
    pub disclosure_delay: u32,
    pub chain_length: u32,
    pub start_time: f64,
    pub max_clock_skew_s: f64,
}

impl Default for TeslaConfig {
    fn default() -> Self {
        TeslaConfig {
            interval_s: 1.0,
            disclosure_delay: 2,
            chain_length: 3600,
            start_time: 0.0,
            max_clock_skew_s: 0.01,
        }
    }
}

impl TeslaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.interval_s > 0.0) {
            return Err(Error::invalid("tesla.interval_s", "must be positive"));
        }
        if self.disclosure_delay < 1 {
            return Err(Error::invalid("tesla.disclosure_delay", "must be at least 1"));
        }
        if self.chain_length < 1 {
            return Err(Error::invalid("tesla.chain_length", "must be at least 1"));
        }
        if !(self.max_clock_skew_s >= 0.0) {
            return Err(Error::invalid("tesla.max_clock_skew_s", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TeslaError {
    #[error("key chain exhausted at interval {0}")]
    ChainExhausted(i64),
    #[error("interval {0} precedes the first disclosable interval")]
    TooEarly(i64),
}

pub fn hash_key(k: &Key) -> Key {
    Sha256::digest(k).into()
}

fn hash_n(k: &Key, n: u64) -> Key {
    let mut out = *k;
    for _ in 0..n {
        out = hash_key(&out);
    }
    out
}

/// MAC key of an interval; separated from the chain so disclosing `K_i`
/// never hands out a key used in the chain itself.
pub fn mac_key(k: &Key) -> Key {
    let mut h = Sha256::new();
    h.update(b"tesla-mac-key");
    h.update(k);
    h.finalize().into()
}

pub fn compute_tag(key: &Key, payload: &[u8], interval: u32) -> [u8; TAG_LEN] {
    let mut mac = HmacSha256::new_from_slice(&mac_key(key)).expect("hmac accepts any key length");
    mac.update(payload);
    mac.update(&interval.to_le_bytes());
    let full = mac.finalize().into_bytes();
    let mut tag = [0u8; TAG_LEN];
    tag.copy_from_slice(&full[..TAG_LEN]);
    tag
}

#[derive(Debug, Clone)]
pub struct KeyChain {
    keys: Vec<Key>,
    pub interval_s: f64,
    pub disclosure_delay: u32,
    pub start_time: f64,
}

impl KeyChain {
    pub fn generate(seed: &[u8], length: u32, interval_s: f64, disclosure_delay: u32, start_time: f64) -> Result<Self> {
        let cfg = TeslaConfig {
            interval_s,
            disclosure_delay,
            chain_length: length,
            start_time,
            max_clock_skew_s: 0.0,
        };
        cfg.validate()?;
        let mut h = Sha256::new();
        h.update(b"tesla-chain-seed");
        h.update(seed);
        let mut keys = vec![[0u8; 32]; length as usize + 1];
        keys[length as usize] = h.finalize().into();
        for i in (0..length as usize).rev() {
            keys[i] = hash_key(&keys[i + 1]);
        }
        Ok(KeyChain {
            keys,
            interval_s,
            disclosure_delay,
            start_time,
        })
    }

    pub fn from_config(seed: &[u8], cfg: &TeslaConfig) -> Result<Self> {
        Self::generate(seed, cfg.chain_length, cfg.interval_s, cfg.disclosure_delay, cfg.start_time)
    }

    pub fn len(&self) -> u32 {
        (self.keys.len() - 1) as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn anchor(&self) -> Key {
        self.keys[0]
    }

    pub fn key(&self, i: u32) -> Option<&Key> {
        self.keys.get(i as usize)
    }

    pub fn interval_index(&self, t: f64) -> i64 {
        ((t - self.start_time) / self.interval_s).floor() as i64
    }

    pub fn sign(&self, payload: &[u8], t: f64) -> std::result::Result<AuthenticatedMessage, TeslaError> {
        sign_message(payload, t, self)
    }
}

pub fn keychain_generate(seed: &[u8], length: u32, interval_s: f64, disclosure_delay: u32, start_time: f64) -> Result<KeyChain> {
    KeyChain::generate(seed, length, interval_s, disclosure_delay, start_time)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthenticatedMessage {
    pub payload: Vec<u8>,
    pub interval: u32,
    pub mac: [u8; TAG_LEN],
    /// Chain key of interval `interval - d`.
    pub disclosed_key: Key,
}

pub fn sign_message(payload: &[u8], t: f64, chain: &KeyChain) -> std::result::Result<AuthenticatedMessage, TeslaError> {
    let i = chain.interval_index(t);
    if i < chain.disclosure_delay as i64 {
        return Err(TeslaError::TooEarly(i));
    }
    if i > chain.len() as i64 {
        return Err(TeslaError::ChainExhausted(i));
    }
    let i = i as u32;
    Ok(AuthenticatedMessage {
        payload: payload.to_vec(),
        interval: i,
        mac: compute_tag(&chain.keys[i as usize], payload, i),
        disclosed_key: chain.keys[(i - chain.disclosure_delay) as usize],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("malformed authenticated message")]
pub struct MalformedAuth;

impl AuthenticatedMessage {
    pub fn encoded_len(&self) -> usize {
        2 + self.payload.len() + 4 + TAG_LEN + 32
    }

    pub fn encode(&self) -> Vec<u8> {
        assert!(self.payload.len() <= u16::MAX as usize, "payload too long");
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&(self.payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.interval.to_le_bytes());
        out.extend_from_slice(&self.mac);
        out.extend_from_slice(&self.disclosed_key);
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, MalformedAuth> {
        if bytes.len() < 2 {
            return Err(MalformedAuth);
        }
        let n = u16::from_le_bytes([bytes[0], bytes[1]]) as usize;
        if bytes.len() != 2 + n + 4 + TAG_LEN + 32 {
            return Err(MalformedAuth);
        }
        let payload = bytes[2..2 + n].to_vec();
        let rest = &bytes[2 + n..];
        let interval = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes"));
        let mac = rest[4..4 + TAG_LEN].try_into().expect("tag bytes");
        let disclosed_key = rest[4 + TAG_LEN..].try_into().expect("key bytes");
        Ok(AuthenticatedMessage {
            payload,
            interval,
            mac,
            disclosed_key,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum AuthVerdict {
    Accept,
    Buffered,
    Reject,
}

impl AuthVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            AuthVerdict::Accept => "ACCEPT",
            AuthVerdict::Buffered => "BUFFERED",
            AuthVerdict::Reject => "REJECT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RejectReason {
    SafetyCondition,
    BadDisclosedKey,
    BadMac,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub verdict: AuthVerdict,
    pub reason: Option<RejectReason>,
    /// Earlier buffered messages settled by the key this message disclosed.
    pub resolved: Vec<(u64, AuthVerdict)>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthCounts {
    pub accepted: u64,
    pub rejected: u64,
    pub pending: u64,
}

#[derive(Debug, Clone)]
struct Buffered {
    handle: u64,
    msg: AuthenticatedMessage,
}

/// Receiver side of one sender's chain.
#[derive(Debug, Clone)]
pub struct Verifier {
    cfg: TeslaConfig,
    newest_key: Key,
    newest_index: u32,
    buffer: Vec<Buffered>,
    counts: AuthCounts,
}

impl Verifier {
    pub fn new(anchor: Key, cfg: TeslaConfig) -> Self {
        Verifier {
            cfg,
            newest_key: anchor,
            newest_index: 0,
            buffer: Vec::new(),
            counts: AuthCounts::default(),
        }
    }

    pub fn counts(&self) -> AuthCounts {
        self.counts
    }

    /// Index of the newest authenticated chain key.
    pub fn verified_index(&self) -> u32 {
        self.newest_index
    }

    pub fn pending(&self) -> usize {
        self.buffer.len()
    }

    /// Chain key `i` if it is derivable from what has been authenticated.
    fn known_key(&self, i: u32) -> Option<Key> {
        (i <= self.newest_index).then(|| hash_n(&self.newest_key, (self.newest_index - i) as u64))
    }

    fn accept_disclosure(&mut self, j: u32, key: &Key) -> bool {
        if j > self.newest_index {
            if hash_n(key, (j - self.newest_index) as u64) == self.newest_key {
                self.newest_key = *key;
                self.newest_index = j;
                true
            } else {
                false
            }
        } else {
            self.known_key(j) == Some(*key)
        }
    }

    fn check_mac(&self, msg: &AuthenticatedMessage) -> AuthVerdict {
        match self.known_key(msg.interval) {
            Some(k) if compute_tag(&k, &msg.payload, msg.interval) == msg.mac => AuthVerdict::Accept,
            _ => AuthVerdict::Reject,
        }
    }

    fn count(&mut self, v: AuthVerdict) {
        match v {
            AuthVerdict::Accept => self.counts.accepted += 1,
            AuthVerdict::Reject => self.counts.rejected += 1,
            AuthVerdict::Buffered => {}
        }
    }

    /// Processes one message received at local time `t_rx`.
    pub fn verify(&mut self, msg: &AuthenticatedMessage, t_rx: f64, handle: u64) -> Verification {
        let d = self.cfg.disclosure_delay;
        let latest = ((t_rx + self.cfg.max_clock_skew_s - self.cfg.start_time) / self.cfg.interval_s).floor();
        let reject = |s: &mut Self, reason| {
            s.counts.rejected += 1;
            Verification {
                verdict: AuthVerdict::Reject,
                reason: Some(reason),
                resolved: Vec::new(),
            }
        };
        // the sender may already have disclosed K_i
        if latest >= msg.interval as f64 + d as f64 {
            return reject(self, RejectReason::SafetyCondition);
        }
        if msg.interval < d || msg.interval > self.cfg.chain_length {
            return reject(self, RejectReason::BadDisclosedKey);
        }
        if !self.accept_disclosure(msg.interval - d, &msg.disclosed_key) {
            return reject(self, RejectReason::BadDisclosedKey);
        }

        let mut resolved = Vec::new();
        let mut keep = Vec::with_capacity(self.buffer.len());
        for b in std::mem::take(&mut self.buffer) {
            if b.msg.interval <= self.newest_index {
                let v = self.check_mac(&b.msg);
                self.count(v);
                resolved.push((b.handle, v));
            } else {
                keep.push(b);
            }
        }
        self.buffer = keep;

        let (verdict, reason) = if msg.interval <= self.newest_index {
            let v = self.check_mac(msg);
            self.count(v);
            (v, (v == AuthVerdict::Reject).then_some(RejectReason::BadMac))
        } else {
            self.buffer.push(Buffered { handle, msg: msg.clone() });
            (AuthVerdict::Buffered, None)
        };
        self.counts.pending = self.buffer.len() as u64;
        Verification {
            verdict,
            reason,
            resolved,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> TeslaConfig {
        TeslaConfig {
            chain_length: 100,
            ..TeslaConfig::default()
        }
    }

    fn chain() -> KeyChain {
        KeyChain::from_config(b"gbas-1", &cfg()).unwrap()
    }

    #[test]
    fn single_link_chain() {
        let c = KeyChain::generate(b"x", 1, 1.0, 1, 0.0).unwrap();
        assert_eq!(hash_key(c.key(1).unwrap()), c.anchor());
    }

    #[test]
    fn anchor_is_iterated_hash() {
        let c = chain();
        assert_eq!(hash_n(c.key(100).unwrap(), 100), c.anchor());
    }

    #[test]
    fn seeds_give_distinct_anchors() {
        let a = KeyChain::generate(&[0b0000_0000], 10, 1.0, 2, 0.0).unwrap();
        let b = KeyChain::generate(&[0b0000_0001], 10, 1.0, 2, 0.0).unwrap();
        assert_ne!(a.anchor(), b.anchor());
    }

    #[test]
    fn first_disclosable_interval_reveals_anchor() {
        let c = chain();
        let m = c.sign(b"p", 2.0).unwrap();
        assert_eq!(m.interval, 2);
        assert_eq!(m.disclosed_key, c.anchor());
    }

    #[test]
    fn same_interval_same_disclosure() {
        let c = chain();
        let a = c.sign(b"one", 5.1).unwrap();
        let b = c.sign(b"two", 5.9).unwrap();
        assert_eq!(a.interval, b.interval);
        assert_eq!(a.disclosed_key, b.disclosed_key);
        assert_eq!(mac_key(c.key(5).unwrap()), mac_key(c.key(a.interval).unwrap()));
    }

    #[test]
    fn signing_errors() {
        let c = chain();
        assert_eq!(c.sign(b"p", 1.5), Err(TeslaError::TooEarly(1)));
        assert_eq!(c.sign(b"p", 101.0), Err(TeslaError::ChainExhausted(101)));
        assert!(c.sign(b"p", 100.5).is_ok());
    }

    #[test]
    fn wire_roundtrip() {
        let m = chain().sign(&[7u8; 64], 10.3).unwrap();
        let bytes = m.encode();
        assert_eq!(bytes.len(), 2 + 64 + 4 + 16 + 32);
        assert_eq!(&bytes[..2], &[64, 0]);
        assert_eq!(AuthenticatedMessage::decode(&bytes).unwrap(), m);
        assert!(AuthenticatedMessage::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn buffered_then_accepted() {
        let c = chain();
        let mut v = Verifier::new(c.anchor(), cfg());
        let m1 = c.sign(b"first", 3.2).unwrap();
        let r1 = v.verify(&m1, 3.25, 1);
        assert_eq!(r1.verdict, AuthVerdict::Buffered);
        // interval 5 discloses K_3
        let m2 = c.sign(b"second", 5.2).unwrap();
        let r2 = v.verify(&m2, 5.25, 2);
        assert_eq!(r2.verdict, AuthVerdict::Buffered);
        assert_eq!(r2.resolved, vec![(1, AuthVerdict::Accept)]);
        assert_eq!(v.verified_index(), 3);
        assert_eq!(v.counts().accepted, 1);
    }

    #[test]
    fn forged_payload_rejected() {
        let c = chain();
        let mut v = Verifier::new(c.anchor(), cfg());
        let mut m = c.sign(b"real", 3.0).unwrap();
        m.payload = b"fake".to_vec();
        v.verify(&m, 3.0, 1);
        let r = v.verify(&c.sign(b"x", 5.0).unwrap(), 5.0, 2);
        assert_eq!(r.resolved, vec![(1, AuthVerdict::Reject)]);
    }

    #[test]
    fn late_delivery_violates_safety() {
        let c = chain();
        let mut v = Verifier::new(c.anchor(), cfg());
        let m = c.sign(b"late", 3.5).unwrap();
        let r = v.verify(&m, 5.0, 1);
        assert_eq!(r.verdict, AuthVerdict::Reject);
        assert_eq!(r.reason, Some(RejectReason::SafetyCondition));
        // skew alone can push a message over the edge
        let r = v.verify(&c.sign(b"edge", 6.0).unwrap(), 7.995, 2);
        assert_eq!(r.reason, Some(RejectReason::SafetyCondition));
    }

    #[test]
    fn bad_disclosed_key_rejected() {
        let c = chain();
        let mut v = Verifier::new(c.anchor(), cfg());
        let mut m = c.sign(b"p", 4.0).unwrap();
        m.disclosed_key[0] ^= 1;
        let r = v.verify(&m, 4.0, 1);
        assert_eq!(r.reason, Some(RejectReason::BadDisclosedKey));
        assert_eq!(v.verified_index(), 0);
    }

    #[test]
    fn verified_index_never_decreases() {
        let c = chain();
        let mut v = Verifier::new(c.anchor(), cfg());
        v.verify(&c.sign(b"a", 9.0).unwrap(), 9.0, 1);
        assert_eq!(v.verified_index(), 7);
        // an older (replayed but still in-window for its own interval) disclosure
        let old = c.sign(b"b", 4.0).unwrap();
        let mut v2 = v.clone();
        v2.verify(&old, 4.0, 2);
        assert_eq!(v2.verified_index(), 7);
    }
}
