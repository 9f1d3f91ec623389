use std::collections::HashMap;

use dronecast_sim::tesla::{AuthVerdict, AuthenticatedMessage, KeyChain, RejectReason, TeslaConfig, Verifier};
use proptest::prelude::*;

fn cfg() -> TeslaConfig {
    TeslaConfig { chain_length: 60, ..TeslaConfig::default() }
}

/// Feeds authentic messages every 0.25 s from t = 2 s, each followed by a
/// copy with bit `flip` of its wire form inverted when `tamper(k)` holds.
/// Returns the final verdict per handle: even handles are authentic.
fn session(payload_len: usize, flip: usize, tamper: impl Fn(u64) -> bool) -> (HashMap<u64, AuthVerdict>, Vec<u32>) {
    let c = cfg();
    let chain = KeyChain::from_config(b"station", &c).unwrap();
    let mut v = Verifier::new(chain.anchor(), c);
    let mut verdicts = HashMap::new();
    let mut index = Vec::new();
    let record = |out: dronecast_sim::tesla::Verification, h: u64, verdicts: &mut HashMap<u64, AuthVerdict>| {
        verdicts.insert(h, out.verdict);
        for (h, v) in out.resolved {
            verdicts.insert(h, v);
        }
    };
    for k in 0..200u64 {
        let t = 2.0 + 0.25 * k as f64;
        let payload: Vec<u8> = (0..payload_len).map(|i| (i as u64 * 31 + k) as u8).collect();
        let m = chain.sign(&payload, t).unwrap();
        let out = v.verify(&m, t + 0.002, 2 * k);
        record(out, 2 * k, &mut verdicts);
        index.push(v.verified_index());
        if tamper(k) {
            let mut bytes = m.encode();
            let bit = flip % (bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            if let Ok(bad) = AuthenticatedMessage::decode(&bytes) {
                let out = v.verify(&bad, t + 0.003, 2 * k + 1);
                record(out, 2 * k + 1, &mut verdicts);
                index.push(v.verified_index());
            }
        }
    }
    (verdicts, index)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tampering_is_never_accepted(len in 0usize..80, flip in any::<usize>(), every in 1u64..7) {
        let (verdicts, index) = session(len, flip, |k| k % every == 0);
        for (h, v) in &verdicts {
            if h % 2 == 1 {
                prop_assert_ne!(*v, AuthVerdict::Accept, "tampered handle {} accepted", h);
            }
        }
        // Everything authentic from an interval whose key got disclosed is accepted.
        for k in 0..200u64 {
            let interval = (2.0 + 0.25 * k as f64).floor() as u32;
            if interval + 2 <= 51 {
                prop_assert_eq!(verdicts.get(&(2 * k)), Some(&AuthVerdict::Accept), "authentic {}", k);
            }
        }
        prop_assert!(index.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn late_authentic_message_is_rejected() {
    let c = cfg();
    let chain = KeyChain::from_config(b"station", &c).unwrap();
    let mut v = Verifier::new(chain.anchor(), c);
    let m = chain.sign(b"late", 10.5).unwrap();
    let r = v.verify(&m, 12.0, 0);
    assert_eq!(r.verdict, AuthVerdict::Reject);
    assert_eq!(r.reason, Some(RejectReason::SafetyCondition));
    // just inside the window it is buffered
    let r = v.verify(&m, 11.98, 1);
    assert_eq!(r.verdict, AuthVerdict::Buffered);
}
