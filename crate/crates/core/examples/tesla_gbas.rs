//! A ground station broadcasting signed correction messages at 2 Hz. One
//! receiver gets them on time, another copy of every fifth message is
//! tampered with, and a replayed message arrives long after its key went
//! public.

use dronecast_sim::tesla::{AuthVerdict, KeyChain, TeslaConfig, Verifier};

fn main() -> dronecast_sim::Result<()> {
    let cfg = TeslaConfig { chain_length: 120, ..TeslaConfig::default() };
    let chain = KeyChain::from_config(b"gbas-station-7", &cfg)?;
    let mut rx = Verifier::new(chain.anchor(), cfg);

    let mut sent = Vec::new();
    for k in 4..40 {
        let t = 0.5 * k as f64;
        let payload = format!("corr k={k} dx=0.12 dy=-0.03").into_bytes();
        let mut msg = chain.sign(&payload, t).expect("inside the chain");
        if k % 5 == 0 {
            msg.payload[0] ^= 0x20;
        }
        let v = rx.verify(&msg, t + 0.004, k as u64);
        for (h, verdict) in &v.resolved {
            println!("  message {h} resolved: {}", verdict.as_str());
        }
        println!("t={t:>5.1} i={:>2} {:<8} {}", msg.interval, v.verdict.as_str(), if k % 5 == 0 { "(tampered)" } else { "" });
        sent.push((t, msg));
    }

    // an old message replayed after its key was disclosed
    let (t_old, old) = &sent[3];
    let v = rx.verify(old, t_old + 10.0, 999);
    assert_eq!(v.verdict, AuthVerdict::Reject);
    println!("replay of i={} at t={:.1}: {} ({:?})", old.interval, t_old + 10.0, v.verdict.as_str(), v.reason.unwrap());

    let c = rx.counts();
    println!("accepted {} rejected {} pending {}", c.accepted, c.rejected, c.pending);
    Ok(())
}
