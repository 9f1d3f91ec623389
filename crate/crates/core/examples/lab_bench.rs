//! Two cabled radios behind a step attenuator, with and without the 21 dB
//! amplifier. The curves should line up once shifted by the amplifier gain.

use dronecast_sim::radio::{lab_sweep, RadioProfile};

fn main() {
    // cabled, so no antenna or feed losses
    let amp = RadioProfile { system_loss: 0.0, ..RadioProfile::experimental() };
    let bare = RadioProfile { amp_gain: 0.0, ..amp.clone() };
    let packets = 25_000;

    let att: Vec<f64> = (0..=14).map(|k| 50.0 + 4.0 * k as f64).collect();
    let with_amp: Vec<f64> = att.iter().map(|a| a + amp.amp_gain).collect();
    let p0 = lab_sweep(&bare, &att, packets, 0);
    let p1 = lab_sweep(&amp, &with_amp, packets, 0);

    println!("{:>8} {:>8} {:>9} | {:>8} {:>9}", "att0", "snr", "PER", "att21", "PER");
    for (a, b) in p0.iter().zip(&p1) {
        println!(
            "{:>8.1} {:>8.1} {:>9.4} | {:>8.1} {:>9.4}",
            a.attenuation_db,
            a.snr_db,
            a.per(),
            b.attenuation_db,
            b.per()
        );
    }
}
