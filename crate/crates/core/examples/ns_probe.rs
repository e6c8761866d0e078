//! The divergence-free equicontinuity probe on a translating disk, for a
//! convergent family and a time-oscillating one.

use compactness_lab::probe::families::{common_interior, stream_family, translating_disk};
use compactness_lab::probe::{ns_probe, NsConfig};

fn main() -> compactness_lab::Result<()> {
    let nc = translating_disk(0.0125, 32)?;
    let k = common_interior(&nc, 0.13);
    let cfg = NsConfig { deltas: vec![0.06, 0.03], shifts: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0], samples: 32, ..NsConfig::default() };
    for oscillating in [false, true] {
        let fam = stream_family(&nc, &[1, 2, 4], oscillating)?;
        let r = ns_probe(&fam, &nc, &k, &cfg)?;
        println!("oscillating = {oscillating}");
        for l in &r.levels {
            println!("  δ = {:<5} ξ = {:.4}  step3 growth per doubling {:.3}", l.delta, l.xi, l.step3_growth);
        }
        println!("  accounting error {:.1e}, verdict {:?}", r.worst_accounting_error(), r.verdict);
    }
    Ok(())
}
