//! The C¹ truncation β_ε for Φ = z³ and the porous Φ = z², with the measured
//! deviation constant sup|β_ε − Id|/ε.

use compactness_lab::truncate::{build_beta, Nonlinearity};

fn main() -> compactness_lab::Result<()> {
    for phi in [Nonlinearity::cubic(), Nonlinearity::porous(2.0)?] {
        for eps in [0.2, 0.1, 0.05] {
            let b = build_beta(&phi, eps)?;
            let (dv, dd) = b.junction_mismatch();
            println!("{:<10} ε = {eps:<5} C_meas = {:.5}  sup|β'| = {:.4}  junction mismatch {dv:.1e}/{dd:.1e}", phi.name(), b.c_meas(), b.slope_sup());
        }
    }
    Ok(())
}
