//! Uniform decay of `a(b⋆φ_k) − (ab)⋆φ_k` over a time-oscillating family.

use std::f64::consts::PI;

use compactness_lab::mollify::uniform_commutator_sweep;
use compactness_lab::{Grid, ScalarField, StepTimeSeries};

fn main() -> compactness_lab::Result<()> {
    let g = Grid::new_1d(1024, 1.0)?;
    let a = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
    let b = ScalarField::from_fn(g, |p| (4.0 * PI * p[0]).sin().signum());
    let family = |f: &ScalarField| -> compactness_lab::Result<Vec<StepTimeSeries>> {
        (1..=8).map(|n| StepTimeSeries::sample_midpoints(0.0, 1.0, 32, |t| f.scale((2.0 * PI * n as f64 * t).sin()))).collect()
    };
    let ks = [4, 8, 16, 32, 64];
    let sweep = uniform_commutator_sweep(&family(&a)?, &family(&b)?, &ks)?;
    for (k, v) in ks.iter().zip(&sweep) {
        println!("k = {k:>2}  sup_n ‖S_nk‖₁ = {v:.4e}");
    }
    Ok(())
}
