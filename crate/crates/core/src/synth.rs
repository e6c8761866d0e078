//! Seeded synthetic data: smooth random fields and stream functions.

use std::f64::consts::PI;

use rand::Rng;

use crate::grid::{Grid, ScalarField};

/// Random trigonometric mode `a·cos(πk x/Lx + p)·cos(πl y/Ly + q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub amplitude: f64,
    pub k: f64,
    pub l: f64,
    pub phase: [f64; 2],
}

impl Mode {
    pub fn eval(&self, g: &Grid, x: [f64; 2]) -> f64 {
        let [lx, ly] = g.extent();
        let cy = if g.dim() == 2 { (PI * self.l * x[1] / ly + self.phase[1]).cos() } else { 1.0 };
        self.amplitude * (PI * self.k * x[0] / lx + self.phase[0]).cos() * cy
    }
}

/// `count` modes with wavenumbers up to `max_k` and amplitudes decaying like `1/(1+k+l)`.
pub fn random_modes(rng: &mut impl Rng, count: usize, max_k: u32) -> Vec<Mode> {
    (0..count)
        .map(|_| {
            let k = rng.random_range(0..=max_k) as f64;
            let l = rng.random_range(0..=max_k) as f64;
            Mode {
                amplitude: rng.random_range(-1.0..1.0) / (1.0 + k + l),
                k,
                l,
                phase: [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)],
            }
        })
        .collect()
}

pub fn eval_modes(modes: &[Mode], g: &Grid, x: [f64; 2]) -> f64 {
    modes.iter().map(|m| m.eval(g, x)).sum()
}

/// Smooth random cell field.
pub fn random_field(g: Grid, rng: &mut impl Rng, count: usize, max_k: u32) -> ScalarField {
    let modes = random_modes(rng, count, max_k);
    ScalarField::from_fn(g, |x| eval_modes(&modes, &g, x))
}

/// Smooth random values on the `(nx+1) x (ny+1)` cell corners.
pub fn random_node_field(g: &Grid, rng: &mut impl Rng, count: usize, max_k: u32) -> Vec<f64> {
    let modes = random_modes(rng, count, max_k);
    let [hx, hy] = g.spacing();
    let mut out = Vec::with_capacity((g.nx() + 1) * (g.ny() + 1));
    for j in 0..=g.ny() {
        for i in 0..=g.nx() {
            out.push(eval_modes(&modes, g, [i as f64 * hx, j as f64 * hy]));
        }
    }
    out
}
