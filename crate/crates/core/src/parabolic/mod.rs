//! Backward-Euler scheme for `∂_t u − div(A∇Φ(u)) = 0`, its energy balance,
//! and the refinement monitor.

mod energy;
mod monitor;
mod scheme;

pub use energy::{energy, energy_report, EnergyReport, EnergyStep};
pub use monitor::{grad_phi_l2, theorem1_monitor, time_derivative_tv, MonitorReport, MonitorRow, Verdict};
pub use scheme::{
    run_scheme, semi_implicit_step, BoundaryCondition, DiffusionTensor, SchemeOptions, SchemeRun, StepStats,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

/// Barenblatt profile of `u_t = (u^m)_xx` in one dimension, centred at `x0`.
///
/// `u(t, x) = t^{-α} (C − k (x−x0)² t^{-2α})_+^{1/(m−1)}` with `α = 1/(m+1)`
/// and `k = (m−1) α / (2m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    pub m: f64,
    pub c: f64,
    pub x0: f64,
}

impl Barenblatt {
    pub fn new(m: f64, c: f64, x0: f64) -> Result<Self> {
        if !(m > 1.0) || !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("Barenblatt needs m > 1 and C > 0, got m = {m}, C = {c}")));
        }
        Ok(Self { m, c, x0 })
    }

    /// Profile whose support has half-width `r` at `t = 1`.
    pub fn with_front(m: f64, r: f64, x0: f64) -> Result<Self> {
        let alpha = 1.0 / (m + 1.0);
        let k = (m - 1.0) * alpha / (2.0 * m);
        Self::new(m, k * r * r, x0)
    }

    fn alpha(&self) -> f64 {
        1.0 / (self.m + 1.0)
    }

    pub fn front(&self, t: f64) -> f64 {
        let k = (self.m - 1.0) * self.alpha() / (2.0 * self.m);
        (self.c / k).sqrt() * t.powf(self.alpha())
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        let a = self.alpha();
        let k = (self.m - 1.0) * a / (2.0 * self.m);
        let base = self.c - k * (x - self.x0).powi(2) * t.powf(-2.0 * a);
        t.powf(-a) * base.max(0.0).powf(1.0 / (self.m - 1.0))
    }

    /// Cell averages at time `t`, so that discrete mass matches the exact mass.
    pub fn sample(&self, g: &Grid, t: f64) -> ScalarField {
        let h = g.spacing()[0];
        let q = 16;
        ScalarField::from_fn(*g, |p| {
            let mut s = 0.0;
            for j in 0..q {
                s += self.eval(t, p[0] - 0.5 * h + (j as f64 + 0.5) * h / q as f64);
            }
            s / q as f64
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truncate::Nonlinearity;
    use std::f64::consts::PI;

    #[test]
    fn barenblatt_front_and_mass() {
        let b = Barenblatt::with_front(2.0, 0.5, 1.0).unwrap();
        assert!((b.c - 1.0 / 48.0).abs() < 1e-15);
        assert!((b.front(1.0) - 0.5).abs() < 1e-14);
        let g = Grid::new_1d(2048, 2.0).unwrap();
        let m1 = b.sample(&g, 0.1).integral();
        let m2 = b.sample(&g, 1.0).integral();
        assert!((m1 - m2).abs() < 1e-6 * m1);
    }

    #[test]
    fn porous_run_tracks_barenblatt() {
        let g = Grid::new_1d(512, 2.0).unwrap();
        let b = Barenblatt::with_front(2.0, 0.5, 1.0).unwrap();
        let u0 = b.sample(&g, 0.1);
        let phi = Nonlinearity::porous(2.0).unwrap();
        let a = DiffusionTensor::identity();
        let run = run_scheme(&u0, 0.1, 1.0, 256, &a, &phi, &SchemeOptions::default()).unwrap();
        let exact = b.sample(&g, 1.0);
        let err = run.final_state().sub(&exact).unwrap().map(f64::abs).integral() / exact.integral();
        assert!(err <= 0.02, "relative L1 error {err}");
        let m = run.masses();
        assert!(run.stats.iter().all(|s| s.mass_change <= 1e-12 * m[0]));
        assert!(run.min_value() >= -1e-10);
        let r = energy_report(&run, &a, &phi).unwrap();
        assert!(r.holds(), "worst {}", r.worst_excess());
    }

    #[test]
    fn heat_is_first_order_in_time() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let u0 = ScalarField::from_fn(g, |p| (PI * p[0]).sin());
        let opts = SchemeOptions { bc: BoundaryCondition::DirichletZero, ..Default::default() };
        let h = g.spacing()[0];
        let lam = 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        let t1 = 0.1;
        let errs: Vec<f64> = [32usize, 64, 128]
            .iter()
            .map(|&n| {
                let run = run_scheme(&u0, 0.0, t1, n, &DiffusionTensor::identity(), &Nonlinearity::identity(), &opts).unwrap();
                let exact = u0.scale((-lam * t1).exp());
                run.final_state().sub(&exact).unwrap().max_abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((0.8..=1.2).contains(&order), "{errs:?}");
        }
    }

    #[test]
    fn porous_variation_is_uniform_in_n() {
        let g = Grid::new_1d(128, 2.0).unwrap();
        let b = Barenblatt::with_front(2.0, 0.5, 1.0).unwrap();
        let u0 = b.sample(&g, 0.1);
        let phi = Nonlinearity::porous(2.0).unwrap();
        let family: Vec<_> = [16usize, 32, 64, 128]
            .iter()
            .map(|&n| run_scheme(&u0, 0.1, 1.0, n, &DiffusionTensor::identity(), &phi, &SchemeOptions::default()).unwrap().series().unwrap())
            .collect();
        let r = theorem1_monitor(&family, &phi, 1).unwrap();
        let tv: Vec<f64> = r.rows.iter().map(|row| row.tv_hminus_m).collect();
        let spread = tv.iter().cloned().fold(0.0, f64::max) / tv.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 2.0, "{tv:?}");
        assert!(r.verdict.is_consistent(), "{:?}", r.verdict);
    }

    #[test]
    fn heat_refinements_are_cauchy() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let u0 = ScalarField::from_fn(g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        let family: Vec<_> = [16usize, 32, 64, 128, 256]
            .iter()
            .map(|&n| run_scheme(&u0, 0.0, 0.1, n, &DiffusionTensor::identity(), &Nonlinearity::identity(), &SchemeOptions::default()).unwrap().series().unwrap())
            .collect();
        let r = theorem1_monitor(&family, &Nonlinearity::identity(), 1).unwrap();
        assert!(r.verdict.is_consistent(), "{:?}", r.verdict);
    }
}
