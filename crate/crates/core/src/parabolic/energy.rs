use crate::error::Result;
use crate::grid::ScalarField;
use crate::truncate::Nonlinearity;

use super::scheme::{BoundaryCondition, DiffusionTensor, FluxOperator, SchemeRun};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStep {
    /// `∫Ψ(u_k)`.
    pub energy_before: f64,
    /// `∫Ψ(u_{k+1})`.
    pub energy_after: f64,
    /// `δ ∫ ∇Φ(u_{k+1})·A∇Φ(u_{k+1})`.
    pub dissipation: f64,
    /// `δ ∫ |∇Φ(u_{k+1})|²`.
    pub gradient_sq: f64,
    /// Violation of `E_{k+1} + dissipation ≤ E_k`, relative to `max(|E_k|, dissipation, tiny)`.
    pub identity_excess: f64,
    /// Violation of `E_{k+1} + (λ/2)·gradient_sq ≤ E_k`, same scaling.
    pub coercive_excess: f64,
}

#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub lambda: f64,
    pub steps: Vec<EnergyStep>,
    /// Steps whose excess exceeds `tolerance`.
    pub flagged: Vec<usize>,
    pub tolerance: f64,
}

impl EnergyReport {
    pub fn holds(&self) -> bool {
        self.flagged.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.steps.iter().map(|s| s.energy_before).collect();
        if let Some(last) = self.steps.last() {
            e.push(last.energy_after);
        }
        e
    }

    pub fn worst_excess(&self) -> f64 {
        self.steps.iter().map(|s| s.identity_excess.max(s.coercive_excess)).fold(0.0, f64::max)
    }
}

pub fn energy(u: &ScalarField, phi: &Nonlinearity) -> f64 {
    u.values().iter().map(|&z| phi.psi(z)).sum::<f64>() * u.grid().cell_volume()
}

/// `(∫∇w·A∇w, ∫|∇w|²)` with the boundary treatment of the scheme.
pub(crate) fn dissipation_pair(w: &ScalarField, op: &FluxOperator, dirichlet: bool) -> (f64, f64) {
    let g = w.grid();
    let vol = g.cell_volume();
    let mut div = vec![0.0; g.cell_count()];
    op.apply(w.values(), &mut div);
    let da = -w.values().iter().zip(&div).map(|(a, b)| a * b).sum::<f64>() * vol;

    let (nx, ny) = (g.nx(), g.ny());
    let [hx, hy] = g.spacing();
    let v = w.values();
    let mut gsq = 0.0;
    for j in 0..ny {
        for i in 1..nx {
            gsq += ((v[g.index(i, j)] - v[g.index(i - 1, j)]) / hx).powi(2) * vol;
        }
        if dirichlet {
            gsq += 0.5 * vol * ((2.0 * v[g.index(0, j)] / hx).powi(2) + (2.0 * v[g.index(nx - 1, j)] / hx).powi(2));
        }
    }
    if g.dim() == 2 {
        for i in 0..nx {
            for j in 1..ny {
                gsq += ((v[g.index(i, j)] - v[g.index(i, j - 1)]) / hy).powi(2) * vol;
            }
            if dirichlet {
                gsq += 0.5 * vol * ((2.0 * v[g.index(i, 0)] / hy).powi(2) + (2.0 * v[g.index(i, ny - 1)] / hy).powi(2));
            }
        }
    }
    (da, gsq)
}

/// Discrete energy balance of each step of a run; `λ` comes from the tensor
/// after checking it against sampled eigenvalues.
pub fn energy_report(run: &SchemeRun, a: &DiffusionTensor, phi: &Nonlinearity) -> Result<EnergyReport> {
    let g = *run.states[0].grid();
    let delta = run.delta();
    let times: Vec<f64> = (1..=run.steps()).map(|k| run.t0 + k as f64 * delta).collect();
    a.verify(&g, &times)?;
    let lambda = a.lambda();
    let tolerance = 1e-8;
    let dirichlet = run.bc == BoundaryCondition::DirichletZero;
    let mut steps = Vec::with_capacity(run.steps());
    let mut flagged = Vec::new();
    for k in 0..run.steps() {
        let op = FluxOperator::new(&g, a, times[k], run.bc);
        let w = phi.apply(&run.states[k + 1]);
        let (da, gsq) = dissipation_pair(&w, &op, dirichlet);
        let e0 = energy(&run.states[k], phi);
        let e1 = energy(&run.states[k + 1], phi);
        let dissipation = delta * da;
        let gradient_sq = delta * gsq;
        let scale = e0.abs().max(dissipation.abs()).max(1e-300);
        let identity_excess = ((e1 + dissipation - e0) / scale).max(0.0);
        let coercive_excess = ((e1 + 0.5 * lambda * gradient_sq - e0) / scale).max(0.0);
        if identity_excess > tolerance || coercive_excess > tolerance {
            flagged.push(k);
        }
        steps.push(EnergyStep { energy_before: e0, energy_after: e1, dissipation, gradient_sq, identity_excess, coercive_excess });
    }
    Ok(EnergyReport { lambda, steps, flagged, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::parabolic::{run_scheme, SchemeOptions};
    use std::f64::consts::PI;

    #[test]
    fn constant_series_has_no_dissipation() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let u = ScalarField::constant(g, 0.4);
        let phi = Nonlinearity::porous(2.0).unwrap();
        let a = DiffusionTensor::identity();
        let run = run_scheme(&u, 0.0, 1.0, 4, &a, &phi, &SchemeOptions::default()).unwrap();
        let r = energy_report(&run, &a, &phi).unwrap();
        for s in &r.steps {
            assert!(s.dissipation.abs() < 1e-14);
            assert!((s.energy_before - s.energy_after).abs() < 1e-14);
        }
        assert!(r.holds());
    }

    #[test]
    fn heat_energy_decreases() {
        let g = Grid::new_1d(128, 1.0).unwrap();
        let u = ScalarField::from_fn(g, |p| (PI * p[0]).sin() + 0.3 * (5.0 * PI * p[0]).sin());
        let phi = Nonlinearity::identity();
        let a = DiffusionTensor::identity();
        for bc in [BoundaryCondition::NoFlux, BoundaryCondition::DirichletZero] {
            let opts = SchemeOptions { bc, ..Default::default() };
            let run = run_scheme(&u, 0.0, 0.2, 20, &a, &phi, &opts).unwrap();
            let r = energy_report(&run, &a, &phi).unwrap();
            assert!(r.holds(), "{bc:?} worst {}", r.worst_excess());
            assert!(r.energies().windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn anisotropic_porous_2d() {
        let g = Grid::unit(2, 20).unwrap();
        let u = ScalarField::from_fn(g, |p| (0.1 - (p[0] - 0.5).powi(2) - (p[1] - 0.5).powi(2)).max(0.0));
        let phi = Nonlinearity::porous(2.0).unwrap();
        let a = DiffusionTensor::constant([[2.0, 0.0], [0.0, 0.7]]).unwrap();
        let run = run_scheme(&u, 0.0, 0.05, 5, &a, &phi, &SchemeOptions::default()).unwrap();
        let r = energy_report(&run, &a, &phi).unwrap();
        assert!((r.lambda - 1.4).abs() < 1e-14);
        assert!(r.holds(), "worst {}", r.worst_excess());
    }
}
