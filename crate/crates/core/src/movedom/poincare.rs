use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient, lp_norm, CellLaplacian, RasterDomain, ScalarField};
use crate::linalg;
use crate::rng;

use super::diffeo::DiffeoFamily;
use super::geometry::{bilipschitz, jacobian_bounds, JacobianBounds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareEstimate {
    /// Smallest nonzero Neumann eigenvalue.
    pub lambda1: f64,
    /// `1/√λ₁`.
    pub constant: f64,
    pub iterations: usize,
}

/// Block inverse iteration with Rayleigh-Ritz for the first nonzero
/// eigenvalue of the Neumann Laplacian on the mean-zero subspace. A block is
/// used because symmetric domains have (nearly) repeated low eigenvalues;
/// iteration stops when the lowest Ritz value settles to 1e-10.
pub fn poincare_estimate(d: &RasterDomain) -> Result<PoincareEstimate> {
    if d.cell_count() < 2 {
        return Err(Error::InvalidParameter("Poincaré constant needs at least two cells".into()));
    }
    let comps = d.component_count();
    if comps > 1 {
        return Err(Error::Disconnected(comps));
    }
    let op = CellLaplacian::neumann(d)?;
    let n = op.len();
    let p = (n - 1).min(4);
    let mut r = rng::seeded(0x5eed);
    let mut block: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    orthonormalize(&mut block);
    let mut lambda = f64::INFINITY;
    for it in 1..=500 {
        let mut next = block.par_iter().map(|x| op.solve_mean_zero(x, 1e-12)).collect::<Result<Vec<_>>>()?;
        orthonormalize(&mut next);
        let lx: Vec<Vec<f64>> = next
            .iter()
            .map(|x| {
                let mut y = vec![0.0; n];
                op.apply(x, &mut y);
                y
            })
            .collect();
        let h = nalgebra::DMatrix::from_fn(p, p, |i, j| 0.5 * (linalg::dot(&next[i], &lx[j]) + linalg::dot(&next[j], &lx[i])));
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        block = order
            .iter()
            .map(|&k| (0..n).map(|c| (0..p).map(|i| eig.eigenvectors[(i, k)] * next[i][c]).sum()).collect())
            .collect();
        let low = eig.eigenvalues[order[0]];
        if !(low > 1e-12) {
            return Err(Error::Disconnected(comps));
        }
        if (low - lambda).abs() <= 1e-10 * low {
            return Ok(PoincareEstimate { lambda1: low, constant: low.powf(-0.5), iterations: it });
        }
        lambda = low;
    }
    Err(Error::SolverFailed("inverse iteration did not settle in 500 steps".into()))
}

/// Mean removal then modified Gram-Schmidt.
fn orthonormalize(block: &mut [Vec<f64>]) {
    for k in 0..block.len() {
        let (done, rest) = block.split_at_mut(k);
        let v = &mut rest[0];
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|a| *a -= m);
        for _ in 0..2 {
            for q in done.iter() {
                let c = linalg::dot(q, v);
                linalg::axpy(-c, q, v);
            }
        }
        let nrm = linalg::norm2(v);
        v.iter_mut().for_each(|a| *a /= nrm);
    }
}

pub fn poincare_constant(d: &RasterDomain) -> Result<f64> {
    Ok(poincare_estimate(d)?.constant)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareSweep {
    pub gamma: f64,
    /// `(ε, C(Ω_ε))`.
    pub entries: Vec<(f64, f64)>,
    /// Empirical `C_{Ω,γ}`.
    pub max: f64,
}

impl PoincareSweep {
    /// `max/min` over the sweep.
    pub fn spread(&self) -> f64 {
        let lo = self.entries.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
        self.max / lo
    }
}

pub fn uniform_poincare_sweep(d: &RasterDomain, eps_list: &[f64], gamma: f64) -> Result<PoincareSweep> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("empty ε list".into()));
    }
    if let Some(e) = eps_list.iter().find(|&&e| !(e >= 0.0 && e < gamma)) {
        return Err(Error::InvalidParameter(format!("ε = {e} is outside [0, γ = {gamma})")));
    }
    let entries: Vec<(f64, f64)> = eps_list
        .par_iter()
        .map(|&e| Ok((e, poincare_constant(&d.eps_interior(e))?)))
        .collect::<Result<_>>()?;
    let max = entries.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(PoincareSweep { gamma, entries, max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportedPoincare {
    pub reference: f64,
    pub bounds: JacobianBounds,
    pub grad_sup: f64,
    /// `√(β/α)·C_{Ω,γ}·sup|∇Θ|` with the sampled (unpadded) `α`, `β`.
    pub value: f64,
}

pub fn transported_poincare(
    f: &DiffeoFamily,
    d: &RasterDomain,
    sweep: &PoincareSweep,
    per_unit: usize,
) -> Result<TransportedPoincare> {
    let bounds = jacobian_bounds(f, d, per_unit)?;
    let grad_sup = bilipschitz(f, d, per_unit.min(16))?.grad_sup;
    let value = (bounds.sampled_max / bounds.sampled_min).sqrt() * sweep.max * grad_sup;
    Ok(TransportedPoincare { reference: sweep.max, bounds, grad_sup, value })
}

/// `p*` with the `p + 1` replacement when `p ≥ d`.
pub fn sobolev_exponent(p: f64, dim: usize) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let d = dim as f64;
    Ok(if p < d { d * p / (d - p) } else { p + 1.0 })
}

/// `K_p = S_Ω β^{1/p*} α^{-1/p}` with the sampled `α`, `β`.
pub fn sobolev_transport_constant(p: f64, f: &DiffeoFamily, d: &RasterDomain, s_omega: f64, per_unit: usize) -> Result<f64> {
    let ps = sobolev_exponent(p, d.grid().dim())?;
    let b = jacobian_bounds(f, d, per_unit)?;
    Ok(s_omega * b.sampled_max.powf(1.0 / ps) * b.sampled_min.powf(-1.0 / p))
}

/// Largest `‖u‖_{p*} / (‖u‖_p + ‖∇u‖_p)` over seeded random smooth fields on `d`.
pub fn estimate_sobolev_constant(d: &RasterDomain, p: f64, count: usize, seed: u64) -> Result<f64> {
    let ps = sobolev_exponent(p, d.grid().dim())?;
    let g = *d.grid();
    let mask = std::sync::Arc::new(d.clone());
    let mut r = rng::seeded(seed);
    let [lx, ly] = g.extent();
    let mut best = 0.0f64;
    for _ in 0..count {
        let modes: Vec<(f64, f64, f64)> =
            (0..6).map(|_| (r.random_range(-1.0..1.0), r.random_range(0..4) as f64, r.random_range(0..4) as f64)).collect();
        let u = ScalarField::from_fn(g, |x| {
            modes
                .iter()
                .map(|&(a, k, l)| a * (std::f64::consts::PI * k * x[0] / lx).cos() * (std::f64::consts::PI * l * x[1] / ly).cos())
                .sum()
        })
        .with_mask(mask.clone())?;
        let den = lp_norm(&u, p)? + gradient(&u).lp_norm(p, Some(d))?;
        if den > 0.0 {
            best = best.max(lp_norm(&u, ps)? / den);
        }
    }
    Ok(best)
}
