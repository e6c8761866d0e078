use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;

use super::diffeo::{singular_values, DiffeoFamily};

/// Sampled range of `|det ∇Θ|`; `alpha`, `beta` carry the 0.99/1.01 safety factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianBounds {
    pub alpha: f64,
    pub beta: f64,
    pub sampled_min: f64,
    pub sampled_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilipschitzInfo {
    pub k: f64,
    pub eta: f64,
    /// Sampled `sup |∇_xΘ|` (operator norm).
    pub grad_sup: f64,
}

fn sample_cells(d: &RasterDomain, max: usize) -> Vec<usize> {
    let cells: Vec<usize> = d.cells().collect();
    let stride = (cells.len() / max).max(1);
    cells.into_iter().step_by(stride).collect()
}

pub fn jacobian_bounds(f: &DiffeoFamily, d: &RasterDomain, per_unit: usize) -> Result<JacobianBounds> {
    let g = *d.grid();
    f.check_grid(&g)?;
    if d.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let cells = sample_cells(d, 1024);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for t in f.time_samples(per_unit) {
        for &c in &cells {
            let j = f.jacobian(&g, t, g.center(c));
            lo = lo.min(j);
            hi = hi.max(j);
        }
    }
    if !(lo > 0.0) {
        return Err(Error::Postcondition(format!("Jacobian degenerates (min {lo:.3e})")));
    }
    Ok(JacobianBounds { alpha: 0.99 * lo, beta: 1.01 * hi, sampled_min: lo, sampled_max: hi })
}

/// `K` from singular values of `∇Θ` and chord ratios over sampled pairs.
pub fn bilipschitz(f: &DiffeoFamily, d: &RasterDomain, per_unit: usize) -> Result<BilipschitzInfo> {
    let g = *d.grid();
    f.check_grid(&g)?;
    if d.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let cells = sample_cells(d, 48);
    let mut k = 1.0f64;
    let mut grad_sup = 0.0f64;
    for t in f.time_samples(per_unit) {
        for (a, &c) in cells.iter().enumerate() {
            let x = g.center(c);
            let (lo, hi) = if g.dim() == 1 {
                let s = f.gradient(&g, t, x)[0][0].abs();
                (s, s)
            } else {
                singular_values(f.gradient(&g, t, x))
            };
            grad_sup = grad_sup.max(hi);
            k = k.max(hi).max(1.0 / lo);
            for &e in &cells[a + 1..] {
                let y = g.center(e);
                let (fx, fy) = (f.map(&g, t, x), f.map(&g, t, y));
                let num = ((fx[0] - fy[0]).powi(2) + (fx[1] - fy[1]).powi(2)).sqrt();
                let den = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                let r = num / den;
                k = k.max(r).max(1.0 / r);
            }
        }
    }
    Ok(BilipschitzInfo { k, eta: 1.0 / k, grad_sup })
}

/// Raster of `A_t(d)`: a cell belongs when its centre pulls back into a cell of `d`.
pub fn image_raster(f: &DiffeoFamily, d: &RasterDomain, t: f64) -> RasterDomain {
    let g = *d.grid();
    let inside = (0..g.cell_count())
        .map(|c| g.cell_of_point(f.inverse(&g, t, g.center(c))).is_some_and(|p| d.contains(p)))
        .collect();
    RasterDomain::from_membership(g, inside).expect("membership has one entry per cell")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramingReport {
    pub eps: f64,
    pub eta: f64,
    pub times: Vec<f64>,
    /// Cells of `Ω^t_{ε/η}` outside `A_t(Ω_ε)` beyond a one-cell band.
    pub inner_violations: Vec<usize>,
    /// Cells of `A_t(Ω_ε)` outside `Ω^t_{ηε}` beyond a one-cell band.
    pub outer_violations: Vec<usize>,
}

impl FramingReport {
    pub fn holds(&self) -> bool {
        self.inner_violations.iter().chain(&self.outer_violations).all(|&v| v == 0)
    }
}

/// `Ω^t_{ε/η} ⊂ A_t(Ω_ε) ⊂ Ω^t_{ηε}` at each sampled time.
pub fn framing_check(f: &DiffeoFamily, d: &RasterDomain, eps: f64, eta: f64, times: &[f64]) -> Result<FramingReport> {
    if !(eps >= 0.0) || !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("framing needs eps >= 0 and eta in (0, 1], got {eps}, {eta}")));
    }
    f.check_grid(d.grid())?;
    let band = d.grid().min_spacing() * std::f64::consts::SQRT_2;
    let inner_eroded = d.eps_interior(eps);
    let counts: Vec<(usize, usize)> = times
        .par_iter()
        .map(|&t| {
            let omega_t = image_raster(f, d, t);
            let mid = image_raster(f, &inner_eroded, t);
            let small = omega_t.eps_interior(eps / eta);
            let large = omega_t.eps_interior(eta * eps);
            (small.excess_over(&mid, band), mid.excess_over(&large, band))
        })
        .collect();
    Ok(FramingReport {
        eps,
        eta,
        times: times.to_vec(),
        inner_violations: counts.iter().map(|c| c.0).collect(),
        outer_violations: counts.iter().map(|c| c.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn disk(n: usize, r: f64) -> RasterDomain {
        let g = Grid::unit(2, n).unwrap();
        RasterDomain::disk(g, g.box_center(), r)
    }

    #[test]
    fn identity_and_rotation_are_isometries() {
        let d = disk(64, 0.3);
        let c = d.grid().box_center();
        for spec in ["identity", "rotation:2.0"] {
            let f = DiffeoFamily::preset(spec, 0.0, 1.0, c).unwrap();
            let j = jacobian_bounds(&f, &d, 64).unwrap();
            assert!((j.sampled_min - 1.0).abs() < 1e-12 && (j.sampled_max - 1.0).abs() < 1e-12);
            let b = bilipschitz(&f, &d, 8).unwrap();
            assert!((b.k - 1.0).abs() < 1e-9, "{spec} {b:?}");
        }
    }

    #[test]
    fn dilation_jacobian_closed_form() {
        let d = disk(64, 0.3);
        let f = DiffeoFamily::preset("dilation:0.25", 0.0, 2.0 * PI, d.grid().box_center()).unwrap();
        let j = jacobian_bounds(&f, &d, 64).unwrap();
        assert!((j.sampled_min - 0.5625).abs() < 1e-4);
        assert!((j.sampled_max - 1.5625).abs() < 1e-4);
        assert!((j.alpha - 0.99 * j.sampled_min).abs() < 1e-15);
        let b = bilipschitz(&f, &d, 16).unwrap();
        assert!((b.k - 1.0 / 0.75).abs() < 1e-3 && (b.grad_sup - 1.25).abs() < 1e-3);
    }

    #[test]
    fn translation_framing_is_tight() {
        let d = disk(128, 0.25);
        let f = DiffeoFamily::preset("translation:0.1:0.05", 0.0, 1.0, d.grid().box_center()).unwrap();
        let r = framing_check(&f, &d, 0.05, 1.0, &f.time_samples(16)).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn dilation_framing_holds() {
        let d = disk(128, 0.25);
        let f = DiffeoFamily::preset("dilation:0.25", 0.0, 2.0 * PI, d.grid().box_center()).unwrap();
        let b = bilipschitz(&f, &d, 8).unwrap();
        let r = framing_check(&f, &d, 0.06, b.eta, &f.time_samples(4)).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
