//! Synthetic families with known behaviour, shared by tests, examples and the
//! experiment runner.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::divfree::{clamp_nodes, curl_of_nodes};
use crate::error::Result;
use crate::grid::{Grid, RasterDomain, ScalarField, StaggeredVectorField};
use crate::movedom::{image_raster, DiffeoFamily, NonCylindricalDomain};
use crate::series::{StepTimeSeries, VectorSeries};

use super::{ScalarFamily, VectorFamily};

/// `f_n = f + g/n`.
pub fn perturbed(f: &StepTimeSeries, g: &StepTimeSeries, labels: &[usize]) -> Result<ScalarFamily> {
    let members = labels
        .iter()
        .map(|&n| f.zip_map(g, |a, b| a.add(&b.scale(1.0 / n as f64))))
        .collect::<Result<Vec<_>>>()?;
    ScalarFamily::new(labels.to_vec(), members)
}

/// `f_n(t, x) = base(x) + sin(2πnt)·g(x)` sampled at step midpoints.
pub fn oscillating(base: &ScalarField, g: &ScalarField, a: f64, b: f64, steps: usize, labels: &[usize]) -> Result<ScalarFamily> {
    let members = labels
        .iter()
        .map(|&n| {
            StepTimeSeries::sample_midpoints(a, b, steps, |t| {
                base.add(&g.scale((2.0 * PI * n as f64 * (t - a) / (b - a)).sin())).expect("shared grid")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarFamily::new(labels.to_vec(), members)
}

/// A constant family restricted to the slices of `nc`.
pub fn on_slices(nc: &NonCylindricalDomain, f: impl Fn(f64, [f64; 2]) -> f64 + Sync) -> Result<StepTimeSeries> {
    let g = *nc.reference().grid();
    let (a, b) = nc.interval();
    let slices = (0..nc.steps())
        .map(|k| {
            let t = nc.time(k);
            ScalarField::from_fn(g, |x| f(t, x)).with_mask(Arc::new(nc.slice(k).clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    StepTimeSeries::new(a, b, slices)
}

/// `C^∞` bump `exp(1 − 1/(1 − s²))` on `|s| < 1`, peak 1.
pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Bumps concentrating on the lateral boundary: member `n` is a ring of
/// width `1/(2n)` at depth `1/n` inside each slice, normalised in `L^p(Ω̂)`.
pub fn boundary_concentrating(nc: &NonCylindricalDomain, labels: &[usize], p: f64) -> Result<ScalarFamily> {
    let members = labels
        .iter()
        .map(|&n| {
            let depth = 1.0 / n as f64;
            let g = *nc.reference().grid();
            let (a, b) = nc.interval();
            let slices = (0..nc.steps())
                .map(|k| {
                    let d = nc.slice(k);
                    let sd = d.signed_distance();
                    let vals = (0..g.cell_count())
                        .map(|c| if d.contains(c) { bump((sd[c] - depth) * 4.0 * n as f64) } else { 0.0 })
                        .collect();
                    ScalarField::from_values(g, vals)?.with_mask(Arc::new(d.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            let s = StepTimeSeries::new(a, b, slices)?;
            let norm = s.lp_norm(p)?;
            Ok(s.map(|f| f.scale(1.0 / norm)))
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarFamily::new(labels.to_vec(), members)
}

/// The translating-disk geometry used by the Navier-Stokes probe: a disk of
/// radius `0.3` in a box `[0, 1.2] × [0, 1]`, translated by `(0.1, 0)` over
/// `[0, 1]`, `steps` time steps, cell size `h`.
pub fn translating_disk(h: f64, steps: usize) -> Result<NonCylindricalDomain> {
    let (lx, ly) = (1.2, 1.0);
    let g = Grid::new_2d((lx / h).round() as usize, (ly / h).round() as usize, lx, ly)?;
    let d = RasterDomain::disk(g, [0.5, 0.5], 0.3);
    let f = DiffeoFamily::preset("translation:0.1:0", 0.0, 1.0, g.box_center())?;
    NonCylindricalDomain::new(f, d, steps)
}

/// Cells of `A_t(Ω_ε)` for every step of `nc`, shrunk by one more cell.
pub fn common_interior(nc: &NonCylindricalDomain, eps: f64) -> RasterDomain {
    let inner = nc.reference().eps_interior(eps);
    let g = *inner.grid();
    let slices: Vec<RasterDomain> = (0..nc.steps()).map(|k| image_raster(nc.family(), &inner, nc.time(k))).collect();
    let core = (0..g.cell_count()).map(|c| slices.iter().all(|s| s.contains(c))).collect();
    RasterDomain::from_membership(g, core).expect("one entry per cell").eps_interior(g.min_spacing())
}

fn stream_at(g: &Grid, d: &RasterDomain, f: impl Fn([f64; 2]) -> f64) -> Result<StaggeredVectorField> {
    let [hx, hy] = g.spacing();
    let mut psi = Vec::with_capacity((g.nx() + 1) * (g.ny() + 1));
    for j in 0..=g.ny() {
        for i in 0..=g.nx() {
            psi.push(f([i as f64 * hx, j as f64 * hy]));
        }
    }
    clamp_nodes(d, &mut psi);
    curl_of_nodes(g, &psi)?.with_domain(Arc::new(d.clone()))
}

/// Stream function vanishing to second order on the moving circle.
fn disk_stream(nc: &NonCylindricalDomain, t: f64, x: [f64; 2], shape: impl Fn([f64; 2]) -> f64) -> f64 {
    let g = nc.reference().grid();
    let c = nc.family().map(g, t, [0.5, 0.5]);
    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    let w = (0.09 - r2).max(0.0);
    w * w * shape([x[0] - c[0], x[1] - c[1]]) * 100.0
}

/// Zero-trace divergence-free fields on the slices of `nc`:
/// `u_n = curl(ψ + ψ'/n)` (convergent) or `u_n = sin(2πnt)·curl ψ` (oscillating).
pub fn stream_family(nc: &NonCylindricalDomain, labels: &[usize], oscillating: bool) -> Result<VectorFamily> {
    let g = *nc.reference().grid();
    let (a, b) = nc.interval();
    let base = |y: [f64; 2]| 1.0 + 0.5 * (3.0 * y[0] + 1.0).sin() * (2.0 * y[1]).cos();
    let pert = |y: [f64; 2]| 0.5 * (9.0 * y[0]).cos() * (7.0 * y[1] + 0.3).sin();
    let members = labels
        .iter()
        .map(|&n| {
            let slices = (0..nc.steps())
                .map(|k| {
                    let t = nc.time(k);
                    let d = nc.slice(k);
                    if oscillating {
                        let s = (2.0 * PI * n as f64 * (t - a) / (b - a)).sin();
                        Ok(stream_at(&g, d, |x| disk_stream(nc, t, x, base))?.scale(s))
                    } else {
                        stream_at(&g, d, |x| disk_stream(nc, t, x, |y| base(y) + pert(y) / n as f64))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            VectorSeries::new(a, b, slices)
        })
        .collect::<Result<Vec<_>>>()?;
    VectorFamily::new(labels.to_vec(), members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divfree::{divergence_residual, normal_trace};

    #[test]
    fn stream_family_is_divergence_free_with_zero_trace() {
        let nc = translating_disk(0.02, 4).unwrap();
        let fam = stream_family(&nc, &[1, 2], false).unwrap();
        for s in &fam.members {
            for (k, u) in s.slices().iter().enumerate() {
                let d = nc.slice(k);
                assert!(divergence_residual(u, d) < 1e-9);
                assert_eq!(normal_trace(u, d).unwrap().max_abs(), 0.0);
                assert!(u.l2_norm(Some(d)) > 0.1);
            }
        }
    }

    #[test]
    fn boundary_bumps_are_normalised() {
        let nc = translating_disk(0.02, 4).unwrap();
        let fam = boundary_concentrating(&nc, &[4, 8], 2.0).unwrap();
        for s in &fam.members {
            assert!((s.lp_norm(2.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
