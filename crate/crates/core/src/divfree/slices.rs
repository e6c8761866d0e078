use rayon::prelude::*;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;
use crate::movedom::{image_raster, NonCylindricalDomain};
use crate::series::VectorSeries;

use super::project_divfree0;

/// Slice-wise projection on `A_t(Ω_δ)` at the step midpoints.
#[derive(Debug, Clone)]
pub struct SliceProjection {
    pub delta: f64,
    pub domains: Vec<RasterDomain>,
    pub input: VectorSeries,
    pub projected: VectorSeries,
    pub surrogates: Vec<f64>,
    /// `‖u(t_k)‖₂` and `‖P u(t_k)‖₂` with the slice face weights.
    pub norms: Vec<f64>,
    pub seminorms: Vec<f64>,
    /// `(∫ ‖γ_n u(t)‖² dt)^{1/2}` with the slice surrogates.
    pub surrogate_l2: f64,
}

impl SliceProjection {
    /// `‖u‖²_{L²L²} − ‖Pu‖²_{L²L²} − surrogate_l2²`, relative to `‖u‖²`.
    pub fn pythagoras_defect(&self) -> f64 {
        let n = self.norm().powi(2);
        let p = self.seminorm().powi(2);
        (n - p - self.surrogate_l2.powi(2)).abs() / n.max(1e-300)
    }

    fn time_l2(&self, v: &[f64]) -> f64 {
        (self.input.delta() * v.iter().map(|x| x * x).sum::<f64>()).sqrt()
    }

    /// `‖u‖_{L²(Ω̂_δ)}`.
    pub fn norm(&self) -> f64 {
        self.time_l2(&self.norms)
    }

    /// `‖P u‖_{L²(Ω̂_δ)}`.
    pub fn seminorm(&self) -> f64 {
        self.time_l2(&self.seminorms)
    }
}

pub fn per_slice_project(u: &VectorSeries, nc: &NonCylindricalDomain, delta: f64) -> Result<SliceProjection> {
    if u.steps() != nc.steps() || u.interval() != nc.interval() {
        return Err(Error::PartitionMismatch(format!(
            "{} steps on {:?} against a domain sampled with {} steps on {:?}",
            u.steps(),
            u.interval(),
            nc.steps(),
            nc.interval()
        )));
    }
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must be nonnegative")));
    }
    let inner = nc.reference().eps_interior(delta);
    let domains: Vec<RasterDomain> =
        (0..nc.steps()).into_par_iter().map(|k| image_raster(nc.family(), &inner, nc.time(k))).collect();
    let results = u
        .slices()
        .par_iter()
        .zip(&domains)
        .map(|(s, d)| {
            let p = project_divfree0(s, d)?;
            let s = s.clone().with_domain(Arc::new(d.clone()))?;
            let (n, m) = (s.l2_norm(Some(d)), p.projected.l2_norm(Some(d)));
            Ok((s, p.projected, p.surrogate, n, m))
        })
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = u.interval();
    let mut input = Vec::with_capacity(results.len());
    let mut projected = Vec::with_capacity(results.len());
    let mut surrogates = Vec::with_capacity(results.len());
    let mut norms = Vec::with_capacity(results.len());
    let mut seminorms = Vec::with_capacity(results.len());
    for (i, p, s, n, m) in results {
        input.push(i);
        projected.push(p);
        surrogates.push(s);
        norms.push(n);
        seminorms.push(m);
    }
    let surrogate_l2 = (u.delta() * surrogates.iter().map(|s| s * s).sum::<f64>()).sqrt();
    Ok(SliceProjection {
        delta,
        domains,
        input: VectorSeries::new(a, b, input)?,
        projected: VectorSeries::new(a, b, projected)?,
        surrogates,
        norms,
        seminorms,
        surrogate_l2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeReport {
    pub norm: f64,
    pub seminorm: f64,
    pub surrogate: f64,
    pub constant: f64,
    /// `N̂(u) + (1 + C)·surrogate − ‖u‖`.
    pub slack: f64,
}

impl SpaceTimeReport {
    pub fn holds(&self) -> bool {
        self.slack >= -1e-8 * self.norm.max(1e-300)
    }
}

/// Slice-wise dual-norm inequality integrated in time, with constant `c`.
pub fn space_time_check(p: &SliceProjection, c: f64) -> SpaceTimeReport {
    let (norm, seminorm) = (p.norm(), p.seminorm());
    SpaceTimeReport {
        norm,
        seminorm,
        surrogate: p.surrogate_l2,
        constant: c,
        slack: seminorm + (1.0 + c) * p.surrogate_l2 - norm,
    }
}
