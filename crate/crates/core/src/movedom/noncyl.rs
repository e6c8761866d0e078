use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;

use super::diffeo::DiffeoFamily;
use super::geometry::{image_raster, jacobian_bounds};

/// `Ω̂ = ∪_t {t} × A_t(Ω)` sampled at the midpoints of an `N`-step partition.
#[derive(Debug, Clone)]
pub struct NonCylindricalDomain {
    family: DiffeoFamily,
    reference: RasterDomain,
    steps: usize,
    slices: Vec<RasterDomain>,
}

impl NonCylindricalDomain {
    pub fn new(family: DiffeoFamily, reference: RasterDomain, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidParameter("a non-cylindrical domain needs at least one step".into()));
        }
        family.check_grid(reference.grid())?;
        let slices = (0..steps)
            .into_par_iter()
            .map(|k| image_raster(&family, &reference, family.a + (k as f64 + 0.5) * (family.b - family.a) / steps as f64))
            .collect();
        Ok(Self { family, reference, steps, slices })
    }

    pub fn family(&self) -> &DiffeoFamily {
        &self.family
    }

    pub fn reference(&self) -> &RasterDomain {
        &self.reference
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.family.a, self.family.b)
    }

    /// Midpoint of step `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.family.a + (k as f64 + 0.5) * (self.family.b - self.family.a) / self.steps as f64
    }

    pub fn slice(&self, k: usize) -> &RasterDomain {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[RasterDomain] {
        &self.slices
    }

    pub fn slice_at(&self, t: f64) -> RasterDomain {
        image_raster(&self.family, &self.reference, t)
    }

    /// Cells in every slice.
    pub fn common_core(&self) -> RasterDomain {
        let g = *self.reference.grid();
        let inside = (0..g.cell_count()).map(|c| self.slices.iter().all(|s| s.contains(c))).collect();
        RasterDomain::from_membership(g, inside).expect("membership has one entry per cell")
    }

    /// Cells in some slice.
    pub fn hull(&self) -> RasterDomain {
        let g = *self.reference.grid();
        let inside = (0..g.cell_count()).map(|c| self.slices.iter().any(|s| s.contains(c))).collect();
        RasterDomain::from_membership(g, inside).expect("membership has one entry per cell")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelReport {
    pub eps: f64,
    /// `sup_t μ(Ω^t ∖ A_t(Ω_ε))` over the slices.
    pub measured: f64,
    /// `β μ(Ω ∖ Ω_ε)`.
    pub bound: f64,
}

impl PeelReport {
    pub fn holds(&self) -> bool {
        self.measured <= self.bound * 1.02
    }
}

pub fn peel_measure(nc: &NonCylindricalDomain, eps: f64) -> Result<PeelReport> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {eps} must be nonnegative")));
    }
    let d = nc.reference();
    let eroded = d.eps_interior(eps);
    let beta = jacobian_bounds(nc.family(), d, 64)?.beta;
    let bound = beta * d.difference(&eroded)?.measure();
    let measured = (0..nc.steps())
        .into_par_iter()
        .map(|k| {
            let inner = image_raster(nc.family(), &eroded, nc.time(k));
            nc.slice(k).difference(&inner).map(|r| r.measure())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(PeelReport { eps, measured, bound })
}
