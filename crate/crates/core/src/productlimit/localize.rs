use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{RasterDomain, ScalarField};
use crate::series::StepTimeSeries;

/// Cutoff `θ_k` with values in `[0, 1]`, equal to 1 on `K_k = {sdist ≥ plateau}`.
#[derive(Debug, Clone)]
pub struct Cutoff {
    pub theta: ScalarField,
    pub plateau: f64,
    /// `μ(Ω ∖ K_k)`.
    pub complement_measure: f64,
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Smoothstep of the signed distance, with the widest ramp whose support
/// keeps `μ(Ω ∖ K_k) ≤ 1/k`.
pub fn cutoff(d: &RasterDomain, k: usize) -> Result<Cutoff> {
    if k == 0 {
        return Err(Error::InvalidParameter("cutoff index k must be at least 1".into()));
    }
    if d.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let vol = d.grid().cell_volume();
    let sd = d.signed_distance();
    let mut inside: Vec<f64> = d.cells().map(|c| sd[c]).collect();
    inside.sort_by(f64::total_cmp);
    let budget = ((1.0 / k as f64) / vol + 1e-9).floor() as usize;
    let plateau = if budget < inside.len() {
        inside[budget]
    } else {
        inside[inside.len() - 1] * (1.0 + 1e-12) + f64::MIN_POSITIVE
    };
    let values: Vec<f64> = (0..d.grid().cell_count())
        .map(|c| if d.contains(c) { smoothstep(sd[c] / plateau) } else { 0.0 })
        .collect();
    let complement = inside.iter().filter(|&&s| s < plateau).count() as f64 * vol;
    Ok(Cutoff { theta: ScalarField::from_values(*d.grid(), values)?, plateau, complement_measure: complement })
}

/// `θ_k f` slice by slice.
pub fn localize(f: &StepTimeSeries, k: usize, d: &RasterDomain) -> Result<StepTimeSeries> {
    f.grid().check_same(d.grid())?;
    let c = cutoff(d, k)?;
    let mask = Arc::new(d.clone());
    f.try_map(|u| u.mul(&c.theta)?.with_mask(mask.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{lp_norm, Grid};
    use proptest::prelude::*;

    #[test]
    fn cutoff_tends_to_one_on_square() {
        let g = Grid::unit(2, 64).unwrap();
        let d = RasterDomain::full(g);
        let mut prev = f64::INFINITY;
        for k in [2usize, 8, 32, 128, 1024] {
            let c = cutoff(&d, k).unwrap();
            assert!(c.complement_measure <= 1.0 / k as f64 + 1e-12);
            let gap = c.theta.map(|t| 1.0 - t).integral();
            assert!(gap <= prev + 1e-15);
            prev = gap;
        }
        assert!(prev < 0.004);
    }

    #[test]
    fn unit_data_loses_at_most_a_quarter() {
        let g = Grid::unit(2, 48).unwrap();
        let d = RasterDomain::disk(g, [0.5, 0.5], 0.45);
        let one = ScalarField::constant(g, 1.0).with_mask(Arc::new(d.clone())).unwrap();
        let s = StepTimeSeries::constant(0.0, 1.0, 3, one.clone()).unwrap();
        let l = localize(&s, 4, &d).unwrap();
        let c = cutoff(&d, 4).unwrap();
        for slice in l.slices() {
            let lost = one.sub(slice).unwrap().integral();
            assert!(lost <= c.complement_measure + 1e-14);
            assert!(c.complement_measure <= 0.25);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cauchy_schwarz_bound(v in prop::collection::vec(-3.0f64..3.0, 32 * 32), k in 1usize..40) {
            let g = Grid::unit(2, 32).unwrap();
            let d = RasterDomain::full(g);
            let f = ScalarField::from_values(g, v).unwrap();
            let c = cutoff(&d, k).unwrap();
            let diff = f.sub(&f.mul(&c.theta).unwrap()).unwrap();
            let bound = lp_norm(&f, 2.0).unwrap() * c.complement_measure.sqrt();
            prop_assert!(lp_norm(&diff, 1.0).unwrap() <= bound * (1.0 + 1e-12));
        }
    }
}
