use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;
use crate::movedom::{image_raster, DiffeoFamily};

/// Largest dyadic fraction `ξ` of `b − a` such that
/// `A_{t+σ}(Ω_{2δ}) ⊂ A_t(Ω_δ)` holds on the raster for all sampled `t` and
/// `σ ∈ {ξ/4, ξ/2, ξ}` with `t + σ ≤ b`. `samples` time points are used.
pub fn time_shift_safety(f: &DiffeoFamily, d: &RasterDomain, delta: f64, samples: usize) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("δ = {delta} must be positive")));
    }
    f.check_grid(d.grid())?;
    let outer = d.eps_interior(delta);
    let inner = d.eps_interior(2.0 * delta);
    if inner.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let n = samples.max(2);
    let times: Vec<f64> = (0..=n).map(|i| f.a + (f.b - f.a) * i as f64 / n as f64).collect();
    let hosts: Vec<RasterDomain> = times.par_iter().map(|&t| image_raster(f, &outer, t)).collect();
    let len = f.b - f.a;
    for j in 0..=40 {
        let xi = len / 2f64.powi(j);
        let ok = times.par_iter().zip(&hosts).all(|(&t, host)| {
            [0.25 * xi, 0.5 * xi, xi]
                .iter()
                .filter(|&&s| t + s <= f.b + 1e-12 * len)
                .all(|&s| image_raster(f, &inner, t + s).is_subset_of(host))
        });
        if ok {
            return Ok(xi);
        }
    }
    Err(Error::Postcondition(format!("no admissible time shift for δ = {delta}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn identity_is_capped() {
        let g = Grid::unit(2, 64).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.3);
        assert_eq!(time_shift_safety(&DiffeoFamily::identity(0.0, 2.0).unwrap(), &d, 0.05, 16).unwrap(), 2.0);
    }

    #[test]
    fn translation_matches_speed() {
        let g = Grid::unit(2, 128).unwrap();
        let d = RasterDomain::disk(g, [0.4, 0.5], 0.25);
        let f = DiffeoFamily::preset("translation:0.2:0", 0.0, 1.0, g.box_center()).unwrap();
        for delta in [0.04, 0.08] {
            let xi = time_shift_safety(&f, &d, delta, 32).unwrap();
            let expect = delta / 0.2;
            assert!(xi >= expect / 2.0 && xi <= expect * 2.0, "{delta} {xi}");
        }
    }

    #[test]
    fn dilation_inclusion_holds_on_64_samples() {
        let g = Grid::unit(2, 96).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.3);
        let f = DiffeoFamily::preset("dilation:0.2", 0.0, 2.0 * PI, g.box_center()).unwrap();
        let delta = 0.05;
        let xi = time_shift_safety(&f, &d, delta, 64).unwrap();
        assert!(xi > 0.0);
        let (outer, inner) = (d.eps_interior(delta), d.eps_interior(2.0 * delta));
        for i in 0..64 {
            let t = f.a + (f.b - f.a) * i as f64 / 64.0;
            if t + xi <= f.b {
                assert!(image_raster(&f, &inner, t + xi).is_subset_of(&image_raster(&f, &outer, t)));
            }
        }
    }
}
