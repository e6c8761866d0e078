use std::sync::Arc;

use super::raster::face_weights;
use super::{Grid, RasterDomain, ScalarField};
use crate::error::{Error, Result};

/// MAC-staggered vector field: `ux` on the `(nx+1) x ny` vertical faces,
/// `uy` on the `nx x (ny+1)` horizontal faces (empty in 1D).
///
/// The `x` face `j*(nx+1)+i` sits between cells `i-1` and `i` of row `j`;
/// the `y` face `j*nx+i` sits between rows `j-1` and `j` of column `i`.
#[derive(Debug, Clone)]
pub struct StaggeredVectorField {
    grid: Grid,
    ux: Vec<f64>,
    uy: Vec<f64>,
    domain: Option<Arc<RasterDomain>>,
}

impl StaggeredVectorField {
    pub fn zeros(grid: Grid) -> Self {
        let ny_faces = if grid.dim() == 2 { grid.nx() * (grid.ny() + 1) } else { 0 };
        Self {
            grid,
            ux: vec![0.0; (grid.nx() + 1) * grid.ny()],
            uy: vec![0.0; ny_faces],
            domain: None,
        }
    }

    pub fn from_faces(grid: Grid, ux: Vec<f64>, uy: Vec<f64>) -> Result<Self> {
        let nxf = (grid.nx() + 1) * grid.ny();
        let nyf = if grid.dim() == 2 { grid.nx() * (grid.ny() + 1) } else { 0 };
        if ux.len() != nxf || uy.len() != nyf {
            return Err(Error::InvalidGrid(format!(
                "face arrays have {} / {} entries, expected {nxf} / {nyf}",
                ux.len(),
                uy.len()
            )));
        }
        Ok(Self { grid, ux, uy, domain: None })
    }

    /// Samples a continuous vector field at face midpoints.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::zeros(grid);
        let [hx, hy] = grid.spacing();
        let (nx, ny) = (grid.nx(), grid.ny());
        for j in 0..ny {
            for i in 0..=nx {
                out.ux[j * (nx + 1) + i] = f([i as f64 * hx, (j as f64 + 0.5) * hy])[0];
            }
        }
        if grid.dim() == 2 {
            for j in 0..=ny {
                for i in 0..nx {
                    out.uy[j * nx + i] = f([(i as f64 + 0.5) * hx, j as f64 * hy])[1];
                }
            }
        }
        out
    }

    /// Attaches a domain. Faces not touching the domain are zeroed.
    pub fn with_domain(mut self, d: Arc<RasterDomain>) -> Result<Self> {
        self.grid.check_same(d.grid())?;
        let [wx, wy] = d.face_weights();
        for (u, w) in self.ux.iter_mut().zip(&wx) {
            if *w == 0.0 {
                *u = 0.0;
            }
        }
        for (u, w) in self.uy.iter_mut().zip(&wy) {
            if *w == 0.0 {
                *u = 0.0;
            }
        }
        self.domain = Some(d);
        Ok(self)
    }

    pub fn without_domain(&self) -> Self {
        Self { grid: self.grid, ux: self.ux.clone(), uy: self.uy.clone(), domain: None }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn ux(&self) -> &[f64] {
        &self.ux
    }

    pub fn uy(&self) -> &[f64] {
        &self.uy
    }

    pub fn ux_mut(&mut self) -> &mut [f64] {
        &mut self.ux
    }

    pub fn uy_mut(&mut self) -> &mut [f64] {
        &mut self.uy
    }

    pub fn domain(&self) -> Option<&Arc<RasterDomain>> {
        self.domain.as_ref()
    }

    /// Face component for `axis`.
    pub fn component(&self, axis: usize) -> &[f64] {
        if axis == 0 {
            &self.ux
        } else {
            &self.uy
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            ux: self.ux.iter().zip(&other.ux).map(|(&a, &b)| f(a, b)).collect(),
            uy: self.uy.iter().zip(&other.uy).map(|(&a, &b)| f(a, b)).collect(),
            domain: self.domain.clone(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            ux: self.ux.iter().map(|v| s * v).collect(),
            uy: self.uy.iter().map(|v| s * v).collect(),
            domain: self.domain.clone(),
        }
    }

    fn weights(&self, d: Option<&RasterDomain>) -> [Vec<f64>; 2] {
        match d.or(self.domain.as_deref()) {
            Some(d) => d.face_weights(),
            None => face_weights(&self.grid, None),
        }
    }

    /// Face-quadrature inner product over `d` (or the attached domain, or
    /// the whole grid). Boundary faces carry half weight, so a constant unit
    /// field on a domain of measure 1 has norm exactly 1.
    pub fn inner(&self, other: &Self, d: Option<&RasterDomain>) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let [wx, wy] = self.weights(d);
        let sx: f64 = self.ux.iter().zip(&other.ux).zip(&wx).map(|((a, b), w)| a * b * w).sum();
        let sy: f64 = self.uy.iter().zip(&other.uy).zip(&wy).map(|((a, b), w)| a * b * w).sum();
        Ok(sx + sy)
    }

    pub fn l2_norm(&self, d: Option<&RasterDomain>) -> f64 {
        self.inner(self, d).map(f64::sqrt).unwrap_or(0.0)
    }

    /// Midpoint `L^p` norm with the same face weights as [`Self::inner`].
    pub fn lp_norm(&self, p: f64, d: Option<&RasterDomain>) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        let [wx, wy] = self.weights(d);
        let it = self.ux.iter().zip(&wx).chain(self.uy.iter().zip(&wy)).filter(|(_, w)| **w > 0.0);
        if p.is_infinite() {
            return Ok(it.fold(0.0, |m, (v, _)| m.max(v.abs())));
        }
        Ok(it.map(|(v, w)| v.abs().powf(p) * w).sum::<f64>().powf(1.0 / p))
    }

    pub fn max_abs(&self) -> f64 {
        self.ux.iter().chain(&self.uy).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Cell-averaged components, for output and pointwise sampling.
    pub fn cell_average(&self) -> [ScalarField; 2] {
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut ax = vec![0.0; g.cell_count()];
        let mut ay = vec![0.0; g.cell_count()];
        for j in 0..ny {
            for i in 0..nx {
                let c = g.index(i, j);
                ax[c] = 0.5 * (self.ux[j * (nx + 1) + i] + self.ux[j * (nx + 1) + i + 1]);
                if g.dim() == 2 {
                    ay[c] = 0.5 * (self.uy[j * nx + i] + self.uy[(j + 1) * nx + i]);
                }
            }
        }
        [ScalarField::from_values(g, ax).unwrap(), ScalarField::from_values(g, ay).unwrap()]
    }
}

/// Face gradient. Only faces with both neighbours in the domain (the
/// field's mask, or the whole grid) carry a difference quotient; every other
/// face is zero, so no stencil reaches across the mask.
pub fn gradient(f: &ScalarField) -> StaggeredVectorField {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let [hx, hy] = g.spacing();
    let v = f.values();
    let member = |c: usize| f.mask().is_none_or(|m| m.contains(c));
    let mut out = StaggeredVectorField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let (l, r) = (g.index(i - 1, j), g.index(i, j));
            if member(l) && member(r) {
                out.ux[j * (nx + 1) + i] = (v[r] - v[l]) / hx;
            }
        }
    }
    if g.dim() == 2 {
        for j in 1..ny {
            for i in 0..nx {
                let (b, a) = (g.index(i, j - 1), g.index(i, j));
                if member(b) && member(a) {
                    out.uy[j * nx + i] = (v[a] - v[b]) / hy;
                }
            }
        }
    }
    if let Some(m) = f.mask() {
        out.domain = Some(m.clone());
    }
    out
}

/// Cell divergence over all faces of each cell.
pub fn divergence(u: &StaggeredVectorField) -> ScalarField {
    let g = *u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let [hx, hy] = g.spacing();
    let mut out = vec![0.0; g.cell_count()];
    for j in 0..ny {
        for i in 0..nx {
            let mut d = (u.ux[j * (nx + 1) + i + 1] - u.ux[j * (nx + 1) + i]) / hx;
            if g.dim() == 2 {
                d += (u.uy[(j + 1) * nx + i] - u.uy[j * nx + i]) / hy;
            }
            out[g.index(i, j)] = d;
        }
    }
    ScalarField::from_values(g, out).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::unit(2, 16).unwrap();
        let f = ScalarField::constant(g, 3.5);
        assert_eq!(gradient(&f).max_abs(), 0.0);
    }

    #[test]
    fn gradient_of_linear_is_exact() {
        let g = Grid::unit(2, 32).unwrap();
        let f = ScalarField::from_fn(g, |p| p[0]);
        let gr = gradient(&f);
        let (nx, ny) = (g.nx(), g.ny());
        for j in 0..ny {
            for i in 1..nx {
                assert!((gr.ux()[j * (nx + 1) + i] - 1.0).abs() < 1e-12);
            }
        }
        assert!(gr.uy().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn constant_field_divergence_free_and_unit_norm() {
        let g = Grid::unit(2, 64).unwrap();
        let u = StaggeredVectorField::from_fn(g, |_| [1.0, 0.0]);
        assert!(divergence(&u).max_abs() < 1e-13);
        assert!((u.l2_norm(None) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_faces() {
        let g = Grid::new_1d(10, 1.0).unwrap();
        let u = StaggeredVectorField::zeros(g);
        assert_eq!(u.ux().len(), 11);
        assert!(u.uy().is_empty());
    }

    #[test]
    fn mask_blocks_stencils() {
        let g = Grid::unit(2, 16).unwrap();
        let d = Arc::new(RasterDomain::disk(g, [0.5, 0.5], 0.3));
        let f = ScalarField::constant(g, 1.0).with_mask(d).unwrap();
        assert_eq!(gradient(&f).max_abs(), 0.0);
    }

    proptest! {
        #[test]
        fn skew_adjoint_for_zero_boundary(seed in 0u64..1000) {
            let g = Grid::unit(2, 12).unwrap();
            let a = seed as f64 * 0.37;
            let f = ScalarField::from_fn(g, |p| (3.0 * p[0] + a).sin() * (2.0 * p[1] - a).cos());
            let mut u = StaggeredVectorField::from_fn(g, |p| {
                [(p[0] * 5.0 + a).cos() * p[1], (p[1] * 4.0 - a).sin() * p[0]]
            });
            let (nx, ny) = (g.nx(), g.ny());
            for j in 0..ny {
                u.ux_mut()[j * (nx + 1)] = 0.0;
                u.ux_mut()[j * (nx + 1) + nx] = 0.0;
            }
            for i in 0..nx {
                u.uy_mut()[i] = 0.0;
                u.uy_mut()[ny * nx + i] = 0.0;
            }
            let lhs = divergence(&u).inner(&f).unwrap();
            let rhs = -u.inner(&gradient(&f), None).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
