//! Uniform Cartesian grids, cell-centred scalar fields, raster domains,
//! MAC-staggered vector fields, discrete calculus and norms.
//!
//! Scalars live at cell centres and vector components on the faces normal to
//! them. A 1D grid is stored as a 2D grid with a single row of unit height and
//! no `y` faces, so every routine handles both dimensions with one code path.

mod calculus;
mod edt;
pub mod io;
mod norms;
mod raster;

use std::sync::Arc;

use crate::error::{Error, Result};

pub use calculus::{divergence, gradient, StaggeredVectorField};
pub use edt::squared_distance_transform;
pub(crate) use norms::CellLaplacian;
pub use norms::{
    dirichlet_laplacian_apply, h_minus_m_norm, h_plus_m_norm, lp_norm, spectral_h_minus_m,
    SpectralNorm,
};
pub use raster::{BoundaryFace, RasterDomain};

/// Uniform Cartesian grid on `[0, Lx] (x [0, Ly])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    extent: [f64; 2],
    spacing: [f64; 2],
}

impl Grid {
    pub fn new_1d(nx: usize, lx: f64) -> Result<Self> {
        if nx == 0 || !(lx > 0.0) || !lx.is_finite() {
            return Err(Error::InvalidGrid(format!("1D grid needs nx > 0 and L > 0, got {nx}, {lx}")));
        }
        Ok(Self { dim: 1, cells: [nx, 1], extent: [lx, 1.0], spacing: [lx / nx as f64, 1.0] })
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "2D grid needs positive cells and extents, got {nx}x{ny}, {lx}x{ly}"
            )));
        }
        Ok(Self {
            dim: 2,
            cells: [nx, ny],
            extent: [lx, ly],
            spacing: [lx / nx as f64, ly / ny as f64],
        })
    }

    /// Unit interval or unit square with `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        match dim {
            1 => Self::new_1d(n, 1.0),
            2 => Self::new_2d(n, n, 1.0, 1.0),
            _ => Err(Error::InvalidGrid(format!("dimension {dim} not supported"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    /// Rows; 1 for a 1D grid.
    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn extent(&self) -> [f64; 2] {
        self.extent
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        if self.dim == 1 {
            self.spacing[0]
        } else {
            self.spacing[0].min(self.spacing[1])
        }
    }

    pub fn cell_count(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    /// Cell measure `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    pub fn measure(&self) -> f64 {
        self.cell_volume() * self.cell_count() as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.cells[0], idx / self.cells[0])
    }

    /// Cell centre. The `y` coordinate of a 1D grid is `0.5`.
    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        [(i as f64 + 0.5) * self.spacing[0], (j as f64 + 0.5) * self.spacing[1]]
    }

    pub fn centers(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.cell_count()).map(move |c| self.center(c))
    }

    /// Cell containing `p`, if any. Only `x` is read on a 1D grid.
    pub fn cell_of_point(&self, p: [f64; 2]) -> Option<usize> {
        let fx = p[0] / self.spacing[0];
        if !(fx >= 0.0) || fx >= self.cells[0] as f64 {
            return None;
        }
        let i = fx as usize;
        let j = if self.dim == 1 {
            0
        } else {
            let fy = p[1] / self.spacing[1];
            if !(fy >= 0.0) || fy >= self.cells[1] as f64 {
                return None;
            }
            fy as usize
        };
        Some(self.index(i, j))
    }

    /// Geometric centre of the box.
    pub fn box_center(&self) -> [f64; 2] {
        if self.dim == 1 {
            [0.5 * self.extent[0], 0.5]
        } else {
            [0.5 * self.extent[0], 0.5 * self.extent[1]]
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Cell-centred scalar field, optionally restricted to a raster domain.
///
/// Cells outside the mask always hold exactly `0`.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    mask: Option<Arc<RasterDomain>>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.cell_count()], mask: None }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self { grid, values: vec![c; grid.cell_count()], mask: None }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.cell_count(),
                values.len()
            )));
        }
        Ok(Self { grid, values, mask: None })
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.centers().map(f).collect();
        Self { grid, values, mask: None }
    }

    /// Restricts the field to `mask`, zeroing every outside cell.
    pub fn with_mask(mut self, mask: Arc<RasterDomain>) -> Result<Self> {
        self.grid.check_same(mask.grid())?;
        for (v, inside) in self.values.iter_mut().zip(mask.membership()) {
            if !inside {
                *v = 0.0;
            }
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mask(&self) -> Option<&Arc<RasterDomain>> {
        self.mask.as_ref()
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Applies `f` pointwise; the mask is kept and re-enforced.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = match &self.mask {
            None => self.values.iter().map(|&v| f(v)).collect(),
            Some(m) => self
                .values
                .iter()
                .zip(m.membership())
                .map(|(&v, inside)| if *inside { f(v) } else { 0.0 })
                .collect(),
        };
        Self { grid: self.grid, values, mask: self.mask.clone() }
    }

    /// Pointwise combination. The result carries `self`'s mask.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values: Vec<f64> =
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        let out = Self { grid: self.grid, values, mask: None };
        match &self.mask {
            Some(m) => out.with_mask(m.clone()),
            None => Ok(out),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `⟨f, g⟩ = Σ f g h^d`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume())
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Drops the mask (the values are left untouched).
    pub fn unmasked(&self) -> Self {
        Self { grid: self.grid, values: self.values.clone(), mask: None }
    }
}
