//! Divergence-free fields on MAC faces: normal traces, Neumann-harmonic
//! extension, the projection onto zero-trace fields and the dual seminorm.

mod slices;
mod suite;

pub use slices::{per_slice_project, space_time_check, SliceProjection, SpaceTimeReport};
pub use suite::{projection_suite, SuiteReport, SuiteRow};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{divergence, BoundaryFace, CellLaplacian, Grid, RasterDomain, ScalarField, StaggeredVectorField};
use crate::rng;
use crate::synth;

/// One outward normal value per boundary face of a raster.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub faces: Vec<BoundaryFace>,
    pub values: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(d: &RasterDomain) -> Self {
        let faces = d.boundary_faces();
        let values = vec![0.0; faces.len()];
        Self { faces, values }
    }

    /// `Σ g·|face|`.
    pub fn net_flux(&self) -> f64 {
        self.faces.iter().zip(&self.values).map(|(f, g)| f.length * g).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.faces.iter().zip(&self.values).map(|(f, g)| f.length * g.abs()).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { faces: self.faces.clone(), values: self.values.iter().map(|v| s * v).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_compatible(&self) -> bool {
        self.net_flux().abs() <= 1e-10 * self.total_variation().max(1e-300)
    }
}

fn face_value(u: &StaggeredVectorField, f: &BoundaryFace) -> f64 {
    u.component(f.axis)[f.face]
}

/// Outward normal component on every boundary face of `d`.
pub fn normal_trace(u: &StaggeredVectorField, d: &RasterDomain) -> Result<BoundaryData> {
    u.grid().check_same(d.grid())?;
    let faces = d.boundary_faces();
    let values = faces.iter().map(|f| f.sign * face_value(u, f)).collect();
    Ok(BoundaryData { faces, values })
}

/// Max cell divergence of `u` over `d`.
pub fn divergence_residual(u: &StaggeredVectorField, d: &RasterDomain) -> f64 {
    let div = divergence(u);
    d.cells().map(|c| div.get(c).abs()).fold(0.0, f64::max)
}

fn check_connected(d: &RasterDomain) -> Result<()> {
    if d.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let n = d.component_count();
    if n > 1 {
        return Err(Error::Disconnected(n));
    }
    Ok(())
}

/// Harmonic extension `v` and the correction field `c`: `∇v` on interior
/// faces, the prescribed normal value on boundary faces. `div c = 0` on `d`
/// and `c·n = g`.
fn harmonic_correction(g: &BoundaryData, d: &RasterDomain) -> Result<(ScalarField, StaggeredVectorField)> {
    check_connected(d)?;
    if !g.is_compatible() {
        return Err(Error::IncompatibleData(g.net_flux()));
    }
    let grid = *d.grid();
    let vol = grid.cell_volume();
    let mut rhs_full = vec![0.0; grid.cell_count()];
    for (f, v) in g.faces.iter().zip(&g.values) {
        rhs_full[f.cell] += v * f.length / vol;
    }
    let op = CellLaplacian::neumann(d)?;
    let rhs: Vec<f64> = op.cells().iter().map(|&c| rhs_full[c]).collect();
    let v = if rhs.iter().all(|&b| b == 0.0) { vec![0.0; rhs.len()] } else { op.solve_mean_zero(&rhs, 1e-13)? };
    let mask = Arc::new(d.clone());
    let vfield = ScalarField::from_values(grid, op.scatter(&v, grid.cell_count()))?.with_mask(mask.clone())?;
    let mut c = crate::grid::gradient(&vfield);
    for (f, val) in g.faces.iter().zip(&g.values) {
        let comp = if f.axis == 0 { c.ux_mut() } else { c.uy_mut() };
        comp[f.face] = f.sign * val;
    }
    Ok((vfield, c.with_domain(mask)?))
}

/// Mean-zero `v` with `Δv = 0` in `d` and `∂_n v = g` on the boundary.
pub fn neumann_harmonic(g: &BoundaryData, d: &RasterDomain) -> Result<ScalarField> {
    Ok(harmonic_correction(g, d)?.0)
}

/// `‖∇v‖₂` for the harmonic extension of `g`, with the data itself standing
/// in for the normal derivative on boundary faces. Comparable to the
/// `H^{-1/2}(∂Ω)` norm up to domain constants, not equal to it.
pub fn trace_norm_surrogate(g: &BoundaryData, d: &RasterDomain) -> Result<f64> {
    Ok(harmonic_correction(g, d)?.1.l2_norm(Some(d)))
}

/// `P u = u − c`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub projected: StaggeredVectorField,
    pub correction: StaggeredVectorField,
    pub potential: ScalarField,
    /// `‖c‖₂`, the trace surrogate of `u`.
    pub surrogate: f64,
    /// Max cell divergence of `P u`.
    pub divergence_residual: f64,
}

/// Orthogonal projection of a divergence-free field on `d` onto the
/// zero-normal-trace subspace.
pub fn project_divfree0(u: &StaggeredVectorField, d: &RasterDomain) -> Result<Projection> {
    u.grid().check_same(d.grid())?;
    let mask = Arc::new(d.clone());
    let u = u.clone().with_domain(mask)?;
    let h = d.grid().min_spacing();
    let scale = u.l2_norm(Some(d)).max(u.max_abs() * d.grid().cell_volume().sqrt()) / h;
    let pre = divergence_residual(&u, d);
    if pre > 1e-9 * scale.max(1e-300) {
        return Err(Error::NotDivergenceFree(pre));
    }
    let trace = normal_trace(&u, d)?;
    let (potential, correction) = harmonic_correction(&trace, d)?;
    let projected = u.sub(&correction)?;
    let res = divergence_residual(&projected, d);
    if res > 1e-10 * scale.max(1e-300) {
        return Err(Error::Postcondition(format!("projected divergence {res:.3e}")));
    }
    let left = normal_trace(&projected, d)?.max_abs();
    if left != 0.0 {
        return Err(Error::Postcondition(format!("projected trace {left:.3e}")));
    }
    let surrogate = correction.l2_norm(Some(d));
    Ok(Projection { projected, correction, potential, surrogate, divergence_residual: res })
}

/// `N(u) = sup ⟨u, ψ⟩` over unit zero-trace divergence-free `ψ`, which equals `‖P u‖₂`.
pub fn dual_seminorm(u: &StaggeredVectorField, d: &RasterDomain) -> Result<f64> {
    Ok(project_divfree0(u, d)?.projected.l2_norm(Some(d)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualNormReport {
    pub norm: f64,
    pub seminorm: f64,
    pub surrogate: f64,
    pub poincare: f64,
    /// `N(u) + (1 + C_Ω)·surrogate − ‖u‖₂`.
    pub slack: f64,
}

impl DualNormReport {
    pub fn holds(&self) -> bool {
        self.slack >= -1e-8 * self.norm.max(1e-300)
    }
}

/// `‖u‖₂ ≤ N(u) + (1 + C_Ω)‖γ_n u‖` with the surrogate trace norm.
pub fn dual_norm_check(u: &StaggeredVectorField, d: &RasterDomain, poincare: f64) -> Result<DualNormReport> {
    let p = project_divfree0(u, d)?;
    let norm = u.clone().with_domain(Arc::new(d.clone()))?.l2_norm(Some(d));
    let seminorm = p.projected.l2_norm(Some(d));
    let slack = seminorm + (1.0 + poincare) * p.surrogate - norm;
    Ok(DualNormReport { norm, seminorm, surrogate: p.surrogate, poincare, slack })
}

/// Discrete curl of corner values `ψ`: `u_x = ∂_yψ`, `u_y = −∂_xψ`.
/// The result has zero cell divergence everywhere.
pub fn curl_of_nodes(g: &Grid, psi: &[f64]) -> Result<StaggeredVectorField> {
    if g.dim() != 2 {
        return Err(Error::Unsupported("stream functions need a 2D grid".into()));
    }
    let (nx, ny) = (g.nx(), g.ny());
    if psi.len() != (nx + 1) * (ny + 1) {
        return Err(Error::InvalidGrid(format!("expected {} corner values", (nx + 1) * (ny + 1))));
    }
    let [hx, hy] = g.spacing();
    let node = |i: usize, j: usize| psi[j * (nx + 1) + i];
    let mut u = StaggeredVectorField::zeros(*g);
    for j in 0..ny {
        for i in 0..=nx {
            u.ux_mut()[j * (nx + 1) + i] = (node(i, j + 1) - node(i, j)) / hy;
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            u.uy_mut()[j * nx + i] = -(node(i + 1, j) - node(i, j)) / hx;
        }
    }
    Ok(u)
}

/// Zeroes `ψ` at every corner touching a cell outside `d` or the grid edge,
/// so the curl has zero normal trace on `d`.
pub fn clamp_nodes(d: &RasterDomain, psi: &mut [f64]) {
    let g = d.grid();
    let (nx, ny) = (g.nx(), g.ny());
    for j in 0..=ny {
        for i in 0..=nx {
            let interior = i > 0
                && j > 0
                && i < nx
                && j < ny
                && [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)].iter().all(|&(a, b)| d.contains(g.index(a, b)));
            if !interior {
                psi[j * (nx + 1) + i] = 0.0;
            }
        }
    }
}

/// Seeded divergence-free field on `d` from a smooth random stream function.
pub fn random_divfree(d: &RasterDomain, seed: u64) -> Result<StaggeredVectorField> {
    let psi = synth::random_node_field(d.grid(), &mut rng::seeded(seed), 10, 5);
    curl_of_nodes(d.grid(), &psi)?.with_domain(Arc::new(d.clone()))
}

/// Seeded divergence-free field with zero normal trace on `d`.
pub fn random_divfree0(d: &RasterDomain, seed: u64) -> Result<StaggeredVectorField> {
    let mut psi = synth::random_node_field(d.grid(), &mut rng::seeded(seed), 10, 5);
    clamp_nodes(d, &mut psi);
    curl_of_nodes(d.grid(), &psi)?.with_domain(Arc::new(d.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::movedom::poincare_constant;

    fn unit_x(g: Grid, d: &RasterDomain) -> StaggeredVectorField {
        StaggeredVectorField::from_fn(g, |_| [1.0, 0.0]).with_domain(Arc::new(d.clone())).unwrap()
    }

    #[test]
    fn trace_of_unit_field() {
        let g = Grid::unit(2, 16).unwrap();
        let d = RasterDomain::full(g);
        let t = normal_trace(&unit_x(g, &d), &d).unwrap();
        for (f, v) in t.faces.iter().zip(&t.values) {
            let x = if f.axis == 0 { (f.face % 17) as f64 } else { -1.0 };
            let want = if f.axis == 1 { 0.0 } else if x == 0.0 { -1.0 } else { 1.0 };
            assert_eq!(*v, want);
        }
        assert!(t.net_flux().abs() < 1e-14);
    }

    #[test]
    fn divergence_theorem_on_random_fields() {
        let g = Grid::unit(2, 40).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.37);
        for seed in 0..10 {
            let u = random_divfree(&d, seed).unwrap();
            assert!(divergence_residual(&u, &d) < 1e-10);
            assert!(normal_trace(&u, &d).unwrap().net_flux().abs() < 1e-12);
        }
    }

    #[test]
    fn unit_field_is_a_pure_gradient() {
        let g = Grid::unit(2, 32).unwrap();
        let d = RasterDomain::full(g);
        let u = unit_x(g, &d);
        assert!((u.l2_norm(Some(&d)) - 1.0).abs() < 1e-12);
        let p = project_divfree0(&u, &d).unwrap();
        assert!(p.projected.l2_norm(Some(&d)) < 1e-8);
        for c in 0..g.cell_count() {
            assert!((p.potential.get(c) - (g.center(c)[0] - 0.5)).abs() < 1e-8);
        }
        assert!((p.surrogate - 1.0).abs() < 1e-8);
        let t = normal_trace(&u, &d).unwrap();
        let s2 = trace_norm_surrogate(&t.scale(2.0), &d).unwrap();
        assert!((s2 - 2.0 * p.surrogate).abs() < 1e-10);
        assert_eq!(trace_norm_surrogate(&BoundaryData::zeros(&d), &d).unwrap(), 0.0);
    }

    #[test]
    fn zero_trace_is_fixed() {
        let g = Grid::unit(2, 32).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.4);
        let w = random_divfree0(&d, 5).unwrap();
        assert_eq!(normal_trace(&w, &d).unwrap().max_abs(), 0.0);
        let p = project_divfree0(&w, &d).unwrap();
        assert_eq!(p.projected.sub(&w).unwrap().max_abs(), 0.0);
        assert_eq!(dual_seminorm(&w, &d).unwrap(), w.l2_norm(Some(&d)));
    }

    #[test]
    fn green_identity() {
        let g = Grid::unit(2, 32).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.41);
        let t = normal_trace(&random_divfree(&d, 9).unwrap(), &d).unwrap();
        let v = neumann_harmonic(&t, &d).unwrap();
        assert!(v.integral().abs() < 1e-12);
        let grad = crate::grid::gradient(&v);
        let energy = grad.inner(&grad, Some(&d)).unwrap();
        let bdry: f64 = t.faces.iter().zip(&t.values).map(|(f, gv)| gv * v.get(f.cell) * f.length).sum();
        assert!((energy - bdry).abs() < 1e-8 * energy);
    }

    #[test]
    fn projection_identities() {
        let g = Grid::unit(2, 32).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.43);
        let c = poincare_constant(&d).unwrap();
        for seed in 0..8 {
            let u = random_divfree(&d, seed).unwrap();
            let w = random_divfree(&d, 100 + seed).unwrap();
            let z = random_divfree0(&d, 200 + seed).unwrap();
            let pu = project_divfree0(&u, &d).unwrap();
            let pw = project_divfree0(&w, &d).unwrap();
            let n = u.l2_norm(Some(&d));
            let again = project_divfree0(&pu.projected, &d).unwrap().projected;
            assert!(again.sub(&pu.projected).unwrap().l2_norm(Some(&d)) <= 1e-8 * n);
            let a = pu.projected.inner(&w, Some(&d)).unwrap();
            let b = u.inner(&pw.projected, Some(&d)).unwrap();
            assert!((a - b).abs() <= 1e-8 * n * w.l2_norm(Some(&d)));
            let pn = pu.projected.l2_norm(Some(&d));
            assert!((n * n - pn * pn - pu.surrogate * pu.surrogate).abs() <= 1e-8 * n * n);
            let orth = pu.correction.inner(&z, Some(&d)).unwrap();
            assert!(orth.abs() <= 1e-8 * pu.surrogate * z.l2_norm(Some(&d)));
            assert!(pu.surrogate <= (1.0 + c) * n);
            assert!(dual_norm_check(&u, &d, c).unwrap().holds());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let g = Grid::unit(2, 16).unwrap();
        let d = RasterDomain::full(g);
        let bad = StaggeredVectorField::from_fn(g, |x| [x[0], 0.0]);
        assert!(matches!(project_divfree0(&bad, &d), Err(Error::NotDivergenceFree(_))));
        let mut t = BoundaryData::zeros(&d);
        t.values[0] = 1.0;
        assert!(matches!(neumann_harmonic(&t, &d), Err(Error::IncompatibleData(_))));
        let split = RasterDomain::from_predicate(g, |x| (x[0] - 0.5).abs() > 0.2);
        assert!(matches!(neumann_harmonic(&BoundaryData::zeros(&split), &split), Err(Error::Disconnected(2))));
    }
}
