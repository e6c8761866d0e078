//! Space-only mollification, lattice shifts and the commutator
//! `S_{n,k} = a_n (b_n ⋆ φ_k) − (a_n b_n) ⋆ φ_k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, StaggeredVectorField};
use crate::series::{StepTimeSeries, VectorSeries};

/// Rasterised bump `exp(−1/(1−|x/r|²))`, normalised to discrete mass 1.
#[derive(Debug, Clone)]
pub struct Mollifier {
    grid: Grid,
    radius: f64,
    offsets: Vec<(isize, isize)>,
    /// Weights already multiplied by the cell volume, summing to 1.
    weights: Vec<f64>,
    normalization: f64,
}

/// `φ_k` with radius `1/k`.
pub fn make_mollifier(k: u32, g: &Grid) -> Result<Mollifier> {
    if k == 0 {
        return Err(Error::InvalidParameter("mollifier scale k must be positive".into()));
    }
    Mollifier::with_radius(1.0 / k as f64, g)
}

impl Mollifier {
    pub fn with_radius(radius: f64, g: &Grid) -> Result<Self> {
        let [hx, hy] = g.spacing();
        let h = if g.dim() == 1 { hx } else { hx.max(hy) };
        if !(radius >= 2.0 * h) {
            return Err(Error::UnderResolved { radius, min: 2.0 * h });
        }
        let px = (radius / hx).ceil() as isize;
        let py = if g.dim() == 1 { 0 } else { (radius / hy).ceil() as isize };
        let mut offsets = Vec::new();
        let mut raw = Vec::new();
        for q in -py..=py {
            for p in -px..=px {
                let x = p as f64 * hx / radius;
                let y = if g.dim() == 1 { 0.0 } else { q as f64 * hy / radius };
                let rho2 = x * x + y * y;
                if rho2 < 1.0 {
                    let w = (-1.0 / (1.0 - rho2)).exp();
                    if w > 0.0 {
                        offsets.push((p, q));
                        raw.push(w);
                    }
                }
            }
        }
        // Offsets are symmetric, so pairing p with -p in the sum keeps the
        // normalised kernel exactly even.
        let vol = g.cell_volume();
        let total: f64 = raw.iter().sum::<f64>() * vol;
        let weights = raw.iter().map(|w| w * vol / total).collect();
        Ok(Self { grid: *g, radius, offsets, weights, normalization: total })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Raw (unnormalised) discrete integral of the bump.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn support_cells(&self) -> usize {
        self.offsets.len()
    }

    /// `(offset, weight·h^d)` pairs.
    pub fn taps(&self) -> impl Iterator<Item = ((isize, isize), f64)> + '_ {
        self.offsets.iter().copied().zip(self.weights.iter().copied())
    }

    /// Kernel value (density) at a lattice offset; zero off the support.
    pub fn kernel_at(&self, p: isize, q: isize) -> f64 {
        self.offsets
            .iter()
            .position(|&o| o == (p, q))
            .map(|i| self.weights[i] / self.grid.cell_volume())
            .unwrap_or(0.0)
    }

    /// Discrete integral of the kernel, `Σ φ h^d`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Kernel as a cell field centred on cell `c`.
    pub fn as_field_at(&self, c: usize) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid).into_values();
        let (i, j) = self.grid.ij(c);
        let vol = self.grid.cell_volume();
        for ((p, q), w) in self.taps() {
            let (x, y) = (i as isize + p, j as isize + q);
            if x >= 0 && y >= 0 && (x as usize) < self.grid.nx() && (y as usize) < self.grid.ny() {
                out[self.grid.index(x as usize, y as usize)] = w / vol;
            }
        }
        ScalarField::from_values(self.grid, out).unwrap()
    }

    fn convolve_lattice(&self, v: &[f64], nx: usize, ny: usize) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for j in 0..ny {
            for i in 0..nx {
                let mut acc = 0.0;
                for (&(p, q), &w) in self.offsets.iter().zip(&self.weights) {
                    let x = i as isize - p;
                    let y = j as isize - q;
                    if x >= 0 && y >= 0 && (x as usize) < nx && (y as usize) < ny {
                        acc += w * v[y as usize * nx + x as usize];
                    }
                }
                out[j * nx + i] = acc;
            }
        }
        out
    }

    /// `f ⋆ φ` with `f` extended by zero outside its mask and the grid.
    /// The result is unmasked: its support grows by the radius.
    pub fn convolve(&self, f: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(f.grid())?;
        let vals = self.convolve_lattice(f.values(), self.grid.nx(), self.grid.ny());
        ScalarField::from_values(self.grid, vals)
    }

    /// Componentwise convolution of the face arrays. The face lattices share
    /// the cell spacing, so discrete divergence commutes with this operation
    /// wherever the kernel footprint stays inside the grid.
    pub fn convolve_faces(&self, u: &StaggeredVectorField) -> Result<StaggeredVectorField> {
        self.grid.check_same(u.grid())?;
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let ux = self.convolve_lattice(u.ux(), nx + 1, ny);
        let uy = if self.grid.dim() == 2 { self.convolve_lattice(u.uy(), nx, ny + 1) } else { Vec::new() };
        StaggeredVectorField::from_faces(self.grid, ux, uy)
    }

    pub fn convolve_series(&self, s: &StepTimeSeries) -> Result<StepTimeSeries> {
        s.try_map(|f| self.convolve(f))
    }

    pub fn convolve_vector_series(&self, s: &VectorSeries) -> Result<VectorSeries> {
        s.try_map(|u| self.convolve_faces(u))
    }
}

/// `τ_h f(x) = f(x − h)` for a lattice vector `h`, zero fill.
pub fn shift_space(f: &ScalarField, h: [f64; 2]) -> Result<ScalarField> {
    let g = f.grid();
    let [hx, hy] = g.spacing();
    let to_cells = |v: f64, step: f64| -> Result<isize> {
        let q = v / step;
        let r = q.round();
        if (q - r).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(Error::NonLatticeShift(format!("space shift component {v} is not a multiple of {step}")));
        }
        Ok(r as isize)
    };
    let di = to_cells(h[0], hx)?;
    let dj = if g.dim() == 1 {
        if h[1] != 0.0 {
            return Err(Error::NonLatticeShift("1D grids only shift along x".into()));
        }
        0
    } else {
        to_cells(h[1], hy)?
    };
    shift_cells(f, di, dj)
}

/// Integer-cell shift `τ_{(di h, dj h)}`.
pub fn shift_cells(f: &ScalarField, di: isize, dj: isize) -> Result<ScalarField> {
    let g = *f.grid();
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let mut out = vec![0.0; g.cell_count()];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i - di, j - dj);
            if x >= 0 && y >= 0 && x < nx && y < ny {
                out[(j * nx + i) as usize] = f.values()[(y * nx + x) as usize];
            }
        }
    }
    ScalarField::from_values(g, out)
}

/// Commutator series and its space-time `L¹` norm.
#[derive(Debug, Clone)]
pub struct Commutator {
    pub series: StepTimeSeries,
    pub l1: f64,
}

/// Single-slice commutator `a(b⋆φ) − (ab)⋆φ`.
pub fn commutator_slice(a: &ScalarField, b: &ScalarField, phi: &Mollifier) -> Result<ScalarField> {
    let a = a.unmasked();
    let bphi = phi.convolve(b)?;
    let ab = a.zip_with(b, |x, y| x * y)?;
    let ab_phi = phi.convolve(&ab)?;
    a.zip_with(&bphi, |x, y| x * y)?.zip_with(&ab_phi, |x, y| x - y)
}

/// Translation form `∫ (a(x) − a(x−y)) b(x−y) φ(y) dy` of the commutator,
/// evaluated directly from the kernel taps.
pub fn commutator_translation_form(a: &ScalarField, b: &ScalarField, phi: &Mollifier) -> Result<ScalarField> {
    let g = *a.grid();
    g.check_same(b.grid())?;
    let (nx, ny) = (g.nx() as isize, g.ny() as isize);
    let (av, bv) = (a.values(), b.values());
    let mut out = vec![0.0; g.cell_count()];
    for j in 0..ny {
        for i in 0..nx {
            let c = (j * nx + i) as usize;
            let mut acc = 0.0;
            for ((p, q), w) in phi.taps() {
                let (x, y) = (i - p, j - q);
                if x >= 0 && y >= 0 && x < nx && y < ny {
                    let s = (y * nx + x) as usize;
                    acc += w * (av[c] - av[s]) * bv[s];
                }
            }
            out[c] = acc;
        }
    }
    ScalarField::from_values(g, out)
}

pub fn commutator(a: &StepTimeSeries, b: &StepTimeSeries, k: u32) -> Result<Commutator> {
    a.check_partition(b)?;
    let phi = make_mollifier(k, a.grid())?;
    commutator_with(a, b, &phi)
}

pub fn commutator_with(a: &StepTimeSeries, b: &StepTimeSeries, phi: &Mollifier) -> Result<Commutator> {
    let series = a.zip_map(b, |x, y| commutator_slice(x, y, phi))?;
    let l1 = series.l1_norm();
    Ok(Commutator { series, l1 })
}

/// `sup_n ‖S_{n,k}‖_{L¹}` over a family for each scale in `ks`, evaluated in parallel.
pub fn uniform_commutator_sweep(
    a_family: &[StepTimeSeries],
    b_family: &[StepTimeSeries],
    ks: &[u32],
) -> Result<Vec<f64>> {
    if a_family.len() != b_family.len() || a_family.is_empty() {
        return Err(Error::PartitionMismatch("families must be non-empty and of equal length".into()));
    }
    ks.iter()
        .map(|&k| {
            let phi = make_mollifier(k, a_family[0].grid())?;
            let vals = a_family
                .par_iter()
                .zip(b_family.par_iter())
                .map(|(a, b)| commutator_with(a, b, &phi).map(|c| c.l1))
                .collect::<Result<Vec<f64>>>()?;
            Ok(vals.into_iter().fold(0.0, f64::max))
        })
        .collect()
}

/// Pairs each series in a family with its mollified version.
pub fn mollify_family(family: &[StepTimeSeries], phi: &Mollifier) -> Result<Vec<StepTimeSeries>> {
    family.par_iter().map(|s| phi.convolve_series(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{divergence, lp_norm, gradient};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn line(n: usize) -> Grid {
        Grid::new_1d(n, 1.0).unwrap()
    }

    #[test]
    fn unit_mass_and_symmetry() {
        for (k, g) in [(4, line(128)), (8, Grid::unit(2, 64).unwrap()), (3, Grid::new_2d(40, 24, 1.0, 0.6).unwrap())] {
            let phi = make_mollifier(k, &g).unwrap();
            assert!((phi.mass() - 1.0).abs() <= 1e-12);
            for ((p, q), _) in phi.taps() {
                assert_eq!(phi.kernel_at(p, q), phi.kernel_at(-p, -q));
                assert!(phi.kernel_at(p, q) > 0.0);
            }
        }
    }

    #[test]
    fn support_count_on_256_cells() {
        let phi = make_mollifier(8, &line(256)).unwrap();
        // Radius 32 cells: the offsets ±32 land on the support edge where the
        // bump vanishes, leaving 63 cells.
        assert_eq!(phi.support_cells(), 63);
    }

    #[test]
    fn under_resolved() {
        assert!(matches!(make_mollifier(64, &line(64)), Err(Error::UnderResolved { .. })));
        assert!(make_mollifier(32, &line(64)).is_ok());
        assert!(make_mollifier(0, &line(64)).is_err());
    }

    #[test]
    fn constant_is_preserved_in_the_interior() {
        let g = line(128);
        let phi = make_mollifier(8, &g).unwrap();
        let out = phi.convolve(&ScalarField::constant(g, 2.5)).unwrap();
        for i in 16..112 {
            assert!((out.get(i) - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn dirac_reproduces_kernel() {
        let g = line(128);
        let phi = make_mollifier(8, &g).unwrap();
        let mut v = vec![0.0; 128];
        v[64] = 1.0 / g.cell_volume();
        let out = phi.convolve(&ScalarField::from_values(g, v).unwrap()).unwrap();
        let k = phi.as_field_at(64);
        for i in 0..128 {
            assert!((out.get(i) - k.get(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn mollification_error_within_translation_bound() {
        let g = line(1024);
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
        let phi = make_mollifier(16, &g).unwrap();
        // Periodic-free comparison on the interior, away from zero fill.
        let smooth = phi.convolve(&f).unwrap();
        let inner: Vec<usize> = (64..960).collect();
        let err: f64 = inner.iter().map(|&i| (f.get(i) - smooth.get(i)).powi(2)).sum::<f64>() * g.cell_volume();
        let bound = 2.0 * PI / 16.0 * lp_norm(&f, 2.0).unwrap();
        assert!(err.sqrt() <= bound);
    }

    #[test]
    fn shifts() {
        let g = Grid::unit(2, 16).unwrap();
        let h = g.spacing();
        let f = ScalarField::from_fn(g, |p| p[0] + 2.0 * p[1]);
        let id = shift_space(&f, [0.0, 0.0]).unwrap();
        assert_eq!(id.values(), f.values());
        let back = shift_space(&shift_space(&f, [2.0 * h[0], -h[1]]).unwrap(), [-2.0 * h[0], h[1]]).unwrap();
        for j in 1..15 {
            for i in 0..14 {
                assert_eq!(back.at(i, j), f.at(i, j));
            }
        }
        for j in 0..16 {
            assert_eq!(back.at(15, j), 0.0);
            assert_eq!(back.at(14, j), 0.0);
        }
        assert!(matches!(shift_space(&f, [0.3 * h[0], 0.0]), Err(Error::NonLatticeShift(_))));
    }

    #[test]
    fn shift_bounded_by_gradient() {
        let g = Grid::unit(2, 64).unwrap();
        let f = ScalarField::from_fn(g, |p| (PI * p[0]).sin().powi(2) * (PI * p[1]).sin().powi(2));
        let grad = gradient(&f).l2_norm(None);
        for s in 1..5 {
            let h = [s as f64 * g.spacing()[0], 0.0];
            let d = lp_norm(&shift_space(&f, h).unwrap().sub(&f).unwrap(), 2.0).unwrap();
            assert!(d <= h[0] * grad * (1.0 + 1e-9));
        }
    }

    #[test]
    fn commutator_trivial_cases() {
        let g = line(256);
        let phi = make_mollifier(8, &g).unwrap();
        let b = ScalarField::from_fn(g, |p| (9.0 * p[0]).cos());
        let s = commutator_slice(&ScalarField::constant(g, 3.0), &b, &phi).unwrap();
        assert!(s.max_abs() < 1e-13);
        let lin = commutator_slice(&ScalarField::from_fn(g, |p| p[0]), &ScalarField::constant(g, 1.0), &phi).unwrap();
        for i in 40..216 {
            assert!(lin.get(i).abs() < 1e-13);
        }
    }

    #[test]
    fn translation_form_agrees() {
        let g = line(300);
        let phi = make_mollifier(10, &g).unwrap();
        let a = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
        let b = ScalarField::from_fn(g, |p| (4.0 * PI * p[0]).sin().signum());
        let s1 = commutator_slice(&a, &b, &phi).unwrap();
        let s2 = commutator_translation_form(&a, &b, &phi).unwrap();
        for i in 0..300 {
            assert!((s1.get(i) - s2.get(i)).abs() < 1e-13);
        }
    }

    /// Frozen values from an independent dense-loop evaluation of
    /// `‖a(b⋆φ_k) − (ab)⋆φ_k‖₁` on 2048 cells.
    #[test]
    fn commutator_rate_oracle() {
        let g = line(2048);
        let a = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
        let b = ScalarField::from_fn(g, |p| (4.0 * PI * p[0]).sin().signum());
        let frozen = [(4, 0.15448), (8, 0.06572), (16, 0.01851), (32, 0.0047893), (64, 0.0012087)];
        let mut prev: Option<f64> = None;
        for (k, want) in frozen {
            let phi = make_mollifier(k, &g).unwrap();
            let v = lp_norm(&commutator_slice(&a, &b, &phi).unwrap(), 1.0).unwrap();
            assert!((v - want).abs() <= 2e-3 * want, "k={k}: {v} vs {want}");
            if let Some(p) = prev {
                assert!(v / p <= 0.65);
            }
            prev = Some(v);
        }
    }

    #[test]
    fn face_convolution_keeps_divergence_free() {
        let g = Grid::unit(2, 48).unwrap();
        let psi = |x: f64, y: f64| ((x - 0.5).powi(2) + (y - 0.5).powi(2) - 0.04).min(0.0).powi(2);
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let mut ux = vec![0.0; (nx + 1) * ny];
        let mut uy = vec![0.0; nx * (ny + 1)];
        for j in 0..ny {
            for i in 0..=nx {
                let (x, y) = (i as f64 * hx, j as f64 * hy);
                ux[j * (nx + 1) + i] = (psi(x, y + hy) - psi(x, y)) / hy;
            }
        }
        for j in 0..=ny {
            for i in 0..nx {
                let (x, y) = (i as f64 * hx, j as f64 * hy);
                uy[j * nx + i] = -(psi(x + hx, y) - psi(x, y)) / hx;
            }
        }
        let u = StaggeredVectorField::from_faces(g, ux, uy).unwrap();
        assert!(divergence(&u).max_abs() < 1e-12);
        let phi = make_mollifier(8, &g).unwrap();
        let w = phi.convolve_faces(&u).unwrap();
        assert!(divergence(&w).max_abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn self_adjoint_and_young(seed in 0u64..500, k in 3u32..9) {
            let g = Grid::unit(2, 24).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ScalarField::from_values(g, (0..576).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let h = ScalarField::from_values(g, (0..576).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let phi = make_mollifier(k, &g).unwrap();
            let fp = phi.convolve(&f).unwrap();
            let hp = phi.convolve(&h).unwrap();
            let l = fp.inner(&h).unwrap();
            let r = f.inner(&hp).unwrap();
            prop_assert!((l - r).abs() <= 1e-10 * l.abs().max(r.abs()).max(1e-300) + 1e-15);
            for p in [1.0, 2.0, f64::INFINITY] {
                prop_assert!(lp_norm(&fp, p).unwrap() <= lp_norm(&f, p).unwrap() + 1e-12);
            }
        }
    }
}
