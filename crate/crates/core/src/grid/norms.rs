use super::{RasterDomain, ScalarField};
use crate::error::{Error, Result};
use crate::linalg::{self, IterOptions};

/// Midpoint-rule `L^p` norm over the field's mask (or the whole grid).
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let vals = f.values();
    let cells: Box<dyn Iterator<Item = f64>> = match f.mask() {
        Some(m) => Box::new(vals.iter().zip(m.membership()).filter(|(_, &b)| b).map(|(v, _)| *v)),
        None => Box::new(vals.iter().copied()),
    };
    if p.is_infinite() {
        return Ok(cells.fold(0.0, |m, v| m.max(v.abs())));
    }
    let vol = f.grid().cell_volume();
    let s: f64 = if p == 1.0 {
        cells.map(f64::abs).sum()
    } else if p == 2.0 {
        cells.map(|v| v * v).sum()
    } else {
        cells.map(|v| v.abs().powf(p)).sum()
    };
    Ok(if p == 2.0 { (s * vol).sqrt() } else { (s * vol).powf(1.0 / p) })
}

/// Five-point Laplacian restricted to the cells of a raster, in compact
/// numbering. For the Dirichlet variant missing neighbours are mirrored with a
/// sign flip, which puts the zero boundary value on the boundary face; the
/// Neumann variant drops them.
pub(crate) struct CellLaplacian {
    cells: Vec<usize>,
    nbrs: Vec<[Option<usize>; 4]>,
    inv_h2: [f64; 2],
    dim: usize,
    /// Weight of a missing neighbour: 2 for the Dirichlet mirror, 0 for Neumann.
    ghost: f64,
}

impl CellLaplacian {
    /// Same stencil with no coupling across the boundary.
    pub(crate) fn neumann(d: &RasterDomain) -> Result<Self> {
        let mut op = Self::new(d)?;
        op.ghost = 0.0;
        Ok(op)
    }

    pub(crate) fn new(d: &RasterDomain) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let g = *d.grid();
        let cells: Vec<usize> = d.cells().collect();
        let mut compact = vec![usize::MAX; g.cell_count()];
        for (k, &c) in cells.iter().enumerate() {
            compact[c] = k;
        }
        let (nx, ny) = (g.nx(), g.ny());
        let look = |c: usize| (compact[c] != usize::MAX).then_some(compact[c]);
        let nbrs = cells
            .iter()
            .map(|&c| {
                let (i, j) = g.ij(c);
                [
                    (i > 0).then(|| c - 1).and_then(look),
                    (i + 1 < nx).then(|| c + 1).and_then(look),
                    (j > 0).then(|| c - nx).and_then(look),
                    (j + 1 < ny).then(|| c + nx).and_then(look),
                ]
            })
            .collect();
        let [hx, hy] = g.spacing();
        Ok(Self { cells, nbrs, inv_h2: [1.0 / (hx * hx), 1.0 / (hy * hy)], dim: g.dim(), ghost: 2.0 })
    }

    pub(crate) fn len(&self) -> usize {
        self.cells.len()
    }

    pub(crate) fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (k, nb) in self.nbrs.iter().enumerate() {
            let mut acc = 0.0;
            for (s, n) in nb.iter().enumerate().take(2 * self.dim) {
                let w = self.inv_h2[s / 2];
                acc += w * match n {
                    Some(m) => x[k] - x[*m],
                    None => self.ghost * x[k],
                };
            }
            y[k] = acc;
        }
    }

    pub(crate) fn diag(&self) -> Vec<f64> {
        self.nbrs
            .iter()
            .map(|nb| {
                nb.iter()
                    .enumerate()
                    .take(2 * self.dim)
                    .map(|(s, n)| self.inv_h2[s / 2] * if n.is_some() { 1.0 } else { self.ghost })
                    .sum()
            })
            .collect()
    }

    /// Solves `(I + L) x = b`.
    pub(crate) fn resolvent(&self, b: &[f64]) -> Result<Vec<f64>> {
        let diag: Vec<f64> = self.diag().into_iter().map(|d| 1.0 + d).collect();
        if self.dim == 1 {
            let w = self.inv_h2[0];
            let lower: Vec<f64> = self.nbrs.iter().map(|nb| if nb[0].is_some() { -w } else { 0.0 }).collect();
            let upper: Vec<f64> = self.nbrs.iter().map(|nb| if nb[1].is_some() { -w } else { 0.0 }).collect();
            return linalg::thomas(&lower, &diag, &upper, b);
        }
        let mut x = vec![0.0; b.len()];
        let apply = |v: &[f64], out: &mut [f64]| {
            self.apply(v, out);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += vi;
            }
        };
        linalg::pcg(apply, &diag, b, &mut x, IterOptions { tol: 1e-13, max_iter: 50_000 }, None)?;
        Ok(x)
    }

    /// Mean-zero solution of `L x = b` for the Neumann stencil; `b` is
    /// projected to mean zero first.
    pub(crate) fn solve_mean_zero(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let project = |v: &mut [f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= mean);
        };
        let mut rhs = b.to_vec();
        project(&mut rhs);
        let mut x = vec![0.0; b.len()];
        let diag = self.diag();
        linalg::pcg(|v, out| self.apply(v, out), &diag, &rhs, &mut x, IterOptions { tol, max_iter: 100_000 }, Some(&project))?;
        project(&mut x);
        Ok(x)
    }

    pub(crate) fn scatter(&self, v: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (k, &c) in self.cells.iter().enumerate() {
            out[c] = v[k];
        }
        out
    }

    pub(crate) fn gather(&self, f: &ScalarField) -> Vec<f64> {
        self.cells.iter().map(|&c| f.get(c)).collect()
    }
}

fn check_support(f: &ScalarField, d: &RasterDomain) -> Result<()> {
    f.grid().check_same(d.grid())?;
    let outside = f
        .values()
        .iter()
        .zip(d.membership())
        .filter(|(v, &inside)| !inside && **v != 0.0)
        .count();
    if outside > 0 {
        return Err(Error::NotSupported(outside));
    }
    Ok(())
}

/// `(Lu)` for a field supported in `d`, returned on the full grid.
pub fn dirichlet_laplacian_apply(d: &RasterDomain, u: &ScalarField) -> Result<ScalarField> {
    check_support(u, d)?;
    let op = CellLaplacian::new(d)?;
    let x = op.gather(u);
    let mut y = vec![0.0; x.len()];
    op.apply(&x, &mut y);
    let mut out = vec![0.0; d.grid().cell_count()];
    for (k, &c) in op.cells().iter().enumerate() {
        out[c] = y[k];
    }
    ScalarField::from_values(*d.grid(), out)
}

/// `‖f‖_{-m} = ⟨f, (I + L)^{-m} f⟩^{1/2}` with `L` the Dirichlet Laplacian on `d`.
///
/// Equal to `(Σ_k (1+λ_k)^{-m} |⟨f,e_k⟩|²)^{1/2}` over the full discrete
/// eigenbasis, evaluated through `m` resolvent solves instead of a spectrum.
pub fn h_minus_m_norm(f: &ScalarField, m: u32, d: &RasterDomain) -> Result<f64> {
    check_support(f, d)?;
    let op = CellLaplacian::new(d)?;
    let vol = d.grid().cell_volume();
    let mut g = op.gather(f);
    if m == 0 {
        return Ok((linalg::dot(&g, &g) * vol).sqrt());
    }
    // g_j = (I+L)^{-j} f; pair the two middle iterates for symmetry.
    let half = m / 2;
    for _ in 0..half {
        g = op.resolvent(&g)?;
    }
    let val = if m.is_multiple_of(2) {
        linalg::dot(&g, &g)
    } else {
        let next = op.resolvent(&g)?;
        linalg::dot(&g, &next)
    };
    Ok((val.max(0.0) * vol).sqrt())
}

/// `‖φ‖_{+m} = ⟨φ, (I + L)^m φ⟩^{1/2}`, the dual weight of [`h_minus_m_norm`].
pub fn h_plus_m_norm(phi: &ScalarField, m: u32, d: &RasterDomain) -> Result<f64> {
    check_support(phi, d)?;
    let op = CellLaplacian::new(d)?;
    let vol = d.grid().cell_volume();
    let mut g = op.gather(phi);
    let half = m / 2;
    let mut tmp = vec![0.0; g.len()];
    let step = |v: &[f64], out: &mut [f64]| {
        op.apply(v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o += vi;
        }
    };
    for _ in 0..half {
        step(&g, &mut tmp);
        std::mem::swap(&mut g, &mut tmp);
    }
    let val = if m.is_multiple_of(2) {
        linalg::dot(&g, &g)
    } else {
        step(&g, &mut tmp);
        linalg::dot(&g, &tmp)
    };
    Ok((val.max(0.0) * vol).sqrt())
}

/// Result of the eigenbasis evaluation of the `H^{-m}` norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNorm {
    pub value: f64,
    /// Ritz pairs retained.
    pub pairs: usize,
    /// Lanczos residual after the last step; zero when the Krylov space
    /// generated by `f` is invariant.
    pub truncation: f64,
    /// Smallest Ritz value, an upper estimate of `λ_1` seen by `f`.
    pub lambda_min: f64,
}

/// `H^{-m}` norm from Ritz pairs of the Dirichlet Laplacian, Lanczos started
/// at `f` with full reorthogonalisation and at most `max_pairs` steps.
pub fn spectral_h_minus_m(
    f: &ScalarField,
    m: u32,
    d: &RasterDomain,
    max_pairs: usize,
) -> Result<SpectralNorm> {
    check_support(f, d)?;
    let op = CellLaplacian::new(d)?;
    let vol = d.grid().cell_volume();
    let g = op.gather(f);
    let fnorm2 = linalg::dot(&g, &g);
    if fnorm2 == 0.0 {
        return Ok(SpectralNorm { value: 0.0, pairs: 0, truncation: 0.0, lambda_min: f64::NAN });
    }
    let steps = max_pairs.min(op.len()).max(1);
    let lz = linalg::lanczos(|x, y| op.apply(x, y), &g, steps);
    let (theta, s) = linalg::tql2(&lz.alpha, &lz.beta)?;
    let k = theta.len();
    let mut acc = 0.0;
    for j in 0..k {
        let w = s[j]; // first row, column j
        acc += w * w * (1.0 + theta[j]).powi(-(m as i32));
    }
    Ok(SpectralNorm {
        value: (acc * fnorm2 * vol).sqrt(),
        pairs: k,
        truncation: lz.residual,
        lambda_min: theta[0],
    })
}
