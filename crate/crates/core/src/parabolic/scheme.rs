use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::linalg::{self, IterOptions};
use crate::series::StepTimeSeries;
use crate::truncate::Nonlinearity;

type TensorFn = Arc<dyn Fn(f64, [f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// `A(t, x)` with declared coercivity `Spec(A + Aᵀ) ≥ λ`.
#[derive(Clone)]
pub struct DiffusionTensor {
    eval: TensorFn,
    lambda: f64,
    diagonal: bool,
}

impl fmt::Debug for DiffusionTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionTensor").field("lambda", &self.lambda).field("diagonal", &self.diagonal).finish()
    }
}

fn min_sym_eig(a: [[f64; 2]; 2]) -> f64 {
    let (p, q, r) = (2.0 * a[0][0], a[0][1] + a[1][0], 2.0 * a[1][1]);
    let mean = 0.5 * (p + r);
    let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    mean - rad
}

impl DiffusionTensor {
    pub fn identity() -> Self {
        Self { eval: Arc::new(|_, _| [[1.0, 0.0], [0.0, 1.0]]), lambda: 2.0, diagonal: true }
    }

    pub fn constant(a: [[f64; 2]; 2]) -> Result<Self> {
        let lambda = min_sym_eig(a);
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("tensor {a:?} is not coercive")));
        }
        let diagonal = a[0][1] == 0.0 && a[1][0] == 0.0;
        Ok(Self { eval: Arc::new(move |_, _| a), lambda, diagonal })
    }

    /// Variable tensor with a declared lower bound `λ` on `Spec(A + Aᵀ)`.
    pub fn from_fn(
        f: impl Fn(f64, [f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
        lambda: f64,
        diagonal: bool,
    ) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("coercivity λ = {lambda} must be positive")));
        }
        Ok(Self { eval: Arc::new(f), lambda, diagonal })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn at(&self, t: f64, x: [f64; 2]) -> [[f64; 2]; 2] {
        (self.eval)(t, x)
    }

    /// Smallest sampled eigenvalue of `A + Aᵀ` over the cell centres at the given times.
    pub fn sampled_lambda(&self, g: &Grid, times: &[f64]) -> f64 {
        let mut lo = f64::INFINITY;
        for &t in times {
            for x in g.centers() {
                lo = lo.min(min_sym_eig(self.at(t, x)));
            }
        }
        lo
    }

    /// Fails if any sample violates the declared `λ`.
    pub fn verify(&self, g: &Grid, times: &[f64]) -> Result<f64> {
        let s = self.sampled_lambda(g, times);
        if s < self.lambda * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "declared coercivity {} exceeds sampled minimum {s}",
                self.lambda
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    NoFlux,
    DirichletZero,
}

impl BoundaryCondition {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "no-flux" | "noflux" | "neumann" => Ok(Self::NoFlux),
            "dirichlet" | "dirichlet-0" | "dirichlet0" => Ok(Self::DirichletZero),
            other => Err(Error::Parse(format!("unknown boundary condition '{other}'"))),
        }
    }
}

/// Face coefficients of `w ↦ div(A ∇w)` frozen at one time level.
pub(crate) struct FluxOperator {
    grid: Grid,
    bc: BoundaryCondition,
    /// `a11` on x faces, `a12` on x faces, `a22` on y faces, `a21` on y faces.
    ax: Vec<f64>,
    axy: Vec<f64>,
    ay: Vec<f64>,
    ayx: Vec<f64>,
    cross: bool,
}

impl FluxOperator {
    pub(crate) fn new(g: &Grid, a: &DiffusionTensor, t: f64, bc: BoundaryCondition) -> Self {
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let two_d = g.dim() == 2;
        let mut ax = vec![0.0; (nx + 1) * ny];
        let mut axy = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                let m = a.at(t, [i as f64 * hx, (j as f64 + 0.5) * hy]);
                ax[j * (nx + 1) + i] = m[0][0];
                axy[j * (nx + 1) + i] = m[0][1];
            }
        }
        let (mut ay, mut ayx) = (Vec::new(), Vec::new());
        if two_d {
            ay = vec![0.0; nx * (ny + 1)];
            ayx = vec![0.0; nx * (ny + 1)];
            for j in 0..=ny {
                for i in 0..nx {
                    let m = a.at(t, [(i as f64 + 0.5) * hx, j as f64 * hy]);
                    ay[j * nx + i] = m[1][1];
                    ayx[j * nx + i] = m[1][0];
                }
            }
        }
        let cross = two_d && !a.diagonal;
        Self { grid: *g, bc, ax, axy, ay, ayx, cross }
    }

    fn ghost(&self, wc: f64) -> f64 {
        match self.bc {
            BoundaryCondition::NoFlux => wc,
            BoundaryCondition::DirichletZero => -wc,
        }
    }

    /// Centred y-derivative at a cell, mirrored at the grid edge.
    fn dy_cell(&self, w: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let c = w[g.index(i, j)];
        let up = if j + 1 < g.ny() { w[g.index(i, j + 1)] } else { self.ghost(c) };
        let dn = if j > 0 { w[g.index(i, j - 1)] } else { self.ghost(c) };
        (up - dn) / (2.0 * g.spacing()[1])
    }

    fn dx_cell(&self, w: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let c = w[g.index(i, j)];
        let r = if i + 1 < g.nx() { w[g.index(i + 1, j)] } else { self.ghost(c) };
        let l = if i > 0 { w[g.index(i - 1, j)] } else { self.ghost(c) };
        (r - l) / (2.0 * g.spacing()[0])
    }

    /// Face fluxes `A∇w·n` (x faces, y faces).
    pub(crate) fn fluxes(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let dir = self.bc == BoundaryCondition::DirichletZero;
        let mut fx = vec![0.0; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                let f = j * (nx + 1) + i;
                fx[f] = if i == 0 {
                    if dir { 2.0 * self.ax[f] * w[g.index(0, j)] / hx } else { 0.0 }
                } else if i == nx {
                    if dir { -2.0 * self.ax[f] * w[g.index(nx - 1, j)] / hx } else { 0.0 }
                } else {
                    let mut v = self.ax[f] * (w[g.index(i, j)] - w[g.index(i - 1, j)]) / hx;
                    if self.cross {
                        v += self.axy[f] * 0.5 * (self.dy_cell(w, i, j) + self.dy_cell(w, i - 1, j));
                    }
                    v
                };
            }
        }
        let mut fy = Vec::new();
        if g.dim() == 2 {
            fy = vec![0.0; nx * (ny + 1)];
            for j in 0..=ny {
                for i in 0..nx {
                    let f = j * nx + i;
                    fy[f] = if j == 0 {
                        if dir { 2.0 * self.ay[f] * w[g.index(i, 0)] / hy } else { 0.0 }
                    } else if j == ny {
                        if dir { -2.0 * self.ay[f] * w[g.index(i, ny - 1)] / hy } else { 0.0 }
                    } else {
                        let mut v = self.ay[f] * (w[g.index(i, j)] - w[g.index(i, j - 1)]) / hy;
                        if self.cross {
                            v += self.ayx[f] * 0.5 * (self.dx_cell(w, i, j) + self.dx_cell(w, i, j - 1));
                        }
                        v
                    };
                }
            }
        }
        (fx, fy)
    }

    /// `div(A∇w)` into `out`.
    pub(crate) fn apply(&self, w: &[f64], out: &mut [f64]) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let (fx, fy) = self.fluxes(w);
        for j in 0..ny {
            for i in 0..nx {
                let mut d = (fx[j * (nx + 1) + i + 1] - fx[j * (nx + 1) + i]) / hx;
                if g.dim() == 2 {
                    d += (fy[(j + 1) * nx + i] - fy[j * nx + i]) / hy;
                }
                out[g.index(i, j)] = d;
            }
        }
    }

    /// Magnitude of the diagonal of `−div(A∇·)`, ignoring cross terms.
    pub(crate) fn diag(&self) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let dir = self.bc == BoundaryCondition::DirichletZero;
        let mut d = vec![0.0; g.cell_count()];
        for j in 0..ny {
            for i in 0..nx {
                let c = g.index(i, j);
                let l = j * (nx + 1) + i;
                let mut s = 0.0;
                for (f, edge) in [(l, i == 0), (l + 1, i + 1 == nx)] {
                    s += self.ax[f] / (hx * hx) * if edge { if dir { 2.0 } else { 0.0 } } else { 1.0 };
                }
                if g.dim() == 2 {
                    for (f, edge) in [(j * nx + i, j == 0), ((j + 1) * nx + i, j + 1 == ny)] {
                        s += self.ay[f] / (hy * hy) * if edge { if dir { 2.0 } else { 0.0 } } else { 1.0 };
                    }
                }
                d[c] = s;
            }
        }
        d
    }

    /// Tridiagonal bands of `div(A∂_x ·)` on a 1D grid.
    fn bands_1d(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.grid.nx();
        let h2 = self.grid.spacing()[0].powi(2);
        let dir = self.bc == BoundaryCondition::DirichletZero;
        let mut lo = vec![0.0; n];
        let mut di = vec![0.0; n];
        let mut up = vec![0.0; n];
        for i in 0..n {
            let (cl, cr) = (self.ax[i] / h2, self.ax[i + 1] / h2);
            if i > 0 {
                lo[i] = cl;
                di[i] -= cl;
            } else if dir {
                di[i] -= 2.0 * cl;
            }
            if i + 1 < n {
                up[i] = cr;
                di[i] -= cr;
            } else if dir {
                di[i] -= 2.0 * cr;
            }
        }
        (lo, di, up)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeOptions {
    pub bc: BoundaryCondition,
    /// Newton stops when `max|R| ≤ newton_tol·(‖u_k‖_∞ + 1)`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Lower clamp for `Φ'` inside the Jacobian.
    pub dphi_floor: f64,
    pub linear: IterOptions,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        Self {
            bc: BoundaryCondition::NoFlux,
            newton_tol: 1e-12,
            max_newton: 50,
            dphi_floor: 1e-12,
            linear: IterOptions { tol: 1e-14, max_iter: 5000 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub newton_iterations: usize,
    /// `max|R|` at exit, relative to `‖u_k‖_∞ + 1`.
    pub residual: f64,
    /// `|Σ u_{k+1} − Σ u_k| h^d`.
    pub mass_change: f64,
}

/// One backward step `u − u_k − δ div(A∇Φ(u)) = 0` at time `t_next`.
pub fn semi_implicit_step(
    uk: &ScalarField,
    delta: f64,
    a: &DiffusionTensor,
    phi: &Nonlinearity,
    t_next: f64,
    opts: &SchemeOptions,
) -> Result<(ScalarField, StepStats)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("time step δ = {delta} must be positive")));
    }
    let g = *uk.grid();
    let (lo, hi) = (uk.min_value(), uk.max_value());
    if !phi.is_monotone_on(lo, hi) {
        return Err(Error::NonMonotone { lo, hi });
    }
    let op = FluxOperator::new(&g, a, t_next, opts.bc);
    let n = g.cell_count();
    let base = uk.values();
    let scale = uk.max_abs() + 1.0;
    let mut u = base.to_vec();
    let mut w = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut r = vec![0.0; n];

    let residual = |u: &[f64], w: &mut [f64], du: &mut [f64], r: &mut [f64]| {
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi = phi.phi(*ui);
        }
        op.apply(w, du);
        for i in 0..n {
            r[i] = u[i] - base[i] - delta * du[i];
        }
        linalg::max_abs(r) / scale
    };

    let mut res = residual(&u, &mut w, &mut du, &mut r);
    let mut it = 0;
    // At least one Newton update so the mass identity of the linearised
    // system is always inherited.
    while it == 0 || res > opts.newton_tol {
        if it >= opts.max_newton {
            return Err(Error::NewtonDiverged { iterations: it, residual: res });
        }
        it += 1;
        let dp: Vec<f64> = u.iter().map(|&z| phi.dphi(z).max(opts.dphi_floor)).collect();
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = if g.dim() == 1 {
            let (lo_b, di_b, up_b) = op.bands_1d();
            let lower: Vec<f64> = (0..n).map(|i| if i > 0 { -delta * lo_b[i] * dp[i - 1] } else { 0.0 }).collect();
            let diag: Vec<f64> = (0..n).map(|i| 1.0 - delta * di_b[i] * dp[i]).collect();
            let upper: Vec<f64> = (0..n).map(|i| if i + 1 < n { -delta * up_b[i] * dp[i + 1] } else { 0.0 }).collect();
            linalg::thomas(&lower, &diag, &upper, &rhs)?
        } else {
            let diag: Vec<f64> = op.diag().iter().zip(&dp).map(|(d, p)| 1.0 + delta * d * p).collect();
            let apply = |v: &[f64], out: &mut [f64]| {
                let sv: Vec<f64> = v.iter().zip(&dp).map(|(a, b)| a * b).collect();
                op.apply(&sv, out);
                for i in 0..n {
                    out[i] = v[i] - delta * out[i];
                }
            };
            let mut x = vec![0.0; n];
            linalg::bicgstab(apply, &diag, &rhs, &mut x, opts.linear)?;
            x
        };
        for (ui, si) in u.iter_mut().zip(&step) {
            *ui += si;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NewtonDiverged { iterations: it, residual: f64::INFINITY });
        }
        res = residual(&u, &mut w, &mut du, &mut r);
    }
    let vol = g.cell_volume();
    let mass_change = (u.iter().sum::<f64>() - base.iter().sum::<f64>()).abs() * vol;
    let out = ScalarField::from_values(g, u)?;
    Ok((out, StepStats { newton_iterations: it, residual: res, mass_change }))
}

/// All `N + 1` time levels of a run plus per-step solver statistics.
#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub t0: f64,
    pub t1: f64,
    pub bc: BoundaryCondition,
    /// `u_0, …, u_N`.
    pub states: Vec<ScalarField>,
    pub stats: Vec<StepStats>,
}

impl SchemeRun {
    pub fn steps(&self) -> usize {
        self.stats.len()
    }

    pub fn delta(&self) -> f64 {
        (self.t1 - self.t0) / self.steps() as f64
    }

    /// `ũ_N = Σ_{k<N} u_k 1_{(t_k, t_{k+1})}`.
    pub fn series(&self) -> Result<StepTimeSeries> {
        StepTimeSeries::new(self.t0, self.t1, self.states[..self.steps()].to_vec())
    }

    pub fn final_state(&self) -> &ScalarField {
        self.states.last().expect("a run holds at least the initial state")
    }

    pub fn masses(&self) -> Vec<f64> {
        self.states.iter().map(ScalarField::integral).collect()
    }

    /// Smallest value over all levels.
    pub fn min_value(&self) -> f64 {
        self.states.iter().map(ScalarField::min_value).fold(f64::INFINITY, f64::min)
    }
}

pub fn run_scheme(
    u0: &ScalarField,
    t0: f64,
    t1: f64,
    steps: usize,
    a: &DiffusionTensor,
    phi: &Nonlinearity,
    opts: &SchemeOptions,
) -> Result<SchemeRun> {
    if steps == 0 || !(t1 > t0) {
        return Err(Error::InvalidParameter("a run needs N ≥ 1 steps on a non-empty interval".into()));
    }
    let delta = (t1 - t0) / steps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut stats = Vec::with_capacity(steps);
    states.push(u0.unmasked());
    for k in 0..steps {
        let t_next = t0 + (k + 1) as f64 * delta;
        let (next, st) = semi_implicit_step(&states[k], delta, a, phi, t_next, opts)?;
        states.push(next);
        stats.push(st);
    }
    Ok(SchemeRun { t0, t1, bc: opts.bc, states, stats })
}
