//! Small dense/iterative linear algebra kernels shared by the solvers.
//!
//! All reductions run sequentially in index order so results are bitwise
//! reproducible.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Solves a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` couples row `i` to `i-1` (`lower[0]` unused), `upper[i]` couples
/// row `i` to `i+1` (last entry unused).
pub fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::InvalidParameter("tridiagonal bands have inconsistent lengths".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv == 0.0 || !piv.is_finite() {
        return Err(Error::SolverFailed("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - lower[i] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::SolverFailed(format!("zero pivot at row {i} in tridiagonal solve")));
        }
        c[i] = if i + 1 < n { upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy)]
pub struct IterOptions {
    /// Relative residual target `‖r‖ ≤ tol·‖b‖`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterOptions {
    fn default() -> Self {
        Self { tol: 1e-13, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator.
///
/// `project`, when given, is applied to every residual and search direction;
/// it is used to stay on the mean-zero subspace of a singular Neumann operator.
pub fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: IterOptions,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    apply(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    if let Some(p) = project {
        p(&mut r);
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if diag[i] != 0.0 { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    if let Some(p) = project {
        p(&mut z);
    }
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / bnorm;
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailed(format!("CG breakdown (pAp = {pap:.3e})")));
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        if let Some(pr) = project {
            pr(&mut r);
        }
        res = norm2(&r) / bnorm;
        precond(&r, &mut z);
        if let Some(pr) = project {
            pr(&mut z);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if res <= opts.tol * 10.0 {
        return Ok(SolveStats { iterations: opts.max_iter, relative_residual: res });
    }
    Err(Error::SolverFailed(format!(
        "CG stalled after {} iterations at relative residual {res:.3e}",
        opts.max_iter
    )))
}

/// Jacobi-preconditioned BiCGSTAB for a general nonsingular operator.
pub fn bicgstab(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    opts: IterOptions,
) -> Result<SolveStats> {
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, relative_residual: 0.0 });
    }
    let precond = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            out[i] = if diag[i] != 0.0 { v[i] / diag[i] } else { v[i] };
        }
    };
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    apply(x, &mut tmp);
    for i in 0..n {
        r[i] = b[i] - tmp[i];
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut zz = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm2(&r) / bnorm;
    for it in 0..opts.max_iter {
        if res <= opts.tol {
            return Ok(SolveStats { iterations: it, relative_residual: res });
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::SolverFailed("BiCGSTAB breakdown".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        apply(&y, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 {
            return Err(Error::SolverFailed("BiCGSTAB breakdown".into()));
        }
        alpha = rho / rv;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bnorm <= opts.tol {
            axpy(alpha, &y, x);
            return Ok(SolveStats { iterations: it + 1, relative_residual: norm2(&s) / bnorm });
        }
        precond(&s, &mut zz);
        apply(&zz, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * zz[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r) / bnorm;
    }
    Err(Error::SolverFailed(format!(
        "BiCGSTAB stalled after {} iterations at relative residual {res:.3e}",
        opts.max_iter
    )))
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit QL
/// (EISPACK `tql2`). Returns ascending eigenvalues and, column-wise in
/// row-major `n x n` storage, the eigenvectors.
pub fn tql2(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= f64::EPSILON * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::SolverFailed("tql2 failed to converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let h = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * h;
                        z[k * n + i] = c * z[k * n + i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    // Sort ascending.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + col] = z[k * n + src];
        }
    }
    Ok((vals, vecs))
}

/// Lanczos tridiagonalisation from `start` with full reorthogonalisation.
pub struct Lanczos {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Orthonormal Krylov basis, one vector per step.
    pub basis: Vec<Vec<f64>>,
    /// Norm of the residual after the last step (0 on exact invariance).
    pub residual: f64,
}

pub fn lanczos(apply: impl Fn(&[f64], &mut [f64]), start: &[f64], steps: usize) -> Lanczos {
    let n = start.len();
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let s = norm2(start);
    if s == 0.0 || steps == 0 {
        return Lanczos { alpha, beta, basis, residual: 0.0 };
    }
    let mut q: Vec<f64> = start.iter().map(|v| v / s).collect();
    let mut w = vec![0.0; n];
    let mut residual = 0.0;
    for k in 0..steps.min(n) {
        apply(&q, &mut w);
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            axpy(-b, prev, &mut w);
        }
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for v in basis.iter().chain(std::iter::once(&q)) {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        alpha.push(a);
        basis.push(std::mem::take(&mut q));
        let b = norm2(&w);
        residual = b;
        if k + 1 == steps.min(n) || b <= 1e-14 * a.abs().max(1.0) {
            break;
        }
        beta.push(b);
        q = w.iter().map(|v| v / b).collect();
    }
    Lanczos { alpha, beta, basis, residual }
}
