//! Piecewise-constant-in-time families `ũ_N(t) = u_k` on `(t_k, t_{k+1})`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField, StaggeredVectorField};

/// A spatial field that can be stored in a step series.
pub trait Slice: Clone + Send + Sync {
    fn grid(&self) -> &Grid;
    fn inner(&self, other: &Self) -> Result<f64>;
    fn sub(&self, other: &Self) -> Result<Self>;
    fn zeros_like(&self) -> Self;

    fn l2_sq(&self) -> f64 {
        self.inner(self).unwrap_or(0.0)
    }

    fn dist_sq(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.l2_sq())
    }
}

impl Slice for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }
    fn inner(&self, other: &Self) -> Result<f64> {
        ScalarField::inner(self, other)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        self.unmasked().zip_with(other, |a, b| a - b)
    }
    fn zeros_like(&self) -> Self {
        ScalarField::zeros(*ScalarField::grid(self))
    }
}

impl Slice for StaggeredVectorField {
    fn grid(&self) -> &Grid {
        StaggeredVectorField::grid(self)
    }
    fn inner(&self, other: &Self) -> Result<f64> {
        self.without_domain().inner(other, None)
    }
    fn sub(&self, other: &Self) -> Result<Self> {
        StaggeredVectorField::sub(&self.without_domain(), other)
    }
    fn zeros_like(&self) -> Self {
        StaggeredVectorField::zeros(*StaggeredVectorField::grid(self))
    }
}

/// Step function on `[a, b]` with `N` equal steps.
#[derive(Debug, Clone)]
pub struct StepSeries<T> {
    a: f64,
    b: f64,
    slices: Vec<T>,
}

pub type StepTimeSeries = StepSeries<ScalarField>;
pub type VectorSeries = StepSeries<StaggeredVectorField>;

impl<T: Slice> StepSeries<T> {
    pub fn new(a: f64, b: f64, slices: Vec<T>) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("time interval [{a}, {b}] is empty")));
        }
        let Some(first) = slices.first() else {
            return Err(Error::InvalidParameter("a step series needs at least one slice".into()));
        };
        let g = *first.grid();
        if slices.iter().any(|s| *s.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { a, b, slices })
    }

    /// The same field on every step.
    pub fn constant(a: f64, b: f64, n: usize, f: T) -> Result<Self> {
        Self::new(a, b, vec![f; n.max(1)])
    }

    /// Slices sampled from `f(t_k)` at the left endpoints.
    pub fn sample(a: f64, b: f64, n: usize, f: impl Fn(f64) -> T + Sync + Send) -> Result<Self> {
        let delta = (b - a) / n as f64;
        let slices = (0..n).into_par_iter().map(|k| f(a + k as f64 * delta)).collect();
        Self::new(a, b, slices)
    }

    /// Slices sampled at step midpoints.
    pub fn sample_midpoints(a: f64, b: f64, n: usize, f: impl Fn(f64) -> T + Sync + Send) -> Result<Self> {
        let delta = (b - a) / n as f64;
        let slices = (0..n).into_par_iter().map(|k| f(a + (k as f64 + 0.5) * delta)).collect();
        Self::new(a, b, slices)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn steps(&self) -> usize {
        self.slices.len()
    }

    pub fn delta(&self) -> f64 {
        (self.b - self.a) / self.slices.len() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.a + k as f64 * self.delta()
    }

    pub fn grid(&self) -> &Grid {
        self.slices[0].grid()
    }

    pub fn slices(&self) -> &[T] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<T> {
        self.slices
    }

    /// Step index containing `t`; `t_k` itself is assigned to step `k`.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        if t < self.a || t > self.b {
            return None;
        }
        let k = ((t - self.a) / self.delta()).floor() as usize;
        Some(k.min(self.steps() - 1))
    }

    pub fn at(&self, t: f64) -> Option<&T> {
        self.step_of(t).map(|k| &self.slices[k])
    }

    pub fn map<U: Slice>(&self, f: impl Fn(&T) -> U + Sync + Send) -> StepSeries<U> {
        StepSeries { a: self.a, b: self.b, slices: self.slices.par_iter().map(f).collect() }
    }

    pub fn try_map<U: Slice>(&self, f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<StepSeries<U>> {
        let slices = self.slices.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(StepSeries { a: self.a, b: self.b, slices })
    }

    pub fn map_indexed<U: Slice>(&self, f: impl Fn(usize, &T) -> Result<U> + Sync + Send) -> Result<StepSeries<U>> {
        let slices =
            self.slices.par_iter().enumerate().map(|(k, s)| f(k, s)).collect::<Result<Vec<_>>>()?;
        Ok(StepSeries { a: self.a, b: self.b, slices })
    }

    pub fn check_partition(&self, other: &StepSeries<impl Slice>) -> Result<()> {
        if self.steps() != other.steps() || self.a != other.a || self.b != other.b {
            return Err(Error::PartitionMismatch(format!(
                "[{}, {}] / {} steps vs [{}, {}] / {} steps",
                self.a,
                self.b,
                self.steps(),
                other.a,
                other.b,
                other.steps()
            )));
        }
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn zip_map<U: Slice, V: Slice>(
        &self,
        other: &StepSeries<U>,
        f: impl Fn(&T, &U) -> Result<V> + Sync + Send,
    ) -> Result<StepSeries<V>> {
        self.check_partition(other)?;
        let slices = self
            .slices
            .par_iter()
            .zip(other.slices.par_iter())
            .map(|(x, y)| f(x, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(StepSeries { a: self.a, b: self.b, slices })
    }

    /// Space-time inner product `Σ_k δ ⟨u_k, v_k⟩`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_partition(other)?;
        let mut acc = 0.0;
        for (x, y) in self.slices.iter().zip(&other.slices) {
            acc += x.inner(y)?;
        }
        Ok(acc * self.delta())
    }

    /// `‖ũ‖_{L²(I × space)}`.
    pub fn l2_norm(&self) -> f64 {
        (self.slices.iter().map(Slice::l2_sq).sum::<f64>() * self.delta()).sqrt()
    }

    /// Exact `L²` distance to a series on the same interval, for any pair of
    /// step counts (merged breakpoints).
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        if self.a != other.a || self.b != other.b {
            return Err(Error::PartitionMismatch("series live on different time intervals".into()));
        }
        if self.grid() != other.grid() {
            return Err(Error::GridMismatch);
        }
        let (n, m) = (self.steps(), other.steps());
        if n == m {
            let mut acc = 0.0;
            for (x, y) in self.slices.iter().zip(&other.slices) {
                acc += x.dist_sq(y)?;
            }
            return Ok((acc * self.delta()).sqrt());
        }
        // Walk the merged partition in units of 1/(n m) of the interval.
        let len = self.b - self.a;
        let mut acc = 0.0;
        let (mut i, mut j) = (0usize, 0usize);
        let mut pos = 0usize;
        let total = n * m;
        while pos < total {
            let next = ((i + 1) * m).min((j + 1) * n);
            acc += self.slices[i].dist_sq(&other.slices[j])? * (next - pos) as f64;
            pos = next;
            if pos == (i + 1) * m {
                i += 1;
            }
            if pos == (j + 1) * n {
                j += 1;
            }
        }
        Ok((acc * len / total as f64).sqrt())
    }

    /// Splits every step into `factor` equal substeps.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        let slices = self.slices.iter().flat_map(|s| std::iter::repeat_n(s.clone(), factor)).collect();
        Ok(Self { a: self.a, b: self.b, slices })
    }

    /// Jumps `u_{k+1} - u_k` of the step function, `N - 1` of them.
    pub fn jumps(&self) -> Result<Vec<T>> {
        self.slices.windows(2).map(|w| w[1].sub(&w[0])).collect()
    }

    /// `λ_σ f(t) = f(t − σ)` with zero fill; `σ` must be a multiple of `δ`.
    pub fn shift_time(&self, sigma: f64) -> Result<Self> {
        let delta = self.delta();
        let q = sigma / delta;
        let r = q.round();
        if (q - r).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(Error::NonLatticeShift(format!(
                "time shift {sigma} is not a multiple of the step {delta}"
            )));
        }
        let s = r as i64;
        let n = self.steps() as i64;
        let zero = self.slices[0].zeros_like();
        let slices = (0..n)
            .map(|k| {
                let src = k - s;
                if (0..n).contains(&src) {
                    self.slices[src as usize].clone()
                } else {
                    zero.clone()
                }
            })
            .collect();
        Ok(Self { a: self.a, b: self.b, slices })
    }

    /// `‖λ_σ f − f‖_{L²(I × space)}` for any real `σ`, zero fill outside `I`.
    pub fn translation_distance(&self, sigma: f64) -> Result<f64> {
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let n = self.steps();
        let delta = self.delta();
        let mut cuts: Vec<f64> = (0..=n).map(|k| self.time(k)).collect();
        cuts.extend((0..=n).map(|k| self.time(k) + sigma).filter(|t| *t > self.a && *t < self.b));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * delta);
        let mut acc = 0.0f64;
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let mid = 0.5 * (t0 + t1);
            let Some(here) = self.index_open(mid) else { continue };
            let there = self.index_open(mid - sigma);
            let d2 = match there {
                Some(k) if k == here => 0.0,
                Some(k) => self.slices[k].dist_sq(&self.slices[here])?,
                None => self.slices[here].l2_sq(),
            };
            acc += d2 * (t1 - t0);
        }
        Ok(acc.sqrt())
    }

    fn index_open(&self, t: f64) -> Option<usize> {
        if t <= self.a || t >= self.b {
            return None;
        }
        let k = ((t - self.a) / self.delta()).floor() as usize;
        Some(k.min(self.steps() - 1))
    }
}

impl StepSeries<ScalarField> {
    pub fn l1_norm(&self) -> f64 {
        let vol = self.grid().cell_volume();
        self.slices.iter().map(|s| s.values().iter().map(|v| v.abs()).sum::<f64>()).sum::<f64>()
            * vol
            * self.delta()
    }

    /// Space-time `L^p` norm; `p = ∞` gives the max.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.slices.iter().map(ScalarField::max_abs).fold(0.0, f64::max));
        }
        let mut acc = 0.0;
        for s in &self.slices {
            acc += crate::grid::lp_norm(s, p)?.powf(p);
        }
        Ok((acc * self.delta()).powf(1.0 / p))
    }
}
