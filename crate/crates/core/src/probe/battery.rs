use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng as _;

use crate::divfree::{clamp_nodes, curl_of_nodes};
use crate::error::{Error, Result};
use crate::grid::{Grid, RasterDomain, ScalarField, StaggeredVectorField};
use crate::rng;
use crate::series::{Slice, StepSeries};

use super::families::bump;

/// `τ(t) = bump((t − c)/w)·cos(2πf(t − c)/L + phase)` with `L` the interval length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFactor {
    pub center: f64,
    pub half_width: f64,
    pub frequency: f64,
    pub phase: f64,
    pub length: f64,
    /// `‖τ‖_{L²}` by quadrature.
    pub l2: f64,
}

impl TimeFactor {
    pub fn new(center: f64, half_width: f64, frequency: f64, phase: f64, length: f64) -> Self {
        let mut t = Self { center, half_width, frequency, phase, length, l2: 0.0 };
        let n = 4096;
        let h = 2.0 * half_width / n as f64;
        let sq: f64 = (0..n).map(|i| t.eval(center - half_width + (i as f64 + 0.5) * h).powi(2)).sum();
        t.l2 = (sq * h).sqrt();
        t
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = t - self.center;
        bump(s / self.half_width) * (2.0 * PI * self.frequency * s / self.length + self.phase).cos()
    }
}

/// Test functions `ψ = τ(t) w(x)` with `w` compactly supported in an inner
/// set `K`. Each `w` carries its weight `Σ_{|α|≤N} ‖D^α w‖_{L²}`.
#[derive(Debug, Clone)]
pub struct Battery<T> {
    pub space: Vec<(T, f64)>,
    pub time: Vec<TimeFactor>,
    pub order: usize,
}

/// Values on rectangular lattices, so forward differences make sense.
trait Lattice {
    fn lattices(&self) -> Vec<(Vec<f64>, usize, usize)>;
}

impl Lattice for ScalarField {
    fn lattices(&self) -> Vec<(Vec<f64>, usize, usize)> {
        let g = self.grid();
        vec![(self.unmasked().into_values(), g.nx(), g.ny())]
    }
}

impl Lattice for StaggeredVectorField {
    fn lattices(&self) -> Vec<(Vec<f64>, usize, usize)> {
        let g = self.grid();
        let mut out = vec![(self.ux().to_vec(), g.nx() + 1, g.ny())];
        if g.dim() == 2 {
            out.push((self.uy().to_vec(), g.nx(), g.ny() + 1));
        }
        out
    }
}

fn diff(v: &[f64], w: usize, h: usize, axis: usize, step: f64) -> (Vec<f64>, usize, usize) {
    if axis == 0 {
        let nw = w.saturating_sub(1);
        let out = (0..h).flat_map(|j| (0..nw).map(move |i| (v[j * w + i + 1] - v[j * w + i]) / step)).collect();
        (out, nw, h)
    } else {
        let nh = h.saturating_sub(1);
        let out = (0..nh).flat_map(|j| (0..w).map(move |i| (v[(j + 1) * w + i] - v[j * w + i]) / step)).collect();
        (out, w, nh)
    }
}

/// `Σ_{|α|≤N} ‖D^α w‖` with forward differences on each lattice.
fn sobolev_weight<T: Lattice>(w: &T, g: &Grid, order: usize) -> f64 {
    let vol = g.cell_volume();
    let [hx, hy] = g.spacing();
    let axes = if g.dim() == 2 { 2 } else { 1 };
    let mut total = 0.0;
    for (v, w, h) in w.lattices() {
        for ax in 0..=order {
            for ay in 0..=(order - ax) {
                if ay > 0 && axes == 1 {
                    continue;
                }
                let mut cur = (v.clone(), w, h);
                for _ in 0..ax {
                    cur = diff(&cur.0, cur.1, cur.2, 0, hx);
                }
                for _ in 0..ay {
                    cur = diff(&cur.0, cur.1, cur.2, 1, hy);
                }
                total += (cur.0.iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
            }
        }
    }
    total
}

/// Bump centres: 5 seeded cells per scale, each at least `r` inside `k`.
fn placements(k: &RasterDomain, seed: u64) -> Vec<([f64; 2], f64)> {
    let g = k.grid();
    let sd = k.signed_distance();
    let size = k.measure().powf(1.0 / g.dim() as f64);
    let mut out = Vec::new();
    for (s, r) in [0.25, 0.125, 0.0625].iter().map(|f| f * size).enumerate() {
        if r < 1.5 * g.min_spacing() {
            continue;
        }
        let ok: Vec<usize> = k.cells().filter(|&c| sd[c] >= r).collect();
        if ok.is_empty() {
            continue;
        }
        let mut rng = rng::stream(seed, s as u64);
        for _ in 0..5 {
            out.push((g.center(ok[rng.random_range(0..ok.len())]), r));
        }
    }
    out
}

fn time_factors(interval: (f64, f64), steps: usize, seed: u64) -> Vec<TimeFactor> {
    let (a, b) = interval;
    let len = b - a;
    let mut freqs = vec![0.0];
    let mut f = 1usize;
    while f <= steps / 4 {
        freqs.push(f as f64);
        f *= 2;
    }
    let mut rng = rng::stream(seed, 99);
    let mut out = Vec::new();
    for w in [1.0, 0.5, 0.25] {
        let hw = 0.5 * w * len;
        for _ in 0..5 {
            let c = a + hw + rng.random::<f64>() * (len - 2.0 * hw);
            for &fr in &freqs {
                for phase in [0.0, 0.5 * PI] {
                    if fr == 0.0 && phase != 0.0 {
                        continue;
                    }
                    out.push(TimeFactor::new(c, hw, fr, phase, len));
                }
            }
        }
    }
    out
}

impl<T> Battery<T> {
    pub fn len(&self) -> usize {
        self.space.len() * self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Battery<ScalarField> {
    /// Scalar bumps inside `k` at three scales.
    pub fn scalar(k: &RasterDomain, interval: (f64, f64), steps: usize, order: usize, seed: u64) -> Result<Self> {
        let g = *k.grid();
        let space: Vec<(ScalarField, f64)> = placements(k, seed)
            .into_iter()
            .map(|(c, r)| {
                let w = ScalarField::from_fn(g, |x| {
                    let d2 = (x[0] - c[0]).powi(2) + if g.dim() == 2 { (x[1] - c[1]).powi(2) } else { 0.0 };
                    bump(d2.sqrt() / r)
                });
                let weight = sobolev_weight(&w, &g, order);
                (w, weight)
            })
            .collect();
        Self::finish(space, interval, steps, order, seed)
    }
}

impl Battery<StaggeredVectorField> {
    /// Divergence-free fields `curl(bump)` supported inside `k`, zero trace on `k`.
    pub fn divfree(k: &RasterDomain, interval: (f64, f64), steps: usize, order: usize, seed: u64) -> Result<Self> {
        let g = *k.grid();
        if g.dim() != 2 {
            return Err(Error::Unsupported("divergence-free battery needs a 2D grid".into()));
        }
        let [hx, hy] = g.spacing();
        let space = placements(k, seed)
            .into_iter()
            .map(|(c, r)| {
                let mut psi = Vec::with_capacity((g.nx() + 1) * (g.ny() + 1));
                for j in 0..=g.ny() {
                    for i in 0..=g.nx() {
                        let d = ((i as f64 * hx - c[0]).powi(2) + (j as f64 * hy - c[1]).powi(2)).sqrt();
                        psi.push(r * bump(d / r));
                    }
                }
                clamp_nodes(k, &mut psi);
                let w = curl_of_nodes(&g, &psi)?.with_domain(Arc::new(k.clone()))?;
                let weight = sobolev_weight(&w, &g, order);
                Ok((w, weight))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::finish(space, interval, steps, order, seed)
    }
}

impl<T> Battery<T> {
    fn finish(space: Vec<(T, f64)>, interval: (f64, f64), steps: usize, order: usize, seed: u64) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::InvalidParameter("inner set is too small for any test function".into()));
        }
        Ok(Self { space, time: time_factors(interval, steps, seed), order })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualTimeEstimate {
    /// `max_ψ |⟨∂_t u, ψ⟩| / (‖τ‖ Σ‖D^α w‖)`.
    pub value: f64,
    /// `(space index, time index)` of the maximiser.
    pub argmax: (usize, usize),
}

/// Lower estimate of `‖∂_t u‖_{L²(H^{-N})}` on the battery, with the
/// distributional derivative of the step function
/// `⟨∂_t u, τw⟩ = Σ_k (⟨u_k, w⟩ − ⟨u_{k−1}, w⟩) τ(t_k)` over interior jumps.
pub fn dual_time_estimate<T: Slice>(u: &StepSeries<T>, battery: &Battery<T>) -> Result<DualTimeEstimate> {
    let (a, _) = u.interval();
    let dt = u.delta();
    let mut best = DualTimeEstimate { value: 0.0, argmax: (0, 0) };
    for (si, (w, weight)) in battery.space.iter().enumerate() {
        let p: Vec<f64> = u.slices().iter().map(|s| s.inner(w)).collect::<Result<_>>()?;
        for (ti, tau) in battery.time.iter().enumerate() {
            let pairing: f64 = (1..p.len()).map(|k| (p[k] - p[k - 1]) * tau.eval(a + k as f64 * dt)).sum();
            let v = pairing.abs() / (tau.l2 * weight);
            if v > best.value {
                best = DualTimeEstimate { value: v, argmax: (si, ti) };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::growth_per_doubling;
    use crate::series::StepTimeSeries;

    fn setup() -> (Grid, RasterDomain) {
        let g = Grid::unit(2, 48).unwrap();
        (g, RasterDomain::disk(g, g.box_center(), 0.35))
    }

    #[test]
    fn time_factor_norm_matches_closed_form_bump() {
        let t = TimeFactor::new(0.5, 0.5, 0.0, 0.0, 1.0);
        // ∫ bump(s)² ds over (−1, 1), halved by the width.
        let n = 200_000;
        let h = 2.0 / n as f64;
        let exact: f64 = (0..n).map(|i| bump(-1.0 + (i as f64 + 0.5) * h).powi(2)).sum::<f64>() * h * 0.5;
        assert!((t.l2 - exact.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn constant_in_time_is_zero() {
        let (g, k) = setup();
        let f = ScalarField::from_fn(g, |x| x[0] * x[1]);
        let u = StepTimeSeries::constant(0.0, 1.0, 32, f).unwrap();
        let b = Battery::scalar(&k, (0.0, 1.0), 32, 1, 3).unwrap();
        assert_eq!(dual_time_estimate(&u, &b).unwrap().value, 0.0);
    }

    #[test]
    fn single_jump_pairs_with_the_jump_time() {
        let (g, k) = setup();
        let f = ScalarField::from_fn(g, |x| (3.0 * x[0]).sin() + x[1]);
        let steps = 16;
        let jump = 9;
        let u = StepTimeSeries::sample_midpoints(0.0, 1.0, steps, |t| {
            if t > jump as f64 / steps as f64 { f.clone() } else { ScalarField::zeros(g) }
        })
        .unwrap();
        let full = Battery::scalar(&k, (0.0, 1.0), steps, 1, 5).unwrap();
        let one = Battery { space: vec![full.space[0].clone()], time: vec![full.time[0]], order: 1 };
        let (w, weight) = &one.space[0];
        let tau = one.time[0];
        let expect = (f.inner(w).unwrap() * tau.eval(jump as f64 / steps as f64)).abs() / (tau.l2 * weight);
        let got = dual_time_estimate(&u, &one).unwrap().value;
        assert!((got - expect).abs() <= 1e-14 * expect, "{got} {expect}");
    }

    #[test]
    fn oscillation_grows_linearly() {
        let (g, k) = setup();
        let w0 = ScalarField::from_fn(g, |x| (2.0 * x[0] + x[1]).cos());
        let labels = [1usize, 2, 4, 8];
        let b = Battery::scalar(&k, (0.0, 1.0), 64, 1, 7).unwrap();
        let vals: Vec<f64> = labels
            .iter()
            .map(|&n| {
                let u = StepTimeSeries::sample_midpoints(0.0, 1.0, 64, |t| w0.scale((2.0 * PI * n as f64 * t).sin())).unwrap();
                dual_time_estimate(&u, &b).unwrap().value
            })
            .collect();
        assert!(growth_per_doubling(&labels, &vals) >= 1.8, "{vals:?}");
    }

    #[test]
    fn divfree_battery_is_supported_inside() {
        let (g, k) = setup();
        let b = Battery::divfree(&k, (0.0, 1.0), 16, 1, 1).unwrap();
        assert_eq!(b.space.len(), 15);
        for (w, weight) in &b.space {
            assert!(crate::divfree::divergence_residual(w, &k) < 1e-10);
            assert_eq!(crate::divfree::normal_trace(w, &k).unwrap().max_abs(), 0.0);
            assert!(*weight > w.l2_norm(None));
        }
        let _ = g;
    }

    #[test]
    fn sobolev_weight_of_constant_lattice_is_its_l2_norm() {
        let g = Grid::unit(2, 8).unwrap();
        let f = ScalarField::constant(g, 2.0);
        assert!((sobolev_weight(&f, &g, 2) - 2.0).abs() < 1e-14);
    }
}
