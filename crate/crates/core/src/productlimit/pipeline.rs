use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient, RasterDomain, ScalarField};
use crate::mollify::{make_mollifier, Mollifier};
use crate::parabolic::time_derivative_tv;
use crate::series::StepTimeSeries;

/// Sequences `(a_n)`, `(b_n)` indexed by `n`, with declared weak limits.
#[derive(Debug, Clone)]
pub struct ProductFamily {
    pub n: Vec<usize>,
    pub a: Vec<StepTimeSeries>,
    pub b: Vec<StepTimeSeries>,
    pub a_limit: StepTimeSeries,
    pub b_limit: StepTimeSeries,
}

impl ProductFamily {
    pub fn new(
        n: Vec<usize>,
        a: Vec<StepTimeSeries>,
        b: Vec<StepTimeSeries>,
        a_limit: StepTimeSeries,
        b_limit: StepTimeSeries,
    ) -> Result<Self> {
        if n.is_empty() || n.len() != a.len() || n.len() != b.len() {
            return Err(Error::InvalidParameter("family labels and members must have equal, nonzero length".into()));
        }
        for (an, bn) in a.iter().zip(&b) {
            an.check_partition(bn)?;
            an.grid().check_same(a_limit.grid())?;
        }
        a_limit.check_partition(&b_limit)?;
        Ok(Self { n, a, b, a_limit, b_limit })
    }
}

/// The four lines of `ab − a_n b_n` paired with `θ`, for one `(n, k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineCell {
    pub n: usize,
    pub k: u32,
    /// `⟨ab − a(b⋆φ_k), θ⟩`.
    pub step1: f64,
    /// `⟨a(b⋆φ_k) − a_n(b_n⋆φ_k), θ⟩`.
    pub step2: f64,
    /// `⟨a_n(b_n⋆φ_k) − (a_n b_n)⋆φ_k, θ⟩`, the commutator pairing.
    pub step3: f64,
    /// `⟨(a_n b_n)⋆φ_k − a_n b_n, θ⟩`.
    pub step4: f64,
    /// `⟨a_n b_n, θ⋆φ_k − θ⟩`.
    pub step4_transposed: f64,
    /// `⟨ab − a_n b_n, θ⟩`.
    pub total: f64,
    /// `‖a_n(b_n⋆φ_k) − (a_n b_n)⋆φ_k‖_{L¹}`.
    pub commutator_l1: f64,
}

impl PipelineCell {
    /// `|Σ steps − total|` relative to the largest magnitude involved.
    pub fn accounting_error(&self) -> f64 {
        let s = self.step1 + self.step2 + self.step3 + self.step4;
        let scale = [self.step1, self.step2, self.step3, self.step4, self.total]
            .iter()
            .fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        (s - self.total).abs() / scale
    }

    pub fn transposition_error(&self) -> f64 {
        (self.step4 - self.step4_transposed).abs() / self.step4.abs().max(self.step4_transposed.abs()).max(f64::MIN_POSITIVE)
    }
}

/// Per-member measurements of the hypotheses the pipeline rests on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisRow {
    pub n: usize,
    /// `‖∇a_n‖_{L²(I×Ω)}`.
    pub grad_a_l2: f64,
    /// `‖b_n‖_{L^∞}`.
    pub b_sup: f64,
    /// `Σ ‖b_{n,j+1} − b_{n,j}‖_{H^{-m}}`.
    pub b_time_tv: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub cells: Vec<PipelineCell>,
    pub hypotheses: Vec<HypothesisRow>,
    /// Hypotheses whose measured value grows by more than ×2 across the family.
    pub failing: Vec<&'static str>,
}

impl PipelineReport {
    pub const COLUMNS: [&'static str; 7] = ["n", "k", "step1", "step2", "step3", "step4", "total"];

    pub fn cell(&self, n: usize, k: u32) -> Option<&PipelineCell> {
        self.cells.iter().find(|c| c.n == n && c.k == k)
    }

    /// `|total|` for each `n` (totals do not depend on `k`).
    pub fn totals(&self) -> Vec<(usize, f64)> {
        let k0 = self.cells[0].k;
        self.cells.iter().filter(|c| c.k == k0).map(|c| (c.n, c.total.abs())).collect()
    }

    /// Last `|total|` is at most half the first, or everything is negligible.
    pub fn total_decays(&self) -> bool {
        let t = self.totals();
        let (first, last) = (t[0].1, t[t.len() - 1].1);
        last <= 0.5 * first || t.iter().all(|x| x.1 <= 1e-12)
    }

    pub fn worst_accounting_error(&self) -> f64 {
        self.cells.iter().map(PipelineCell::accounting_error).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        for c in &self.cells {
            out.write_record([
                c.n.to_string(),
                c.k.to_string(),
                format!("{:.16e}", c.step1),
                format!("{:.16e}", c.step2),
                format!("{:.16e}", c.step3),
                format!("{:.16e}", c.step4),
                format!("{:.16e}", c.total),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `∫_I ⟨s(t), θ⟩ dt`.
fn pairing(s: &StepTimeSeries, theta: &ScalarField) -> Result<f64> {
    let mut acc = 0.0;
    for u in s.slices() {
        acc += u.unmasked().inner(theta)?;
    }
    Ok(acc * s.delta())
}

fn product(a: &StepTimeSeries, b: &StepTimeSeries) -> Result<StepTimeSeries> {
    a.zip_map(b, |x, y| x.mul(y))
}

fn cell(fam: &ProductFamily, i: usize, phi: &Mollifier, k: u32, theta: &ScalarField) -> Result<PipelineCell> {
    let (a, b) = (&fam.a_limit, &fam.b_limit);
    let (an, bn) = (&fam.a[i], &fam.b[i]);
    let ab = product(a, b)?;
    let a_bphi = product(a, &phi.convolve_series(b)?)?;
    let anbn = product(an, bn)?;
    let an_bnphi = product(an, &phi.convolve_series(bn)?)?;
    let anbn_phi = phi.convolve_series(&anbn)?;
    let theta_phi = phi.convolve(theta)?;

    let p_ab = pairing(&ab, theta)?;
    let p_a_bphi = pairing(&a_bphi, theta)?;
    let p_anbn = pairing(&anbn, theta)?;
    let p_an_bnphi = pairing(&an_bnphi, theta)?;
    let p_anbn_phi = pairing(&anbn_phi, theta)?;
    let comm = an_bnphi.zip_map(&anbn_phi, |x, y| x.sub(y))?;
    Ok(PipelineCell {
        n: fam.n[i],
        k,
        step1: p_ab - p_a_bphi,
        step2: p_a_bphi - p_an_bnphi,
        step3: p_an_bnphi - p_anbn_phi,
        step4: p_anbn_phi - p_anbn,
        step4_transposed: pairing(&anbn, &theta_phi.sub(theta)?)?,
        total: p_ab - p_anbn,
        commutator_l1: comm.l1_norm(),
    })
}

/// Largest value relative to the first member.
fn growth(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(0.0, f64::max);
    if hi == 0.0 {
        1.0
    } else {
        hi / values[0].max(f64::MIN_POSITIVE)
    }
}

/// Pairs each line of the product decomposition with `θ` for every `n` and `k`.
pub fn product_pipeline(fam: &ProductFamily, theta: &ScalarField, ks: &[u32], m: u32) -> Result<PipelineReport> {
    fam.a_limit.grid().check_same(theta.grid())?;
    if ks.is_empty() {
        return Err(Error::InvalidParameter("pipeline needs at least one k".into()));
    }
    let g = *theta.grid();
    let phis: Vec<(u32, Mollifier)> = ks.iter().map(|&k| Ok((k, make_mollifier(k, &g)?))).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..fam.n.len()).flat_map(|i| (0..phis.len()).map(move |j| (i, j))).collect();
    let cells: Vec<PipelineCell> =
        jobs.par_iter().map(|&(i, j)| cell(fam, i, &phis[j].1, phis[j].0, theta)).collect::<Result<_>>()?;

    let full = RasterDomain::full(g);
    let hypotheses: Vec<HypothesisRow> = (0..fam.n.len())
        .into_par_iter()
        .map(|i| {
            let an = &fam.a[i];
            let grad_sq: f64 = an.slices().iter().map(|u| gradient(&u.unmasked()).l2_norm(None).powi(2)).sum();
            let bn = &fam.b[i];
            Ok(HypothesisRow {
                n: fam.n[i],
                grad_a_l2: (grad_sq * an.delta()).sqrt(),
                b_sup: bn.slices().iter().map(ScalarField::max_abs).fold(0.0, f64::max),
                b_time_tv: time_derivative_tv(&bn.map(ScalarField::unmasked), m, &full)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut failing = Vec::new();
    let cols: [(&'static str, Vec<f64>); 3] = [
        ("grad_a_l2", hypotheses.iter().map(|h| h.grad_a_l2).collect()),
        ("b_sup", hypotheses.iter().map(|h| h.b_sup).collect()),
        ("b_time_tv", hypotheses.iter().map(|h| h.b_time_tv).collect()),
    ];
    for (name, v) in cols {
        if growth(&v) > 2.0 {
            failing.push(name);
        }
    }
    Ok(PipelineReport { cells, hypotheses, failing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn theta(g: Grid) -> ScalarField {
        ScalarField::from_fn(g, |p| (-(p[0] - 0.5).powi(2) / 0.02).exp())
    }

    #[test]
    fn constant_family_has_zero_total() {
        let g = Grid::new_1d(512, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin() + 0.5);
        let s = StepTimeSeries::constant(0.0, 1.0, 4, f).unwrap();
        let fam = ProductFamily::new(vec![1, 2], vec![s.clone(); 2], vec![s.clone(); 2], s.clone(), s).unwrap();
        let r = product_pipeline(&fam, &theta(g), &[4, 8, 16, 32], 1).unwrap();
        for c in &r.cells {
            assert_eq!(c.total, 0.0);
            assert!(c.accounting_error() < 1e-10);
            assert!(c.transposition_error() < 1e-10);
        }
        let s3: Vec<f64> = [4u32, 8, 16, 32].iter().map(|&k| r.cell(1, k).unwrap().step3.abs()).collect();
        assert!(s3.windows(2).all(|w| w[1] < w[0]));
        assert!(r.failing.is_empty());
    }

    #[test]
    fn oscillating_square_does_not_vanish() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let ns = vec![2usize, 4, 8, 16];
        let members: Vec<StepTimeSeries> = ns
            .iter()
            .map(|&n| {
                StepTimeSeries::sample_midpoints(0.0, 1.0, 8 * n, move |t| {
                    ScalarField::from_fn(g, move |p| (2.0 * PI * n as f64 * t).sin() * (PI * p[0]).sin())
                })
                .unwrap()
            })
            .collect();
        let zero = StepTimeSeries::constant(0.0, 1.0, 1, ScalarField::zeros(g)).unwrap();
        let fam = ProductFamily::new(ns.clone(), members.clone(), members, zero.clone(), zero).unwrap();
        let th = theta(g);
        let r = product_pipeline(&fam, &th, &[8, 16], 1).unwrap();
        let half = 0.5 * ScalarField::from_fn(g, |p| (PI * p[0]).sin().powi(2)).inner(&th).unwrap();
        for (_, t) in r.totals() {
            assert!((t - half).abs() < 0.02 * half);
        }
        assert!(!r.total_decays());
        assert_eq!(r.failing, vec!["b_time_tv"]);
        assert!(r.worst_accounting_error() < 1e-10);
    }

    #[test]
    fn translating_family_converges() {
        let g = Grid::new_1d(1024, 1.0).unwrap();
        let prof = |x: f64| (-(x - 0.5).powi(2) / 0.01).exp();
        let ns = vec![1usize, 2, 4, 8, 16, 32];
        let members: Vec<StepTimeSeries> = ns
            .iter()
            .map(|&n| StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, move |p| prof(p[0] + 1.0 / n as f64))).unwrap())
            .collect();
        let b = StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, |p| 1.0 + p[0])).unwrap();
        let a = StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, |p| prof(p[0]))).unwrap();
        let fam = ProductFamily::new(ns, members, vec![b.clone(); 6], a, b).unwrap();
        let r = product_pipeline(&fam, &theta(g), &[4, 16, 64], 1).unwrap();
        assert!(r.total_decays());
        let t = r.totals();
        assert!(t[5].1 < 0.1 * t[0].1);
        assert!(r.worst_accounting_error() < 1e-10);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 18);
    }
}
