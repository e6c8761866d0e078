use std::io::Write;

use rayon::prelude::*;

use crate::divfree::per_slice_project;
use crate::error::{Error, Result};
use crate::grid::RasterDomain;
use crate::mollify::Mollifier;
use crate::movedom::{bilipschitz, image_raster, transported_poincare, uniform_poincare_sweep, NonCylindricalDomain};
use crate::series::VectorSeries;

use super::{dual_time_estimate, growth_per_doubling, time_shift_safety, vanishes, verdict, Battery, Verdict, VectorFamily};

#[derive(Debug, Clone, PartialEq)]
pub struct NsConfig {
    pub deltas: Vec<f64>,
    pub shifts: Vec<f64>,
    /// Upper exponent of the interpolation `L^r = [L², L^q]_θ`.
    pub q: f64,
    pub r: f64,
    /// Derivative order of the battery weights.
    pub order: usize,
    pub seed: u64,
    /// Time samples for the shift search.
    pub samples: usize,
}

impl Default for NsConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.08, 0.04, 0.02],
            shifts: vec![1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            q: 4.0,
            r: 3.0,
            order: 1,
            seed: 1,
            samples: 64,
        }
    }
}

/// Geometry and constants measured once per `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsLevel {
    pub delta: f64,
    pub radius: f64,
    pub xi: f64,
    /// Shifts actually used, rounded to whole steps.
    pub shifts: Vec<f64>,
    pub poincare: f64,
    /// `μ_{d+1}(Ω̂_{−2δ} ∖ Ω̂_{3δ})`.
    pub band_measure: f64,
    /// Battery growth of the Step-3 constant per doubling of `n`.
    pub step3_growth: f64,
}

/// Per-member values at one `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsMember {
    pub n: usize,
    pub delta: f64,
    /// `‖u⋆φ − P_{2δ}(u⋆φ)‖_{L²(Ω̂_{2δ})}`.
    pub step1: f64,
    /// `(C^A + 1) μ(band)^{1/2 − 1/r} ‖u‖_{L^r(Ω̂)}`.
    pub chain_bound: f64,
    pub step3: f64,
    /// `2 ηδ ‖D u‖_{L²}`.
    pub line1_bound: f64,
    /// `‖u‖₂^{1−θ} ‖u‖_q^θ − ‖u‖_r`.
    pub interpolation_slack: f64,
}

/// One `(n, δ, s)` row of the Step-4 budget on `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NsCell {
    pub n: usize,
    pub delta: f64,
    pub s: f64,
    pub step1: f64,
    pub step3: f64,
    /// `‖(λ_s − Id)(u − u⋆φ)‖`.
    pub line1: f64,
    /// `‖(λ_s − Id)(u⋆φ − P(u⋆φ))‖`.
    pub line2: f64,
    /// `‖(λ_s − Id)P(u⋆φ)‖`.
    pub line3: f64,
    /// `‖(λ_s − Id)u‖`.
    pub total: f64,
    pub accounting_error: f64,
}

#[derive(Debug, Clone)]
pub struct NsReport {
    pub eta: f64,
    pub levels: Vec<NsLevel>,
    pub members: Vec<NsMember>,
    pub cells: Vec<NsCell>,
    pub verdict: Verdict,
}

impl NsReport {
    pub const COLUMNS: [&'static str; 9] = ["n", "delta", "s", "step1", "step3", "line1", "line2", "line3", "total"];

    pub fn worst_accounting_error(&self) -> f64 {
        self.cells.iter().map(|c| c.accounting_error).fold(0.0, f64::max)
    }

    pub fn worst_chain_slack(&self) -> f64 {
        self.members
            .iter()
            .map(|m| (m.chain_bound - m.step1) / m.chain_bound.max(f64::MIN_POSITIVE))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        for c in &self.cells {
            out.write_record([
                c.n.to_string(),
                format!("{}", c.delta),
                format!("{:.16e}", c.s),
                format!("{:.16e}", c.step1),
                format!("{:.16e}", c.step3),
                format!("{:.16e}", c.line1),
                format!("{:.16e}", c.line2),
                format!("{:.16e}", c.line3),
                format!("{:.16e}", c.total),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Zeroes every face outside the slice, so members vanish off `Ω̂`.
fn zero_extended(u: &VectorSeries, nc: &NonCylindricalDomain) -> Result<VectorSeries> {
    u.map_indexed(|k, f| {
        let [wx, wy] = nc.slice(k).face_weights();
        let mut f = f.without_domain();
        for (v, w) in f.ux_mut().iter_mut().zip(&wx) {
            if *w == 0.0 {
                *v = 0.0;
            }
        }
        for (v, w) in f.uy_mut().iter_mut().zip(&wy) {
            if *w == 0.0 {
                *v = 0.0;
            }
        }
        Ok(f)
    })
}

/// Space-time `L^p(Ω̂)` with the slice face weights.
fn space_time_lp(u: &VectorSeries, nc: &NonCylindricalDomain, p: f64) -> Result<f64> {
    let mut acc = 0.0;
    for (k, f) in u.slices().iter().enumerate() {
        acc += f.lp_norm(p, Some(nc.slice(k)))?.powf(p);
    }
    Ok((acc * u.delta()).powf(1.0 / p))
}

/// `‖D u‖_{L²}` over all forward differences of both components on the full grid.
fn difference_norm(u: &VectorSeries) -> f64 {
    let g = *u.grid();
    let [hx, hy] = g.spacing();
    let vol = g.cell_volume();
    let (nx, ny) = (g.nx(), g.ny());
    let lattice_sq = |v: &[f64], w: usize, h: usize| {
        let mut s = 0.0;
        for j in 0..h {
            for i in 0..w {
                let x = v[j * w + i];
                if i + 1 < w {
                    s += ((v[j * w + i + 1] - x) / hx).powi(2);
                }
                if j + 1 < h {
                    s += ((v[(j + 1) * w + i] - x) / hy).powi(2);
                }
            }
        }
        s
    };
    let total: f64 = u.slices().iter().map(|f| lattice_sq(f.ux(), nx + 1, ny) + lattice_sq(f.uy(), nx, ny + 1)).sum();
    (total * vol * u.delta()).sqrt()
}

/// `(Σ_{k+m<N} δ ‖f_{k+m} − f_k‖²_K)^{1/2}`.
fn shift_norm(f: &VectorSeries, m: usize, k: &RasterDomain) -> Result<f64> {
    let s = f.slices();
    let mut acc = 0.0;
    for i in 0..s.len() - m {
        acc += s[i + m].sub(&s[i])?.l2_norm(Some(k)).powi(2);
    }
    Ok((acc * f.delta()).sqrt())
}

fn sub_series(a: &VectorSeries, b: &VectorSeries) -> Result<VectorSeries> {
    a.zip_map(b, |x, y| x.without_domain().sub(&y.without_domain()))
}

/// The four-step equicontinuity argument for divergence-free families on a
/// moving domain, measured on the inner set `k`.
pub fn ns_probe(fam: &VectorFamily, nc: &NonCylindricalDomain, k: &RasterDomain, cfg: &NsConfig) -> Result<NsReport> {
    if fam.steps() != nc.steps() || fam.interval() != nc.interval() {
        return Err(Error::PartitionMismatch("family and domain use different time partitions".into()));
    }
    let g = *nc.reference().grid();
    fam.members[0].grid().check_same(&g)?;
    k.grid().check_same(&g)?;
    if cfg.deltas.is_empty() || cfg.deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidParameter("δ list must be nonempty and positive".into()));
    }
    if !(cfg.q > 2.0) || !(cfg.r > 2.0 && cfg.r < cfg.q) {
        return Err(Error::InvalidParameter(format!("need 2 < r = {} < q = {}", cfg.r, cfg.q)));
    }
    let mut deltas = cfg.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let eta = bilipschitz(nc.family(), nc.reference(), 8)?.eta;
    let dt = fam.members[0].delta();
    let steps = nc.steps();
    let theta = (0.5 - 1.0 / cfg.r) / (0.5 - 1.0 / cfg.q);

    let ext: Vec<VectorSeries> = fam.members.iter().map(|u| zero_extended(u, nc)).collect::<Result<_>>()?;
    let mut pre = Vec::with_capacity(ext.len());
    for u in &ext {
        let (l2, lq, lr) = (space_time_lp(u, nc, 2.0)?, space_time_lp(u, nc, cfg.q)?, space_time_lp(u, nc, cfg.r)?);
        pre.push((lr, l2.powf(1.0 - theta) * lq.powf(theta) - lr, difference_norm(u)));
    }
    let battery = Battery::divfree(k, nc.interval(), steps, cfg.order, cfg.seed)?;

    let mut levels = Vec::new();
    let mut members = Vec::new();
    let mut cells = Vec::new();
    let mut reasons = Vec::new();
    for &delta in &deltas {
        let inner2 = nc.reference().eps_interior(2.0 * delta);
        let inner3 = nc.reference().eps_interior(3.0 * delta);
        let (hosts, cores): (Vec<RasterDomain>, Vec<RasterDomain>) = (0..steps)
            .into_par_iter()
            .map(|i| (image_raster(nc.family(), &inner2, nc.time(i)), image_raster(nc.family(), &inner3, nc.time(i))))
            .unzip();
        if hosts.iter().any(|h| !k.is_subset_of(h)) {
            return Err(Error::InvalidParameter(format!("K is not inside the 2δ-interior for δ = {delta}")));
        }
        let band_measure = dt
            * (0..steps)
                .map(|i| Ok(nc.slice(i).eps_exterior(2.0 * delta).difference(&cores[i])?.measure()))
                .sum::<Result<f64>>()?;
        let radius = eta * delta;
        let phi = Mollifier::with_radius(radius, &g)?;
        let xi = time_shift_safety(nc.family(), nc.reference(), delta, cfg.samples)?;
        let mut lags: Vec<usize> =
            cfg.shifts.iter().filter(|&&s| s <= xi).map(|&s| (s / dt).round() as usize).filter(|&m| m >= 1 && m < steps).collect();
        lags.sort_unstable();
        lags.dedup();
        if lags.is_empty() {
            reasons.push(format!("no admissible time shift at delta = {delta}"));
        }
        let gamma = 2.0 * delta * 1.05;
        let sweep = uniform_poincare_sweep(nc.reference(), &[0.0, 2.0 * delta], gamma)?;
        let c_a = transported_poincare(nc.family(), nc.reference(), &sweep, 8)?.value;

        let mut step3s = Vec::new();
        for (i, u) in ext.iter().enumerate() {
            let n = fam.labels[i];
            let v = phi.convolve_vector_series(u)?;
            let proj = per_slice_project(&v, nc, 2.0 * delta)?;
            let pv = &proj.projected;
            let step1 = proj.surrogate_l2;
            let (lr, islack, du) = pre[i];
            let chain_bound = (c_a + 1.0) * band_measure.powf(0.5 - 1.0 / cfg.r) * lr;
            let step3 = dual_time_estimate(&v, &battery)?.value;
            step3s.push(step3);
            let line1_bound = 2.0 * radius * du;
            if step1 > chain_bound * (1.0 + 1e-8) {
                reasons.push(format!("step1 chain bound violated for n = {n} at delta = {delta}"));
            }
            if islack < -1e-8 * lr {
                reasons.push(format!("interpolation bound violated for n = {n}"));
            }
            members.push(NsMember { n, delta, step1, chain_bound, step3, line1_bound, interpolation_slack: islack });

            let (d1, d2) = (sub_series(u, &v)?, sub_series(&v, pv)?);
            let rows: Vec<NsCell> = lags
                .par_iter()
                .map(|&m| {
                    let total = shift_norm(u, m, k)?;
                    let resid = {
                        let s = (d1.slices(), d2.slices(), pv.slices(), u.slices());
                        let mut acc = 0.0;
                        for j in 0..steps - m {
                            let parts = s.0[j + m].sub(&s.0[j])?.add(&s.1[j + m].sub(&s.1[j])?)?.add(&s.2[j + m].without_domain().sub(&s.2[j].without_domain())?)?;
                            acc += parts.sub(&s.3[j + m].sub(&s.3[j])?)?.l2_norm(Some(k)).powi(2);
                        }
                        (acc * dt).sqrt()
                    };
                    Ok(NsCell {
                        n,
                        delta,
                        s: m as f64 * dt,
                        step1,
                        step3,
                        line1: shift_norm(&d1, m, k)?,
                        line2: shift_norm(&d2, m, k)?,
                        line3: shift_norm(pv, m, k)?,
                        total,
                        accounting_error: if total > 0.0 { resid / total } else { resid },
                    })
                })
                .collect::<Result<_>>()?;
            for c in &rows {
                if c.line1 > line1_bound * (1.0 + 1e-9) + 1e-14 {
                    reasons.push(format!("line1 mollification bound violated for n = {n} at delta = {delta}"));
                }
            }
            cells.extend(rows);
        }
        let step3_growth = growth_per_doubling(&fam.labels, &step3s);
        if step3_growth >= 1.5 {
            reasons.push(format!("step3 dual bound violated at delta = {delta} (growth {step3_growth:.3} per doubling)"));
        }
        levels.push(NsLevel {
            delta,
            radius,
            xi,
            shifts: lags.iter().map(|&m| m as f64 * dt).collect(),
            poincare: c_a,
            band_measure,
            step3_growth,
        });
    }

    let scale = pre.iter().map(|p| p.0).fold(0.0, f64::max);
    let dfac = (deltas.last().unwrap() / deltas[0]).sqrt();
    let sup = |pick: &dyn Fn(&NsCell) -> f64, d: f64| cells.iter().filter(|c| c.delta == d).map(pick).fold(0.0, f64::max);
    let step1_sup: Vec<f64> =
        deltas.iter().map(|&d| members.iter().filter(|m| m.delta == d).map(|m| m.step1).fold(0.0, f64::max)).collect();
    // The projection defect only has to keep pace with its chain bound, which
    // decays like a small power of the band measure.
    let chain_sup: Vec<f64> =
        deltas.iter().map(|&d| members.iter().filter(|m| m.delta == d).map(|m| m.chain_bound).fold(0.0, f64::max)).collect();
    let cfac = dfac.max(chain_sup[chain_sup.len() - 1] / chain_sup[0]);
    if !vanishes(&step1_sup, cfac, scale) {
        reasons.push("step1 projection defect does not vanish as delta decreases".into());
    }
    let lines: [(&str, fn(&NsCell) -> f64, f64); 2] = [("line1", |c| c.line1, dfac), ("line2", |c| c.line2, cfac)];
    for (name, pick, factor) in lines {
        let v: Vec<f64> = deltas.iter().map(|&d| sup(&pick, d)).collect();
        if !vanishes(&v, factor, scale) {
            reasons.push(format!("{name} does not vanish as delta decreases"));
        }
    }
    for l in &levels {
        let per_s: Vec<f64> = l
            .shifts
            .iter()
            .rev()
            .map(|&s| cells.iter().filter(|c| c.delta == l.delta && c.s == s).map(|c| c.line3).fold(0.0, f64::max))
            .collect();
        if per_s.len() >= 2 {
            let sfac = (l.shifts[0] / l.shifts[l.shifts.len() - 1]).sqrt();
            if !vanishes(&per_s, sfac, scale) {
                reasons.push(format!("line3 translation modulus does not vanish at delta = {}", l.delta));
            }
        }
    }
    Ok(NsReport { eta, levels, members, cells, verdict: verdict(reasons) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::families::{common_interior, stream_family, translating_disk};

    fn setup(steps: usize) -> (NonCylindricalDomain, RasterDomain, NsConfig) {
        let nc = translating_disk(0.0125, steps).unwrap();
        let k = common_interior(&nc, 0.13);
        let cfg = NsConfig {
            deltas: vec![0.06, 0.03],
            shifts: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
            samples: 32,
            ..NsConfig::default()
        };
        (nc, k, cfg)
    }

    #[test]
    fn budget_is_additive_and_chain_holds() {
        let (nc, k, cfg) = setup(32);
        let fam = stream_family(&nc, &[1, 2, 4], false).unwrap();
        let r = ns_probe(&fam, &nc, &k, &cfg).unwrap();
        assert!(r.worst_accounting_error() < 1e-10);
        assert!(r.worst_chain_slack() >= -1e-8);
        assert!(r.members.iter().all(|m| m.interpolation_slack >= -1e-8));
        assert!(r.verdict.is_consistent(), "{:?}", r.verdict);
        for c in &r.cells {
            assert!(c.line1 <= r.members.iter().find(|m| m.n == c.n && m.delta == c.delta).unwrap().line1_bound);
        }
    }

    #[test]
    fn oscillating_family_fails_step3() {
        let (nc, k, cfg) = setup(32);
        let fam = stream_family(&nc, &[1, 2, 4], true).unwrap();
        let r = ns_probe(&fam, &nc, &k, &cfg).unwrap();
        match &r.verdict {
            Verdict::Inconsistent(why) => assert!(why.iter().any(|w| w.contains("step3 dual bound violated")), "{why:?}"),
            v => panic!("{v:?}"),
        }
        assert!(r.levels.iter().all(|l| l.step3_growth >= 1.8), "{:?}", r.levels);
    }

    #[test]
    fn inner_set_must_fit() {
        let (nc, _, cfg) = setup(8);
        let fam = stream_family(&nc, &[1], false).unwrap();
        let big = common_interior(&nc, 0.05);
        assert!(ns_probe(&fam, &nc, &big, &cfg).is_err());
    }
}
