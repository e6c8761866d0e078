use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;
use crate::mollify::make_mollifier;
use crate::movedom::{bilipschitz, image_raster, sobolev_exponent, NonCylindricalDomain};
use crate::series::StepTimeSeries;

use super::{slice_lp, vanishes, verdict, ScalarFamily, Verdict};

/// One `(n, q, ℓ)` cell of `f_n − f_q = (f_n − f_n⋆φ_ℓ) + (f_n⋆φ_ℓ − f_q⋆φ_ℓ) + (f_q⋆φ_ℓ − f_q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KruzhkovRow {
    pub n: usize,
    pub q: usize,
    pub ell: u32,
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    /// `‖f_n − f_q‖`.
    pub total: f64,
    /// `‖Σ terms − (f_n − f_q)‖ / ‖f_n − f_q‖` on the fields themselves.
    pub accounting_error: f64,
}

#[derive(Debug, Clone)]
pub struct KruzhkovReport {
    pub m_interior: u32,
    pub eta: f64,
    pub p: f64,
    /// `(ℓ, sup_n ‖f_n − f_n⋆φ_ℓ‖)`, increasing `ℓ`.
    pub moduli: Vec<(u32, f64)>,
    pub rows: Vec<KruzhkovRow>,
    /// Tail Cauchy sizes `max_{n, q ≥ n_j} term2` at the largest `ℓ`.
    pub tail: Vec<f64>,
    pub verdict: Verdict,
}

impl KruzhkovReport {
    pub const COLUMNS: [&'static str; 7] = ["n", "q", "ell", "term1", "term2", "term3", "total"];

    pub fn worst_accounting_error(&self) -> f64 {
        self.rows.iter().map(|r| r.accounting_error).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                r.q.to_string(),
                r.ell.to_string(),
                format!("{:.16e}", r.term1),
                format!("{:.16e}", r.term2),
                format!("{:.16e}", r.term3),
                format!("{:.16e}", r.total),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_slices(fam: &ScalarFamily, nc: &NonCylindricalDomain) -> Result<()> {
    if fam.steps() != nc.steps() || fam.interval() != nc.interval() {
        return Err(Error::PartitionMismatch("family and domain use different time partitions".into()));
    }
    fam.members[0].grid().check_same(nc.reference().grid())
}

/// Members extended by zero outside `Ω̂`.
fn zero_extended(fam: &ScalarFamily, nc: &NonCylindricalDomain) -> Result<Vec<StepTimeSeries>> {
    fam.members
        .iter()
        .map(|s| s.map_indexed(|k, f| f.unmasked().with_mask(Arc::new(nc.slice(k).clone())).map(|f| f.unmasked())))
        .collect()
}

/// The mollification argument on `Ω̂_{1/m}` in `L^p`, for every pair of members and every `ℓ`.
pub fn kruzhkov_probe(fam: &ScalarFamily, nc: &NonCylindricalDomain, m_interior: u32, ells: &[u32], p: f64) -> Result<KruzhkovReport> {
    check_slices(fam, nc)?;
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    if m_interior == 0 || ells.is_empty() {
        return Err(Error::InvalidParameter("kruzhkov probe needs m ≥ 1 and at least one ℓ".into()));
    }
    let eta = bilipschitz(nc.family(), nc.reference(), 8)?.eta;
    let mut ells = ells.to_vec();
    ells.sort_unstable();
    if let Some(&l) = ells.iter().find(|&&l| (l as f64) < 2.0 * m_interior as f64 / eta * (1.0 - 1e-9)) {
        return Err(Error::InvalidParameter(format!("ℓ = {l} is below 2m/η = {:.3}", 2.0 * m_interior as f64 / eta)));
    }
    let g = *nc.reference().grid();
    let inner = nc.reference().eps_interior(1.0 / m_interior as f64);
    let domains: Vec<RasterDomain> = (0..nc.steps()).map(|k| image_raster(nc.family(), &inner, nc.time(k))).collect();
    if domains.iter().all(RasterDomain::is_empty) {
        return Err(Error::EmptyDomain);
    }
    let delta = fam.members[0].delta();
    let ext = zero_extended(fam, nc)?;
    let norm = |f: &dyn Fn(usize, usize) -> f64| slice_lp(&domains, delta, p, f);
    let vals = |s: &StepTimeSeries, k: usize, c: usize| s.slices()[k].get(c);

    let mut rows = Vec::new();
    let mut moduli = Vec::new();
    let mut tail = Vec::new();
    let m = ext.len();
    for (li, &ell) in ells.iter().enumerate() {
        let phi = make_mollifier(ell, &g)?;
        let moll: Vec<StepTimeSeries> = ext.par_iter().map(|s| phi.convolve_series(s)).collect::<Result<_>>()?;
        let own: Vec<f64> = (0..m).map(|i| norm(&|k, c| vals(&ext[i], k, c) - vals(&moll[i], k, c))).collect();
        moduli.push((ell, own.iter().cloned().fold(0.0, f64::max)));
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
        let cells: Vec<KruzhkovRow> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let (fn_, fq, mn, mq) = (&ext[i], &ext[j], &moll[i], &moll[j]);
                let total = norm(&|k, c| vals(fn_, k, c) - vals(fq, k, c));
                let resid = norm(&|k, c| {
                    let t1 = vals(fn_, k, c) - vals(mn, k, c);
                    let t2 = vals(mn, k, c) - vals(mq, k, c);
                    let t3 = vals(mq, k, c) - vals(fq, k, c);
                    (t1 + t2 + t3) - (vals(fn_, k, c) - vals(fq, k, c))
                });
                KruzhkovRow {
                    n: fam.labels[i],
                    q: fam.labels[j],
                    ell,
                    term1: own[i],
                    term2: norm(&|k, c| vals(mn, k, c) - vals(mq, k, c)),
                    term3: own[j],
                    total,
                    accounting_error: if total > 0.0 { resid / total } else { resid },
                }
            })
            .collect();
        if li == ells.len() - 1 {
            tail = (0..m.saturating_sub(1))
                .map(|j| {
                    cells.iter().filter(|r| r.n >= fam.labels[j]).map(|r| r.term2).fold(0.0, f64::max)
                })
                .collect();
        }
        rows.extend(cells);
    }

    let scale = ext.iter().map(|s| norm(&|k, c| vals(s, k, c))).fold(0.0, f64::max);
    let mut reasons = Vec::new();
    let mods: Vec<f64> = moduli.iter().map(|m| m.1).collect();
    let ratio = (ells[0] as f64 / *ells.last().unwrap() as f64).sqrt();
    if !vanishes(&mods, ratio, scale) || mods.windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-14 * scale) {
        reasons.push("mollification modulus does not vanish uniformly in n".to_string());
    }
    if !vanishes(&tail, 0.5, scale) {
        reasons.push("mollified members are not Cauchy".to_string());
    }
    Ok(KruzhkovReport { m_interior, eta, p, moduli, rows, tail, verdict: verdict(reasons) })
}

/// Peel norms of one member at one `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelRow {
    pub eps: f64,
    pub n: usize,
    /// `‖f_n‖_{L^p(Ω̂ ∖ Ω̂_ε)}`.
    pub direct: f64,
    /// `(∫ ‖f_n(t)‖^p_{L^{p*}(Ω^t)} μ(Ω^t ∖ A_t(Ω_ε))^{1 − p/p*} dt)^{1/p}`.
    pub mechanism: f64,
}

#[derive(Debug, Clone)]
pub struct LocalGlobalReport {
    pub p: f64,
    pub p_star: f64,
    pub rows: Vec<PeelRow>,
    /// `(ε, sup_n direct)`, decreasing `ε`.
    pub sup_peel: Vec<(f64, f64)>,
    pub verdict: Verdict,
}

/// Peel control: direct peel norms against the Hölder bound through `L^{p*}`.
pub fn local_to_global(fam: &ScalarFamily, nc: &NonCylindricalDomain, eps_list: &[f64], p: f64) -> Result<LocalGlobalReport> {
    check_slices(fam, nc)?;
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter("ε list must be nonempty and positive".into()));
    }
    let g = *nc.reference().grid();
    let p_star = sobolev_exponent(p, g.dim())?;
    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    let delta = fam.members[0].delta();
    let vol = g.cell_volume();
    let ext = zero_extended(fam, nc)?;
    // ‖f_n(t_k)‖^p_{L^{p*}(Ω^t)}
    let star: Vec<Vec<f64>> = ext
        .iter()
        .map(|s| {
            (0..nc.steps())
                .map(|k| {
                    let f = &s.slices()[k];
                    let acc: f64 = nc.slice(k).cells().map(|c| f.get(c).abs().powf(p_star)).sum::<f64>() * vol;
                    acc.powf(p / p_star)
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    let mut sup_peel = Vec::new();
    for &e in &eps {
        let inner = nc.reference().eps_interior(e);
        let peels: Vec<RasterDomain> = (0..nc.steps())
            .into_par_iter()
            .map(|k| nc.slice(k).difference(&image_raster(nc.family(), &inner, nc.time(k))))
            .collect::<Result<_>>()?;
        let mut sup = 0.0f64;
        for (i, s) in ext.iter().enumerate() {
            let direct = slice_lp(&peels, delta, p, |k, c| s.slices()[k].get(c));
            let mech = (delta
                * (0..nc.steps()).map(|k| star[i][k] * peels[k].measure().powf(1.0 - p / p_star)).sum::<f64>())
            .powf(1.0 / p);
            if direct > mech * (1.0 + 1e-10) + 1e-300 {
                return Err(Error::Postcondition(format!("peel norm {direct:.6e} exceeds its Hölder bound {mech:.6e}")));
            }
            sup = sup.max(direct);
            rows.push(PeelRow { eps: e, n: fam.labels[i], direct, mechanism: mech });
        }
        sup_peel.push((e, sup));
    }
    let scale = ext.iter().map(|s| s.lp_norm(p).unwrap_or(0.0)).fold(0.0, f64::max);
    let sups: Vec<f64> = sup_peel.iter().map(|s| s.1).collect();
    let mut reasons = Vec::new();
    if !vanishes(&sups, 0.5, scale) {
        reasons.push("peel norm does not decay uniformly in n".to_string());
    }
    Ok(LocalGlobalReport { p, p_star, rows, sup_peel, verdict: verdict(reasons) })
}
