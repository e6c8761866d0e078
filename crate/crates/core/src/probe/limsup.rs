use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::productlimit::{product_pipeline, PipelineReport, ProductFamily};
use crate::series::StepTimeSeries;
use crate::truncate::{build_beta, Nonlinearity};

use super::{verdict, ScalarFamily, Verdict};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimsupRow {
    pub eps: f64,
    pub n: usize,
    /// `∫∫ a_n²`.
    pub square: f64,
    /// `∫∫ a_n β_ε(a_n)`.
    pub pairing: f64,
    /// `C ε ‖a_n‖_{L¹}`, so that `square ≤ pairing + correction`.
    pub correction: f64,
}

#[derive(Debug, Clone)]
pub struct LimsupLevel {
    pub eps: f64,
    pub c_meas: f64,
    /// `∫∫ a a^ε` with `a^ε = β_ε(a)`.
    pub limit_pairing: f64,
    /// `∫∫ a_n²` for the last member.
    pub limsup: f64,
    /// `‖a‖² + C ε (sup_n ‖a_n‖₁ + ‖a‖₁)`.
    pub bound: f64,
    pub pipeline: PipelineReport,
}

impl LimsupLevel {
    pub fn holds(&self) -> bool {
        self.limsup <= self.bound * (1.0 + 1e-9) + 1e-14
    }
}

#[derive(Debug, Clone)]
pub struct LimsupReport {
    pub limit_square: f64,
    pub levels: Vec<LimsupLevel>,
    pub rows: Vec<LimsupRow>,
    pub verdict: Verdict,
}

/// The lim-sup chain `lim sup ∫ a_n² ≤ ∫ a a^ε + Cε`, with the product-limit
/// pipeline run on `(a_n, β_ε(a_n))` for each `ε`. The declared limit `a`
/// stands in for the strong limit, so `a^ε` is taken as `β_ε(a)`.
pub fn theorem1_limsup(
    fam: &ScalarFamily,
    a_limit: &StepTimeSeries,
    phi: &Nonlinearity,
    eps_list: &[f64],
    ks: &[u32],
    m: u32,
    theta: &ScalarField,
) -> Result<LimsupReport> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("ε list is empty".into()));
    }
    a_limit.grid().check_same(fam.members[0].grid())?;
    let sq = |s: &StepTimeSeries| s.l2_norm().powi(2);
    let limit_square = sq(a_limit);
    let a1 = a_limit.l1_norm();
    let sup_l1 = fam.members.iter().map(StepTimeSeries::l1_norm).fold(0.0, f64::max);
    let mut levels = Vec::new();
    let mut rows = Vec::new();
    let mut reasons = Vec::new();
    for &eps in eps_list {
        let beta = build_beta(phi, eps)?;
        let c = beta.c_meas();
        let b: Vec<StepTimeSeries> = fam.members.iter().map(|s| s.map(|f| beta.apply(f))).collect();
        let b_limit = a_limit.map(|f| beta.apply(f));
        for (i, (an, bn)) in fam.members.iter().zip(&b).enumerate() {
            let row = LimsupRow {
                eps,
                n: fam.labels[i],
                square: sq(an),
                pairing: an.inner(bn)?,
                correction: c * eps * an.l1_norm(),
            };
            if row.square > (row.pairing + row.correction) * (1.0 + 1e-6) + 1e-14 {
                reasons.push(format!("truncation bound fails for n = {} at eps = {eps}", row.n));
            }
            rows.push(row);
        }
        let pf = ProductFamily::new(fam.labels.clone(), fam.members.clone(), b, a_limit.clone(), b_limit.clone())?;
        let pipeline = product_pipeline(&pf, theta, ks, m)?;
        let level = LimsupLevel {
            eps,
            c_meas: c,
            limit_pairing: a_limit.inner(&b_limit)?,
            limsup: sq(fam.members.last().unwrap()),
            bound: limit_square + c * eps * (sup_l1 + a1),
            pipeline,
        };
        for name in &level.pipeline.failing {
            reasons.push(format!("pipeline hypothesis {name} is not uniformly bounded at eps = {eps}"));
        }
        if !level.pipeline.total_decays() {
            reasons.push(format!("step2 weak-limit pairing does not converge at eps = {eps}"));
        }
        if !level.holds() {
            reasons.push(format!("lim sup exceeds the chain bound at eps = {eps}"));
        }
        levels.push(level);
    }
    Ok(LimsupReport { limit_square, levels, rows, verdict: verdict(reasons) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::probe::families::{oscillating, perturbed};
    use std::f64::consts::PI;

    fn setup() -> (Grid, StepTimeSeries, StepTimeSeries) {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let a = StepTimeSeries::sample_midpoints(0.0, 1.0, 64, |t| {
            ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin() * (1.0 + 0.3 * t))
        })
        .unwrap();
        let p = StepTimeSeries::sample_midpoints(0.0, 1.0, 64, |t| ScalarField::from_fn(g, |x| (6.0 * x[0] + t).cos()))
            .unwrap();
        (g, a, p)
    }

    #[test]
    fn constant_family_is_tight() {
        let (g, a, _) = setup();
        let fam = ScalarFamily::new(vec![1, 2, 4], vec![a.clone(), a.clone(), a.clone()]).unwrap();
        let r = theorem1_limsup(&fam, &a, &Nonlinearity::porous(2.0).unwrap(), &[0.2, 0.1], &[8, 16], 1, &ScalarField::constant(g, 1.0))
            .unwrap();
        assert!(r.verdict.is_consistent(), "{:?}", r.verdict);
        for l in &r.levels {
            assert_eq!(l.limsup, r.limit_square);
            assert!(l.pipeline.totals().iter().all(|t| t.1 == 0.0));
        }
        for row in &r.rows {
            assert_eq!(row.pairing, r.levels.iter().find(|l| l.eps == row.eps).unwrap().limit_pairing);
        }
    }

    #[test]
    fn strongly_convergent_family_is_consistent() {
        let (g, a, p) = setup();
        let fam = perturbed(&a, &p, &[1, 2, 4, 8, 16]).unwrap();
        let r = theorem1_limsup(&fam, &a, &Nonlinearity::porous(2.0).unwrap(), &[0.2, 0.1, 0.05], &[8, 16], 1, &ScalarField::constant(g, 1.0))
            .unwrap();
        assert!(r.verdict.is_consistent(), "{:?}", r.verdict);
    }

    #[test]
    fn oscillating_family_names_the_failing_hypothesis() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let base = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let bump = ScalarField::from_fn(g, |x| (4.0 * PI * x[0]).cos());
        let fam = oscillating(&base, &bump, 0.0, 1.0, 64, &[1, 2, 4, 8]).unwrap();
        let limit = StepTimeSeries::constant(0.0, 1.0, 64, base).unwrap();
        let r = theorem1_limsup(&fam, &limit, &Nonlinearity::porous(2.0).unwrap(), &[0.1, 0.05], &[8, 16], 1, &ScalarField::constant(g, 1.0))
            .unwrap();
        match &r.verdict {
            Verdict::Inconsistent(why) => {
                assert!(why.iter().any(|w| w.contains("b_time_tv")), "{why:?}");
                assert!(why.iter().any(|w| w.contains("lim sup")), "{why:?}");
            }
            v => panic!("{v:?}"),
        }
    }
}
