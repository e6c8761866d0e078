use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{gradient, h_minus_m_norm, RasterDomain};
use crate::series::StepTimeSeries;
use crate::truncate::Nonlinearity;

/// `Σ_k ‖u_{k+1} − u_k‖_{H^{-m}(d)}`, the total variation of `∂_t ũ_N`.
pub fn time_derivative_tv(s: &StepTimeSeries, m: u32, d: &RasterDomain) -> Result<f64> {
    let jumps = s.jumps()?;
    let norms: Vec<f64> = jumps.par_iter().map(|j| h_minus_m_norm(j, m, d)).collect::<Result<_>>()?;
    Ok(norms.iter().sum())
}

/// `‖∇Φ(ũ)‖_{L²(I×Ω)}`.
pub fn grad_phi_l2(s: &StepTimeSeries, phi: &Nonlinearity) -> f64 {
    let per: Vec<f64> = s.slices().par_iter().map(|u| gradient(&phi.apply(u)).l2_norm(None).powi(2)).collect();
    (per.iter().sum::<f64>() * s.delta()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub n: usize,
    pub l2_norm: f64,
    pub grad_phi_l2: f64,
    pub tv_hminus_m: f64,
    /// L² distance to the previous row's series; `NaN` on the first row.
    pub cauchy_to_prev: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    ConsistentWithCompactness,
    Inconsistent(Vec<String>),
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Verdict::ConsistentWithCompactness)
    }
}

#[derive(Debug, Clone)]
pub struct MonitorReport {
    pub rows: Vec<MonitorRow>,
    pub verdict: Verdict,
    /// A column counts as bounded when `max ≤ bound_ratio · min`.
    pub bound_ratio: f64,
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi == 0.0 {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

impl MonitorReport {
    pub const COLUMNS: [&'static str; 5] = ["N", "l2_norm", "grad_phi_l2", "tv_hminus_m", "cauchy_to_prev"];

    pub fn spreads(&self) -> [f64; 3] {
        [
            spread(self.rows.iter().map(|r| r.l2_norm)),
            spread(self.rows.iter().map(|r| r.grad_phi_l2)),
            spread(self.rows.iter().map(|r| r.tv_hminus_m)),
        ]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        for r in &self.rows {
            out.write_record([
                r.n.to_string(),
                format!("{:.16e}", r.l2_norm),
                format!("{:.16e}", r.grad_phi_l2),
                format!("{:.16e}", r.tv_hminus_m),
                if r.cauchy_to_prev.is_nan() { String::new() } else { format!("{:.16e}", r.cauchy_to_prev) },
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Tabulates the three hypotheses and the Cauchy column for a refinement family.
pub fn theorem1_monitor(family: &[StepTimeSeries], phi: &Nonlinearity, m: u32) -> Result<MonitorReport> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("monitor needs at least one series".into()));
    }
    let d = RasterDomain::full(*family[0].grid());
    let mut rows: Vec<MonitorRow> = family
        .par_iter()
        .map(|s| {
            Ok(MonitorRow {
                n: s.steps(),
                l2_norm: s.l2_norm(),
                grad_phi_l2: grad_phi_l2(s, phi),
                tv_hminus_m: time_derivative_tv(s, m, &d)?,
                cauchy_to_prev: f64::NAN,
            })
        })
        .collect::<Result<_>>()?;
    for k in 1..family.len() {
        rows[k].cauchy_to_prev = family[k].l2_distance(&family[k - 1])?;
    }
    let bound_ratio = 2.0;
    let mut report = MonitorReport { rows, verdict: Verdict::ConsistentWithCompactness, bound_ratio };
    let mut reasons = Vec::new();
    for (name, s) in ["l2_norm", "grad_phi_l2", "tv_hminus_m"].iter().zip(report.spreads()) {
        if s > bound_ratio {
            reasons.push(format!("{name} spread {s:.3} exceeds {bound_ratio}"));
        }
    }
    let cauchy: Vec<f64> = report.rows.iter().skip(1).map(|r| r.cauchy_to_prev).collect();
    let all_zero = cauchy.iter().all(|&c| c == 0.0);
    if !all_zero && cauchy.windows(2).any(|w| !(w[1] < w[0])) {
        reasons.push("cauchy_to_prev is not strictly decreasing".into());
    }
    if !reasons.is_empty() {
        report.verdict = Verdict::Inconsistent(reasons);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};
    use std::f64::consts::PI;

    #[test]
    fn constant_series_has_no_variation() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let s = StepTimeSeries::constant(0.0, 1.0, 8, ScalarField::from_fn(g, |p| p[0])).unwrap();
        assert_eq!(time_derivative_tv(&s, 1, &RasterDomain::full(g)).unwrap(), 0.0);
    }

    #[test]
    fn single_jump_is_one_norm() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let d = RasterDomain::full(g);
        let f = ScalarField::from_fn(g, |p| (3.0 * p[0]).cos());
        let s = StepTimeSeries::new(0.0, 1.0, vec![ScalarField::zeros(g), f.clone()]).unwrap();
        let tv = time_derivative_tv(&s, 2, &d).unwrap();
        assert_eq!(tv, h_minus_m_norm(&f, 2, &d).unwrap());
    }

    #[test]
    fn identical_family_has_zero_cauchy() {
        let g = Grid::new_1d(16, 1.0).unwrap();
        let s = StepTimeSeries::sample(0.0, 1.0, 8, |t| ScalarField::from_fn(g, move |p| t * p[0])).unwrap();
        let r = theorem1_monitor(&[s.clone(), s.clone(), s], &Nonlinearity::identity(), 1).unwrap();
        assert!(r.rows[1..].iter().all(|row| row.cauchy_to_prev == 0.0));
        assert!(r.verdict.is_consistent());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,l2_norm,grad_phi_l2,tv_hminus_m,cauchy_to_prev\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn oscillating_family_is_rejected() {
        let g = Grid::new_1d(64, 1.0).unwrap();
        let d = RasterDomain::full(g);
        let family: Vec<StepTimeSeries> = [2usize, 4, 8, 16]
            .iter()
            .map(|&n| {
                StepTimeSeries::sample_midpoints(0.0, 1.0, 4 * n, move |t| {
                    ScalarField::from_fn(g, move |p| (2.0 * PI * n as f64 * t).sin() * (PI * p[0]).sin())
                })
                .unwrap()
            })
            .collect();
        let tv: Vec<f64> = family.iter().map(|s| time_derivative_tv(s, 1, &d).unwrap()).collect();
        for w in tv.windows(2) {
            assert!(w[1] / w[0] > 1.9 && w[1] / w[0] < 2.4, "{tv:?}");
        }
        let r = theorem1_monitor(&family, &Nonlinearity::identity(), 1).unwrap();
        assert!(!r.verdict.is_consistent());
    }
}
