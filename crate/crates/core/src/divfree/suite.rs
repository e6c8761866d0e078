use rand::Rng as _;
use rayon::prelude::*;

use crate::error::Result;
use crate::grid::RasterDomain;
use crate::movedom::poincare_constant;
use crate::rng;

use super::{dual_norm_check, normal_trace, project_divfree0, random_divfree, random_divfree0};

/// Identity residuals of the projection for one random field, all relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteRow {
    pub field: usize,
    pub norm: f64,
    pub seminorm: f64,
    pub surrogate: f64,
    /// `‖P(Pu) − Pu‖ / ‖u‖`.
    pub idempotence: f64,
    /// `|⟨Pu, w⟩ − ⟨u, Pw⟩| / (‖u‖‖w‖)`.
    pub self_adjoint: f64,
    /// `|‖u‖² − ‖Pu‖² − ‖u − Pu‖²| / ‖u‖²`.
    pub pythagoras: f64,
    /// Max cell divergence of `Pu` relative to `‖u‖/h`.
    pub divergence: f64,
    /// Max normal trace of `Pu` relative to `‖u‖`.
    pub trace: f64,
    /// `|⟨u − Pu, z⟩| / (‖u − Pu‖‖z‖)` for a zero-trace field `z`.
    pub orthogonality: f64,
    /// Dual-norm slack relative to `‖u‖`.
    pub dual_slack: f64,
}

impl SuiteRow {
    pub fn worst_residual(&self) -> f64 {
        [self.idempotence, self.self_adjoint, self.pythagoras, self.divergence, self.trace, self.orthogonality]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub poincare: f64,
    pub rows: Vec<SuiteRow>,
}

impl SuiteReport {
    pub const COLUMNS: [&'static str; 12] = [
        "field",
        "norm",
        "seminorm",
        "surrogate",
        "idempotence",
        "self_adjoint",
        "pythagoras",
        "divergence",
        "trace",
        "orthogonality",
        "dual_slack",
        "worst",
    ];

    pub fn worst_residual(&self) -> f64 {
        self.rows.iter().map(SuiteRow::worst_residual).fold(0.0, f64::max)
    }

    pub fn worst_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.dual_slack).fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(Self::COLUMNS)?;
        for r in &self.rows {
            let vals = [
                r.norm,
                r.seminorm,
                r.surrogate,
                r.idempotence,
                r.self_adjoint,
                r.pythagoras,
                r.divergence,
                r.trace,
                r.orthogonality,
                r.dual_slack,
                r.worst_residual(),
            ];
            let mut rec = vec![r.field.to_string()];
            rec.extend(vals.iter().map(|v| format!("{v:.16e}")));
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Projection identities and the dual-norm inequality on `count` seeded
/// random divergence-free fields.
pub fn projection_suite(d: &RasterDomain, count: usize, seed: u64) -> Result<SuiteReport> {
    let poincare = poincare_constant(d)?;
    let h = d.grid().min_spacing();
    let rows = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let (su, sw, sz) = (r.random::<u64>(), r.random::<u64>(), r.random::<u64>());
            let u = random_divfree(d, su)?;
            let w = random_divfree(d, sw)?;
            let z = random_divfree0(d, sz)?;
            let pu = project_divfree0(&u, d)?;
            let pw = project_divfree0(&w, d)?;
            let n = u.l2_norm(Some(d));
            let wn = w.l2_norm(Some(d));
            let again = project_divfree0(&pu.projected, d)?.projected;
            let pn = pu.projected.l2_norm(Some(d));
            let dual = dual_norm_check(&u, d, poincare)?;
            let orth = pu.correction.inner(&z, Some(d))?.abs();
            Ok(SuiteRow {
                field: i,
                norm: n,
                seminorm: pn,
                surrogate: pu.surrogate,
                idempotence: again.sub(&pu.projected)?.l2_norm(Some(d)) / n,
                self_adjoint: (pu.projected.inner(&w, Some(d))? - u.inner(&pw.projected, Some(d))?).abs() / (n * wn),
                pythagoras: (n * n - pn * pn - pu.surrogate * pu.surrogate).abs() / (n * n),
                divergence: pu.divergence_residual * h / n,
                trace: normal_trace(&pu.projected, d)?.max_abs() / n,
                orthogonality: if pu.surrogate > 0.0 { orth / (pu.surrogate * z.l2_norm(Some(d))) } else { orth },
                dual_slack: dual.slack / n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport { poincare, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn small_suite_on_a_disk() {
        let g = Grid::unit(2, 24).unwrap();
        let d = RasterDomain::disk(g, g.box_center(), 0.4);
        let r = projection_suite(&d, 6, 9).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert!(r.worst_residual() <= 1e-8, "{:?}", r.rows);
        assert!(r.worst_slack() >= -1e-8);
        let again = projection_suite(&d, 6, 9).unwrap();
        assert_eq!(r.rows, again.rows);
    }
}
