use super::{csv_bytes, num, point, table};
use crate::cli::{CliError, Config, Experiment, Key, Report};
use crate::divfree::{curl_of_nodes, per_slice_project, project_divfree0, projection_suite, space_time_check};
use crate::grid::{Grid, RasterDomain, StaggeredVectorField};
use crate::movedom::{bilipschitz, framing_check, peel_measure, transported_poincare, uniform_poincare_sweep, DiffeoFamily, NonCylindricalDomain};
use crate::probe::families::translating_disk;
use crate::rng;
use crate::series::VectorSeries;
use crate::synth::random_node_field;

pub const MOVEDOM: Experiment = Experiment {
    name: "movedom",
    summary: "raster erosions, framing inclusions and peel measures on moving disks",
    keys: &[
        Key { name: "cells", default: "256", doc: "cells per side of the unit square for the erosion checks" },
        Key { name: "radius", default: "0.4", doc: "disk radius for the erosion checks" },
        Key { name: "eps", default: "0.1", doc: "erosion depth compared with the analytic shrunken disk" },
        Key { name: "hausdorff_cells", default: "2", doc: "allowed Hausdorff distance, in cells" },
        Key { name: "semigroup", default: "0.05,0.07", doc: "depths e1, e2 for Ω_{e1+e2} = (Ω_{e1})_{e2}" },
        Key { name: "framing_cells", default: "128", doc: "cells per side for the moving-domain checks" },
        Key { name: "framing_radius", default: "0.25", doc: "reference disk radius, centred in the box" },
        Key { name: "framing_eps", default: "0.05", doc: "ε in Ω^t_{ε/η} ⊂ A_t(Ω_ε) ⊂ Ω^t_{ηε}" },
        Key { name: "translation", default: "translation:0.1:0.05", doc: "first motion" },
        Key { name: "dilation", default: "dilation:0.25", doc: "second motion" },
        Key { name: "t1", default: "1", doc: "motions run on [0, t1]" },
        Key { name: "samples", default: "64", doc: "time samples for the framing checks" },
        Key { name: "peel_eps", default: "0.05", doc: "ε for the peel measure bound" },
        Key { name: "peel_steps", default: "16", doc: "time slices of the non-cylindrical domain" },
    ],
    run: movedom,
};

fn movedom(cfg: &Config, _seed: u64) -> Result<Report, CliError> {
    let mut rows: Vec<[String; 4]> = Vec::new();
    let mut report = Report::default();
    let mut push = |report: &mut Report, name: &str, value: f64, bound: f64| {
        let ok = value <= bound;
        rows.push([name.to_string(), num(value), num(bound), ok.to_string()]);
        report.check(ok, || format!("{name}: {value:.4e} exceeds {bound:.4e}"));
    };

    let g = Grid::unit(2, cfg.get("cells")?)?;
    let h = g.min_spacing();
    let r: f64 = cfg.get("radius")?;
    let eps: f64 = cfg.get("eps")?;
    let c = g.box_center();
    let d = RasterDomain::disk(g, c, r);
    let cells: f64 = cfg.get("hausdorff_cells")?;
    push(&mut report, "eps_interior_hausdorff", d.eps_interior(eps).hausdorff(&RasterDomain::disk(g, c, r - eps)), cells * h);
    let [e1, e2] = point(cfg, "semigroup")?;
    let band = h * std::f64::consts::SQRT_2;
    let two = d.eps_interior(e1).eps_interior(e2);
    let one = d.eps_interior(e1 + e2);
    push(&mut report, "semigroup_excess", (two.excess_over(&one, band) + one.excess_over(&two, band)) as f64, 0.0);

    let fg = Grid::unit(2, cfg.get("framing_cells")?)?;
    let fd = RasterDomain::disk(fg, fg.box_center(), cfg.get("framing_radius")?);
    let t1: f64 = cfg.get("t1")?;
    let samples: usize = cfg.get("samples")?;
    let times: Vec<f64> = (0..samples).map(|i| t1 * i as f64 / (samples.max(2) - 1) as f64).collect();
    let feps: f64 = cfg.get("framing_eps")?;
    let peel_eps: f64 = cfg.get("peel_eps")?;
    for key in ["translation", "dilation"] {
        let f = DiffeoFamily::preset(&cfg.text(key), 0.0, t1, fg.box_center())?;
        let eta = bilipschitz(&f, &fd, 8)?.eta;
        report.note(&format!("{key}_eta"), format!("{eta:.6}"));
        let fr = framing_check(&f, &fd, feps, eta, &times)?;
        let v: usize = fr.inner_violations.iter().chain(&fr.outer_violations).sum();
        push(&mut report, &format!("framing_{key}"), v as f64, 0.0);
        let nc = NonCylindricalDomain::new(f, fd.clone(), cfg.get("peel_steps")?)?;
        let peel = peel_measure(&nc, peel_eps)?;
        push(&mut report, &format!("peel_{key}"), peel.measured, peel.bound * 1.02);
    }
    report.csv = table(["check", "value", "bound", "ok"], &rows)?;
    Ok(report)
}

pub const DIVFREE: Experiment = Experiment {
    name: "divfree",
    summary: "projection identities, dual-norm inequality and the space-time version on a moving disk",
    keys: &[
        Key { name: "cells", default: "64", doc: "cells per side of the unit square" },
        Key { name: "fields", default: "100", doc: "seeded random divergence-free fields" },
        Key { name: "tolerance", default: "1e-8", doc: "allowed relative residual and negative slack" },
        Key { name: "moving_h", default: "0.02", doc: "cell size of the translating-disk domain" },
        Key { name: "moving_steps", default: "8", doc: "time slices of the translating-disk domain" },
        Key { name: "moving_delta", default: "0.03", doc: "erosion depth δ of the per-slice projection" },
        Key { name: "gamma", default: "0.1", doc: "γ of the uniform Poincaré sweep over [0, δ]" },
    ],
    run: divfree,
};

fn divfree(cfg: &Config, seed: u64) -> Result<Report, CliError> {
    let g = Grid::unit(2, cfg.get("cells")?)?;
    let d = RasterDomain::full(g);
    let tol: f64 = cfg.get("tolerance")?;
    let suite = projection_suite(&d, cfg.get("fields")?, seed)?;
    let mut report = Report::default();
    let worst = suite.worst_residual();
    let slack = suite.worst_slack();
    report.note("poincare", format!("{:.10}", suite.poincare));
    report.note("worst_residual", format!("{worst:.3e}"));
    report.note("worst_slack", format!("{slack:.3e}"));
    report.check(worst <= tol, || format!("projection identity residual {worst:.3e} exceeds {tol:.1e}"));
    report.check(slack >= -tol, || format!("dual-norm inequality violated (slack {slack:.3e})"));

    let u = StaggeredVectorField::from_fn(g, |_| [1.0, 0.0]);
    let (un, pn) = (u.l2_norm(Some(&d)), project_divfree0(&u, &d)?.projected.l2_norm(Some(&d)));
    report.note("witness_norm", format!("{un:.15}"));
    report.note("witness_seminorm", format!("{pn:.3e}"));
    report.check((un - 1.0).abs() <= 1e-12, || format!("witness norm {un} is not 1"));
    report.check(pn <= tol, || format!("seminorm witness has projection norm {pn:.3e}"));

    let nc = translating_disk(cfg.get("moving_h")?, cfg.get("moving_steps")?)?;
    let delta: f64 = cfg.get("moving_delta")?;
    let mg = *nc.reference().grid();
    let fields = (0..nc.steps())
        .map(|k| curl_of_nodes(&mg, &random_node_field(&mg, &mut rng::stream(seed, 1000 + k as u64), 10, 4)))
        .collect::<crate::Result<Vec<_>>>()?;
    let (a, b) = nc.interval();
    let p = per_slice_project(&VectorSeries::new(a, b, fields)?, &nc, delta)?;
    let sweep = uniform_poincare_sweep(nc.reference(), &[0.0, delta], cfg.get("gamma")?)?;
    let c = transported_poincare(nc.family(), nc.reference(), &sweep, 8)?.value;
    let st = space_time_check(&p, c);
    let rel = st.slack / st.norm;
    report.note("space_time_constant", format!("{c:.6}"));
    report.note("space_time_slack", format!("{rel:.3e}"));
    report.check(rel >= -tol, || format!("space-time dual inequality violated (slack {rel:.3e})"));
    report.check(p.pythagoras_defect() <= tol, || format!("per-slice Pythagoras defect {:.3e}", p.pythagoras_defect()));
    report.csv = csv_bytes(|buf| suite.write_csv(buf))?;
    Ok(report)
}
