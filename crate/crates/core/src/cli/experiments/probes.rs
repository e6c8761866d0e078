use std::f64::consts::PI;

use super::{csv_bytes, one_of, point, record_verdict};
use crate::cli::{CliError, Config, Experiment, Key, Report};
use crate::grid::{Grid, RasterDomain};
use crate::movedom::{DiffeoFamily, NonCylindricalDomain};
use crate::parabolic::Verdict;
use crate::probe::families::{boundary_concentrating, common_interior, on_slices, perturbed, stream_family, translating_disk};
use crate::probe::{kruzhkov_probe, local_to_global, ns_probe, NsConfig, ScalarFamily};

pub const NSPROBE: Experiment = Experiment {
    name: "nsprobe",
    summary: "equicontinuity budget for divergence-free fields on a translating disk",
    keys: &[
        Key { name: "h", default: "0.0125", doc: "cell size of the translating-disk domain" },
        Key { name: "steps", default: "32", doc: "time slices on [0, 1]" },
        Key { name: "labels", default: "1,2,4", doc: "family indices n" },
        Key { name: "family", default: "convergent", doc: "convergent (curl(ψ + ψ'/n)) or oscillating (sin(2πnt)·curl ψ)" },
        Key { name: "deltas", default: "0.06,0.03", doc: "mollification depths δ" },
        Key { name: "shifts", default: "0.03125,0.0625,0.125", doc: "time shifts s, kept when s ≤ ξ(δ)" },
        Key { name: "inner", default: "0.13", doc: "K is the common interior of A_t(Ω_inner)" },
        Key { name: "q", default: "4", doc: "upper interpolation exponent" },
        Key { name: "r", default: "3", doc: "exponent r in the step-1 chain bound" },
        Key { name: "order", default: "1", doc: "derivative order N of the battery weights" },
        Key { name: "samples", default: "32", doc: "time samples for the shift search" },
    ],
    run: nsprobe,
};

fn nsprobe(cfg: &Config, seed: u64) -> Result<Report, CliError> {
    let nc = translating_disk(cfg.get("h")?, cfg.get("steps")?)?;
    let oscillating = one_of(cfg, "family", &["convergent", "oscillating"])? == "oscillating";
    let fam = stream_family(&nc, &cfg.list::<usize>("labels")?, oscillating)?;
    let k = common_interior(&nc, cfg.get("inner")?);
    let ns = NsConfig {
        deltas: cfg.list("deltas")?,
        shifts: cfg.list("shifts")?,
        q: cfg.get("q")?,
        r: cfg.get("r")?,
        order: cfg.get("order")?,
        seed,
        samples: cfg.get("samples")?,
    };
    let r = ns_probe(&fam, &nc, &k, &ns)?;
    let mut report = Report::default();
    let acc = r.worst_accounting_error();
    let slack = r.worst_chain_slack();
    let interp = r.members.iter().map(|m| m.interpolation_slack).fold(f64::INFINITY, f64::min);
    report.note("eta", format!("{:.6}", r.eta));
    report.note("accounting_error", format!("{acc:.3e}"));
    report.note("chain_slack", format!("{slack:.3e}"));
    report.note("interpolation_slack", format!("{interp:.3e}"));
    for l in &r.levels {
        report.note(&format!("xi_delta{}", l.delta), format!("{:.6}", l.xi));
        report.note(&format!("step3_growth_delta{}", l.delta), format!("{:.4}", l.step3_growth));
    }
    report.check(acc <= 1e-10, || format!("budget lines do not sum to the modulus (error {acc:.3e})"));
    report.check(slack >= -1e-8, || format!("step1 chain bound violated (slack {slack:.3e})"));
    report.check(interp >= -1e-8, || format!("interpolation bound violated (slack {interp:.3e})"));
    record_verdict(&mut report, &r.verdict);
    report.csv = csv_bytes(|buf| r.write_csv(buf))?;
    Ok(report)
}

pub const KRUZHKOV: Experiment = Experiment {
    name: "kruzhkov",
    summary: "three-term Cauchy budget and peel control on a moving disk",
    keys: &[
        Key { name: "cells", default: "64", doc: "cells per side of the unit square" },
        Key { name: "radius", default: "0.3", doc: "reference disk radius" },
        Key { name: "center", default: "0.45,0.5", doc: "reference disk centre" },
        Key { name: "motion", default: "translation:0.1:0", doc: "diffeomorphism family on [0, 1]" },
        Key { name: "steps", default: "32", doc: "time slices" },
        Key { name: "labels", default: "1,2,4,8", doc: "family indices n" },
        Key { name: "family", default: "perturbed", doc: "perturbed (f + g/n), oscillating (sin(2πnt)·f) or boundary (peel adversary, needs labels ≥ 4)" },
        Key { name: "base_freq", default: "3", doc: "f = sin(w x + t)·cos(2y) + 1/2 with w = base_freq" },
        Key { name: "pert_freq", default: "7", doc: "g is f with w = pert_freq" },
        Key { name: "m", default: "8", doc: "interior depth 1/m" },
        Key { name: "ells", default: "16,32", doc: "mollifier scales ℓ ≥ 2m/η" },
        Key { name: "p", default: "2", doc: "Lebesgue exponent" },
        Key { name: "peel_eps", default: "0.2,0.1,0.05,0.025", doc: "peel depths ε" },
    ],
    run: kruzhkov,
};

fn kruzhkov(cfg: &Config, _seed: u64) -> Result<Report, CliError> {
    let g = Grid::unit(2, cfg.get("cells")?)?;
    let d = RasterDomain::disk(g, point(cfg, "center")?, cfg.get("radius")?);
    let f = DiffeoFamily::preset(&cfg.text("motion"), 0.0, 1.0, g.box_center())?;
    let nc = NonCylindricalDomain::new(f, d, cfg.get("steps")?)?;
    let labels: Vec<usize> = cfg.list("labels")?;
    let p: f64 = cfg.get("p")?;
    let smooth = |w: f64| on_slices(&nc, move |t, x| (w * x[0] + t).sin() * (2.0 * x[1]).cos() + 0.5);
    let fam = match one_of(cfg, "family", &["perturbed", "oscillating", "boundary"])? {
        "perturbed" => perturbed(&smooth(cfg.get("base_freq")?)?, &smooth(cfg.get("pert_freq")?)?, &labels)?,
        "oscillating" => {
            let base = smooth(cfg.get("base_freq")?)?;
            let members = labels
                .iter()
                .map(|&n| base.map_indexed(|k, s| Ok(s.scale((2.0 * PI * n as f64 * nc.time(k)).sin()))))
                .collect::<crate::Result<Vec<_>>>()?;
            ScalarFamily::new(labels, members)?
        }
        _ => boundary_concentrating(&nc, &labels, p)?,
    };
    let r = kruzhkov_probe(&fam, &nc, cfg.get("m")?, &cfg.list::<u32>("ells")?, p)?;
    let peel = local_to_global(&fam, &nc, &cfg.list::<f64>("peel_eps")?, p)?;
    let mut report = Report::default();
    let acc = r.worst_accounting_error();
    report.note("eta", format!("{:.6}", r.eta));
    report.note("accounting_error", format!("{acc:.3e}"));
    for (l, v) in &r.moduli {
        report.note(&format!("modulus_ell{l}"), format!("{v:.6e}"));
    }
    for (e, v) in &peel.sup_peel {
        report.note(&format!("peel_eps{e}"), format!("{v:.6e}"));
    }
    report.check(acc <= 1e-10, || format!("three-term budget does not sum to the difference (error {acc:.3e})"));
    record_verdict(&mut report, &r.verdict);
    if let Verdict::Inconsistent(why) = &peel.verdict {
        report.failures.extend(why.iter().map(|w| format!("peel: {w}")));
    }
    report.csv = csv_bytes(|buf| r.write_csv(buf))?;
    Ok(report)
}
