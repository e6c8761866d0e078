use std::f64::consts::PI;

use rayon::prelude::*;

use super::{csv_bytes, num, one_of, record_verdict, table};
use crate::cli::{CliError, Config, Experiment, Key, Report};
use crate::grid::{Grid, RasterDomain, ScalarField};
use crate::mollify::uniform_commutator_sweep;
use crate::parabolic::{energy_report, run_scheme, theorem1_monitor, time_derivative_tv, Barenblatt, DiffusionTensor, SchemeOptions};
use crate::productlimit::{product_pipeline, ProductFamily};
use crate::series::StepTimeSeries;
use crate::truncate::Nonlinearity;

pub const POROUS: Experiment = Experiment {
    name: "porous",
    summary: "porous medium refinements against Barenblatt, with the hypothesis monitor",
    keys: &[
        Key { name: "m", default: "2", doc: "porous exponent, Φ(u) = u^m" },
        Key { name: "grid", default: "512", doc: "cells on the line" },
        Key { name: "length", default: "2", doc: "line length" },
        Key { name: "front", default: "0.5", doc: "Barenblatt support half-width at t = 1" },
        Key { name: "center", default: "1", doc: "Barenblatt centre" },
        Key { name: "t0", default: "0.1", doc: "start time" },
        Key { name: "t1", default: "1", doc: "end time" },
        Key { name: "steps", default: "16,32,64,128,256", doc: "time-step counts N of the refinement family" },
        Key { name: "hminus", default: "1", doc: "order m of the H^{-m} norm in the monitor" },
        Key { name: "family", default: "barenblatt", doc: "barenblatt (scheme runs) or oscillating (sin(2πNt)·u0 on 4N steps)" },
        Key { name: "l1_tolerance", default: "0.02", doc: "relative L¹ error allowed at the finest N" },
        Key { name: "mass_tolerance", default: "1e-12", doc: "relative per-step mass drift allowed" },
    ],
    run: porous,
};

fn porous(cfg: &Config, _seed: u64) -> Result<Report, CliError> {
    let m: f64 = cfg.get("m")?;
    let g = Grid::new_1d(cfg.get("grid")?, cfg.get("length")?)?;
    let b = Barenblatt::with_front(m, cfg.get("front")?, cfg.get("center")?)?;
    let (t0, t1): (f64, f64) = (cfg.get("t0")?, cfg.get("t1")?);
    let steps: Vec<usize> = cfg.list("steps")?;
    let order: u32 = cfg.get("hminus")?;
    let phi = Nonlinearity::porous(m)?;
    let u0 = b.sample(&g, t0);
    let mut report = Report::default();

    let family: Vec<StepTimeSeries> = match one_of(cfg, "family", &["barenblatt", "oscillating"])? {
        "barenblatt" => {
            let a = DiffusionTensor::identity();
            let l1_tol: f64 = cfg.get("l1_tolerance")?;
            let mass_tol: f64 = cfg.get("mass_tolerance")?;
            let runs = steps
                .par_iter()
                .map(|&n| run_scheme(&u0, t0, t1, n, &a, &phi, &SchemeOptions::default()))
                .collect::<crate::Result<Vec<_>>>()?;
            let exact = b.sample(&g, t1);
            for run in &runs {
                let n = run.steps();
                let m0 = run.masses()[0];
                let drift = run.stats.iter().map(|s| s.mass_change).fold(0.0, f64::max) / m0;
                report.note(&format!("mass_drift_n{n}"), format!("{drift:.3e}"));
                report.check(drift <= mass_tol, || format!("mass drift {drift:.3e} exceeds {mass_tol:.1e} at N = {n}"));
                let energy = energy_report(run, &a, &phi)?;
                report.check(energy.holds(), || format!("energy inequality fails at N = {n} (worst excess {:.3e})", energy.worst_excess()));
            }
            let finest = runs.last().expect("steps is nonempty");
            let err = finest.final_state().sub(&exact)?.map(f64::abs).integral() / exact.integral();
            report.note("l1_error", format!("{err:.6e}"));
            report.note("min_value", format!("{:.3e}", finest.min_value()));
            report.check(err <= l1_tol, || format!("L1 error {err:.4e} against Barenblatt exceeds {l1_tol}"));
            runs.iter().map(|r| r.series()).collect::<crate::Result<_>>()?
        }
        _ => steps
            .iter()
            .map(|&n| {
                let u0 = &u0;
                StepTimeSeries::sample_midpoints(t0, t1, 4 * n, move |t| u0.scale((2.0 * PI * n as f64 * (t - t0) / (t1 - t0)).sin()))
            })
            .collect::<crate::Result<_>>()?,
    };

    let mon = theorem1_monitor(&family, &phi, order)?;
    let d = RasterDomain::full(g);
    let tv: Vec<f64> = family.iter().map(|s| time_derivative_tv(s, order, &d)).collect::<crate::Result<_>>()?;
    let growth = tv.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    let [s0, s1, s2] = mon.spreads();
    report.note("spread_l2", format!("{s0:.4}"));
    report.note("spread_grad_phi", format!("{s1:.4}"));
    report.note("spread_tv", format!("{s2:.4}"));
    if tv.len() > 1 {
        report.note("min_tv_growth", format!("{growth:.4}"));
    }
    record_verdict(&mut report, &mon.verdict);
    report.csv = csv_bytes(|buf| mon.write_csv(buf))?;
    Ok(report)
}

pub const COMMUTATOR: Experiment = Experiment {
    name: "commutator",
    summary: "uniform decay of the mollifier commutator over an oscillating family",
    keys: &[
        Key { name: "cells", default: "2048", doc: "cells on the unit line" },
        Key { name: "members", default: "16", doc: "family size; member n carries sin(2πnt)" },
        Key { name: "steps", default: "64", doc: "time steps on [0, 1]" },
        Key { name: "a_freq", default: "1", doc: "a_n(t, x) = sin(2π a_freq x)·sin(2πnt)" },
        Key { name: "b_freq", default: "2", doc: "b_n(t, x) = sign(sin(2π b_freq x))·sin(2πnt)" },
        Key { name: "ks", default: "4,8,16,32,64", doc: "mollifier scales" },
        Key { name: "decay", default: "0.125", doc: "required ratio last/first of sup_n ‖S_{n,k}‖₁" },
    ],
    run: commutator,
};

fn commutator(cfg: &Config, _seed: u64) -> Result<Report, CliError> {
    let g = Grid::new_1d(cfg.get("cells")?, 1.0)?;
    let members: usize = cfg.get("members")?;
    let steps: usize = cfg.get("steps")?;
    let (fa, fb): (f64, f64) = (cfg.get("a_freq")?, cfg.get("b_freq")?);
    let ks: Vec<u32> = cfg.list("ks")?;
    let decay: f64 = cfg.get("decay")?;
    let a = ScalarField::from_fn(g, |p| (2.0 * PI * fa * p[0]).sin());
    let b = ScalarField::from_fn(g, |p| (2.0 * PI * fb * p[0]).sin().signum());
    let modulated = |f: &ScalarField| -> crate::Result<Vec<StepTimeSeries>> {
        (1..=members)
            .map(|n| StepTimeSeries::sample_midpoints(0.0, 1.0, steps, |t| f.scale((2.0 * PI * n as f64 * t).sin())))
            .collect()
    };
    let sweep = uniform_commutator_sweep(&modulated(&a)?, &modulated(&b)?, &ks)?;

    let mut report = Report::default();
    let rows: Vec<[String; 2]> = ks.iter().zip(&sweep).map(|(k, v)| [k.to_string(), num(*v)]).collect();
    report.csv = table(["k", "sup_l1"], &rows)?;
    let monotone = sweep.windows(2).all(|w| w[1] <= w[0]);
    let ratio = sweep[sweep.len() - 1] / sweep[0];
    report.note("ratio_last_first", format!("{ratio:.4e}"));
    report.check(monotone, || "commutator sup is not nonincreasing in k".into());
    report.check(ratio <= decay, || format!("commutator decay ratio {ratio:.4e} exceeds {decay}"));
    Ok(report)
}

pub const PRODUCTLIMIT: Experiment = Experiment {
    name: "productlimit",
    summary: "four-step weak-limit pipeline for products a_n b_n",
    keys: &[
        Key { name: "grid", default: "256", doc: "cells on the unit line" },
        Key { name: "steps", default: "16", doc: "time steps per member (oscillating: 8n)" },
        Key { name: "labels", default: "1,2,4,8,16", doc: "family indices n" },
        Key { name: "ks", default: "8,16,32", doc: "mollifier scales" },
        Key { name: "hminus", default: "1", doc: "order m of the H^{-m} time variation" },
        Key { name: "theta_width", default: "0.02", doc: "test function θ = exp(-(x - 1/2)²/width)" },
        Key { name: "family", default: "perturbed", doc: "perturbed, translating or oscillating" },
    ],
    run: productlimit,
};

fn productlimit(cfg: &Config, _seed: u64) -> Result<Report, CliError> {
    let g = Grid::new_1d(cfg.get("grid")?, 1.0)?;
    let steps: usize = cfg.get("steps")?;
    let labels: Vec<usize> = cfg.list("labels")?;
    let ks: Vec<u32> = cfg.list("ks")?;
    let order: u32 = cfg.get("hminus")?;
    let width: f64 = cfg.get("theta_width")?;
    let theta = ScalarField::from_fn(g, |p| (-(p[0] - 0.5).powi(2) / width).exp());
    let sample = |steps: usize, f: &(dyn Fn(f64, f64) -> f64 + Sync)| {
        StepTimeSeries::sample_midpoints(0.0, 1.0, steps, |t| ScalarField::from_fn(g, |p| f(t, p[0])))
    };

    let fam = match one_of(cfg, "family", &["perturbed", "translating", "oscillating"])? {
        "perturbed" => {
            let a = |t: f64, x: f64| (1.0 + t) * (PI * x).sin();
            let b = |t: f64, x: f64| 1.0 + 0.5 * (2.0 * PI * (x - t)).cos();
            let (mut an, mut bn) = (Vec::new(), Vec::new());
            for &n in &labels {
                let e = 1.0 / n as f64;
                an.push(sample(steps, &|t, x| a(t, x) + e * (3.0 * PI * x).cos() * t)?);
                bn.push(sample(steps, &|t, x| b(t, x) + e * (5.0 * PI * x).sin())?);
            }
            ProductFamily::new(labels, an, bn, sample(steps, &a)?, sample(steps, &b)?)?
        }
        "translating" => {
            let prof = |x: f64| (-(x - 0.5).powi(2) / 0.01).exp();
            let an = labels.iter().map(|&n| sample(steps, &|_, x| prof(x + 1.0 / n as f64))).collect::<crate::Result<Vec<_>>>()?;
            let b = sample(steps, &|_, x| 1.0 + x)?;
            ProductFamily::new(labels.clone(), an, vec![b.clone(); labels.len()], sample(steps, &|_, x| prof(x))?, b)?
        }
        _ => {
            let members = labels
                .iter()
                .map(|&n| sample(8 * n, &|t, x| (2.0 * PI * n as f64 * t).sin() * (PI * x).sin()))
                .collect::<crate::Result<Vec<_>>>()?;
            let zero = StepTimeSeries::constant(0.0, 1.0, 1, ScalarField::zeros(g))?;
            ProductFamily::new(labels, members.clone(), members, zero.clone(), zero)?
        }
    };

    let r = product_pipeline(&fam, &theta, &ks, order)?;
    let mut report = Report::default();
    let acc = r.worst_accounting_error();
    let tr = r.cells.iter().map(|c| c.transposition_error()).fold(0.0, f64::max);
    report.note("accounting_error", format!("{acc:.3e}"));
    report.note("transposition_error", format!("{tr:.3e}"));
    for (n, t) in r.totals() {
        report.note(&format!("total_n{n}"), format!("{t:.6e}"));
    }
    report.check(acc <= 1e-10, || format!("pipeline lines do not sum to the total (error {acc:.3e})"));
    report.check(tr <= 1e-10, || format!("even-kernel transposition fails (error {tr:.3e})"));
    for name in &r.failing {
        report.failures.push(format!("hypothesis {name} is not uniformly bounded"));
    }
    report.check(r.total_decays(), || "product pairing does not converge to the limit pairing".into());
    report.csv = csv_bytes(|buf| r.write_csv(buf))?;
    Ok(report)
}
