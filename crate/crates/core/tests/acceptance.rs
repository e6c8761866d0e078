//! End-to-end acceptance criteria. Runs without the libtest harness so every
//! criterion prints exactly one PASS/FAIL line; exits nonzero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rayon::prelude::*;

use compactness_lab::divfree::{curl_of_nodes, per_slice_project, project_divfree0, projection_suite, space_time_check};
use compactness_lab::mollify::uniform_commutator_sweep;
use compactness_lab::movedom::{
    bilipschitz, framing_check, poincare_constant, transported_poincare, uniform_poincare_sweep, DiffeoFamily, NonCylindricalDomain,
};
use compactness_lab::parabolic::{energy_report, run_scheme, theorem1_monitor, time_derivative_tv, Barenblatt, DiffusionTensor, SchemeOptions};
use compactness_lab::probe::families::{common_interior, on_slices, perturbed, stream_family, translating_disk};
use compactness_lab::probe::{kruzhkov_probe, ns_probe, NsConfig, ScalarFamily};
use compactness_lab::series::VectorSeries;
use compactness_lab::synth::random_node_field;
use compactness_lab::truncate::{build_beta, Nonlinearity};
use compactness_lab::{cli, rng, Grid, RasterDomain, Result, ScalarField, StaggeredVectorField, StepTimeSeries};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { ok, detail })
}

/// Dense 5-point Neumann Laplacian on an `n × n` unit square.
fn dense_neumann_lambda1(n: usize) -> f64 {
    let h2 = (n as f64).powi(-2);
    let idx = |i: usize, j: usize| j * n + i;
    let mut m = nalgebra::DMatrix::<f64>::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let c = idx(i, j);
            let mut nb = Vec::new();
            if i > 0 {
                nb.push(idx(i - 1, j));
            }
            if i + 1 < n {
                nb.push(idx(i + 1, j));
            }
            if j > 0 {
                nb.push(idx(i, j - 1));
            }
            if j + 1 < n {
                nb.push(idx(i, j + 1));
            }
            m[(c, c)] = nb.len() as f64 / h2;
            for o in nb {
                m[(c, o)] = -1.0 / h2;
            }
        }
    }
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

fn poincare_square() -> Result<Outcome> {
    let start = Instant::now();
    let c = poincare_constant(&RasterDomain::full(Grid::unit(2, 128)?))?;
    let secs = start.elapsed().as_secs_f64();
    let rel = (c * PI - 1.0).abs();
    let dense = 1.0 / dense_neumann_lambda1(32).sqrt();
    let iter32 = poincare_constant(&RasterDomain::full(Grid::unit(2, 32)?))?;
    let cross = (iter32 - dense).abs() / dense;
    outcome(rel <= 0.01 && cross <= 1e-6 && secs <= 60.0, format!("C = {c:.6}, rel err {rel:.2e}, 32x32 vs dense {cross:.1e}, {secs:.1} s"))
}

fn commutator_decay() -> Result<Outcome> {
    let g = Grid::new_1d(2048, 1.0)?;
    let a = ScalarField::from_fn(g, |p| (2.0 * PI * p[0]).sin());
    let b = ScalarField::from_fn(g, |p| (4.0 * PI * p[0]).sin().signum());
    let family = |f: &ScalarField| -> Result<Vec<StepTimeSeries>> {
        (1..=16).map(|n| StepTimeSeries::sample_midpoints(0.0, 1.0, 64, |t| f.scale((2.0 * PI * n as f64 * t).sin()))).collect()
    };
    let s = uniform_commutator_sweep(&family(&a)?, &family(&b)?, &[4, 8, 16, 32, 64])?;
    let monotone = s.windows(2).all(|w| w[1] <= w[0]);
    outcome(monotone && s[4] <= s[0] / 8.0, format!("sup ‖S‖₁ = {:.3e} .. {:.3e}, ratio {:.3e}", s[0], s[4], s[4] / s[0]))
}

fn barenblatt() -> Result<Outcome> {
    let g = Grid::new_1d(512, 2.0)?;
    let b = Barenblatt::with_front(2.0, 0.5, 1.0)?;
    let phi = Nonlinearity::porous(2.0)?;
    let a = DiffusionTensor::identity();
    let run = run_scheme(&b.sample(&g, 0.1), 0.1, 1.0, 256, &a, &phi, &SchemeOptions::default())?;
    let exact = b.sample(&g, 1.0);
    let err = run.final_state().sub(&exact)?.map(f64::abs).integral() / exact.integral();
    let m0 = run.masses()[0];
    let drift = run.stats.iter().map(|s| s.mass_change).fold(0.0, f64::max) / m0;
    let energy = energy_report(&run, &a, &phi)?;
    outcome(
        err <= 0.02 && drift <= 1e-12 && energy.holds(),
        format!("L¹ err {err:.3e}, mass drift {drift:.1e}, energy worst excess {:.1e}", energy.worst_excess()),
    )
}

fn monitor() -> Result<Outcome> {
    let g = Grid::new_1d(512, 2.0)?;
    let b = Barenblatt::with_front(2.0, 0.5, 1.0)?;
    let phi = Nonlinearity::porous(2.0)?;
    let u0 = b.sample(&g, 0.1);
    let ns = [16usize, 32, 64, 128];
    let runs = ns
        .par_iter()
        .map(|&n| run_scheme(&u0, 0.1, 1.0, n, &DiffusionTensor::identity(), &phi, &SchemeOptions::default())?.series())
        .collect::<Result<Vec<_>>>()?;
    let r = theorem1_monitor(&runs, &phi, 1)?;
    let spreads = r.spreads();
    let cauchy: Vec<f64> = r.rows[1..].iter().map(|row| row.cauchy_to_prev).collect();
    let decreasing = cauchy.windows(2).all(|w| w[1] < w[0]);
    let adv = ns
        .iter()
        .map(|&n| StepTimeSeries::sample_midpoints(0.1, 1.0, 4 * n, |t| u0.scale((2.0 * PI * n as f64 * (t - 0.1) / 0.9).sin())))
        .collect::<Result<Vec<_>>>()?;
    let d = RasterDomain::full(g);
    let tv = adv.iter().map(|s| time_derivative_tv(s, 1, &d)).collect::<Result<Vec<_>>>()?;
    let growth = tv.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    let adv_verdict = theorem1_monitor(&adv, &phi, 1)?.verdict;
    outcome(
        spreads.iter().all(|&s| s <= 2.0) && decreasing && r.verdict.is_consistent() && growth >= 1.8 && !adv_verdict.is_consistent(),
        format!("spreads {:.3}/{:.3}/{:.3}, Cauchy decreasing {decreasing}, adversarial tv growth {growth:.3}", spreads[0], spreads[1], spreads[2]),
    )
}

fn truncation() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut stability = 0.0f64;
    for phi in [Nonlinearity::cubic(), Nonlinearity::porous(2.0)?] {
        let mut c = Vec::new();
        for eps in [0.2, 0.1, 0.05] {
            let beta = build_beta(&phi, eps)?;
            let (dv, dd) = beta.junction_mismatch();
            worst = worst.max(dv).max(dd);
            c.push(beta.c_meas());
        }
        let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        stability = stability.max(hi / lo);
    }
    outcome(worst <= 1e-10 && stability <= 1.2, format!("junction mismatch {worst:.1e}, C_meas max/min {stability:.4}"))
}

fn projection() -> Result<Outcome> {
    let g = Grid::unit(2, 64)?;
    let d = RasterDomain::full(g);
    let suite = projection_suite(&d, 100, 1)?;
    let u = StaggeredVectorField::from_fn(g, |_| [1.0, 0.0]);
    let un = u.l2_norm(Some(&d));
    let pn = project_divfree0(&u, &d)?.projected.l2_norm(Some(&d));
    outcome(
        suite.worst_residual() <= 1e-8 && pn <= 1e-8 && (un - 1.0).abs() <= 1e-12,
        format!("worst residual {:.1e}, witness ‖Pu‖ {pn:.1e}, ‖u‖ − 1 = {:.1e}", suite.worst_residual(), un - 1.0),
    )
}

fn dual_inequality() -> Result<Outcome> {
    let suite = projection_suite(&RasterDomain::full(Grid::unit(2, 64)?), 100, 1)?;
    let slack = suite.worst_slack();
    let nc = translating_disk(0.02, 8)?;
    let g = *nc.reference().grid();
    let fields = (0..nc.steps())
        .map(|k| curl_of_nodes(&g, &random_node_field(&g, &mut rng::stream(1, k as u64), 10, 4)))
        .collect::<Result<Vec<_>>>()?;
    let p = per_slice_project(&VectorSeries::new(0.0, 1.0, fields)?, &nc, 0.03)?;
    let sweep = uniform_poincare_sweep(nc.reference(), &[0.0, 0.03], 0.1)?;
    let c = transported_poincare(nc.family(), nc.reference(), &sweep, 8)?.value;
    let st = space_time_check(&p, c);
    let rel = st.slack / st.norm;
    outcome(slack >= -1e-8 && rel >= -1e-8, format!("suite slack {slack:.3e}, per-slice slack {rel:.3e}"))
}

fn geometry() -> Result<Outcome> {
    let g = Grid::unit(2, 256)?;
    let h = g.min_spacing();
    let d = RasterDomain::disk(g, [0.5, 0.5], 0.4);
    let haus = d.eps_interior(0.1).hausdorff(&RasterDomain::disk(g, [0.5, 0.5], 0.3));
    let band = h * std::f64::consts::SQRT_2;
    let mut semigroup = 0;
    for (e1, e2) in [(0.05, 0.07), (0.02, 0.11), (0.1, 0.03)] {
        let two = d.eps_interior(e1).eps_interior(e2);
        let one = d.eps_interior(e1 + e2);
        semigroup += two.excess_over(&one, band) + one.excess_over(&two, band);
    }
    let fg = Grid::unit(2, 128)?;
    let fd = RasterDomain::disk(fg, fg.box_center(), 0.25);
    let times: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
    let mut framing = true;
    let mut etas = Vec::new();
    for spec in ["translation:0.1:0.05", "dilation:0.25"] {
        let f = DiffeoFamily::preset(spec, 0.0, 1.0, fg.box_center())?;
        let eta = bilipschitz(&f, &fd, 8)?.eta;
        framing &= framing_check(&f, &fd, 0.05, eta, &times)?.holds();
        etas.push(eta);
    }
    outcome(
        haus <= 2.0 * h && semigroup == 0 && framing,
        format!("Hausdorff {:.2} cells, semigroup excess {semigroup}, framing {framing} (η = {:.4}, {:.4})", haus / h, etas[0], etas[1]),
    )
}

fn ns() -> Result<Outcome> {
    let nc = translating_disk(0.0125, 32)?;
    let k = common_interior(&nc, 0.13);
    let cfg = NsConfig { deltas: vec![0.06, 0.03], shifts: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0], samples: 32, ..NsConfig::default() };
    let good = ns_probe(&stream_family(&nc, &[1, 2, 4], false)?, &nc, &k, &cfg)?;
    let bad = ns_probe(&stream_family(&nc, &[1, 2, 4], true)?, &nc, &k, &cfg)?;
    let growth = bad.levels.iter().map(|l| l.step3_growth).fold(f64::INFINITY, f64::min);
    outcome(
        good.verdict.is_consistent() && !bad.verdict.is_consistent() && growth >= 1.8 && good.worst_chain_slack() >= -1e-8,
        format!("convergent {}, oscillating {}, step3 growth {growth:.3}", good.verdict.is_consistent(), bad.verdict.is_consistent()),
    )
}

fn kruzhkov() -> Result<Outcome> {
    let g = Grid::unit(2, 64)?;
    let d = RasterDomain::disk(g, [0.45, 0.5], 0.3);
    let f = DiffeoFamily::preset("translation:0.1:0", 0.0, 1.0, g.box_center())?;
    let nc = NonCylindricalDomain::new(f, d, 32)?;
    let smooth = |w: f64| on_slices(&nc, move |t, x| (w * x[0] + t).sin() * (2.0 * x[1]).cos() + 0.5);
    let base = smooth(3.0)?;
    let good = kruzhkov_probe(&perturbed(&base, &smooth(7.0)?, &[1, 2, 4, 8, 16])?, &nc, 8, &[16, 32], 2.0)?;
    let labels = vec![1usize, 2, 4, 8];
    let members = labels
        .iter()
        .map(|&n| base.map_indexed(|k, s| Ok(s.scale((2.0 * PI * n as f64 * nc.time(k)).sin()))))
        .collect::<Result<Vec<_>>>()?;
    let bad = kruzhkov_probe(&ScalarFamily::new(labels, members)?, &nc, 8, &[16, 32], 2.0)?;
    let acc = good.worst_accounting_error().max(bad.worst_accounting_error());
    outcome(
        acc <= 1e-10 && good.verdict.is_consistent() && !bad.verdict.is_consistent(),
        format!("accounting {acc:.1e}, perturbed {}, oscillating {}", good.verdict.is_consistent(), bad.verdict.is_consistent()),
    )
}

fn determinism() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let cfg = dir.path().join("det.cfg");
    std::fs::write(&cfg, "[run]\nseed = 11\n[divfree]\ncells = 32\nfields = 20\n[nsprobe]\nh = 0.02\nsteps = 16\ndeltas = 0.06\n[porous]\ngrid = 128\nsteps = 16,32\n[kruzhkov]\nsteps = 8\n")?;
    let mut same = true;
    let mut names = Vec::new();
    for exp in ["divfree", "nsprobe", "porous", "kruzhkov"] {
        let read = |tag: &str| -> std::result::Result<Vec<u8>, cli::CliError> {
            let out = dir.path().join(format!("{exp}-{tag}"));
            cli::run(exp, &cfg, &out, None)?;
            Ok(std::fs::read(out.join("report.csv"))?)
        };
        let (a, b) = (read("a").map_err(cli_err)?, read("b").map_err(cli_err)?);
        same &= a == b && !a.is_empty();
        names.push(exp);
    }
    outcome(same, format!("report.csv byte-identical across two runs of {}", names.join(", ")))
}

fn cli_err(e: cli::CliError) -> compactness_lab::Error {
    compactness_lab::Error::Postcondition(e.to_string())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("Poincaré constant of the unit square", poincare_square),
        ("commutator decay", commutator_decay),
        ("porous medium against Barenblatt", barenblatt),
        ("hypothesis monitor and adversarial family", monitor),
        ("truncation junctions and deviation constant", truncation),
        ("projection suite and seminorm witness", projection),
        ("dual-norm inequality, static and per slice", dual_inequality),
        ("raster geometry and framing", geometry),
        ("divergence-free equicontinuity probe", ns),
        ("Kruzhkov budget probe", kruzhkov),
        ("determinism", determinism),
    ];
    let results: Vec<Result<Outcome>> = criteria.par_iter().map(|(_, f)| f()).collect();
    let mut failed = 0;
    for (i, ((name, _), r)) in criteria.iter().zip(results).enumerate() {
        let (ok, detail) = match r {
            Ok(o) => (o.ok, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{} criterion {:>2}: {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
