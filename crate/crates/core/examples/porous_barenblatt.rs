//! Semi-implicit porous medium runs against the Barenblatt profile, followed
//! by the hypothesis monitor over time refinements.

use compactness_lab::parabolic::{energy_report, run_scheme, theorem1_monitor, Barenblatt, DiffusionTensor, SchemeOptions};
use compactness_lab::truncate::Nonlinearity;
use compactness_lab::Grid;

fn main() -> compactness_lab::Result<()> {
    let g = Grid::new_1d(256, 2.0)?;
    let b = Barenblatt::with_front(2.0, 0.5, 1.0)?;
    let phi = Nonlinearity::porous(2.0)?;
    let a = DiffusionTensor::identity();
    let u0 = b.sample(&g, 0.1);
    let exact = b.sample(&g, 1.0);
    let mut family = Vec::new();
    for n in [16, 32, 64, 128] {
        let run = run_scheme(&u0, 0.1, 1.0, n, &a, &phi, &SchemeOptions::default())?;
        let err = run.final_state().sub(&exact)?.map(f64::abs).integral() / exact.integral();
        let energy = energy_report(&run, &a, &phi)?;
        println!("N = {n:>3}  rel L¹ error {err:.3e}  energy inequality {}", if energy.holds() { "holds" } else { "fails" });
        family.push(run.series()?);
    }
    let mon = theorem1_monitor(&family, &phi, 1)?;
    mon.write_csv(std::io::stdout())?;
    println!("verdict: {:?}", mon.verdict);
    Ok(())
}
