//! The four-line weak-limit pipeline for a translating profile times a fixed
//! weight: every line pairs against θ separately and the lines add up.

use compactness_lab::productlimit::{product_pipeline, ProductFamily};
use compactness_lab::{Grid, ScalarField, StepTimeSeries};

fn main() -> compactness_lab::Result<()> {
    let g = Grid::new_1d(512, 1.0)?;
    let prof = |x: f64| (-(x - 0.5).powi(2) / 0.01).exp();
    let ns = vec![1, 2, 4, 8, 16];
    let a = ns
        .iter()
        .map(|&n| StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, move |p| prof(p[0] + 1.0 / n as f64))))
        .collect::<compactness_lab::Result<Vec<_>>>()?;
    let b = StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, |p| 1.0 + p[0]))?;
    let limit = StepTimeSeries::constant(0.0, 1.0, 2, ScalarField::from_fn(g, |p| prof(p[0])))?;
    let fam = ProductFamily::new(ns.clone(), a, vec![b.clone(); ns.len()], limit, b)?;
    let theta = ScalarField::from_fn(g, |p| (-(p[0] - 0.5).powi(2) / 0.02).exp());
    let r = product_pipeline(&fam, &theta, &[8, 32], 1)?;
    r.write_csv(std::io::stdout())?;
    println!("worst accounting error {:.2e}, total decays: {}", r.worst_accounting_error(), r.total_decays());
    Ok(())
}
