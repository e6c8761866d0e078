//! Three-term Cauchy budget on a moving disk for a 1/n-perturbed family.

use compactness_lab::movedom::{DiffeoFamily, NonCylindricalDomain};
use compactness_lab::probe::families::{on_slices, perturbed};
use compactness_lab::probe::kruzhkov_probe;
use compactness_lab::{Grid, RasterDomain};

fn main() -> compactness_lab::Result<()> {
    let g = Grid::unit(2, 64)?;
    let d = RasterDomain::disk(g, [0.45, 0.5], 0.3);
    let f = DiffeoFamily::preset("translation:0.1:0", 0.0, 1.0, g.box_center())?;
    let nc = NonCylindricalDomain::new(f, d, 8)?;
    let smooth = |w: f64| on_slices(&nc, move |t, x| (w * x[0] + t).sin() * (2.0 * x[1]).cos() + 0.5);
    let fam = perturbed(&smooth(3.0)?, &smooth(7.0)?, &[1, 2, 4, 8])?;
    let r = kruzhkov_probe(&fam, &nc, 8, &[16, 32], 2.0)?;
    r.write_csv(std::io::stdout())?;
    println!("accounting error {:.1e}, verdict {:?}", r.worst_accounting_error(), r.verdict);
    Ok(())
}
