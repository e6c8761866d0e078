//! Neumann Poincaré constant of the unit square against 1/π, and of a disk.

use compactness_lab::movedom::poincare_constant;
use compactness_lab::{Grid, RasterDomain};

fn main() -> compactness_lab::Result<()> {
    for n in [32, 64, 128] {
        let g = Grid::unit(2, n)?;
        let c = poincare_constant(&RasterDomain::full(g))?;
        println!("square {n:>3}x{n:<3} C = {c:.6}  (1/π = {:.6}, rel err {:.2e})", 1.0 / std::f64::consts::PI, (c * std::f64::consts::PI - 1.0).abs());
    }
    let g = Grid::unit(2, 96)?;
    let disk = RasterDomain::disk(g, g.box_center(), 0.4);
    println!("disk r = 0.4  C = {:.6}", poincare_constant(&disk)?);
    Ok(())
}
