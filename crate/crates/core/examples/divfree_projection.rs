//! Projection onto zero-trace divergence-free fields: identity residuals and
//! dual-norm slack on a small seeded suite.

use compactness_lab::divfree::projection_suite;
use compactness_lab::{Grid, RasterDomain};

fn main() -> compactness_lab::Result<()> {
    let g = Grid::unit(2, 32)?;
    let d = RasterDomain::disk(g, g.box_center(), 0.4);
    let r = projection_suite(&d, 10, 7)?;
    println!("Poincaré constant {:.5}", r.poincare);
    println!("worst residual {:.2e}, worst dual slack {:.3e}", r.worst_residual(), r.worst_slack());
    Ok(())
}
