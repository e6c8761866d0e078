//! Erosions of a moving disk: the framing inclusions with the measured η and
//! the time-shift safety margin ξ(δ).

use compactness_lab::movedom::{bilipschitz, framing_check, DiffeoFamily};
use compactness_lab::probe::time_shift_safety;
use compactness_lab::{Grid, RasterDomain};

fn main() -> compactness_lab::Result<()> {
    let g = Grid::unit(2, 128)?;
    let d = RasterDomain::disk(g, g.box_center(), 0.25);
    for spec in ["translation:0.1:0.05", "dilation:0.25"] {
        let f = DiffeoFamily::preset(spec, 0.0, 1.0, g.box_center())?;
        let eta = bilipschitz(&f, &d, 8)?.eta;
        let fr = framing_check(&f, &d, 0.05, eta, &f.time_samples(64))?;
        let xi = time_shift_safety(&f, &d, 0.05, 32)?;
        println!("{spec:<22} η = {eta:.4}  framing {}  ξ(0.05) = {xi:.4}", if fr.holds() { "holds" } else { "fails" });
    }
    Ok(())
}
