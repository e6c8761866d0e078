//! Text formats for cell fields (`.grid`) and staggered fields (`.sgrid`).
//!
//! `.grid`: `dim nx [ny]`, then `Lx [Ly]`, then one value per line.
//! `.sgrid`: `dim nx ny`, then `Lx [Ly]`, then the `x` faces followed by the
//! `y` faces, one value per line. Values are written with 17 significant
//! digits so a round trip is exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{Grid, ScalarField, StaggeredVectorField};
use crate::error::{Error, Result};

fn fmt_value(out: &mut String, v: f64) {
    let _ = writeln!(out, "{v:.16e}");
}

fn header(g: &Grid, staggered: bool) -> String {
    let mut s = String::new();
    if g.dim() == 1 && !staggered {
        let _ = writeln!(s, "1 {}", g.nx());
        let _ = writeln!(s, "{:.16e}", g.extent()[0]);
    } else if g.dim() == 1 {
        let _ = writeln!(s, "1 {} 1", g.nx());
        let _ = writeln!(s, "{:.16e}", g.extent()[0]);
    } else {
        let _ = writeln!(s, "2 {} {}", g.nx(), g.ny());
        let _ = writeln!(s, "{:.16e} {:.16e}", g.extent()[0], g.extent()[1]);
    }
    s
}

pub fn format_grid(f: &ScalarField) -> String {
    let mut s = header(f.grid(), false);
    for &v in f.values() {
        fmt_value(&mut s, v);
    }
    s
}

pub fn format_sgrid(u: &StaggeredVectorField) -> String {
    let mut s = header(u.grid(), true);
    for &v in u.ux().iter().chain(u.uy()) {
        fmt_value(&mut s, v);
    }
    s
}

struct Parsed {
    grid: Grid,
    values: Vec<f64>,
}

fn parse(text: &str, staggered: bool) -> Result<Parsed> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let bad = |m: &str| Error::Parse(m.to_string());
    let head: Vec<usize> = lines
        .next()
        .ok_or_else(|| bad("missing header"))?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| bad("header must hold integers")))
        .collect::<Result<_>>()?;
    let ext: Vec<f64> = lines
        .next()
        .ok_or_else(|| bad("missing extents"))?
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| bad("extents must be numbers")))
        .collect::<Result<_>>()?;
    let grid = match (head.as_slice(), ext.as_slice()) {
        ([1, nx], [lx]) if !staggered => Grid::new_1d(*nx, *lx)?,
        ([1, nx, 1], [lx]) => Grid::new_1d(*nx, *lx)?,
        ([2, nx, ny], [lx, ly]) => Grid::new_2d(*nx, *ny, *lx, *ly)?,
        _ => return Err(bad("header and extents do not describe a 1D or 2D grid")),
    };
    let values: Vec<f64> = lines
        .map(|l| l.parse::<f64>().map_err(|_| Error::Parse(format!("bad value '{l}'"))))
        .collect::<Result<_>>()?;
    Ok(Parsed { grid, values })
}

pub fn parse_grid(text: &str) -> Result<ScalarField> {
    let p = parse(text, false)?;
    ScalarField::from_values(p.grid, p.values)
}

pub fn parse_sgrid(text: &str) -> Result<StaggeredVectorField> {
    let p = parse(text, true)?;
    let g = p.grid;
    let nxf = (g.nx() + 1) * g.ny();
    if p.values.len() < nxf {
        return Err(Error::Parse(format!("expected at least {nxf} face values")));
    }
    let mut ux = p.values;
    let uy = ux.split_off(nxf);
    StaggeredVectorField::from_faces(g, ux, uy)
}

pub fn write_grid(path: impl AsRef<Path>, f: &ScalarField) -> Result<()> {
    std::fs::write(path, format_grid(f))?;
    Ok(())
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<ScalarField> {
    parse_grid(&std::fs::read_to_string(path)?)
}

pub fn write_sgrid(path: impl AsRef<Path>, u: &StaggeredVectorField) -> Result<()> {
    std::fs::write(path, format_sgrid(u))?;
    Ok(())
}

pub fn read_sgrid(path: impl AsRef<Path>) -> Result<StaggeredVectorField> {
    parse_sgrid(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_round_trip_is_exact() {
        let g = Grid::new_2d(7, 5, 1.3, 0.7).unwrap();
        let f = ScalarField::from_fn(g, |p| (p[0] * 11.0).sin() / 3.0 + p[1].exp());
        let back = parse_grid(&format_grid(&f)).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn one_dimensional_round_trip() {
        let g = Grid::new_1d(9, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |p| 1.0 / (1.0 + p[0]));
        let text = format_grid(&f);
        assert!(text.starts_with("1 9\n"));
        assert_eq!(parse_grid(&text).unwrap().values(), f.values());
    }

    #[test]
    fn sgrid_round_trip() {
        let g = Grid::unit(2, 6).unwrap();
        let u = StaggeredVectorField::from_fn(g, |p| [p[1].sin(), p[0] * p[0]]);
        let back = parse_sgrid(&format_sgrid(&u)).unwrap();
        assert_eq!(back.ux(), u.ux());
        assert_eq!(back.uy(), u.uy());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_grid("").is_err());
        assert!(parse_grid("3 4\n1\n").is_err());
        assert!(parse_grid("1 2\n1.0\n0.5\n").is_err());
        assert!(parse_grid("1 2\n1.0\n0.5\nabc\n").is_err());
    }
}
