use std::collections::VecDeque;

use super::edt::squared_distance_transform;
use super::Grid;
use crate::error::{Error, Result};

/// A face separating a domain cell from a non-domain cell (or the grid edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    /// 0 for an `x` face, 1 for a `y` face.
    pub axis: usize,
    /// Index into the face array of that axis.
    pub face: usize,
    /// The domain cell owning the face.
    pub cell: usize,
    /// `+1` when the outward normal points along the axis, `-1` otherwise.
    pub sign: f64,
    /// Face measure (`hy` for `x` faces, `hx` for `y` faces).
    pub length: f64,
}

/// Rasterised domain: a membership mask plus a signed distance to the
/// boundary, positive inside.
///
/// The signed distance of an inside cell is the distance from its centre to
/// the nearest outside centre minus half a cell; the grid is surrounded by an
/// implicit ring of outside cells. Outside cells carry the negated analogue.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterDomain {
    grid: Grid,
    inside: Vec<bool>,
    sdist: Vec<f64>,
}

impl RasterDomain {
    pub fn from_membership(grid: Grid, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.cell_count() {
            return Err(Error::InvalidGrid(format!(
                "membership has {} entries for {} cells",
                inside.len(),
                grid.cell_count()
            )));
        }
        let sdist = signed_distance(&grid, &inside);
        Ok(Self { grid, inside, sdist })
    }

    /// Cells whose centre satisfies `pred`.
    pub fn from_predicate(grid: Grid, pred: impl Fn([f64; 2]) -> bool) -> Self {
        let inside: Vec<bool> = grid.centers().map(pred).collect();
        let sdist = signed_distance(&grid, &inside);
        Self { grid, inside, sdist }
    }

    pub fn full(grid: Grid) -> Self {
        Self::from_predicate(grid, |_| true)
    }

    pub fn disk(grid: Grid, center: [f64; 2], r: f64) -> Self {
        Self::from_predicate(grid, |p| {
            let dx = p[0] - center[0];
            let dy = if grid.dim() == 1 { 0.0 } else { p[1] - center[1] };
            dx * dx + dy * dy < r * r
        })
    }

    /// Axis-aligned square of side `side` centred at `center`.
    pub fn square(grid: Grid, center: [f64; 2], side: f64) -> Self {
        let half = 0.5 * side;
        Self::from_predicate(grid, |p| {
            (p[0] - center[0]).abs() < half
                && (grid.dim() == 1 || (p[1] - center[1]).abs() < half)
        })
    }

    pub fn annulus(grid: Grid, center: [f64; 2], r0: f64, r1: f64) -> Self {
        Self::from_predicate(grid, |p| {
            let dx = p[0] - center[0];
            let dy = if grid.dim() == 1 { 0.0 } else { p[1] - center[1] };
            let rr = dx * dx + dy * dy;
            rr >= r0 * r0 && rr < r1 * r1
        })
    }

    /// Parses `disk:r`, `square:L`, `annulus:r0:r1` or `full`, centred in the grid box.
    pub fn preset(grid: Grid, spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{s}' in domain '{spec}'")))
        };
        let c = grid.box_center();
        match parts.as_slice() {
            ["full"] => Ok(Self::full(grid)),
            ["disk", r] => Ok(Self::disk(grid, c, num(r)?)),
            ["square", l] => Ok(Self::square(grid, c, num(l)?)),
            ["annulus", r0, r1] => Ok(Self::annulus(grid, c, num(r0)?, num(r1)?)),
            _ => Err(Error::Parse(format!("unknown domain preset '{spec}'"))),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn membership(&self) -> &[bool] {
        &self.inside
    }

    pub fn signed_distance(&self) -> &[f64] {
        &self.sdist
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn cell_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    /// Rasterised Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.cell_count() as f64 * self.grid.cell_volume()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// `{x : d(x, complement) > eps}`. `eps = 0` returns the domain itself.
    pub fn eps_interior(&self, eps: f64) -> Self {
        let inside: Vec<bool> = self.sdist.iter().map(|&s| s > eps.max(0.0)).collect();
        let sdist = signed_distance(&self.grid, &inside);
        Self { grid: self.grid, inside, sdist }
    }

    /// `A + B(0, eps)`, truncated to the grid.
    pub fn eps_exterior(&self, eps: f64) -> Self {
        let e = eps.max(0.0);
        let inside: Vec<bool> =
            self.sdist.iter().zip(&self.inside).map(|(&s, &b)| b || s >= -e).collect();
        let sdist = signed_distance(&self.grid, &inside);
        Self { grid: self.grid, inside, sdist }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(a, b)| *a && *b).collect();
        Self::from_membership(self.grid, inside)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(a, b)| *a || *b).collect();
        Self::from_membership(self.grid, inside)
    }

    /// Cells in `self` but not in `other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(a, b)| *a && !*b).collect();
        Self::from_membership(self.grid, inside)
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.grid == other.grid && self.inside.iter().zip(&other.inside).all(|(a, b)| !*a || *b)
    }

    /// Distances from each cell centre to the nearest centre of `self`.
    pub fn distance_to(&self) -> Vec<f64> {
        let [hx, hy] = self.grid.spacing();
        squared_distance_transform(self.grid.nx(), self.grid.ny(), &self.inside, hx, hy)
            .into_iter()
            .map(f64::sqrt)
            .collect()
    }

    /// Number of cells of `self` outside `sup` farther than `band` from it.
    /// With `band = h·√2` this is inclusion up to a one-cell band.
    pub fn excess_over(&self, sup: &Self, band: f64) -> usize {
        if sup.is_empty() {
            return self.cell_count();
        }
        let d = sup.distance_to();
        self.inside
            .iter()
            .zip(&sup.inside)
            .zip(&d)
            .filter(|((a, b), dist)| **a && !**b && **dist > band * (1.0 + 1e-12))
            .count()
    }

    /// Number of cells in the symmetric difference.
    pub fn symmetric_difference_count(&self, other: &Self) -> usize {
        self.inside.iter().zip(&other.inside).filter(|(a, b)| a != b).count()
    }

    /// Discrete Hausdorff distance between the sets of cell centres.
    pub fn hausdorff(&self, other: &Self) -> f64 {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => return 0.0,
            (true, false) | (false, true) => return f64::INFINITY,
            _ => {}
        }
        let to_other = other.distance_to();
        let to_self = self.distance_to();
        let a = self.cells().map(|c| to_other[c]).fold(0.0, f64::max);
        let b = other.cells().map(|c| to_self[c]).fold(0.0, f64::max);
        a.max(b)
    }

    /// Edge neighbours of `c` that lie on the grid.
    pub fn neighbours(&self, c: usize) -> impl Iterator<Item = usize> {
        lattice_neighbours(&self.grid, c)
    }

    /// Number of 4-connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.inside.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.inside.len() {
            if !self.inside[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                for n in self.neighbours(c) {
                    if self.inside[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Every face separating a domain cell from the outside, in a fixed order
    /// (`x` faces row-major, then `y` faces).
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let [hx, hy] = g.spacing();
        let mut out = Vec::new();
        for j in 0..ny {
            for i in 0..=nx {
                let left = (i > 0).then(|| g.index(i - 1, j)).filter(|&c| self.inside[c]);
                let right = (i < nx).then(|| g.index(i, j)).filter(|&c| self.inside[c]);
                let face = j * (nx + 1) + i;
                match (left, right) {
                    (Some(c), None) => out.push(BoundaryFace { axis: 0, face, cell: c, sign: 1.0, length: hy }),
                    (None, Some(c)) => out.push(BoundaryFace { axis: 0, face, cell: c, sign: -1.0, length: hy }),
                    _ => {}
                }
            }
        }
        if g.dim() == 2 {
            for j in 0..=ny {
                for i in 0..nx {
                    let below = (j > 0).then(|| g.index(i, j - 1)).filter(|&c| self.inside[c]);
                    let above = (j < ny).then(|| g.index(i, j)).filter(|&c| self.inside[c]);
                    let face = j * nx + i;
                    match (below, above) {
                        (Some(c), None) => out.push(BoundaryFace { axis: 1, face, cell: c, sign: 1.0, length: hx }),
                        (None, Some(c)) => out.push(BoundaryFace { axis: 1, face, cell: c, sign: -1.0, length: hx }),
                        _ => {}
                    }
                }
            }
        }
        out
    }

    /// Face quadrature weights: full cell volume on faces with both cells in
    /// the domain, half on boundary faces, zero elsewhere.
    pub fn face_weights(&self) -> [Vec<f64>; 2] {
        face_weights(&self.grid, Some(&self.inside))
    }
}

pub(crate) fn lattice_neighbours(g: &Grid, c: usize) -> impl Iterator<Item = usize> {
    let (i, j) = g.ij(c);
    let (nx, ny) = (g.nx(), g.ny());
    let two_d = g.dim() == 2;
    let cand = [
        (i > 0).then(|| c - 1),
        (i + 1 < nx).then(|| c + 1),
        (two_d && j > 0).then(|| c - nx),
        (two_d && j + 1 < ny).then(|| c + nx),
    ];
    cand.into_iter().flatten()
}

pub(crate) fn face_weights(g: &Grid, inside: Option<&[bool]>) -> [Vec<f64>; 2] {
    let (nx, ny) = (g.nx(), g.ny());
    let vol = g.cell_volume();
    let member = |c: usize| inside.is_none_or(|m| m[c]);
    let mut wx = vec![0.0; (nx + 1) * ny];
    for j in 0..ny {
        for i in 0..=nx {
            let l = i > 0 && member(g.index(i - 1, j));
            let r = i < nx && member(g.index(i, j));
            wx[j * (nx + 1) + i] = match (l, r) {
                (true, true) => vol,
                (true, false) | (false, true) => 0.5 * vol,
                _ => 0.0,
            };
        }
    }
    let mut wy = Vec::new();
    if g.dim() == 2 {
        wy = vec![0.0; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                let b = j > 0 && member(g.index(i, j - 1));
                let a = j < ny && member(g.index(i, j));
                wy[j * nx + i] = match (b, a) {
                    (true, true) => vol,
                    (true, false) | (false, true) => 0.5 * vol,
                    _ => 0.0,
                };
            }
        }
    }
    [wx, wy]
}

fn signed_distance(g: &Grid, inside: &[bool]) -> Vec<f64> {
    let (nx, ny) = (g.nx(), g.ny());
    let [hx, hy] = g.spacing();
    let half = 0.5 * g.min_spacing();
    // Pad with one ring of outside cells so that the grid edge acts as boundary.
    let (px, py) = if g.dim() == 1 { (nx + 2, 1) } else { (nx + 2, ny + 2) };
    let off_y = if g.dim() == 1 { 0 } else { 1 };
    let mut outside = vec![true; px * py];
    for j in 0..ny {
        for i in 0..nx {
            outside[(j + off_y) * px + i + 1] = !inside[g.index(i, j)];
        }
    }
    let d_out = squared_distance_transform(px, py, &outside, hx, hy);
    let d_in = squared_distance_transform(nx, ny, inside, hx, hy);
    (0..nx * ny)
        .map(|c| {
            let (i, j) = g.ij(c);
            if inside[c] {
                d_out[(j + off_y) * px + i + 1].sqrt() - half
            } else if d_in[c].is_finite() {
                -(d_in[c].sqrt() - half)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize) -> Grid {
        Grid::unit(2, n).unwrap()
    }

    #[test]
    fn sign_matches_membership() {
        let d = RasterDomain::disk(unit(64), [0.5, 0.5], 0.3);
        for (s, b) in d.signed_distance().iter().zip(d.membership()) {
            assert_eq!(*s > 0.0, *b);
        }
    }

    #[test]
    fn eps_zero_is_identity() {
        let d = RasterDomain::disk(unit(64), [0.5, 0.5], 0.3);
        assert_eq!(d.eps_interior(0.0).membership(), d.membership());
    }

    #[test]
    fn disk_erosion_close_to_smaller_disk() {
        let g = unit(256);
        let h = g.min_spacing();
        let d = RasterDomain::disk(g, [0.5, 0.5], 0.4);
        let eroded = d.eps_interior(0.1);
        let target = RasterDomain::disk(g, [0.5, 0.5], 0.3);
        assert!(eroded.hausdorff(&target) <= 2.0 * h);
    }

    #[test]
    fn erosion_past_inradius_is_empty() {
        let d = RasterDomain::disk(unit(64), [0.5, 0.5], 0.2);
        assert!(d.eps_interior(0.25).is_empty());
    }

    #[test]
    fn full_square_boundary_faces() {
        let g = unit(8);
        let d = RasterDomain::full(g);
        let faces = d.boundary_faces();
        assert_eq!(faces.len(), 32);
        let perim: f64 = faces.iter().map(|f| f.length).sum();
        assert!((perim - 4.0).abs() < 1e-14);
    }

    #[test]
    fn components() {
        let g = Grid::new_1d(4, 1.0).unwrap();
        let d = RasterDomain::from_membership(g, vec![true, false, true, false]).unwrap();
        assert_eq!(d.component_count(), 2);
        assert!(!d.is_connected());
        let annulus = RasterDomain::annulus(unit(64), [0.5, 0.5], 0.1, 0.3);
        assert!(annulus.is_connected());
    }

    #[test]
    fn presets_parse() {
        let g = unit(32);
        assert!(RasterDomain::preset(g, "disk:0.3").is_ok());
        assert!(RasterDomain::preset(g, "square:0.5").is_ok());
        assert!(RasterDomain::preset(g, "annulus:0.1:0.3").is_ok());
        assert!(RasterDomain::preset(g, "hexagon:1").is_err());
        assert!(RasterDomain::preset(g, "disk:abc").is_err());
    }

    proptest! {
        #[test]
        fn erosion_is_monotone(e1 in 0.0f64..0.2, de in 0.0f64..0.2) {
            let d = RasterDomain::disk(unit(48), [0.5, 0.5], 0.35);
            let a = d.eps_interior(e1);
            let b = d.eps_interior(e1 + de);
            prop_assert!(b.is_subset_of(&a));
        }

        #[test]
        fn duality_band(eps in 0.0f64..0.15, r in 0.1f64..0.3) {
            let d = RasterDomain::disk(unit(48), [0.5, 0.5], r);
            let back = d.eps_exterior(eps).eps_interior(eps);
            prop_assert!(d.is_subset_of(&back));
        }

        #[test]
        fn semigroup_within_one_cell(e1 in 0.0f64..0.12, e2 in 0.0f64..0.12) {
            let g = unit(64);
            let band = g.min_spacing() * 2f64.sqrt();
            let d = RasterDomain::disk(g, [0.5, 0.5], 0.4);
            let two = d.eps_interior(e1).eps_interior(e2);
            let one = d.eps_interior(e1 + e2);
            prop_assert_eq!(two.excess_over(&one, band), 0);
            prop_assert_eq!(one.excess_over(&two, band), 0);
        }
    }
}
