use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffeoKind {
    Identity,
    /// `x + t·v`.
    Translation { velocity: [f64; 2] },
    /// Rotation by `ω t` about `center`.
    Rotation { omega: f64, center: [f64; 2] },
    /// `c + (1 + a sin(f t))(x − c)`.
    Dilation { amplitude: f64, frequency: f64, center: [f64; 2] },
    /// `(x + s t (y − c_y), y)`.
    Shear { rate: f64, center: [f64; 2] },
}

/// A time-indexed family of diffeomorphisms `A_t = Θ(t, ·)` on `[a, b]`.
///
/// On 1D grids only the first coordinate moves; rotation and shear are
/// rejected there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoFamily {
    pub kind: DiffeoKind,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoCheck {
    /// `max ‖Θ(t, Θ⁻¹(t, y)) − y‖` over the samples.
    pub inverse_error: f64,
    /// Largest entry change of `∇Θ` between consecutive time samples.
    pub gradient_modulus: f64,
}

pub(crate) fn det(m: Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Singular values `(σ_min, σ_max)` of a 2×2 matrix.
pub(crate) fn singular_values(m: Mat2) -> (f64, f64) {
    let (a, b, c, d) = (m[0][0], m[0][1], m[1][0], m[1][1]);
    let q = (0.5 * (a + d)).hypot(0.5 * (c - b));
    let r = (0.5 * (a - d)).hypot(0.5 * (c + b));
    ((q - r).abs(), q + r)
}

impl DiffeoFamily {
    pub fn new(kind: DiffeoKind, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter(format!("time interval [{a}, {b}] is empty")));
        }
        if let DiffeoKind::Dilation { amplitude, .. } = kind {
            if !(amplitude.abs() < 1.0) {
                return Err(Error::InvalidParameter(format!("dilation amplitude {amplitude} must lie in (-1, 1)")));
            }
        }
        Ok(Self { kind, a, b })
    }

    pub fn identity(a: f64, b: f64) -> Result<Self> {
        Self::new(DiffeoKind::Identity, a, b)
    }

    /// `identity`, `translation:vx:vy`, `rotation:omega`, `dilation:amp[:freq]`, `shear:rate`.
    /// Rotation, dilation and shear act about `center`.
    pub fn preset(spec: &str, a: f64, b: f64, center: [f64; 2]) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Parse(format!("family '{spec}' is missing parameter {i}")))?
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("family '{spec}' has a non-numeric parameter")))
        };
        let kind = match (parts[0], parts.len()) {
            ("identity", 1) => DiffeoKind::Identity,
            ("translation", 3) => DiffeoKind::Translation { velocity: [num(1)?, num(2)?] },
            ("rotation", 2) => DiffeoKind::Rotation { omega: num(1)?, center },
            ("dilation", 2) => DiffeoKind::Dilation { amplitude: num(1)?, frequency: 1.0, center },
            ("dilation", 3) => DiffeoKind::Dilation { amplitude: num(1)?, frequency: num(2)?, center },
            ("shear", 2) => DiffeoKind::Shear { rate: num(1)?, center },
            _ => return Err(Error::Parse(format!("unknown diffeomorphism family '{spec}'"))),
        };
        Self::new(kind, a, b)
    }

    pub fn supports(&self, g: &Grid) -> bool {
        g.dim() == 2 || !matches!(self.kind, DiffeoKind::Rotation { .. } | DiffeoKind::Shear { .. })
    }

    pub(crate) fn check_grid(&self, g: &Grid) -> Result<()> {
        if self.supports(g) {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("{:?} needs a 2D grid", self.kind)))
        }
    }

    fn raw_map(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        match self.kind {
            DiffeoKind::Identity => x,
            DiffeoKind::Translation { velocity: v } => [x[0] + t * v[0], x[1] + t * v[1]],
            DiffeoKind::Rotation { omega, center: c } => {
                let (s, co) = (omega * t).sin_cos();
                let (dx, dy) = (x[0] - c[0], x[1] - c[1]);
                [c[0] + co * dx - s * dy, c[1] + s * dx + co * dy]
            }
            DiffeoKind::Dilation { amplitude, frequency, center: c } => {
                let f = 1.0 + amplitude * (frequency * t).sin();
                [c[0] + f * (x[0] - c[0]), c[1] + f * (x[1] - c[1])]
            }
            DiffeoKind::Shear { rate, center: c } => [x[0] + rate * t * (x[1] - c[1]), x[1]],
        }
    }

    fn raw_inverse(&self, t: f64, y: [f64; 2]) -> [f64; 2] {
        match self.kind {
            DiffeoKind::Identity => y,
            DiffeoKind::Translation { velocity: v } => [y[0] - t * v[0], y[1] - t * v[1]],
            DiffeoKind::Rotation { omega, center: c } => {
                let (s, co) = (omega * t).sin_cos();
                let (dx, dy) = (y[0] - c[0], y[1] - c[1]);
                [c[0] + co * dx + s * dy, c[1] - s * dx + co * dy]
            }
            DiffeoKind::Dilation { amplitude, frequency, center: c } => {
                let f = 1.0 + amplitude * (frequency * t).sin();
                [c[0] + (y[0] - c[0]) / f, c[1] + (y[1] - c[1]) / f]
            }
            DiffeoKind::Shear { rate, center: c } => [y[0] - rate * t * (y[1] - c[1]), y[1]],
        }
    }

    fn raw_gradient(&self, t: f64) -> Mat2 {
        match self.kind {
            DiffeoKind::Identity | DiffeoKind::Translation { .. } => [[1.0, 0.0], [0.0, 1.0]],
            DiffeoKind::Rotation { omega, .. } => {
                let (s, c) = (omega * t).sin_cos();
                [[c, -s], [s, c]]
            }
            DiffeoKind::Dilation { amplitude, frequency, .. } => {
                let f = 1.0 + amplitude * (frequency * t).sin();
                [[f, 0.0], [0.0, f]]
            }
            DiffeoKind::Shear { rate, .. } => [[1.0, rate * t], [0.0, 1.0]],
        }
    }

    /// `Θ(t, x)`; on a 1D grid the second coordinate is left alone.
    pub fn map(&self, g: &Grid, t: f64, x: [f64; 2]) -> [f64; 2] {
        let y = self.raw_map(t, x);
        if g.dim() == 1 {
            [y[0], x[1]]
        } else {
            y
        }
    }

    pub fn inverse(&self, g: &Grid, t: f64, y: [f64; 2]) -> [f64; 2] {
        let x = self.raw_inverse(t, y);
        if g.dim() == 1 {
            [x[0], y[1]]
        } else {
            x
        }
    }

    /// `∇_xΘ(t, x)`. All presets are affine in `x`.
    pub fn gradient(&self, g: &Grid, t: f64, _x: [f64; 2]) -> Mat2 {
        let m = self.raw_gradient(t);
        if g.dim() == 1 {
            [[m[0][0], 0.0], [0.0, 1.0]]
        } else {
            m
        }
    }

    pub fn jacobian(&self, g: &Grid, t: f64, x: [f64; 2]) -> f64 {
        det(self.gradient(g, t, x)).abs()
    }

    /// `a, a + Δ, …, b` with `Δ ≤ 1/per_unit`.
    pub fn time_samples(&self, per_unit: usize) -> Vec<f64> {
        let n = ((self.b - self.a) * per_unit.max(1) as f64).ceil().max(1.0) as usize;
        (0..=n).map(|i| self.a + (self.b - self.a) * i as f64 / n as f64).collect()
    }

    /// Inverse consistency and the sampled time modulus of `∇Θ` on the cell centres.
    pub fn check(&self, g: &Grid, per_unit: usize) -> Result<DiffeoCheck> {
        self.check_grid(g)?;
        let times = self.time_samples(per_unit);
        let mut inverse_error = 0.0f64;
        let mut gradient_modulus = 0.0f64;
        let stride = (g.cell_count() / 256).max(1);
        for (k, &t) in times.iter().enumerate() {
            for c in (0..g.cell_count()).step_by(stride) {
                let y = g.center(c);
                let back = self.map(g, t, self.inverse(g, t, y));
                inverse_error = inverse_error.max(((back[0] - y[0]).powi(2) + (back[1] - y[1]).powi(2)).sqrt());
                if k > 0 {
                    let (m0, m1) = (self.gradient(g, times[k - 1], y), self.gradient(g, t, y));
                    for i in 0..2 {
                        for j in 0..2 {
                            gradient_modulus = gradient_modulus.max((m1[i][j] - m0[i][j]).abs());
                        }
                    }
                }
            }
        }
        if inverse_error > 1e-9 {
            return Err(Error::Postcondition(format!("inverse of {:?} is off by {inverse_error:.3e}", self.kind)));
        }
        Ok(DiffeoCheck { inverse_error, gradient_modulus })
    }
}
