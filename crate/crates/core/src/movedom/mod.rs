//! Moving domains `Ω^t = A_t(Ω)`: diffeomorphism presets, raster geometry,
//! and the uniform constants that survive the change of variables.

mod diffeo;
mod geometry;
mod noncyl;
mod poincare;

pub use diffeo::{DiffeoCheck, DiffeoFamily, DiffeoKind, Mat2};
pub use geometry::{bilipschitz, framing_check, image_raster, jacobian_bounds, BilipschitzInfo, FramingReport, JacobianBounds};
pub use noncyl::{peel_measure, NonCylindricalDomain, PeelReport};
pub use poincare::{
    estimate_sobolev_constant, poincare_constant, poincare_estimate, sobolev_exponent, sobolev_transport_constant,
    transported_poincare, uniform_poincare_sweep, PoincareEstimate, PoincareSweep, TransportedPoincare,
};

use crate::grid::RasterDomain;

/// `A_ε = {x ∈ A : d(x, Aᶜ) > ε}`.
pub fn eps_interior(d: &RasterDomain, eps: f64) -> RasterDomain {
    d.eps_interior(eps)
}

/// `A_{−ε} = A + B(0, ε)`.
pub fn eps_exterior(d: &RasterDomain, eps: f64) -> RasterDomain {
    d.eps_exterior(eps)
}
