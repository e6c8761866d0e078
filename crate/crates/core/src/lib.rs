//! Numerical diagnostics for compactness arguments in nonlinear evolution
//! equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod divfree;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod mollify;
pub mod movedom;
pub mod parabolic;
pub mod probe;
pub mod productlimit;
pub mod rng;
pub mod series;
pub mod synth;
pub mod truncate;

pub use error::{Error, Result};
pub use grid::{Grid, RasterDomain, ScalarField, StaggeredVectorField};
pub use series::{Slice, StepSeries, StepTimeSeries, VectorSeries};
