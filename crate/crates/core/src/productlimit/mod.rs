//! Weak limits of products: the four-line pipeline, cutoffs, and Orlicz gauges.

mod localize;
mod orlicz;
mod pipeline;

pub use localize::{cutoff, localize, Cutoff};
pub use orlicz::{luxemburg_gauge, modular, orlicz_holder_check, HolderReport, OrliczPair, OrliczSide};
pub use pipeline::{product_pipeline, HypothesisRow, PipelineCell, PipelineReport, ProductFamily};
