//! The compactness arguments run as finite diagnostics. Probes never claim
//! compactness: they measure the moduli each argument needs and report
//! whether a family is consistent with the mechanism.

mod battery;
pub mod families;
mod kruzhkov;
mod limsup;
mod ns;
mod shift;

pub use battery::{dual_time_estimate, Battery, DualTimeEstimate, TimeFactor};
pub use kruzhkov::{kruzhkov_probe, local_to_global, KruzhkovReport, KruzhkovRow, LocalGlobalReport, PeelRow};
pub use limsup::{theorem1_limsup, LimsupLevel, LimsupReport, LimsupRow};
pub use ns::{ns_probe, NsCell, NsConfig, NsLevel, NsMember, NsReport};
pub use shift::time_shift_safety;

pub use crate::parabolic::Verdict;

use crate::error::{Error, Result};
use crate::grid::RasterDomain;
use crate::series::{Slice, StepSeries};

/// Members `f_n` of a sequence, labelled by `n`, on a shared grid and interval.
#[derive(Debug, Clone)]
pub struct Family<T> {
    pub labels: Vec<usize>,
    pub members: Vec<StepSeries<T>>,
}

pub type ScalarFamily = Family<crate::grid::ScalarField>;
pub type VectorFamily = Family<crate::grid::StaggeredVectorField>;

impl<T: Slice> Family<T> {
    pub fn new(labels: Vec<usize>, members: Vec<StepSeries<T>>) -> Result<Self> {
        if labels.is_empty() || labels.len() != members.len() {
            return Err(Error::InvalidParameter("a family needs one label per member and at least one member".into()));
        }
        if labels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("family labels must be strictly increasing".into()));
        }
        let first = &members[0];
        for m in &members[1..] {
            first.check_partition(m)?;
        }
        Ok(Self { labels, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.members[0].steps()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.members[0].interval()
    }
}

/// `(Σ_k δ Σ_{c ∈ D_k} h^d |f(k, c)|^p)^{1/p}`.
pub(crate) fn slice_lp(domains: &[RasterDomain], delta: f64, p: f64, f: impl Fn(usize, usize) -> f64) -> f64 {
    let vol = domains[0].grid().cell_volume();
    let mut acc = 0.0;
    for (k, d) in domains.iter().enumerate() {
        for c in d.cells() {
            acc += f(k, c).abs().powf(p);
        }
    }
    (acc * vol * delta).powf(1.0 / p)
}

/// A sequence of moduli counts as vanishing when its last entry is at most
/// `factor` times its first, or when every entry is negligible against `scale`.
pub(crate) fn vanishes(values: &[f64], factor: f64, scale: f64) -> bool {
    match (values.first(), values.last()) {
        (Some(&first), Some(&last)) => {
            last <= factor * first || values.iter().all(|v| v.abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE))
        }
        _ => true,
    }
}

pub(crate) fn verdict(reasons: Vec<String>) -> Verdict {
    if reasons.is_empty() {
        Verdict::ConsistentWithCompactness
    } else {
        Verdict::Inconsistent(reasons)
    }
}

/// Geometric-mean growth per doubling of the label, `(v_last/v_first)^{1/log₂(n_last/n_first)}`.
pub(crate) fn growth_per_doubling(labels: &[usize], values: &[f64]) -> f64 {
    let (n0, n1) = (labels[0] as f64, *labels.last().unwrap() as f64);
    let (v0, v1) = (values[0], *values.last().unwrap());
    if n1 <= n0 || v1 == 0.0 {
        return 1.0;
    }
    (v1 / v0.max(f64::MIN_POSITIVE)).powf(1.0 / (n1 / n0).log2())
}
