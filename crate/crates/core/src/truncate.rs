//! Nonlinearities with a finite critical set and the C¹ truncation `β_ε`
//! that grafts a shifted copy of `Φ` near each critical point.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{gradient, ScalarField};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Porous(f64),
    Cubic,
    Identity,
    Custom { phi: ScalarFn, dphi: ScalarFn, psi: ScalarFn },
}

/// `Φ`, `Φ'`, an antiderivative `Ψ` and the declared zeros of `Φ'`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    kind: Kind,
    critical: Vec<f64>,
    /// `|Φ'(z)| ≥ far_slope` for `|z| ≥ far_radius`.
    far_radius: f64,
    far_slope: f64,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("critical", &self.critical)
            .field("far_slope", &self.far_slope)
            .finish()
    }
}

impl Nonlinearity {
    /// `Φ(z) = sign(z)|z|^m`, `m ≥ 1`.
    pub fn porous(m: f64) -> Result<Self> {
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::InvalidNonlinearity(format!("porous exponent m = {m} must be >= 1")));
        }
        let critical = if m > 1.0 { vec![0.0] } else { Vec::new() };
        Ok(Self { name: format!("porous:{m}"), kind: Kind::Porous(m), critical, far_radius: 1.0, far_slope: m })
    }

    pub fn cubic() -> Self {
        Self { name: "cubic".into(), kind: Kind::Cubic, critical: vec![0.0], far_radius: 1.0, far_slope: 3.0 }
    }

    pub fn identity() -> Self {
        Self { name: "identity".into(), kind: Kind::Identity, critical: Vec::new(), far_radius: 0.0, far_slope: 1.0 }
    }

    /// User-declared nonlinearity; the declaration is validated.
    pub fn custom(
        name: &str,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mut critical: Vec<f64>,
        far_radius: f64,
        far_slope: f64,
    ) -> Result<Self> {
        critical.sort_by(f64::total_cmp);
        let n = Self {
            name: name.into(),
            kind: Kind::Custom { phi: Arc::new(phi), dphi: Arc::new(dphi), psi: Arc::new(psi) },
            critical,
            far_radius,
            far_slope,
        };
        n.validate()?;
        Ok(n)
    }

    /// `porous:m`, `cubic` or `identity`.
    pub fn preset(spec: &str) -> Result<Self> {
        let s = spec.trim();
        if let Some(m) = s.strip_prefix("porous:") {
            let m: f64 = m.parse().map_err(|_| Error::Parse(format!("bad porous exponent in '{spec}'")))?;
            return Self::porous(m);
        }
        match s {
            "cubic" => Ok(Self::cubic()),
            "identity" => Ok(Self::identity()),
            _ => Err(Error::Parse(format!("unknown nonlinearity '{spec}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn critical_points(&self) -> &[f64] {
        &self.critical
    }

    pub fn far_field(&self) -> (f64, f64) {
        (self.far_radius, self.far_slope)
    }

    pub fn phi(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Porous(m) => z.signum() * z.abs().powf(*m),
            Kind::Cubic => z * z * z,
            Kind::Identity => z,
            Kind::Custom { phi, .. } => phi(z),
        }
    }

    pub fn dphi(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Porous(m) => {
                if *m == 1.0 {
                    1.0
                } else {
                    m * z.abs().powf(m - 1.0)
                }
            }
            Kind::Cubic => 3.0 * z * z,
            Kind::Identity => 1.0,
            Kind::Custom { dphi, .. } => dphi(z),
        }
    }

    /// Antiderivative with `Ψ(0) = 0`.
    pub fn psi(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::Porous(m) => z.abs().powf(m + 1.0) / (m + 1.0),
            Kind::Cubic => 0.25 * z * z * z * z,
            Kind::Identity => 0.5 * z * z,
            Kind::Custom { psi, .. } => psi(z),
        }
    }

    /// Checks the declared critical set and `Ψ' = Φ` on a sample lattice.
    pub fn validate(&self) -> Result<()> {
        for (i, &z) in self.critical.iter().enumerate() {
            if self.dphi(z).abs() > 1e-12 {
                return Err(Error::InvalidNonlinearity(format!("Φ'({z}) = {} is not zero", self.dphi(z))));
            }
            if i > 0 && self.critical[i - 1] == z {
                return Err(Error::InvalidNonlinearity(format!("critical point {z} listed twice")));
            }
        }
        let lo = self.critical.first().copied().unwrap_or(0.0) - 2.0;
        let hi = self.critical.last().copied().unwrap_or(0.0) + 2.0;
        let n = 4000;
        for s in 0..=n {
            let z = lo + (hi - lo) * (s as f64 + 0.5) / (n as f64 + 1.0);
            let near = self.critical.iter().any(|&c| (z - c).abs() < 1e-6);
            if !near && self.dphi(z) == 0.0 {
                return Err(Error::InvalidNonlinearity(format!("undeclared zero of Φ' near {z}")));
            }
            let h = 1e-5 * (1.0 + z.abs());
            let fd = (self.psi(z + h) - self.psi(z - h)) / (2.0 * h);
            let phi = self.phi(z);
            if (fd - phi).abs() > 1e-6 * (1.0 + phi.abs()) {
                return Err(Error::InvalidNonlinearity(format!("Ψ' = {fd} differs from Φ = {phi} at {z}")));
            }
        }
        if self.far_slope > 0.0 {
            for z in [self.far_radius, -self.far_radius, 2.0 * self.far_radius + 1.0, -2.0 * self.far_radius - 1.0] {
                if self.dphi(z).abs() < self.far_slope * (1.0 - 1e-12) {
                    return Err(Error::InvalidNonlinearity(format!("far-field slope bound fails at {z}")));
                }
            }
        }
        Ok(())
    }

    /// Sampled check that `Φ` is nondecreasing on `[lo, hi]`.
    pub fn is_monotone_on(&self, lo: f64, hi: f64) -> bool {
        if !(hi > lo) {
            return self.dphi(lo) >= 0.0;
        }
        let n = 512;
        let mut prev = self.phi(lo);
        for s in 1..=n {
            let z = lo + (hi - lo) * s as f64 / n as f64;
            let v = self.phi(z);
            if v < prev || self.dphi(z) < 0.0 {
                return false;
            }
            prev = v;
        }
        true
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        u.map(|z| self.phi(z))
    }
}

/// Where a value falls relative to the critical set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Identity,
    /// Within `ε/2` of critical point `i`.
    Graft(usize),
    /// Between `ε/2` and `ε` from critical point `i`.
    Blend(usize),
}

/// `β_ε`: identity off `J^ε`, `z_i + Φ(z) − Φ(z_i)` on `J_i^{ε/2}`, cubic
/// Hermite blends in between.
#[derive(Debug, Clone)]
pub struct TruncationBeta {
    eps: f64,
    source: Nonlinearity,
    c_meas: f64,
    slope_sup: f64,
}

fn hermite(t: f64, h: f64, p0: f64, m0: f64, p1: f64, m1: f64) -> (f64, f64) {
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * p0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * p1
        + (t3 - t2) * h * m1;
    let d = ((6.0 * t2 - 6.0 * t) * p0 + (3.0 * t2 - 4.0 * t + 1.0) * h * m0 + (-6.0 * t2 + 6.0 * t) * p1)
        / h
        + (3.0 * t2 - 2.0 * t) * m1;
    (v, d)
}

pub fn build_beta(phi: &Nonlinearity, eps: f64) -> Result<TruncationBeta> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("truncation width ε = {eps} must be positive")));
    }
    let z = phi.critical_points();
    if z.windows(2).any(|w| w[1] - w[0] <= 2.0 * eps) {
        return Err(Error::OverlappingIntervals(eps));
    }
    let mut b = TruncationBeta { eps, source: phi.clone(), c_meas: 0.0, slope_sup: 1.0 };
    let samples = 100_000;
    let (mut dev, mut slope) = (0.0f64, 1.0f64);
    for &zi in z {
        for s in 0..=samples {
            let x = zi - eps + 2.0 * eps * s as f64 / samples as f64;
            dev = dev.max((b.eval(x) - x).abs());
            slope = slope.max(b.derivative(x).abs());
        }
    }
    b.c_meas = dev / eps;
    b.slope_sup = slope;
    Ok(b)
}

impl TruncationBeta {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn source(&self) -> &Nonlinearity {
        &self.source
    }

    /// `sup|β_ε − Id| / ε` measured on `10^5` samples per critical interval.
    pub fn c_meas(&self) -> f64 {
        self.c_meas
    }

    /// Sampled `sup|β'_ε|`.
    pub fn slope_sup(&self) -> f64 {
        self.slope_sup
    }

    pub fn zone(&self, z: f64) -> Zone {
        for (i, &zi) in self.source.critical_points().iter().enumerate() {
            let d = (z - zi).abs();
            if d <= 0.5 * self.eps {
                return Zone::Graft(i);
            }
            if d <= self.eps {
                return Zone::Blend(i);
            }
        }
        Zone::Identity
    }

    fn graft(&self, i: usize, z: f64) -> f64 {
        let zi = self.source.critical_points()[i];
        zi + self.source.phi(z) - self.source.phi(zi)
    }

    fn blend(&self, i: usize, z: f64) -> (f64, f64) {
        let zi = self.source.critical_points()[i];
        let h = 0.5 * self.eps;
        if z >= zi {
            let x0 = zi + h;
            let x1 = zi + self.eps;
            hermite((z - x0) / h, h, self.graft(i, x0), self.source.dphi(x0), x1, 1.0)
        } else {
            let x0 = zi - self.eps;
            let x1 = zi - h;
            hermite((z - x0) / h, h, x0, 1.0, self.graft(i, x1), self.source.dphi(x1))
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self.zone(z) {
            Zone::Identity => z,
            Zone::Graft(i) => self.graft(i, z),
            Zone::Blend(i) => self.blend(i, z).0,
        }
    }

    pub fn derivative(&self, z: f64) -> f64 {
        match self.zone(z) {
            Zone::Identity => 1.0,
            Zone::Graft(_) => self.source.dphi(z),
            Zone::Blend(i) => self.blend(i, z).1,
        }
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        u.map(|z| self.eval(z))
    }

    /// Largest value and slope jump over the `4N` junction points.
    pub fn junction_mismatch(&self) -> (f64, f64) {
        let (mut dv, mut dd) = (0.0f64, 0.0f64);
        let h = 0.5 * self.eps;
        for (i, &zi) in self.source.critical_points().iter().enumerate() {
            // Inner junctions: graft against blend.
            for x in [zi + h, zi - h] {
                let (bv, bd) = self.blend(i, x);
                dv = dv.max((bv - self.graft(i, x)).abs());
                dd = dd.max((bd - self.source.dphi(x)).abs());
            }
            // Outer junctions: blend against identity.
            for x in [zi + self.eps, zi - self.eps] {
                let (bv, bd) = self.blend(i, x);
                dv = dv.max((bv - x).abs());
                dd = dd.max((bd - 1.0).abs());
            }
        }
        (dv, dd)
    }
}

/// Face counts of the two-zone gradient comparison.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChainReport {
    pub faces: usize,
    /// Faces whose value hull avoids `J^{ε/2}`.
    pub outside_checked: usize,
    pub outside_violations: usize,
    /// Faces whose value hull lies in one `J_i^{ε/2}`.
    pub inside_checked: usize,
    pub inside_violations: usize,
    /// Faces whose hull straddles a zone edge; not checked.
    pub crossing: usize,
    /// `sup|β'| / inf|Φ'|` over the data range outside `J^{ε/2}`.
    pub ratio: f64,
    /// Cells whose value lies in `J^{ε/2}`.
    pub equality_cells: usize,
}

impl ChainReport {
    pub fn fraction_ok(&self) -> f64 {
        if self.faces == 0 {
            return 1.0;
        }
        (self.outside_checked - self.outside_violations + self.inside_checked - self.inside_violations) as f64
            / self.faces as f64
    }
}

/// Compares `∇β_ε(u)` with `∇Φ(u)` face by face.
pub fn chain_gradient_check(u: &ScalarField, beta: &TruncationBeta, phi: &Nonlinearity) -> ChainReport {
    let gb = gradient(&beta.apply(u));
    let gp = gradient(&phi.apply(u));
    let g = *u.grid();
    let (lo, hi) = (u.min_value(), u.max_value());
    let half = 0.5 * beta.eps();
    let zs = phi.critical_points();
    let in_half = |z: f64| zs.iter().position(|&zi| (z - zi).abs() <= half);
    let hull_hits = |a: f64, b: f64| zs.iter().any(|&zi| a <= zi + half && b >= zi - half);

    // inf |Φ'| over the data range with J^{ε/2} removed, including zone edges.
    let mut inf_out = f64::INFINITY;
    let mut probe = |z: f64| {
        if z >= lo && z <= hi && in_half(z).is_none_or(|i| (z - zs[i]).abs() >= half) {
            inf_out = inf_out.min(phi.dphi(z).abs());
        }
    };
    let n = 20_000;
    for s in 0..=n {
        probe(lo + (hi - lo) * s as f64 / n as f64);
    }
    for &zi in zs {
        probe(zi + half);
        probe(zi - half);
    }
    let ratio = if inf_out > 0.0 && inf_out.is_finite() { beta.slope_sup() / inf_out } else { f64::INFINITY };

    let mut rep = ChainReport { ratio, ..Default::default() };
    rep.equality_cells = u.values().iter().filter(|&&z| in_half(z).is_some()).count();
    let (nx, ny) = (g.nx(), g.ny());
    let member = |c: usize| u.mask().is_none_or(|m| m.contains(c));
    let mut visit = |l: usize, r: usize, fb: f64, fp: f64| {
        if !(member(l) && member(r)) {
            return;
        }
        rep.faces += 1;
        let (a, b) = (u.get(l).min(u.get(r)), u.get(l).max(u.get(r)));
        match (in_half(a), in_half(b)) {
            (Some(i), Some(j)) if i == j => {
                rep.inside_checked += 1;
                if (fb - fp).abs() > 1e-12 * (1.0 + fp.abs()) {
                    rep.inside_violations += 1;
                }
            }
            _ if !hull_hits(a, b) => {
                rep.outside_checked += 1;
                if fb.abs() > ratio * fp.abs() * (1.0 + 1e-12) + 1e-14 {
                    rep.outside_violations += 1;
                }
            }
            _ => rep.crossing += 1,
        }
    };
    for j in 0..ny {
        for i in 1..nx {
            let f = j * (nx + 1) + i;
            visit(g.index(i - 1, j), g.index(i, j), gb.ux()[f], gp.ux()[f]);
        }
    }
    if g.dim() == 2 {
        for j in 1..ny {
            for i in 0..nx {
                let f = j * nx + i;
                visit(g.index(i, j - 1), g.index(i, j), gb.uy()[f], gp.uy()[f]);
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    #[test]
    fn presets_validate() {
        for s in ["porous:2", "porous:1.5", "cubic", "identity", "porous:1"] {
            Nonlinearity::preset(s).unwrap().validate().unwrap();
        }
        assert!(Nonlinearity::preset("porous:0.5").is_err());
        assert!(Nonlinearity::preset("sine").is_err());
    }

    #[test]
    fn custom_declaration_is_checked() {
        // Missing critical point at 0.
        let bad = Nonlinearity::custom("c", |z| z * z * z, |z| 3.0 * z * z, |z| z.powi(4) / 4.0, vec![], 1.0, 3.0);
        assert!(matches!(bad, Err(Error::InvalidNonlinearity(_))));
        // Wrong antiderivative.
        let bad = Nonlinearity::custom("c", |z| z * z * z, |z| 3.0 * z * z, |z| z.powi(4), vec![0.0], 1.0, 3.0);
        assert!(bad.is_err());
        let ok = Nonlinearity::custom("c", |z| z * z * z, |z| 3.0 * z * z, |z| z.powi(4) / 4.0, vec![0.0], 1.0, 3.0);
        assert!(ok.is_ok());
    }

    #[test]
    fn cubic_examples() {
        let b = build_beta(&Nonlinearity::cubic(), 0.2).unwrap();
        assert!((b.eval(0.05) - 1.25e-4).abs() < 1e-18);
        assert_eq!(b.eval(0.5), 0.5);
        assert_eq!(b.zone(0.15), Zone::Blend(0));
    }

    #[test]
    fn junctions_are_c1() {
        for phi in [Nonlinearity::cubic(), Nonlinearity::porous(2.0).unwrap()] {
            for eps in [0.2, 0.1, 0.05] {
                let (dv, dd) = build_beta(&phi, eps).unwrap().junction_mismatch();
                assert!(dv <= 1e-10 && dd <= 1e-10);
            }
        }
    }

    #[test]
    fn deviation_constant_is_stable() {
        for phi in [Nonlinearity::cubic(), Nonlinearity::porous(2.0).unwrap()] {
            let c: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&e| build_beta(&phi, e).unwrap().c_meas()).collect();
            let (lo, hi) = c.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
            assert!(hi / lo <= 1.2, "{phi:?}: {c:?}");
        }
    }

    #[test]
    fn rejects_bad_widths() {
        let two = Nonlinearity::custom(
            "two",
            |z| z * z * z / 3.0 - z,
            |z| z * z - 1.0,
            |z| z.powi(4) / 12.0 - 0.5 * z * z,
            vec![-1.0, 1.0],
            2.0,
            3.0,
        )
        .unwrap();
        assert!(matches!(build_beta(&two, 1.0), Err(Error::OverlappingIntervals(_))));
        assert!(build_beta(&two, 0.4).is_ok());
        assert!(build_beta(&Nonlinearity::cubic(), 0.0).is_err());
        assert!(build_beta(&Nonlinearity::cubic(), -1.0).is_err());
    }

    #[test]
    fn blend_is_monotone_for_increasing_phi() {
        let b = build_beta(&Nonlinearity::cubic(), 0.2).unwrap();
        let mut prev = b.eval(0.1);
        for s in 1..=10_000 {
            let z = 0.1 + 0.1 * s as f64 / 10_000.0;
            let v = b.eval(z);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn chain_check_constant_and_linear() {
        let g = Grid::new_1d(100, 1.0).unwrap();
        let phi = Nonlinearity::cubic();
        let b = build_beta(&phi, 0.2).unwrap();
        let rep = chain_gradient_check(&ScalarField::constant(g, 0.3), &b, &phi);
        assert_eq!(rep.outside_violations + rep.inside_violations, 0);
        let lin = ScalarField::from_fn(g, |p| p[0]);
        let rep = chain_gradient_check(&lin, &b, &phi);
        // Cells with centres below 0.1.
        assert_eq!(rep.equality_cells, 10);
        assert_eq!(rep.outside_violations + rep.inside_violations, 0);
    }

    #[test]
    fn chain_check_fine_grid_fraction() {
        let g = Grid::unit(2, 256).unwrap();
        let u = ScalarField::from_fn(g, |p| 0.6 * (3.0 * p[0] + 0.4).sin() * (2.0 * p[1] - 0.9).cos());
        let phi = Nonlinearity::porous(2.0).unwrap();
        let b = build_beta(&phi, 0.1).unwrap();
        let rep = chain_gradient_check(&u, &b, &phi);
        assert_eq!(rep.outside_violations + rep.inside_violations, 0);
        assert!(rep.fraction_ok() >= 0.99, "{rep:?}");
    }

    proptest! {
        #[test]
        fn identity_far_field_is_bitwise(z in -10.0f64..10.0) {
            let b = build_beta(&Nonlinearity::cubic(), 0.2).unwrap();
            if z.abs() > 0.2 {
                prop_assert_eq!(b.eval(z).to_bits(), z.to_bits());
            }
        }

        #[test]
        fn chain_check_on_random_smooth(seed in 0u64..200) {
            let g = Grid::unit(2, 40).unwrap();
            let a = seed as f64 * 0.13;
            let u = ScalarField::from_fn(g, |p| 0.6 * (3.0 * p[0] + a).sin() * (2.0 * p[1] - a).cos());
            let phi = Nonlinearity::cubic();
            let b = build_beta(&phi, 0.2).unwrap();
            let rep = chain_gradient_check(&u, &b, &phi);
            prop_assert_eq!(rep.outside_violations, 0);
            prop_assert_eq!(rep.inside_violations, 0);
            prop_assert!(rep.fraction_ok() >= 0.9);
        }
    }
}
