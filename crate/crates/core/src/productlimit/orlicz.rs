use crate::grid::ScalarField;

/// `Φ(x) = eˣ − x − 1` and its convex conjugate `Ψ(y) = (1+y)log(1+y) − y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OrliczPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrliczSide {
    Phi,
    Psi,
}

impl OrliczPair {
    pub fn phi(x: f64) -> f64 {
        x.exp_m1() - x
    }

    pub fn psi(y: f64) -> f64 {
        (1.0 + y) * y.ln_1p() - y
    }

    pub fn eval(side: OrliczSide, x: f64) -> f64 {
        match side {
            OrliczSide::Phi => Self::phi(x),
            OrliczSide::Psi => Self::psi(x),
        }
    }

    /// Smallest value of `Φ(x) + Ψ(y) − xy` over an `n × n` lattice of `[0, top]²`.
    pub fn young_slack(top: f64, n: usize) -> f64 {
        let mut worst = f64::INFINITY;
        for i in 0..=n {
            let x = top * i as f64 / n as f64;
            for j in 0..=n {
                let y = top * j as f64 / n as f64;
                worst = worst.min(Self::phi(x) + Self::psi(y) - x * y);
            }
        }
        worst
    }

    /// Sampled convexity, value and slope at 0 for both sides.
    pub fn check_shape(top: f64, n: usize) -> bool {
        let h = top / n as f64;
        [OrliczSide::Phi, OrliczSide::Psi].iter().all(|&s| {
            let f = |x: f64| Self::eval(s, x);
            let convex = (1..n).all(|i| {
                let x = i as f64 * h;
                f(x - h) + f(x + h) - 2.0 * f(x) >= -1e-12 * f(x).abs().max(1.0)
            });
            let slope0 = f(1e-6) / 1e-6;
            convex && f(0.0) == 0.0 && slope0.abs() < 1e-5
        })
    }
}

/// `∫ Φ(|f|/a)`.
pub fn modular(f: &ScalarField, side: OrliczSide, a: f64) -> f64 {
    let vol = f.grid().cell_volume();
    f.values().iter().map(|v| OrliczPair::eval(side, v.abs() / a)).sum::<f64>() * vol
}

/// `inf{a > 0 : ∫Φ(|f|/a) ≤ 1}` by bracketing and 80 bisection steps.
pub fn luxemburg_gauge(f: &ScalarField, side: OrliczSide) -> f64 {
    let top = f.max_abs();
    if top == 0.0 {
        return 0.0;
    }
    let over = |a: f64| modular(f, side, a) > 1.0;
    let (mut lo, mut hi) = (top, top);
    while !over(lo) {
        lo *= 0.5;
    }
    while over(hi) {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if over(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    /// `‖fg‖₁`.
    pub lhs: f64,
    pub gauge_phi: f64,
    pub gauge_psi: f64,
    /// Constant in front of the gauge product.
    pub constant: f64,
    /// `constant·gauge_phi·gauge_psi − lhs`.
    pub slack: f64,
    /// Same with constant 1.
    pub unit_slack: f64,
}

impl HolderReport {
    pub fn holds(&self) -> bool {
        self.slack >= -1e-9 * self.lhs.max(1.0)
    }
}

/// `‖fg‖₁ ≤ 2‖f‖_Φ‖g‖_Ψ`. Young's inequality integrated at the two gauges
/// gives the factor 2; it cannot be dropped, since `f ≡ g ≡ 1` on a unit
/// domain has `‖f‖_Φ‖g‖_Ψ ≈ 0.508`.
pub fn orlicz_holder_check(f: &ScalarField, g: &ScalarField) -> HolderReport {
    let vol = f.grid().cell_volume();
    let lhs = f.values().iter().zip(g.values()).map(|(a, b)| (a * b).abs()).sum::<f64>() * vol;
    let gauge_phi = luxemburg_gauge(f, OrliczSide::Phi);
    let gauge_psi = luxemburg_gauge(g, OrliczSide::Psi);
    let constant = 2.0;
    let prod = gauge_phi * gauge_psi;
    HolderReport { lhs, gauge_phi, gauge_psi, constant, slack: constant * prod - lhs, unit_slack: prod - lhs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use proptest::prelude::*;

    fn root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pair_shape_and_young() {
        assert!(OrliczPair::check_shape(6.0, 600));
        assert!(OrliczPair::young_slack(6.0, 300) >= -1e-12);
    }

    #[test]
    fn gauge_of_constant() {
        let t_star = root(|t| t.exp() - t - 2.0, 0.0, 5.0);
        assert!((t_star - 1.1462).abs() < 1e-4);
        let g = Grid::unit(2, 8).unwrap();
        for c in [0.3, 1.0, 7.0] {
            let a = luxemburg_gauge(&ScalarField::constant(g, c), OrliczSide::Phi);
            assert!((a - c / t_star).abs() < 1e-12 * c);
        }
        assert_eq!(luxemburg_gauge(&ScalarField::zeros(g), OrliczSide::Phi), 0.0);
    }

    #[test]
    fn gauge_hits_unit_modular() {
        let g = Grid::new_1d(200, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |p| (9.0 * p[0]).sin() * 3.0);
        for side in [OrliczSide::Phi, OrliczSide::Psi] {
            let a = luxemburg_gauge(&f, side);
            assert!((modular(&f, side, a) - 1.0).abs() <= 1e-8);
            let a2 = luxemburg_gauge(&f.scale(2.0), side);
            assert!((a2 / a - 2.0).abs() <= 2e-8);
        }
    }

    #[test]
    fn unit_fields_need_the_factor_two() {
        let g = Grid::unit(2, 16).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let r = orlicz_holder_check(&one, &one);
        let t_star = root(|t| t.exp() - t - 2.0, 0.0, 5.0);
        let s_inv = root(|y| OrliczPair::psi(y) - 1.0, 0.0, 5.0);
        assert!((s_inv - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((r.lhs - 1.0).abs() < 1e-14);
        assert!((r.gauge_phi * r.gauge_psi - 1.0 / (t_star * s_inv)).abs() < 1e-10);
        assert!(r.unit_slack < 0.0);
        assert!(r.holds());
        let z = orlicz_holder_check(&ScalarField::zeros(g), &one);
        assert_eq!(z.lhs, 0.0);
        assert!(z.holds());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn holder_on_random_pairs(v in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 64)) {
            let g = Grid::new_1d(64, 1.0).unwrap();
            let f = ScalarField::from_values(g, v.iter().map(|p| p.0).collect()).unwrap();
            let h = ScalarField::from_values(g, v.iter().map(|p| p.1).collect()).unwrap();
            prop_assert!(orlicz_holder_check(&f, &h).holds());
        }
    }
}
