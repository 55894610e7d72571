//! Endpoint configuration, the quartic `P`, and the maximal-domain functions
//! `u ≡ 1` and `v` used to state boundary and transmission conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four ordered endpoints `a1 < a2 < a3 < a4`.
///
/// The object lives on `[a2, a4]`, the measurements on `[a1, a3]`, and the two
/// intervals overlap on `[a2, a3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfiguration", into = "RawConfiguration")]
pub struct Configuration {
    a: [f64; 4],
}

#[derive(Serialize, Deserialize)]
struct RawConfiguration {
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
}

impl TryFrom<RawConfiguration> for Configuration {
    type Error = Error;

    fn try_from(raw: RawConfiguration) -> Result<Self> {
        Configuration::new(raw.a1, raw.a2, raw.a3, raw.a4)
    }
}

impl From<Configuration> for RawConfiguration {
    fn from(cfg: Configuration) -> Self {
        let [a1, a2, a3, a4] = cfg.a;
        RawConfiguration { a1, a2, a3, a4 }
    }
}

impl Default for Configuration {
    /// The configuration `(0, 1.5, 6, 7.5)` used throughout the numerical experiments.
    fn default() -> Self {
        Configuration {
            a: [0.0, 1.5, 6.0, 7.5],
        }
    }
}

impl Configuration {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let finite = [a1, a2, a3, a4].iter().all(|v| v.is_finite());
        if !finite || !(a1 < a2 && a2 < a3 && a3 < a4) {
            return Err(Error::InvalidConfiguration(a1, a2, a3, a4));
        }
        Ok(Configuration { a: [a1, a2, a3, a4] })
    }

    pub fn endpoints(&self) -> [f64; 4] {
        self.a
    }

    pub fn a1(&self) -> f64 {
        self.a[0]
    }

    pub fn a2(&self) -> f64 {
        self.a[1]
    }

    pub fn a3(&self) -> f64 {
        self.a[2]
    }

    pub fn a4(&self) -> f64 {
        self.a[3]
    }

    /// Centroid of the endpoints.
    pub fn sigma(&self) -> f64 {
        self.a.iter().sum::<f64>() / 4.0
    }

    /// Smallest distance between adjacent endpoints.
    pub fn min_gap(&self) -> f64 {
        self.a.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Distance from endpoint `i` to the nearest other endpoint, which is the
    /// convergence radius of the local series solutions there.
    pub fn series_radius(&self, i: usize) -> f64 {
        self.a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &aj)| (aj - self.a[i]).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `x` to the nearest endpoint.
    pub fn distance_to_endpoints(&self, x: f64) -> f64 {
        self.a.iter().map(|&ai| (x - ai).abs()).fold(f64::INFINITY, f64::min)
    }

    /// `P(x) = ∏ (x − a_i)` in product form.
    pub fn eval_p(&self, x: f64) -> f64 {
        self.a.iter().map(|&ai| x - ai).product()
    }

    /// `P′(x)`, summing the products that omit one factor each.
    pub fn eval_dp(&self, x: f64) -> f64 {
        (0..4)
            .map(|i| (0..4).filter(|&j| j != i).map(|j| x - self.a[j]).product::<f64>())
            .sum()
    }

    /// Coefficients of `P` in ascending powers of `x`.
    pub fn p_coefficients(&self) -> [f64; 5] {
        let mut c = [1.0, 0.0, 0.0, 0.0, 0.0];
        for (deg, &root) in self.a.iter().enumerate() {
            // multiply by (x − root)
            for k in (0..=deg + 1).rev() {
                let shifted = if k > 0 { c[k - 1] } else { 0.0 };
                c[k] = shifted - root * c[k];
            }
        }
        c
    }

    /// Coefficients of `P` expanded about `x0`, ascending in `(x − x0)`.
    pub fn p_taylor(&self, x0: f64) -> [f64; 5] {
        let mut c = [1.0, 0.0, 0.0, 0.0, 0.0];
        for (deg, &root) in self.a.iter().enumerate() {
            let offset = x0 - root;
            for k in (0..=deg + 1).rev() {
                let shifted = if k > 0 { c[k - 1] } else { 0.0 };
                c[k] = shifted + offset * c[k];
            }
        }
        c
    }

    /// Weight `∏_{j≠i} 1/(a_i − a_j) = 1/P′(a_i)` of the `ln|y − a_i|` term in `v`.
    pub fn log_weight(&self, i: usize) -> f64 {
        (0..4)
            .filter(|&j| j != i)
            .map(|j| 1.0 / (self.a[i] - self.a[j]))
            .product()
    }

    /// Maximal-domain function `v(y) = Σ_i ln|y − a_i| / P′(a_i)`.
    pub fn eval_v(&self, y: f64) -> Result<f64> {
        if let Some(&point) = self.a.iter().find(|&&ai| ai == y) {
            return Err(Error::SingularPoint { point });
        }
        Ok((0..4).map(|i| self.log_weight(i) * (y - self.a[i]).abs().ln()).sum())
    }

    /// `v′(y) = Σ_i 1/(P′(a_i)(y − a_i))`.
    pub fn eval_dv(&self, y: f64) -> Result<f64> {
        if let Some(&point) = self.a.iter().find(|&&ai| ai == y) {
            return Err(Error::SingularPoint { point });
        }
        Ok((0..4).map(|i| self.log_weight(i) / (y - self.a[i])).sum())
    }

    /// Index of the endpoint equal to `x`, if any.
    pub fn endpoint_index(&self, x: f64) -> Option<usize> {
        self.a.iter().position(|&ai| ai == x)
    }
}

/// A scalar function that can report its own derivative.
///
/// The default derivative is a central difference; implementors with closed
/// forms should override it.
pub trait Differentiable {
    fn value(&self, x: f64) -> f64;

    fn derivative(&self, x: f64) -> f64 {
        let h = fd_step(1.0, x);
        (self.value(x + h) - self.value(x - h)) / (2.0 * h)
    }
}

/// Central-difference step `√offset · max(1, |x|) · ε_mach^{1/3}`.
pub fn fd_step(offset: f64, x: f64) -> f64 {
    offset.abs().sqrt() * x.abs().max(1.0) * f64::EPSILON.cbrt()
}

/// Adapts a plain closure, differentiated by central differences whose step
/// scales with the distance to the nearest listed singular point.
pub struct Sampled<F> {
    pub f: F,
    pub singular_points: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Differentiable for Sampled<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        let offset = self.singular_points.iter().map(|&s| (x - s).abs()).fold(1.0, f64::min);
        let h = fd_step(offset, x);
        ((self.f)(x + h) - (self.f)(x - h)) / (2.0 * h)
    }
}

/// A closure pair `(value, derivative)` with a closed-form derivative.
pub struct Analytic<F, G> {
    pub f: F,
    pub df: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> Differentiable for Analytic<F, G> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        (self.df)(x)
    }
}

/// The constant function `u ≡ 1`.
pub struct Unit;

impl Differentiable for Unit {
    fn value(&self, _x: f64) -> f64 {
        1.0
    }

    fn derivative(&self, _x: f64) -> f64 {
        0.0
    }
}

/// The maximal-domain function `v` with its closed-form derivative.
pub struct MaximalV<'a>(pub &'a Configuration);

impl Differentiable for MaximalV<'_> {
    fn value(&self, x: f64) -> f64 {
        self.0.eval_v(x).unwrap_or(f64::NAN)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.0.eval_dv(x).unwrap_or(f64::NAN)
    }
}

/// Lagrange bracket `[f, g](x) = f P g′ − g P f′` for real functions.
pub fn lagrange_bracket(f: &dyn Differentiable, g: &dyn Differentiable, cfg: &Configuration, x: f64) -> f64 {
    let p = cfg.eval_p(x);
    f.value(x) * p * g.derivative(x) - g.value(x) * p * f.derivative(x)
}

/// Which side of an endpoint a one-sided limit approaches from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// One-sided limit of the bracket at an endpoint, sampled at offsets
/// `1e-4, 1e-5, 1e-6` and Richardson-extrapolated assuming an `O(t)` error.
pub fn bracket_limit(
    f: &dyn Differentiable,
    g: &dyn Differentiable,
    cfg: &Configuration,
    endpoint: f64,
    side: Side,
) -> f64 {
    let samples: Vec<f64> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&t| lagrange_bracket(f, g, cfg, endpoint + side.sign() * t))
        .collect();
    // error model c1 t + c2 t², offsets shrinking by 10
    let r1 = (10.0 * samples[1] - samples[0]) / 9.0;
    let r2 = (10.0 * samples[2] - samples[1]) / 9.0;
    (100.0 * r2 - r1) / 99.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn p_vanishes_at_endpoints() {
        let cfg = Configuration::default();
        for a in cfg.endpoints() {
            assert_eq!(cfg.eval_p(a), 0.0);
        }
        let cfg = Configuration::new(-2.3, 0.1, 0.7, 9.0).unwrap();
        assert_eq!(cfg.eval_p(cfg.a3()), 0.0);
    }

    #[test]
    fn p_at_midpoint() {
        let cfg = Configuration::default();
        assert_relative_eq!(cfg.eval_p(3.75), 71.19140625, max_relative = 1e-15);
    }

    #[test]
    fn rejects_unordered_endpoints() {
        assert!(Configuration::new(0.0, 2.0, 1.0, 3.0).is_err());
        assert!(Configuration::new(0.0, 0.0, 1.0, 3.0).is_err());
        assert!(Configuration::new(0.0, 1.0, f64::NAN, 3.0).is_err());
    }

    #[test]
    fn sigma_is_the_mean() {
        let cfg = Configuration::default();
        assert_eq!(cfg.sigma(), 3.75);
    }

    #[test]
    fn v_by_direct_sum() {
        let cfg = Configuration::default();
        let y = 3.0_f64;
        // weights 1/P'(a_i) for (0, 1.5, 6, 7.5)
        let w = [
            1.0 / ((0.0 - 1.5) * (0.0 - 6.0) * (0.0 - 7.5)),
            1.0 / ((1.5 - 0.0) * (1.5 - 6.0) * (1.5 - 7.5)),
            1.0 / ((6.0 - 0.0) * (6.0 - 1.5) * (6.0 - 7.5)),
            1.0 / ((7.5 - 0.0) * (7.5 - 1.5) * (7.5 - 6.0)),
        ];
        let expected = w[0] * 3.0_f64.ln() + w[1] * 1.5_f64.ln() + w[2] * 3.0_f64.ln() + w[3] * 4.5_f64.ln();
        assert_relative_eq!(cfg.eval_v(y).unwrap(), expected, max_relative = 1e-14);
    }

    #[test]
    fn v_is_odd_for_symmetric_configuration() {
        let cfg = Configuration::new(-3.0, -1.0, 1.0, 3.0).unwrap();
        assert!(cfg.eval_v(0.0).unwrap().abs() < 1e-15);
        assert!(matches!(cfg.eval_v(1.0), Err(Error::SingularPoint { .. })));
    }

    #[test]
    fn v_diverges_like_weighted_log_at_a2() {
        let cfg = Configuration::default();
        let w = cfg.log_weight(1);
        let t1 = 1e-8;
        let t2 = 1e-10;
        let slope = (cfg.eval_v(1.5 + t2).unwrap() - cfg.eval_v(1.5 + t1).unwrap()) / (t2.ln() - t1.ln());
        assert_relative_eq!(slope, w, max_relative = 1e-6);
    }

    #[test]
    fn bracket_u_v_is_one_at_every_endpoint() {
        for cfg in [
            Configuration::default(),
            Configuration::new(-1.0, 0.25, 2.0, 5.0).unwrap(),
        ] {
            let v = MaximalV(&cfg);
            for a in cfg.endpoints() {
                for side in [Side::Left, Side::Right] {
                    let lim = bracket_limit(&Unit, &v, &cfg, a, side);
                    assert!((lim - 1.0).abs() < 1e-6, "limit {lim} at {a} {side:?}");
                }
            }
        }
    }

    #[test]
    fn bracket_with_fd_derivative_matches_closed_form() {
        let cfg = Configuration::default();
        let fd = Sampled {
            f: |y| cfg.eval_v(y).unwrap(),
            singular_points: cfg.endpoints().to_vec(),
        };
        // the step is a sizeable fraction of the offset at 1e-6, so the
        // difference quotient is only good to a few parts in 1e4 there
        let lim_fd = bracket_limit(&Unit, &fd, &cfg, 6.0, Side::Left);
        assert!((lim_fd - 1.0).abs() < 1e-2, "{lim_fd}");
        let direct = lagrange_bracket(&Unit, &fd, &cfg, 6.0 - 1e-4);
        let exact = lagrange_bracket(&Unit, &MaximalV(&cfg), &cfg, 6.0 - 1e-4);
        assert!((direct - exact).abs() < 1e-5, "{direct} vs {exact}");
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let cfg = Configuration::default();
        let f = Analytic {
            f: |x: f64| x.sin(),
            df: |x: f64| x.cos(),
        };
        assert_eq!(lagrange_bracket(&f, &f, &cfg, 2.2), 0.0);
        let v = MaximalV(&cfg);
        let a = lagrange_bracket(&f, &v, &cfg, 2.2);
        let b = lagrange_bracket(&v, &f, &cfg, 2.2);
        assert_relative_eq!(a, -b, max_relative = 1e-14);
    }

    #[test]
    fn taylor_shift_reproduces_p() {
        let cfg = Configuration::new(-0.5, 1.0, 2.5, 6.0).unwrap();
        let x0 = 1.7;
        let c = cfg.p_taylor(x0);
        for &x in &[0.0, 1.3, 4.4] {
            let t: f64 = x - x0;
            let val: f64 = c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck);
            assert_relative_eq!(val, cfg.eval_p(x), max_relative = 1e-12, epsilon = 1e-12);
        }
        assert_relative_eq!(c[1], cfg.eval_dp(x0), max_relative = 1e-13);
    }

    proptest! {
        #[test]
        fn product_form_agrees_with_expanded(
            a1 in -5.0..0.0f64,
            g1 in 0.1..3.0f64,
            g2 in 0.1..3.0f64,
            g3 in 0.1..3.0f64,
            s in 0.0..1.0f64,
        ) {
            let cfg = Configuration::new(a1, a1 + g1, a1 + g1 + g2, a1 + g1 + g2 + g3).unwrap();
            let bound = cfg.endpoints().iter().fold(0.0f64, |m, a| m.max(a.abs())) + 1.0;
            let x = -bound + 2.0 * bound * s;
            let c = cfg.p_coefficients();
            let expanded = c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck);
            let product = cfg.eval_p(x);
            // relative to the size of the monomial terms, which bounds the rounding
            let scale: f64 = c.iter().enumerate().map(|(k, ck)| (ck * x.powi(k as i32)).abs()).sum();
            prop_assert!((expanded - product).abs() <= 1e-12 * scale.max(1e-300));
        }
    }
}
