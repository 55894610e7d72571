//! Principal-value Hilbert transform on finite intervals.
//!
//! Convention: `(H f)(x) = (1/π) p.v. ∫ f(y) / (x − y) dy`, so the transform of
//! the indicator of `[a, b]` is `(1/π) ln|(x − a)/(b − x)|`. The truncated
//! operator is `H_T = χ[a1,a3] H χ[a2,a4]` and its adjoint is
//! `H_T* = −χ[a2,a4] H χ[a1,a3]`.
//!
//! Principal values are always taken by subtracting `f(x)`:
//! `p.v. ∫ f(y)/(x − y) dy = ∫ (f(y) − f(x))/(x − y) dy + f(x) ln|(x − lo)/(hi − x)|`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::quadrature::{barycentric_weights, CompositeRule, QuadratureOptions};
use crate::sampled::{Layout, SampledFunction};

/// `(1/π) ln|(x − a)/(b − x)|`, the transform of `χ[a, b]`.
pub fn hilbert_indicator(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("need a < b, got [{a}, {b}]")));
    }
    if x == a || x == b {
        return Err(Error::SingularPoint { point: x });
    }
    Ok(((x - a) / (b - x)).abs().ln() / PI)
}

/// Transform of a callable `f` on `[breaks[0], breaks[last]]`.
///
/// Interior entries of `breaks` mark points where `f` may be singular (for
/// instance `ln|y − a3|`); panels are graded toward all of them.
pub fn pv_hilbert_fn<F>(f: F, breaks: &[f64], x: f64, opts: &QuadratureOptions) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = span(breaks)?;
    if x == lo || x == hi {
        return Err(Error::SingularPoint { point: x });
    }
    if x < lo || x > hi {
        let rule = CompositeRule::graded(breaks, opts);
        return Ok(rule.integrate(|y| f(y) / (x - y)) / PI);
    }
    let fx = f(x);
    if !fx.is_finite() {
        return Err(Error::NonFinite(format!("f({x})")));
    }
    let mut pts = breaks.to_vec();
    pts.push(x);
    let rule = CompositeRule::graded(&pts, opts);
    let regular = rule.integrate(|y| (f(y) - fx) / (x - y));
    Ok((regular + fx * ((x - lo) / (hi - x)).abs().ln()) / PI)
}

fn span(breaks: &[f64]) -> Result<(f64, f64)> {
    let lo = breaks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = breaks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return Err(Error::InvalidArgument("empty integration interval".into()));
    }
    Ok((lo, hi))
}

/// Transform of a sampled function, using its own nodes and weights as the
/// quadrature rule.
pub fn pv_hilbert(f: &SampledFunction, x: f64) -> Result<f64> {
    let (lo, hi) = f.interval;
    if x == lo || x == hi {
        return Err(Error::SingularPoint { point: x });
    }
    if x < lo || x > hi {
        return Ok(exterior_sum(f, x) / PI);
    }
    let fx = f.eval(x);
    let mut regular = 0.0;
    for (j, ((&y, &v), &w)) in f.nodes.iter().zip(&f.values).zip(&f.weights).enumerate() {
        if y == x {
            regular -= w * node_derivative(f, j);
        } else {
            regular += w * (v - fx) / (x - y);
        }
    }
    Ok((regular + fx * ((x - lo) / (hi - x)).abs().ln()) / PI)
}

/// `∫ f(y)/(x − y) dy` for `x` outside the support.
fn exterior_sum(f: &SampledFunction, x: f64) -> f64 {
    f.nodes
        .iter()
        .zip(&f.values)
        .zip(&f.weights)
        .map(|((&y, &v), &w)| w * v / (x - y))
        .sum()
}

/// Derivative of the interpolant at node `j`.
fn node_derivative(f: &SampledFunction, j: usize) -> f64 {
    match &f.layout {
        Layout::Panels { panels } => {
            let p = panels
                .iter()
                .find(|p| j >= p.start && j < p.start + p.len)
                .expect("node belongs to a panel");
            let xs = &f.nodes[p.start..p.start + p.len];
            let vs = &f.values[p.start..p.start + p.len];
            let bw = barycentric_weights(xs);
            let i = j - p.start;
            (0..xs.len())
                .filter(|&k| k != i)
                .map(|k| bw[k] / bw[i] * (vs[k] - vs[i]) / (xs[i] - xs[k]))
                .sum()
        }
        Layout::Scattered => {
            let n = f.nodes.len();
            let (a, b) = if j == 0 {
                (0, 1)
            } else if j + 1 == n {
                (n - 2, n - 1)
            } else {
                (j - 1, j + 1)
            };
            (f.values[b] - f.values[a]) / (f.nodes[b] - f.nodes[a])
        }
    }
}

fn check_support(f: &SampledFunction, lo: f64, hi: f64, what: &str) -> Result<()> {
    let tol = 1e-12 * (hi - lo).abs().max(1.0);
    if f.lo() < lo - tol || f.hi() > hi + tol {
        return Err(Error::InvalidArgument(format!(
            "{what} must live on [{lo}, {hi}], got [{}, {}]",
            f.lo(),
            f.hi()
        )));
    }
    Ok(())
}

fn transform_onto(f: &SampledFunction, out: &SampledFunction, sign: f64) -> Result<SampledFunction> {
    let values = out
        .nodes
        .par_iter()
        .map(|&x| pv_hilbert(f, x).map(|v| sign * v))
        .collect::<Result<Vec<f64>>>()?;
    Ok(out.with_values(values))
}

/// `H_T f` sampled on `out`, for `f` on `[a2, a4]` and `out` on `[a1, a3]`.
pub fn apply_ht(f: &SampledFunction, cfg: &Configuration, out: &SampledFunction) -> Result<SampledFunction> {
    check_support(f, cfg.a2(), cfg.a4(), "object")?;
    check_support(out, cfg.a1(), cfg.a3(), "output grid")?;
    transform_onto(f, out, 1.0)
}

/// `H_T* g = −χ[a2,a4] H g` sampled on `out`, for `g` on `[a1, a3]`.
pub fn apply_ht_adjoint(g: &SampledFunction, cfg: &Configuration, out: &SampledFunction) -> Result<SampledFunction> {
    check_support(g, cfg.a1(), cfg.a3(), "measurement")?;
    check_support(out, cfg.a2(), cfg.a4(), "output grid")?;
    transform_onto(g, out, -1.0)
}

/// Graded rule on the object interval `[a2, a4]`, refined toward `a2, a3, a4`.
pub fn object_rule(cfg: &Configuration, opts: &QuadratureOptions) -> CompositeRule {
    CompositeRule::graded(&[cfg.a2(), cfg.a3(), cfg.a4()], opts)
}

/// Graded rule on the measurement interval `[a1, a3]`, refined toward `a1, a2, a3`.
pub fn measurement_rule(cfg: &Configuration, opts: &QuadratureOptions) -> CompositeRule {
    CompositeRule::graded(&[cfg.a1(), cfg.a2(), cfg.a3()], opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> Configuration {
        Configuration::default()
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(hilbert_indicator(1.5, 7.5, 4.5).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_relative_eq!(
            hilbert_indicator(0.0, 1.0, e / (1.0 + e)).unwrap(),
            1.0 / PI,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            hilbert_indicator(1.5, 7.5, 2.0).unwrap(),
            (0.5f64 / 5.5).ln() / PI,
            epsilon = 1e-15
        );
        assert!(matches!(
            hilbert_indicator(1.5, 7.5, 7.5),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn constant_reduces_to_indicator() {
        let opts = QuadratureOptions::default();
        let f = SampledFunction::from_rule(&object_rule(&cfg(), &opts), |_| 1.0);
        for x in [1.50001, 2.0, 4.5, 6.0, 7.3] {
            let expect = hilbert_indicator(1.5, 7.5, x).unwrap();
            assert_relative_eq!(pv_hilbert(&f, x).unwrap(), expect, epsilon = 1e-13);
            let by_fn = pv_hilbert_fn(|_| 1.0, &[1.5, 7.5], x, &opts).unwrap();
            assert_relative_eq!(by_fn, expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_function_closed_form() {
        // (1/π) ∫_a^b (y − x0)/(x0 − y) dy = −(b − a)/π
        let opts = QuadratureOptions::default();
        let f = SampledFunction::from_rule(&CompositeRule::graded(&[1.0, 3.0], &opts), |y| y - 2.2);
        assert_relative_eq!(pv_hilbert(&f, 2.2).unwrap(), -2.0 / PI, epsilon = 1e-13);
        let v = pv_hilbert_fn(|y| y - 2.2, &[1.0, 3.0], 2.2, &opts).unwrap();
        assert_relative_eq!(v, -2.0 / PI, epsilon = 1e-13);
    }

    #[test]
    fn exterior_branch_matches_indicator() {
        let opts = QuadratureOptions::default();
        let f = SampledFunction::from_rule(&object_rule(&cfg(), &opts), |_| 1.0);
        let v = pv_hilbert(&f, 0.75).unwrap();
        assert_relative_eq!(v, hilbert_indicator(1.5, 7.5, 0.75).unwrap(), epsilon = 1e-13);
        assert_relative_eq!(v, -(9.0f64).ln() / PI, epsilon = 1e-13);
        assert!(pv_hilbert(&f, 1.5).is_err());
    }

    #[test]
    fn node_coincident_evaluation() {
        let opts = QuadratureOptions::default();
        let f = SampledFunction::from_rule(&CompositeRule::graded(&[0.0, 1.0], &opts), |y| y * y);
        // (1/π) p.v. ∫_0^1 y²/(x − y) dy = (1/π)(−x − 1/2 + x² ln|x/(1 − x)|)
        let exact = |x: f64| (-x - 0.5 + x * x * (x / (1.0 - x)).ln()) / PI;
        let x = f.nodes[f.len() / 2];
        assert_relative_eq!(pv_hilbert(&f, x).unwrap(), exact(x), epsilon = 1e-13);
        assert_relative_eq!(pv_hilbert(&f, 0.3).unwrap(), exact(0.3), epsilon = 1e-13);
    }

    #[test]
    fn indicator_transforms_with_sign() {
        let c = cfg();
        let opts = QuadratureOptions::default();
        let one_obj = SampledFunction::from_rule(&object_rule(&c, &opts), |_| 1.0);
        let one_meas = SampledFunction::from_rule(&measurement_rule(&c, &opts), |_| 1.0);
        // Node positions carry an absolute rounding error of ~1e-16, so the
        // comparison is limited to nodes not hugging an endpoint.
        let away = |x: &&f64| c.distance_to_endpoints(**x) > 1e-7;
        let g = apply_ht(&one_obj, &c, &one_meas).unwrap();
        for (x, v) in g.nodes.iter().zip(&g.values).filter(|(x, _)| away(x)).step_by(7) {
            assert_relative_eq!(*v, hilbert_indicator(1.5, 7.5, *x).unwrap(), max_relative = 1e-10);
        }
        let h = apply_ht_adjoint(&one_meas, &c, &one_obj).unwrap();
        for (y, v) in h.nodes.iter().zip(&h.values).filter(|(y, _)| away(y)).step_by(7) {
            assert_relative_eq!(*v, -hilbert_indicator(0.0, 6.0, *y).unwrap(), max_relative = 1e-10);
        }
        assert!(apply_ht(&one_meas, &c, &one_meas).is_err());
    }

    #[test]
    fn off_support_transform_is_smooth() {
        let c = cfg();
        let bump = |y: f64| {
            if (2.0..5.0).contains(&y) {
                ((y - 2.0) * (5.0 - y)).powi(3)
            } else {
                0.0
            }
        };
        let opts = QuadratureOptions::default();
        let f = SampledFunction::from_rule(&CompositeRule::graded(&[1.5, 2.0, 5.0, 7.5], &opts), bump);
        let xs: Vec<f64> = (0..=20).map(|i| 0.05 + 1.4 * i as f64 / 20.0).collect();
        let v: Vec<f64> = xs.iter().map(|&x| pv_hilbert(&f, x).unwrap()).collect();
        assert!(v.iter().all(|x| x.is_finite()));
        // second differences stay small: the kernel is smooth off the support
        let d2 = v
            .windows(3)
            .map(|w| (w[0] - 2.0 * w[1] + w[2]).abs())
            .fold(0.0, f64::max);
        assert!(d2 < 1e-2, "{d2}");
        let _ = c;
    }

    #[test]
    fn exterior_and_interior_agree_at_the_edge() {
        let opts = QuadratureOptions::default();
        let f = |y: f64| ((y - 1.5) * (7.5 - y)).powi(2) * (0.3 * y).cos();
        let breaks = [1.5, 7.5];
        for edge in [1.5, 7.5] {
            let d = 1e-10;
            let inside = pv_hilbert_fn(f, &breaks, edge + if edge == 1.5 { d } else { -d }, &opts).unwrap();
            let outside = pv_hilbert_fn(f, &breaks, edge + if edge == 1.5 { -d } else { d }, &opts).unwrap();
            assert!((inside - outside).abs() < 1e-8, "{inside} vs {outside}");
        }
    }

    #[test]
    fn transform_norm_is_bounded_by_one() {
        let c = cfg();
        let opts = QuadratureOptions::default();
        let obj = object_rule(&c, &opts);
        let meas = SampledFunction::from_rule(&measurement_rule(&c, &opts), |_| 0.0);
        for k in 1..6 {
            let f = SampledFunction::from_rule(&obj, |y| (k as f64 * y).sin() + 0.2 * y);
            let g = apply_ht(&f, &c, &meas).unwrap();
            assert!(g.norm() <= f.norm() * (1.0 + 1e-3));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn adjoint_identity(
            fc in proptest::collection::vec(-1.0f64..1.0, 4),
            gc in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let c = cfg();
            let opts = QuadratureOptions { order: 12, ..QuadratureOptions::default() };
            // Smooth pairs vanishing at their interval ends.
            let f = SampledFunction::from_rule(&object_rule(&c, &opts), |y| {
                let t = (y - 1.5) / 6.0;
                (t * (1.0 - t)).powi(2) * (fc[0] + fc[1] * t + fc[2] * (5.0 * t).sin() + fc[3] * (9.0 * t).cos())
            });
            let g = SampledFunction::from_rule(&measurement_rule(&c, &opts), |x| {
                let t = x / 6.0;
                (t * (1.0 - t)).powi(2) * (gc[0] + gc[1] * t + gc[2] * (4.0 * t).sin() + gc[3] * (7.0 * t).cos())
            });
            let htf = apply_ht(&f, &c, &g).unwrap();
            let htg = apply_ht_adjoint(&g, &c, &f).unwrap();
            let lhs = htf.inner(&g);
            let rhs = f.inner(&htg);
            let scale = f.norm() * g.norm();
            prop_assert!((lhs - rhs).abs() <= 1e-6 * scale.max(1e-300), "{lhs} vs {rhs}");
        }
    }
}
