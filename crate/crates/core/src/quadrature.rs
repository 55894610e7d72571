//! Gauss–Legendre panels with geometric grading toward breakpoints.
//!
//! Every breakpoint handed to [`CompositeRule::graded`] is treated as a
//! potential logarithmic or near-pole singularity: panels shrink by a constant
//! ratio toward it until they are narrower than `floor · length`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Parameters of the graded composite rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Ratio between consecutive panel widths toward a breakpoint.
    pub ratio: f64,
    /// Innermost panel width relative to the sub-interval length.
    pub floor: f64,
    /// Widest panel allowed away from the breakpoints.
    pub max_panel: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: 16,
            ratio: 0.2,
            floor: 1e-14,
            max_panel: 0.25,
        }
    }
}

/// One panel of a composite rule: `[lo, hi]` and the slice of nodes it owns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub lo: f64,
    pub hi: f64,
    pub start: usize,
    pub len: usize,
}

/// A composite rule over `[lo, hi]` built from Gauss–Legendre panels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: Vec<Panel>,
}

impl CompositeRule {
    /// Panels over `[breaks[0], breaks[last]]`, graded toward every breakpoint.
    ///
    /// `breaks` may be unsorted and contain duplicates.
    pub fn graded(breaks: &[f64], opts: &QuadratureOptions) -> CompositeRule {
        let mut pts: Vec<f64> = breaks.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1.0));
        let (gx, gw) = gauss_legendre(opts.order);
        let mut rule = CompositeRule {
            nodes: Vec::new(),
            weights: Vec::new(),
            panels: Vec::new(),
        };
        for w in pts.windows(2) {
            for (lo, hi) in graded_panels(w[0], w[1], opts) {
                rule.push_panel(lo, hi, &gx, &gw);
            }
        }
        rule
    }

    /// Equal-width panels with no grading.
    pub fn uniform(lo: f64, hi: f64, panels: usize, order: usize) -> CompositeRule {
        let (gx, gw) = gauss_legendre(order);
        let mut rule = CompositeRule {
            nodes: Vec::new(),
            weights: Vec::new(),
            panels: Vec::new(),
        };
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + h * k as f64;
            let b = if k + 1 == panels { hi } else { a + h };
            rule.push_panel(a, b, &gx, &gw);
        }
        rule
    }

    fn push_panel(&mut self, lo: f64, hi: f64, gx: &[f64], gw: &[f64]) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let start = self.nodes.len();
        for (x, w) in gx.iter().zip(gw) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
        self.panels.push(Panel {
            lo,
            hi,
            start,
            len: gx.len(),
        });
    }

    pub fn lo(&self) -> f64 {
        self.panels.first().map_or(0.0, |p| p.lo)
    }

    pub fn hi(&self) -> f64 {
        self.panels.last().map_or(0.0, |p| p.hi)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Weighted sum of precomputed samples at the nodes.
    pub fn sum(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Panel boundaries for `[lo, hi]`, geometric toward both ends and uniform
/// (at most `max_panel` wide) in between.
fn graded_panels(lo: f64, hi: f64, opts: &QuadratureOptions) -> Vec<(f64, f64)> {
    let len = hi - lo;
    if len <= 0.0 {
        return Vec::new();
    }
    // Geometric sequence from each end up to `reach`.
    let reach = (0.5 * len).min(opts.max_panel);
    let mut offsets = vec![reach];
    let mut d = reach;
    // Keep the innermost Gauss node at least a few ulps away from the breakpoint.
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let (gx, _) = gauss_legendre(opts.order);
    let first = 0.5 * (1.0 + gx.iter().copied().fold(1.0, f64::min));
    let smallest = (opts.floor * len).max(4.0 * f64::EPSILON * scale / first);
    while d * opts.ratio >= smallest {
        d *= opts.ratio;
        offsets.push(d);
    }
    let mut edges: Vec<f64> = Vec::with_capacity(2 * offsets.len() + 8);
    edges.push(lo);
    for &o in offsets.iter().rev() {
        edges.push(lo + o);
    }
    let inner_lo = lo + reach;
    let inner_hi = hi - reach;
    if inner_hi > inner_lo {
        let n = ((inner_hi - inner_lo) / opts.max_panel).ceil().max(1.0) as usize;
        let h = (inner_hi - inner_lo) / n as f64;
        for k in 1..n {
            edges.push(inner_lo + h * k as f64);
        }
    }
    for &o in offsets.iter() {
        edges.push(hi - o);
    }
    edges.push(hi);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1.0));
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Barycentric weights for Lagrange interpolation through `nodes`.
///
/// Differences are rescaled by `4/(max − min)` so the products neither
/// overflow nor underflow on very short or very long panels; the common
/// factor cancels in the barycentric formula.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let lo = nodes.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = if hi > lo { 4.0 / (hi - lo) } else { 1.0 };
    (0..n)
        .map(|j| {
            let prod: f64 = (0..n).filter(|&k| k != j).map(|k| c * (nodes[j] - nodes[k])).product();
            1.0 / prod
        })
        .collect()
}

/// Evaluates the interpolant through `(nodes, values)` at `x`.
pub fn barycentric_eval(nodes: &[f64], values: &[f64], bw: &[f64], x: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xj, &fj), &wj) in nodes.iter().zip(values).zip(bw) {
        let d = x - xj;
        if d == 0.0 {
            return fj;
        }
        let t = wj / d;
        num += t * fj;
        den += t;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 24] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
            let deg = 2 * n - 1;
            let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((integral - exact).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn graded_rule_weights_sum_to_length() {
        let rule = CompositeRule::graded(&[1.5, 6.0, 7.5, 3.2], &QuadratureOptions::default());
        assert_relative_eq!(rule.sum(&vec![1.0; rule.len()]), 6.0, max_relative = 1e-13);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rule.lo(), 1.5);
        assert_eq!(rule.hi(), 7.5);
    }

    #[test]
    fn graded_rule_handles_log_singularities() {
        // ∫_0^1 ln x dx = −1 and ∫_0^1 ln² x dx = 2
        let rule = CompositeRule::graded(&[0.0, 1.0], &QuadratureOptions::default());
        assert_relative_eq!(rule.integrate(|x| x.ln()), -1.0, max_relative = 1e-13);
        assert_relative_eq!(rule.integrate(|x| x.ln().powi(2)), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn graded_rule_handles_near_pole() {
        // ∫_0^1 dx/(x + δ) = ln((1 + δ)/δ)
        let delta: f64 = 1e-7;
        let rule = CompositeRule::graded(&[0.0, 1.0], &QuadratureOptions::default());
        let exact = ((1.0 + delta) / delta).ln();
        assert_relative_eq!(rule.integrate(|x| 1.0 / (x + delta)), exact, max_relative = 1e-12);
    }

    #[test]
    fn barycentric_reproduces_polynomials() {
        let (x, _) = gauss_legendre(8);
        let vals: Vec<f64> = x.iter().map(|t| t.powi(5) - 2.0 * t).collect();
        let bw = barycentric_weights(&x);
        for t in [-1.0, -0.3, 0.77, 1.0] {
            let p = barycentric_eval(&x, &vals, &bw, t);
            assert_relative_eq!(p, t.powi(5) - 2.0 * t, epsilon = 1e-13);
        }
    }
}
