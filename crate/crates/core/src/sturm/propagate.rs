//! Taylor-series propagation of `(P ψ′)′ = Q ψ` between the endpoints.
//!
//! About an ordinary point `x0` with `P = Σ p_j s^j` and `Q = Σ q_j s^j`,
//! the coefficients of `ψ = Σ c_m s^m` obey
//! `c_{m+2} = (Σ q_j c_{m−j}/(m+1) − Σ_{j≥1} p_j (m+2−j) c_{m+2−j}) / (p_0 (m+2))`
//! with `c_0 = ψ(x0)` and `c_1 = (P ψ′)(x0)/p_0`. Steps stay within half the
//! distance to the nearest endpoint, so the series converges geometrically.

use serde::{Deserialize, Serialize};

use super::series::{q_taylor, State};
use crate::error::{Error, Result};
use crate::geometry::Configuration;

/// Tuning for [`integrate_interior`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Relative truncation tolerance for each step.
    pub tol: f64,
    /// Largest number of Taylor terms per step before the step is halved.
    pub max_terms: usize,
    /// Cap on the step length.
    pub max_step: f64,
    /// Fraction of the distance to the nearest endpoint a step may cover.
    pub reach: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            max_terms: 60,
            max_step: 0.5,
            reach: 0.5,
        }
    }
}

/// One accepted step: the local Taylor series about `x0`, valid on `[x0, x0 + h]`
/// (or `[x0 + h, x0]` when propagating leftwards).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x0: f64,
    pub h: f64,
    pub coeffs: Vec<f64>,
    pub p: [f64; 5],
}

impl Segment {
    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 {
            (self.x0, self.x0 + self.h)
        } else {
            (self.x0 + self.h, self.x0)
        };
        x >= lo && x <= hi
    }

    /// `(ψ, ψ′, ψ″)` at `x`.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        let s = x - self.x0;
        let mut f = 0.0;
        let mut df = 0.0;
        let mut d2f = 0.0;
        for &c in self.coeffs.iter().rev() {
            d2f = d2f * s + 2.0 * df;
            df = df * s + f;
            f = f * s + c;
        }
        (f, df, d2f)
    }

    /// `(ψ, P ψ′)` at `x`.
    pub fn state(&self, x: f64) -> State {
        let (f, df, _) = self.jet(x);
        let s = x - self.x0;
        let pp = self.p.iter().rev().fold(0.0, |acc, &c| acc * s + c);
        State { u: f, v: pp * df }
    }
}

/// Solution of an initial value problem between two ordinary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: f64,
    pub end: f64,
    pub segments: Vec<Segment>,
    pub final_state: State,
}

impl Trajectory {
    /// `(ψ, ψ′, ψ″)` at a point covered by the trajectory.
    pub fn jet(&self, x: f64) -> Option<(f64, f64, f64)> {
        self.segments.iter().find(|s| s.contains(x)).map(|s| s.jet(x))
    }

    /// `(ψ, P ψ′)` at a point covered by the trajectory.
    pub fn state(&self, x: f64) -> Option<State> {
        self.segments.iter().find(|s| s.contains(x)).map(|s| s.state(x))
    }
}

fn taylor_coefficients(p: &[f64; 5], q: &[f64; 3], u: f64, v: f64, terms: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(terms);
    c.push(u);
    c.push(v / p[0]);
    for m in 0..terms.saturating_sub(2) {
        let mut rhs = 0.0;
        for (j, &qj) in q.iter().enumerate() {
            if j <= m {
                rhs += qj * c[m - j];
            }
        }
        rhs /= (m + 1) as f64;
        for (j, &pj) in p.iter().enumerate().skip(1) {
            if j <= m + 1 {
                let idx = m + 2 - j;
                rhs -= pj * idx as f64 * c[idx];
            }
        }
        c.push(rhs / (p[0] * (m + 2) as f64));
    }
    c
}

/// Number of leading terms needed so the last two terms, scaled by `|h|^m`,
/// fall below `tol` relative to the largest term; `None` if `max_terms` do not suffice.
fn converged_length(c: &[f64], h: f64, tol: f64) -> Option<usize> {
    let mut scale = 0.0f64;
    let mut hm = 1.0;
    let mut terms = Vec::with_capacity(c.len());
    for &cm in c {
        let t = (cm * hm).abs();
        scale = scale.max(t);
        terms.push(t);
        hm *= h.abs();
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    (3..terms.len())
        .find(|&m| terms[m - 1] + terms[m - 2] <= tol * scale)
        .map(|m| m + 1)
}

/// Propagates `state` at `from` to `to`; neither point may be an endpoint
/// and no endpoint may lie between them.
pub fn integrate_interior(
    cfg: &Configuration,
    lambda: f64,
    from: f64,
    to: f64,
    state: State,
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    let (lo, hi) = (from.min(to), from.max(to));
    if cfg.endpoints().iter().any(|&a| a >= lo && a <= hi) {
        return Err(Error::InvalidArgument(format!(
            "propagation interval [{lo}, {hi}] touches an endpoint"
        )));
    }
    if !(state.u.is_finite() && state.v.is_finite()) {
        return Err(Error::NonFinite(format!("initial state at x = {from}")));
    }
    let dir = if to >= from { 1.0 } else { -1.0 };
    let mut x = from;
    let mut cur = state;
    let mut segments = Vec::new();
    while (to - x) * dir > 0.0 {
        let p = cfg.p_taylor(x);
        let q = q_taylor(cfg, lambda, x);
        let mut h = (opts.reach * cfg.distance_to_endpoints(x))
            .min(opts.max_step)
            .min((to - x).abs());
        let coeffs = loop {
            let c = taylor_coefficients(&p, &q, cur.u, cur.v, opts.max_terms);
            if let Some(len) = converged_length(&c, h, opts.tol) {
                break c[..len].to_vec();
            }
            h *= 0.5;
            if h < 1e-12 * x.abs().max(1.0) {
                return Err(Error::StepUnderflow { x });
            }
        };
        // land exactly on the target at the final step
        let remaining = (to - x).abs();
        let (next, step) = if h >= remaining {
            (to, to - x)
        } else {
            (x + dir * h, dir * h)
        };
        let seg = Segment {
            x0: x,
            h: step,
            coeffs,
            p,
        };
        cur = seg.state(next);
        if !(cur.u.is_finite() && cur.v.is_finite()) {
            return Err(Error::NonFinite(format!("propagated state at x = {next}")));
        }
        segments.push(seg);
        x = next;
    }
    Ok(Trajectory {
        start: from,
        end: to,
        segments,
        final_state: cur,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> Configuration {
        Configuration::default()
    }

    #[test]
    fn agrees_with_frobenius_solution() {
        let c = cfg();
        let e = super::super::series::frobenius_coefficients(&c, -20.0, 1, crate::geometry::Side::Right, 60).unwrap();
        let s0 = e.psi1(1.7);
        let traj = integrate_interior(&c, -20.0, 1.7, 2.2, s0, &PropagationOptions::default()).unwrap();
        let s1 = e.psi1(2.2);
        assert_relative_eq!(traj.final_state.u, s1.u, max_relative = 1e-11);
        assert_relative_eq!(traj.final_state.v, s1.v, max_relative = 1e-11);
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let c = cfg();
        let opts = PropagationOptions::default();
        let s = State { u: 0.3, v: -1.1 };
        let f = integrate_interior(&c, 44.0, 1.8, 5.7, s, &opts).unwrap();
        let b = integrate_interior(&c, 44.0, 5.7, 1.8, f.final_state, &opts).unwrap();
        assert_relative_eq!(b.final_state.u, s.u, max_relative = 1e-9);
        assert_relative_eq!(b.final_state.v, s.v, max_relative = 1e-9);
    }

    #[test]
    fn wronskian_is_conserved() {
        // P (u1 u2′ − u2 u1′) = u1 v2 − u2 v1 is constant
        let c = cfg();
        let opts = PropagationOptions::default();
        let a = integrate_interior(&c, -96.0, 6.2, 7.3, State { u: 1.0, v: 0.0 }, &opts).unwrap();
        let b = integrate_interior(&c, -96.0, 6.2, 7.3, State { u: 0.0, v: 1.0 }, &opts).unwrap();
        let w = a.final_state.u * b.final_state.v - b.final_state.u * a.final_state.v;
        let scale = a.final_state.u.abs().max(b.final_state.u.abs()) * a.final_state.v.abs().max(b.final_state.v.abs());
        assert!((w - 1.0).abs() < 1e-11 * scale.max(1.0), "W = {w}");
    }

    #[test]
    fn dense_output_is_continuous() {
        let c = cfg();
        let t = integrate_interior(
            &c,
            8.0,
            1.9,
            5.6,
            State { u: 1.0, v: 2.0 },
            &PropagationOptions::default(),
        )
        .unwrap();
        for w in t.segments.windows(2) {
            let x = w[1].x0;
            let (a, da, _) = w[0].jet(x);
            let (b, db, _) = w[1].jet(x);
            assert_relative_eq!(a, b, max_relative = 1e-13, epsilon = 1e-14);
            assert_relative_eq!(da, db, max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn refuses_to_cross_an_endpoint() {
        let c = cfg();
        let r = integrate_interior(
            &c,
            0.0,
            5.0,
            6.5,
            State { u: 1.0, v: 0.0 },
            &PropagationOptions::default(),
        );
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
