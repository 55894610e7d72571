//! Frobenius expansions at the regular singular points `a2, a3, a4`.
//!
//! With `t = x − a_i`, `P = Σ p_k t^k` (`p_0 = 0`) and
//! `Q = λ − 2(x − σ)² = Σ q_k t^k`, the equation `(P ψ′)′ = Q ψ` has the
//! double indicial root 0. The bounded solution is `ψ1 = Σ b_n t^n` with
//! `b_0 = 1`; the second is `ψ2 = Σ d_n t^n + k ln|t| ψ1` with `d_0 = 1` and
//! `k = 1`. Substituting `ψ2` leaves the forcing `−k (2 R ψ1′ + R′ ψ1)` with
//! `R = P/t`, so both coefficient sets follow the same recurrence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Side};

/// Series data of both Frobenius solutions about one endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusExpansion {
    /// Endpoint index `i` of `a_i` (0-based: `a1` is 0).
    pub anchor: usize,
    pub side: Side,
    pub lambda: f64,
    pub order: usize,
    pub b: Vec<f64>,
    pub d: Vec<f64>,
    pub k: f64,
    pub radius: f64,
    /// Taylor coefficients of `P` about the anchor.
    pub p: [f64; 5],
    /// Taylor coefficients of `Q` about the anchor.
    pub q: [f64; 3],
    pub x0: f64,
}

/// Values `(ψ, P ψ′)` of a solution at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub u: f64,
    pub v: f64,
}

/// Taylor coefficients of `Q(x) = λ − 2(x − σ)²` about `x0`.
pub fn q_taylor(cfg: &Configuration, lambda: f64, x0: f64) -> [f64; 3] {
    let s = x0 - cfg.sigma();
    [lambda - 2.0 * s * s, -4.0 * s, -2.0]
}

/// One step of the shared recurrence: the coefficient of `t^{m+1}` given
/// `c_0 … c_m` and the `t^m` coefficient of any extra forcing.
fn next_coefficient(p: &[f64; 5], q: &[f64; 3], c: &[f64], m: usize, forcing: f64) -> f64 {
    let mut rhs = forcing;
    for (kq, &qk) in q.iter().enumerate() {
        if kq <= m {
            rhs += qk * c[m - kq];
        }
    }
    let mf = (m + 1) as f64;
    for (kp, &pk) in p.iter().enumerate().skip(2) {
        if kp <= m + 1 {
            let idx = m + 2 - kp;
            rhs -= mf * pk * idx as f64 * c[idx];
        }
    }
    rhs / (p[1] * mf * mf)
}

/// Builds the expansion about `a_{anchor+1}`; the anchor must be `a2`, `a3` or `a4`.
pub fn frobenius_coefficients(
    cfg: &Configuration,
    lambda: f64,
    anchor: usize,
    side: Side,
    order: usize,
) -> Result<FrobeniusExpansion> {
    if !(1..=3).contains(&anchor) {
        return Err(Error::InvalidArgument(format!(
            "anchor must be a2, a3 or a4, got index {anchor}"
        )));
    }
    if order < 10 {
        return Err(Error::InvalidArgument(format!(
            "series order must be ≥ 10, got {order}"
        )));
    }
    let x0 = cfg.endpoints()[anchor];
    let p = cfg.p_taylor(x0);
    let q = q_taylor(cfg, lambda, x0);
    if p[1] == 0.0 || !p[1].is_finite() {
        return Err(Error::RootFinding("degenerate indicial equation".into()));
    }
    let mut b = vec![1.0];
    for m in 0..order {
        let c = next_coefficient(&p, &q, &b, m, 0.0);
        b.push(c);
    }
    // forcing for ψ2: −k c_m with c = 2 R ψ1′ + R′ ψ1, R_j = p_{j+1}
    let k = 1.0;
    let r: Vec<f64> = p[1..].to_vec();
    let mut d = vec![1.0];
    for m in 0..order {
        let mut cm = 0.0;
        for (j, &rj) in r.iter().enumerate() {
            if j <= m {
                // 2 R ψ1′: R_j · (m−j+1) b_{m−j+1}
                cm += 2.0 * rj * (m - j + 1) as f64 * b[m - j + 1];
            }
            if j >= 1 && j - 1 <= m {
                // R′ ψ1: j R_j t^{j−1} · b_{m−j+1}
                cm += j as f64 * rj * b[m + 1 - j];
            }
        }
        let c = next_coefficient(&p, &q, &d, m, -k * cm);
        d.push(c);
    }
    if b.iter().chain(&d).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("Frobenius coefficients at λ = {lambda}")));
    }
    Ok(FrobeniusExpansion {
        anchor,
        side,
        lambda,
        order,
        b,
        d,
        k,
        radius: cfg.series_radius(anchor),
        p,
        q,
        x0,
    })
}

/// `(Σ c_n t^n, Σ n c_n t^{n−1}, Σ n(n−1) c_n t^{n−2})` by Horner.
fn poly3(c: &[f64], t: f64) -> (f64, f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    let mut d2f = 0.0;
    for &cn in c.iter().rev() {
        d2f = d2f * t + 2.0 * df;
        df = df * t + f;
        f = f * t + cn;
    }
    (f, df, d2f)
}

fn eval_poly(c: &[f64], t: f64) -> (f64, f64) {
    let (f, df, _) = poly3(c, t);
    (f, df)
}

/// Values and derivatives of a solution `c1 ψ1 + c2 ψ2` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

impl FrobeniusExpansion {
    pub fn t(&self, x: f64) -> f64 {
        x - self.x0
    }

    /// `(ψ1, P ψ1′)` at `x`.
    pub fn psi1(&self, x: f64) -> State {
        let t = self.t(x);
        let (f, df) = eval_poly(&self.b, t);
        let (pp, _) = eval_poly(&self.p, t);
        State { u: f, v: pp * df }
    }

    /// `(ψ2, P ψ2′)` at `x`, using `P ψ2′ = P D′ + k (R ψ1 + ln|t| P ψ1′)`.
    pub fn psi2(&self, x: f64) -> State {
        let t = self.t(x);
        let (b, db) = eval_poly(&self.b, t);
        let (dd, ddd) = eval_poly(&self.d, t);
        let (pp, _) = eval_poly(&self.p, t);
        let (r, _) = eval_poly(&self.p[1..], t);
        let lt = t.abs().ln();
        State {
            u: dd + self.k * lt * b,
            v: pp * ddd + self.k * (r * b + lt * pp * db),
        }
    }

    /// Jet of `c1 ψ1 + c2 ψ2` at `x` (value, first and second derivative).
    pub fn jet(&self, c1: f64, c2: f64, x: f64) -> Jet {
        let t = self.t(x);
        let (b, db, d2b) = poly3(&self.b, t);
        let (d, dd, d2d) = poly3(&self.d, t);
        let lt = t.abs().ln();
        let k = self.k;
        Jet {
            value: c1 * b + c2 * (d + k * lt * b),
            first: c1 * db + c2 * (dd + k * (b / t + lt * db)),
            second: c1 * d2b + c2 * (d2d + k * (2.0 * db / t - b / (t * t) + lt * d2b)),
        }
    }

    /// `(P ψ′)′ − Q ψ` for the truncated `ψ1`, evaluated from closed-form derivatives.
    pub fn psi1_residual(&self, x: f64) -> f64 {
        let t = self.t(x);
        let (b, db, d2b) = poly3(&self.b, t);
        let (pp, dp) = eval_poly(&self.p, t);
        let (q, _) = eval_poly(&self.q, t);
        pp * d2b + dp * db - q * b
    }
}

/// Maps basis coefficients `(c1, c2)` to the log-branch data `(ℓ1, ℓ2)` with
/// `ψ ≈ ℓ1 + ℓ2 ln|t|` as `t → 0`.
pub fn log_coefficients(exp: &FrobeniusExpansion, c1: f64, c2: f64) -> (f64, f64) {
    (c1 + c2 * exp.d[0], c2 * exp.k)
}

/// Inverse of [`log_coefficients`].
pub fn basis_from_log(exp: &FrobeniusExpansion, l1: f64, l2: f64) -> (f64, f64) {
    let c2 = l2 / exp.k;
    (l1 - c2 * exp.d[0], c2)
}
