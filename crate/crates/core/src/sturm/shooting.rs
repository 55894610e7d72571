//! Shooting across the two subintervals and the eigenvalue search.
//!
//! A shot starts from the bounded solution at `a2`, crosses `a3` by keeping the
//! log-branch data `(ℓ11, ℓ21)` fixed, and ends in the Frobenius basis at `a4`.
//! The log coefficient there, `D(λ)`, vanishes exactly at the eigenvalues.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagate::{integrate_interior, PropagationOptions, Trajectory};
use super::series::{basis_from_log, frobenius_coefficients, log_coefficients, FrobeniusExpansion, State};
use crate::error::{Error, Result};
use crate::geometry::{Configuration, Side};

/// Solver parameters shared by the shooting routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    /// Offset from `a2, a3, a4` at which series and propagation are matched.
    pub eps_match: f64,
    /// Number of Frobenius terms.
    pub series_order: usize,
    pub propagation: PropagationOptions,
    /// Largest condition number accepted when matching the log basis.
    pub max_condition: f64,
}

impl SolverParams {
    /// Defaults for `cfg`: `ε = min gap / 10` and `N = 40`.
    pub fn for_config(cfg: &Configuration) -> Self {
        Self {
            eps_match: cfg.min_gap() / 10.0,
            series_order: 40,
            propagation: PropagationOptions::default(),
            max_condition: 1e8,
        }
    }

    pub fn validate(&self, cfg: &Configuration) -> Result<()> {
        let limit = cfg.min_gap() / 4.0;
        if !(self.eps_match > 0.0 && self.eps_match <= limit) {
            return Err(Error::InvalidArgument(format!(
                "eps_match must lie in (0, {limit}], got {}",
                self.eps_match
            )));
        }
        if self.series_order < 10 {
            return Err(Error::InvalidArgument(format!(
                "series order must be ≥ 10, got {}",
                self.series_order
            )));
        }
        Ok(())
    }
}

/// Coefficients `(c1, c2)` of `(ψ, P ψ′)` at `x` in the basis `{ψ1, ψ2}` of `exp`.
pub fn match_log_basis(exp: &FrobeniusExpansion, x: f64, state: State, max_condition: f64) -> Result<(f64, f64)> {
    let s1 = exp.psi1(x);
    let s2 = exp.psi2(x);
    let det = s1.u * s2.v - s2.u * s1.v;
    let frob2 = s1.u * s1.u + s1.v * s1.v + s2.u * s2.u + s2.v * s2.v;
    let condition = frob2 / det.abs();
    if !condition.is_finite() || condition > max_condition {
        return Err(Error::IllConditioned {
            condition,
            offset: x - exp.x0,
        });
    }
    let c1 = (state.u * s2.v - s2.u * state.v) / det;
    let c2 = (s1.u * state.v - state.u * s1.v) / det;
    Ok((c1, c2))
}

/// Everything computed by one shot at a fixed `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub lambda: f64,
    pub eps: f64,
    /// Expansions at `a2⁺, a3⁻, a3⁺, a4⁻`.
    pub expansions: [FrobeniusExpansion; 4],
    /// Basis coefficients `(c1, c2)` at each expansion.
    pub coeffs: [(f64, f64); 4],
    /// `(ℓ11, ℓ21)` carried across `a3`.
    pub log_coeffs: (f64, f64),
    pub left: Trajectory,
    pub right: Trajectory,
}

impl Shot {
    /// The log-branch coefficient at `a4`.
    pub fn defect(&self) -> f64 {
        log_coefficients(&self.expansions[3], self.coeffs[3].0, self.coeffs[3].1).1
    }
}

/// Runs the shooting pass at `λ`.
pub fn shoot(cfg: &Configuration, lambda: f64, params: &SolverParams) -> Result<Shot> {
    params.validate(cfg)?;
    let n = params.series_order;
    let eps = params.eps_match;
    let e2 = frobenius_coefficients(cfg, lambda, 1, Side::Right, n)?;
    let e3l = frobenius_coefficients(cfg, lambda, 2, Side::Left, n)?;
    let e3r = frobenius_coefficients(cfg, lambda, 2, Side::Right, n)?;
    let e4 = frobenius_coefficients(cfg, lambda, 3, Side::Left, n)?;
    let (a2, a3, a4) = (cfg.a2(), cfg.a3(), cfg.a4());

    let start = e2.psi1(a2 + eps);
    let left = integrate_interior(cfg, lambda, a2 + eps, a3 - eps, start, &params.propagation)?;
    let c3l = match_log_basis(&e3l, a3 - eps, left.final_state, params.max_condition)?;
    let (l11, l21) = log_coefficients(&e3l, c3l.0, c3l.1);

    let c3r = basis_from_log(&e3r, l11, l21);
    let s1 = e3r.psi1(a3 + eps);
    let s2 = e3r.psi2(a3 + eps);
    let reseed = State {
        u: c3r.0 * s1.u + c3r.1 * s2.u,
        v: c3r.0 * s1.v + c3r.1 * s2.v,
    };
    let right = integrate_interior(cfg, lambda, a3 + eps, a4 - eps, reseed, &params.propagation)?;
    let c4 = match_log_basis(&e4, a4 - eps, right.final_state, params.max_condition)?;
    if !(c4.0.is_finite() && c4.1.is_finite()) {
        return Err(Error::NonFinite(format!("boundary defect at λ = {lambda}")));
    }
    Ok(Shot {
        lambda,
        eps,
        expansions: [e2, e3l, e3r, e4],
        coeffs: [(1.0, 0.0), c3l, c3r, c4],
        log_coeffs: (l11, l21),
        left,
        right,
    })
}

/// `D(λ)`: the log-branch coefficient at `a4` of the solution bounded at `a2`.
pub fn boundary_defect(cfg: &Configuration, lambda: f64, params: &SolverParams) -> Result<f64> {
    shoot(cfg, lambda, params).map(|s| s.defect())
}

/// Brent's method on a bracket with `f(a)·f(b) ≤ 0`.
pub fn brent<F>(f: F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, rtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootFinding(format!("[{a}, {b}] does not bracket a root")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rtol * b.abs().max(1.0);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::RootFinding("Brent iteration did not converge".into()))
}

/// Relative tolerance of the refined eigenvalues.
pub const ROOT_RTOL: f64 = 1e-15;

fn sign_changes(grid: &[f64], values: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            out.push((i, i));
        } else if values[i].signum() != values[i + 1].signum() && values[i + 1] != 0.0 {
            out.push((i, i + 1));
        }
    }
    if values[values.len() - 1] == 0.0 {
        out.push((grid.len() - 1, grid.len() - 1));
    }
    out
}

fn scan(cfg: &Configuration, lo: f64, hi: f64, step: f64, params: &SolverParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|i| lo + (hi - lo) * i as f64 / cells as f64).collect();
    let values = grid
        .par_iter()
        .map(|&l| boundary_defect(cfg, l, params))
        .collect::<Result<Vec<f64>>>()?;
    Ok((grid, values))
}

/// All eigenvalues in `[lo, hi]`, sorted ascending.
///
/// `D` is scanned with step `step`; the scan is repeated at half the step
/// until the number of sign changes stops growing, which separates close roots.
pub fn eigen_search(cfg: &Configuration, lo: f64, hi: f64, step: f64, params: &SolverParams) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad search range [{lo}, {hi}] with step {step}"
        )));
    }
    let mut h = step;
    let (mut grid, mut values) = scan(cfg, lo, hi, h, params)?;
    let mut brackets = sign_changes(&grid, &values);
    for _ in 0..6 {
        h *= 0.5;
        let (g2, v2) = scan(cfg, lo, hi, h, params)?;
        let b2 = sign_changes(&g2, &v2);
        let stable = b2.len() == brackets.len();
        grid = g2;
        values = v2;
        brackets = b2;
        if stable {
            break;
        }
    }
    let f = |l: f64| boundary_defect(cfg, l, params);
    let mut roots = brackets
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                Ok(grid[i])
            } else {
                brent(f, grid[i], grid[j], values[i], values[j], ROOT_RTOL)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * a.abs().max(1.0));
    for &r in &roots {
        check_simple(cfg, r, params)?;
    }
    Ok(roots)
}

/// Rejects a root where `D` is tangent to zero.
fn check_simple(cfg: &Configuration, lambda: f64, params: &SolverParams) -> Result<()> {
    let h = 1e-4 * lambda.abs().max(1.0);
    let dm = boundary_defect(cfg, lambda - h, params)?;
    let dp = boundary_defect(cfg, lambda + h, params)?;
    if dm.signum() == dp.signum() {
        return Err(Error::RootFinding(format!("tangential root of D near λ = {lambda}")));
    }
    Ok(())
}

/// The `count` eigenvalues of smallest magnitude, sorted ascending.
///
/// The symmetric range `[−Λ, Λ]` starts at `Λ = 64` and doubles until enough
/// roots are found.
pub fn first_eigenvalues(cfg: &Configuration, count: usize, params: &SolverParams) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut range = 64.0;
    loop {
        let roots = eigen_search(cfg, -range, range, 1.0, params)?;
        if roots.len() >= count {
            let mut by_size = roots;
            by_size.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
            by_size.truncate(count);
            by_size.sort_by(f64::total_cmp);
            return Ok(by_size);
        }
        range *= 2.0;
        if range > 1e7 {
            return Err(Error::RootFinding(format!(
                "found only {} eigenvalues in [−{range}, {range}]",
                roots.len()
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> Configuration {
        Configuration::default()
    }

    #[test]
    fn basis_self_consistency() {
        let c = cfg();
        let e = frobenius_coefficients(&c, 3.0, 2, Side::Left, 40).unwrap();
        let x = 6.0 - 0.15;
        let (c1, c2) = match_log_basis(&e, x, e.psi1(x), 1e8).unwrap();
        assert_relative_eq!(c1, 1.0, epsilon = 1e-9);
        assert!(c2.abs() < 1e-9);
        let (c1, c2) = match_log_basis(&e, x, e.psi2(x), 1e8).unwrap();
        assert!(c1.abs() < 1e-9);
        assert_relative_eq!(c2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn matching_is_independent_of_offset() {
        let c = cfg();
        let p = SolverParams::for_config(&c);
        let shot = shoot(&c, 12.0, &p).unwrap();
        let e = &shot.expansions[1];
        // propagate the left state further in and match again
        let inner =
            integrate_interior(&c, 12.0, 6.0 - 0.15, 6.0 - 0.075, shot.left.final_state, &p.propagation).unwrap();
        let near = match_log_basis(e, 6.0 - 0.075, inner.final_state, 1e8).unwrap();
        assert_relative_eq!(near.0, shot.coeffs[1].0, max_relative = 1e-7);
        assert_relative_eq!(near.1, shot.coeffs[1].1, max_relative = 1e-7);
    }

    #[test]
    fn defect_is_continuous() {
        let c = cfg();
        let p = SolverParams::for_config(&c);
        let d0 = boundary_defect(&c, 1.0, &p).unwrap();
        let d1 = boundary_defect(&c, 1.0 + 1e-7, &p).unwrap();
        assert!((d1 - d0).abs() < 1e-4 * d0.abs().max(1.0));
    }

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent(|x| Ok(x.cos()), 1.0, 2.0, 1f64.cos(), 2f64.cos(), 1e-14).unwrap();
        assert_relative_eq!(r, std::f64::consts::FRAC_PI_2, epsilon = 1e-13);
    }

    #[test]
    fn first_eigenvalues_are_simple_roots() {
        let c = cfg();
        let p = SolverParams::for_config(&c);
        let ev = first_eigenvalues(&c, 4, &p).unwrap();
        assert_eq!(ev.len(), 4);
        for w in ev.windows(2) {
            assert!(w[1] - w[0] > 1e-6);
        }
        for &l in &ev {
            let shot = shoot(&c, l, &p).unwrap();
            let scale = boundary_defect(&c, l + 1.0, &p).unwrap().abs();
            assert!(shot.defect().abs() <= 1e-8 * scale, "λ = {l}");
        }
    }

    #[test]
    fn rejects_oversized_eps() {
        let c = cfg();
        let mut p = SolverParams::for_config(&c);
        p.eps_match = 1.0;
        assert!(boundary_defect(&c, 0.0, &p).is_err());
    }
}
