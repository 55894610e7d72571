//! Normalized eigenfunctions and the differential operator `L`.

use serde::{Deserialize, Serialize};

use super::series::{log_coefficients, FrobeniusExpansion, Jet};
use super::shooting::{shoot, SolverParams};
use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::hilbert::object_rule;
use crate::quadrature::QuadratureOptions;
use crate::sampled::SampledFunction;

/// An eigenfunction of `L_S` on `(a2, a4)`, stored piecewise: Frobenius series
/// within `eps` of `a2, a3, a4` and Taylor segments in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseEigenfunction {
    pub cfg: Configuration,
    pub lambda: f64,
    pub eps: f64,
    /// Expansions at `a2⁺, a3⁻, a3⁺, a4⁻`.
    pub expansions: [FrobeniusExpansion; 4],
    /// Basis coefficients at each expansion, already normalized.
    pub coeffs: [(f64, f64); 4],
    /// `(ℓ11, ℓ21)` at `a3`, normalized.
    pub log_coeffs: (f64, f64),
    left: super::propagate::Trajectory,
    right: super::propagate::Trajectory,
    /// Multiplier applied to the raw shot.
    pub scale: f64,
    /// `‖ψ‖` on `(a2, a4)` after normalization.
    pub norm: f64,
    /// Samples on the graded object rule.
    pub interior_samples: SampledFunction,
}

impl PiecewiseEigenfunction {
    /// Value, first and second derivative at `x ∈ (a2, a4)`, `x ≠ a3`.
    pub fn jet(&self, x: f64) -> Result<Jet> {
        let [a1, a2, a3, a4] = self.cfg.endpoints();
        let _ = a1;
        if !(x >= a2 && x <= a4) {
            return Ok(Jet {
                value: 0.0,
                first: 0.0,
                second: 0.0,
            });
        }
        if x == a3 {
            return Err(Error::SingularPoint { point: x });
        }
        let e = self.eps;
        let series = |i: usize| {
            let (c1, c2) = self.coeffs[i];
            let j = self.expansions[i].jet(c1, c2, x);
            Jet {
                value: self.scale * j.value,
                first: self.scale * j.first,
                second: self.scale * j.second,
            }
        };
        let traj = |t: &super::propagate::Trajectory| {
            let (f, df, d2f) = t.jet(x).expect("point inside trajectory");
            Jet {
                value: self.scale * f,
                first: self.scale * df,
                second: self.scale * d2f,
            }
        };
        Ok(if x <= a2 + e {
            if x == a2 {
                let (c1, _) = self.coeffs[0];
                Jet {
                    value: self.scale * c1,
                    first: self.scale * c1 * self.expansions[0].b[1],
                    second: 0.0,
                }
            } else {
                series(0)
            }
        } else if x < a3 - e {
            traj(&self.left)
        } else if x < a3 {
            series(1)
        } else if x <= a3 + e {
            series(2)
        } else if x < a4 - e {
            traj(&self.right)
        } else if x == a4 {
            let (l1, _) = log_coefficients(&self.expansions[3], self.coeffs[3].0, self.coeffs[3].1);
            Jet {
                value: self.scale * l1,
                first: f64::NAN,
                second: f64::NAN,
            }
        } else {
            series(3)
        })
    }

    /// `ψ(x)`, zero outside `[a2, a4]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.jet(x).map(|j| j.value)
    }

    /// `(L ψ)(x)` from the analytic derivatives of the local representation.
    pub fn apply_l(&self, x: f64) -> Result<f64> {
        let j = self.jet(x)?;
        Ok(apply_l_jet(&self.cfg, x, j))
    }

    /// The eigenfunction sampled on `rule`-style nodes of another function.
    pub fn resample(&self, like: &SampledFunction) -> Result<SampledFunction> {
        let values = like.nodes.iter().map(|&x| self.eval(x)).collect::<Result<Vec<f64>>>()?;
        Ok(like.with_values(values).with_log_points(&[self.cfg.a3()]))
    }
}

/// `P ψ″ + P′ ψ′ + 2 (x − σ)² ψ`.
pub fn apply_l_jet(cfg: &Configuration, x: f64, j: Jet) -> f64 {
    let s = x - cfg.sigma();
    cfg.eval_p(x) * j.second + cfg.eval_dp(x) * j.first + 2.0 * s * s * j.value
}

/// Sixth-order central differences `(f, f′, f″)` at `x` with spacing `h`.
pub fn fd_jet<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> Jet {
    let v: Vec<f64> = (-3..=3).map(|k| f(x + k as f64 * h)).collect();
    let first = (-v[0] + 9.0 * v[1] - 45.0 * v[2] + 45.0 * v[4] - 9.0 * v[5] + v[6]) / (60.0 * h);
    let second = (2.0 * v[0] - 27.0 * v[1] + 270.0 * v[2] - 490.0 * v[3] + 270.0 * v[4] - 27.0 * v[5] + 2.0 * v[6])
        / (180.0 * h * h);
    Jet {
        value: v[3],
        first,
        second,
    }
}

/// `(L f)(x)` for a smooth sampled `f`, by finite differences of its interpolant.
///
/// `x` must be at least `min_distance` from every endpoint.
pub fn apply_l_sampled(cfg: &Configuration, f: &SampledFunction, x: f64, min_distance: f64) -> Result<f64> {
    let d = cfg.distance_to_endpoints(x);
    if d < min_distance {
        return Err(Error::InvalidArgument(format!(
            "x = {x} is within {min_distance} of an endpoint"
        )));
    }
    if x - 3.0 * fd_spacing(d) < f.lo() || x + 3.0 * fd_spacing(d) > f.hi() {
        return Err(Error::InvalidArgument(format!(
            "stencil at x = {x} leaves the sampled interval"
        )));
    }
    let j = fd_jet(|y| f.eval(y), x, fd_spacing(d));
    Ok(apply_l_jet(cfg, x, j))
}

/// Stencil spacing for a point at distance `d` from the nearest singularity.
pub fn fd_spacing(d: f64) -> f64 {
    (d / 20.0).min(5e-3)
}

/// Shoots at `λ`, stores the solution and normalizes it to unit `L²(a2, a4)` norm
/// with `ψ(a2) > 0`.
pub fn assemble_eigenfunction(
    cfg: &Configuration,
    lambda: f64,
    params: &SolverParams,
    quad: &QuadratureOptions,
) -> Result<PiecewiseEigenfunction> {
    let shot = shoot(cfg, lambda, params)?;
    let rule = object_rule(cfg, quad);
    let mut ef = PiecewiseEigenfunction {
        cfg: *cfg,
        lambda,
        eps: shot.eps,
        expansions: shot.expansions,
        coeffs: shot.coeffs,
        log_coeffs: shot.log_coeffs,
        left: shot.left,
        right: shot.right,
        scale: 1.0,
        norm: 1.0,
        interior_samples: SampledFunction::from_rule(&rule, |_| 0.0),
    };
    let raw = ef.resample(&ef.interior_samples)?;
    let norm = raw.norm();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NonFinite(format!("eigenfunction norm at λ = {lambda}")));
    }
    // ψ(a2) = scale · c1 with c1 = 1, so a positive scale fixes the sign
    ef.scale = 1.0 / norm;
    ef.log_coeffs = (shot.log_coeffs.0 * ef.scale, shot.log_coeffs.1 * ef.scale);
    ef.interior_samples = raw.scaled(ef.scale);
    ef.norm = ef.interior_samples.norm();
    Ok(ef)
}
