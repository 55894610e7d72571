//! Cross-checks between the matrix route and the Sturm–Liouville route.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, Side};
use crate::hilbert::{apply_ht, apply_ht_adjoint, measurement_rule, object_rule, pv_hilbert};
use crate::quadrature::{gauss_legendre, CompositeRule, QuadratureOptions};
use crate::sampled::SampledFunction;
use crate::sturm::eigenfunction::fd_spacing;
use crate::sturm::{apply_l_jet, fd_jet, PiecewiseEigenfunction};

/// One measured quantity and the bound it is held to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` when the metric must stay at or below the threshold.
    pub upper_bound: bool,
    pub passed: bool,
}

impl Metric {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            upper_bound: true,
            passed: value.is_finite() && value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            upper_bound: false,
            passed: value.is_finite() && value >= threshold,
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs_digest: String,
    pub metrics: Vec<Metric>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new<T: Serialize>(check: &str, inputs: &T, metrics: Vec<Metric>, notes: Vec<String>) -> Self {
        let passed = metrics.iter().all(|m| m.passed);
        Self {
            check: check.into(),
            inputs_digest: digest(inputs),
            metrics,
            passed,
            notes,
        }
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// SHA-256 of the JSON serialization, hex encoded.
pub fn digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `n` points spread over `(a1, a2) ∪ (a2, a3)`, each at least `margin` from `a1, a2, a3`.
pub fn test_points(cfg: &Configuration, n: usize, margin: f64) -> Vec<f64> {
    let left = (cfg.a1() + margin, cfg.a2() - margin);
    let right = (cfg.a2() + margin, cfg.a3() - margin);
    let len_l = (left.1 - left.0).max(0.0);
    let len_r = (right.1 - right.0).max(0.0);
    let n_l = ((n as f64) * len_l / (len_l + len_r)).round().max(1.0) as usize;
    let n_r = n.saturating_sub(n_l).max(1);
    let spread = |(lo, hi): (f64, f64), k: usize| -> Vec<f64> {
        (0..k)
            .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / k as f64)
            .collect::<Vec<_>>()
    };
    let mut pts = spread(left, n_l);
    pts.extend(spread(right, n_r));
    pts
}

/// `L_x` applied to `x ↦ pv_hilbert(f, x)`, by finite differences.
fn l_of_transform(cfg: &Configuration, f: &SampledFunction, x: f64) -> Result<f64> {
    let h = fd_spacing(cfg.distance_to_endpoints(x));
    let vals = (-3..=3)
        .map(|k| pv_hilbert(f, x + k as f64 * h))
        .collect::<Result<Vec<f64>>>()?;
    let j = fd_jet(|y| vals[(((y - x) / h).round() as i64 + 3) as usize], x, h);
    Ok(apply_l_jet(cfg, x, j))
}

/// Largest `|lhs − rhs|` divided by the largest `|lhs|`.
fn relative_discrepancy(lhs: &[f64], rhs: &[f64]) -> f64 {
    let scale = lhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = lhs.iter().zip(rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    diff / scale
}

/// Both sides of `H_T L f = L H_T f` at the given points, from samples of `f`
/// and `L f` on the same nodes in `[a2, a4]`.
pub fn commutation_sides(
    cfg: &Configuration,
    f: &SampledFunction,
    lf: &SampledFunction,
    points: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lhs = points
        .par_iter()
        .map(|&x| pv_hilbert(lf, x))
        .collect::<Result<Vec<f64>>>()?;
    let rhs = points
        .par_iter()
        .map(|&x| l_of_transform(cfg, f, x))
        .collect::<Result<Vec<f64>>>()?;
    Ok((lhs, rhs))
}

fn check_points(cfg: &Configuration, points: &[f64], margin: f64) -> Result<()> {
    for &x in points {
        let inside = (x > cfg.a1() && x < cfg.a2()) || (x > cfg.a2() && x < cfg.a3());
        let far = [cfg.a1(), cfg.a2(), cfg.a3()].iter().all(|a| (x - a).abs() >= margin);
        if !inside || !far {
            return Err(Error::InvalidArgument(format!(
                "test point {x} must lie in (a1, a2) ∪ (a2, a3) at distance ≥ {margin} from a1, a2, a3"
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CommutationInputs<'a> {
    cfg: &'a Configuration,
    lambda: f64,
    points: &'a [f64],
}

/// Commutation check for an eigenfunction: reports the relative discrepancy on
/// all points and on those in `(a1, a2)` alone.
pub fn check_commutation(
    cfg: &Configuration,
    psi: &PiecewiseEigenfunction,
    points: &[f64],
    margin: f64,
    threshold: f64,
) -> Result<VerificationReport> {
    check_points(cfg, points, margin)?;
    let f = &psi.interior_samples;
    let lf_vals = f.nodes.iter().map(|&y| psi.apply_l(y)).collect::<Result<Vec<f64>>>()?;
    let lf = f.with_values(lf_vals);
    let (lhs, rhs) = commutation_sides(cfg, f, &lf, points)?;
    let all = relative_discrepancy(&lhs, &rhs);
    let (l_out, r_out): (Vec<f64>, Vec<f64>) = points
        .iter()
        .zip(lhs.iter().zip(&rhs))
        .filter(|(x, _)| **x < cfg.a2())
        .map(|(_, (a, b))| (*a, *b))
        .unzip();
    let mut metrics = vec![Metric::at_most("max_relative_discrepancy", all, threshold)];
    if !l_out.is_empty() {
        metrics.push(Metric::at_most(
            "outside_overlap_discrepancy",
            relative_discrepancy(&l_out, &r_out),
            1e-6,
        ));
    }
    let inputs = CommutationInputs {
        cfg,
        lambda: psi.lambda,
        points,
    };
    Ok(VerificationReport::new(
        "commutation",
        &inputs,
        metrics,
        vec![format!("λ = {}", psi.lambda)],
    ))
}

/// Relative discrepancy of the commutation identity for a callable `f` on `[a2, a4]`,
/// with `L f` from finite differences of `f`.
pub fn commutation_discrepancy_fn<F>(cfg: &Configuration, f: F, points: &[f64], quad: &QuadratureOptions) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let rule = object_rule(cfg, quad);
    let fs = SampledFunction::from_rule(&rule, &f);
    let lf = SampledFunction::from_rule(&rule, |y| apply_l_jet(cfg, y, fd_jet(&f, y, 1e-3)));
    let (lhs, rhs) = commutation_sides(cfg, &fs, &lf, points)?;
    Ok(relative_discrepancy(&lhs, &rhs))
}

/// Relative commutation discrepancy for `ψ` cut off at `a3`, which leaves the
/// domain of `L_S` and so must break the identity.
pub fn truncated_commutation_discrepancy(
    cfg: &Configuration,
    psi: &PiecewiseEigenfunction,
    points: &[f64],
    quad: &QuadratureOptions,
) -> Result<f64> {
    let rule = CompositeRule::graded(&[cfg.a2(), cfg.a3()], quad);
    let zero = SampledFunction::from_rule(&rule, |_| 0.0);
    let f = zero.with_values(rule.nodes.iter().map(|&y| psi.eval(y)).collect::<Result<Vec<f64>>>()?);
    let lf = zero.with_values(
        rule.nodes
            .iter()
            .map(|&y| psi.apply_l(y))
            .collect::<Result<Vec<f64>>>()?,
    );
    let (lhs, rhs) = commutation_sides(cfg, &f, &lf, points)?;
    Ok(relative_discrepancy(&lhs, &rhs))
}

/// Singular triple obtained from one eigenfunction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlSingularTriple {
    pub lambda: f64,
    pub sigma: f64,
    pub f: SampledFunction,
    /// `H_T f / σ`; absent when `σ` is below the quadrature noise floor.
    pub g: Option<SampledFunction>,
    pub adjoint_residual: Option<f64>,
}

/// Singular system built from eigenfunctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlSingularSystem {
    pub triples: Vec<SlSingularTriple>,
    pub gram_deviation: f64,
    pub report: VerificationReport,
}

/// Below this `‖H_T f‖` is treated as quadrature noise.
pub const SIGMA_FLOOR: f64 = 1e-14;

/// Quadrature for the three stages of the eigenfunction route.
///
/// Each stage is sampled on a rule graded less finely than its input, so no
/// evaluation point falls inside the innermost panel of the function being
/// transformed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedRules {
    /// Eigenfunction samples on `[a2, a4]`.
    pub object: QuadratureOptions,
    /// `g_n` samples on `[a1, a3]`.
    pub measurement: QuadratureOptions,
    /// Points where `H_T* g_n − σ_n f_n` is measured.
    pub residual: QuadratureOptions,
}

impl Default for NestedRules {
    fn default() -> Self {
        let object = QuadratureOptions {
            order: 24,
            ratio: 0.2,
            floor: 1e-14,
            max_panel: 0.125,
        };
        Self {
            object,
            measurement: QuadratureOptions { floor: 1e-10, ..object },
            residual: QuadratureOptions { floor: 1e-7, ..object },
        }
    }
}

/// `σ_n = ‖H_T f_n‖`, `g_n = H_T f_n / σ_n`, the Gram deviation of `{g_n}`
/// and the residuals `‖H_T* g_n − σ_n f_n‖`.
pub fn svd_from_sl(
    cfg: &Configuration,
    eigenfunctions: &[PiecewiseEigenfunction],
    rules: &NestedRules,
) -> Result<SlSingularSystem> {
    let meas = SampledFunction::from_rule(&measurement_rule(cfg, &rules.measurement), |_| 0.0)
        .with_log_points(&[cfg.a2(), cfg.a3()]);
    let out = SampledFunction::from_rule(&object_rule(cfg, &rules.residual), |_| 0.0);
    let mut triples = Vec::with_capacity(eigenfunctions.len());
    let mut notes = Vec::new();
    for ef in eigenfunctions {
        let f = &ef.interior_samples;
        let hf = apply_ht(f, cfg, &meas)?;
        let sigma = hf.norm();
        if sigma < SIGMA_FLOOR {
            notes.push(format!("σ at λ = {} is below the noise floor", ef.lambda));
            triples.push(SlSingularTriple {
                lambda: ef.lambda,
                sigma,
                f: f.clone(),
                g: None,
                adjoint_residual: None,
            });
            continue;
        }
        let g = hf.scaled(1.0 / sigma);
        let back = apply_ht_adjoint(&g, cfg, &out)?;
        let target = ef.resample(&out)?;
        let resid = back.with_values(
            back.values
                .iter()
                .zip(&target.values)
                .map(|(b, v)| b - sigma * v)
                .collect(),
        );
        triples.push(SlSingularTriple {
            lambda: ef.lambda,
            sigma,
            f: f.clone(),
            g: Some(g),
            adjoint_residual: Some(resid.norm()),
        });
    }
    let gs: Vec<&SampledFunction> = triples.iter().filter_map(|t| t.g.as_ref()).collect();
    let mut gram_deviation = 0.0f64;
    for (m, a) in gs.iter().enumerate() {
        for (n, b) in gs.iter().enumerate() {
            let expect = if m == n { 1.0 } else { 0.0 };
            gram_deviation = gram_deviation.max((a.inner(b) - expect).abs());
        }
    }
    let worst_adjoint = triples.iter().filter_map(|t| t.adjoint_residual).fold(0.0f64, f64::max);
    let sigma_max = triples.iter().map(|t| t.sigma).fold(0.0f64, f64::max);
    let sigma_min = triples.iter().map(|t| t.sigma).fold(f64::INFINITY, f64::min);
    let metrics = vec![
        Metric::at_most("gram_deviation", gram_deviation, 1e-6),
        Metric::at_most("adjoint_residual", worst_adjoint, 1e-5),
        Metric::at_most("sigma_max", sigma_max, 1.0),
        Metric::at_least("sigma_min", sigma_min, 0.0),
    ];
    let lambdas: Vec<f64> = eigenfunctions.iter().map(|e| e.lambda).collect();
    let report = VerificationReport::new("svd_from_sl", &(cfg, &lambdas, rules), metrics, notes);
    Ok(SlSingularSystem {
        triples,
        gram_deviation,
        report,
    })
}

/// Eigen-relation of `g = H_T f / σ` under `L`: the largest `|L g − λ g|`
/// relative to the largest `|λ g|` over the points.
pub fn gn_eigen_residual(
    cfg: &Configuration,
    f: &SampledFunction,
    sigma: f64,
    lambda: f64,
    points: &[f64],
) -> Result<f64> {
    let lg = points
        .par_iter()
        .map(|&x| l_of_transform(cfg, f, x).map(|v| v / sigma))
        .collect::<Result<Vec<f64>>>()?;
    let g = points
        .par_iter()
        .map(|&x| pv_hilbert(f, x).map(|v| lambda * v / sigma))
        .collect::<Result<Vec<f64>>>()?;
    Ok(relative_discrepancy(&g, &lg))
}

/// Report form of [`gn_eigen_residual`].
pub fn check_gn_eigen(
    cfg: &Configuration,
    triple: &SlSingularTriple,
    points: &[f64],
    margin: f64,
    threshold: f64,
) -> Result<VerificationReport> {
    check_points(cfg, points, margin)?;
    let r = gn_eigen_residual(cfg, &triple.f, triple.sigma, triple.lambda, points)?;
    Ok(VerificationReport::new(
        "gn_eigen",
        &(cfg, triple.lambda, points),
        vec![Metric::at_most("relative_residual", r, threshold)],
        vec![format!("λ = {}", triple.lambda)],
    ))
}

/// Least-squares fit `f(anchor ± t) ≈ c1 + c2 ln t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub c1: f64,
    pub c2: f64,
    /// `‖residual‖₂ / ‖samples‖₂`.
    pub residual: f64,
    pub samples: usize,
}

/// Fits samples with `anchor + side·t`, `t ∈ [t_min, t_max]`.
pub fn log_singularity_fit(
    positions: &[f64],
    values: &[f64],
    anchor: f64,
    side: Side,
    window: (f64, f64),
) -> Result<LogFit> {
    let (t_min, t_max) = window;
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::InvalidArgument(format!("bad fit window [{t_min}, {t_max}]")));
    }
    let pts: Vec<(f64, f64)> = positions
        .iter()
        .zip(values)
        .filter_map(|(&x, &v)| {
            let t = side.sign() * (x - anchor);
            (t >= t_min && t <= t_max).then_some((t.ln(), v))
        })
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewSamples {
            needed: 4,
            got: pts.len(),
        });
    }
    let a = DMatrix::from_fn(pts.len(), 2, |r, c| if c == 0 { 1.0 } else { pts[r].0 });
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let c = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let r = &a * &c - &y;
    Ok(LogFit {
        c1: c[0],
        c2: c[1],
        residual: r.norm() / y.norm(),
        samples: pts.len(),
    })
}

/// Outcome of the norm-accumulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulation {
    pub scales: Vec<f64>,
    pub residuals: Vec<f64>,
    pub norms: Vec<f64>,
    pub slope: f64,
}

/// Unit-norm even bump with two vanishing moments on `[−1, 1]`.
pub fn base_bump(x: f64) -> f64 {
    if x.abs() > 1.0 {
        0.0
    } else {
        (5.0f64 / 8.0).sqrt() * (3.0 * x * x - 1.0)
    }
}

/// Gauss rule on `(−∞, end]` (`dir = −1`) or `[end, ∞)` (`dir = 1`) via `y = end + dir (1/u − 1)`.
fn tail_rule(end: f64, dir: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let base = CompositeRule::uniform(0.0, 1.0, panels, order);
    let mut nodes = Vec::with_capacity(base.len());
    let mut weights = Vec::with_capacity(base.len());
    for (&u, &w) in base.nodes.iter().zip(&base.weights) {
        nodes.push(end + dir * (1.0 / u - 1.0));
        weights.push(w / (u * u));
    }
    (nodes, weights)
}

/// `r(a) = ‖(I − H_T* H_T) ψ_a‖²` for `ψ_a(x) = √a ψ(a (x − c))`, `c = (a2 + a3)/2`,
/// and the least-squares slope of `ln r` against `ln a`.
///
/// Since `H² = −I`, `(I − H_T* H_T) ψ_a = −χ[a2,a4] H ((1 − χ[a1,a3]) H ψ_a)`, which
/// only involves `H ψ_a` away from its support.
pub fn accumulation_experiment(cfg: &Configuration, scales: &[f64], quad: &QuadratureOptions) -> Result<Accumulation> {
    let min_scale = 2.0 / (cfg.a3() - cfg.a2());
    if scales.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: scales.len(),
        });
    }
    if let Some(a) = scales.iter().find(|&&a| !(a > min_scale)) {
        return Err(Error::InvalidArgument(format!(
            "scale {a} puts the bump outside (a2, a3); need a > {min_scale}"
        )));
    }
    let c = 0.5 * (cfg.a2() + cfg.a3());
    let (gx, gw) = gauss_legendre(24);
    let out = object_rule(cfg, quad);
    let span = cfg.a4() - cfg.a1();
    let far = cfg.a4() + span;
    let near_rule = CompositeRule::uniform(cfg.a3(), far, 64, 16);
    let (lt_nodes, lt_weights) = tail_rule(cfg.a1(), -1.0, 32, 16);
    let (rt_nodes, rt_weights) = tail_rule(far, 1.0, 32, 16);

    let mut residuals = Vec::with_capacity(scales.len());
    let mut norms = Vec::with_capacity(scales.len());
    for &a in scales {
        let lo = c - 1.0 / a;
        let half = 1.0 / a;
        // ψ_a on its support, exact for the quadratic bump
        let bump_nodes: Vec<f64> = gx.iter().map(|&u| c + half * u).collect();
        let bump_w: Vec<f64> = gw.iter().map(|&w| half * w).collect();
        let bump_v: Vec<f64> = bump_nodes.iter().map(|&x| a.sqrt() * base_bump(a * (x - c))).collect();
        let norm = bump_v.iter().zip(&bump_w).map(|(v, w)| v * v * w).sum::<f64>().sqrt();
        norms.push(norm);
        let _ = lo;
        // H ψ_a at a point outside its support
        let h_bump = |y: f64| -> f64 {
            bump_nodes
                .iter()
                .zip(&bump_v)
                .zip(&bump_w)
                .map(|((&s, &v), &w)| w * v / (y - s))
                .sum::<f64>()
                / PI
        };
        let w_near = SampledFunction::from_rule(&near_rule, h_bump);
        let lt_vals: Vec<f64> = lt_nodes.iter().map(|&y| h_bump(y)).collect();
        let rt_vals: Vec<f64> = rt_nodes.iter().map(|&y| h_bump(y)).collect();
        let hw = out
            .nodes
            .par_iter()
            .map(|&x| {
                let tail = |nodes: &[f64], vals: &[f64], weights: &[f64]| -> f64 {
                    nodes
                        .iter()
                        .zip(vals)
                        .zip(weights)
                        .map(|((&y, &v), &w)| w * v / (x - y))
                        .sum::<f64>()
                        / PI
                };
                let near = if x == cfg.a3() {
                    Err(Error::SingularPoint { point: x })
                } else {
                    pv_hilbert(&w_near, x)
                }?;
                Ok(near + tail(&lt_nodes, &lt_vals, &lt_weights) + tail(&rt_nodes, &rt_vals, &rt_weights))
            })
            .collect::<Result<Vec<f64>>>()?;
        let r: f64 = hw.iter().zip(&out.weights).map(|(v, w)| v * v * w).sum();
        residuals.push(r);
    }
    let xs: Vec<f64> = scales.iter().map(|a| a.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(Accumulation {
        scales: scales.to_vec(),
        residuals,
        norms,
        slope: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sturm::{assemble_eigenfunction, first_eigenvalues, SolverParams};
    use approx::assert_relative_eq;

    fn cfg() -> Configuration {
        Configuration::default()
    }

    fn eigenfunctions(k: usize) -> Vec<PiecewiseEigenfunction> {
        let c = cfg();
        let p = SolverParams::for_config(&c);
        let q = NestedRules::default().object;
        first_eigenvalues(&c, k, &p)
            .unwrap()
            .into_iter()
            .map(|l| assemble_eigenfunction(&c, l, &p, &q).unwrap())
            .collect()
    }

    #[test]
    fn log_fit_recovers_exact_data() {
        let xs: Vec<f64> = (1..200).map(|i| 1.5 + 0.004 * i as f64).collect();
        let vs: Vec<f64> = xs.iter().map(|x| 0.3 - 1.7 * (x - 1.5f64).ln()).collect();
        let fit = log_singularity_fit(&xs, &vs, 1.5, Side::Right, (0.01, 0.8)).unwrap();
        assert_relative_eq!(fit.c1, 0.3, epsilon = 1e-12);
        assert_relative_eq!(fit.c2, -1.7, epsilon = 1e-12);
        assert!(fit.residual < 1e-13);
    }

    #[test]
    fn log_fit_of_constant_has_no_log_term() {
        let xs: Vec<f64> = (1..100).map(|i| 2.0 - 0.01 * i as f64).collect();
        let vs = vec![4.0; xs.len()];
        let fit = log_singularity_fit(&xs, &vs, 2.0, Side::Left, (0.005, 0.9)).unwrap();
        assert!(fit.c2.abs() < 1e-12);
        assert!(matches!(
            log_singularity_fit(&xs[..3], &vs[..3], 2.0, Side::Left, (0.005, 0.9)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn test_points_respect_margin() {
        let c = cfg();
        let pts = test_points(&c, 20, 0.15);
        assert_eq!(pts.len(), 20);
        assert!(check_points(&c, &pts, 0.15).is_ok());
        assert!(check_points(&c, &[1.4], 0.15).is_err());
    }

    #[test]
    fn commutation_holds_for_an_eigenfunction() {
        let c = cfg();
        let ef = &eigenfunctions(1)[0];
        let pts = test_points(&c, 20, 0.15);
        let rep = check_commutation(&c, ef, &pts, 0.15, 1e-4).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn truncation_breaks_commutation() {
        let c = cfg();
        let ef = &eigenfunctions(1)[0];
        let pts = test_points(&c, 20, 0.15);
        let d = truncated_commutation_discrepancy(&c, ef, &pts, &QuadratureOptions::default()).unwrap();
        assert!(d > 1e-2, "discrepancy {d}");
    }

    #[test]
    fn singular_triples_are_consistent() {
        let c = cfg();
        let efs = eigenfunctions(4);
        let sys = svd_from_sl(&c, &efs, &NestedRules::default()).unwrap();
        assert!(sys.report.passed, "{:?}", sys.report);
        for t in &sys.triples {
            assert!(t.sigma > 0.0 && t.sigma < 1.0);
        }
    }

    #[test]
    fn gn_eigen_relation_and_negative_control() {
        let c = cfg();
        let efs = eigenfunctions(2);
        let sys = svd_from_sl(&c, &efs, &NestedRules::default()).unwrap();
        let pts = test_points(&c, 12, 0.15);
        let t = &sys.triples[1];
        let good = gn_eigen_residual(&c, &t.f, t.sigma, t.lambda, &pts).unwrap();
        assert!(good < 1e-4, "residual {good}");
        let bad = gn_eigen_residual(&c, &t.f, t.sigma, t.lambda + 5.0, &pts).unwrap();
        assert!(bad > 1e-2, "residual {bad}");
    }

    #[test]
    fn bump_has_unit_norm_and_vanishing_moments() {
        let (x, w) = gauss_legendre(8);
        let m = |k: i32| {
            x.iter()
                .zip(&w)
                .map(|(&x, &w)| w * base_bump(x) * x.powi(k))
                .sum::<f64>()
        };
        assert!(m(0).abs() < 1e-15);
        assert!(m(1).abs() < 1e-15);
        let n: f64 = x.iter().zip(&w).map(|(&x, &w)| w * base_bump(x).powi(2)).sum();
        assert_relative_eq!(n, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn accumulation_rejects_small_scales() {
        let c = cfg();
        assert!(accumulation_experiment(&c, &[0.3, 1.0], &QuadratureOptions::default()).is_err());
    }
}
