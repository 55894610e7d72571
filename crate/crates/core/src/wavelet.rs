//! Orthonormal scaling functions by the cascade algorithm.
//!
//! Galerkin entries of the Hilbert kernel between two integer-shifted copies
//! of a scaling function `φ` only depend on the shift difference `s`:
//! `∫∫ φ(u) φ(v) / (π (s + u − v)) du dv = (H Φ)(s)` with `Φ` the
//! autocorrelation of `φ`. `Φ` is itself refinable, interpolatory
//! (`Φ(n) = δ_n0`), and smoother than `φ`, which is why the matrix entries are
//! computed through it.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sampled::SampledFunction;

/// Refinement coefficients `h_k`, normalized so that `Σ h_k = √2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Filter {
    pub name: String,
    pub h: Vec<f64>,
}

impl Filter {
    pub fn haar() -> Filter {
        Filter {
            name: "haar".into(),
            h: vec![SQRT_2 / 2.0, SQRT_2 / 2.0],
        }
    }

    /// Daubechies filter with two vanishing moments (support `[0, 3]`).
    pub fn daubechies2() -> Filter {
        let s3 = 3f64.sqrt();
        let d = 4.0 * SQRT_2;
        Filter {
            name: "db2".into(),
            h: vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d],
        }
    }

    pub fn by_name(name: &str) -> Result<Filter> {
        match name {
            "haar" | "db1" => Ok(Filter::haar()),
            "db2" => Ok(Filter::daubechies2()),
            other => Err(Error::InvalidArgument(format!("unknown filter {other:?}"))),
        }
    }

    /// Length of the support `[0, L − 1]`.
    pub fn support(&self) -> usize {
        self.h.len() - 1
    }

    /// Checks `Σ h = √2` and `Σ_k h_k h_{k+2m} = δ_m`.
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.h.iter().sum();
        if (sum - SQRT_2).abs() > 1e-10 {
            return Err(Error::InadmissibleFilter(format!("Σh = {sum}, expected √2")));
        }
        let n = self.h.len();
        for m in 0..n.div_ceil(2) {
            let dot: f64 = (0..n.saturating_sub(2 * m))
                .map(|k| self.h[k] * self.h[k + 2 * m])
                .sum();
            let expect = if m == 0 { 1.0 } else { 0.0 };
            if (dot - expect).abs() > 1e-10 {
                return Err(Error::InadmissibleFilter(format!(
                    "shift-{m} orthogonality defect {:.3e}",
                    dot - expect
                )));
            }
        }
        Ok(())
    }

    /// Coefficients `p_m = Σ_l h_l h_{l+m}` for `m = −(L−1) … L−1`.
    pub fn autocorrelation_coefficients(&self) -> Vec<f64> {
        let n = self.h.len() as isize;
        (-(n - 1)..n)
            .map(|m| {
                (0..n)
                    .filter(|&l| l + m >= 0 && l + m < n)
                    .map(|l| self.h[l as usize] * self.h[(l + m) as usize])
                    .sum()
            })
            .collect()
    }
}

/// Samples of a refinable function `f(x) = Σ_m c[m] f(2x − m − m0)`
/// on `[s0, s0 + c.len() − 1]` at spacing `2^−levels`, starting from its
/// integer values.
fn refine(c: &[f64], m0: isize, s0: isize, integer_values: &[f64], levels: u32) -> Vec<f64> {
    let span = (c.len() - 1) as isize;
    let mut vals = integer_values.to_vec();
    for j in 1..=levels {
        let n = (span << j) as usize + 1;
        let prev = vals;
        let step_prev = 1isize << (j - 1);
        let mut next = vec![0.0; n];
        for (i, out) in next.iter_mut().enumerate() {
            // x = s0 + i/2^j ; 2x − m = s0 + (s0 − m) + i/2^(j−1)
            let mut acc = 0.0;
            for (mi, &cm) in c.iter().enumerate() {
                let m = mi as isize + m0;
                let idx = (s0 - m) * step_prev + i as isize;
                if idx >= 0 && (idx as usize) < prev.len() {
                    acc += cm * prev[idx as usize];
                }
            }
            *out = acc;
        }
        vals = next;
    }
    vals
}

fn dyadic_samples(s0: f64, span: usize, levels: u32, values: Vec<f64>) -> SampledFunction {
    let h = (0.5f64).powi(levels as i32);
    let n = values.len();
    let nodes: Vec<f64> = (0..n).map(|i| s0 + h * i as f64).collect();
    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;
    let interval = (s0, s0 + span as f64);
    SampledFunction::scattered(interval, nodes, values, weights).expect("dyadic grid is valid")
}

/// `φ` sampled at resolution `2^−levels` over its support `[0, L − 1]`.
///
/// The support is taken half-open, so `φ(L − 1) = 0`; Haar yields `χ[0, 1)`.
pub fn cascade_scaling_function(filter: &Filter, levels: u32) -> Result<SampledFunction> {
    filter.validate()?;
    // c_k = √2 h_k, rescaled so that Σ c = 2 holds exactly
    let total: f64 = filter.h.iter().sum();
    let c: Vec<f64> = filter.h.iter().map(|h| 2.0 * h / total).collect();
    let span = filter.support();
    // φ(n) = Σ_j c_{2n−j} φ(j) for n = 0..L−2 is rank deficient by one; the
    // last equation is traded for Σ φ(n) = 1.
    let m = span;
    let mut a = DMatrix::<f64>::zeros(m, m);
    for n in 0..m - 1 {
        for j in 0..m {
            let k = 2 * n as isize - j as isize;
            if k >= 0 && (k as usize) < c.len() {
                a[(n, j)] = c[k as usize];
            }
        }
        a[(n, n)] -= 1.0;
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InadmissibleFilter("singular cascade eigenproblem".into()))?;
    let mut ints: Vec<f64> = sol.iter().copied().collect();
    ints.push(0.0);
    let vals = refine(&c, 0, 0, &ints, levels);
    Ok(dyadic_samples(0.0, span, levels, vals))
}

/// Autocorrelation `Φ(x) = ∫ φ(y) φ(y − x) dy` on `[−(L−1), L−1]`.
pub fn autocorrelation(filter: &Filter, levels: u32) -> Result<SampledFunction> {
    filter.validate()?;
    let p = filter.autocorrelation_coefficients();
    let span = filter.support();
    let mut ints = vec![0.0; 2 * span + 1];
    ints[span] = 1.0;
    let vals = refine(&p, -(span as isize), -(span as isize), &ints, levels);
    Ok(dyadic_samples(-(span as f64), 2 * span, levels, vals))
}

/// Exact Hilbert transform of the continuous piecewise-linear interpolant of
/// `f`, which must vanish at both ends of its grid.
///
/// Integrating by parts, `(1/π) ∫ f(y)/(x − y) dy = (1/π) Σ_j Δβ_j (x − y_j) ln|x − y_j|`
/// where `Δβ_j` is the slope jump at knot `y_j`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearHilbert {
    knots: Vec<f64>,
    jumps: Vec<f64>,
}

impl PiecewiseLinearHilbert {
    pub fn new(f: &SampledFunction) -> PiecewiseLinearHilbert {
        let n = f.nodes.len();
        let slope = |j: usize| (f.values[j + 1] - f.values[j]) / (f.nodes[j + 1] - f.nodes[j]);
        let mut knots = Vec::with_capacity(n);
        let mut jumps = Vec::with_capacity(n);
        for j in 0..n {
            let right = if j + 1 < n { slope(j) } else { 0.0 };
            let left = if j > 0 { slope(j - 1) } else { 0.0 };
            let d = right - left;
            if d != 0.0 {
                knots.push(f.nodes[j]);
                jumps.push(d);
            }
        }
        PiecewiseLinearHilbert { knots, jumps }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let s: f64 = self
            .knots
            .iter()
            .zip(&self.jumps)
            .map(|(&y, &d)| {
                let z = x - y;
                if z == 0.0 {
                    0.0
                } else {
                    d * z * z.abs().ln()
                }
            })
            .sum();
        s / PI
    }
}
