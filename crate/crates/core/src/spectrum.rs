//! Dense SVD of an [`OperatorMatrix`] and spectral diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::discretization::{AxisMeta, OperatorMatrix};
use crate::error::{Error, Result};

/// Descending singular values with paired vectors: `A v_n = σ_n u_n`.
#[derive(Debug, Clone)]
pub struct SingularSystem {
    pub sigmas: Vec<f64>,
    /// Columns are the measurement-side vectors `u_n` (row basis, `g_n`).
    pub left: DMatrix<f64>,
    /// Columns are the object-side vectors `v_n` (column basis, `f_n`).
    pub right: DMatrix<f64>,
    pub rows: AxisMeta,
    pub cols: AxisMeta,
}

/// Full SVD, sorted descending; each right vector has its largest-magnitude
/// entry positive.
pub fn compute_svd(m: &OperatorMatrix) -> Result<SingularSystem> {
    svd_of(&m.entries, m.rows.clone(), m.cols.clone())
}

pub fn svd_of(a: &DMatrix<f64>, rows: AxisMeta, cols: AxisMeta) -> Result<SingularSystem> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let (u, v, s) = augmented_svd(a)?;
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));
    let mut left = DMatrix::<f64>::zeros(a.nrows(), k);
    let mut right = DMatrix::<f64>::zeros(a.ncols(), k);
    let mut sigmas = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let mut best = 0;
        for i in 0..v.nrows() {
            if v[(i, src)].abs() > v[(best, src)].abs() {
                best = i;
            }
        }
        let sign = if v[(best, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..v.nrows() {
            right[(i, dst)] = sign * v[(i, src)];
        }
        for i in 0..u.nrows() {
            left[(i, dst)] = sign * u[(i, src)];
        }
        sigmas.push(s[src].max(0.0));
    }
    Ok(SingularSystem {
        sigmas,
        left,
        right,
        rows,
        cols,
    })
}

/// Thin SVD from the symmetric eigenproblem of `[[0, A], [Aᵀ, 0]]`.
///
/// The eigenvalues are `±σ` with eigenvectors `(u, ±v)/√2`. Pairs with
/// `σ ≈ 0` mix across the sign, so both blocks are re-orthonormalized in
/// descending order, which only rescales the well-separated columns.
fn augmented_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut b = DMatrix::<f64>::zeros(m + n, m + n);
    b.view_mut((0, m), (m, n)).copy_from(a);
    b.view_mut((m, 0), (n, m)).copy_from(&a.transpose());
    let eig = nalgebra::SymmetricEigen::try_new(b, f64::EPSILON, 0).ok_or(Error::SvdFailed)?;
    let mut order: Vec<usize> = (0..m + n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    order.truncate(k);
    let u = DMatrix::from_fn(m, k, |r, c| eig.eigenvectors[(r, order[c])]);
    let v = DMatrix::from_fn(n, k, |r, c| eig.eigenvectors[(m + r, order[c])]);
    let s = DVector::from_iterator(k, order.iter().map(|&i| eig.eigenvalues[i]));
    Ok((orthonormalize(u), orthonormalize(v), s))
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    let qr = x.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

impl SingularSystem {
    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn right_vector(&self, n: usize) -> Vec<f64> {
        self.right.column(n).iter().copied().collect()
    }

    pub fn left_vector(&self, n: usize) -> Vec<f64> {
        self.left.column(n).iter().copied().collect()
    }

    /// `f_n` as function values: the unit vector divided by `√weight`.
    pub fn right_function(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let s = self.cols.weight().sqrt();
        (
            self.cols.positions(),
            self.right.column(n).iter().map(|v| v / s).collect(),
        )
    }

    /// `g_n` as function values.
    pub fn left_function(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let s = self.rows.weight().sqrt();
        (
            self.rows.positions(),
            self.left.column(n).iter().map(|v| v / s).collect(),
        )
    }

    /// `max |Gram − I|` over both vector sets, as a Frobenius norm each.
    pub fn orthonormality_defect(&self) -> (f64, f64) {
        let k = self.sigmas.len();
        let id = DMatrix::<f64>::identity(k, k);
        let gl = self.left.transpose() * &self.left - &id;
        let gr = self.right.transpose() * &self.right - &id;
        (gl.norm(), gr.norm())
    }

    /// `‖A − U Σ Vᵀ‖_F`.
    pub fn reconstruction_error(&self, a: &DMatrix<f64>) -> f64 {
        let s = DMatrix::from_diagonal(&DVector::from_vec(self.sigmas.clone()));
        (a - &self.left * s * self.right.transpose()).norm()
    }
}

/// Partition of the spectrum by two thresholds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionProfile {
    pub near_one: usize,
    pub transition: usize,
    pub near_zero: usize,
    /// Half-open index range `[start, end)` of the middle band.
    pub transition_range: Option<(usize, usize)>,
}

/// Counts `σ ≥ hi`, `σ ≤ lo`, and the band strictly between.
pub fn transition_profile(sigmas: &[f64], lo: f64, hi: f64) -> Result<TransitionProfile> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(Error::InvalidArgument(format!("need 0 ≤ lo < hi ≤ 1, got {lo}, {hi}")));
    }
    let near_one = sigmas.iter().filter(|&&s| s >= hi).count();
    let near_zero = sigmas.iter().filter(|&&s| s <= lo).count();
    let idx: Vec<usize> = sigmas
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > lo && s < hi)
        .map(|(i, _)| i)
        .collect();
    Ok(TransitionProfile {
        near_one,
        transition: idx.len(),
        near_zero,
        transition_range: idx.first().map(|&a| (a, idx[idx.len() - 1] + 1)),
    })
}

/// Sign changes between consecutive significant samples whose midpoint lies
/// in `region`; samples below `theta · max|v|` are skipped.
pub fn zero_count(positions: &[f64], values: &[f64], region: (f64, f64), theta: f64) -> usize {
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return 0;
    }
    let floor = theta * peak;
    let mut last: Option<(f64, f64)> = None;
    let mut count = 0;
    for (&x, &v) in positions.iter().zip(values) {
        if v.abs() < floor {
            continue;
        }
        if let Some((px, pv)) = last {
            let mid = 0.5 * (px + x);
            if pv.signum() != v.signum() && mid > region.0 && mid < region.1 {
                count += 1;
            }
        }
        last = Some((x, v));
    }
    count
}

/// Zero count outside `region` (both flanks).
pub fn zero_count_outside(positions: &[f64], values: &[f64], region: (f64, f64), theta: f64) -> usize {
    zero_count(positions, values, (f64::NEG_INFINITY, region.0), theta)
        + zero_count(positions, values, (region.1, f64::INFINITY), theta)
}

/// `Σ_{x ∈ region} w v² / Σ w v²`.
pub fn energy_fraction(positions: &[f64], values: &[f64], weights: &[f64], region: (f64, f64)) -> f64 {
    let mut inside = 0.0;
    let mut total = 0.0;
    for ((&x, &v), &w) in positions.iter().zip(values).zip(weights) {
        let e = w * v * v;
        total += e;
        if x >= region.0 && x <= region.1 {
            inside += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}
