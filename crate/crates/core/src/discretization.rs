//! Dense matrix discretizations of `H_T`: collocation on shifted uniform grids,
//! and a Galerkin matrix between orthonormal scaling functions.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::sampled::format_f64;
use crate::wavelet::{autocorrelation, Filter, PiecewiseLinearHilbert};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Uniform,
    Wavelet,
}

/// Offset `δ ∈ [0, step)` of the measurement grid `X_i = a1 + δ + i·step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridShift {
    /// Chosen so that every `X_i` sits halfway between two object nodes.
    #[default]
    Interleaved,
    /// `δ = step/2`.
    PlusHalf,
    /// `δ = −step/2`.
    MinusHalf,
}

impl GridShift {
    pub fn offset(self, cfg: &Configuration, step: f64) -> f64 {
        match self {
            GridShift::PlusHalf => 0.5 * step,
            GridShift::MinusHalf => -0.5 * step,
            GridShift::Interleaved => {
                let d = (cfg.a2() - cfg.a1() + 0.5 * step).rem_euclid(step);
                if (step - d).abs() < 1e-9 * step || d < 1e-9 * step {
                    0.0
                } else {
                    d
                }
            }
        }
    }
}

/// What indexes the rows or columns of an [`OperatorMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "lowercase")]
pub enum AxisMeta {
    /// Collocation nodes with a common quadrature weight.
    Nodes { points: Vec<f64>, weight: f64 },
    /// Scaling functions `2^{−J/2} φ(2^{−J} x − t)` for each shift `t`.
    Basis {
        filter: String,
        scale: i32,
        support: usize,
        shifts: Vec<f64>,
    },
}

impl AxisMeta {
    pub fn len(&self) -> usize {
        match self {
            AxisMeta::Nodes { points, .. } => points.len(),
            AxisMeta::Basis { shifts, .. } => shifts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A representative abscissa per index: the node, or the support centre.
    pub fn positions(&self) -> Vec<f64> {
        match self {
            AxisMeta::Nodes { points, .. } => points.clone(),
            AxisMeta::Basis {
                scale, support, shifts, ..
            } => {
                let h = 2f64.powi(*scale);
                shifts.iter().map(|t| h * (t + 0.5 * *support as f64)).collect()
            }
        }
    }

    /// Factor turning a unit coefficient vector into function values.
    pub fn weight(&self) -> f64 {
        match self {
            AxisMeta::Nodes { weight, .. } => *weight,
            AxisMeta::Basis { scale, .. } => 2f64.powi(*scale),
        }
    }
}

/// A dense discretization of `H_T`: rows live on `[a1, a3]`, columns on `[a2, a4]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub kind: MatrixKind,
    pub cfg: Configuration,
    pub rows: AxisMeta,
    pub cols: AxisMeta,
    pub shift: Option<GridShift>,
    pub entries: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    kind: MatrixKind,
    cfg: Configuration,
    rows: AxisMeta,
    cols: AxisMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shift: Option<GridShift>,
    nrows: usize,
    ncols: usize,
    layout: String,
}

impl OperatorMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    fn sidecar_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".json");
        PathBuf::from(p)
    }

    /// Writes row-major little-endian doubles to `path` and metadata to `path.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                w.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        w.flush()?;
        let side = Sidecar {
            kind: self.kind,
            cfg: self.cfg,
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            shift: self.shift,
            nrows: self.nrows(),
            ncols: self.ncols(),
            layout: "row-major f64 little-endian".into(),
        };
        let f = File::create(Self::sidecar_path(path))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &side)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<OperatorMatrix> {
        let side: Sidecar = serde_json::from_reader(BufReader::new(File::open(Self::sidecar_path(path))?))?;
        if side.rows.len() != side.nrows || side.cols.len() != side.ncols {
            return Err(Error::Parse("sidecar dimensions disagree with axis metadata".into()));
        }
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        if bytes.len() != 8 * side.nrows * side.ncols {
            return Err(Error::Parse(format!(
                "expected {} bytes, found {}",
                8 * side.nrows * side.ncols,
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let entries = DMatrix::from_row_iterator(side.nrows, side.ncols, data);
        Ok(OperatorMatrix {
            kind: side.kind,
            cfg: side.cfg,
            rows: side.rows,
            cols: side.cols,
            shift: side.shift,
            entries,
        })
    }

    /// Plain CSV of the entries, one matrix row per line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for i in 0..self.nrows() {
            out.write_record((0..self.ncols()).map(|j| format_f64(self.entries[(i, j)])))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Collocation parameters of the uniform discretization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformParams {
    pub n: usize,
    pub step: f64,
    #[serde(default)]
    pub shift: GridShift,
}

impl Default for UniformParams {
    fn default() -> Self {
        UniformParams {
            n: 601,
            step: 0.01,
            shift: GridShift::Interleaved,
        }
    }
}

/// `entries(i, j) = step / (π (X_i − Y_j))` with `Y_j = a2 + j·step` and
/// `X_i = a1 + δ + i·step`, `i, j = 0 … n−1`.
pub fn uniform_matrix(cfg: &Configuration, params: &UniformParams) -> Result<OperatorMatrix> {
    let UniformParams { n, step, shift } = *params;
    if n < 2 || !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need n ≥ 2 and step > 0, got n={n}, step={step}"
        )));
    }
    let delta = shift.offset(cfg, step);
    let xs: Vec<f64> = (0..n).map(|i| cfg.a1() + delta + step * i as f64).collect();
    let ys: Vec<f64> = (0..n).map(|j| cfg.a2() + step * j as f64).collect();
    for &x in &xs {
        let j = ((x - ys[0]) / step).round();
        if (0.0..n as f64).contains(&j) && (x - ys[j as usize]).abs() < 1e-9 * step {
            return Err(Error::GridCollision { x, y: ys[j as usize] });
        }
    }
    let c = step / PI;
    let entries = DMatrix::from_fn(n, n, |i, j| c / (xs[i] - ys[j]));
    Ok(OperatorMatrix {
        kind: MatrixKind::Uniform,
        cfg: *cfg,
        rows: AxisMeta::Nodes {
            points: xs,
            weight: step,
        },
        cols: AxisMeta::Nodes {
            points: ys,
            weight: step,
        },
        shift: Some(shift),
        entries,
    })
}

/// Galerkin parameters of the wavelet discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletParams {
    /// Dyadic scale `J`; basis functions have width `(L − 1)·2^J`.
    pub scale: i32,
    pub filter: String,
    /// Cascade resolution used for the autocorrelation.
    pub levels: u32,
}

impl Default for WaveletParams {
    fn default() -> Self {
        WaveletParams {
            scale: -7,
            filter: "db2".into(),
            levels: 10,
        }
    }
}

/// Shifts `t ∈ offset + ℤ` whose support `[t, t + L − 1]·2^J` starts inside
/// `[lo, hi]` and overhangs `hi` by at most half a translation step.
pub fn admissible_shifts(lo: f64, hi: f64, scale: i32, support: usize, offset: f64) -> Vec<f64> {
    let inv = 2f64.powi(-scale);
    let eps = 1e-9;
    let first = (lo * inv - offset - eps).ceil() as i64;
    let last = (hi * inv + 0.5 - support as f64 - offset + eps).floor() as i64;
    (first..=last).map(|k| k as f64 + offset).collect()
}

fn check_shifts(lo: f64, hi: f64, scale: i32, support: usize, shifts: &[f64]) -> Result<()> {
    let h = 2f64.powi(scale);
    for &t in shifts {
        let (s, e) = (t * h, (t + support as f64) * h);
        let over = (lo - s).max(e - hi);
        if over > 0.5 * h * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "basis shift {t} has support [{s}, {e}] leaving [{lo}, {hi}] by {over}"
            )));
        }
    }
    Ok(())
}

/// Default index sets: integer shifts on `[a2, a4]`, half-integer shifts on `[a1, a3]`.
pub fn wavelet_shifts(cfg: &Configuration, params: &WaveletParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let filter = Filter::by_name(&params.filter)?;
    let l = filter.support();
    let rows = admissible_shifts(cfg.a1(), cfg.a3(), params.scale, l, 0.5);
    let cols = admissible_shifts(cfg.a2(), cfg.a4(), params.scale, l, 0.0);
    Ok((rows, cols))
}

/// `entries(r, c) = ⟨H φ_{J,t_c}, φ_{J,t_r}⟩ = (H Φ)(t_r − t_c)`, with `Φ` the
/// autocorrelation of `φ` and the default index sets of [`wavelet_shifts`].
pub fn wavelet_matrix(cfg: &Configuration, params: &WaveletParams) -> Result<OperatorMatrix> {
    let (rows, cols) = wavelet_shifts(cfg, params)?;
    wavelet_matrix_with_shifts(cfg, params, rows, cols)
}

pub fn wavelet_matrix_with_shifts(
    cfg: &Configuration,
    params: &WaveletParams,
    row_shifts: Vec<f64>,
    col_shifts: Vec<f64>,
) -> Result<OperatorMatrix> {
    let filter = Filter::by_name(&params.filter)?;
    let l = filter.support();
    if row_shifts.is_empty() || col_shifts.is_empty() {
        return Err(Error::InvalidArgument("empty wavelet index set".into()));
    }
    check_shifts(cfg.a1(), cfg.a3(), params.scale, l, &row_shifts)?;
    check_shifts(cfg.a2(), cfg.a4(), params.scale, l, &col_shifts)?;
    let big_phi = autocorrelation(&filter, params.levels)?;
    let hphi = PiecewiseLinearHilbert::new(&big_phi);
    let entries = toeplitz_fill(&row_shifts, &col_shifts, |s| hphi.eval(s));
    let axis = |shifts: Vec<f64>| AxisMeta::Basis {
        filter: filter.name.clone(),
        scale: params.scale,
        support: l,
        shifts,
    };
    Ok(OperatorMatrix {
        kind: MatrixKind::Wavelet,
        cfg: *cfg,
        rows: axis(row_shifts),
        cols: axis(col_shifts),
        shift: None,
        entries,
    })
}

/// Fills `m[r][c] = f(rows[r] − cols[c])`, evaluating `f` once per distinct
/// difference when both index sets are unit-spaced.
fn toeplitz_fill<F: Fn(f64) -> f64 + Sync>(rows: &[f64], cols: &[f64], f: F) -> DMatrix<f64> {
    let unit = |v: &[f64]| v.windows(2).all(|w| (w[1] - w[0] - 1.0).abs() < 1e-12);
    if unit(rows) && unit(cols) {
        let (nr, nc) = (rows.len(), cols.len());
        // difference index d = r − c + (nc − 1)
        let base = rows[0] - cols[nc - 1];
        let table: Vec<f64> = (0..nr + nc - 1).into_par_iter().map(|d| f(base + d as f64)).collect();
        DMatrix::from_fn(nr, nc, |r, c| table[r + nc - 1 - c])
    } else {
        let vals: Vec<f64> = (0..rows.len() * cols.len())
            .into_par_iter()
            .map(|k| f(rows[k / cols.len()] - cols[k % cols.len()]))
            .collect();
        DMatrix::from_row_slice(rows.len(), cols.len(), &vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_first_entry() {
        let m = uniform_matrix(&Configuration::default(), &UniformParams::default()).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (601, 601));
        // X_0 = 0.005, Y_0 = 1.5
        assert_relative_eq!(m.entries[(0, 0)], 0.01 / (PI * (0.005 - 1.5)), max_relative = 1e-12);
        assert_relative_eq!(m.entries[(0, 0)].abs(), 2.1295e-3, max_relative = 1e-3);
        let max = m.entries.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_relative_eq!(max, 0.01 / (PI * 0.005), max_relative = 1e-9);
    }

    #[test]
    fn interleaved_shift_avoids_collisions() {
        let cfg = Configuration::default();
        assert_relative_eq!(GridShift::Interleaved.offset(&cfg, 0.01), 0.005, epsilon = 1e-12);
        assert_eq!(GridShift::Interleaved.offset(&cfg, 0.04), 0.0);
        for (n, step) in [(151, 0.04), (301, 0.02), (601, 0.01)] {
            let m = uniform_matrix(
                &cfg,
                &UniformParams {
                    n,
                    step,
                    shift: GridShift::Interleaved,
                },
            )
            .unwrap();
            let max = m.entries.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(max <= step / (PI * 0.5 * step) * (1.0 + 1e-9));
        }
        let clash = uniform_matrix(
            &cfg,
            &UniformParams {
                n: 151,
                step: 0.04,
                shift: GridShift::PlusHalf,
            },
        );
        assert!(matches!(clash, Err(Error::GridCollision { .. })));
    }

    #[test]
    fn kernel_orientation_flips_sign() {
        // Exchanging the roles of the two grids negates the kernel.
        let cfg = Configuration::default();
        let m = uniform_matrix(
            &cfg,
            &UniformParams {
                n: 50,
                step: 0.1,
                shift: GridShift::PlusHalf,
            },
        )
        .unwrap();
        let (AxisMeta::Nodes { points: xs, .. }, AxisMeta::Nodes { points: ys, .. }) = (&m.rows, &m.cols) else {
            panic!("uniform axes")
        };
        for (i, j) in [(0, 0), (10, 3), (49, 49)] {
            let swapped = 0.1 / (PI * (ys[j] - xs[i]));
            assert_relative_eq!(m.entries[(i, j)], -swapped, max_relative = 1e-14);
        }
    }

    #[test]
    fn wavelet_index_sets() {
        let (rows, cols) = wavelet_shifts(&Configuration::default(), &WaveletParams::default()).unwrap();
        assert_eq!(cols.len(), 766);
        assert_eq!((cols[0], cols[765]), (192.0, 957.0));
        assert_eq!(rows.len(), 766);
        assert_eq!((rows[0], rows[765]), (0.5, 765.5));
        let bad = wavelet_matrix_with_shifts(
            &Configuration::default(),
            &WaveletParams::default(),
            vec![766.5],
            vec![192.0],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn wavelet_entries_far_field_and_symmetry() {
        let cfg = Configuration::new(0.0, 0.25, 0.5, 0.75).unwrap();
        let params = WaveletParams::default();
        let m = wavelet_matrix(&cfg, &params).unwrap();
        let big = autocorrelation(&Filter::daubechies2(), params.levels).unwrap();
        let h = PiecewiseLinearHilbert::new(&big);
        for s in [100.5, 500.5] {
            assert_relative_eq!(h.eval(s) * PI * s, 1.0, epsilon = 1e-7);
        }
        for s in [0.5, 1.5, 2.5, 7.5] {
            assert_relative_eq!(h.eval(s), -h.eval(-s), epsilon = 1e-12);
        }
        // Toeplitz structure
        let (AxisMeta::Basis { shifts: r, .. }, AxisMeta::Basis { shifts: c, .. }) = (&m.rows, &m.cols) else {
            panic!("basis axes")
        };
        for (i, j) in [(0, 0), (5, 17), (20, 3)] {
            assert_relative_eq!(m.entries[(i, j)], h.eval(r[i] - c[j]), epsilon = 1e-15);
        }
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = Configuration::default();
        let m = uniform_matrix(
            &cfg,
            &UniformParams {
                n: 20,
                step: 0.3,
                shift: GridShift::Interleaved,
            },
        )
        .unwrap();
        let path = dir.path().join("m.bin");
        m.save(&path).unwrap();
        let back = OperatorMatrix::load(&path).unwrap();
        assert_eq!(back, m);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 20);
        let first: f64 = text.lines().next().unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, m.entries[(0, 0)]);
    }
}
