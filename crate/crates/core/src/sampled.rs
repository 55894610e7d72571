//! Functions tabulated on a grid over one interval, with quadrature weights.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{barycentric_eval, barycentric_weights, CompositeRule, Panel};

/// How the nodes were laid out, which fixes how values are interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "kebab-case")]
pub enum Layout {
    /// Gauss–Legendre panels; interpolation is polynomial within a panel.
    Panels { panels: Vec<Panel> },
    /// Arbitrary ascending nodes (e.g. a collocation grid); interpolation is
    /// local cubic, or `c1 + c2 ln|x − a|` next to a flagged log point.
    Scattered,
}

/// Values of a real function on a grid over `interval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub interval: (f64, f64),
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub layout: Layout,
    /// Points where the function may behave like `ln|x − a|`.
    #[serde(default)]
    pub log_points: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CsvHeader {
    interval: (f64, f64),
    #[serde(flatten)]
    layout: Layout,
    weights: String,
    log_points: Vec<f64>,
}

impl SampledFunction {
    /// Samples `f` at the nodes of a composite rule.
    pub fn from_rule<F: Fn(f64) -> f64>(rule: &CompositeRule, f: F) -> SampledFunction {
        SampledFunction {
            interval: (rule.lo(), rule.hi()),
            nodes: rule.nodes.clone(),
            values: rule.nodes.iter().map(|&x| f(x)).collect(),
            weights: rule.weights.clone(),
            layout: Layout::Panels {
                panels: rule.panels.clone(),
            },
            log_points: Vec::new(),
        }
    }

    /// Wraps precomputed values on scattered nodes.
    pub fn scattered(
        interval: (f64, f64),
        nodes: Vec<f64>,
        values: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<SampledFunction> {
        let s = SampledFunction {
            interval,
            nodes,
            values,
            weights,
            layout: Layout::Scattered,
            log_points: Vec::new(),
        };
        s.validate()?;
        Ok(s)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> SampledFunction {
        assert_eq!(values.len(), self.nodes.len());
        SampledFunction { values, ..self.clone() }
    }

    pub fn with_log_points(mut self, points: &[f64]) -> SampledFunction {
        self.log_points = points.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.values.len() != n || self.weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} nodes, {} values, {} weights",
                n,
                self.values.len(),
                self.weights.len()
            )));
        }
        if !self.nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("nodes must increase strictly".into()));
        }
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sampled values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.interval.0
    }

    pub fn hi(&self) -> f64 {
        self.interval.1
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn inner(&self, other: &SampledFunction) -> f64 {
        debug_assert_eq!(self.nodes.len(), other.nodes.len());
        self.values
            .iter()
            .zip(&other.values)
            .zip(&self.weights)
            .map(|((a, b), w)| a * b * w)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> SampledFunction {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    /// Interpolated value at `x ∈ [lo, hi]`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.layout {
            Layout::Panels { panels } => {
                let idx = panels.partition_point(|p| p.hi < x).min(panels.len() - 1);
                let p = &panels[idx];
                let r = p.start..p.start + p.len;
                let xs = &self.nodes[r.clone()];
                barycentric_eval(xs, &self.values[r], &barycentric_weights(xs), x)
            }
            Layout::Scattered => self.eval_scattered(x),
        }
    }

    fn eval_scattered(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if n < 4 {
            let xs = &self.nodes;
            return barycentric_eval(xs, &self.values, &barycentric_weights(xs), x);
        }
        let k = self.nodes.partition_point(|&t| t < x);
        // Between a flagged log point and its nearest two nodes, fit c1 + c2 ln|x − a|.
        for &a in &self.log_points {
            let (i, j) = if a <= self.nodes[0] && k <= 1 {
                (0, 1)
            } else if a >= self.nodes[n - 1] && k >= n - 1 {
                (n - 2, n - 1)
            } else {
                let m = self.nodes.partition_point(|&t| t < a);
                if m == 0 || m >= n || !(k == m || (k == m + 1 && x < self.nodes[m])) {
                    continue;
                }
                if x < a {
                    if m < 2 {
                        continue;
                    }
                    (m - 2, m - 1)
                } else {
                    if m + 1 >= n {
                        continue;
                    }
                    (m, m + 1)
                }
            };
            if (x < a) != (self.nodes[i] < a) {
                continue;
            }
            let li = (self.nodes[i] - a).abs().ln();
            let lj = (self.nodes[j] - a).abs().ln();
            let lx = (x - a).abs().ln();
            let c2 = (self.values[j] - self.values[i]) / (lj - li);
            return self.values[i] + c2 * (lx - li);
        }
        let start = k.saturating_sub(2).min(n - 4);
        let xs = &self.nodes[start..start + 4];
        barycentric_eval(xs, &self.values[start..start + 4], &barycentric_weights(xs), x)
    }

    /// Writes a JSON header line (prefixed `#`) and `x,value,weight` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = CsvHeader {
            interval: self.interval,
            layout: self.layout.clone(),
            weights: match self.layout {
                Layout::Panels { .. } => "gauss-legendre".into(),
                Layout::Scattered => "explicit".into(),
            },
            log_points: self.log_points.clone(),
        };
        writeln!(w, "# {}", serde_json::to_string(&header)?)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "value", "weight"])?;
        for i in 0..self.nodes.len() {
            out.write_record([
                format_f64(self.nodes[i]),
                format_f64(self.values[i]),
                format_f64(self.weights[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R) -> Result<SampledFunction> {
        let mut first = String::new();
        r.read_line(&mut first)?;
        let json = first
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing JSON header line".into()))?;
        let header: CsvHeader = serde_json::from_str(json.trim())?;
        let mut rdr = csv::Reader::from_reader(r);
        let (mut nodes, mut values, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Parse("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            nodes.push(field(0)?);
            values.push(field(1)?);
            weights.push(field(2)?);
        }
        let s = SampledFunction {
            interval: header.interval,
            nodes,
            values,
            weights,
            layout: header.layout,
            log_points: header.log_points,
        };
        s.validate()?;
        Ok(s)
    }
}

/// Shortest decimal that round-trips exactly (never more than 17 significant digits).
pub fn format_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
