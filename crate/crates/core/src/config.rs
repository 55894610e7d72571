//! Run configuration read from TOML or JSON files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Configuration;
use crate::sturm::SolverParams;

/// Endpoints plus solver tolerances. Every key is optional; missing keys take
/// the defaults of the `(0, 1.5, 6, 7.5)` configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    /// Matching offset from the singular points; `None` means `min gap / 10`.
    pub eps_match: Option<f64>,
    pub series_order: usize,
    /// Relative truncation tolerance of each propagation step.
    pub tol: f64,
    /// Amplitude floor for zero counting, relative to the vector's peak.
    pub theta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let [a1, a2, a3, a4] = Configuration::default().endpoints();
        RunConfig {
            a1,
            a2,
            a3,
            a4,
            eps_match: None,
            series_order: 40,
            tol: 1e-15,
            theta: 1e-6,
        }
    }
}

impl RunConfig {
    /// Parses `.json` files as JSON and everything else as TOML.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let rc: RunConfig = if is_json {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        };
        rc.validate()?;
        Ok(rc)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = self.configuration()?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if !(self.theta >= 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must lie in [0, 1), got {}",
                self.theta
            )));
        }
        self.solver_params_for(&cfg).validate(&cfg)
    }

    pub fn configuration(&self) -> Result<Configuration> {
        Configuration::new(self.a1, self.a2, self.a3, self.a4)
    }

    pub fn solver_params(&self) -> Result<SolverParams> {
        let cfg = self.configuration()?;
        let p = self.solver_params_for(&cfg);
        p.validate(&cfg)?;
        Ok(p)
    }

    fn solver_params_for(&self, cfg: &Configuration) -> SolverParams {
        let mut p = SolverParams::for_config(cfg);
        if let Some(e) = self.eps_match {
            p.eps_match = e;
        }
        p.series_order = self.series_order;
        p.propagation.tol = self.tol;
        p
    }
}
