//! Run configuration: defaults, JSON loading and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::Params;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Pretty,
    Compact,
}

/// Every knob of a run. Absent JSON fields take the defaults below; command
/// line flags override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Catalog entry; each command has its own default.
    pub metric: Option<String>,
    pub params: Params,
    pub points: usize,
    pub seed: u64,
    pub tol_identity: f64,
    pub tol_gauss_bonnet: f64,
    pub tol_variation: f64,
    pub min_fd_order: f64,
    pub tol_integral_abs: f64,
    pub tol_integral_rel: f64,
    pub tol_chern: f64,
    pub tol_three_dim: f64,
    pub quad_rel_tol: f64,
    pub grid_nodes: usize,
    pub max_grid_nodes: usize,
    /// Whether `variation-check` also runs the integral checks.
    pub integrals: bool,
    pub integral_nodes: usize,
    pub dt: f64,
    pub h_amplitude: f64,
    pub chern_restarts: usize,
    pub chern_max_iterations: usize,
    pub format: ReportFormat,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            metric: None,
            params: Params::new(),
            points: 20,
            seed: 0,
            tol_identity: 1e-9,
            tol_gauss_bonnet: 1e-3,
            tol_variation: 1e-6,
            min_fd_order: 1.9,
            tol_integral_abs: 1e-6,
            tol_integral_rel: 1e-3,
            tol_chern: 1e-9,
            tol_three_dim: 1e-9,
            quad_rel_tol: 1e-4,
            grid_nodes: 24,
            max_grid_nodes: 96,
            integrals: false,
            integral_nodes: 24,
            dt: 1e-3,
            h_amplitude: 0.3,
            chern_restarts: 32,
            chern_max_iterations: 500,
            format: ReportFormat::Pretty,
            output: None,
            csv: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_identity", self.tol_identity),
            ("tol_gauss_bonnet", self.tol_gauss_bonnet),
            ("tol_variation", self.tol_variation),
            ("tol_integral_abs", self.tol_integral_abs),
            ("tol_integral_rel", self.tol_integral_rel),
            ("tol_chern", self.tol_chern),
            ("tol_three_dim", self.tol_three_dim),
            ("quad_rel_tol", self.quad_rel_tol),
            ("dt", self.dt),
            ("h_amplitude", self.h_amplitude),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("`{name}` must be positive and finite, got {v}")));
            }
        }
        if !self.min_fd_order.is_finite() {
            return Err(Error::Config("`min_fd_order` must be finite".into()));
        }
        if self.points == 0 {
            return Err(Error::Config("`points` must be at least 1".into()));
        }
        if self.grid_nodes == 0 || self.integral_nodes == 0 || self.max_grid_nodes < self.grid_nodes {
            return Err(Error::Config("grid sizes must be positive with `max_grid_nodes >= grid_nodes`".into()));
        }
        if self.chern_restarts == 0 || self.chern_max_iterations == 0 {
            return Err(Error::Config("Chern search budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Parse a JSON config file; absent fields take defaults.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
