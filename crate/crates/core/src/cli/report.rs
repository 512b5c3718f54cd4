//! Machine-readable reports with a stable field order.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ReportFormat, RunConfig};
use crate::catalog::Params;
use crate::error::{Error, Result};

/// Which relation a record checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationTag {
    CurvatureSymmetries,
    CurvatureIdentity,
    IdentityTrace,
    GaussBonnetFormula,
    VariationInverseMetric,
    VariationVolumeElement,
    VariationChristoffel,
    VariationRiemann,
    VariationRicci,
    VariationScalar,
    SurfaceScalarVariation,
    CurvatureNormVariation,
    RicciNormVariation,
    ScalarSquaredVariation,
    GaussBonnetVariation,
    ChernConditions,
    ChernExpansion,
    ThreeDimReconstruction,
    ThreeDimNormIdentity,
    ThreeDimSumOfSquares,
    CatalogReference,
}

impl EquationTag {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationTag::CurvatureSymmetries => "curvature_symmetries",
            EquationTag::CurvatureIdentity => "curvature_identity",
            EquationTag::IdentityTrace => "identity_trace",
            EquationTag::GaussBonnetFormula => "gauss_bonnet_formula",
            EquationTag::VariationInverseMetric => "variation_inverse_metric",
            EquationTag::VariationVolumeElement => "variation_volume_element",
            EquationTag::VariationChristoffel => "variation_christoffel",
            EquationTag::VariationRiemann => "variation_riemann",
            EquationTag::VariationRicci => "variation_ricci",
            EquationTag::VariationScalar => "variation_scalar",
            EquationTag::SurfaceScalarVariation => "surface_scalar_variation",
            EquationTag::CurvatureNormVariation => "curvature_norm_variation",
            EquationTag::RicciNormVariation => "ricci_norm_variation",
            EquationTag::ScalarSquaredVariation => "scalar_squared_variation",
            EquationTag::GaussBonnetVariation => "gauss_bonnet_variation",
            EquationTag::ChernConditions => "chern_conditions",
            EquationTag::ChernExpansion => "chern_expansion",
            EquationTag::ThreeDimReconstruction => "three_dim_reconstruction",
            EquationTag::ThreeDimNormIdentity => "three_dim_norm_identity",
            EquationTag::ThreeDimSumOfSquares => "three_dim_sum_of_squares",
            EquationTag::CatalogReference => "catalog_reference",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Record {
    pub check: String,
    pub equation: EquationTag,
    pub inputs_digest: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Inputs that identify a record, hashed into `inputs_digest`.
#[derive(Serialize)]
struct DigestInput<'a> {
    check: &'a str,
    metric: &'a str,
    params: &'a Params,
    point: &'a [f64],
}

pub fn inputs_digest(check: &str, metric: &str, params: &Params, point: &[f64]) -> String {
    let bytes = serde_json::to_vec(&DigestInput { check, metric, params, point }).expect("digest input serialises");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Record {
    /// Record for a relative check: `value = residual / scale` when the scale
    /// is meaningful, otherwise the absolute residual against a `1e-12` floor.
    pub fn relative(check: String, equation: EquationTag, digest: String, residual: f64, scale: f64, tol: f64) -> Self {
        let (value, tolerance) = if scale > 1e-6 { (residual / scale, tol) } else { (residual, 1e-12) };
        Record { check, equation, inputs_digest: digest, value, tolerance, pass: value <= tolerance, expected: None, detail: None }
    }

    pub fn failed(check: String, equation: EquationTag, digest: String, err: &Error) -> Self {
        Record {
            check,
            equation,
            inputs_digest: digest,
            value: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            expected: None,
            detail: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub command: String,
    pub config: RunConfig,
    pub records: Vec<Record>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: RunConfig, records: Vec<Record>) -> Self {
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { records: records.len(), passed, failed: records.len() - passed };
        Report { version: env!("CARGO_PKG_VERSION"), command: config.command.clone(), config, records, summary }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = match self.config.format {
            ReportFormat::Pretty => serde_json::to_string_pretty(self),
            ReportFormat::Compact => serde_json::to_string(self),
        }
        .expect("report serialises");
        s.push('\n');
        s
    }

    /// Lossy one-line-per-record summary.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["check", "equation", "value", "tolerance", "pass"]).map_err(io)?;
        for r in &self.records {
            w.write_record([r.check.as_str(), r.equation.as_str(), &r.value.to_string(), &r.tolerance.to_string(), &r.pass.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
