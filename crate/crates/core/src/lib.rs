//! Curvature of analytic metrics on coordinate charts.
//!
//! Metrics are evaluated as truncated Taylor jets, so Christoffel symbols,
//! curvature and covariant derivatives carry no discretisation error. On top
//! of that the crate checks the quadratic curvature identity of four-manifolds
//! pointwise, integrates the Gauss-Bonnet density, validates first-variation
//! formulas against finite differences and searches for Chern frames.

pub mod catalog;
pub mod cli;
pub mod covariant;
pub mod curvature;
pub mod error;
pub mod fields;
pub mod frames;
pub mod identities;
pub mod quadrature;
pub mod jets;
pub mod tensor;
pub mod variation;

pub use catalog::{catalog_metric, evaluate_metric_jet, CatalogEntry, ChartDomain, DeformationField, MetricField, Params};
pub use curvature::{curvature_pack, CurvaturePack};
pub use error::{Error, Result};
pub use jets::{JetMatrix, ScalarJet};
