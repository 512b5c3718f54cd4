//! Metric fields on coordinate charts and the catalog of closed-form metrics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    ConformalFlatField, ConstantField, FieldRef, HalfPlaneField, HypersphericalField, PolynomialField,
    ProductField, SandwichField, StereographicField, SumField, TrigField, TWO_PI,
};
use crate::jets::{JetMatrix, ScalarJet, MAX_ORDER};
use crate::tensor::{self, Mat};

/// Distance kept from coordinate-singular loci such as hyperspherical poles.
pub const POLE_MARGIN: f64 = 1e-3;

/// Normalised determinant below which a metric counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Box-shaped chart domain with optional periodic axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl ChartDomain {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        let periodic = vec![false; lower.len()];
        ChartDomain { lower, upper, periodic }
    }

    pub fn torus(dim: usize) -> Self {
        ChartDomain { lower: vec![0.0; dim], upper: vec![TWO_PI; dim], periodic: vec![true; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, point: &[f64]) -> Result<()> {
        for (axis, &v) in point.iter().enumerate() {
            if self.periodic[axis] {
                continue;
            }
            let (lo, hi) = (self.lower[axis], self.upper[axis]);
            let slack = 1e-12 * (hi - lo).abs().max(1.0);
            if !(v >= lo - slack && v <= hi + slack) {
                return Err(Error::OutsideDomain { axis, value: v, lower: lo, upper: hi });
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    fn concat(&self, other: &ChartDomain) -> ChartDomain {
        ChartDomain {
            lower: [self.lower.clone(), other.lower.clone()].concat(),
            upper: [self.upper.clone(), other.upper.clone()].concat(),
            periodic: [self.periodic.clone(), other.periodic.clone()].concat(),
        }
    }
}

/// A smooth symmetric metric on a single chart.
#[derive(Debug, Clone)]
pub struct MetricField {
    pub name: String,
    pub signature: Vec<i8>,
    pub domain: ChartDomain,
    /// Whether the chart covers a closed manifold up to a measure-zero set.
    pub closed: bool,
    expr: FieldRef,
}

impl MetricField {
    pub fn new(name: impl Into<String>, signature: Vec<i8>, domain: ChartDomain, closed: bool, expr: FieldRef) -> Self {
        assert_eq!(signature.len(), expr.dim());
        assert_eq!(domain.dim(), expr.dim());
        MetricField { name: name.into(), signature, domain, closed, expr }
    }

    pub fn dim(&self) -> usize {
        self.expr.dim()
    }

    pub fn is_riemannian(&self) -> bool {
        self.signature.iter().all(|&s| s > 0)
    }

    pub fn expr(&self) -> &FieldRef {
        &self.expr
    }

    /// Metric components with all partial derivatives up to `order`.
    pub fn jet(&self, point: &[f64], order: usize) -> Result<JetMatrix> {
        evaluate_metric_jet(self, point, order)
    }

    pub fn value(&self, point: &[f64]) -> Result<Mat> {
        Ok(self.jet(point, 0)?.values())
    }

    /// `g + t h` on the same chart.
    pub fn deformed(&self, h: &DeformationField, t: f64) -> MetricField {
        MetricField {
            name: format!("{}+t·h", self.name),
            signature: self.signature.clone(),
            domain: self.domain.clone(),
            closed: self.closed,
            expr: Arc::new(SumField { base: self.expr.clone(), perturbation: h.expr.clone(), scale: t }),
        }
    }

    /// Deterministic pseudo-random points inside the domain.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = &self.domain;
        (0..count)
            .map(|_| (0..self.dim()).map(|a| rng.random_range(d.lower[a]..d.upper[a])).collect())
            .collect()
    }

    /// Check non-degeneracy and signature at the box corners, the centre and
    /// `random` further samples.
    pub fn validate(&self, random: usize, seed: u64) -> Result<()> {
        let n = self.dim();
        let d = &self.domain;
        let mut points: Vec<Vec<f64>> = (0..1usize << n)
            .map(|mask| (0..n).map(|a| if mask >> a & 1 == 1 { d.upper[a] } else { d.lower[a] }).collect())
            .collect();
        points.push((0..n).map(|a| 0.5 * (d.lower[a] + d.upper[a])).collect());
        points.extend(self.sample_points(random, seed));
        for p in &points {
            let g = self.value(p)?;
            let inertia = inertia(&g, n);
            let mut declared = self.signature.clone();
            declared.sort();
            if inertia != declared {
                return Err(Error::SignatureMismatch { declared: self.signature.clone(), observed: inertia });
            }
        }
        Ok(())
    }
}

/// Sorted signs of the eigenvalues of a symmetric matrix.
pub fn inertia(g: &Mat, dim: usize) -> Vec<i8> {
    let mut signs: Vec<i8> = tensor::symmetric_eigenvalues(g, dim)
        .into_iter()
        .map(|v| if v > 0.0 { 1 } else { -1 })
        .collect();
    signs.sort();
    signs
}

/// `|det g| / prod_i |row_i|`, which is 1 for diagonal metrics and 0 for
/// singular ones, independent of coordinate scaling.
pub fn normalized_determinant(g: &Mat, dim: usize) -> f64 {
    let det = tensor::determinant(g, dim);
    let rows: f64 = (0..dim).map(|i| (0..dim).map(|j| g[i][j] * g[i][j]).sum::<f64>().sqrt()).product();
    if rows == 0.0 {
        0.0
    } else {
        det.abs() / rows
    }
}

pub fn evaluate_metric_jet(metric: &MetricField, point: &[f64], order: usize) -> Result<JetMatrix> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooHigh { requested: order, max: MAX_ORDER });
    }
    if point.len() != metric.dim() {
        return Err(Error::DimensionMismatch { expected: format!("point of length {}", metric.dim()), got: point.len() });
    }
    metric.domain.contains(point)?;
    let x = ScalarJet::coordinates(point, order);
    let g = metric.expr.eval(&x);
    let values = g.values();
    let nd = normalized_determinant(&values, metric.dim());
    if !(nd > DEGENERACY_TOL) {
        return Err(Error::Degenerate { det: tensor::determinant(&values, metric.dim()) });
    }
    Ok(g)
}

/// Symmetric (0,2) field `h` driving `g(t) = g + t h`.
#[derive(Debug, Clone)]
pub struct DeformationField {
    pub name: String,
    expr: FieldRef,
}

impl DeformationField {
    pub fn new(name: impl Into<String>, expr: FieldRef) -> Self {
        DeformationField { name: name.into(), expr }
    }

    pub fn dim(&self) -> usize {
        self.expr.dim()
    }

    pub fn expr(&self) -> &FieldRef {
        &self.expr
    }

    pub fn jet(&self, point: &[f64], order: usize) -> Result<JetMatrix> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh { requested: order, max: MAX_ORDER });
        }
        Ok(self.expr.eval(&ScalarJet::coordinates(point, order)))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new("zero", Arc::new(ConstantField { dim, components: tensor::ZERO_MAT }))
    }

    /// Random polynomial field, components bounded by `amplitude` on `[-1,1]^dim`.
    pub fn random_polynomial(dim: usize, seed: u64, amplitude: f64) -> Self {
        Self::new(format!("poly(seed={seed})"), Arc::new(PolynomialField::random(dim, seed, amplitude)))
    }

    /// Random 2π-periodic trigonometric field bounded by `amplitude`.
    pub fn random_periodic(dim: usize, seed: u64, amplitude: f64) -> Self {
        Self::new(format!("trig(seed={seed})"), Arc::new(TrigField::random(dim, seed, amplitude)))
    }

    /// `g · base · g`; `g + t h = g (1 + t base g)` keeps its signature while
    /// `t |base g| < 1`, even where the chart degenerates.
    pub fn metric_relative(metric: &MetricField, base: &DeformationField) -> Self {
        Self::new(format!("g·{}·g", base.name), Arc::new(SandwichField { metric: metric.expr.clone(), base: base.expr.clone() }))
    }

    /// Largest `t` in the sampled sense for which `g + t h` keeps the declared
    /// signature at every point of `points`; capped at `cap`.
    pub fn certified_t_max(&self, metric: &MetricField, points: &[Vec<f64>], cap: f64) -> Result<f64> {
        let mut t = cap;
        while t > 1e-12 {
            let g_t = metric.deformed(self, t);
            let g_mt = metric.deformed(self, -t);
            let ok = points.iter().all(|p| {
                [&g_t, &g_mt].iter().all(|m| {
                    m.value(p)
                        .map(|g| {
                            let mut declared = metric.signature.clone();
                            declared.sort();
                            inertia(&g, metric.dim()) == declared
                                && normalized_determinant(&g, metric.dim()) > DEGENERACY_TOL
                        })
                        .unwrap_or(false)
                })
            });
            if ok {
                return Ok(t);
            }
            t *= 0.5;
        }
        Err(Error::Degenerate { det: 0.0 })
    }
}

/// Closed-form invariants a catalog metric must reproduce.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ReferenceValues {
    pub tau: Option<f64>,
    pub norm_r2: Option<f64>,
    pub norm_rho2: Option<f64>,
    pub euler: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub params: Params,
    pub metric: MetricField,
    pub reference: ReferenceValues,
}

/// Named numeric parameters plus an optional inner entry for product
/// constructions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner: Option<String>,
}

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn with_inner(mut self, inner: &str) -> Self {
        self.inner = Some(inner.to_string());
        self
    }

    pub fn get(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).copied().unwrap_or(default)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter { name: key.into(), reason: format!("must be positive, got {v}") });
        }
        Ok(v)
    }

    fn seed(&self) -> Result<u64> {
        let s = self.get("seed", 1.0);
        if s < 0.0 || s.fract() != 0.0 {
            return Err(Error::InvalidParameter { name: "seed".into(), reason: format!("must be a non-negative integer, got {s}") });
        }
        Ok(s as u64)
    }

    fn dim(&self, default: usize, allowed: &[usize]) -> Result<usize> {
        let d = self.get("dim", default as f64);
        if d.fract() != 0.0 || !allowed.contains(&(d as usize)) {
            return Err(Error::InvalidParameter { name: "dim".into(), reason: format!("must be one of {allowed:?}, got {d}") });
        }
        Ok(d as usize)
    }

    fn eps(&self) -> Result<f64> {
        let e = self.get("eps", 0.05);
        if !(e >= 0.0 && e.is_finite()) {
            return Err(Error::InvalidParameter { name: "eps".into(), reason: format!("must be non-negative, got {e}") });
        }
        Ok(e)
    }
}

pub const CATALOG_NAMES: &[&str] = &[
    "flat4",
    "torus_perturbed",
    "sphere4",
    "hyperbolic4",
    "s2xs2",
    "s2xh2",
    "product_3d_x_line",
    "constcurv3",
    "polynomial_random",
    "conformal_flat",
    "minkowski_perturbed",
];

fn sphere_axis() -> (f64, f64) {
    (POLE_MARGIN, PI - POLE_MARGIN)
}

fn sphere_domain(dim: usize) -> ChartDomain {
    let (lo, hi) = sphere_axis();
    let mut lower = vec![lo; dim];
    let mut upper = vec![hi; dim];
    lower[dim - 1] = 0.0;
    upper[dim - 1] = TWO_PI;
    let mut periodic = vec![false; dim];
    periodic[dim - 1] = true;
    ChartDomain { lower, upper, periodic }
}

fn constant_curvature_refs(dim: usize, c: f64) -> ReferenceValues {
    let n = dim as f64;
    ReferenceValues {
        tau: Some(n * (n - 1.0) * c),
        norm_r2: Some(2.0 * n * (n - 1.0) * c * c),
        norm_rho2: Some(n * (n - 1.0) * (n - 1.0) * c * c),
        euler: None,
    }
}

/// Number of random samples used to certify a catalog metric on construction.
const VALIDATION_SAMPLES: usize = 64;

pub fn catalog_metric(name: &str, params: &Params) -> Result<CatalogEntry> {
    let (metric, reference) = match name {
        "flat4" => {
            let m = MetricField::new(
                "flat4",
                vec![1; 4],
                ChartDomain::torus(4),
                true,
                Arc::new(ConstantField { dim: 4, components: tensor::identity(4) }),
            );
            let refs = ReferenceValues { tau: Some(0.0), norm_r2: Some(0.0), norm_rho2: Some(0.0), euler: Some(0.0) };
            (m, refs)
        }
        "torus_perturbed" => {
            let dim = params.dim(4, &[2, 3, 4])?;
            let (seed, eps) = (params.seed()?, params.eps()?);
            let expr = SumField {
                base: Arc::new(ConstantField { dim, components: tensor::identity(dim) }),
                perturbation: Arc::new(TrigField::random(dim, seed, 1.0)),
                scale: eps,
            };
            let m = MetricField::new("torus_perturbed", vec![1; dim], ChartDomain::torus(dim), true, Arc::new(expr));
            let euler = if dim % 2 == 0 { Some(0.0) } else { None };
            (m, ReferenceValues { euler, ..Default::default() })
        }
        "sphere4" => {
            let r = params.positive("r", 1.0)?;
            let m = MetricField::new(
                "sphere4",
                vec![1; 4],
                sphere_domain(4),
                true,
                Arc::new(HypersphericalField { dim: 4, radius: r }),
            );
            let mut refs = constant_curvature_refs(4, 1.0 / (r * r));
            refs.euler = Some(2.0);
            (m, refs)
        }
        "hyperbolic4" => {
            let c = params.positive("c", 1.0)?;
            let half = 0.4;
            let m = MetricField::new(
                "hyperbolic4",
                vec![1; 4],
                ChartDomain::boxed(vec![-half; 4], vec![half; 4]),
                false,
                Arc::new(StereographicField { dim: 4, curvature: -c }),
            );
            if 1.0 - c * 4.0 * half * half <= 0.05 {
                return Err(Error::InvalidParameter { name: "c".into(), reason: "chart leaves the conformal ball".into() });
            }
            (m, constant_curvature_refs(4, -c))
        }
        "s2xs2" => {
            let c1 = params.positive("c1", 1.0)?;
            let c2 = params.positive("c2", 1.0)?;
            let expr = ProductField {
                factors: vec![
                    Arc::new(HypersphericalField { dim: 2, radius: 1.0 / c1.sqrt() }),
                    Arc::new(HypersphericalField { dim: 2, radius: 1.0 / c2.sqrt() }),
                ],
            };
            let m = MetricField::new("s2xs2", vec![1; 4], sphere_domain(2).concat(&sphere_domain(2)), true, Arc::new(expr));
            let refs = ReferenceValues {
                tau: Some(2.0 * (c1 + c2)),
                norm_r2: Some(4.0 * (c1 * c1 + c2 * c2)),
                norm_rho2: Some(2.0 * (c1 * c1 + c2 * c2)),
                euler: Some(4.0),
            };
            (m, refs)
        }
        "s2xh2" => {
            let c = params.positive("c", 1.0)?;
            let expr = ProductField {
                factors: vec![
                    Arc::new(HypersphericalField { dim: 2, radius: 1.0 / c.sqrt() }),
                    Arc::new(HalfPlaneField { c }),
                ],
            };
            let domain = sphere_domain(2).concat(&ChartDomain::boxed(vec![-1.0, 0.5], vec![1.0, 2.0]));
            let m = MetricField::new("s2xh2", vec![1; 4], domain, false, Arc::new(expr));
            let refs = ReferenceValues {
                tau: Some(0.0),
                norm_r2: Some(8.0 * c * c),
                norm_rho2: Some(4.0 * c * c),
                euler: None,
            };
            (m, refs)
        }
        "constcurv3" => {
            let c = params.get("c", 1.0);
            let half = 0.5;
            if !c.is_finite() || 1.0 + c * 3.0 * half * half <= 0.05 {
                return Err(Error::InvalidParameter { name: "c".into(), reason: format!("chart degenerates for c = {c}") });
            }
            let m = MetricField::new(
                "constcurv3",
                vec![1; 3],
                ChartDomain::boxed(vec![-half; 3], vec![half; 3]),
                false,
                Arc::new(StereographicField { dim: 3, curvature: c }),
            );
            (m, constant_curvature_refs(3, c))
        }
        "product_3d_x_line" => {
            let inner_name = params.inner.as_deref().unwrap_or("constcurv3");
            if inner_name == "product_3d_x_line" {
                return Err(Error::InvalidParameter { name: "inner".into(), reason: "nested product".into() });
            }
            let mut inner_params = params.clone();
            inner_params.inner = None;
            if inner_name == "polynomial_random" && !inner_params.values.contains_key("dim") {
                inner_params.values.insert("dim".into(), 3.0);
            }
            let inner = catalog_metric(inner_name, &inner_params)?;
            if inner.metric.dim() != 3 {
                return Err(Error::InvalidParameter {
                    name: "inner".into(),
                    reason: format!("`{inner_name}` is {}-dimensional, expected 3", inner.metric.dim()),
                });
            }
            let expr = ProductField {
                factors: vec![
                    inner.metric.expr.clone(),
                    Arc::new(ConstantField { dim: 1, components: tensor::identity(1) }),
                ],
            };
            let domain = inner.metric.domain.concat(&ChartDomain::boxed(vec![-1.0], vec![1.0]));
            let mut signature = inner.metric.signature.clone();
            signature.push(1);
            let m = MetricField::new("product_3d_x_line", signature, domain, false, Arc::new(expr));
            (m, ReferenceValues { euler: None, ..inner.reference })
        }
        "polynomial_random" => {
            let dim = params.dim(4, &[2, 3, 4])?;
            let (seed, eps) = (params.seed()?, params.eps()?);
            let expr = SumField {
                base: Arc::new(ConstantField { dim, components: tensor::identity(dim) }),
                perturbation: Arc::new(PolynomialField::random(dim, seed, 1.0)),
                scale: eps,
            };
            let m = MetricField::new(
                "polynomial_random",
                vec![1; dim],
                ChartDomain::boxed(vec![-1.0; dim], vec![1.0; dim]),
                false,
                Arc::new(expr),
            );
            (m, ReferenceValues::default())
        }
        "conformal_flat" => {
            let a = params.get("a", 1.0);
            let b = params.get("b", 0.0);
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidParameter { name: "a/b".into(), reason: "must be finite".into() });
            }
            let m = MetricField::new(
                "conformal_flat",
                vec![1; 4],
                ChartDomain::boxed(vec![-1.0; 4], vec![1.0; 4]),
                false,
                Arc::new(ConformalFlatField { dim: 4, a, b }),
            );
            (m, ReferenceValues::default())
        }
        "minkowski_perturbed" => {
            let (seed, eps) = (params.seed()?, params.eps()?);
            let expr = SumField {
                base: Arc::new(ConstantField { dim: 4, components: tensor::diag(&[-1.0, 1.0, 1.0, 1.0]) }),
                perturbation: Arc::new(PolynomialField::random(4, seed, 1.0)),
                scale: eps,
            };
            let m = MetricField::new(
                "minkowski_perturbed",
                vec![-1, 1, 1, 1],
                ChartDomain::boxed(vec![-1.0; 4], vec![1.0; 4]),
                false,
                Arc::new(expr),
            );
            (m, ReferenceValues::default())
        }
        other => return Err(Error::UnknownMetric(other.to_string())),
    };
    let seed = params.get("seed", 1.0).abs() as u64;
    metric.validate(VALIDATION_SAMPLES, seed ^ 0x5eed).map_err(|e| match e {
        Error::SignatureMismatch { .. } | Error::Degenerate { .. } => Error::InvalidParameter {
            name: "params".into(),
            reason: format!("`{name}` is not a valid metric with these parameters: {e}"),
        },
        other => other,
    })?;
    Ok(CatalogEntry { name: name.to_string(), params: params.clone(), metric, reference })
}
