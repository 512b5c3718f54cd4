//! Tensor-product quadrature on chart boxes and Euler characteristics from
//! the Gauss-Bonnet density.
//!
//! Bounded axes use Gauss-Legendre nodes, periodic axes the trapezoid rule.
//! Sums run in parallel over slabs of the first axis and are combined in slab
//! order, so results do not depend on the thread count.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{ChartDomain, MetricField};
use crate::curvature::scalar_invariants;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RuleKind {
    GaussLegendre,
    Trapezoid,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxisRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = ((4 * i + 3) as f64 * PI / (4.0 * nf + 2.0)).cos() * (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

impl AxisRule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        AxisRule {
            kind: RuleKind::GaussLegendre,
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|w| w * half).collect(),
        }
    }

    /// Equal weights at `a + k (b - a)/n`, exact for trigonometric polynomials
    /// of degree below `n` on a period `b - a`.
    pub fn trapezoid(n: usize, a: f64, b: f64) -> Self {
        let h = (b - a) / n as f64;
        AxisRule { kind: RuleKind::Trapezoid, nodes: (0..n).map(|k| a + k as f64 * h).collect(), weights: vec![h; n] }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartGrid {
    pub axes: Vec<AxisRule>,
}

impl ChartGrid {
    pub fn for_domain(domain: &ChartDomain, nodes_per_axis: usize) -> Self {
        let axes = (0..domain.dim())
            .map(|a| {
                if domain.periodic[a] {
                    AxisRule::trapezoid(nodes_per_axis, domain.lower[a], domain.upper[a])
                } else {
                    AxisRule::gauss_legendre(nodes_per_axis, domain.lower[a], domain.upper[a])
                }
            })
            .collect();
        ChartGrid { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    /// Sum of the product weights; equals the coordinate volume of the box.
    pub fn total_weight(&self) -> f64 {
        self.axes.iter().map(|a| a.weights.iter().sum::<f64>()).product()
    }

    /// `Σ_nodes w · f(x)` for a vector-valued `f` writing `width` values.
    pub fn sum<F>(&self, width: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]) -> Result<()> + Sync,
    {
        let dim = self.dim();
        let first = &self.axes[0];
        let rest: usize = self.axes[1..].iter().map(|a| a.len()).product();
        let slabs: Vec<Result<Vec<f64>>> = (0..first.len())
            .into_par_iter()
            .map(|i0| {
                let mut acc = vec![0.0; width];
                let mut vals = vec![0.0; width];
                let mut x = vec![0.0; dim];
                let mut idx = vec![0usize; dim];
                x[0] = first.nodes[i0];
                for flat in 0..rest {
                    let mut r = flat;
                    let mut w = first.weights[i0];
                    for a in (1..dim).rev() {
                        let n = self.axes[a].len();
                        idx[a] = r % n;
                        r /= n;
                        x[a] = self.axes[a].nodes[idx[a]];
                        w *= self.axes[a].weights[idx[a]];
                    }
                    vals.iter_mut().for_each(|v| *v = 0.0);
                    f(&x, &mut vals)?;
                    for (a, v) in acc.iter_mut().zip(&vals) {
                        *a += w * v;
                    }
                }
                Ok(acc)
            })
            .collect();
        let mut total = vec![0.0; width];
        for slab in slabs {
            for (t, v) in total.iter_mut().zip(slab?) {
                *t += v;
            }
        }
        Ok(total)
    }
}

/// One chart of an atlas with a constant coverage weight (1 for a chart that
/// covers the manifold up to a null set).
#[derive(Debug, Clone)]
pub struct AtlasChart {
    pub metric: MetricField,
    pub coverage: f64,
}

#[derive(Debug, Clone)]
pub struct Atlas {
    pub charts: Vec<AtlasChart>,
    pub closed: bool,
}

impl Atlas {
    /// Single-chart atlas of a catalog metric.
    pub fn single(metric: &MetricField) -> Self {
        Atlas { charts: vec![AtlasChart { metric: metric.clone(), coverage: 1.0 }], closed: metric.closed }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureOptions {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions { initial_nodes: 24, max_nodes: 96, rel_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralResult {
    pub value: f64,
    /// `∫|f| dv` at the final level.
    pub abs_value: f64,
    pub nodes_per_axis: usize,
    pub node_count: usize,
    /// `(nodes per axis, value)` for every level evaluated.
    pub history: Vec<(usize, f64)>,
}

/// `(∫ f dv, ∫ |f| dv)` over one chart at a fixed grid.
pub fn integrate_on_grid<F>(metric: &MetricField, grid: &ChartGrid, field: &F) -> Result<(f64, f64)>
where
    F: Fn(&MetricField, &[f64]) -> Result<(f64, f64)> + Sync,
{
    let s = grid.sum(2, |x, out| {
        let (v, vol) = field(metric, x)?;
        out[0] = v * vol;
        out[1] = v.abs() * vol;
        Ok(())
    })?;
    Ok((s[0], s[1]))
}

/// Integrate `field` against the Riemannian measure, doubling the nodes per
/// axis until successive values differ by at most
/// `rel_tol · max(|I|, ∫|f| dv)`.
///
/// `field` returns the integrand value and the volume factor `√|det g|` at
/// the node, so callers that already evaluate the metric can share the work.
pub fn integrate_scalar<F>(atlas: &Atlas, field: &F, options: &QuadratureOptions) -> Result<IntegralResult>
where
    F: Fn(&MetricField, &[f64]) -> Result<(f64, f64)> + Sync,
{
    if options.initial_nodes == 0 || options.rel_tol <= 0.0 {
        return Err(Error::InvalidParameter { name: "quadrature".into(), reason: "nodes and tolerance must be positive".into() });
    }
    let mut history = Vec::new();
    let mut n = options.initial_nodes;
    let mut prev: Option<f64> = None;
    loop {
        let (mut value, mut abs_value) = (0.0, 0.0);
        let mut node_count = 0;
        for chart in &atlas.charts {
            let grid = ChartGrid::for_domain(&chart.metric.domain, n);
            node_count += grid.node_count();
            let (v, a) = integrate_on_grid(&chart.metric, &grid, field)?;
            value += chart.coverage * v;
            abs_value += chart.coverage * a;
        }
        history.push((n, value));
        if let Some(p) = prev {
            let change = (value - p).abs();
            if change <= options.rel_tol * value.abs().max(abs_value) {
                return Ok(IntegralResult { value, abs_value, nodes_per_axis: n, node_count, history });
            }
            if 2 * n > options.max_nodes {
                return Err(Error::NoConvergence { nodes: n, change });
            }
        }
        prev = Some(value);
        n *= 2;
        if n > options.max_nodes {
            return Err(Error::NoConvergence { nodes: n / 2, change: f64::NAN });
        }
    }
}

/// Integrand helper: value of `f` and the volume factor at a node.
pub fn with_volume(metric: &MetricField, x: &[f64], f: impl Fn(&[f64]) -> f64) -> Result<(f64, f64)> {
    let g = metric.value(x)?;
    Ok((f(x), crate::tensor::determinant(&g, metric.dim()).abs().sqrt()))
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerEstimate {
    pub chi: f64,
    /// `∫(|R|² − 4|ρ|² + τ²) dv`
    pub raw_integral: f64,
    pub nodes_per_axis: usize,
    pub node_count: usize,
    pub history: Vec<(usize, f64)>,
}

/// `χ = (1/32π²) ∫(|R|² − 4|ρ|² + τ²) dv` over a closed Riemannian 4-manifold.
pub fn euler_characteristic(metric: &MetricField, options: &QuadratureOptions) -> Result<EulerEstimate> {
    if metric.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: "dimension 4".into(), got: metric.dim() });
    }
    if !metric.closed {
        return Err(Error::NotClosed(metric.name.clone()));
    }
    if !metric.is_riemannian() {
        return Err(Error::NotRiemannian);
    }
    let atlas = Atlas::single(metric);
    let res = integrate_scalar(
        &atlas,
        &|m: &MetricField, x: &[f64]| {
            let s = scalar_invariants(m, x)?;
            Ok((s.gauss_bonnet(), s.sqrt_abs_det))
        },
        options,
    )?;
    Ok(EulerEstimate {
        chi: res.value / (32.0 * PI * PI),
        raw_integral: res.value,
        nodes_per_axis: res.nodes_per_axis,
        node_count: res.node_count,
        history: res.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_metric, Params};

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 12, 24, 48] {
            let (x, w) = gauss_legendre(n);
            assert!(w.iter().all(|w| *w > 0.0));
            for deg in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}: {s} vs {exact}");
            }
        }
    }

    #[test]
    fn trapezoid_averages_cosine_squared() {
        let r = AxisRule::trapezoid(24, 0.0, 2.0 * PI);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.cos().powi(2)).sum();
        assert!((s - PI).abs() < 1e-13);
    }

    #[test]
    fn constant_on_flat_torus() {
        let e = catalog_metric("flat4", &Params::new()).unwrap();
        let res = integrate_scalar(&Atlas::single(&e.metric), &|m: &MetricField, x: &[f64]| with_volume(m, x, |_| 1.0), &QuadratureOptions::default()).unwrap();
        let v = (2.0 * PI).powi(4);
        assert!((res.value - v).abs() < 1e-9 * v);
        let grid = ChartGrid::for_domain(&e.metric.domain, 6);
        assert!((grid.total_weight() - v).abs() < 1e-9 * v);
    }

    #[test]
    fn unit_sphere_volume() {
        let e = catalog_metric("sphere4", &Params::new()).unwrap();
        let grid = ChartGrid::for_domain(&e.metric.domain, 24);
        let (v, _) = integrate_on_grid(&e.metric, &grid, &|m: &MetricField, x: &[f64]| with_volume(m, x, |_| 1.0)).unwrap();
        let exact = 8.0 * PI * PI / 3.0;
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
    }

    #[test]
    fn open_chart_is_rejected() {
        let e = catalog_metric("hyperbolic4", &Params::new()).unwrap();
        assert!(matches!(euler_characteristic(&e.metric, &QuadratureOptions::default()), Err(Error::NotClosed(_))));
    }

    #[test]
    fn parallel_sum_is_deterministic() {
        let e = catalog_metric("torus_perturbed", &Params::new().with("seed", 1.0)).unwrap();
        let grid = ChartGrid::for_domain(&e.metric.domain, 6);
        let f = |m: &MetricField, x: &[f64]| {
            let s = scalar_invariants(m, x)?;
            Ok((s.gauss_bonnet(), s.sqrt_abs_det))
        };
        let a = integrate_on_grid(&e.metric, &grid, &f).unwrap();
        let b = integrate_on_grid(&e.metric, &grid, &f).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
    }
}
