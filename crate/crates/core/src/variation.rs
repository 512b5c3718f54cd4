//! First variation of curvature along `g(t) = g + t h`.
//!
//! Closed-form derivatives at `t = 0` are evaluated from metric and
//! deformation jets; a central-difference oracle recomputes the same
//! quantities on `g ± Δt h`. The integral checks compare finite differences
//! of `∫ q dv` over a closed chart with the quadrature of the first-variation
//! integrand contracted with `h`.

use serde::Serialize;

use crate::catalog::{inertia, DeformationField, MetricField};
use crate::covariant::{ConnectionJet, TensorFieldJet};
use crate::curvature::{christoffel, curvature_pack_from_jet, riemann_mixed, scalar_invariants, within_tolerance};
use crate::error::{Error, Result};
use crate::jets::JetMatrix;
use crate::quadrature::{Atlas, ChartGrid};
use crate::tensor::{self, Mat, Rank3, Rank4, ZERO_MAT, ZERO_RANK3, ZERO_RANK4};

/// `d/dt (g + t h)^{-1} = −h^{ij}`.
pub fn inverse_metric_derivative(g: &Mat, h: &Mat, dim: usize) -> Result<Mat> {
    let gi = tensor::inverse(g, dim).ok_or(Error::Degenerate { det: tensor::determinant(g, dim) })?;
    Ok(tensor::scale_mat(&raise_both(&gi, h, dim), -1.0))
}

/// `d/dt dv_{g(t)} = ½ tr_g h · dv_g`; returns the factor `½ g^{ij} h_ij`.
pub fn volume_element_derivative(g: &Mat, h: &Mat, dim: usize) -> Result<f64> {
    if inertia(g, dim).iter().any(|&s| s < 0) {
        return Err(Error::NotRiemannian);
    }
    let gi = tensor::inverse(g, dim).ok_or(Error::Degenerate { det: tensor::determinant(g, dim) })?;
    Ok(0.5 * tensor::contract2(&gi, h, dim))
}

/// `Γ̇^k_ij = ½ g^{ka}(∇_i h_aj + ∇_j h_ia − ∇_a h_ij)`, layout `[k][i][j]`.
pub fn christoffel_derivative(g: &JetMatrix, h: &JetMatrix) -> Result<Rank3> {
    Ok(VariationAtPoint::from_jets(g, h)?.christoffel())
}

/// `Ṙ_ijk^l`, layout `[i][j][k][l]`.
pub fn riemann_derivative(g: &JetMatrix, h: &JetMatrix) -> Result<Rank4> {
    VariationAtPoint::from_jets(g, h)?.riemann()
}

pub fn ricci_derivative(g: &JetMatrix, h: &JetMatrix) -> Result<Mat> {
    VariationAtPoint::from_jets(g, h)?.ricci()
}

pub fn scalar_derivative(g: &JetMatrix, h: &JetMatrix) -> Result<f64> {
    VariationAtPoint::from_jets(g, h)?.scalar()
}

fn raise_both(gi: &Mat, h: &Mat, dim: usize) -> Mat {
    tensor::mat_mul(&tensor::mat_mul(gi, h, dim), gi, dim)
}

/// Everything the derivative formulas need at one point: metric, `h` with
/// its first two covariant derivatives, and the curvature of `g`.
#[derive(Debug, Clone)]
pub struct VariationAtPoint {
    pub dim: usize,
    pub g: Mat,
    pub g_inv: Mat,
    /// `h_ij`
    pub h: Mat,
    /// `h^ij`
    pub h_up: Mat,
    /// `h_i^j`
    pub h_mixed: Mat,
    /// `∇_a h_ij`
    pub dh: Rank3,
    /// `∇_a ∇_b h_ij`, present when both jets reach order 2.
    pub ddh: Option<Rank4>,
    /// `R_ijk^l`, present when both jets reach order 2.
    pub riemann: Option<Rank4>,
    pub ricci: Option<Mat>,
}

impl VariationAtPoint {
    pub fn from_jets(g: &JetMatrix, h: &JetMatrix) -> Result<Self> {
        let dim = g.dim();
        if h.dim() != dim {
            return Err(Error::DimensionMismatch { expected: format!("{dim}-dimensional deformation"), got: h.dim() });
        }
        let order = g.order().min(h.order()).min(2);
        if order < 1 {
            return Err(Error::InsufficientOrder { needed: 1, got: order });
        }
        let conn = ConnectionJet::new(&g.truncate(order))?;
        let gv = g.values();
        let gi = conn.g_inv.values();
        let hv = h.values();
        let dht = conn.derivative(&TensorFieldJet::covariant2(&h.truncate(order)))?;
        let mut dh = ZERO_RANK3;
        for a in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    dh[a][i][j] = dht.value(&[a, i, j]);
                }
            }
        }
        let (mut ddh, mut riemann, mut ricci) = (None, None, None);
        if order >= 2 {
            let ddht = conn.derivative(&dht)?;
            let mut d2 = ZERO_RANK4;
            for a in 0..dim {
                for b in 0..dim {
                    for i in 0..dim {
                        for j in 0..dim {
                            d2[a][b][i][j] = ddht.value(&[a, b, i, j]);
                        }
                    }
                }
            }
            ddh = Some(d2);
            let r = riemann_mixed(&christoffel(&g.truncate(2))?)?;
            let mut rho = ZERO_MAT;
            for j in 0..dim {
                for k in 0..dim {
                    rho[j][k] = (0..dim).map(|i| r[i][j][k][i]).sum();
                }
            }
            riemann = Some(r);
            ricci = Some(rho);
        }
        Ok(VariationAtPoint {
            dim,
            g: gv,
            g_inv: gi,
            h: hv,
            h_up: raise_both(&gi, &hv, dim),
            h_mixed: tensor::mat_mul(&hv, &gi, dim),
            dh,
            ddh,
            riemann,
            ricci,
        })
    }

    pub fn inverse_metric(&self) -> Mat {
        tensor::scale_mat(&self.h_up, -1.0)
    }

    pub fn volume_factor(&self) -> f64 {
        0.5 * tensor::contract2(&self.g_inv, &self.h, self.dim)
    }

    pub fn christoffel(&self) -> Rank3 {
        let (n, gi, dh) = (self.dim, &self.g_inv, &self.dh);
        let mut out = ZERO_RANK3;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[k][i][j] = 0.5 * (0..n).map(|a| gi[k][a] * (dh[i][a][j] + dh[j][i][a] - dh[a][i][j])).sum::<f64>();
                }
            }
        }
        out
    }

    fn second_order(&self) -> Result<(&Rank4, &Rank4, &Mat)> {
        match (&self.ddh, &self.riemann, &self.ricci) {
            (Some(d), Some(r), Some(rho)) => Ok((d, r, rho)),
            _ => Err(Error::InsufficientOrder { needed: 2, got: 1 }),
        }
    }

    /// `½(−R_ijk^a h_a^l + R_ija^l h_k^a + ∇_i∇_k h_j^l − ∇_j∇_k h_i^l − ∇_i∇^l h_jk + ∇_j∇^l h_ik)`
    pub fn riemann(&self) -> Result<Rank4> {
        let (dd, r, _) = self.second_order()?;
        let (n, gi, hm) = (self.dim, &self.g_inv, &self.h_mixed);
        let mut out = ZERO_RANK4;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = 0.0;
                        for a in 0..n {
                            v -= r[i][j][k][a] * hm[a][l];
                            v += r[i][j][a][l] * hm[k][a];
                            v += dd[i][k][j][a] * gi[a][l];
                            v -= dd[j][k][i][a] * gi[a][l];
                            v -= gi[l][a] * dd[i][a][j][k];
                            v += gi[l][a] * dd[j][a][i][k];
                        }
                        out[i][j][k][l] = 0.5 * v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `½(−R_aij^b h_b^a + ρ_ia h_j^a + ∇_a∇_j h_i^a − ∇_i∇_j h_a^a − ∇^a∇_a h_ij + ∇_i∇_a h_j^a)`
    pub fn ricci(&self) -> Result<Mat> {
        let (dd, r, rho) = self.second_order()?;
        let (n, gi, hm) = (self.dim, &self.g_inv, &self.h_mixed);
        let mut out = ZERO_MAT;
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                for a in 0..n {
                    v += rho[i][a] * hm[j][a];
                    for b in 0..n {
                        v -= r[a][i][j][b] * hm[b][a];
                        v += dd[a][j][i][b] * gi[b][a];
                        v -= gi[a][b] * dd[i][j][a][b];
                        v -= gi[a][b] * dd[a][b][i][j];
                        v += dd[i][a][j][b] * gi[b][a];
                    }
                }
                out[i][j] = 0.5 * v;
            }
        }
        Ok(out)
    }

    /// `−ρ_ij h^ij + ∇^i∇^j h_ij − Δ tr h`
    pub fn scalar(&self) -> Result<f64> {
        let (dd, _, rho) = self.second_order()?;
        let (n, gi) = (self.dim, &self.g_inv);
        let mut v = -tensor::contract2(rho, &self.h_up, n);
        for a in 0..n {
            for b in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        v += gi[i][a] * gi[j][b] * dd[a][b][i][j];
                        v -= gi[a][b] * gi[i][j] * dd[a][b][i][j];
                    }
                }
            }
        }
        Ok(v)
    }

    pub fn quantity(&self, q: Quantity) -> Result<Vec<f64>> {
        let n = self.dim;
        Ok(match q {
            Quantity::InverseMetric => flatten_mat(&self.inverse_metric(), n),
            Quantity::VolumeFactor => vec![self.volume_factor()],
            Quantity::Christoffel => flatten_rank3(&self.christoffel(), n),
            Quantity::Riemann => flatten_rank4(&self.riemann()?, n),
            Quantity::Ricci => flatten_mat(&self.ricci()?, n),
            Quantity::Scalar => vec![self.scalar()?],
        })
    }
}

/// Pointwise quantities with a closed-form first variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    InverseMetric,
    VolumeFactor,
    Christoffel,
    Riemann,
    Ricci,
    Scalar,
}

impl Quantity {
    pub const ALL: [Quantity; 6] =
        [Quantity::InverseMetric, Quantity::VolumeFactor, Quantity::Christoffel, Quantity::Riemann, Quantity::Ricci, Quantity::Scalar];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::InverseMetric => "inverse_metric",
            Quantity::VolumeFactor => "volume_factor",
            Quantity::Christoffel => "christoffel",
            Quantity::Riemann => "riemann",
            Quantity::Ricci => "ricci",
            Quantity::Scalar => "scalar",
        }
    }

    /// Jet order the quantity needs from the metric.
    pub fn metric_order(self) -> usize {
        match self {
            Quantity::InverseMetric | Quantity::VolumeFactor => 0,
            Quantity::Christoffel => 1,
            _ => 2,
        }
    }
}

fn flatten_mat(m: &Mat, n: usize) -> Vec<f64> {
    (0..n).flat_map(|i| (0..n).map(move |j| m[i][j])).collect()
}

fn flatten_rank3(t: &Rank3, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n * n * n);
    for a in t.iter().take(n) {
        v.extend(flatten_mat(a, n));
    }
    v
}

fn flatten_rank4(t: &Rank4, n: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(n.pow(4));
    for a in t.iter().take(n) {
        v.extend(flatten_rank3(a, n));
    }
    v
}

/// The quantity evaluated on `metric` itself (no derivative). The volume
/// factor is `√|det g|`.
pub fn quantity_value(q: Quantity, metric: &MetricField, point: &[f64]) -> Result<Vec<f64>> {
    let n = metric.dim();
    let jet = metric.jet(point, q.metric_order())?;
    let g = jet.values();
    Ok(match q {
        Quantity::InverseMetric => {
            flatten_mat(&tensor::inverse(&g, n).ok_or(Error::Degenerate { det: tensor::determinant(&g, n) })?, n)
        }
        Quantity::VolumeFactor => vec![tensor::determinant(&g, n).abs().sqrt()],
        Quantity::Christoffel => flatten_rank3(&christoffel(&jet)?.gamma, n),
        Quantity::Riemann | Quantity::Ricci | Quantity::Scalar => {
            let ch = christoffel(&jet)?;
            let r = riemann_mixed(&ch)?;
            match q {
                Quantity::Riemann => flatten_rank4(&r, n),
                _ => {
                    let mut rho = ZERO_MAT;
                    for j in 0..n {
                        for k in 0..n {
                            rho[j][k] = (0..n).map(|i| r[i][j][k][i]).sum();
                        }
                    }
                    if q == Quantity::Ricci {
                        flatten_mat(&rho, n)
                    } else {
                        vec![tensor::contract2(&ch.g_inv, &rho, n)]
                    }
                }
            }
        }
    })
}

/// Central differences `(f(t) − f(−t)) / 2t` for each step.
#[derive(Debug, Clone, Serialize)]
pub struct FdEstimate {
    pub steps: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    /// Largest magnitude among the sampled values, for roundoff floors.
    pub value_scale: f64,
}

impl FdEstimate {
    /// `log2` of successive Richardson differences for the first three steps
    /// when they halve; `None` when the differences sit at the roundoff floor.
    pub fn richardson_order(&self) -> Option<f64> {
        if self.estimates.len() < 3 {
            return None;
        }
        let d1 = max_abs_diff(&self.estimates[0], &self.estimates[1]);
        let d2 = max_abs_diff(&self.estimates[1], &self.estimates[2]);
        let floor = roundoff_floor(self.value_scale, self.steps[2]);
        if d2 <= floor || d1 <= floor {
            return None;
        }
        Some((d1 / d2).log2())
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Error level below which a central difference with step `dt` is dominated
/// by cancellation.
fn roundoff_floor(value_scale: f64, dt: f64) -> f64 {
    1e3 * f64::EPSILON * value_scale.max(f64::MIN_POSITIVE) / dt
}

/// Central differences of a vector-valued function of `t`.
pub fn central_differences(steps: &[f64], f: impl Fn(f64) -> Result<Vec<f64>>) -> Result<FdEstimate> {
    if steps.is_empty() || steps.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidParameter { name: "steps".into(), reason: "need positive finite steps".into() });
    }
    let mut estimates = Vec::with_capacity(steps.len());
    let mut value_scale: f64 = 0.0;
    for &dt in steps {
        let plus = f(dt)?;
        let minus = f(-dt)?;
        value_scale = value_scale.max(max_abs(&plus)).max(max_abs(&minus));
        estimates.push(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * dt)).collect());
    }
    Ok(FdEstimate { steps: steps.to_vec(), estimates, value_scale })
}

/// Finite-difference derivative of `q` along `g + t h` at `point`. Fails if
/// the stencil leaves the region where `g + t h` is non-degenerate with the
/// declared signature. For the volume factor the result is normalised by
/// `√|det g|`.
pub fn fd_oracle(q: Quantity, metric: &MetricField, h: &DeformationField, point: &[f64], steps: &[f64]) -> Result<FdEstimate> {
    let mut declared = metric.signature.clone();
    declared.sort();
    let eval = |t: f64| -> Result<Vec<f64>> {
        let m = metric.deformed(h, t);
        let g = m.value(point)?;
        let observed = inertia(&g, metric.dim());
        if observed != declared {
            return Err(Error::SignatureMismatch { declared: metric.signature.clone(), observed });
        }
        quantity_value(q, &m, point)
    };
    let mut est = central_differences(steps, eval)?;
    if q == Quantity::VolumeFactor {
        let base = quantity_value(q, metric, point)?[0];
        for e in est.estimates.iter_mut() {
            e[0] /= base;
        }
        est.value_scale /= base;
    }
    Ok(est)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FdOptions {
    /// Primary step; the comparison also runs at `dt / 2`.
    pub dt: f64,
    /// Relative agreement required at the primary step.
    pub tolerance: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { dt: 1e-3, tolerance: 1e-6 }
    }
}

/// Closed-form derivative against the finite-difference oracle.
#[derive(Debug, Clone, Serialize)]
pub struct FdComparison {
    pub quantity: Quantity,
    pub analytic: Vec<f64>,
    /// Richardson extrapolate `(4 D(dt/2) - D(dt)) / 3` of the central differences.
    pub fd: Vec<f64>,
    /// Max-abs analytic-minus-central-difference error at `dt` and `dt / 2`.
    pub errors: [f64; 2],
    /// Max-abs analytic-minus-extrapolate error; the pass criterion.
    pub agreement: f64,
    pub scale: f64,
    /// `log2(errors[0] / errors[1])`; `None` at the roundoff floor.
    pub order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn compare_with_fd(q: Quantity, metric: &MetricField, h: &DeformationField, point: &[f64], opts: &FdOptions) -> Result<FdComparison> {
    let order = q.metric_order().max(1);
    let at = VariationAtPoint::from_jets(&metric.jet(point, order.max(2))?, &h.jet(point, order.max(2))?)?;
    let analytic = at.quantity(q)?;
    let est = fd_oracle(q, metric, h, point, &[opts.dt, 0.5 * opts.dt])?;
    let errors = [max_abs_diff(&analytic, &est.estimates[0]), max_abs_diff(&analytic, &est.estimates[1])];
    let scale = max_abs(&analytic).max(max_abs(&est.estimates[0]));
    let floor = roundoff_floor(est.value_scale, 0.5 * opts.dt);
    let conv = if errors[1] > floor && errors[0] > floor { Some((errors[0] / errors[1]).log2()) } else { None };
    let fd: Vec<f64> = est.estimates[0].iter().zip(&est.estimates[1]).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let agreement = max_abs_diff(&analytic, &fd);
    Ok(FdComparison {
        quantity: q,
        analytic,
        fd,
        errors,
        agreement,
        scale,
        order: conv,
        tolerance: opts.tolerance,
        pass: within_tolerance(agreement, scale, opts.tolerance),
    })
}

/// Integrals whose first variation is checked against quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralSelector {
    /// `∫τ dv` on a surface.
    Scalar2d,
    /// `∫|R|² dv`
    CurvatureNorm,
    /// `∫|ρ|² dv`
    RicciNorm,
    /// `∫τ² dv`
    ScalarSquared,
    /// `∫(|R|² − 4|ρ|² + τ²) dv` on a 4-manifold.
    GaussBonnet,
}

impl IntegralSelector {
    pub const FOUR_DIMENSIONAL: [IntegralSelector; 4] =
        [IntegralSelector::CurvatureNorm, IntegralSelector::RicciNorm, IntegralSelector::ScalarSquared, IntegralSelector::GaussBonnet];

    pub fn name(self) -> &'static str {
        match self {
            IntegralSelector::Scalar2d => "scalar_2d",
            IntegralSelector::CurvatureNorm => "curvature_norm",
            IntegralSelector::RicciNorm => "ricci_norm",
            IntegralSelector::ScalarSquared => "scalar_squared",
            IntegralSelector::GaussBonnet => "gauss_bonnet_total",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "scalar_2d" => IntegralSelector::Scalar2d,
            "curvature_norm" | "curv_norm" => IntegralSelector::CurvatureNorm,
            "ricci_norm" => IntegralSelector::RicciNorm,
            "scalar_squared" | "tau_sq" => IntegralSelector::ScalarSquared,
            "gauss_bonnet_total" => IntegralSelector::GaussBonnet,
            other => return Err(Error::InvalidParameter { name: "selector".into(), reason: format!("unknown integral `{other}`") }),
        })
    }

    fn check_dim(self, dim: usize) -> Result<()> {
        let ok = match self {
            IntegralSelector::Scalar2d => dim == 2,
            IntegralSelector::GaussBonnet => dim == 4,
            _ => dim >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: format!("a dimension supported by {}", self.name()), got: dim })
        }
    }

    fn needs_fourth_order(self) -> bool {
        !matches!(self, IntegralSelector::Scalar2d)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegralVariationOptions {
    pub dt: f64,
    pub nodes_per_axis: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for IntegralVariationOptions {
    fn default() -> Self {
        IntegralVariationOptions { dt: 1e-3, nodes_per_axis: 24, abs_tol: 1e-6, rel_tol: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralVariation {
    pub selector: IntegralSelector,
    /// Central differences of the integral at `dt`, `dt/2`, `dt/4`.
    pub lhs_steps: [f64; 3],
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
    /// Richardson convergence order of the left-hand side.
    pub fd_order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub nodes_per_axis: usize,
    pub node_count: usize,
}

/// Per-node scalar integrands `[τ, |R|², |ρ|², τ², GB]` with the volume factor.
fn integrand_values(metric: &MetricField, x: &[f64], declared: &[i8]) -> Result<[f64; 5]> {
    let s = scalar_invariants(metric, x)?;
    let g = metric.value(x)?;
    let observed = inertia(&g, metric.dim());
    if observed != declared {
        return Err(Error::SignatureMismatch { declared: declared.to_vec(), observed });
    }
    let v = s.sqrt_abs_det;
    Ok([s.tau * v, s.norm_r2 * v, s.norm_rho2 * v, s.tau * s.tau * v, s.gauss_bonnet() * v])
}

fn selector_slot(sel: IntegralSelector) -> usize {
    match sel {
        IntegralSelector::Scalar2d => 0,
        IntegralSelector::CurvatureNorm => 1,
        IntegralSelector::RicciNorm => 2,
        IntegralSelector::ScalarSquared => 3,
        IntegralSelector::GaussBonnet => 4,
    }
}

/// First-variation integrands `T_ij` (to be contracted with `h^{ij}`) at one
/// node, in the slot order of [`integrand_values`].
pub fn variation_integrands(metric: &MetricField, x: &[f64], fourth_order: bool) -> Result<[Mat; 5]> {
    let n = metric.dim();
    let jet = metric.jet(x, if fourth_order { 4 } else { 2 })?;
    let pack = curvature_pack_from_jet(&jet.truncate(2), metric.signature.clone())?;
    let g = pack.g;
    let mut out = [ZERO_MAT; 5];
    for i in 0..n {
        for j in 0..n {
            out[0][i][j] = -pack.ricci[i][j] + 0.5 * pack.tau * g[i][j];
        }
    }
    if !fourth_order {
        return Ok(out);
    }
    let conn = ConnectionJet::new(&jet)?;
    let (rho, tau) = conn.ricci_and_scalar()?;
    let drho = conn.derivative(&TensorFieldJet::covariant2(&rho))?;
    let ddrho = conn.derivative(&drho)?;
    let dtau = conn.derivative(&TensorFieldJet::scalar(tau))?;
    let ddtau = conn.derivative(&dtau)?;
    let gi = &pack.g_inv;
    let mut lap_rho = ZERO_MAT;
    let mut hess_tau = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            hess_tau[i][j] = ddtau.value(&[i, j]);
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    v += gi[a][b] * ddrho.value(&[a, b, i, j]);
                }
            }
            lap_rho[i][j] = v;
        }
    }
    let lap_tau = tensor::contract2(gi, &hess_tau, n);
    let (r2, rho2, tau0) = (pack.norm_r2, pack.norm_rho2, pack.tau);
    for i in 0..n {
        for j in 0..n {
            let (rc, pc, lr, ric, gij) = (pack.r_check[i][j], pack.rho_check[i][j], pack.l_rho[i][j], pack.ricci[i][j], g[i][j]);
            let (lp, ht) = (lap_rho[i][j], hess_tau[i][j]);
            out[1][i][j] = -2.0 * rc - 4.0 * lp + 2.0 * ht + 4.0 * pc - 2.0 * lr + 0.5 * r2 * gij;
            out[2][i][j] = -lr - 0.5 * lap_tau * gij - lp + ht + 0.5 * rho2 * gij;
            out[3][i][j] = -2.0 * tau0 * ric + 2.0 * ht - 2.0 * lap_tau * gij + 0.5 * tau0 * tau0 * gij;
            out[4][i][j] = out[1][i][j] - 4.0 * out[2][i][j] + out[3][i][j];
        }
    }
    Ok(out)
}

/// Compare `d/dt ∫ q dv_{g+th}` at `t = 0` (central differences) with the
/// quadrature of the first-variation integrand contracted with `h`, for each
/// selector, on every chart of a closed atlas.
pub fn integral_variation_check(
    selectors: &[IntegralSelector],
    atlas: &Atlas,
    h: &DeformationField,
    opts: &IntegralVariationOptions,
) -> Result<Vec<IntegralVariation>> {
    let first = atlas.charts.first().ok_or_else(|| Error::InvalidParameter { name: "atlas".into(), reason: "no charts".into() })?;
    if !atlas.closed {
        return Err(Error::NotClosed(first.metric.name.clone()));
    }
    if !(opts.dt > 0.0 && opts.abs_tol > 0.0 && opts.rel_tol > 0.0 && opts.nodes_per_axis > 0) {
        return Err(Error::InvalidParameter { name: "options".into(), reason: "step, tolerances and nodes must be positive".into() });
    }
    let dim = first.metric.dim();
    if h.dim() != dim {
        return Err(Error::DimensionMismatch { expected: format!("{dim}-dimensional deformation"), got: h.dim() });
    }
    for chart in &atlas.charts {
        if !chart.metric.is_riemannian() {
            return Err(Error::NotRiemannian);
        }
    }
    for s in selectors {
        s.check_dim(dim)?;
    }
    let fourth = selectors.iter().any(|s| s.needs_fourth_order());
    let ts = [opts.dt, -opts.dt, 0.5 * opts.dt, -0.5 * opts.dt, 0.25 * opts.dt, -0.25 * opts.dt];
    let mut lhs_sums = [0.0; 30];
    let mut rhs_sums = [0.0; 5];
    let mut node_count = 0;
    for chart in &atlas.charts {
        let metric = &chart.metric;
        let mut declared = metric.signature.clone();
        declared.sort();
        let deformed: Vec<MetricField> = ts.iter().map(|&t| metric.deformed(h, t)).collect();
        let grid = ChartGrid::for_domain(&metric.domain, opts.nodes_per_axis);
        node_count += grid.node_count();
        let lhs = grid.sum(30, |x, out| {
            for (k, m) in deformed.iter().enumerate() {
                out[5 * k..5 * k + 5].copy_from_slice(&integrand_values(m, x, &declared)?);
            }
            Ok(())
        })?;
        let rhs = grid.sum(5, |x, out| {
            let t = variation_integrands(metric, x, fourth)?;
            let g = metric.value(x)?;
            let gi = tensor::inverse(&g, dim).ok_or(Error::Degenerate { det: tensor::determinant(&g, dim) })?;
            let hu = raise_both(&gi, &h.jet(x, 0)?.values(), dim);
            let vol = tensor::determinant(&g, dim).abs().sqrt();
            for (o, ti) in out.iter_mut().zip(&t) {
                *o = tensor::contract2(ti, &hu, dim) * vol;
            }
            Ok(())
        })?;
        for (a, v) in lhs_sums.iter_mut().zip(&lhs) {
            *a += chart.coverage * v;
        }
        for (a, v) in rhs_sums.iter_mut().zip(&rhs) {
            *a += chart.coverage * v;
        }
    }
    Ok(selectors
        .iter()
        .map(|&sel| {
            let s = selector_slot(sel);
            let d = |k: usize| (lhs_sums[5 * (2 * k) + s] - lhs_sums[5 * (2 * k + 1) + s]) / (2.0 * ts[2 * k]);
            let steps = [d(0), d(1), d(2)];
            let scale = (0..6).map(|k| lhs_sums[5 * k + s].abs()).fold(0.0, f64::max);
            let floor = roundoff_floor(scale, ts[4]);
            let (d1, d2) = ((steps[0] - steps[1]).abs(), (steps[1] - steps[2]).abs());
            let fd_order = if d1 > floor && d2 > floor { Some((d1 / d2).log2()) } else { None };
            let lhs = steps[0];
            let rhs = rhs_sums[s];
            let diff = (lhs - rhs).abs();
            let tolerance = opts.abs_tol.max(opts.rel_tol * lhs.abs());
            IntegralVariation {
                selector: sel,
                lhs_steps: steps,
                lhs,
                rhs,
                diff,
                fd_order,
                tolerance,
                pass: diff <= tolerance,
                nodes_per_axis: opts.nodes_per_axis,
                node_count,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_metric, Params};
    use crate::fields::{ConstantField, PolynomialField};
    use std::sync::Arc;

    fn flat4() -> MetricField {
        catalog_metric("flat4", &Params::new()).unwrap().metric
    }

    #[test]
    fn inverse_and_volume_closed_forms() {
        let g = tensor::identity(4);
        assert_eq!(inverse_metric_derivative(&g, &g, 4).unwrap(), tensor::scale_mat(&g, -1.0));
        let h = tensor::diag(&[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(inverse_metric_derivative(&g, &h, 4).unwrap(), tensor::diag(&[-2.0, 0.0, 0.0, 0.0]));
        let a = 0.3;
        assert!((volume_element_derivative(&g, &tensor::scale_mat(&g, 2.0 * a), 4).unwrap() - 4.0 * a).abs() < 1e-15);
        let lorentz = tensor::diag(&[-1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(volume_element_derivative(&lorentz, &g, 4), Err(Error::NotRiemannian)));
    }

    #[test]
    fn conformal_quadratic_deformation_of_flat_space() {
        // h = 2u δ with u = x0² + 2 x1 x2 gives τ̇ = −6Δu = −12
        let mut u = PolynomialField::new(4);
        let terms = vec![(2.0, [2, 0, 0, 0]), (4.0, [0, 1, 1, 0])];
        for i in 0..4 {
            u.terms[crate::fields::upper_index(4, i, i)] = terms.clone();
        }
        let h = DeformationField::new("2u delta", Arc::new(u));
        let m = flat4();
        let p = [0.2, -0.1, 0.4, 0.3];
        let tau = scalar_derivative(&m.jet(&p, 2).unwrap(), &h.jet(&p, 2).unwrap()).unwrap();
        assert!((tau + 12.0).abs() < 1e-12, "{tau}");
    }

    #[test]
    fn zero_deformation_gives_zero() {
        let e = catalog_metric("sphere4", &Params::new()).unwrap();
        let h = DeformationField::zero(4);
        let p = [0.7, 1.2, 2.1, 0.4];
        let (g, hj) = (e.metric.jet(&p, 2).unwrap(), h.jet(&p, 2).unwrap());
        assert!(flatten_rank4(&riemann_derivative(&g, &hj).unwrap(), 4).iter().all(|v| *v == 0.0));
        assert!(flatten_mat(&ricci_derivative(&g, &hj).unwrap(), 4).iter().all(|v| *v == 0.0));
        assert_eq!(scalar_derivative(&g, &hj).unwrap(), 0.0);
    }

    #[test]
    fn constant_h_on_flat_space_moves_no_christoffel() {
        let m = flat4();
        let h = DeformationField::new("c", Arc::new(ConstantField { dim: 4, components: tensor::diag(&[1.0, 2.0, 3.0, 4.0]) }));
        let p = [0.1; 4];
        let c = christoffel_derivative(&m.jet(&p, 1).unwrap(), &h.jet(&p, 1).unwrap()).unwrap();
        assert!(flatten_rank3(&c, 4).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn analytic_matches_fd_on_sphere() {
        let e = catalog_metric("sphere4", &Params::new()).unwrap();
        let h = DeformationField::random_periodic(4, 3, 0.3);
        let p = [0.9, 1.3, 2.0, 0.7];
        for q in Quantity::ALL {
            let c = compare_with_fd(q, &e.metric, &h, &p, &FdOptions::default()).unwrap();
            assert!(c.pass, "{:?}: {:?} scale {}", q, c.errors, c.scale);
            if let Some(o) = c.order {
                assert!(o > 1.9, "{q:?} order {o}");
            }
        }
    }

    #[test]
    fn fd_of_flat_scalar_with_zero_h_is_zero() {
        let m = flat4();
        let h = DeformationField::zero(4);
        let est = fd_oracle(Quantity::Scalar, &m, &h, &[0.3; 4], &[1e-3, 5e-4]).unwrap();
        assert!(est.estimates.iter().all(|e| e[0] == 0.0));
    }

    #[test]
    fn flat_torus_integrals_have_zero_variation() {
        let e = catalog_metric("flat4", &Params::new()).unwrap();
        let h = DeformationField::random_periodic(4, 5, 0.2);
        let opts = IntegralVariationOptions { nodes_per_axis: 6, ..Default::default() };
        let res = integral_variation_check(&[IntegralSelector::CurvatureNorm], &Atlas::single(&e.metric), &h, &opts).unwrap();
        // |R(t)|² = O(t²), so only the cubic term survives the central difference
        assert!(res[0].pass && res[0].lhs.abs() < 1e-6 && res[0].rhs == 0.0, "{:?}", res[0]);
    }

    #[test]
    fn open_chart_is_rejected() {
        let e = catalog_metric("polynomial_random", &Params::new()).unwrap();
        let h = DeformationField::zero(4);
        let r = integral_variation_check(&[IntegralSelector::CurvatureNorm], &Atlas::single(&e.metric), &h, &Default::default());
        assert!(matches!(r, Err(Error::NotClosed(_))));
    }
}
