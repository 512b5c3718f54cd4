//! One function per subcommand, each turning a resolved config into records.

use super::config::RunConfig;
use super::report::{inputs_digest, EquationTag, Record};
use crate::catalog::{catalog_metric, CatalogEntry, DeformationField, Params, CATALOG_NAMES};
use crate::curvature::{check_riemann_symmetries, curvature_pack};
use crate::error::{Error, Result};
use crate::frames::{chern_basis_search, chern_expansion_check, ChernSearchOptions, FrameCurvature};
use crate::identities::{
    identity_residual_with, identity_trace_check, identity_trace_scale, three_dim_norm_identity, three_dim_reconstruction_defect,
};
use crate::quadrature::{euler_characteristic, Atlas, QuadratureOptions};
use crate::variation::{compare_with_fd, integral_variation_check, FdOptions, IntegralSelector, IntegralVariationOptions, Quantity};

/// Setup failures (unknown metric, bad parameters) abort the run; failures
/// while evaluating a check become failing records.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub name: String,
    pub params: Params,
}

impl Context<'_> {
    fn entry(&self) -> Result<CatalogEntry> {
        catalog_metric(&self.name, &self.params)
    }

    fn digest(&self, check: &str, point: &[f64]) -> String {
        inputs_digest(check, &self.name, &self.params, point)
    }

    fn guarded(&self, check: String, tag: EquationTag, point: &[f64], f: impl FnOnce(String) -> Result<Record>) -> Record {
        let digest = self.digest(&check, point);
        f(digest.clone()).unwrap_or_else(|e| Record::failed(check, tag, digest, &e))
    }
}

pub fn verify_identity(ctx: &Context) -> Result<Vec<Record>> {
    let entry = ctx.entry()?;
    let m = &entry.metric;
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: "a 4-dimensional metric".into(), got: m.dim() });
    }
    let mut out = Vec::new();
    for (k, p) in m.sample_points(ctx.cfg.points, ctx.cfg.seed).iter().enumerate() {
        let pack = match curvature_pack(m, p, true) {
            Ok(pack) => pack,
            Err(e) => {
                let check = format!("identity_residual[{k}]");
                out.push(Record::failed(check.clone(), EquationTag::CurvatureIdentity, ctx.digest(&check, p), &e));
                continue;
            }
        };
        let check = format!("riemann_symmetries[{k}]");
        out.push(ctx.guarded(check.clone(), EquationTag::CurvatureSymmetries, p, |d| {
            let s = check_riemann_symmetries(&pack, ctx.cfg.tol_identity);
            Ok(Record::relative(check, EquationTag::CurvatureSymmetries, d, s.max_violation(), s.scale, ctx.cfg.tol_identity))
        }));
        let check = format!("identity_residual[{k}]");
        out.push(ctx.guarded(check.clone(), EquationTag::CurvatureIdentity, p, |d| {
            let r = identity_residual_with(&pack, ctx.cfg.tol_identity)?;
            Ok(Record::relative(check, EquationTag::CurvatureIdentity, d, r.max_abs, r.scale, ctx.cfg.tol_identity))
        }));
        let check = format!("identity_trace[{k}]");
        out.push(ctx.guarded(check.clone(), EquationTag::IdentityTrace, p, |d| {
            let t = identity_trace_check(&pack)?;
            Ok(Record::relative(check, EquationTag::IdentityTrace, d, t.abs(), identity_trace_scale(&pack), ctx.cfg.tol_identity))
        }));
    }
    Ok(out)
}

pub fn gauss_bonnet(ctx: &Context) -> Result<Vec<Record>> {
    let entry = ctx.entry()?;
    let opts = QuadratureOptions { initial_nodes: ctx.cfg.grid_nodes, max_nodes: ctx.cfg.max_grid_nodes, rel_tol: ctx.cfg.quad_rel_tol };
    let check = "euler_characteristic".to_string();
    let tol = ctx.cfg.tol_gauss_bonnet;
    Ok(vec![ctx.guarded(check.clone(), EquationTag::GaussBonnetFormula, &[], |d| {
        let est = euler_characteristic(&entry.metric, &opts)?;
        let expected = entry.reference.euler.unwrap_or(est.chi.round());
        Ok(Record {
            check,
            equation: EquationTag::GaussBonnetFormula,
            inputs_digest: d,
            value: est.chi,
            tolerance: tol,
            pass: (est.chi - expected).abs() <= tol,
            expected: Some(expected),
            detail: Some(format!("raw integral {:e}, {} nodes per axis", est.raw_integral, est.nodes_per_axis)),
        })
    })])
}

fn quantity_tag(q: Quantity) -> EquationTag {
    match q {
        Quantity::InverseMetric => EquationTag::VariationInverseMetric,
        Quantity::VolumeFactor => EquationTag::VariationVolumeElement,
        Quantity::Christoffel => EquationTag::VariationChristoffel,
        Quantity::Riemann => EquationTag::VariationRiemann,
        Quantity::Ricci => EquationTag::VariationRicci,
        Quantity::Scalar => EquationTag::VariationScalar,
    }
}

fn selector_tag(s: IntegralSelector) -> EquationTag {
    match s {
        IntegralSelector::Scalar2d => EquationTag::SurfaceScalarVariation,
        IntegralSelector::CurvatureNorm => EquationTag::CurvatureNormVariation,
        IntegralSelector::RicciNorm => EquationTag::RicciNormVariation,
        IntegralSelector::ScalarSquared => EquationTag::ScalarSquaredVariation,
        IntegralSelector::GaussBonnet => EquationTag::GaussBonnetVariation,
    }
}

pub fn variation_check(ctx: &Context) -> Result<Vec<Record>> {
    let entry = ctx.entry()?;
    let m = &entry.metric;
    let h = DeformationField::random_periodic(m.dim(), ctx.cfg.seed, ctx.cfg.h_amplitude);
    let h_pointwise = DeformationField::metric_relative(m, &h);
    let fd = FdOptions { dt: ctx.cfg.dt, tolerance: ctx.cfg.tol_variation };
    let mut out = Vec::new();
    for (k, p) in m.sample_points(ctx.cfg.points, ctx.cfg.seed).iter().enumerate() {
        for q in Quantity::ALL {
            if q == Quantity::VolumeFactor && !m.is_riemannian() {
                continue;
            }
            let check = format!("variation_{}[{k}]", q.name());
            let tag = quantity_tag(q);
            out.push(ctx.guarded(check.clone(), tag, p, |d| {
                let c = compare_with_fd(q, m, &h_pointwise, p, &fd)?;
                let mut r = Record::relative(check, tag, d, c.agreement, c.scale, fd.tolerance);
                if let Some(order) = c.order {
                    r.pass &= order >= ctx.cfg.min_fd_order;
                }
                r.detail = Some(match c.order {
                    Some(o) => format!("convergence order {o:.3}"),
                    None => "error at roundoff floor".into(),
                });
                Ok(r)
            }));
        }
    }
    if ctx.cfg.integrals {
        let selectors: Vec<IntegralSelector> = match m.dim() {
            2 => vec![IntegralSelector::Scalar2d, IntegralSelector::CurvatureNorm, IntegralSelector::RicciNorm, IntegralSelector::ScalarSquared],
            4 => IntegralSelector::FOUR_DIMENSIONAL.to_vec(),
            _ => vec![IntegralSelector::CurvatureNorm, IntegralSelector::RicciNorm, IntegralSelector::ScalarSquared],
        };
        let opts = IntegralVariationOptions {
            dt: ctx.cfg.dt,
            nodes_per_axis: ctx.cfg.integral_nodes,
            abs_tol: ctx.cfg.tol_integral_abs,
            rel_tol: ctx.cfg.tol_integral_rel,
        };
        match integral_variation_check(&selectors, &Atlas::single(m), &h, &opts) {
            Ok(results) => {
                for r in results {
                    let check = format!("integral_{}", r.selector.name());
                    out.push(Record {
                        inputs_digest: ctx.digest(&check, &[]),
                        check,
                        equation: selector_tag(r.selector),
                        value: r.diff,
                        tolerance: r.tolerance,
                        pass: r.pass,
                        expected: None,
                        detail: Some(format!("lhs {:e}, rhs {:e}", r.lhs, r.rhs)),
                    });
                }
            }
            Err(e) => {
                for s in selectors {
                    let check = format!("integral_{}", s.name());
                    out.push(Record::failed(check.clone(), selector_tag(s), ctx.digest(&check, &[]), &e));
                }
            }
        }
    }
    Ok(out)
}

pub fn chern_basis(ctx: &Context) -> Result<Vec<Record>> {
    let entry = ctx.entry()?;
    let m = &entry.metric;
    if m.dim() != 4 || !m.is_riemannian() {
        return Err(Error::InvalidParameter { name: "metric".into(), reason: "Chern frames need a Riemannian 4-manifold".into() });
    }
    let opts = ChernSearchOptions { restarts: ctx.cfg.chern_restarts, max_iterations: ctx.cfg.chern_max_iterations, seed: ctx.cfg.seed };
    let mut out = Vec::new();
    for (k, p) in m.sample_points(ctx.cfg.points, ctx.cfg.seed).iter().enumerate() {
        let check = format!("chern_search[{k}]");
        let frame = curvature_pack(m, p, true).and_then(|pack| FrameCurvature::from_pack(&pack));
        let frame = match frame {
            Ok(f) => f,
            Err(e) => {
                out.push(Record::failed(check.clone(), EquationTag::ChernConditions, ctx.digest(&check, p), &e));
                continue;
            }
        };
        let res = chern_basis_search(&frame.riemann, &opts);
        out.push(Record {
            inputs_digest: ctx.digest(&check, p),
            check,
            equation: EquationTag::ChernConditions,
            value: res.objective,
            tolerance: res.threshold,
            pass: res.success,
            expected: None,
            detail: Some(format!("{} of {} restarts succeeded", res.successful_restarts, res.restarts)),
        });
        if !res.success {
            continue;
        }
        match chern_expansion_check(&res.rotated, ctx.cfg.tol_chern) {
            Ok(list) => {
                for e in list {
                    let check = format!("chern_expansion_{}[{k}]", e.name);
                    let d = ctx.digest(&check, p);
                    let mut r = Record::relative(check, EquationTag::ChernExpansion, d, e.residual, e.scale, ctx.cfg.tol_chern);
                    r.pass = e.pass;
                    out.push(r);
                }
            }
            Err(e) => {
                let check = format!("chern_expansion[{k}]");
                out.push(Record::failed(check.clone(), EquationTag::ChernExpansion, ctx.digest(&check, p), &e));
            }
        }
    }
    Ok(out)
}

pub fn three_dim(ctx: &Context) -> Result<Vec<Record>> {
    let entry = ctx.entry()?;
    let m = &entry.metric;
    if m.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: "a 3-dimensional metric".into(), got: m.dim() });
    }
    let product = catalog_metric("product_3d_x_line", &ctx.params.clone().with_inner(&ctx.name))?;
    let tol = ctx.cfg.tol_three_dim;
    let mut out = Vec::new();
    for (k, p) in m.sample_points(ctx.cfg.points, ctx.cfg.seed).iter().enumerate() {
        let check = format!("reconstruction_defect[{k}]");
        out.push(ctx.guarded(check.clone(), EquationTag::ThreeDimReconstruction, p, |d| {
            let r = three_dim_reconstruction_defect(&curvature_pack(m, p, true)?, tol)?;
            Ok(Record::relative(check, EquationTag::ThreeDimReconstruction, d, r.defect, r.scale, tol))
        }));
        let mut p4 = p.clone();
        p4.push(0.0);
        let norm = curvature_pack(&product.metric, &p4, true).and_then(|pack| three_dim_norm_identity(&pack, tol));
        let check = format!("norm_identity[{k}]");
        let check_sq = format!("sum_of_squares[{k}]");
        match norm {
            Ok(n) => {
                let residual = n.value.abs().max((n.value - n.direct).abs());
                out.push(Record::relative(check.clone(), EquationTag::ThreeDimNormIdentity, ctx.digest(&check, p), residual, n.scale, tol));
                let d = ctx.digest(&check_sq, p);
                out.push(Record::relative(check_sq, EquationTag::ThreeDimSumOfSquares, d, n.squares_mismatch, n.scale, tol));
            }
            Err(e) => {
                out.push(Record::failed(check.clone(), EquationTag::ThreeDimNormIdentity, ctx.digest(&check, p), &e));
                out.push(Record::failed(check_sq.clone(), EquationTag::ThreeDimSumOfSquares, ctx.digest(&check_sq, p), &e));
            }
        }
    }
    Ok(out)
}

/// Reference invariants of catalog entries at sample points.
pub fn catalog(ctx: &Context, names: &[String]) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for name in names {
        let entry = catalog_metric(name, &ctx.params)?;
        let sub = Context { cfg: ctx.cfg, name: name.clone(), params: ctx.params.clone() };
        let refs = entry.reference;
        let wanted = [("tau", refs.tau), ("norm_r2", refs.norm_r2), ("norm_rho2", refs.norm_rho2)];
        for (k, p) in entry.metric.sample_points(ctx.cfg.points, ctx.cfg.seed).iter().enumerate() {
            let pack = curvature_pack(&entry.metric, p, true);
            for (label, reference) in wanted {
                let Some(expected) = reference else { continue };
                let check = format!("{name}_{label}[{k}]");
                out.push(sub.guarded(check.clone(), EquationTag::CatalogReference, p, |d| {
                    let pack = pack.as_ref().map_err(|e| Error::WrongConstruction(e.to_string()))?;
                    let value = match label {
                        "tau" => pack.tau,
                        "norm_r2" => pack.norm_r2,
                        _ => pack.norm_rho2,
                    };
                    let mut r = Record::relative(check, EquationTag::CatalogReference, d, (value - expected).abs(), expected.abs(), ctx.cfg.tol_identity);
                    r.expected = Some(expected);
                    Ok(r)
                }));
            }
        }
    }
    Ok(out)
}

pub fn all_catalog_names() -> Vec<String> {
    CATALOG_NAMES.iter().map(|s| s.to_string()).collect()
}
