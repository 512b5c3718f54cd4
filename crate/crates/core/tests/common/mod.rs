//! Shared generators and property suites for the integration tests.
//!
//! Each suite runs a fixed number of proptest cases and returns the first
//! failure as a message, so both the property tests and the acceptance
//! runner can drive it.

#![allow(dead_code)]

use curvkit::catalog::{catalog_metric, DeformationField, Params};
use curvkit::covariant::{covariant_derivative, TensorFieldJet};
use curvkit::curvature::{check_riemann_symmetries, curvature_pack, CurvaturePack};
use curvkit::fields::ScalarExpr;
use curvkit::frames::{chern_basis_search, chern_objective, rotate_curvature, ChernSearchOptions};
use curvkit::identities::{identity_residual, identity_terms, identity_trace_check, identity_trace_scale};
use curvkit::jets::{JetMatrix, ScalarJet};
use curvkit::tensor::{self, Mat, Rank4, ZERO_MAT, ZERO_RANK4};
use curvkit::variation::{central_differences, Quantity, VariationAtPoint};
use nalgebra::Matrix4;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Catalog entries with the parameters used by the property suites.
pub fn metric_samples() -> Vec<(&'static str, Params)> {
    vec![
        ("flat4", Params::new()),
        ("torus_perturbed", Params::new().with("seed", 2.0)),
        ("sphere4", Params::new().with("r", 1.3)),
        ("hyperbolic4", Params::new().with("c", 0.7)),
        ("s2xs2", Params::new().with("c1", 1.0).with("c2", 2.0)),
        ("s2xh2", Params::new().with("c", 1.5)),
        ("constcurv3", Params::new().with("c", -0.8)),
        ("product_3d_x_line", Params::new().with_inner("constcurv3")),
        ("polynomial_random", Params::new().with("seed", 3.0)),
        ("polynomial_random", Params::new().with("seed", 9.0).with("dim", 3.0)),
        ("conformal_flat", Params::new()),
        ("minkowski_perturbed", Params::new().with("seed", 5.0)),
    ]
}

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() })
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if ok {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    runner(cases).run(&strategy, test).map_err(|e| e.to_string())
}

/// Symmetric matrix with entries in `[-1, 1]`.
pub fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> Mat {
    let mut m = ZERO_MAT;
    for i in 0..dim {
        for j in i..dim {
            let v = rng.random_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// `Aᵀ η A` for a random well-conditioned `A`.
pub fn random_metric_value(rng: &mut ChaCha8Rng, eta: &[i8]) -> Mat {
    let n = eta.len();
    let mut a = tensor::identity(n);
    for row in a.iter_mut().take(n) {
        for x in row.iter_mut().take(n) {
            *x += 0.3 * rng.random_range(-1.0..1.0);
        }
    }
    let mut g = ZERO_MAT;
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (0..n).map(|k| a[k][i] * eta[k] as f64 * a[k][j]).sum();
        }
    }
    g
}

/// Sum of Kulkarni-Nomizu products `A ∧ B` of random symmetric matrices:
/// a generic algebraic curvature tensor.
pub fn random_algebraic_curvature(rng: &mut ChaCha8Rng, dim: usize) -> Rank4 {
    let mut r = ZERO_RANK4;
    for _ in 0..4 {
        let a = random_symmetric(rng, dim);
        let b = random_symmetric(rng, dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        r[i][j][k][l] += a[i][l] * b[j][k] + a[j][k] * b[i][l] - a[i][k] * b[j][l] - a[j][l] * b[i][k];
                    }
                }
            }
        }
    }
    r
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Mat {
    let m = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let q = m.qr().q();
    let mut out = ZERO_MAT;
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = q[(i, j)];
        }
    }
    out
}

fn max_abs_diff_mat(a: &Mat, b: &Mat, dim: usize) -> f64 {
    tensor::max_abs_mat(&tensor::sub_mat(a, b), dim)
}

fn algebraic_pack(seed: u64, lorentzian: bool) -> CurvaturePack {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta: Vec<i8> = if lorentzian { vec![-1, 1, 1, 1] } else { vec![1; 4] };
    let g = random_metric_value(&mut rng, &eta);
    let r = random_algebraic_curvature(&mut rng, 4);
    CurvaturePack::from_algebraic(4, eta, g, r).expect("random metric is non-degenerate")
}

/// Riemann symmetries and first Bianchi identity on catalog metrics.
pub fn suite_riemann_symmetries(cases: u32) -> Result<(), String> {
    let samples = metric_samples();
    run(cases, (0..samples.len(), any::<u64>()), |(idx, seed)| {
        let (name, params) = &samples[idx];
        let e = catalog_metric(name, params).unwrap();
        let p = &e.metric.sample_points(1, seed)[0];
        let pack = curvature_pack(&e.metric, p, true).unwrap();
        let s = check_riemann_symmetries(&pack, 1e-12);
        check(s.pass, || format!("{name} at {p:?}: {s:?}"))
    })
}

/// `∇g = 0` relative to the size of the coordinate derivatives of `g`.
pub fn suite_metric_compatibility(cases: u32) -> Result<(), String> {
    let samples = metric_samples();
    run(cases, (0..samples.len(), any::<u64>()), |(idx, seed)| {
        let (name, params) = &samples[idx];
        let e = catalog_metric(name, params).unwrap();
        let p = &e.metric.sample_points(1, seed)[0];
        let jet = e.metric.jet(p, 1).unwrap();
        let n = e.metric.dim();
        let dg_scale = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .flat_map(|(i, j)| jet.get(i, j).gradient()[..n].to_vec())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let nabla_g = covariant_derivative(&TensorFieldJet::covariant2(&jet), &e.metric, p, 1).unwrap();
        let worst = nabla_g.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
        check(worst <= 1e-10 * dg_scale.max(1e-2), || format!("{name}: |∇g| = {worst:e}, |∂g| = {dg_scale:e}"))
    })
}

/// `gⁱʲρ_ij = τ`, `gⁱʲŘ_ij = |R|²`, `gⁱʲρ̌_ij = |ρ|²`.
pub fn suite_contractions(cases: u32) -> Result<(), String> {
    let samples = metric_samples();
    run(cases, (0..samples.len(), any::<u64>()), |(idx, seed)| {
        let (name, params) = &samples[idx];
        let e = catalog_metric(name, params).unwrap();
        let p = &e.metric.sample_points(1, seed)[0];
        let pack = curvature_pack(&e.metric, p, true).unwrap();
        let n = pack.dim;
        let pairs = [(&pack.ricci, pack.tau), (&pack.r_check, pack.norm_r2), (&pack.rho_check, pack.norm_rho2)];
        for (m, expected) in pairs {
            let traced = tensor::contract2(&pack.g_inv, m, n);
            let scale = expected.abs().max(pack.curvature_scale() * pack.curvature_scale()).max(1.0);
            check((traced - expected).abs() <= 1e-12 * scale, || format!("{name}: trace {traced} vs {expected}"))?;
        }
        Ok(())
    })
}

/// The trace of the quadratic identity vanishes for any algebraic curvature
/// tensor; so does the full residual in dimension four.
pub fn suite_algebraic_identity(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), any::<bool>()), |(seed, lorentzian)| {
        let pack = algebraic_pack(seed, lorentzian);
        let t = identity_trace_check(&pack).unwrap();
        let scale = identity_trace_scale(&pack);
        check(t.abs() <= 1e-12 * scale.max(1.0), || format!("trace {t:e} at scale {scale:e}"))?;
        let r = identity_residual(&pack).unwrap();
        check(r.pass, || format!("residual {:e} at scale {:e}", r.max_abs, r.scale))
    })
}

/// Rotating an orthonormal-frame curvature tensor rotates every identity term
/// and preserves the invariants; the residual in a Chern frame agrees with the
/// coordinate one.
pub fn suite_frame_independence(cases: u32) -> Result<(), String> {
    run(cases, any::<u64>(), |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_algebraic_curvature(&mut rng, 4);
        let q = random_rotation(&mut rng);
        let base = CurvaturePack::from_algebraic(4, vec![1; 4], tensor::identity(4), r).unwrap();
        let rotated_r = rotate_curvature(&r, &q).unwrap();
        let rotated = CurvaturePack::from_algebraic(4, vec![1; 4], tensor::identity(4), rotated_r).unwrap();
        let scale = base.curvature_scale().max(1.0);
        for (a, b) in [(base.tau, rotated.tau), (base.norm_r2, rotated.norm_r2), (base.norm_rho2, rotated.norm_rho2)] {
            check((a - b).abs() <= 1e-11 * scale * scale, || format!("invariant {a} vs {b}"))?;
        }
        let terms = identity_terms(&base);
        let terms_rot = identity_terms(&rotated);
        for (t, t_rot) in terms.iter().zip(&terms_rot) {
            let d = max_abs_diff_mat(&tensor::frame_mat(t, &q, 4), t_rot, 4);
            check(d <= 1e-11 * scale * scale, || format!("term mismatch {d:e}"))?;
        }
        let res = identity_residual(&base).unwrap();
        let res_rot = identity_residual(&rotated).unwrap();
        check((res.max_abs - res_rot.max_abs).abs() <= 1e-10 * res.scale.max(1.0), || {
            format!("residual norms {:e} vs {:e}", res.max_abs, res_rot.max_abs)
        })?;

        let search = chern_basis_search(&r, &ChernSearchOptions { seed, ..ChernSearchOptions::default() });
        check(search.success, || format!("Chern search failed, objective {:e}", search.objective))?;
        let chern = CurvaturePack::from_algebraic(4, vec![1; 4], tensor::identity(4), search.rotated).unwrap();
        let res_chern = identity_residual(&chern).unwrap();
        let coordinate = tensor::frame_mat(&res.residual, &search.q, 4);
        let d = max_abs_diff_mat(&coordinate, &res_chern.residual, 4);
        check(d <= 1e-10 * res.scale.max(1.0), || format!("Chern-frame residual differs by {d:e}"))
    })
}

/// Reversing any subset of the frame vectors keeps the Chern objective: the
/// sign changes form the symmetry group of the vanishing-component pattern.
pub fn suite_chern_sign_flips(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 1u8..16), |(seed, mask)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_algebraic_curvature(&mut rng, 4);
        let mut p = ZERO_MAT;
        for (i, row) in p.iter_mut().enumerate() {
            row[i] = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        }
        let flipped = rotate_curvature(&r, &p).unwrap();
        let (a, b) = (chern_objective(&r), chern_objective(&flipped));
        check((a - b).abs() <= 1e-12 * a.max(1.0), || format!("objective {a} vs {b}"))
    })
}

/// Every closed-form variation is additive and homogeneous in `h`.
pub fn suite_variation_linearity(cases: u32) -> Result<(), String> {
    let samples = metric_samples();
    run(cases, (0..samples.len(), any::<u64>(), -2.0..2.0f64, -2.0..2.0f64), |(idx, seed, alpha, beta)| {
        let (name, params) = &samples[idx];
        let e = catalog_metric(name, params).unwrap();
        let m = &e.metric;
        let p = &m.sample_points(1, seed)[0];
        let h1 = DeformationField::random_periodic(m.dim(), seed, 0.3);
        let h2 = DeformationField::random_polynomial(m.dim(), seed.wrapping_add(1), 0.3);
        let g = m.jet(p, 2).unwrap();
        let (j1, j2) = (h1.jet(p, 2).unwrap(), h2.jet(p, 2).unwrap());
        let combo = JetMatrix::from_fn(m.dim(), |i, j| *j1.get(i, j) * alpha + *j2.get(i, j) * beta);
        let (v1, v2, vc) = (
            VariationAtPoint::from_jets(&g, &j1).unwrap(),
            VariationAtPoint::from_jets(&g, &j2).unwrap(),
            VariationAtPoint::from_jets(&g, &combo).unwrap(),
        );
        for q in Quantity::ALL {
            if q == Quantity::VolumeFactor && !m.is_riemannian() {
                continue;
            }
            let (a, b, c) = (v1.quantity(q).unwrap(), v2.quantity(q).unwrap(), vc.quantity(q).unwrap());
            let mut worst = 0.0f64;
            let mut scale = 1.0f64;
            for ((x, y), z) in a.iter().zip(&b).zip(&c) {
                worst = worst.max((alpha * x + beta * y - z).abs());
                scale = scale.max(x.abs()).max(y.abs());
            }
            check(worst <= 1e-11 * scale, || format!("{name} {}: nonlinearity {worst:e}", q.name()))?;
        }
        Ok(())
    })
}

/// Jet gradients and Hessians of random closed-form scalars against central
/// differences, with second-order convergence on step halving.
pub fn suite_jets_vs_fd(cases: u32) -> Result<(), String> {
    run(cases, (any::<u64>(), 2usize..=4), |(seed, dim)| {
        let f = ScalarExpr::random_trig(dim, seed, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jet = f.eval(&ScalarJet::coordinates(&p, 2));
        let value = |x: &[f64]| f.eval(&ScalarJet::coordinates(x, 0)).value();
        let grad = |x: &[f64]| f.eval(&ScalarJet::coordinates(x, 1)).gradient()[..dim].to_vec();
        for a in 0..dim {
            let shifted = |t: f64| {
                let mut x = p.clone();
                x[a] += t;
                x
            };
            let est = central_differences(&[1e-2, 5e-3, 2.5e-3], |t| Ok(vec![value(&shifted(t))])).unwrap();
            let exact = jet.gradient()[a];
            let errs: Vec<f64> = est.estimates.iter().map(|e| (e[0] - exact).abs()).collect();
            check(errs[0] <= 1e-4 * exact.abs().max(1.0), || format!("∂_{a}: error {:e}", errs[0]))?;
            if errs[1] > 1e-11 {
                let order = (errs[0] / errs[1]).log2();
                check(order >= 1.9, || format!("∂_{a}: order {order}"))?;
            }
            let est2 = central_differences(&[1e-2, 5e-3], |t| Ok(grad(&shifted(t)))).unwrap();
            let hess = jet.hessian();
            let errs2: Vec<f64> =
                est2.estimates.iter().map(|e| (0..dim).map(|b| (e[b] - hess[a][b]).abs()).fold(0.0, f64::max)).collect();
            let hscale = (0..dim).map(|b| hess[a][b].abs()).fold(1.0, f64::max);
            check(errs2[0] <= 1e-4 * hscale, || format!("∂∂_{a}: error {:e}", errs2[0]))?;
            if errs2[1] > 1e-11 {
                let order = (errs2[0] / errs2[1]).log2();
                check(order >= 1.9, || format!("∂∂_{a}: order {order}"))?;
            }
        }
        Ok(())
    })
}
