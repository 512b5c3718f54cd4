//! Acceptance suite: one line per criterion, tolerances pinned below.
//!
//! Runs without the libtest harness so the lines print in order; exits
//! non-zero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use curvkit::catalog::{catalog_metric, DeformationField, Params};
use curvkit::curvature::{curvature_pack, curvature_pack_from_jet, within_tolerance};
use curvkit::jets::JetMatrix;
use curvkit::frames::{chern_basis_search, chern_expansion_check, ChernSearchOptions, FrameCurvature};
use curvkit::identities::{
    einstein_residual, identity_residual_with, three_dim_norm_identity, three_dim_reconstruction_defect, weakly_einstein_residual_with,
};
use curvkit::quadrature::{euler_characteristic, Atlas, QuadratureOptions};
use curvkit::variation::{compare_with_fd, integral_variation_check, FdOptions, IntegralSelector, IntegralVariationOptions, Quantity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-9;
const IDENTITY_POINTS: usize = 100;
const IDENTITY_BUDGET: Duration = Duration::from_secs(60);
const EULER_TOL: f64 = 1e-3;
const EULER_BUDGET: Duration = Duration::from_secs(300);
const THREE_DIM_TOL: f64 = 1e-9;
const THREE_DIM_POINTS: usize = 20;
const EINSTEIN_TOL: f64 = 1e-9;
const VARIATION_TRIPLES: usize = 50;
const VARIATION_TOL: f64 = 1e-6;
const VARIATION_DT: f64 = 1e-3;
const MIN_ORDER: f64 = 1.9;
const INTEGRAL_ABS_TOL: f64 = 1e-6;
const INTEGRAL_REL_TOL: f64 = 1e-3;
const INTEGRAL_NODES: usize = 24;
const INTEGRAL_BUDGET: Duration = Duration::from_secs(600);
const CHERN_TOL: f64 = 1e-9;
const CHERN_POINTS: usize = 20;
const PROPERTY_CASES: u32 = 256;
const PROPERTY_BUDGET: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    detail: String,
}

fn seeded(name: &str, seed: u64) -> Params {
    let p = Params::new().with("seed", seed as f64);
    if name == "minkowski_perturbed" || name == "torus_perturbed" {
        p.with("eps", 0.05)
    } else {
        p
    }
}

/// Max relative identity residual over sample points of each entry.
fn identity_sweep(entries: &[(&str, Params)]) -> Outcome {
    let start = Instant::now();
    let (mut worst, mut failures, mut points) = (0.0f64, Vec::new(), 0usize);
    for (name, params) in entries {
        let e = catalog_metric(name, params).expect("catalog entry");
        for p in e.metric.sample_points(IDENTITY_POINTS, 0) {
            points += 1;
            match curvature_pack(&e.metric, &p, true).and_then(|pack| identity_residual_with(&pack, IDENTITY_TOL)) {
                Ok(r) => {
                    worst = worst.max(r.relative);
                    if !r.pass {
                        failures.push(format!("{name} relative {:.2e}", r.relative));
                    }
                }
                Err(err) => failures.push(format!("{name}: {err}")),
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: failures.is_empty() && elapsed <= IDENTITY_BUDGET,
        detail: format!(
            "{points} points, max relative residual {worst:.2e} (tol {IDENTITY_TOL:e}), {:.1} s (budget {} s){}",
            elapsed.as_secs_f64(),
            IDENTITY_BUDGET.as_secs(),
            failure_note(&failures)
        ),
    }
}

fn failure_note(failures: &[String]) -> String {
    match failures.first() {
        None => String::new(),
        Some(first) => format!("; {} failures, first: {first}", failures.len()),
    }
}

fn criterion_1() -> Outcome {
    let mut entries: Vec<(&str, Params)> = ["flat4", "sphere4", "hyperbolic4", "s2xs2", "s2xh2", "conformal_flat"]
        .into_iter()
        .map(|n| (n, Params::new()))
        .collect();
    entries.extend((1..=5).map(|s| ("polynomial_random", seeded("polynomial_random", s))));
    identity_sweep(&entries)
}

fn criterion_2() -> Outcome {
    let entries: Vec<(&str, Params)> = (1..=3).map(|s| ("minkowski_perturbed", seeded("minkowski_perturbed", s))).collect();
    identity_sweep(&entries)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cases = [
        ("sphere4", Params::new(), 2.0),
        ("s2xs2", Params::new(), 4.0),
        ("flat4", Params::new(), 0.0),
        ("torus_perturbed", seeded("torus_perturbed", 1), 0.0),
        ("torus_perturbed", seeded("torus_perturbed", 2), 0.0),
        ("torus_perturbed", seeded("torus_perturbed", 3), 0.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, params, expected) in cases {
        let e = catalog_metric(name, &params).expect("catalog entry");
        match euler_characteristic(&e.metric, &QuadratureOptions::default()) {
            Ok(est) => {
                pass &= (est.chi - expected).abs() <= EULER_TOL;
                parts.push(format!("{name} {:.6}", est.chi));
            }
            Err(err) => {
                pass = false;
                parts.push(format!("{name}: {err}"));
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && elapsed <= EULER_BUDGET,
        detail: format!(
            "chi: {} (tol {EULER_TOL:e}), {:.1} s (budget {} s)",
            parts.join(", "),
            elapsed.as_secs_f64(),
            EULER_BUDGET.as_secs()
        ),
    }
}

fn criterion_4() -> Outcome {
    let mut inners: Vec<(&str, Params)> = vec![("constcurv3", Params::new())];
    inners.extend((1..=5).map(|s| ("polynomial_random", seeded("polynomial_random", s).with("dim", 3.0))));
    let (mut worst_defect, mut worst_norm, mut worst_squares) = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for (name, params) in &inners {
        let inner = catalog_metric(name, params).expect("catalog entry");
        let product = catalog_metric("product_3d_x_line", &params.clone().with_inner(name)).expect("product entry");
        for p in inner.metric.sample_points(THREE_DIM_POINTS, 0) {
            let mut p4 = p.clone();
            p4.push(0.0);
            let checks = curvature_pack(&inner.metric, &p, true)
                .and_then(|pack| three_dim_reconstruction_defect(&pack, THREE_DIM_TOL))
                .and_then(|rec| {
                    let n = curvature_pack(&product.metric, &p4, true).and_then(|pack| three_dim_norm_identity(&pack, THREE_DIM_TOL))?;
                    Ok((rec, n))
                });
            match checks {
                Ok((rec, n)) => {
                    let norm_residual = n.value.abs().max((n.value - n.direct).abs());
                    worst_defect = worst_defect.max(rec.relative);
                    worst_norm = worst_norm.max(norm_residual / n.scale.max(1e-300));
                    worst_squares = worst_squares.max(n.squares_mismatch / n.scale.max(1e-300));
                    let ok = rec.pass
                        && within_tolerance(norm_residual, n.scale, THREE_DIM_TOL)
                        && within_tolerance(n.squares_mismatch, n.scale, THREE_DIM_TOL);
                    if !ok {
                        failures.push(format!("{name} at {p:?}"));
                    }
                }
                Err(err) => failures.push(format!("{name}: {err}")),
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{} metrics x {THREE_DIM_POINTS} points: reconstruction {worst_defect:.2e}, norm identity {worst_norm:.2e}, \
             sum of squares vs 4x norm {worst_squares:.2e} (tol {THREE_DIM_TOL:e}){}",
            inners.len(),
            failure_note(&failures)
        ),
    }
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for name in ["sphere4", "s2xh2"] {
        let e = catalog_metric(name, &Params::new()).expect("catalog entry");
        for p in e.metric.sample_points(IDENTITY_POINTS, 0) {
            match curvature_pack(&e.metric, &p, true).and_then(|pack| weakly_einstein_residual_with(&pack, EINSTEIN_TOL)) {
                Ok(r) => {
                    worst = worst.max(r.relative);
                    if !r.pass {
                        let floor = input_noise_floor(&e.metric, &p);
                        failures.push(format!(
                            "{name} weakly Einstein relative {:.2e} at {p:?}, shift under 1-ulp metric perturbations {floor:.1e}",
                            r.relative
                        ));
                    }
                }
                Err(err) => failures.push(format!("{name}: {err}")),
            }
        }
    }
    let mut einstein_gap = 0.0f64;
    for c in [0.5, 1.0, 1.5] {
        let e = catalog_metric("s2xh2", &Params::new().with("c", c)).expect("catalog entry");
        for p in e.metric.sample_points(IDENTITY_POINTS, 0) {
            match curvature_pack(&e.metric, &p, true).and_then(|pack| einstein_residual(&pack)) {
                Ok(r) => {
                    // Trace-free Ricci of a product of curvatures c and -c is diag(c, c, -c, -c).
                    let gap = (r.max_abs - c).abs();
                    einstein_gap = einstein_gap.max(gap / c);
                    if gap > EINSTEIN_TOL * c {
                        failures.push(format!("s2xh2(c={c}) Einstein max-abs {} differs from c", r.max_abs));
                    }
                }
                Err(err) => failures.push(format!("s2xh2: {err}")),
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "weakly Einstein max relative {worst:.2e} (tol {EINSTEIN_TOL:e}); s2xh2 trace-free Ricci max-abs = c to {einstein_gap:.2e}{}",
            failure_note(&failures)
        ),
    }
}

/// Largest change of the relative weakly-Einstein residual when each metric
/// component function is scaled by `1 + ε r`, `|r| ≤ 1`: the resolution limit
/// of double-precision chart data at `p`.
fn input_noise_floor(metric: &curvkit::MetricField, p: &[f64]) -> f64 {
    let jet = metric.jet(p, 2).expect("metric jet");
    let residual = |j: &JetMatrix| {
        curvature_pack_from_jet(j, metric.signature.clone())
            .and_then(|pack| weakly_einstein_residual_with(&pack, EINSTEIN_TOL))
            .map(|r| r.relative)
            .unwrap_or(f64::NAN)
    };
    let base = residual(&jet);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..8)
        .map(|_| {
            let perturbed = JetMatrix::symmetric(metric.dim(), |i, j| *jet.get(i, j) * (1.0 + f64::EPSILON * rng.random_range(-1.0..1.0)));
            (residual(&perturbed) - base).abs()
        })
        .fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let samples: Vec<(&str, Params)> = common::metric_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = FdOptions { dt: VARIATION_DT, tolerance: VARIATION_TOL };
    let (mut worst, mut min_order, mut floored, mut compared) = (0.0f64, f64::INFINITY, 0usize, 0usize);
    let mut failures = Vec::new();
    for _ in 0..VARIATION_TRIPLES {
        let (name, params) = &samples[rng.random_range(0..samples.len())];
        let e = catalog_metric(name, params).expect("catalog entry");
        let m = &e.metric;
        let seed: u64 = rng.random();
        let h = DeformationField::metric_relative(m, &DeformationField::random_periodic(m.dim(), seed, 0.3));
        let p = m.sample_points(1, seed)[0].clone();
        for q in Quantity::ALL {
            if q == Quantity::VolumeFactor && !m.is_riemannian() {
                continue;
            }
            match compare_with_fd(q, m, &h, &p, &opts) {
                Ok(c) => {
                    compared += 1;
                    worst = worst.max(if c.scale > 1e-6 { c.agreement / c.scale } else { c.agreement });
                    let order_ok = match c.order {
                        Some(o) => {
                            min_order = min_order.min(o);
                            o >= MIN_ORDER
                        }
                        None => {
                            floored += 1;
                            true
                        }
                    };
                    if !(c.pass && order_ok) {
                        failures.push(format!("{name} {}: agreement {:.2e}, order {:?}", q.name(), c.agreement, c.order));
                    }
                }
                Err(err) => failures.push(format!("{name} {}: {err}", q.name())),
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{VARIATION_TRIPLES} triples, {compared} comparisons: max relative disagreement {worst:.2e} (tol {VARIATION_TOL:e}), \
             min order {min_order:.3} (need {MIN_ORDER}), {floored} at roundoff floor{}",
            failure_note(&failures)
        ),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let e = catalog_metric("torus_perturbed", &seeded("torus_perturbed", 1)).expect("catalog entry");
    let h = DeformationField::random_periodic(4, 7, 0.3);
    let opts =
        IntegralVariationOptions { dt: VARIATION_DT, nodes_per_axis: INTEGRAL_NODES, abs_tol: INTEGRAL_ABS_TOL, rel_tol: INTEGRAL_REL_TOL };
    let result = integral_variation_check(&IntegralSelector::FOUR_DIMENSIONAL, &Atlas::single(&e.metric), &h, &opts);
    let elapsed = start.elapsed();
    match result {
        Ok(list) => {
            let parts: Vec<String> =
                list.iter().map(|r| format!("{} lhs {:.6e} rhs {:.6e} diff {:.1e}", r.selector.name(), r.lhs, r.rhs, r.diff)).collect();
            Outcome {
                pass: list.iter().all(|r| r.pass) && elapsed <= INTEGRAL_BUDGET,
                detail: format!(
                    "{}; tol max({INTEGRAL_ABS_TOL:e}, {INTEGRAL_REL_TOL:e}|lhs|), {INTEGRAL_NODES}^4 nodes, {:.1} s (budget {} s)",
                    parts.join("; "),
                    elapsed.as_secs_f64(),
                    INTEGRAL_BUDGET.as_secs()
                ),
            }
        }
        Err(err) => Outcome { pass: false, detail: err.to_string() },
    }
}

fn criterion_8() -> Outcome {
    let entries: Vec<(&str, Params)> = vec![
        ("flat4", Params::new()),
        ("torus_perturbed", seeded("torus_perturbed", 1)),
        ("sphere4", Params::new()),
        ("hyperbolic4", Params::new()),
        ("s2xs2", Params::new()),
        ("s2xh2", Params::new()),
        ("product_3d_x_line", Params::new()),
        ("polynomial_random", seeded("polynomial_random", 1)),
        ("conformal_flat", Params::new()),
    ];
    let (mut searches, mut expansions, mut worst) = (0usize, 0usize, 0.0f64);
    let mut failures = Vec::new();
    for (name, params) in &entries {
        let e = catalog_metric(name, params).expect("catalog entry");
        for (k, p) in e.metric.sample_points(CHERN_POINTS, 0).into_iter().enumerate() {
            let frame = match curvature_pack(&e.metric, &p, true).and_then(|pack| FrameCurvature::from_pack(&pack)) {
                Ok(f) => f,
                Err(err) => {
                    failures.push(format!("{name}: {err}"));
                    continue;
                }
            };
            searches += 1;
            let res = chern_basis_search(&frame.riemann, &ChernSearchOptions { seed: k as u64, ..ChernSearchOptions::default() });
            if !res.success {
                failures.push(format!("{name}: search objective {:.2e} above {:.2e}", res.objective, res.threshold));
                continue;
            }
            match chern_expansion_check(&res.rotated, CHERN_TOL) {
                Ok(list) => {
                    for r in list {
                        expansions += 1;
                        worst = worst.max(if r.scale > 1e-6 { r.residual / r.scale } else { r.residual });
                        if !r.pass {
                            failures.push(format!("{name}: expansion {} residual {:.2e}", r.name, r.residual));
                        }
                    }
                }
                Err(err) => failures.push(format!("{name}: {err}")),
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{searches} searches succeeded to 1e-16(|R|^2+1)^2, {expansions} expansions, max relative residual {worst:.2e} (tol {CHERN_TOL:e}){}",
            failure_note(&failures)
        ),
    }
}

fn criterion_9() -> Outcome {
    let suites: [(&str, fn(u32) -> Result<(), String>); 8] = [
        ("riemann symmetries and first Bianchi", common::suite_riemann_symmetries),
        ("metric compatibility", common::suite_metric_compatibility),
        ("traced quantities", common::suite_contractions),
        ("identity trace on algebraic tensors", common::suite_algebraic_identity),
        ("frame independence", common::suite_frame_independence),
        ("Chern objective sign flips", common::suite_chern_sign_flips),
        ("variation linearity in h", common::suite_variation_linearity),
        ("jets against finite differences", common::suite_jets_vs_fd),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, suite) in suites {
        let start = Instant::now();
        let result = suite(PROPERTY_CASES);
        let elapsed = start.elapsed();
        let ok = result.is_ok() && elapsed <= PROPERTY_BUDGET;
        pass &= ok;
        match result {
            Ok(()) => parts.push(format!("{name} {:.1} s", elapsed.as_secs_f64())),
            Err(e) => parts.push(format!("{name} FAILED: {e}")),
        }
    }
    Outcome {
        pass,
        detail: format!("{PROPERTY_CASES} cases each, budget {} s per suite: {}", PROPERTY_BUDGET.as_secs(), parts.join(", ")),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("quadratic curvature identity, Riemannian 4-manifolds", criterion_1),
        ("quadratic curvature identity, Lorentzian 4-manifolds", criterion_2),
        ("Gauss-Bonnet Euler characteristics", criterion_3),
        ("3-manifold reconstruction and norm identity", criterion_4),
        ("weakly Einstein but not Einstein", criterion_5),
        ("pointwise variation formulas against finite differences", criterion_6),
        ("integral variation identities on the perturbed torus", criterion_7),
        ("Chern frames and component expansions", criterion_8),
        ("property suites", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut all = true;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let id = format!("{}", k + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let out = run();
        all &= out.pass;
        println!("criterion {id} {} | {title} | {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
