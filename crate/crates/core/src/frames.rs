//! Orthonormal frames, rotations of frame curvature, Chern frames and the
//! component expansions that hold in them.

use nalgebra::{Matrix4, Matrix6, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::normalized_determinant;
use crate::curvature::{within_tolerance, CurvaturePack};
use crate::error::{Error, Result};
use crate::tensor::{self, Mat, Rank4, ZERO_MAT};

/// Columns of `frame` are the frame vectors in coordinates, so that
/// `frameᵀ g frame = diag(eta)`.
#[derive(Debug, Clone, Serialize)]
pub struct FrameRotation {
    pub dim: usize,
    pub frame: Mat,
    pub eta: Vec<i8>,
    pub defect: f64,
}

/// Signature-aware Gram-Schmidt on the coordinate basis, in coordinate order.
pub fn orthonormal_frame(g: &Mat, dim: usize, signature: &[i8]) -> Result<FrameRotation> {
    if normalized_determinant(g, dim) <= crate::catalog::DEGENERACY_TOL {
        return Err(Error::Degenerate { det: tensor::determinant(g, dim) });
    }
    let scale = tensor::max_abs_mat(g, dim);
    let ip = |u: &[f64; 4], v: &[f64; 4]| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                s += u[i] * g[i][j] * v[j];
            }
        }
        s
    };
    let mut vecs: Vec<[f64; 4]> = Vec::with_capacity(dim);
    let mut eta = Vec::with_capacity(dim);
    for k in 0..dim {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        // two passes keep the frame orthogonal to roundoff
        for _ in 0..2 {
            for (u, s) in vecs.iter().zip(&eta) {
                let c = ip(&v, u) * f64::from(*s);
                for i in 0..dim {
                    v[i] -= c * u[i];
                }
            }
        }
        let n2 = ip(&v, &v);
        if n2.abs() <= 1e-12 * scale {
            return Err(Error::NullVector);
        }
        let s: i8 = if n2 > 0.0 { 1 } else { -1 };
        let inv = 1.0 / n2.abs().sqrt();
        for x in v.iter_mut().take(dim) {
            *x *= inv;
        }
        vecs.push(v);
        eta.push(s);
    }
    let mut sorted_eta = eta.clone();
    sorted_eta.sort();
    let mut sorted_sig = signature.to_vec();
    sorted_sig.sort();
    if sorted_eta != sorted_sig {
        return Err(Error::SignatureMismatch { declared: signature.to_vec(), observed: sorted_eta });
    }
    let mut frame = ZERO_MAT;
    for (a, v) in vecs.iter().enumerate() {
        for i in 0..dim {
            frame[i][a] = v[i];
        }
    }
    let gf = tensor::frame_mat(g, &frame, dim);
    let mut defect = 0.0f64;
    for a in 0..dim {
        for b in 0..dim {
            let target = if a == b { f64::from(eta[a]) } else { 0.0 };
            defect = defect.max((gf[a][b] - target).abs());
        }
    }
    Ok(FrameRotation { dim, frame, eta, defect })
}

/// Curvature data in an orthonormal frame.
#[derive(Debug, Clone)]
pub struct FrameCurvature {
    pub frame: FrameRotation,
    pub riemann: Rank4,
    pub ricci: Mat,
    pub tau: f64,
}

impl FrameCurvature {
    pub fn from_pack(pack: &CurvaturePack) -> Result<Self> {
        let frame = orthonormal_frame(&pack.g, pack.dim, &pack.signature)?;
        let riemann = tensor::transform_rank4(&pack.riemann, &frame.frame, pack.dim);
        let ricci = tensor::frame_mat(&pack.ricci, &frame.frame, pack.dim);
        Ok(FrameCurvature { frame, riemann, ricci, tau: pack.tau })
    }
}

/// Orthonormal-frame Ricci tensor `ρ_jk = Σ_i R_ijki` and `τ = Σ ρ_ii`.
pub fn frame_ricci(r: &Rank4) -> (Mat, f64) {
    let mut ricci = ZERO_MAT;
    for j in 0..4 {
        for k in 0..4 {
            ricci[j][k] = (0..4).map(|i| r[i][j][k][i]).sum();
        }
    }
    let tau = (0..4).map(|i| ricci[i][i]).sum();
    (ricci, tau)
}

pub fn frame_norm2(r: &Rank4) -> f64 {
    r.iter().flatten().flatten().flatten().map(|x| x * x).sum()
}

pub fn orthogonality_defect(q: &Mat) -> f64 {
    let qtq = tensor::mat_mul(&tensor::transpose(q), q, 4);
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let t = if i == j { 1.0 } else { 0.0 };
            d = d.max((qtq[i][j] - t).abs());
        }
    }
    d
}

/// `R'_ijkl = Q_ai Q_bj Q_ck Q_dl R_abcd`.
pub fn rotate_curvature(r: &Rank4, q: &Mat) -> Result<Rank4> {
    let defect = orthogonality_defect(q);
    if defect > 1e-12 {
        return Err(Error::NotOrthogonal { defect });
    }
    Ok(tensor::transform_rank4(r, q, 4))
}

/// Index quadruples (zero-based) whose components vanish in a Chern frame:
/// `R_1213, R_1214, R_1223, R_1224, R_1314, R_1323`.
pub const CHERN_COMPONENTS: [[usize; 4]; 6] =
    [[0, 1, 0, 2], [0, 1, 0, 3], [0, 1, 1, 2], [0, 1, 1, 3], [0, 2, 0, 3], [0, 2, 1, 2]];

fn chern_residuals(r: &Rank4) -> [f64; 6] {
    CHERN_COMPONENTS.map(|[a, b, c, d]| r[a][b][c][d])
}

pub fn chern_objective(r: &Rank4) -> f64 {
    chern_residuals(r).iter().map(|x| x * x).sum()
}

/// Success threshold of the Chern search.
pub fn chern_threshold(r: &Rank4) -> f64 {
    let s = frame_norm2(r) + 1.0;
    1e-16 * s * s
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChernSearchOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for ChernSearchOptions {
    fn default() -> Self {
        ChernSearchOptions { restarts: 32, max_iterations: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChernSearchResult {
    /// Rotation of the input frame; the Chern frame is `frame · q`.
    pub q: Mat,
    pub objective: f64,
    pub threshold: f64,
    pub success: bool,
    /// Restarts that reached the threshold.
    pub successful_restarts: usize,
    pub restarts: usize,
    /// Components `R'_ijkl` in the returned frame.
    #[serde(skip)]
    pub rotated: Rank4,
}

const GENERATORS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn skew(omega: &[f64; 6]) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    for (k, &(p, q)) in GENERATORS.iter().enumerate() {
        m[(p, q)] = omega[k];
        m[(q, p)] = -omega[k];
    }
    m
}

fn to_mat(m: &Matrix4<f64>) -> Mat {
    tensor::from_padded(m, 4)
}

/// Re-orthonormalise columns (QR with positive diagonal).
fn reorthonormalize(q: &Matrix4<f64>) -> Matrix4<f64> {
    let qr = q.qr();
    let mut qq = qr.q();
    let r = qr.r();
    for j in 0..4 {
        if r[(j, j)] < 0.0 {
            for i in 0..4 {
                qq[(i, j)] = -qq[(i, j)];
            }
        }
    }
    qq
}

/// Jacobian of the six Chern components of `rotate(R', exp(Ω))` at `Ω = 0`.
fn chern_jacobian(rp: &Rank4) -> Matrix6<f64> {
    let mut jac = Matrix6::zeros();
    for (row, &[i, j, k, l]) in CHERN_COMPONENTS.iter().enumerate() {
        for (col, &(p, q)) in GENERATORS.iter().enumerate() {
            // Ω_pq = 1, Ω_qp = −1: dR'_ijkl = Σ_m Ω_mi R'_mjkl + ...
            let omega = |m: usize, n: usize| -> f64 {
                if m == p && n == q {
                    1.0
                } else if m == q && n == p {
                    -1.0
                } else {
                    0.0
                }
            };
            let mut v = 0.0;
            for m in 0..4 {
                v += omega(m, i) * rp[m][j][k][l]
                    + omega(m, j) * rp[i][m][k][l]
                    + omega(m, k) * rp[i][j][m][l]
                    + omega(m, l) * rp[i][j][k][m];
            }
            jac[(row, col)] = v;
        }
    }
    jac
}

fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix4<f64> {
    use rand::Rng;
    let m = Matrix4::from_fn(|_, _| {
        // Box-Muller normal sample
        let u1: f64 = rng.random_range(f64::EPSILON..1.0);
        let u2: f64 = rng.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    });
    let mut q = reorthonormalize(&m);
    if q.determinant() < 0.0 {
        for i in 0..4 {
            q[(i, 0)] = -q[(i, 0)];
        }
    }
    q
}

/// Levenberg-Marquardt on SO(4) from `q0`; returns the final rotation and
/// objective.
fn local_search(r: &Rank4, q0: Matrix4<f64>, max_iterations: usize, stop: f64) -> (Matrix4<f64>, f64) {
    let mut q = q0;
    let mut rp = tensor::transform_rank4(r, &to_mat(&q), 4);
    let mut f = chern_residuals(&rp);
    let mut obj: f64 = f.iter().map(|x| x * x).sum();
    let mut lambda = 1e-3;
    for _ in 0..max_iterations {
        if obj <= stop {
            break;
        }
        let jac = chern_jacobian(&rp);
        let fv = Vector6::from_column_slice(&f);
        let jtj = jac.transpose() * jac;
        let g = jac.transpose() * fv;
        let mut improved = false;
        while lambda < 1e12 {
            let mut a = jtj;
            let mean_diag = (0..6).map(|i| jtj[(i, i)]).sum::<f64>() / 6.0;
            for i in 0..6 {
                a[(i, i)] += lambda * (jtj[(i, i)] + 1e-3 * mean_diag + 1e-300);
            }
            let Some(step) = a.lu().solve(&(-g)) else {
                lambda *= 10.0;
                continue;
            };
            let omega = [step[0], step[1], step[2], step[3], step[4], step[5]];
            let cand = reorthonormalize(&(q * skew(&omega).exp()));
            let rc = tensor::transform_rank4(r, &to_mat(&cand), 4);
            let fc = chern_residuals(&rc);
            let oc: f64 = fc.iter().map(|x| x * x).sum();
            if oc < obj {
                q = cand;
                rp = rc;
                f = fc;
                obj = oc;
                lambda = (lambda * 0.1).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (q, obj)
}

/// Multi-start search for a rotation making the six Chern components vanish.
/// Restart 0 starts at the identity, the rest at seeded random rotations;
/// among successful restarts the one closest to the identity is returned.
pub fn chern_basis_search(r: &Rank4, options: &ChernSearchOptions) -> ChernSearchResult {
    let threshold = chern_threshold(r);
    let scale = frame_norm2(r) + 1.0;
    let stop = 1e-30 * scale * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<(f64, Matrix4<f64>, f64)> = None; // (distance, q, objective)
    let mut best_fail: Option<(Matrix4<f64>, f64)> = None;
    let mut successes = 0;
    let restarts = options.restarts.max(1);
    for k in 0..restarts {
        let start = if k == 0 { Matrix4::identity() } else { random_rotation(&mut rng) };
        let (q, obj) = local_search(r, start, options.max_iterations, stop);
        if obj <= threshold {
            successes += 1;
            let dist = (q - Matrix4::identity()).norm();
            if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
                best = Some((dist, q, obj));
            }
        } else if best_fail.as_ref().is_none_or(|(_, o)| obj < *o) {
            best_fail = Some((q, obj));
        }
    }
    let (q, objective) = match best {
        Some((_, q, o)) => (q, o),
        None => best_fail.expect("at least one restart"),
    };
    let qm = to_mat(&q);
    let rotated = tensor::transform_rank4(r, &qm, 4);
    ChernSearchResult {
        q: qm,
        objective,
        threshold,
        success: successes > 0,
        successful_restarts: successes,
        restarts,
        rotated,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingerThorpeReport {
    pub einstein_defect: f64,
    pub chern_objective: f64,
    /// Largest component with exactly three distinct indices.
    pub off_block: f64,
    /// Largest of `|R_1212 − R_3434|, |R_1313 − R_2424|, |R_1414 − R_2323|`.
    pub pairing_defect: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Block-diagonal Singer-Thorpe normal form of an Einstein curvature tensor
/// in the given orthonormal frame.
pub fn singer_thorpe_check(r: &Rank4, ricci: &Mat, tau: f64, tolerance: f64) -> SingerThorpeReport {
    let mut einstein_defect = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { tau / 4.0 } else { 0.0 };
            einstein_defect = einstein_defect.max((ricci[i][j] - target).abs());
        }
    }
    let mut off_block = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut ids = [i, j, k, l];
                    ids.sort();
                    let distinct = 1 + ids.windows(2).filter(|w| w[0] != w[1]).count();
                    if distinct == 3 {
                        off_block = off_block.max(r[i][j][k][l].abs());
                    }
                }
            }
        }
    }
    let pairing_defect = (r[0][1][0][1] - r[2][3][2][3])
        .abs()
        .max((r[0][2][0][2] - r[1][3][1][3]).abs())
        .max((r[0][3][0][3] - r[1][2][1][2]).abs());
    let chern = chern_objective(r);
    let scale = tensor::max_abs_rank4(r, 4);
    let pass = within_tolerance(einstein_defect, scale, tolerance)
        && within_tolerance(off_block, scale, tolerance)
        && within_tolerance(pairing_defect, scale, tolerance)
        && within_tolerance(chern.sqrt(), scale, tolerance);
    SingerThorpeReport { einstein_defect, chern_objective: chern, off_block, pairing_defect, scale, tolerance, pass }
}

/// One displayed expansion: `lhs` by direct contraction, `rhs` from the
/// component formula.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionResidual {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    pub pass: bool,
}

/// Evaluate every component expansion that holds in a Chern frame, together
/// with the per-entry forms of the quadratic identity.
pub fn chern_expansion_check(r: &Rank4, tolerance: f64) -> Result<Vec<ExpansionResidual>> {
    let objective = chern_objective(r);
    let norm = frame_norm2(r);
    let threshold = 1e-12 * (norm + 1.0) * (norm + 1.0);
    if objective > threshold {
        return Err(Error::NotChern { objective, threshold });
    }
    let (rho, tau) = frame_ricci(r);
    let scale = norm.max(tau * tau).max(1e-300);
    let mut out = Vec::new();
    let mut push = |name: String, lhs: f64, rhs: f64| {
        let residual = (lhs - rhs).abs();
        out.push(ExpansionResidual { pass: within_tolerance(residual, scale, tolerance), name, lhs, rhs, residual, scale });
    };

    // one-based accessors matching the printed index names
    let rr = |a: usize, b: usize, c: usize, d: usize| r[a - 1][b - 1][c - 1][d - 1];
    let p = |a: usize, b: usize| rho[a - 1][b - 1];
    let (k12, k13, k14, k23, k24, k34) = (rr(1, 2, 1, 2), rr(1, 3, 1, 3), rr(1, 4, 1, 4), rr(2, 3, 2, 3), rr(2, 4, 2, 4), rr(3, 4, 3, 4));
    let (m1234, m1324, m1423) = (rr(1, 2, 3, 4), rr(1, 3, 2, 4), rr(1, 4, 2, 3));
    let sq = |x: f64| x * x;
    let mixed = sq(m1234) + sq(m1324) + sq(m1423);

    let r_check = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    s += r[a][b][c][i - 1] * r[a][b][c][j - 1];
                }
            }
        }
        s
    };
    let rho_check = |i: usize, j: usize| (0..4).map(|a| rho[i - 1][a] * rho[j - 1][a]).sum::<f64>();
    let l_half = |i: usize, j: usize| -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += rho[a][b] * r[i - 1][a][b][j - 1];
            }
        }
        s
    };

    // squared norms of the slices R_abcd, d fixed
    push(
        "curvature_slice_sum_d1".into(),
        r_check(1, 1),
        2.0 * (sq(k12) + sq(k13) + sq(k14) + mixed + sq(p(1, 2)) + sq(p(1, 3)) + sq(p(1, 4))),
    );
    push(
        "curvature_slice_sum_d2".into(),
        r_check(2, 2),
        2.0 * (sq(k12) + sq(k23) + sq(k24) + mixed + sq(p(1, 2)) + sq(p(2, 3)) + sq(p(2, 4)) + 2.0 * sq(p(3, 4))),
    );
    push(
        "curvature_slice_sum_d3".into(),
        r_check(3, 3),
        2.0 * (sq(k13) + sq(k23) + sq(k34) + mixed + sq(p(1, 3)) + 2.0 * sq(p(1, 4)) + sq(p(2, 3)) + 2.0 * sq(p(2, 4)) + sq(p(3, 4))),
    );
    push(
        "curvature_slice_sum_d4".into(),
        r_check(4, 4),
        2.0 * (sq(k14)
            + sq(k24)
            + sq(k34)
            + mixed
            + 2.0 * sq(p(1, 2))
            + 2.0 * sq(p(1, 3))
            + sq(p(1, 4))
            + 2.0 * sq(p(2, 3))
            + sq(p(2, 4))
            + sq(p(3, 4))),
    );
    let off_rho2 = sq(p(1, 2)) + sq(p(1, 3)) + sq(p(1, 4)) + sq(p(2, 3)) + sq(p(2, 4)) + sq(p(3, 4));
    let sec2 = sq(k12) + sq(k13) + sq(k14) + sq(k23) + sq(k24) + sq(k34);
    push("curvature_norm".into(), norm, 4.0 * (sec2 + 2.0 * mixed + 2.0 * off_rho2));

    // Ricci expansions
    push(
        "ricci_row_norm_1".into(),
        rho_check(1, 1),
        sq(k12) + sq(k13) + sq(k14) + 2.0 * k12 * k13 + 2.0 * k13 * k14 + 2.0 * k12 * k14 + sq(p(1, 2)) + sq(p(1, 3)) + sq(p(1, 4)),
    );
    push(
        "ricci_curvature_action_11".into(),
        l_half(1, 1),
        sq(k12) + sq(k13) + sq(k14) + k12 * k23 + k12 * k24 + k13 * k23 + k13 * k34 + k14 * k24 + k14 * k34,
    );
    push(
        "scalar_times_ricci_11".into(),
        tau * p(1, 1),
        2.0 * (sq(k12)
            + sq(k13)
            + sq(k14)
            + 2.0 * k12 * k13
            + 2.0 * k13 * k14
            + 2.0 * k12 * k14
            + k12 * k23
            + k12 * k24
            + k12 * k34
            + k13 * k23
            + k13 * k24
            + k13 * k34
            + k14 * k23
            + k14 * k24
            + k14 * k34),
    );
    let rho_norm2: f64 = rho.iter().flatten().map(|x| x * x).sum();
    push(
        "ricci_norm_components".into(),
        rho_norm2,
        sq(p(1, 1)) + sq(p(2, 2)) + sq(p(3, 3)) + sq(p(4, 4)) + 2.0 * off_rho2,
    );
    push(
        "ricci_norm_sectional".into(),
        rho_norm2,
        2.0 * (sec2
            + k12 * k13
            + k13 * k14
            + k12 * k14
            + k12 * k23
            + k23 * k24
            + k12 * k24
            + k13 * k23
            + k23 * k34
            + k13 * k34
            + k14 * k24
            + k24 * k34
            + k14 * k34
            + off_rho2),
    );
    push(
        "scalar_squared".into(),
        tau * tau,
        4.0 * (sec2
            + 2.0 * k12 * k13
            + 2.0 * k12 * k14
            + 2.0 * k12 * k23
            + 2.0 * k12 * k24
            + 2.0 * k12 * k34
            + 2.0 * k13 * k14
            + 2.0 * k13 * k23
            + 2.0 * k13 * k24
            + 2.0 * k13 * k34
            + 2.0 * k24 * k34
            + 2.0 * k14 * k23
            + 2.0 * k14 * k24
            + 2.0 * k14 * k34
            + 2.0 * k23 * k24
            + 2.0 * k23 * k34),
    );

    // diagonal entries of the identity
    let gb_quarter = 0.25 * norm - rho_norm2 + 0.25 * tau * tau;
    for d in 1..=4 {
        let v = r_check(d, d) - 2.0 * rho_check(d, d) - 2.0 * l_half(d, d) + tau * p(d, d) - gb_quarter;
        push(format!("identity_diagonal_{d}{d}"), v, 0.0);
    }

    // off-diagonal (1,2) expansions
    push(
        "curvature_slice_product_12".into(),
        r_check(1, 2),
        2.0 * (k14 * rr(1, 4, 2, 4)
            + m1423 * rr(2, 3, 2, 4)
            + m1324 * rr(2, 3, 2, 4)
            + rr(1, 4, 2, 4) * k24
            + rr(1, 3, 3, 4) * rr(2, 3, 3, 4)
            + rr(1, 4, 3, 4) * rr(2, 4, 3, 4)),
    );
    push(
        "curvature_slice_product_12_ricci".into(),
        r_check(1, 2),
        2.0 * (-p(1, 2) * k14 - p(3, 4) * m1423 - p(3, 4) * m1324 - p(1, 2) * k24 + p(1, 4) * p(2, 4) + p(1, 3) * p(2, 3)),
    );
    push(
        "ricci_row_product_12".into(),
        rho_check(1, 2),
        -p(1, 2) * (2.0 * k12 + k13 + k14 + k23 + k24) + p(1, 3) * p(2, 3) + p(1, 4) * p(2, 4),
    );
    push(
        "ricci_curvature_action_12_components".into(),
        l_half(1, 2),
        p(1, 2) * k12 - p(3, 4) * (m1324 + m1423) + p(4, 4) * p(1, 2),
    );
    push(
        "ricci_curvature_action_12".into(),
        l_half(1, 2),
        p(1, 2) * (k12 - k14 - k24 - k34) - p(3, 4) * (m1324 + m1423),
    );
    push("scalar_times_ricci_12".into(), tau * p(1, 2), -2.0 * p(1, 2) * (k12 + k13 + k14 + k23 + k24 + k34));

    // off-diagonal entries of the identity
    for (i, j) in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)] {
        let v = r_check(i, j) - 2.0 * rho_check(i, j) - 2.0 * l_half(i, j) + tau * p(i, j);
        push(format!("identity_offdiagonal_{i}{j}"), v, 0.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_metric, Params};
    use crate::curvature::curvature_pack;

    fn frame_curv(name: &str, params: Params, point: &[f64]) -> FrameCurvature {
        let e = catalog_metric(name, &params).unwrap();
        FrameCurvature::from_pack(&curvature_pack(&e.metric, point, true).unwrap()).unwrap()
    }

    #[test]
    fn gram_schmidt_examples() {
        let f = orthonormal_frame(&tensor::identity(4), 4, &[1, 1, 1, 1]).unwrap();
        assert_eq!(f.frame, tensor::identity(4));
        let f = orthonormal_frame(&tensor::diag(&[4.0, 1.0, 1.0, 1.0]), 4, &[1, 1, 1, 1]).unwrap();
        assert_eq!(f.frame, tensor::diag(&[0.5, 1.0, 1.0, 1.0]));
        let f = orthonormal_frame(&tensor::diag(&[-1.0, 1.0, 1.0, 1.0]), 4, &[-1, 1, 1, 1]).unwrap();
        assert_eq!(f.frame, tensor::identity(4));
        assert_eq!(f.eta, vec![-1, 1, 1, 1]);
    }

    #[test]
    fn gram_schmidt_errors() {
        let null = [[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
        assert!(matches!(orthonormal_frame(&null, 4, &[-1, 1, 1, 1]), Err(Error::NullVector)));
        assert!(matches!(
            orthonormal_frame(&tensor::identity(4), 4, &[-1, 1, 1, 1]),
            Err(Error::SignatureMismatch { .. })
        ));
        assert!(matches!(orthonormal_frame(&tensor::diag(&[1.0, 1.0, 1.0, 0.0]), 4, &[1; 4]), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn rotation_rejects_non_orthogonal() {
        let r = frame_curv("sphere4", Params::new(), &[1.0; 4]).riemann;
        assert!(matches!(rotate_curvature(&r, &tensor::diag(&[2.0, 1.0, 1.0, 1.0])), Err(Error::NotOrthogonal { .. })));
        assert_eq!(rotate_curvature(&r, &tensor::identity(4)).unwrap(), r);
    }

    #[test]
    fn constant_curvature_is_chern_at_identity() {
        let fc = frame_curv("sphere4", Params::new(), &[1.0, 1.1, 1.2, 0.3]);
        assert!(chern_objective(&fc.riemann) < 1e-28);
        let res = chern_basis_search(&fc.riemann, &ChernSearchOptions { restarts: 4, ..Default::default() });
        assert!(res.success);
        assert!(tensor::max_abs_mat(&tensor::sub_mat(&res.q, &tensor::identity(4)), 4) < 1e-12);
        let exp = chern_expansion_check(&fc.riemann, 1e-9).unwrap();
        let norm = exp.iter().find(|e| e.name == "curvature_norm").unwrap();
        assert!((norm.rhs - 24.0).abs() < 1e-10);
        assert!(exp.iter().all(|e| e.pass), "{exp:?}");
    }

    #[test]
    fn search_finds_chern_frame_for_generic_metric() {
        let fc = frame_curv("polynomial_random", Params::new().with("seed", 3.0), &[0.2, -0.4, 0.5, 0.1]);
        assert!(chern_objective(&fc.riemann) > 1e-8);
        let res = chern_basis_search(&fc.riemann, &ChernSearchOptions::default());
        assert!(res.success, "objective {}", res.objective);
        assert!((chern_objective(&res.rotated) - res.objective).abs() <= 1e-30 + 1e-12 * res.objective);
        let exp = chern_expansion_check(&res.rotated, 1e-9).unwrap();
        let failed: Vec<_> = exp.iter().filter(|e| !e.pass).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }

    #[test]
    fn expansion_check_requires_chern_frame() {
        let fc = frame_curv("polynomial_random", Params::new().with("seed", 3.0), &[0.2, -0.4, 0.5, 0.1]);
        assert!(matches!(chern_expansion_check(&fc.riemann, 1e-9), Err(Error::NotChern { .. })));
    }

    #[test]
    fn singer_thorpe_examples() {
        let s = frame_curv("sphere4", Params::new(), &[1.0, 1.1, 1.2, 0.3]);
        assert!(singer_thorpe_check(&s.riemann, &s.ricci, s.tau, 1e-9).pass);
        let pp = frame_curv("s2xs2", Params::new().with("c1", 1.0).with("c2", 1.0), &[1.0, 0.3, 2.0, 1.1]);
        assert!(singer_thorpe_check(&pp.riemann, &pp.ricci, pp.tau, 1e-9).pass);
        let sh = frame_curv("s2xh2", Params::new(), &[1.0, 0.3, 0.2, 1.1]);
        assert!(chern_objective(&sh.riemann) < 1e-28);
        assert!(!singer_thorpe_check(&sh.riemann, &sh.ricci, sh.tau, 1e-9).pass);
    }
}
