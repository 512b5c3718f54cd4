//! Pointwise curvature identities and diagnostics.
//!
//! The central one is the quadratic four-dimensional identity
//! `Ř − 2ρ̌ − Lρ + τρ − ¼(|R|² − 4|ρ|² + τ²) g = 0`. Residual matrices are
//! reported in the Gram-Schmidt orthonormal frame of the point so their size
//! does not depend on the chart scaling.

use serde::Serialize;

use crate::curvature::{within_tolerance, CurvaturePack};
use crate::error::{Error, Result};
use crate::frames::orthonormal_frame;
use crate::tensor::{self, Mat, Rank4, ZERO_MAT, ZERO_RANK4};

/// Default relative tolerance for pointwise identities.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    /// Residual in the orthonormal frame.
    pub residual: Mat,
    pub dim: usize,
    pub max_abs: f64,
    /// Largest max-abs among the individual terms.
    pub scale: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    fn from_terms(dim: usize, residual: Mat, term_scales: &[f64], tolerance: f64) -> Self {
        let max_abs = tensor::max_abs_mat(&residual, dim);
        let scale = term_scales.iter().copied().fold(0.0, f64::max);
        let relative = if scale > 0.0 { max_abs / scale } else { 0.0 };
        let pass = within_tolerance(max_abs, scale, tolerance);
        IdentityReport { residual, dim, max_abs, scale, relative, tolerance, pass }
    }
}

fn require_dim(pack: &CurvaturePack, dim: usize) -> Result<()> {
    if pack.dim != dim {
        return Err(Error::DimensionMismatch { expected: format!("dimension {dim}"), got: pack.dim });
    }
    Ok(())
}

/// The individual terms `Ř, −2ρ̌, −Lρ, τρ, −¼(|R|²−4|ρ|²+τ²)g` in coordinates.
pub fn identity_terms(pack: &CurvaturePack) -> [Mat; 5] {
    let gb = pack.norm_r2 - 4.0 * pack.norm_rho2 + pack.tau * pack.tau;
    [
        pack.r_check,
        tensor::scale_mat(&pack.rho_check, -2.0),
        tensor::scale_mat(&pack.l_rho, -1.0),
        tensor::scale_mat(&pack.ricci, pack.tau),
        tensor::scale_mat(&pack.g, -0.25 * gb),
    ]
}

fn sum_terms(terms: &[Mat]) -> Mat {
    let mut out = ZERO_MAT;
    for t in terms {
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += t[i][j];
            }
        }
    }
    out
}

/// Residual of the four-dimensional identity in coordinate components.
pub fn identity_residual_coordinates(pack: &CurvaturePack) -> Result<Mat> {
    require_dim(pack, 4)?;
    Ok(sum_terms(&identity_terms(pack)))
}

pub fn identity_residual(pack: &CurvaturePack) -> Result<IdentityReport> {
    identity_residual_with(pack, IDENTITY_TOL)
}

pub fn identity_residual_with(pack: &CurvaturePack, tolerance: f64) -> Result<IdentityReport> {
    require_dim(pack, 4)?;
    let frame = orthonormal_frame(&pack.g, pack.dim, &pack.signature)?;
    let terms = identity_terms(pack).map(|t| tensor::frame_mat(&t, &frame.frame, 4));
    let scales: Vec<f64> = terms.iter().map(|t| tensor::max_abs_mat(t, 4)).collect();
    Ok(IdentityReport::from_terms(4, sum_terms(&terms), &scales, tolerance))
}

/// `g^ij` contracted with the identity residual. Vanishes for every
/// algebraic curvature tensor, whether or not it comes from a metric.
pub fn identity_trace_check(pack: &CurvaturePack) -> Result<f64> {
    let res = identity_residual_coordinates(pack)?;
    Ok(tensor::contract2(&pack.g_inv, &res, 4))
}

/// Magnitude against which [`identity_trace_check`] is judged: the largest
/// trace of an individual term.
pub fn identity_trace_scale(pack: &CurvaturePack) -> f64 {
    identity_terms(pack).iter().map(|t| tensor::contract2(&pack.g_inv, t, pack.dim).abs()).fold(0.0, f64::max)
}

/// `Ř − (|R|²/n) g`.
pub fn weakly_einstein_residual(pack: &CurvaturePack) -> Result<IdentityReport> {
    weakly_einstein_residual_with(pack, IDENTITY_TOL)
}

pub fn weakly_einstein_residual_with(pack: &CurvaturePack, tolerance: f64) -> Result<IdentityReport> {
    let n = pack.dim;
    let frame = orthonormal_frame(&pack.g, n, &pack.signature)?;
    let a = tensor::frame_mat(&pack.r_check, &frame.frame, n);
    let b = tensor::frame_mat(&tensor::scale_mat(&pack.g, pack.norm_r2 / n as f64), &frame.frame, n);
    let res = tensor::sub_mat(&a, &b);
    Ok(IdentityReport::from_terms(n, res, &[tensor::max_abs_mat(&a, n), tensor::max_abs_mat(&b, n)], tolerance))
}

/// `ρ − (τ/n) g`.
pub fn einstein_residual(pack: &CurvaturePack) -> Result<IdentityReport> {
    einstein_residual_with(pack, IDENTITY_TOL)
}

pub fn einstein_residual_with(pack: &CurvaturePack, tolerance: f64) -> Result<IdentityReport> {
    let n = pack.dim;
    let frame = orthonormal_frame(&pack.g, n, &pack.signature)?;
    let a = tensor::frame_mat(&pack.ricci, &frame.frame, n);
    let b = tensor::frame_mat(&tensor::scale_mat(&pack.g, pack.tau / n as f64), &frame.frame, n);
    let res = tensor::sub_mat(&a, &b);
    Ok(IdentityReport::from_terms(n, res, &[tensor::max_abs_mat(&a, n), tensor::max_abs_mat(&b, n)], tolerance))
}

/// Curvature of a 3-manifold rebuilt from its Ricci tensor, in the
/// orthonormal frame of `g`:
/// `ρ_ad δ_bc − ρ_ac δ_bd + δ_ad ρ_bc − δ_ac ρ_bd − (τ/2)(δ_ad δ_bc − δ_ac δ_bd)`.
pub fn three_dim_reconstruct(ricci: &Mat, tau: f64, g: &Mat) -> Result<Rank4> {
    let frame = orthonormal_frame(g, 3, &[1, 1, 1])?;
    Ok(reconstruct_in_frame(&tensor::frame_mat(ricci, &frame.frame, 3), tau))
}

fn reconstruct_in_frame(rho: &Mat, tau: f64) -> Rank4 {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut r = ZERO_RANK4;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for e in 0..3 {
                    r[a][b][c][e] = rho[a][e] * d(b, c) - rho[a][c] * d(b, e) + d(a, e) * rho[b][c] - d(a, c) * rho[b][e]
                        - 0.5 * tau * (d(a, e) * d(b, c) - d(a, c) * d(b, e));
                }
            }
        }
    }
    r
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    /// Max-abs of actual minus reconstructed frame components.
    pub defect: f64,
    /// Sum of squares of the same difference.
    pub sum_squares: f64,
    pub scale: f64,
    pub relative: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compare the curvature of a 3-dimensional pack with its Ricci reconstruction.
pub fn three_dim_reconstruction_defect(pack: &CurvaturePack, tolerance: f64) -> Result<ReconstructionReport> {
    require_dim(pack, 3)?;
    let frame = orthonormal_frame(&pack.g, 3, &pack.signature)?;
    let actual = tensor::transform_rank4(&pack.riemann, &frame.frame, 3);
    let rebuilt = reconstruct_in_frame(&tensor::frame_mat(&pack.ricci, &frame.frame, 3), pack.tau);
    let (mut defect, mut sum_squares) = (0.0f64, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let x = actual[a][b][c][d] - rebuilt[a][b][c][d];
                    defect = defect.max(x.abs());
                    sum_squares += x * x;
                }
            }
        }
    }
    let scale = tensor::max_abs_rank4(&actual, 3).max(tensor::max_abs_rank4(&rebuilt, 3));
    let relative = if scale > 0.0 { defect / scale } else { 0.0 };
    let pass = within_tolerance(defect, scale, tolerance);
    Ok(ReconstructionReport { defect, sum_squares, scale, relative, tolerance, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormIdentityReport {
    /// `¼|R'|² − |ρ'|² + ¼τ'²` read off the `(4,4)` slot of the 4D residual.
    pub value: f64,
    /// The same combination computed directly from the 3D factor.
    pub direct: f64,
    /// Sum of squares of the reconstruction defect of the 3D factor.
    pub sum_squares: f64,
    /// `|sum_squares − 4·value|`
    pub squares_mismatch: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Norm identity of a 3-manifold, evaluated on its product with a line.
///
/// `pack` must come from a metric whose last coordinate is a flat unit factor
/// (as built by `product_3d_x_line`).
pub fn three_dim_norm_identity(pack: &CurvaturePack, tolerance: f64) -> Result<NormIdentityReport> {
    require_dim(pack, 4)?;
    let mut off = 0.0f64;
    for a in 0..3 {
        off = off.max(pack.g[a][3].abs());
    }
    off = off.max((pack.g[3][3] - 1.0).abs());
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                off = off.max(pack.gamma[3][j][k].abs()).max(pack.gamma[i][3][k].abs());
                for l in 0..4 {
                    if i == 3 || j == 3 || k == 3 || l == 3 {
                        off = off.max(pack.riemann[i][j][k][l].abs());
                    }
                }
            }
        }
    }
    if off > 1e-12 {
        return Err(Error::WrongConstruction(format!(
            "last coordinate is not a flat unit line factor (deviation {off:e})"
        )));
    }
    let full = identity_residual_coordinates(pack)?;
    let value = -full[3][3];

    let mut g3 = ZERO_MAT;
    for a in 0..3 {
        for b in 0..3 {
            g3[a][b] = pack.g[a][b];
        }
    }
    let mut r3 = ZERO_RANK4;
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    r3[a][b][c][d] = pack.riemann[a][b][c][d];
                }
            }
        }
    }
    let p3 = CurvaturePack::from_algebraic(3, vec![1, 1, 1], g3, r3)?;
    let direct = 0.25 * p3.norm_r2 - p3.norm_rho2 + 0.25 * p3.tau * p3.tau;
    let rec = three_dim_reconstruction_defect(&p3, tolerance)?;
    let squares_mismatch = (rec.sum_squares - 4.0 * value).abs();
    let scale = 0.25 * p3.norm_r2 + p3.norm_rho2 + 0.25 * p3.tau * p3.tau;
    let pass = within_tolerance(value.abs(), scale, tolerance)
        && within_tolerance((value - direct).abs(), scale, tolerance)
        && within_tolerance(squares_mismatch, scale, tolerance);
    Ok(NormIdentityReport { value, direct, sum_squares: rec.sum_squares, squares_mismatch, scale, tolerance, pass })
}

/// `|R|² − 4|ρ|² + τ²`, whose integral is `32π² χ` on a closed 4-manifold.
pub fn gauss_bonnet_integrand(pack: &CurvaturePack) -> Result<f64> {
    require_dim(pack, 4)?;
    Ok(pack.norm_r2 - 4.0 * pack.norm_rho2 + pack.tau * pack.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{catalog_metric, Params};
    use crate::curvature::curvature_pack;

    fn pack(name: &str, params: Params, point: &[f64]) -> CurvaturePack {
        let e = catalog_metric(name, &params).unwrap();
        curvature_pack(&e.metric, point, true).unwrap()
    }

    #[test]
    fn flat_residual_is_exactly_zero() {
        let p = pack("flat4", Params::new(), &[0.5; 4]);
        let rep = identity_residual(&p).unwrap();
        assert_eq!(rep.max_abs, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn sphere_terms_cancel() {
        let p = pack("sphere4", Params::new(), &[1.0, 1.2, 0.7, 3.0]);
        let rep = identity_residual(&p).unwrap();
        assert!(rep.max_abs < 1e-12, "{}", rep.max_abs);
        // 6 − 18 − 18 + 36 − 6 on the diagonal of the frame terms
        let f = orthonormal_frame(&p.g, 4, &p.signature).unwrap();
        let t = identity_terms(&p).map(|m| tensor::frame_mat(&m, &f.frame, 4)[1][1]);
        let expect = [6.0, -18.0, -18.0, 36.0, -6.0];
        for (a, b) in t.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{t:?}");
        }
        assert!((gauss_bonnet_integrand(&p).unwrap() - 24.0).abs() < 1e-11);
    }

    #[test]
    fn weakly_einstein_but_not_einstein_product() {
        let p = pack("s2xh2", Params::new().with("c", 1.0), &[1.0, 0.3, 0.2, 1.1]);
        assert!(weakly_einstein_residual(&p).unwrap().pass);
        let e = einstein_residual(&p).unwrap();
        assert!(!e.pass);
        let expect = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            assert!((e.residual[i][i] - expect[i]).abs() < 1e-12);
        }
        assert!(identity_residual(&p).unwrap().pass);
    }

    #[test]
    fn product_of_spheres_gauss_bonnet_density() {
        let p = pack("s2xs2", Params::new().with("c1", 1.0).with("c2", 1.0), &[1.0, 0.3, 2.0, 1.1]);
        assert!((gauss_bonnet_integrand(&p).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn constant_curvature_reconstruction() {
        let c = 1.0;
        let r = three_dim_reconstruct(&tensor::scale_mat(&tensor::identity(3), 2.0 * c), 6.0 * c, &tensor::identity(3)).unwrap();
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    for e in 0..3 {
                        let expect = c * (d(a, e) * d(b, cc) - d(a, cc) * d(b, e));
                        assert!((r[a][b][cc][e] - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn norm_identity_on_product_with_line() {
        let p = pack("product_3d_x_line", Params::new().with_inner("constcurv3").with("c", 1.0), &[0.1, -0.2, 0.3, 0.5]);
        let rep = three_dim_norm_identity(&p, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
        let wrong = pack("sphere4", Params::new(), &[1.0; 4]);
        assert!(matches!(three_dim_norm_identity(&wrong, 1e-9), Err(Error::WrongConstruction(_))));
    }

    #[test]
    fn dimension_is_checked() {
        let p = pack("constcurv3", Params::new(), &[0.1, 0.2, 0.3]);
        assert!(matches!(identity_residual(&p), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(gauss_bonnet_integrand(&p), Err(Error::DimensionMismatch { .. })));
        assert!(three_dim_reconstruction_defect(&p, 1e-9).unwrap().pass);
    }
}
