//! Christoffel symbols, Riemann/Ricci/scalar curvature and the quadratic
//! curvature contractions at a point.
//!
//! Conventions: `R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`,
//! `R(∂_i,∂_j)∂_k = R_ijk^l ∂_l`, `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)` and
//! `ρ_jk = R_ijk^i`. With these, sectional curvature is `K(e_i,e_j) = R_ijji`
//! and the unit round 4-sphere has `τ = 12`, `|R|² = 24`, `|ρ|² = 36`.

use serde::Serialize;

use crate::catalog::MetricField;
use crate::error::{Error, Result};
use crate::jets::JetMatrix;
use crate::tensor::{self, Mat, Rank3, Rank4, ZERO_MAT, ZERO_RANK3, ZERO_RANK4};

/// Connection coefficients, `gamma[k][i][j] = Γ^k_ij`, and optionally
/// `d_gamma[m][k][i][j] = ∂_m Γ^k_ij`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub dim: usize,
    pub g: Mat,
    pub g_inv: Mat,
    pub gamma: Rank3,
    pub d_gamma: Option<Rank4>,
}

/// Metric value with first and second partials: `dg[m][i][j] = ∂_m g_ij`,
/// `ddg[m][n][i][j] = ∂_m ∂_n g_ij`.
#[derive(Debug, Clone)]
pub struct MetricDerivatives {
    pub dim: usize,
    pub g: Mat,
    pub dg: Rank3,
    pub ddg: Option<Rank4>,
}

impl MetricDerivatives {
    pub fn from_jet(jet: &JetMatrix) -> Result<Self> {
        let dim = jet.dim();
        let order = jet.order();
        if order < 1 {
            return Err(Error::InsufficientOrder { needed: 1, got: order });
        }
        let g = jet.values();
        let mut dg = ZERO_RANK3;
        let mut ddg = if order >= 2 { Some(ZERO_RANK4) } else { None };
        for i in 0..dim {
            for j in 0..dim {
                let c = jet.get(i, j);
                let grad = c.gradient();
                for m in 0..dim {
                    dg[m][i][j] = grad[m];
                }
                if let Some(dd) = ddg.as_mut() {
                    let h = c.hessian();
                    for m in 0..dim {
                        for n in 0..dim {
                            dd[m][n][i][j] = h[m][n];
                        }
                    }
                }
            }
        }
        Ok(MetricDerivatives { dim, g, dg, ddg })
    }
}

pub fn christoffel(metric_jet: &JetMatrix) -> Result<Christoffel> {
    christoffel_from(&MetricDerivatives::from_jet(metric_jet)?)
}

pub fn christoffel_from(d: &MetricDerivatives) -> Result<Christoffel> {
    let dim = d.dim;
    let g_inv = tensor::inverse(&d.g, dim).ok_or(Error::Degenerate { det: tensor::determinant(&d.g, dim) })?;
    let dg = &d.dg;

    // first kind: Γ_aij = ½(∂_i g_aj + ∂_j g_ia − ∂_a g_ij)
    let mut first = ZERO_RANK3;
    for a in 0..dim {
        for i in 0..dim {
            for j in i..dim {
                let v = 0.5 * (dg[i][a][j] + dg[j][i][a] - dg[a][i][j]);
                first[a][i][j] = v;
                first[a][j][i] = v;
            }
        }
    }
    let mut gamma = ZERO_RANK3;
    for k in 0..dim {
        for i in 0..dim {
            for j in i..dim {
                let v: f64 = (0..dim).map(|a| g_inv[k][a] * first[a][i][j]).sum();
                gamma[k][i][j] = v;
                gamma[k][j][i] = v;
            }
        }
    }

    let d_gamma = d.ddg.as_ref().map(|ddg| {
        // ∂_m g^ka = −g^kb ∂_m g_bc g^ca
        let mut dinv = ZERO_RANK3;
        for m in 0..dim {
            let tmp = tensor::mat_mul(&g_inv, &dg[m], dim);
            let prod = tensor::mat_mul(&tmp, &g_inv, dim);
            for k in 0..dim {
                for a in 0..dim {
                    dinv[m][k][a] = -prod[k][a];
                }
            }
        }
        let mut out = ZERO_RANK4;
        for m in 0..dim {
            for a in 0..dim {
                for i in 0..dim {
                    for j in i..dim {
                        let d_first = 0.5 * (ddg[m][i][a][j] + ddg[m][j][i][a] - ddg[m][a][i][j]);
                        first[a][i][j] = d_first;
                    }
                }
            }
            for k in 0..dim {
                for i in 0..dim {
                    for j in i..dim {
                        let mut v = 0.0;
                        for a in 0..dim {
                            let f = 0.5 * (dg[i][a][j] + dg[j][i][a] - dg[a][i][j]);
                            v += dinv[m][k][a] * f + g_inv[k][a] * first[a][i][j];
                        }
                        out[m][k][i][j] = v;
                        out[m][k][j][i] = v;
                    }
                }
            }
        }
        out
    });

    Ok(Christoffel { dim, g: d.g, g_inv, gamma, d_gamma })
}

/// `R_ijk^l` from the connection: `∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm`,
/// stored as `out[i][j][k][l]`.
pub fn riemann_mixed(ch: &Christoffel) -> Result<Rank4> {
    let dim = ch.dim;
    let dgam = ch.d_gamma.as_ref().ok_or(Error::InsufficientOrder { needed: 2, got: 1 })?;
    let gam = &ch.gamma;
    let mut r = ZERO_RANK4;
    for i in 0..dim {
        for j in (i + 1)..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let mut v = dgam[i][l][j][k] - dgam[j][l][i][k];
                    for m in 0..dim {
                        v += gam[m][j][k] * gam[l][i][m] - gam[m][i][k] * gam[l][j][m];
                    }
                    r[i][j][k][l] = v;
                    r[j][i][k][l] = -v;
                }
            }
        }
    }
    Ok(r)
}

/// Point curvature data. All arrays hold coordinate components, padded to 4.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub dim: usize,
    pub signature: Vec<i8>,
    pub g: Mat,
    pub g_inv: Mat,
    pub gamma: Rank3,
    pub d_gamma: Rank4,
    /// `R_ijkl`
    pub riemann: Rank4,
    pub ricci: Mat,
    pub tau: f64,
    pub norm_r2: f64,
    pub norm_rho2: f64,
    /// `Ř_ij = R_abci R^abc_j`
    pub r_check: Mat,
    /// `ρ̌_ij = ρ_ia ρ^a_j`
    pub rho_check: Mat,
    /// `(Lρ)_ij = 2 R_iabj ρ^ab`
    pub l_rho: Mat,
}

impl CurvaturePack {
    /// Fill every derived field from a metric value and an algebraic curvature
    /// tensor `R_ijkl`. Connection fields are left zero.
    pub fn from_algebraic(dim: usize, signature: Vec<i8>, g: Mat, riemann: Rank4) -> Result<Self> {
        let g_inv = tensor::inverse(&g, dim).ok_or(Error::Degenerate { det: tensor::determinant(&g, dim) })?;
        let mut pack = CurvaturePack {
            dim,
            signature,
            g,
            g_inv,
            gamma: ZERO_RANK3,
            d_gamma: ZERO_RANK4,
            riemann,
            ricci: ZERO_MAT,
            tau: 0.0,
            norm_r2: 0.0,
            norm_rho2: 0.0,
            r_check: ZERO_MAT,
            rho_check: ZERO_MAT,
            l_rho: ZERO_MAT,
        };
        pack.fill_contractions();
        Ok(pack)
    }

    fn fill_contractions(&mut self) {
        let dim = self.dim;
        let gi = &self.g_inv;
        let r = &self.riemann;

        // ρ_jk = g^il R_ijkl
        let mut ricci = ZERO_MAT;
        for j in 0..dim {
            for k in 0..dim {
                let mut v = 0.0;
                for i in 0..dim {
                    for l in 0..dim {
                        v += gi[i][l] * r[i][j][k][l];
                    }
                }
                ricci[j][k] = v;
            }
        }
        let tau = tensor::contract2(gi, &ricci, dim);

        // R^abc_j: raise the first three slots one at a time
        let mut up1 = ZERO_RANK4;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        up1[a][b][c][d] = (0..dim).map(|p| gi[a][p] * r[p][b][c][d]).sum();
                    }
                }
            }
        }
        let mut up2 = ZERO_RANK4;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        up2[a][b][c][d] = (0..dim).map(|p| gi[b][p] * up1[a][p][c][d]).sum();
                    }
                }
            }
        }
        let mut up3 = ZERO_RANK4;
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    for d in 0..dim {
                        up3[a][b][c][d] = (0..dim).map(|p| gi[c][p] * up2[a][b][p][d]).sum();
                    }
                }
            }
        }
        let mut r_check = ZERO_MAT;
        for i in 0..dim {
            for j in 0..dim {
                let mut v = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        for c in 0..dim {
                            v += r[a][b][c][i] * up3[a][b][c][j];
                        }
                    }
                }
                r_check[i][j] = v;
            }
        }
        let norm_r2 = tensor::contract2(gi, &r_check, dim);

        let rho_mixed = tensor::mat_mul(gi, &ricci, dim); // ρ^a_j
        let rho_check = tensor::mat_mul(&ricci, &rho_mixed, dim);
        let norm_rho2 = tensor::contract2(gi, &rho_check, dim);
        let rho_up = tensor::mat_mul(&rho_mixed, gi, dim); // ρ^ab
        let mut l_rho = ZERO_MAT;
        for i in 0..dim {
            for j in 0..dim {
                let mut v = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        v += r[i][a][b][j] * rho_up[a][b];
                    }
                }
                l_rho[i][j] = 2.0 * v;
            }
        }

        self.ricci = ricci;
        self.tau = tau;
        self.norm_r2 = norm_r2;
        self.norm_rho2 = norm_rho2;
        self.r_check = r_check;
        self.rho_check = rho_check;
        self.l_rho = l_rho;
    }

    /// `R_ijk^l` with the last slot raised.
    pub fn riemann_mixed(&self) -> Rank4 {
        let dim = self.dim;
        let mut out = ZERO_RANK4;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        out[i][j][k][l] = (0..dim).map(|m| self.riemann[i][j][k][m] * self.g_inv[m][l]).sum();
                    }
                }
            }
        }
        out
    }

    /// Magnitude used for relative tolerances: the largest coordinate
    /// component of `R_ijkl`.
    pub fn curvature_scale(&self) -> f64 {
        tensor::max_abs_rank4(&self.riemann, self.dim)
    }

    pub fn einstein_residual(&self) -> Mat {
        let n = self.dim as f64;
        let mut out = ZERO_MAT;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i][j] = self.ricci[i][j] - self.tau / n * self.g[i][j];
            }
        }
        out
    }
}

/// Curvature data of `metric` at `point`. `signature_aware` controls whether
/// the declared signature is checked against the metric at the point.
pub fn curvature_pack(metric: &MetricField, point: &[f64], signature_aware: bool) -> Result<CurvaturePack> {
    let jet = metric.jet(point, 2)?;
    let pack = curvature_pack_from_jet(&jet, metric.signature.clone())?;
    if signature_aware {
        let observed = crate::catalog::inertia(&pack.g, pack.dim);
        let mut declared = metric.signature.clone();
        declared.sort();
        if observed != declared {
            return Err(Error::SignatureMismatch { declared: metric.signature.clone(), observed });
        }
    }
    Ok(pack)
}

pub fn curvature_pack_from_jet(jet: &JetMatrix, signature: Vec<i8>) -> Result<CurvaturePack> {
    if jet.order() < 2 {
        return Err(Error::InsufficientOrder { needed: 2, got: jet.order() });
    }
    let ch = christoffel(jet)?;
    let dim = ch.dim;
    let mixed = riemann_mixed(&ch)?;
    let mut riemann = ZERO_RANK4;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    riemann[i][j][k][l] = (0..dim).map(|m| mixed[i][j][k][m] * ch.g[m][l]).sum();
                }
            }
        }
    }
    let mut pack = CurvaturePack::from_algebraic(dim, signature, ch.g, riemann)?;
    pack.g_inv = ch.g_inv;
    pack.gamma = ch.gamma;
    pack.d_gamma = ch.d_gamma.unwrap_or(ZERO_RANK4);
    Ok(pack)
}

/// Only `τ`, `|R|²` and `|ρ|²`, skipping the 2-tensor contractions. Used by
/// quadrature loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarInvariants {
    pub tau: f64,
    pub norm_r2: f64,
    pub norm_rho2: f64,
    pub sqrt_abs_det: f64,
}

impl ScalarInvariants {
    pub fn gauss_bonnet(&self) -> f64 {
        self.norm_r2 - 4.0 * self.norm_rho2 + self.tau * self.tau
    }
}

pub fn scalar_invariants(metric: &MetricField, point: &[f64]) -> Result<ScalarInvariants> {
    let jet = metric.jet(point, 2)?;
    let ch = christoffel(&jet)?;
    let dim = ch.dim;
    let mixed = riemann_mixed(&ch)?;
    let gi = &ch.g_inv;
    let g = &ch.g;
    // ρ_jk = R_ijk^i
    let mut ricci = ZERO_MAT;
    for j in 0..dim {
        for k in 0..dim {
            ricci[j][k] = (0..dim).map(|i| mixed[i][j][k][i]).sum();
        }
    }
    let tau = tensor::contract2(gi, &ricci, dim);
    let rho_mixed = tensor::mat_mul(gi, &ricci, dim);
    let mut norm_rho2 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            norm_rho2 += rho_mixed[a][b] * rho_mixed[b][a];
        }
    }
    // |R|² = R_ijk^l R^ijk_l = R_ijk^l R_abc^d g^ia g^jb g^kc g_dl
    let mut norm_r2 = 0.0;
    let mut lowered_last = ZERO_RANK4; // R^i_jk... built as raising on a copy
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    lowered_last[i][j][k][l] = (0..dim).map(|m| mixed[i][j][k][m] * g[m][l]).sum();
                }
            }
        }
    }
    // raise i, j, k of R_ijkl and contract with R_ijk^l
    let mut t1 = ZERO_RANK4;
    for a in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    t1[a][j][k][l] = (0..dim).map(|p| gi[a][p] * lowered_last[p][j][k][l]).sum();
                }
            }
        }
    }
    let mut t2 = ZERO_RANK4;
    for a in 0..dim {
        for b in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    t2[a][b][k][l] = (0..dim).map(|p| gi[b][p] * t1[a][p][k][l]).sum();
                }
            }
        }
    }
    for a in 0..dim {
        for b in 0..dim {
            for l in 0..dim {
                for c in 0..dim {
                    let up: f64 = (0..dim).map(|p| gi[c][p] * t2[a][b][p][l]).sum();
                    norm_r2 += up * mixed[a][b][c][l];
                }
            }
        }
    }
    let sqrt_abs_det = tensor::determinant(g, dim).abs().sqrt();
    Ok(ScalarInvariants { tau, norm_r2, norm_rho2, sqrt_abs_det })
}

/// Largest violation of each algebraic symmetry of `R_ijkl`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetryReport {
    pub antisym_first: f64,
    pub antisym_last: f64,
    pub pair_symmetry: f64,
    pub first_bianchi: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SymmetryReport {
    pub fn max_violation(&self) -> f64 {
        self.antisym_first.max(self.antisym_last).max(self.pair_symmetry).max(self.first_bianchi)
    }
}

/// Relative test when `scale` is appreciable, absolute floor otherwise.
pub fn within_tolerance(value: f64, scale: f64, rel_tol: f64) -> bool {
    if scale > 1e-6 {
        value <= rel_tol * scale
    } else {
        value <= 1e-12
    }
}

pub fn check_riemann_symmetries(pack: &CurvaturePack, tolerance: f64) -> SymmetryReport {
    riemann_symmetry_report(&pack.riemann, pack.dim, tolerance)
}

pub fn riemann_symmetry_report(r: &Rank4, dim: usize, tolerance: f64) -> SymmetryReport {
    let (mut a1, mut a2, mut ps, mut b1) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    let v = r[i][j][k][l];
                    a1 = a1.max((v + r[j][i][k][l]).abs());
                    a2 = a2.max((v + r[i][j][l][k]).abs());
                    ps = ps.max((v - r[k][l][i][j]).abs());
                    b1 = b1.max((v + r[j][k][i][l] + r[k][i][j][l]).abs());
                }
            }
        }
    }
    let scale = tensor::max_abs_rank4(r, dim);
    let mut rep = SymmetryReport {
        antisym_first: a1,
        antisym_last: a2,
        pair_symmetry: ps,
        first_bianchi: b1,
        scale,
        tolerance,
        pass: false,
    };
    rep.pass = within_tolerance(rep.max_violation(), scale, tolerance);
    rep
}
