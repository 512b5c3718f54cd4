//! Fixed-capacity component arrays for tensors over charts of dimension <= 4.
//! Only the leading `dim` entries of each axis are meaningful.

use nalgebra::Matrix4;

pub const N: usize = 4;

pub type Mat = [[f64; N]; N];
pub type Rank3 = [[[f64; N]; N]; N];
pub type Rank4 = [[[[f64; N]; N]; N]; N];

pub const ZERO_MAT: Mat = [[0.0; N]; N];
pub const ZERO_RANK3: Rank3 = [[[0.0; N]; N]; N];
pub const ZERO_RANK4: Rank4 = [[[[0.0; N]; N]; N]; N];

pub fn identity(dim: usize) -> Mat {
    let mut m = ZERO_MAT;
    for (i, row) in m.iter_mut().enumerate().take(dim) {
        row[i] = 1.0;
    }
    m
}

pub fn diag(values: &[f64]) -> Mat {
    let mut m = ZERO_MAT;
    for (i, v) in values.iter().enumerate() {
        m[i][i] = *v;
    }
    m
}

/// Embed the leading `dim` block into a 4x4 matrix, padding with identity so
/// inverses and determinants of the padded matrix match the block.
pub fn padded(m: &Mat, dim: usize) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| {
        if i < dim && j < dim {
            m[i][j]
        } else if i == j {
            1.0
        } else {
            0.0
        }
    })
}

pub fn from_padded(m: &Matrix4<f64>, dim: usize) -> Mat {
    let mut out = ZERO_MAT;
    for i in 0..dim {
        for j in 0..dim {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

pub fn determinant(m: &Mat, dim: usize) -> f64 {
    padded(m, dim).determinant()
}

pub fn inverse(m: &Mat, dim: usize) -> Option<Mat> {
    padded(m, dim).try_inverse().map(|inv| from_padded(&inv, dim))
}

pub fn max_abs_mat(m: &Mat, dim: usize) -> f64 {
    let mut best: f64 = 0.0;
    for row in m.iter().take(dim) {
        for v in row.iter().take(dim) {
            best = best.max(v.abs());
        }
    }
    best
}

pub fn max_abs_rank4(r: &Rank4, dim: usize) -> f64 {
    let mut best: f64 = 0.0;
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    best = best.max(r[a][b][c][d].abs());
                }
            }
        }
    }
    best
}

pub fn mat_mul(a: &Mat, b: &Mat, dim: usize) -> Mat {
    let mut out = ZERO_MAT;
    for i in 0..dim {
        for j in 0..dim {
            out[i][j] = (0..dim).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    let mut out = ZERO_MAT;
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn sub_mat(a: &Mat, b: &Mat) -> Mat {
    let mut out = ZERO_MAT;
    for i in 0..N {
        for j in 0..N {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

pub fn scale_mat(a: &Mat, s: f64) -> Mat {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

/// `sum_ij a^ij b_ij`
pub fn contract2(a: &Mat, b: &Mat, dim: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            s += a[i][j] * b[i][j];
        }
    }
    s
}

/// Components of a covariant 2-tensor in the frame whose vectors are the
/// columns of `e`: `T'_ab = e^i_a e^j_b T_ij`.
pub fn frame_mat(t: &Mat, e: &Mat, dim: usize) -> Mat {
    let mut tmp = ZERO_MAT;
    for a in 0..dim {
        for j in 0..dim {
            tmp[a][j] = (0..dim).map(|i| e[i][a] * t[i][j]).sum();
        }
    }
    let mut out = ZERO_MAT;
    for a in 0..dim {
        for b in 0..dim {
            out[a][b] = (0..dim).map(|j| tmp[a][j] * e[j][b]).sum();
        }
    }
    out
}

/// Change every slot of a covariant 4-tensor: `T'_abcd = m^i_a m^j_b m^k_c m^l_d T_ijkl`.
/// Done one slot at a time.
pub fn transform_rank4(t: &Rank4, m: &Mat, dim: usize) -> Rank4 {
    let mut a1 = ZERO_RANK4;
    for a in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    a1[a][j][k][l] = (0..dim).map(|i| m[i][a] * t[i][j][k][l]).sum();
                }
            }
        }
    }
    let mut a2 = ZERO_RANK4;
    for a in 0..dim {
        for b in 0..dim {
            for k in 0..dim {
                for l in 0..dim {
                    a2[a][b][k][l] = (0..dim).map(|j| m[j][b] * a1[a][j][k][l]).sum();
                }
            }
        }
    }
    let mut a3 = ZERO_RANK4;
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for l in 0..dim {
                    a3[a][b][c][l] = (0..dim).map(|k| m[k][c] * a2[a][b][k][l]).sum();
                }
            }
        }
    }
    let mut out = ZERO_RANK4;
    for a in 0..dim {
        for b in 0..dim {
            for c in 0..dim {
                for d in 0..dim {
                    out[a][b][c][d] = (0..dim).map(|l| m[l][d] * a3[a][b][c][l]).sum();
                }
            }
        }
    }
    out
}

/// Symmetric eigenvalues of the leading block, ascending.
pub fn symmetric_eigenvalues(m: &Mat, dim: usize) -> Vec<f64> {
    let dm = nalgebra::DMatrix::from_fn(dim, dim, |i, j| 0.5 * (m[i][j] + m[j][i]));
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
