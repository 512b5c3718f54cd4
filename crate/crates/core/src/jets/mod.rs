//! Taylor-mode derivative oracle: scalar jets and small jet matrices.

mod scalar;
mod space;

pub use scalar::{mul_add_assign, ScalarJet};
pub use space::{MAX_COEFFS, MAX_ORDER, MAX_VARS};

use crate::error::{Error, Result};

/// Square matrix of jets, row-major, `dim <= 4`.
#[derive(Clone, Debug)]
pub struct JetMatrix {
    dim: usize,
    data: Vec<ScalarJet>,
}

impl JetMatrix {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> ScalarJet) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        JetMatrix { dim, data }
    }

    /// Build a symmetric matrix from its upper triangle.
    pub fn symmetric(dim: usize, mut upper: impl FnMut(usize, usize) -> ScalarJet) -> Self {
        let mut m = JetMatrix::from_fn(dim, |_, _| ScalarJet::constant(1, 0, 0.0));
        for i in 0..dim {
            for j in i..dim {
                let v = upper(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.data.iter().map(|j| j.order()).min().unwrap_or(0)
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarJet {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: ScalarJet) {
        self.data[i * self.dim + j] = v;
    }

    pub fn truncate(&self, order: usize) -> Self {
        JetMatrix { dim: self.dim, data: self.data.iter().map(|j| j.truncate(order)).collect() }
    }

    pub fn values(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.get(i, j).value();
            }
        }
        m
    }

    pub fn map(&self, f: impl Fn(&ScalarJet) -> ScalarJet) -> Self {
        JetMatrix { dim: self.dim, data: self.data.iter().map(f).collect() }
    }

    /// Inverse, built degree by degree from the inverse of the value matrix:
    /// `X_d = -B Σ_{e≥1} A_e X_{d-e}` with `B = A_0^{-1}`.
    pub fn inverse(&self) -> Result<JetMatrix> {
        let n = self.dim;
        let order = self.order();
        let a: Vec<ScalarJet> = self.data.iter().map(|j| j.truncate(order)).collect();
        let b = invert_values(&self.values(), n)?;
        let space = a[0].space();
        let mut x: Vec<ScalarJet> = (0..n * n).map(|k| a[0].constant_like(b[k / n][k % n])).collect();
        let mut s = vec![[0.0; MAX_COEFFS]; n * n];
        let mut by_degree: Vec<Vec<(u8, u8, u8)>> = vec![Vec::new(); order + 1];
        for &(ia, ib, t) in &space.mul {
            if ia != 0 {
                by_degree[space.degrees[t as usize] as usize].push((ia, ib, t));
            }
        }
        for (d, entries) in by_degree.iter().enumerate().skip(1) {
            for i in 0..n {
                for k in 0..n {
                    let ac = a[i * n + k].coeffs();
                    for j in 0..n {
                        let xc = x[k * n + j].coeffs();
                        let sc = &mut s[i * n + j];
                        for &(ia, ib, t) in entries {
                            sc[t as usize] += ac[ia as usize] * xc[ib as usize];
                        }
                    }
                }
            }
            for t in 1..space.len {
                if space.degrees[t] as usize != d {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        let mut v = 0.0;
                        for k in 0..n {
                            v -= b[i][k] * s[k * n + j][t];
                        }
                        x[i * n + j].coeffs_mut()[t] = v;
                    }
                }
            }
        }
        Ok(JetMatrix { dim: n, data: x })
    }
}

/// Inverse of a small value matrix by Gauss-Jordan with partial pivoting.
fn invert_values(m: &[[f64; 4]; 4], n: usize) -> Result<[[f64; 4]; 4]> {
    let mut a = *m;
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate().take(n) {
        row[i] = 1.0;
    }
    let scale = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| a[i][j].abs()).fold(0.0, f64::max);
    let scale = scale.max(f64::MIN_POSITIVE);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs())).unwrap();
        if a[pivot][col].abs() <= 1e-14 * scale {
            return Err(Error::Degenerate { det: 0.0 });
        }
        a.swap(pivot, col);
        inv.swap(pivot, col);
        let r = 1.0 / a[col][col];
        for k in 0..n {
            a[col][k] *= r;
            inv[col][k] *= r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row][k] -= f * a[col][k];
                inv[row][k] -= f * inv[col][k];
            }
        }
    }
    Ok(inv)
}
