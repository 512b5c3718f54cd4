//! Levi-Civita covariant derivatives of tensor fields carried as jets.
//!
//! Every derivative consumes one jet order: a field known to order `k` over a
//! metric known to order `k` yields `∇T` to order `k - 1`. The derivative slot
//! is prepended, so `(∇∇T)[a][b][..] = ∇_a ∇_b T_..`.

use crate::catalog::MetricField;
use crate::error::{Error, Result};
use crate::jets::{mul_add_assign, JetMatrix, ScalarJet};

/// Components of a tensor field as jets at one point. `upper[s]` marks a
/// contravariant slot; components are stored row-major over `dim^rank`.
#[derive(Debug, Clone)]
pub struct TensorFieldJet {
    dim: usize,
    upper: Vec<bool>,
    comps: Vec<ScalarJet>,
}

impl TensorFieldJet {
    pub fn new(dim: usize, upper: Vec<bool>, comps: Vec<ScalarJet>) -> Result<Self> {
        let expected = dim.pow(upper.len() as u32);
        if comps.len() != expected {
            return Err(Error::DimensionMismatch { expected: format!("{expected} components"), got: comps.len() });
        }
        Ok(TensorFieldJet { dim, upper, comps })
    }

    pub fn from_fn(dim: usize, upper: Vec<bool>, mut f: impl FnMut(&[usize]) -> ScalarJet) -> Self {
        let rank = upper.len();
        let total = dim.pow(rank as u32);
        let mut idx = vec![0usize; rank];
        let mut comps = Vec::with_capacity(total);
        for flat in 0..total {
            unflatten(flat, dim, &mut idx);
            comps.push(f(&idx));
        }
        TensorFieldJet { dim, upper, comps }
    }

    pub fn scalar(f: ScalarJet) -> Self {
        TensorFieldJet { dim: f.nvars(), upper: vec![], comps: vec![f] }
    }

    /// Covariant 2-tensor from a jet matrix.
    pub fn covariant2(m: &JetMatrix) -> Self {
        Self::from_fn(m.dim(), vec![false, false], |ix| *m.get(ix[0], ix[1]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[bool] {
        &self.upper
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|c| c.order()).min().unwrap_or(0)
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> &ScalarJet {
        &self.comps[self.flat(idx)]
    }

    pub fn value(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn components(&self) -> &[ScalarJet] {
        &self.comps
    }

    /// Component values in storage order.
    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.value()).collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        TensorFieldJet { dim: self.dim, upper: self.upper.clone(), comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }
}

fn unflatten(mut flat: usize, dim: usize, idx: &mut [usize]) {
    for slot in idx.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
}

/// Metric, inverse metric and Christoffel symbols as jets. `g` and `g_inv`
/// keep the metric's order; `Γ` is one order lower.
#[derive(Debug, Clone)]
pub struct ConnectionJet {
    dim: usize,
    pub g: JetMatrix,
    pub g_inv: JetMatrix,
    /// `gamma[(k*dim + i)*dim + j] = Γ^k_ij`
    gamma: Vec<ScalarJet>,
}

impl ConnectionJet {
    pub fn new(metric_jet: &JetMatrix) -> Result<Self> {
        let dim = metric_jet.dim();
        let order = metric_jet.order();
        if order < 1 {
            return Err(Error::InsufficientOrder { needed: 1, got: order });
        }
        let g_inv = metric_jet.inverse()?;
        let mut dg = Vec::with_capacity(dim * dim * dim);
        for m in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    dg.push(metric_jet.get(i, j).derivative(m));
                }
            }
        }
        let d = |m: usize, i: usize, j: usize| dg[(m * dim + i) * dim + j];
        let zero = ScalarJet::constant(dim, order - 1, 0.0);
        let mut first = vec![zero; dim * dim * dim];
        for a in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let v = (d(i, a, j) + d(j, i, a) - d(a, i, j)) * 0.5;
                    first[(a * dim + i) * dim + j] = v;
                    first[(a * dim + j) * dim + i] = v;
                }
            }
        }
        let mut gamma = vec![zero; dim * dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                for j in i..dim {
                    let mut acc = zero;
                    for a in 0..dim {
                        mul_add_assign(&mut acc, g_inv.get(k, a), &first[(a * dim + i) * dim + j]);
                    }
                    gamma[(k * dim + i) * dim + j] = acc;
                    gamma[(k * dim + j) * dim + i] = acc;
                }
            }
        }
        Ok(ConnectionJet { dim, g: metric_jet.clone(), g_inv, gamma })
    }

    pub fn from_metric(metric: &MetricField, point: &[f64], order: usize) -> Result<Self> {
        Self::new(&metric.jet(point, order)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Order of the Christoffel jets.
    pub fn order(&self) -> usize {
        self.gamma.iter().map(|c| c.order()).min().unwrap_or(0)
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &ScalarJet {
        &self.gamma[(k * self.dim + i) * self.dim + j]
    }

    /// Ricci tensor `ρ_jk = ∂_iΓ^i_jk − ∂_jΓ^i_ik + Γ^m_jk Γ^i_im − Γ^m_ik Γ^i_jm`,
    /// two orders below the metric.
    pub fn ricci(&self) -> Result<JetMatrix> {
        let order = self.order();
        if order < 1 {
            return Err(Error::InsufficientOrder { needed: 2, got: order + 1 });
        }
        let dim = self.dim;
        let zero = ScalarJet::constant(dim, order - 1, 0.0);
        // trace Γ^i_im
        let mut trace = vec![ScalarJet::constant(dim, order, 0.0); dim];
        for (m, t) in trace.iter_mut().enumerate() {
            for i in 0..dim {
                *t += *self.gamma(i, i, m);
            }
        }
        Ok(JetMatrix::symmetric(dim, |j, k| {
            let mut acc = zero;
            for i in 0..dim {
                acc += self.gamma(i, j, k).derivative(i);
            }
            acc -= trace[k].derivative(j);
            for m in 0..dim {
                mul_add_assign(&mut acc, self.gamma(m, j, k), &trace[m]);
                for i in 0..dim {
                    let p = *self.gamma(m, i, k) * *self.gamma(i, j, m);
                    acc -= p;
                }
            }
            acc
        }))
    }

    /// `τ = g^jk ρ_jk` together with the Ricci jets it came from.
    pub fn ricci_and_scalar(&self) -> Result<(JetMatrix, ScalarJet)> {
        let ricci = self.ricci()?;
        let dim = self.dim;
        let mut tau = ScalarJet::constant(dim, ricci.order(), 0.0);
        for j in 0..dim {
            for k in 0..dim {
                mul_add_assign(&mut tau, self.g_inv.get(j, k), ricci.get(j, k));
            }
        }
        Ok((ricci, tau))
    }

    /// One covariant derivative; the new lower slot comes first.
    pub fn derivative(&self, field: &TensorFieldJet) -> Result<TensorFieldJet> {
        if field.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: format!("{}-dimensional field", self.dim), got: field.dim });
        }
        let fo = field.order();
        if fo < 1 {
            return Err(Error::InsufficientOrder { needed: 1, got: fo });
        }
        let dim = self.dim;
        let rank = field.rank();
        let mut upper = Vec::with_capacity(rank + 1);
        upper.push(false);
        upper.extend_from_slice(&field.upper);
        let mut scratch = vec![0usize; rank];
        Ok(TensorFieldJet::from_fn(dim, upper, |ix| {
            let m = ix[0];
            let rest = &ix[1..];
            let mut acc = field.get(rest).derivative(m);
            for s in 0..rank {
                scratch.copy_from_slice(rest);
                for p in 0..dim {
                    scratch[s] = p;
                    let t = field.get(&scratch);
                    if field.upper[s] {
                        mul_add_assign(&mut acc, self.gamma(rest[s], m, p), t);
                    } else {
                        let prod = *self.gamma(p, m, rest[s]) * *t;
                        acc -= prod;
                    }
                }
            }
            acc
        }))
    }

    /// `Δf = g^ab ∇_a∇_b f`, two orders below `f`.
    pub fn laplacian(&self, f: &ScalarJet) -> Result<ScalarJet> {
        let hess = self.derivative(&self.derivative(&TensorFieldJet::scalar(*f))?)?;
        Ok(self.trace_first_two(&hess).comps[0])
    }

    /// Contract the first two lower slots with `g^ab`.
    pub fn trace_first_two(&self, t: &TensorFieldJet) -> TensorFieldJet {
        let dim = self.dim;
        let rank = t.rank();
        assert!(rank >= 2);
        let upper = t.upper[2..].to_vec();
        let mut full = vec![0usize; rank];
        TensorFieldJet::from_fn(dim, upper, |rest| {
            full[2..].copy_from_slice(rest);
            let mut acc = ScalarJet::constant(dim, t.order(), 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    full[0] = a;
                    full[1] = b;
                    mul_add_assign(&mut acc, self.g_inv.get(a, b), t.get(&full));
                }
            }
            acc
        })
    }
}

/// `∇T` (`repeat = 1`) or `∇∇T` (`repeat = 2`) of `field` at `point`.
pub fn covariant_derivative(field: &TensorFieldJet, metric: &MetricField, point: &[f64], repeat: usize) -> Result<TensorFieldJet> {
    if !(1..=2).contains(&repeat) {
        return Err(Error::InvalidParameter { name: "repeat".into(), reason: "must be 1 or 2".into() });
    }
    if field.order() < repeat {
        return Err(Error::InsufficientOrder { needed: repeat, got: field.order() });
    }
    let conn = ConnectionJet::from_metric(metric, point, field.order())?;
    let mut out = conn.derivative(field)?;
    if repeat == 2 {
        out = conn.derivative(&out)?;
    }
    Ok(out)
}

/// `Δf` of a scalar jet over `metric` at `point`.
pub fn laplacian(f: &ScalarJet, metric: &MetricField, point: &[f64]) -> Result<f64> {
    if f.order() < 2 {
        return Err(Error::InsufficientOrder { needed: 2, got: f.order() });
    }
    let conn = ConnectionJet::from_metric(metric, point, f.order())?;
    Ok(conn.laplacian(f)?.value())
}
