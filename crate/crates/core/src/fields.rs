//! Closed-form symmetric (0,2)-tensor fields evaluated in jet arithmetic.
//!
//! Every metric in the catalog and every deformation field is one of these
//! expressions; evaluating on coordinate jets yields exact Taylor data.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jets::{mul_add_assign, JetMatrix, ScalarJet};

pub trait SymmetricFieldExpr: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    /// Components on the coordinate jets `x` (length `dim`).
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix;
}

pub type FieldRef = Arc<dyn SymmetricFieldExpr>;

fn zero(x: &[ScalarJet]) -> ScalarJet {
    x[0].zero_like()
}

/// Constant components.
#[derive(Debug, Clone)]
pub struct ConstantField {
    pub dim: usize,
    pub components: [[f64; 4]; 4],
}

impl SymmetricFieldExpr for ConstantField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        JetMatrix::symmetric(self.dim, |i, j| x[0].constant_like(self.components[i][j]))
    }
}

/// Round sphere of radius `radius` in hyperspherical coordinates
/// `(theta_1, ..., theta_{n-1}, phi)`:
/// `g = r^2 (dθ1² + sin²θ1 dθ2² + sin²θ1 sin²θ2 dθ3² + ...)`.
#[derive(Debug, Clone)]
pub struct HypersphericalField {
    pub dim: usize,
    pub radius: f64,
}

impl SymmetricFieldExpr for HypersphericalField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let r2 = self.radius * self.radius;
        let mut diag = Vec::with_capacity(self.dim);
        let mut factor = x[0].constant_like(r2);
        for k in 0..self.dim {
            diag.push(factor);
            if k + 1 < self.dim {
                factor = factor * x[k].sin().square();
            }
        }
        JetMatrix::symmetric(self.dim, |i, j| if i == j { diag[i] } else { zero(x) })
    }
}

/// Constant sectional curvature `curvature` in stereographic form
/// `g = 4 δ / (1 + K |x|²)²`; valid where `1 + K|x|² > 0`.
#[derive(Debug, Clone)]
pub struct StereographicField {
    pub dim: usize,
    pub curvature: f64,
}

impl SymmetricFieldExpr for StereographicField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let mut r2 = zero(x);
        for xi in x.iter().take(self.dim) {
            r2 = r2 + xi.square();
        }
        let denom = r2 * self.curvature + 1.0;
        let conf = denom.square().recip() * 4.0;
        JetMatrix::symmetric(self.dim, |i, j| if i == j { conf } else { zero(x) })
    }
}

/// Upper half-plane `(dx² + dy²) / (c y²)`, Gaussian curvature `-c`.
#[derive(Debug, Clone)]
pub struct HalfPlaneField {
    pub c: f64,
}

impl SymmetricFieldExpr for HalfPlaneField {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let conf = (x[1].square() * self.c).recip();
        JetMatrix::symmetric(2, |i, j| if i == j { conf } else { zero(x) })
    }
}

/// `exp(2 φ) δ` with `φ = a x¹ + b |x|²`.
#[derive(Debug, Clone)]
pub struct ConformalFlatField {
    pub dim: usize,
    pub a: f64,
    pub b: f64,
}

impl SymmetricFieldExpr for ConformalFlatField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let mut r2 = zero(x);
        for xi in x.iter().take(self.dim) {
            r2 = r2 + xi.square();
        }
        let phi = x[0] * self.a + r2 * self.b;
        let conf = (phi * 2.0).exp();
        JetMatrix::symmetric(self.dim, |i, j| if i == j { conf } else { zero(x) })
    }
}

/// Block-diagonal product; each factor sees its own slice of coordinates.
#[derive(Debug, Clone)]
pub struct ProductField {
    pub factors: Vec<FieldRef>,
}

impl SymmetricFieldExpr for ProductField {
    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let dim = self.dim();
        let mut out = JetMatrix::from_fn(dim, |_, _| zero(x));
        let mut offset = 0;
        for f in &self.factors {
            let d = f.dim();
            let block = f.eval(&x[offset..offset + d]);
            for i in 0..d {
                for j in 0..d {
                    out.set(offset + i, offset + j, *block.get(i, j));
                }
            }
            offset += d;
        }
        out
    }
}

/// Components given by polynomials: per upper-triangular entry a list of
/// `(coefficient, exponents)`.
#[derive(Debug, Clone)]
pub struct PolynomialField {
    pub dim: usize,
    pub terms: Vec<Vec<(f64, [u8; 4])>>,
}

pub(crate) fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

fn upper_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

impl PolynomialField {
    pub fn new(dim: usize) -> Self {
        PolynomialField { dim, terms: vec![Vec::new(); upper_len(dim)] }
    }

    pub fn add_term(&mut self, i: usize, j: usize, coefficient: f64, exponents: [u8; 4]) {
        let k = upper_index(self.dim, i, j);
        self.terms[k].push((coefficient, exponents));
    }

    /// Random polynomial components of degree <= 3 normalised so that every
    /// component is bounded by `amplitude` on the box `[-1, 1]^dim`.
    pub fn random(dim: usize, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = PolynomialField::new(dim);
        let all = exponents_up_to(dim, 3);
        for comp in field.terms.iter_mut() {
            let count = 6;
            let mut raw = Vec::with_capacity(count);
            for _ in 0..count {
                let e = all[rng.random_range(0..all.len())];
                raw.push((rng.random_range(-1.0..1.0), e));
            }
            let norm: f64 = raw.iter().map(|(c, _)| f64::abs(*c)).sum();
            *comp = raw.into_iter().map(|(c, e)| (amplitude * c / norm, e)).collect();
        }
        field
    }
}

fn exponents_up_to(dim: usize, degree: usize) -> Vec<[u8; 4]> {
    let mut out = Vec::new();
    let max = degree as u8;
    for a in 0..=max {
        for b in 0..=if dim > 1 { max } else { 0 } {
            for c in 0..=if dim > 2 { max } else { 0 } {
                for d in 0..=if dim > 3 { max } else { 0 } {
                    if (a + b + c + d) as usize <= degree {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

fn powers(x: &[ScalarJet], max: usize) -> Vec<Vec<ScalarJet>> {
    x.iter()
        .map(|xi| {
            let mut p = vec![xi.constant_like(1.0)];
            for k in 1..=max {
                p.push(p[k - 1] * *xi);
            }
            p
        })
        .collect()
}

impl SymmetricFieldExpr for PolynomialField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let maxdeg = self
            .terms
            .iter()
            .flat_map(|t| t.iter().flat_map(|(_, e)| e.iter().copied()))
            .max()
            .unwrap_or(0) as usize;
        let pw = powers(&x[..self.dim], maxdeg);
        JetMatrix::symmetric(self.dim, |i, j| {
            let mut acc = zero(x);
            for (c, e) in &self.terms[upper_index(self.dim, i, j)] {
                let mut m = x[0].constant_like(*c);
                for v in 0..self.dim {
                    if e[v] > 0 {
                        m = m * pw[v][e[v] as usize];
                    }
                }
                acc = acc + m;
            }
            acc
        })
    }
}

/// Trigonometric components: per entry a list of `(a, b, k)` contributing
/// `a cos(k·x) + b sin(k·x)`. Integer frequencies make the field
/// `2π`-periodic in every coordinate.
#[derive(Debug, Clone)]
pub struct TrigField {
    pub dim: usize,
    pub terms: Vec<Vec<(f64, f64, [i8; 4])>>,
}

impl TrigField {
    pub fn new(dim: usize) -> Self {
        TrigField { dim, terms: vec![Vec::new(); upper_len(dim)] }
    }

    pub fn add_term(&mut self, i: usize, j: usize, a: f64, b: f64, k: [i8; 4]) {
        let idx = upper_index(self.dim, i, j);
        self.terms[idx].push((a, b, k));
    }

    /// Random low-frequency trigonometric components (frequencies in
    /// `{-1, 0, 1}`), each bounded by `amplitude`.
    pub fn random(dim: usize, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = TrigField::new(dim);
        for comp in field.terms.iter_mut() {
            let mut raw = Vec::new();
            for _ in 0..4 {
                let mut k = [0i8; 4];
                while k[..dim].iter().all(|&v| v == 0) {
                    for kv in k.iter_mut().take(dim) {
                        *kv = rng.random_range(-1..=1);
                    }
                }
                raw.push((rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), k));
            }
            let norm: f64 = raw.iter().map(|(a, b, _)| f64::abs(*a) + f64::abs(*b)).sum();
            *comp = raw.into_iter().map(|(a, b, k)| (amplitude * a / norm, amplitude * b / norm, k)).collect();
        }
        field
    }
}

impl TrigField {
    fn eval_general(&self, x: &[ScalarJet]) -> JetMatrix {
        JetMatrix::symmetric(self.dim, |i, j| {
            let mut acc = zero(x);
            for (a, b, k) in &self.terms[upper_index(self.dim, i, j)] {
                let mut arg = zero(x);
                for v in 0..self.dim {
                    if k[v] != 0 {
                        arg = arg + x[v] * k[v] as f64;
                    }
                }
                acc = acc + arg.cos() * *a + arg.sin() * *b;
            }
            acc
        })
    }
}

impl SymmetricFieldExpr for TrigField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        if !x.iter().all(|v| v.is_affine()) {
            return self.eval_general(x);
        }
        let x0: Vec<f64> = x.iter().map(|v| v.value()).collect();
        let xg: Vec<[f64; 4]> = x.iter().map(|v| v.gradient()).collect();
        JetMatrix::symmetric(self.dim, |i, j| {
            let mut acc = zero(x);
            for (a, b, k) in &self.terms[upper_index(self.dim, i, j)] {
                let mut grad = [0.0; 4];
                let mut v = 0.0;
                for var in 0..self.dim {
                    let kv = k[var] as f64;
                    if kv != 0.0 {
                        v += kv * x0[var];
                        for (g, d) in grad.iter_mut().zip(xg[var]) {
                            *g += kv * d;
                        }
                    }
                }
                let (s, c) = v.sin_cos();
                let f = a * c + b * s;
                let df = -a * s + b * c;
                acc.accumulate_affine(&grad, &[f, df, -f, -df, f][..=acc.order()]);
            }
            acc
        })
    }
}

/// `base + scale * perturbation`.
#[derive(Debug, Clone)]
pub struct SumField {
    pub base: FieldRef,
    pub perturbation: FieldRef,
    pub scale: f64,
}

impl SymmetricFieldExpr for SumField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let g = self.base.eval(x);
        let p = self.perturbation.eval(x);
        JetMatrix::from_fn(self.dim(), |i, j| *g.get(i, j) + *p.get(i, j) * self.scale)
    }
}

/// `g · base · g`: a deformation measured in the frame of `g`, so `g + t h`
/// stays non-degenerate where `g` itself nearly degenerates.
#[derive(Debug, Clone)]
pub struct SandwichField {
    pub metric: FieldRef,
    pub base: FieldRef,
}

impl SymmetricFieldExpr for SandwichField {
    fn dim(&self) -> usize {
        self.metric.dim()
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let n = self.dim();
        let g = self.metric.eval(x);
        let b = self.base.eval(x);
        let bg = JetMatrix::from_fn(n, |k, j| {
            let mut acc = zero(x);
            for l in 0..n {
                mul_add_assign(&mut acc, b.get(k, l), g.get(l, j));
            }
            acc
        });
        JetMatrix::symmetric(n, |i, j| {
            let mut acc = zero(x);
            for k in 0..n {
                mul_add_assign(&mut acc, g.get(i, k), bg.get(k, j));
            }
            acc
        })
    }
}

/// `f(x) * base(x)` for a scalar `f` given as the (0,0) entry of a 1-dim-valued
/// polynomial or trigonometric field on the same coordinates.
#[derive(Debug, Clone)]
pub struct ScaledField {
    pub base: FieldRef,
    pub factor: ScalarExpr,
}

impl SymmetricFieldExpr for ScaledField {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, x: &[ScalarJet]) -> JetMatrix {
        let f = self.factor.eval(x);
        self.base.eval(x).map(|c| *c * f)
    }
}

/// Scalar functions built from the same polynomial / trigonometric pieces.
#[derive(Debug, Clone)]
pub enum ScalarExpr {
    Polynomial(Vec<(f64, [u8; 4])>),
    Trig(Vec<(f64, f64, [i8; 4])>),
}

impl ScalarExpr {
    pub fn eval(&self, x: &[ScalarJet]) -> ScalarJet {
        match self {
            ScalarExpr::Polynomial(terms) => {
                let mut f = PolynomialField::new(1.max(x.len()));
                f.terms[0] = terms.clone();
                *f.eval(x).get(0, 0)
            }
            ScalarExpr::Trig(terms) => {
                let mut f = TrigField::new(x.len());
                f.terms[0] = terms.clone();
                *f.eval(x).get(0, 0)
            }
        }
    }

    pub fn random_trig(dim: usize, seed: u64, amplitude: f64) -> Self {
        let t = TrigField::random(dim, seed, amplitude);
        ScalarExpr::Trig(t.terms[0].clone())
    }
}

/// Standard 2π box used by the periodic charts.
pub const TWO_PI: f64 = 2.0 * PI;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_indexing_is_a_bijection() {
        for dim in 1..=4 {
            let mut seen = vec![false; upper_len(dim)];
            for i in 0..dim {
                for j in i..dim {
                    let k = upper_index(dim, i, j);
                    assert!(!seen[k]);
                    seen[k] = true;
                    assert_eq!(k, upper_index(dim, j, i));
                }
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn random_polynomial_is_bounded_on_box() {
        let f = PolynomialField::random(4, 3, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = f.eval(&ScalarJet::coordinates(&p, 0));
            for i in 0..4 {
                for j in 0..4 {
                    assert!(m.get(i, j).value().abs() <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_blocks_are_independent() {
        let f = ProductField {
            factors: vec![
                Arc::new(HypersphericalField { dim: 2, radius: 1.0 }),
                Arc::new(HalfPlaneField { c: 1.0 }),
            ],
        };
        let m = f.eval(&ScalarJet::coordinates(&[1.0, 0.3, 0.2, 2.0], 1));
        assert_eq!(m.get(0, 2).value(), 0.0);
        assert_eq!(m.get(2, 2).value(), 0.25);
        assert_eq!(m.get(2, 2).partial(&[0]), Some(0.0));
        assert!((m.get(2, 2).partial(&[3]).unwrap() + 0.25).abs() < 1e-15);
    }
}
