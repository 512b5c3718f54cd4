//! Truncated multivariate Taylor arithmetic.
//!
//! A [`ScalarJet`] stores the Taylor coefficients `c_alpha` of a smooth scalar
//! around a point, for every multi-index `|alpha| <= order`. Partial
//! derivatives are recovered as `alpha! * c_alpha`. Arithmetic is exact
//! truncated composition, so derivatives of closed-form expressions carry no
//! discretisation error.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use super::space::{JetSpace, MAX_COEFFS, MAX_VARS};

#[derive(Clone, Copy)]
pub struct ScalarJet {
    space: &'static JetSpace,
    c: [f64; MAX_COEFFS],
}

impl fmt::Debug for ScalarJet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarJet")
            .field("nvars", &self.space.nvars)
            .field("order", &self.space.order)
            .field("coeffs", &&self.c[..self.space.len])
            .finish()
    }
}

impl PartialEq for ScalarJet {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.space, other.space) && self.coeffs() == other.coeffs()
    }
}

impl ScalarJet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        ScalarJet { space: JetSpace::get(nvars, order), c }
    }

    /// The coordinate function `x_var` expanded around `at`.
    pub fn variable(nvars: usize, order: usize, var: usize, at: f64) -> Self {
        assert!(var < nvars);
        let space = JetSpace::get(nvars, order);
        let mut c = [0.0; MAX_COEFFS];
        c[0] = at;
        if order > 0 {
            let mut e = [0u8; MAX_VARS];
            e[var] = 1;
            c[space.index_of(&e).unwrap()] = 1.0;
        }
        ScalarJet { space, c }
    }

    /// Coordinate jets for every variable at `point`.
    pub fn coordinates(point: &[f64], order: usize) -> Vec<ScalarJet> {
        let n = point.len();
        (0..n).map(|i| ScalarJet::variable(n, order, i, point[i])).collect()
    }

    pub fn zero_like(&self) -> Self {
        ScalarJet { space: self.space, c: [0.0; MAX_COEFFS] }
    }

    pub fn constant_like(&self, value: f64) -> Self {
        let mut z = self.zero_like();
        z.c[0] = value;
        z
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.space.len]
    }

    /// Partial derivative `d^k f / dx_{i1} ... dx_{ik}` at the expansion point.
    /// Returns `None` if more derivatives are requested than the jet carries.
    pub fn partial(&self, indices: &[usize]) -> Option<f64> {
        if indices.len() > self.order() {
            return None;
        }
        let mut e = [0u8; MAX_VARS];
        for &i in indices {
            assert!(i < self.nvars());
            e[i] += 1;
        }
        let idx = self.space.index_of(&e)?;
        Some(self.c[idx] * self.space.factorials[idx])
    }

    /// First partials; zero if the jet has order 0.
    pub fn gradient(&self) -> [f64; MAX_VARS] {
        let mut g = [0.0; MAX_VARS];
        if self.order() >= 1 {
            for (i, gi) in g.iter_mut().enumerate().take(self.nvars()) {
                *gi = self.c[self.space.linear[i]];
            }
        }
        g
    }

    /// Second partials; zero if the jet has order below 2.
    pub fn hessian(&self) -> [[f64; MAX_VARS]; MAX_VARS] {
        let mut h = [[0.0; MAX_VARS]; MAX_VARS];
        if self.order() >= 2 {
            let sp = self.space;
            for i in 0..self.nvars() {
                for j in 0..self.nvars() {
                    let k = sp.quadratic[i][j];
                    h[i][j] = self.c[k] * sp.factorials[k];
                }
            }
        }
        h
    }

    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return *self;
        }
        let space = JetSpace::get(self.nvars(), order);
        let mut c = [0.0; MAX_COEFFS];
        c[..space.len].copy_from_slice(&self.c[..space.len]);
        ScalarJet { space, c }
    }

    /// Partial derivative along `var` as a jet one order lower.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order() > 0, "cannot differentiate an order-0 jet");
        assert!(var < self.nvars());
        let space = JetSpace::get(self.nvars(), self.order() - 1);
        let mut c = [0.0; MAX_COEFFS];
        for &(dst, src, factor) in &self.space.deriv[var] {
            c[dst as usize] = self.c[src as usize] * factor;
        }
        ScalarJet { space, c }
    }

    fn common_space(&self, other: &Self) -> &'static JetSpace {
        assert_eq!(self.nvars(), other.nvars(), "jets over different variable counts");
        if self.order() <= other.order() {
            self.space
        } else {
            other.space
        }
    }

    /// `f(self)` given `derivs[m] = f^(m)(self.value())` for `m = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let k = self.order();
        assert!(derivs.len() > k);
        if self.is_affine() {
            return self.compose_affine(derivs);
        }
        let mut delta = *self;
        delta.c[0] = 0.0;
        // Horner in delta: sum_m derivs[m]/m! delta^m
        let mut fact = 1.0;
        for m in 1..=k {
            fact *= m as f64;
        }
        let mut acc = self.constant_like(derivs[k] / fact);
        for m in (0..k).rev() {
            fact /= (m + 1) as f64;
            acc = acc * delta;
            acc.c[0] += derivs[m] / fact;
        }
        acc
    }

    pub(crate) fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [f64; MAX_COEFFS] {
        &mut self.c
    }

    /// True when all coefficients above first order vanish.
    pub fn is_affine(&self) -> bool {
        let start = 1 + self.nvars();
        start >= self.space.len || self.c[start..self.space.len].iter().all(|&v| v == 0.0)
    }

    /// `f(v + g·δ)` has coefficients `f^(|α|)(v) g^α / α!`.
    fn compose_affine(&self, derivs: &[f64]) -> Self {
        let sp = self.space;
        let g = self.gradient();
        let mut c = [0.0; MAX_COEFFS];
        c[0] = derivs[0];
        for idx in 1..sp.len {
            let e = &sp.exponents[idx];
            let mut mono = 1.0;
            for v in 0..sp.nvars {
                for _ in 0..e[v] {
                    mono *= g[v];
                }
            }
            c[idx] = derivs[sp.degrees[idx] as usize] * mono / sp.factorials[idx];
        }
        ScalarJet { space: sp, c }
    }

    /// Adds the jet of `f(v + grad·δ)` where `derivs[m] = f^(m)(v)`.
    pub fn accumulate_affine(&mut self, grad: &[f64], derivs: &[f64]) {
        let sp = self.space;
        assert!(derivs.len() > sp.order && grad.len() >= sp.nvars);
        self.c[0] += derivs[0];
        if sp.order == 0 {
            return;
        }
        for i in 0..sp.nvars {
            self.c[sp.linear[i]] += derivs[1] * grad[i];
        }
        if sp.order == 1 {
            return;
        }
        for i in 0..sp.nvars {
            self.c[sp.quadratic[i][i]] += 0.5 * derivs[2] * grad[i] * grad[i];
            for j in i + 1..sp.nvars {
                self.c[sp.quadratic[i][j]] += derivs[2] * grad[i] * grad[j];
            }
        }
        for idx in 1..sp.len {
            if sp.degrees[idx] < 3 {
                continue;
            }
            let e = &sp.exponents[idx];
            let mut mono = 1.0;
            for var in 0..sp.nvars {
                for _ in 0..e[var] {
                    mono *= grad[var];
                }
            }
            if mono != 0.0 {
                self.c[idx] += derivs[sp.degrees[idx] as usize] * mono / sp.factorials[idx];
            }
        }
    }

    /// `self += scale * a`, truncated to the order of `self`.
    pub fn add_scaled(&mut self, a: &ScalarJet, scale: f64) {
        assert!(a.order() >= self.order(), "operand below target order");
        for i in 0..self.space.len {
            self.c[i] += scale * a.c[i];
        }
    }

    pub fn recip(&self) -> Self {
        let v = self.value();
        let mut d = [0.0; 5];
        let inv = 1.0 / v;
        let mut p = inv;
        let mut sign = 1.0;
        for (m, dm) in d.iter_mut().enumerate() {
            *dm = sign * p * (1..=m).product::<usize>() as f64;
            p *= inv;
            sign = -sign;
        }
        self.compose(&d[..=self.order()])
    }

    pub fn powf(&self, exponent: f64) -> Self {
        let v = self.value();
        let mut d = [0.0; 5];
        let mut coef = 1.0;
        for (m, dm) in d.iter_mut().enumerate() {
            *dm = coef * v.powf(exponent - m as f64);
            coef *= exponent - m as f64;
        }
        self.compose(&d[..=self.order()])
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }

    pub fn square(&self) -> Self {
        *self * *self
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; 5][..=self.order()])
    }

    pub fn ln(&self) -> Self {
        let v = self.value();
        let mut d = [v.ln(), 0.0, 0.0, 0.0, 0.0];
        let mut p = 1.0 / v;
        let mut sign = 1.0;
        for m in 1..5 {
            d[m] = sign * p * (1..m).product::<usize>() as f64;
            p /= v;
            sign = -sign;
        }
        self.compose(&d[..=self.order()])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[s, c, -s, -c, s][..=self.order()])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(&[c, -s, -c, s, c][..=self.order()])
    }

    pub fn sinh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[s, c, s, c, s][..=self.order()])
    }

    pub fn cosh(&self) -> Self {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&[c, s, c, s, c][..=self.order()])
    }
}

impl Add for ScalarJet {
    type Output = ScalarJet;
    fn add(self, rhs: ScalarJet) -> ScalarJet {
        let space = self.common_space(&rhs);
        let mut c = [0.0; MAX_COEFFS];
        for i in 0..space.len {
            c[i] = self.c[i] + rhs.c[i];
        }
        ScalarJet { space, c }
    }
}

impl Sub for ScalarJet {
    type Output = ScalarJet;
    fn sub(self, rhs: ScalarJet) -> ScalarJet {
        let space = self.common_space(&rhs);
        let mut c = [0.0; MAX_COEFFS];
        for i in 0..space.len {
            c[i] = self.c[i] - rhs.c[i];
        }
        ScalarJet { space, c }
    }
}

impl Mul for ScalarJet {
    type Output = ScalarJet;
    fn mul(self, rhs: ScalarJet) -> ScalarJet {
        let space = self.common_space(&rhs);
        let mut c = [0.0; MAX_COEFFS];
        for &(a, b, t) in &space.mul {
            c[t as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        ScalarJet { space, c }
    }
}

impl Div for ScalarJet {
    type Output = ScalarJet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: ScalarJet) -> ScalarJet {
        self * rhs.recip()
    }
}

impl Neg for ScalarJet {
    type Output = ScalarJet;
    fn neg(mut self) -> ScalarJet {
        for v in self.c[..self.space.len].iter_mut() {
            *v = -*v;
        }
        self
    }
}

impl Add<f64> for ScalarJet {
    type Output = ScalarJet;
    fn add(mut self, rhs: f64) -> ScalarJet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for ScalarJet {
    type Output = ScalarJet;
    fn sub(mut self, rhs: f64) -> ScalarJet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for ScalarJet {
    type Output = ScalarJet;
    fn mul(mut self, rhs: f64) -> ScalarJet {
        for v in self.c[..self.space.len].iter_mut() {
            *v *= rhs;
        }
        self
    }
}

impl Mul<ScalarJet> for f64 {
    type Output = ScalarJet;
    fn mul(self, rhs: ScalarJet) -> ScalarJet {
        rhs * self
    }
}

impl Add<ScalarJet> for f64 {
    type Output = ScalarJet;
    fn add(self, rhs: ScalarJet) -> ScalarJet {
        rhs + self
    }
}

impl Sub<ScalarJet> for f64 {
    type Output = ScalarJet;
    fn sub(self, rhs: ScalarJet) -> ScalarJet {
        -rhs + self
    }
}

impl AddAssign for ScalarJet {
    fn add_assign(&mut self, rhs: ScalarJet) {
        *self = *self + rhs;
    }
}

impl SubAssign for ScalarJet {
    fn sub_assign(&mut self, rhs: ScalarJet) {
        *self = *self - rhs;
    }
}

impl MulAssign<f64> for ScalarJet {
    fn mul_assign(&mut self, rhs: f64) {
        *self = *self * rhs;
    }
}

/// Fused `acc += a * b`, avoiding a temporary when accumulating products.
pub fn mul_add_assign(acc: &mut ScalarJet, a: &ScalarJet, b: &ScalarJet) {
    let space = acc.common_space(a).min_order(a.common_space(b));
    if space.order < acc.order() {
        *acc = acc.truncate(space.order);
    }
    for &(i, j, t) in &space.mul {
        acc.c[t as usize] += a.c[i as usize] * b.c[j as usize];
    }
}

trait MinOrder {
    fn min_order(self, other: &'static JetSpace) -> &'static JetSpace;
}

impl MinOrder for &'static JetSpace {
    fn min_order(self, other: &'static JetSpace) -> &'static JetSpace {
        if self.order <= other.order {
            self
        } else {
            other
        }
    }
}
