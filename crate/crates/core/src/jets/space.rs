//! Monomial bookkeeping shared by every jet with a given number of variables
//! and truncation order.
//!
//! Monomials are enumerated by total degree, so the coefficients of a jet of
//! order `k` are a prefix of the coefficients of the same jet at order `k+1`.
//! Truncation is then a length change and mixed-order arithmetic works on the
//! shorter prefix.

use std::collections::HashMap;
use std::sync::OnceLock;

pub const MAX_VARS: usize = 4;
pub const MAX_ORDER: usize = 4;
/// Number of monomials of degree <= 4 in 4 variables.
pub const MAX_COEFFS: usize = 70;

pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
    pub len: usize,
    pub exponents: Vec<[u8; MAX_VARS]>,
    /// `alpha!` for each monomial, converting Taylor coefficients to partials.
    pub factorials: Vec<f64>,
    /// (a, b, c): coefficient c receives a*b.
    pub mul: Vec<(u8, u8, u8)>,
    /// Per variable: (dst, src, factor) for the partial derivative, which
    /// lands in the space of order `order - 1`.
    pub deriv: [Vec<(u8, u8, f64)>; MAX_VARS],
    /// Position of `x_i` (order >= 1), `usize::MAX` otherwise.
    pub linear: [usize; MAX_VARS],
    /// Position of `x_i x_j` (order >= 2), `usize::MAX` otherwise.
    pub quadratic: [[usize; MAX_VARS]; MAX_VARS],
    /// Total degree of each monomial.
    pub degrees: Vec<u8>,
    index: HashMap<[u8; MAX_VARS], usize>,
}

impl std::fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "JetSpace(nvars={}, order={})", self.nvars, self.order)
    }
}

fn degree(e: &[u8; MAX_VARS]) -> usize {
    e.iter().map(|&v| v as usize).sum()
}

fn monomials(nvars: usize) -> Vec<[u8; MAX_VARS]> {
    let mut out = Vec::new();
    for deg in 0..=MAX_ORDER {
        let mut level = Vec::new();
        collect(nvars, 0, deg, [0; MAX_VARS], &mut level);
        // lexicographically descending: x1^d first
        level.sort_by(|a, b| b.cmp(a));
        out.extend(level);
    }
    out
}

fn collect(nvars: usize, var: usize, left: usize, cur: [u8; MAX_VARS], out: &mut Vec<[u8; MAX_VARS]>) {
    if var + 1 == nvars {
        let mut e = cur;
        e[var] = left as u8;
        out.push(e);
        return;
    }
    for p in 0..=left {
        let mut e = cur;
        e[var] = p as u8;
        collect(nvars, var + 1, left - p, e, out);
    }
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        let all = monomials(nvars);
        let exponents: Vec<_> = all.into_iter().filter(|e| degree(e) <= order).collect();
        let len = exponents.len();
        let index: HashMap<_, _> = exponents.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let factorials = exponents
            .iter()
            .map(|e| e.iter().map(|&p| (1..=p as u32).product::<u32>() as f64).product())
            .collect();

        let mut mul = Vec::new();
        for (a, ea) in exponents.iter().enumerate() {
            for (b, eb) in exponents.iter().enumerate() {
                if degree(ea) + degree(eb) > order {
                    continue;
                }
                let mut ec = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    ec[v] = ea[v] + eb[v];
                }
                mul.push((a as u8, b as u8, index[&ec] as u8));
            }
        }

        let mut deriv: [Vec<(u8, u8, f64)>; MAX_VARS] = Default::default();
        if order > 0 {
            for (v, table) in deriv.iter_mut().enumerate().take(nvars) {
                for (dst, e) in exponents.iter().enumerate() {
                    if degree(e) + 1 > order {
                        continue;
                    }
                    let mut src = *e;
                    src[v] += 1;
                    table.push((dst as u8, index[&src] as u8, src[v] as f64));
                }
            }
        }

        let mut linear = [usize::MAX; MAX_VARS];
        let mut quadratic = [[usize::MAX; MAX_VARS]; MAX_VARS];
        for i in 0..nvars {
            let mut e = [0u8; MAX_VARS];
            e[i] = 1;
            if let Some(&k) = index.get(&e) {
                linear[i] = k;
            }
            for j in 0..nvars {
                let mut e2 = e;
                e2[j] += 1;
                if let Some(&k) = index.get(&e2) {
                    quadratic[i][j] = k;
                }
            }
        }
        let degrees = exponents.iter().map(|e| degree(e) as u8).collect();

        JetSpace { nvars, order, len, exponents, factorials, mul, deriv, linear, quadratic, degrees, index }
    }

    /// The shared space for `nvars` variables truncated at `order`.
    pub fn get(nvars: usize, order: usize) -> &'static JetSpace {
        static SPACES: OnceLock<Vec<JetSpace>> = OnceLock::new();
        assert!((1..=MAX_VARS).contains(&nvars), "jet variables must be 1..=4, got {nvars}");
        assert!(order <= MAX_ORDER, "jet order must be <= 4, got {order}");
        let spaces = SPACES.get_or_init(|| {
            let mut v = Vec::new();
            for n in 1..=MAX_VARS {
                for k in 0..=MAX_ORDER {
                    v.push(JetSpace::build(n, k));
                }
            }
            v
        });
        &spaces[(nvars - 1) * (MAX_ORDER + 1) + order]
    }

    pub fn index_of(&self, exps: &[u8; MAX_VARS]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
    }

    #[test]
    fn sizes_match_binomials() {
        for n in 1..=4 {
            for k in 0..=4 {
                assert_eq!(JetSpace::get(n, k).len, binom(n + k, k), "n={n} k={k}");
            }
        }
        assert_eq!(JetSpace::get(4, 4).len, MAX_COEFFS);
    }

    #[test]
    fn lower_orders_are_prefixes() {
        for n in 1..=4 {
            let full = JetSpace::get(n, 4);
            for k in 0..4 {
                let s = JetSpace::get(n, k);
                assert_eq!(&full.exponents[..s.len], &s.exponents[..]);
            }
        }
    }
}
