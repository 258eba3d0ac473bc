//! Gauss–Legendre quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of a quadrature rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs on the reference interval.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Approximates `int_a^b f(x) dx` with the affinely mapped rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .iter()
            .map(|(xi, w)| w * f(mid + half * xi))
            .sum::<f64>()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    let dp = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// `n`-point Gauss–Legendre rule. Nodes are the roots of `P_n`, found by
/// Newton's method from Chebyshev-type initial guesses; the rule is exactly
/// symmetric about the origin. Panics for `n == 0`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "a quadrature rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                dp = legendre_with_derivative(n, x).1;
                break;
            }
        }
        if n % 2 == 1 && i == m - 1 {
            x = 0.0;
            dp = legendre_with_derivative(n, 0.0).1;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    QuadratureRule { nodes, weights }
}

/// Shared, lazily built Gauss–Legendre rules.
pub fn gauss_legendre_cached(n: usize) -> Arc<QuadratureRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(gauss_legendre(n)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_and_two_points() {
        let r = gauss_legendre(1);
        assert_eq!(r.nodes(), &[0.0]);
        assert_abs_diff_eq!(r.weights()[0], 2.0, epsilon = 1e-15);

        let r = gauss_legendre(2);
        let s = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(r.nodes()[0], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.nodes()[1], s, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn weights_sum_to_two_and_nodes_increase() {
        for n in 1..=80 {
            let r = gauss_legendre(n);
            let total: f64 = r.weights().iter().sum();
            assert!((total - 2.0).abs() <= 1e-14, "n = {n}: {total}");
            assert!(r.nodes().windows(2).all(|w| w[0] < w[1]), "n = {n}");
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert!(r.nodes().iter().all(|x| x.abs() < 1.0));
        }
    }

    #[test]
    fn nodes_are_roots() {
        for n in [3, 10, 31, 50] {
            let r = gauss_legendre(n);
            for &x in r.nodes() {
                assert!(legendre_with_derivative(n, x).0.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn integrates_exponential() {
        let r = gauss_legendre(12);
        let v = r.integrate(0.0, 2.0, f64::exp);
        assert_abs_diff_eq!(v, 2f64.exp() - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn cache_returns_same_rule() {
        let a = gauss_legendre_cached(7);
        let b = gauss_legendre_cached(7);
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, gauss_legendre(7));
    }
}
