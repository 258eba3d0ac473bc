//! Two-point boundary value problems `-eps u'' + d(x) u = f(x)` on `(a, b)`
//! with `u(a) = u(b) = 0`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{HpError, Result};

pub type ScalarField = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Analytic provider of `||1/d||_{L^inf(l, r)}`.
pub type InverseBoundFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const BOUNDARY_TOL: f64 = 1e-10;
const SMALL_COEFFICIENT: f64 = 1e-12;
const MIN_BOUND_SAMPLES: usize = 33;

/// Closed-form solution and its derivative.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub du: ScalarField,
}

/// `inv_d_sup = ||1/d||_{L^inf}` on `interval`; `+inf` when `d` vanishes there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientBound {
    pub interval: (f64, f64),
    pub inv_d_sup: f64,
}

impl CoefficientBound {
    pub fn is_finite(&self) -> bool {
        self.inv_d_sup.is_finite()
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    epsilon: f64,
    domain: (f64, f64),
    d: ScalarField,
    f: ScalarField,
    exact: Option<ExactSolution>,
    inverse_bound: Option<InverseBoundFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .field("domain", &self.domain)
            .field("has_exact", &self.exact.is_some())
            .field("has_inverse_bound", &self.inverse_bound.is_some())
            .finish()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(HpError::Domain(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

impl ProblemSpec {
    pub fn new<D, F>(epsilon: f64, domain: (f64, f64), d: D, f: F) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_epsilon(epsilon)?;
        if !(domain.0 < domain.1) {
            return Err(HpError::Domain(format!(
                "empty domain ({}, {})",
                domain.0, domain.1
            )));
        }
        Ok(Self {
            name: "custom".into(),
            epsilon,
            domain,
            d: Arc::new(d),
            f: Arc::new(f),
            exact: None,
            inverse_bound: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Attaches an exact solution; it must satisfy the boundary conditions.
    pub fn with_exact<U, DU>(mut self, u: U, du: DU) -> Result<Self>
    where
        U: Fn(f64) -> f64 + Send + Sync + 'static,
        DU: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (a, b) = self.domain;
        let (ua, ub) = (u(a), u(b));
        if ua.abs() > BOUNDARY_TOL || ub.abs() > BOUNDARY_TOL {
            return Err(HpError::InvalidInput(format!(
                "exact solution violates homogeneous boundary conditions: u(a) = {ua:e}, u(b) = {ub:e}"
            )));
        }
        self.exact = Some(ExactSolution {
            u: Arc::new(u),
            du: Arc::new(du),
        });
        Ok(self)
    }

    pub fn with_inverse_bound<B>(mut self, bound: B) -> Self
    where
        B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.inverse_bound = Some(Arc::new(bound));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn d(&self, x: f64) -> f64 {
        (self.d)(x)
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub fn has_inverse_bound(&self) -> bool {
        self.inverse_bound.is_some()
    }

    /// `||1/d||_{L^inf(l, r)}`. Uses the analytic provider when present;
    /// otherwise samples `d` on a Chebyshev–Lobatto grid of
    /// `max(2 max_degree + 1, 33)` points and declares `+inf` if a sample is
    /// below `1e-12` in magnitude or the samples change sign.
    pub fn inverse_bound(&self, l: f64, r: f64, max_degree: usize) -> CoefficientBound {
        let inv_d_sup = match &self.inverse_bound {
            Some(bound) => bound(l, r),
            None => self.sampled_inverse_bound(l, r, max_degree),
        };
        CoefficientBound {
            interval: (l, r),
            inv_d_sup,
        }
    }

    fn sampled_inverse_bound(&self, l: f64, r: f64, max_degree: usize) -> f64 {
        let n = (2 * max_degree + 1).max(MIN_BOUND_SAMPLES);
        let mid = 0.5 * (l + r);
        let half = 0.5 * (r - l);
        let mut min_abs = f64::INFINITY;
        let mut positive = false;
        let mut negative = false;
        for k in 0..n {
            let x = mid - half * (PI * k as f64 / (n - 1) as f64).cos();
            let v = self.d(x);
            if !v.is_finite() {
                return f64::INFINITY;
            }
            positive |= v > 0.0;
            negative |= v < 0.0;
            min_abs = min_abs.min(v.abs());
        }
        if min_abs < SMALL_COEFFICIENT || (positive && negative) {
            f64::INFINITY
        } else {
            1.0 / min_abs
        }
    }

    /// `-eps u'' + u = 1` on `(-1, 1)`; exact solution
    /// `1 - cosh(x/sqrt(eps)) / cosh(1/sqrt(eps))` in overflow-free form.
    pub fn example1(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        let s = epsilon.sqrt();
        let denom = 1.0 + (-2.0 / s).exp();
        let u = move |x: f64| 1.0 - (((x - 1.0) / s).exp() + (-(x + 1.0) / s).exp()) / denom;
        let du = move |x: f64| -(((x - 1.0) / s).exp() - (-(x + 1.0) / s).exp()) / (s * denom);
        Self::new(epsilon, (-1.0, 1.0), |_| 1.0, |_| 1.0)?
            .with_name("example1")
            .with_exact(u, du)
            .map(|p| p.with_inverse_bound(|_, _| 1.0))
    }

    /// Airy-type problem `-eps u'' + x u = 1` on `(-1, 1)`; no closed form.
    pub fn example2(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self::new(epsilon, (-1.0, 1.0), |x| x, |_| 1.0)?
            .with_name("example2")
            .with_inverse_bound(airy_inverse_bound))
    }

    /// Problem whose exact solution is `u`: `f = -eps u'' + d u`.
    pub fn manufactured<U, DU, D2U, D>(
        epsilon: f64,
        domain: (f64, f64),
        u: U,
        du: DU,
        d2u: D2U,
        d: D,
    ) -> Result<Self>
    where
        U: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        DU: Fn(f64) -> f64 + Send + Sync + 'static,
        D2U: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    {
        let (uc, dc) = (u.clone(), d.clone());
        let f = move |x: f64| -epsilon * d2u(x) + dc(x) * uc(x);
        Self::new(epsilon, domain, d, f)?
            .with_name("manufactured")
            .with_exact(u, du)
    }

    /// `u = sin(pi x)` on `(0, 1)` with `d = 1`.
    pub fn manufactured_sin(epsilon: f64) -> Result<Self> {
        Ok(Self::manufactured(
            epsilon,
            (0.0, 1.0),
            |x| (PI * x).sin(),
            |x| PI * (PI * x).cos(),
            |x| -PI * PI * (PI * x).sin(),
            |_| 1.0,
        )?
        .with_name("manufactured-sin")
        .with_inverse_bound(|_, _| 1.0))
    }

    /// Looks up a built-in problem: `example1`, `example2` or `manufactured-sin`.
    pub fn by_name(name: &str, epsilon: f64) -> Result<Self> {
        match name {
            "example1" => Self::example1(epsilon),
            "example2" => Self::example2(epsilon),
            "manufactured-sin" => Self::manufactured_sin(epsilon),
            other => Err(HpError::InvalidInput(format!("unknown problem '{other}'"))),
        }
    }

    /// Same problem with `f` and the exact solution multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let f = self.f.clone();
        let mut out = self.clone();
        out.f = Arc::new(move |x| lambda * f(x));
        out.exact = self.exact.as_ref().map(|e| {
            let (u, du) = (e.u.clone(), e.du.clone());
            ExactSolution {
                u: Arc::new(move |x| lambda * u(x)),
                du: Arc::new(move |x| lambda * du(x)),
            }
        });
        out
    }
}

/// `sup 1/|x|` over `[l, r]`.
fn airy_inverse_bound(l: f64, r: f64) -> f64 {
    if l > 0.0 {
        1.0 / l
    } else if r < 0.0 {
        1.0 / r.abs()
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example1_values() {
        let p = ProblemSpec::example1(1.0).unwrap();
        let e = p.exact().unwrap();
        assert!((e.u)(-1.0).abs() < 1e-15);
        assert!((e.u)(1.0).abs() < 1e-15);
        assert_relative_eq!((e.u)(0.0), 1.0 - 1.0 / 1f64.cosh(), epsilon = 1e-15);
        assert_relative_eq!((e.u)(0.0), 0.351_945_726_336, epsilon = 1e-11);
    }

    #[test]
    fn example1_stable_form_matches_cosh_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for eps in [1.0, 0.3, 0.1, 0.05, 1e-2] {
            let p = ProblemSpec::example1(eps).unwrap();
            let e = p.exact().unwrap();
            let s = f64::sqrt(eps);
            for _ in 0..50 {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let naive = 1.0 - (x / s).cosh() / (1.0 / s).cosh();
                assert!(((e.u)(x) - naive).abs() <= 1e-12);
                let naive_du = -(x / s).sinh() / (s * (1.0 / s).cosh());
                assert!(((e.du)(x) - naive_du).abs() <= 1e-12 * naive_du.abs().max(1.0));
            }
        }
        for eps in [1e-8, 1e-12, 1e-16] {
            let p = ProblemSpec::example1(eps).unwrap();
            let e = p.exact().unwrap();
            for x in [-1.0, -0.999_999, 0.0, 0.5, 1.0] {
                assert!((e.u)(x).is_finite() && (e.du)(x).is_finite());
            }
        }
    }

    /// Strong-form residual using a fourth-order central difference for u''.
    fn strong_form_check(p: &ProblemSpec, eps: f64) {
        let e = p.exact().unwrap();
        let (a, b) = p.domain();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-3 * (b - a) * eps.sqrt().min(1.0);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(a + 3.0 * h..b - 3.0 * h);
            let u = |t: f64| (e.u)(t);
            let upp = (-u(x + 2.0 * h) + 16.0 * u(x + h) - 30.0 * u(x) + 16.0 * u(x - h)
                - u(x - 2.0 * h))
                / (12.0 * h * h);
            let lhs = -eps * upp + p.d(x) * u(x);
            let rhs = p.f(x);
            assert!(
                (lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0),
                "{}: x = {x}, lhs = {lhs}, rhs = {rhs}",
                p.name()
            );
        }
    }

    #[test]
    fn exact_solutions_solve_the_strong_form() {
        for eps in [1.0, 1e-2] {
            strong_form_check(&ProblemSpec::example1(eps).unwrap(), eps);
            strong_form_check(&ProblemSpec::manufactured_sin(eps).unwrap(), eps);
        }
    }

    #[test]
    fn example1_residual_symbolic() {
        // u'' = -(e^{(x-1)/s} + e^{-(x+1)/s}) / (s^2 denom) = -(1 - u)/eps
        let eps = 0.3;
        let p = ProblemSpec::example1(eps).unwrap();
        let e = p.exact().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let u = (e.u)(x);
            let upp = -(1.0 - u) / eps;
            assert!((-eps * upp + u - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn example2_coefficient() {
        let p = ProblemSpec::example2(1e-4).unwrap();
        assert_eq!(p.d(-1.0), -1.0);
        assert_eq!(p.d(1.0), 1.0);
        assert_eq!(p.inverse_bound(0.5, 1.0, 3).inv_d_sup, 2.0);
        assert_eq!(p.inverse_bound(-1.0, -0.25, 3).inv_d_sup, 4.0);
        assert!(!p.inverse_bound(-0.1, 0.2, 3).is_finite());
        assert!(p.exact().is_none());
    }

    #[test]
    fn sampled_bound_fallback() {
        let p = ProblemSpec::new(1.0, (-1.0, 1.0), |x| x, |_| 1.0).unwrap();
        assert!((p.inverse_bound(0.5, 1.0, 2).inv_d_sup - 2.0).abs() < 1e-14);
        assert!(!p.inverse_bound(-0.1, 0.2, 2).is_finite());
        // sign change between samples without a near-zero sample
        assert!(!p.inverse_bound(-0.1 + 1e-7, 0.2, 2).is_finite());
        let q = ProblemSpec::new(1.0, (0.0, 1.0), |x| 2.0 + x, |_| 1.0).unwrap();
        assert!((q.inverse_bound(0.0, 1.0, 5).inv_d_sup - 0.5).abs() < 1e-14);
    }

    #[test]
    fn manufactured_examples() {
        let p = ProblemSpec::manufactured_sin(1.0).unwrap();
        for x in [0.1, 0.37, 0.8] {
            assert_relative_eq!(p.f(x), (PI * PI + 1.0) * (PI * x).sin(), epsilon = 1e-13);
        }
        let z = ProblemSpec::manufactured(1.0, (0.0, 1.0), |_| 0.0, |_| 0.0, |_| 0.0, |_| 1.0)
            .unwrap();
        assert_eq!(z.f(0.3), 0.0);
        let q = ProblemSpec::manufactured(
            1.0,
            (0.0, 1.0),
            |x| x * (1.0 - x),
            |x| 1.0 - 2.0 * x,
            |_| -2.0,
            |_| 0.0,
        )
        .unwrap();
        assert_eq!(q.f(0.42), 2.0);
        let bad = ProblemSpec::manufactured(1.0, (0.0, 1.0), |x| x, |_| 1.0, |_| 0.0, |_| 1.0);
        assert!(matches!(bad, Err(HpError::InvalidInput(_))));
    }

    #[test]
    fn rejects_bad_epsilon_and_names() {
        assert!(ProblemSpec::example1(0.0).is_err());
        assert!(ProblemSpec::example2(-1.0).is_err());
        assert!(ProblemSpec::by_name("example3", 1.0).is_err());
        assert_eq!(ProblemSpec::by_name("example2", 1.0).unwrap().name(), "example2");
    }
}
