//! Residual a posteriori error estimator, robust in `eps` and explicit in the
//! local mesh size and polynomial degree.
//!
//! For element `K_j` the indicator is
//!
//! ```text
//! eta_j^2 = alpha_j ( ||Pi f + eps u'' - d u||^2 + ||f - Pi f||^2 )
//!         + 1/2 eps^2 gamma_{j-1} |[u'](x_{j-1})|^2 + 1/2 eps^2 gamma_j |[u'](x_j)|^2
//! ```
//!
//! with `alpha_j = min(h_j^2 / (eps p_j^2), ||1/d||_inf on the patch)`,
//! `beta_j = alpha_j / h_j + 2 sqrt(alpha_j / eps)` and the harmonic-type
//! node weights `gamma = beta_j beta_{j+1} / (beta_j + beta_{j+1})`, zero at
//! the domain ends. `Pi` is the elementwise L2 projection onto degree `p_j`.
//! The global estimate `sqrt(sum eta_j^2)` carries no unknown constant.
//!
//! Indexing follows [`crate::mesh`]: node `i` sits between elements `i - 1`
//! and `i`, so `gamma` and the flux jumps have `N + 1` entries.

mod diagnostics;

pub use diagnostics::{
    efficiency_diagnostics, oscillation_r, scaled_distance, EfficiencyDiagnostics,
    ProjectionDegree,
};

use crate::assembly::HpSolution;
use crate::error::{HpError, Result};
use crate::mesh::HpMesh;
use crate::polybasis::{gauss_legendre_cached, LegendreCoeffs, QuadratureRule, QUADRATURE_MARGIN};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Gauss points beyond `p_j` for element integrals.
    pub quadrature_margin: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            quadrature_margin: QUADRATURE_MARGIN,
        }
    }
}

/// Constituents of one element indicator. `jump_left`/`jump_right` are the
/// full node terms `eps^2 gamma |[u']|^2`; each enters `eta_sq` with weight 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementIndicator {
    pub eta_sq: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_left: f64,
    pub gamma_right: f64,
    pub residual_part: f64,
    pub oscillation_part: f64,
    pub jump_left: f64,
    pub jump_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub indicators: Vec<ElementIndicator>,
    pub betas: Vec<f64>,
    /// Node weights, `gammas[0] = gammas[N] = 0`.
    pub gammas: Vec<f64>,
    /// Flux jumps per node, zero at the domain ends.
    pub flux_jumps: Vec<f64>,
}

impl ErrorEstimate {
    pub fn eta_sq(&self) -> Vec<f64> {
        self.indicators.iter().map(|i| i.eta_sq).collect()
    }

    pub fn total(&self) -> f64 {
        global_estimate(&self.indicators)
    }
}

/// `alpha_j` for element `j`, using `||1/d||_inf` on the patch of `j`.
pub fn compute_alpha(mesh: &HpMesh, problem: &ProblemSpec, j: usize) -> Result<f64> {
    let patch = mesh.patch(j)?;
    let (l, r) = mesh.patch_interval(j)?;
    let max_p = patch.iter().map(|&k| mesh.degree(k)).max().unwrap_or(1);
    let h = mesh.h(j);
    let p = mesh.degree(j) as f64;
    let scaled = h * h / (problem.epsilon() * p * p);
    let bound = problem.inverse_bound(l, r, max_p);
    Ok(if bound.is_finite() {
        scaled.min(bound.inv_d_sup)
    } else {
        scaled
    })
}

pub fn compute_beta(alpha: f64, h: f64, epsilon: f64) -> f64 {
    alpha / h + 2.0 * (alpha / epsilon).sqrt()
}

/// Node weights `gamma_0..=gamma_N`. The product is formed as
/// `min * (max / (min + max))` so that the bounds
/// `min/2 <= gamma <= min` also hold in floating point.
pub fn compute_gamma(betas: &[f64]) -> Vec<f64> {
    let n = betas.len();
    let mut gammas = vec![0.0; n + 1];
    for i in 1..n {
        let (lo, hi) = if betas[i - 1] <= betas[i] {
            (betas[i - 1], betas[i])
        } else {
            (betas[i], betas[i - 1])
        };
        let sum = lo + hi;
        gammas[i] = if sum > 0.0 { lo * (hi / sum) } else { 0.0 };
    }
    gammas
}

/// L2 projection onto degree `p` on `element`, with `p + 10` Gauss points.
pub fn l2_project<F: Fn(f64) -> f64>(f: F, element: (f64, f64), p: usize) -> LegendreCoeffs {
    l2_project_with(f, element, p, &gauss_legendre_cached(p + QUADRATURE_MARGIN))
}

/// `c_k = (2k+1)/2 int_{-1}^{1} f(x(xi)) P_k(xi) dxi` by the given rule.
pub fn l2_project_with<F: Fn(f64) -> f64>(
    f: F,
    (xl, xr): (f64, f64),
    p: usize,
    quad: &QuadratureRule,
) -> LegendreCoeffs {
    let mut coeffs = vec![0.0; p + 1];
    let mut leg = vec![0.0; p + 1];
    for (xi, w) in quad.iter() {
        let x = 0.5 * (xl + xr) + 0.5 * (xr - xl) * xi;
        let fx = f(x);
        crate::polybasis::fill_legendre(xi, &mut leg);
        for k in 0..=p {
            coeffs[k] += w * fx * leg[k];
        }
    }
    for (k, c) in coeffs.iter_mut().enumerate() {
        *c *= (2 * k + 1) as f64 / 2.0;
    }
    LegendreCoeffs::new(coeffs)
}

/// `[u'](x_i) = u'(x_i^+) - u'(x_i^-)` at an interior node `1 <= i <= N - 1`.
pub fn flux_jump(solution: &HpSolution, node: usize) -> Result<f64> {
    let n = solution.mesh().num_elements();
    if node == 0 || node >= n {
        return Err(HpError::IndexOutOfRange {
            index: node,
            valid: format!("interior nodes 1..{n}"),
        });
    }
    let (_, left) = solution.end_derivatives(node - 1);
    let (right, _) = solution.end_derivatives(node);
    Ok(right - left)
}

fn all_flux_jumps(solution: &HpSolution) -> Vec<f64> {
    let n = solution.mesh().num_elements();
    let mut jumps = vec![0.0; n + 1];
    for (i, jump) in jumps.iter_mut().enumerate().take(n).skip(1) {
        *jump = flux_jump(solution, i).expect("interior node");
    }
    jumps
}

/// Volume terms `(||Pi f + eps u'' - d u||^2, ||f - Pi f||^2)` on element `j`.
fn volume_terms(solution: &HpSolution, problem: &ProblemSpec, j: usize, margin: usize) -> (f64, f64) {
    let mesh = solution.mesh();
    let (xl, xr) = mesh.element(j);
    let p = mesh.degree(j);
    let quad = gauss_legendre_cached(p + margin);
    let proj_f = l2_project_with(|x| problem.f(x), (xl, xr), p, &quad);
    let u = solution.coeffs(j);
    let upp = solution.derivative_coeffs(j, 2);
    let eps = problem.epsilon();
    let jac = 0.5 * (xr - xl);
    let mut residual = 0.0;
    let mut oscillation = 0.0;
    for (xi, w) in quad.iter() {
        let x = 0.5 * (xl + xr) + jac * xi;
        let pf = proj_f.eval(xi);
        let r = pf + eps * upp.eval(xi) - problem.d(x) * u.eval(xi);
        let o = problem.f(x) - pf;
        residual += w * jac * r * r;
        oscillation += w * jac * o * o;
    }
    (residual, oscillation)
}

/// Indicator of element `j` from precomputed `alpha_j` and the weights of its
/// two nodes.
pub fn element_indicator(
    solution: &HpSolution,
    problem: &ProblemSpec,
    j: usize,
    alpha: f64,
    gamma_left: f64,
    gamma_right: f64,
) -> ElementIndicator {
    element_indicator_with(
        solution,
        problem,
        j,
        alpha,
        gamma_left,
        gamma_right,
        &EstimatorOptions::default(),
    )
}

pub fn element_indicator_with(
    solution: &HpSolution,
    problem: &ProblemSpec,
    j: usize,
    alpha: f64,
    gamma_left: f64,
    gamma_right: f64,
    options: &EstimatorOptions,
) -> ElementIndicator {
    let mesh = solution.mesh();
    let n = mesh.num_elements();
    let eps = problem.epsilon();
    let (res, osc) = volume_terms(solution, problem, j, options.quadrature_margin);
    let jl = if j > 0 { flux_jump(solution, j).unwrap_or(0.0) } else { 0.0 };
    let jr = if j + 1 < n { flux_jump(solution, j + 1).unwrap_or(0.0) } else { 0.0 };
    let jump_left = eps * eps * gamma_left * jl * jl;
    let jump_right = eps * eps * gamma_right * jr * jr;
    let residual_part = alpha * res;
    let oscillation_part = alpha * osc;
    ElementIndicator {
        eta_sq: residual_part + oscillation_part + 0.5 * jump_left + 0.5 * jump_right,
        alpha,
        beta: compute_beta(alpha, mesh.h(j), eps),
        gamma_left,
        gamma_right,
        residual_part,
        oscillation_part,
        jump_left,
        jump_right,
    }
}

/// `sqrt(sum eta_j^2)`.
pub fn global_estimate(indicators: &[ElementIndicator]) -> f64 {
    indicators.iter().map(|i| i.eta_sq).sum::<f64>().sqrt()
}

/// All indicators of `solution`.
pub fn estimate(solution: &HpSolution, problem: &ProblemSpec) -> Result<ErrorEstimate> {
    estimate_with(solution, problem, &EstimatorOptions::default())
}

pub fn estimate_with(
    solution: &HpSolution,
    problem: &ProblemSpec,
    options: &EstimatorOptions,
) -> Result<ErrorEstimate> {
    let mesh = solution.mesh();
    let n = mesh.num_elements();
    let eps = problem.epsilon();
    let alphas = (0..n)
        .map(|j| compute_alpha(mesh, problem, j))
        .collect::<Result<Vec<_>>>()?;
    let betas: Vec<f64> = (0..n)
        .map(|j| compute_beta(alphas[j], mesh.h(j), eps))
        .collect();
    if let Some(j) = (0..n).find(|&j| !(alphas[j].is_finite() && betas[j].is_finite())) {
        return Err(HpError::Domain(format!(
            "estimator weights overflow on element {j} (eps = {eps:e}, alpha = {:e})",
            alphas[j]
        )));
    }
    let gammas = compute_gamma(&betas);
    let indicators = (0..n)
        .map(|j| {
            element_indicator_with(solution, problem, j, alphas[j], gammas[j], gammas[j + 1], options)
        })
        .collect();
    let est = ErrorEstimate {
        indicators,
        betas,
        gammas,
        flux_jumps: all_flux_jumps(solution),
    };
    if let Err(msg) = check_weight_windows(&est, mesh, eps) {
        panic!("estimator weight invariant violated: {msg}");
    }
    Ok(est)
}

/// Checks `min/2 <= gamma_i <= min` over neighbouring `beta`s and
/// `2 sqrt(alpha/eps) <= beta <= 3 sqrt(alpha/eps)`. The upper `beta` bound
/// is compared with a relative slack of `4 ulp`: it is attained with equality
/// when `alpha = h^2 / eps` and `p = 1`.
pub fn check_weight_windows(est: &ErrorEstimate, mesh: &HpMesh, epsilon: f64) -> std::result::Result<(), String> {
    let n = est.betas.len();
    if est.gammas[0] != 0.0 || est.gammas[n] != 0.0 {
        return Err("boundary node weights must vanish".into());
    }
    for i in 1..n {
        let m = est.betas[i - 1].min(est.betas[i]);
        let g = est.gammas[i];
        if !(0.5 * m <= g && g <= m) {
            return Err(format!("gamma_{i} = {g:e} outside [{:e}, {m:e}]", 0.5 * m));
        }
    }
    for (j, ind) in est.indicators.iter().enumerate() {
        let s = (ind.alpha / epsilon).sqrt();
        let beta = est.betas[j];
        let bound = ind.alpha <= mesh.h(j).powi(2) / (epsilon * (mesh.degree(j) as f64).powi(2));
        if bound && !(2.0 * s <= beta && beta <= 3.0 * s * (1.0 + 4.0 * f64::EPSILON)) {
            return Err(format!("beta_{j} = {beta:e} outside [{:e}, {:e}]", 2.0 * s, 3.0 * s));
        }
    }
    Ok(())
}
