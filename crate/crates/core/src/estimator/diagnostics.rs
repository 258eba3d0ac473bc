//! Efficiency diagnostics: weighted data oscillation and the ratios of the
//! estimator contributions to the local true error.

use crate::analysis::energy_norm_error;
use crate::assembly::HpSolution;
use crate::error::{HpError, Result};
use crate::polybasis::{gauss_legendre_cached, QUADRATURE_MARGIN};
use crate::problem::ProblemSpec;

use super::{compute_alpha, compute_beta, compute_gamma, flux_jump, l2_project_with};

/// Target degree of the projection in the oscillation term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionDegree {
    #[default]
    Same,
    Double,
}

impl ProjectionDegree {
    pub fn degree(self, p: usize) -> usize {
        match self {
            ProjectionDegree::Same => p,
            ProjectionDegree::Double => 2 * p,
        }
    }
}

/// `Phi_K(x) = min(|x - x_l|, |x - x_r|) / h`.
pub fn scaled_distance(x: f64, (xl, xr): (f64, f64)) -> f64 {
    (x - xl).abs().min((x - xr).abs()) / (xr - xl)
}

fn check_exponent(beta: f64) -> Result<()> {
    if !(beta > 0.5 && beta <= 1.0) {
        return Err(HpError::Domain(format!(
            "oscillation exponent must lie in (1/2, 1], got {beta}"
        )));
    }
    Ok(())
}

/// Oscillation term of element `i`:
/// `p^b (||Phi^{b/2}(f - Pi f)|| + ||Phi^{b/2}(d u - Pi(d u))||) + ||f - Pi f|| + ||d u - Pi(d u)||`.
///
/// The weighted norms are integrated separately on the two halves of the
/// element, where `Phi` is the distance to the nearer end.
pub fn oscillation_r(
    solution: &HpSolution,
    problem: &ProblemSpec,
    i: usize,
    beta: f64,
    projection: ProjectionDegree,
) -> Result<f64> {
    check_exponent(beta)?;
    let mesh = solution.mesh();
    let (xl, xr) = mesh.element(i);
    let p = mesh.degree(i);
    let q = projection.degree(p);
    let rule = gauss_legendre_cached(q.max(p) + QUADRATURE_MARGIN);
    let u = solution.coeffs(i);
    let to_ref = |x: f64| ((2.0 * x - xl - xr) / (xr - xl)).clamp(-1.0, 1.0);
    let du = |x: f64| problem.d(x) * u.eval(to_ref(x));
    let pf = l2_project_with(|x| problem.f(x), (xl, xr), q, &rule);
    let pdu = l2_project_with(du, (xl, xr), q, &rule);
    let osc_f = |x: f64| problem.f(x) - pf.eval(to_ref(x));
    let osc_du = |x: f64| du(x) - pdu.eval(to_ref(x));

    let h = xr - xl;
    let plain = |g: &dyn Fn(f64) -> f64| rule.integrate(xl, xr, |x| g(x).powi(2)).sqrt();
    // On each half, distance to the nearer end t = (h/2) s^4 turns the
    // non-smooth weight t^b into the smooth s^{4b+3}.
    let wrule = gauss_legendre_cached(4 * q.max(p) + 2 * QUADRATURE_MARGIN);
    let weighted = |g: &dyn Fn(f64) -> f64| {
        let half = |s: f64| {
            let s3 = s * s * s;
            let t = 0.5 * h * s3 * s;
            let jac = 2.0 * h * s3;
            let w = (t / h).powf(beta) * jac;
            w * (g(xl + t).powi(2) + g(xr - t).powi(2))
        };
        wrule.integrate(0.0, 1.0, half).sqrt()
    };

    Ok((p as f64).powf(beta) * (weighted(&osc_f) + weighted(&osc_du)) + plain(&osc_f) + plain(&osc_du))
}

/// Ratios of the estimator terms to their lower-bound right-hand sides.
/// `None` marks a vanishing denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyDiagnostics {
    pub beta_exponent: f64,
    /// `R_K` per element.
    pub oscillation: Vec<f64>,
    /// `alpha ||r||^2 / (p^2 |||e|||_K^2 + alpha R_K^2)` per element.
    pub volume_ratios: Vec<Option<f64>>,
    /// `gamma eps^2 [u']^2 / (p^2 |||e|||_patch^2 + alpha R^2 + alpha' R'^2)`
    /// for interior nodes `1..N`, stored at index `node - 1`.
    pub jump_ratios: Vec<Option<f64>>,
    /// Numerators of the volume ratios, `alpha ||r||^2`.
    pub volume_terms: Vec<f64>,
    /// Numerators of the jump ratios, `gamma eps^2 [u']^2`.
    pub jump_terms: Vec<f64>,
}

impl EfficiencyDiagnostics {
    pub fn max_ratio(&self) -> Option<f64> {
        self.volume_ratios
            .iter()
            .chain(&self.jump_ratios)
            .flatten()
            .copied()
            .filter(|r| r.is_finite())
            .reduce(f64::max)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    if den > 0.0 && den.is_finite() {
        Some(num / den)
    } else {
        None
    }
}

/// Requires an exact solution; `r = f - (-eps u'' + d u)` is evaluated by
/// quadrature with `p + 10` points.
pub fn efficiency_diagnostics(
    solution: &HpSolution,
    problem: &ProblemSpec,
    beta: f64,
    projection: ProjectionDegree,
) -> Result<EfficiencyDiagnostics> {
    check_exponent(beta)?;
    if problem.exact().is_none() {
        return Err(HpError::MissingExactSolution);
    }
    let mesh = solution.mesh();
    let n = mesh.num_elements();
    let eps = problem.epsilon();
    let errors = energy_norm_error(solution, problem)?.per_element;
    let alphas = (0..n)
        .map(|j| compute_alpha(mesh, problem, j))
        .collect::<Result<Vec<_>>>()?;
    let betas: Vec<f64> = (0..n).map(|j| compute_beta(alphas[j], mesh.h(j), eps)).collect();
    let gammas = compute_gamma(&betas);
    let oscillation = (0..n)
        .map(|j| oscillation_r(solution, problem, j, beta, projection))
        .collect::<Result<Vec<_>>>()?;

    let (volume_terms, volume_ratios): (Vec<f64>, Vec<Option<f64>>) = (0..n)
        .map(|j| {
            let (xl, xr) = mesh.element(j);
            let p = mesh.degree(j);
            let u = solution.coeffs(j);
            let upp = solution.derivative_coeffs(j, 2);
            let rule = gauss_legendre_cached(p + QUADRATURE_MARGIN);
            let r_sq = rule.integrate(xl, xr, |x| {
                let xi = ((2.0 * x - xl - xr) / (xr - xl)).clamp(-1.0, 1.0);
                let r = problem.f(x) + eps * upp.eval(xi) - problem.d(x) * u.eval(xi);
                r * r
            });
            let p2 = (p * p) as f64;
            let num = alphas[j] * r_sq;
            (num, ratio(num, p2 * errors[j] + alphas[j] * oscillation[j].powi(2)))
        })
        .unzip();

    let (jump_terms, jump_ratios): (Vec<f64>, Vec<Option<f64>>) = (1..n)
        .map(|i| {
            let jump = flux_jump(solution, i).expect("interior node");
            let p2 = (mesh.degree(i - 1) * mesh.degree(i - 1)) as f64;
            let den = p2 * (errors[i - 1] + errors[i])
                + alphas[i - 1] * oscillation[i - 1].powi(2)
                + alphas[i] * oscillation[i].powi(2);
            let num = gammas[i] * eps * eps * jump * jump;
            (num, ratio(num, den))
        })
        .unzip();

    Ok(EfficiencyDiagnostics {
        beta_exponent: beta,
        oscillation,
        volume_ratios,
        jump_ratios,
        volume_terms,
        jump_terms,
    })
}
