//! True-error measurement, efficiency indices and convergence-rate fitting.

use crate::adaptivity::AdaptiveTrace;
use crate::assembly::{assemble_with, solve_system, HpSolution};
use crate::error::{HpError, Result};
use crate::mesh::HpMesh;
use crate::polybasis::{gauss_legendre_cached, LegendreCoeffs, QuadratureRule};
use crate::problem::ProblemSpec;

/// Controls of the adaptive composite rule used for true errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuadrature {
    /// Gauss points beyond `p_j` on every subinterval.
    pub extra_points: usize,
    /// Two successive levels must agree to this relative tolerance.
    pub rel_tol: f64,
    pub max_levels: usize,
    /// Absolute acceptance floor per unit length, below any error of interest.
    pub abs_floor: f64,
}

impl Default for ErrorQuadrature {
    fn default() -> Self {
        Self {
            extra_points: 20,
            rel_tol: 1e-4,
            max_levels: 12,
            abs_floor: 1e-26,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub energy_error: f64,
    /// `eps ||e'||^2 + || sqrt|d| e ||^2` on each element.
    pub per_element: Vec<f64>,
    /// `false` if some subinterval hit the level cap before agreeing.
    pub converged: bool,
}

impl ErrorReport {
    pub fn efficiency(&self, estimate: f64) -> Result<f64> {
        efficiency_index(estimate, self.energy_error)
    }
}

pub fn energy_norm_error(solution: &HpSolution, problem: &ProblemSpec) -> Result<ErrorReport> {
    energy_norm_error_with(solution, problem, &ErrorQuadrature::default())
}

/// Elementwise `eps ||(u - u_hp)'||^2 + ||sqrt|d| (u - u_hp)||^2` by an
/// adaptive composite Gauss rule: start with `p_j + 20` points on the element
/// and bisect subintervals until two successive levels agree.
pub fn energy_norm_error_with(
    solution: &HpSolution,
    problem: &ProblemSpec,
    opts: &ErrorQuadrature,
) -> Result<ErrorReport> {
    let exact = problem.exact().ok_or(HpError::MissingExactSolution)?;
    let mesh = solution.mesh();
    let eps = problem.epsilon();
    let mut per_element = Vec::with_capacity(mesh.num_elements());
    let mut converged = true;
    for j in 0..mesh.num_elements() {
        let (xl, xr) = mesh.element(j);
        let c = solution.coeffs(j);
        let dc = c.differentiate();
        let scale = 2.0 / (xr - xl);
        let integrand = |x: f64| {
            let xi = ((2.0 * x - xl - xr) / (xr - xl)).clamp(-1.0, 1.0);
            let e = (exact.u)(x) - c.eval(xi);
            let de = (exact.du)(x) - dc.eval(xi) * scale;
            eps * de * de + problem.d(x).abs() * e * e
        };
        let rule = gauss_legendre_cached(mesh.degree(j) + opts.extra_points);
        let whole = rule.integrate(xl, xr, integrand);
        let (v, ok) = refine_integral(&integrand, &rule, xl, xr, whole, 1, opts);
        converged &= ok;
        per_element.push(v);
    }
    let energy_error = per_element.iter().sum::<f64>().sqrt();
    Ok(ErrorReport {
        energy_error,
        per_element,
        converged,
    })
}

fn refine_integral(
    g: &dyn Fn(f64) -> f64,
    rule: &QuadratureRule,
    a: f64,
    b: f64,
    coarse: f64,
    level: usize,
    opts: &ErrorQuadrature,
) -> (f64, bool) {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, g);
    let right = rule.integrate(m, b, g);
    let fine = left + right;
    if (fine - coarse).abs() <= opts.rel_tol * fine.abs() + opts.abs_floor * (b - a) {
        return (fine, true);
    }
    if level >= opts.max_levels {
        return (fine, false);
    }
    let (l, ok_l) = refine_integral(g, rule, a, m, left, level + 1, opts);
    let (r, ok_r) = refine_integral(g, rule, m, b, right, level + 1, opts);
    (l + r, ok_l && ok_r)
}

/// `estimate / true_error`; undefined when the true error is below `1e-14`.
pub fn efficiency_index(estimate: f64, true_error: f64) -> Result<f64> {
    if !(true_error > 1e-14) {
        return Err(HpError::UndefinedEfficiency(true_error));
    }
    Ok(estimate / true_error)
}

/// Least-squares line through `(x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `ln(eta_total)` against the iteration number over the last `window`
/// records of `trace`.
pub fn fit_exponential(trace: &AdaptiveTrace, window: usize) -> Result<ExponentialFit> {
    let records = &trace.records;
    let start = records.len().saturating_sub(window);
    let (xs, ys): (Vec<f64>, Vec<f64>) = records[start..]
        .iter()
        .map(|r| (r.iteration as f64, r.eta_total))
        .unzip();
    fit_exponential_series(&xs, &ys)
}

/// Same fit for an arbitrary series; non-positive values are skipped.
pub fn fit_exponential_series(xs: &[f64], ys: &[f64]) -> Result<ExponentialFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(_, &y)| y > 0.0 && y.is_finite())
        .map(|(&x, &y)| (x, y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(HpError::InsufficientData(format!(
            "exponential fit needs at least 3 positive values, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(HpError::InsufficientData("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExponentialFit {
        slope,
        intercept,
        r_squared,
        points: pts.len(),
    })
}

/// Both sides of `max(|w(0)|, |w(h)|)^2 <= ||w||^2 / h + 2 ||w|| ||w'||`
/// for `w` given by Legendre coefficients on `(0, h)` mapped to `[-1, 1]`.
/// Norms use Legendre orthogonality, so they are exact.
pub fn trace_inequality_sides(w: &LegendreCoeffs, h: f64) -> (f64, f64) {
    let end = w.value_left().abs().max(w.value_right().abs());
    let w_sq = 0.5 * h * w.l2_norm_sq();
    let dw = w.differentiate();
    let dw_sq = (2.0 / h) * dw.l2_norm_sq();
    let lhs = end * end;
    let rhs = w_sq / h + 2.0 * w_sq.sqrt() * dw_sq.sqrt();
    (lhs, rhs)
}

pub fn check_trace_inequality(w: &LegendreCoeffs, h: f64) -> bool {
    let (lhs, rhs) = trace_inequality_sides(w, h);
    lhs <= rhs + 1e-12 * rhs
}

/// Enrichment used by [`residual_norm`]: every element is split into
/// `splits` pieces of degree `p_j + extra_degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enrichment {
    pub splits: usize,
    pub extra_degree: usize,
}

/// Dual norm of the residual `v -> (f, v) - a(u_hp, v)` with respect to the
/// energy-type norm, computed on an enriched discrete space by solving the
/// Riesz problem there. For `d >= 0` it approaches the energy error from
/// below as the enrichment grows.
pub fn residual_norm(solution: &HpSolution, problem: &ProblemSpec, enrichment: Enrichment) -> Result<f64> {
    let mesh = solution.mesh();
    let splits = enrichment.splits.max(1);
    let mut breaks = Vec::with_capacity(mesh.num_elements() * splits + 1);
    let mut degrees = Vec::with_capacity(mesh.num_elements() * splits);
    breaks.push(mesh.breakpoints()[0]);
    for j in 0..mesh.num_elements() {
        let (xl, xr) = mesh.element(j);
        for k in 1..=splits {
            breaks.push(if k == splits { xr } else { xl + (xr - xl) * k as f64 / splits as f64 });
            degrees.push(mesh.degree(j) + enrichment.extra_degree);
        }
    }
    let fine = HpMesh::new(breaks, degrees)?;
    let eps = problem.epsilon();
    let owner = |x: f64| {
        let j = mesh.locate(x).expect("point inside the domain");
        (solution.eval_on(j, x), solution.derivative_on(j, x))
    };
    let load = |x: f64| {
        let (u, du) = owner(x);
        (problem.f(x) - problem.d(x) * u, -eps * du)
    };
    let system = assemble_with(&fine, eps, &|x| problem.d(x).abs(), &load, mesh.max_degree());
    let riesz = solve_system(&system)?;
    let mut norm_sq = 0.0;
    for j in 0..fine.num_elements() {
        let (xl, xr) = fine.element(j);
        let rule = gauss_legendre_cached(fine.degree(j) + 10);
        norm_sq += rule.integrate(xl, xr, |x| {
            let w = riesz.eval_on(j, x);
            let dw = riesz.derivative_on(j, x);
            eps * dw * dw + problem.d(x).abs() * w * w
        });
    }
    Ok(norm_sq.sqrt())
}
