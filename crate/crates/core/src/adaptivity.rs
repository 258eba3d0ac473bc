//! Dörfler marking, the smoothness-based hp decision and the adaptive loop.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::analysis::{efficiency_index, energy_norm_error};
use crate::assembly::{solve, HpSolution};
use crate::error::{HpError, Result};
use crate::estimator::{estimate, ErrorEstimate};
use crate::mesh::{HpMesh, RefinementDecision, RefinementKind};
use crate::problem::ProblemSpec;

/// Lower end of the smoothness indicator range, `sqrt(3) / (sqrt(6) + 1)`.
pub fn smoothness_lower_bound() -> f64 {
    3f64.sqrt() / (6f64.sqrt() + 1.0)
}

static DORFLER_CHECKS: AtomicU64 = AtomicU64::new(0);
static SMOOTHNESS_CHECKS: AtomicU64 = AtomicU64::new(0);

/// Number of marking and smoothness-range assertions evaluated so far in this
/// process. A violation panics, so every counted check passed.
pub fn invariant_checks() -> (u64, u64) {
    (
        DORFLER_CHECKS.load(Ordering::Relaxed),
        SMOOTHNESS_CHECKS.load(Ordering::Relaxed),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub theta: f64,
    pub tau: f64,
    pub max_iterations: usize,
    pub target_estimate: f64,
    pub initial_elements: usize,
    pub initial_degree: usize,
    /// Elements flagged for p-refinement at this degree are bisected instead.
    pub p_max: Option<usize>,
    /// Measure the true error when the problem carries an exact solution.
    pub track_true_error: bool,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tau: 0.6,
            max_iterations: 80,
            target_estimate: 1e-10,
            initial_elements: 10,
            initial_degree: 1,
            p_max: Some(40),
            track_true_error: true,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(HpError::Domain(format!("theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(self.tau > smoothness_lower_bound() && self.tau < 1.0) {
            return Err(HpError::Domain(format!(
                "tau must lie in ({:.6}, 1), got {}",
                smoothness_lower_bound(),
                self.tau
            )));
        }
        if !(self.target_estimate >= 0.0) {
            return Err(HpError::Domain("target estimate must be non-negative".into()));
        }
        if self.initial_elements == 0 {
            return Err(HpError::Domain("need at least one initial element".into()));
        }
        if self.initial_degree == 0 {
            return Err(HpError::InvalidDegree(0));
        }
        if let Some(p) = self.p_max {
            if p < self.initial_degree {
                return Err(HpError::Domain(format!(
                    "p_max {p} below the initial degree {}",
                    self.initial_degree
                )));
            }
        }
        Ok(())
    }
}

/// Shortest set of elements, taken in descending order of `eta_sq` (ties by
/// index), whose indicators sum to at least `theta` times the total.
/// Returns an empty set when all indicators vanish.
pub fn dorfler_mark(eta_sq: &[f64], theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(HpError::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if eta_sq.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(HpError::InvalidInput("indicators must be finite and non-negative".into()));
    }
    let total: f64 = eta_sq.iter().sum();
    if total == 0.0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta_sq[b].total_cmp(&eta_sq[a]).then(a.cmp(&b)));
    let goal = theta * total;
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for &j in &order {
        marked.push(j);
        acc += eta_sq[j];
        if acc >= goal {
            break;
        }
    }
    let without_last: f64 = marked[..marked.len() - 1].iter().map(|&j| eta_sq[j]).sum();
    let with_all: f64 = marked.iter().map(|&j| eta_sq[j]).sum();
    assert!(
        !marked.is_empty() && without_last < goal && (with_all >= goal || marked.len() == eta_sq.len()),
        "Dörfler marking not minimal: {without_last} / {with_all} vs {goal}"
    );
    DORFLER_CHECKS.fetch_add(1, Ordering::Relaxed);
    Ok(marked)
}

/// Smoothness indicator of `u_hp` on element `j`, computed from the
/// `(p_j - 1)`-st derivative `g`:
/// `||g||_inf / (h^{-1/2} ||g|| + h^{1/2} ||g'|| / sqrt 2)`, or 1 if `g = 0`.
///
/// `g` is linear, and the quotient is invariant under rescaling `g` and under
/// the affine map to `[-1, 1]`, so it is evaluated on the reference Legendre
/// coefficients without the `(2/h)` chain-rule factors.
pub fn smoothness_indicator(solution: &HpSolution, j: usize) -> f64 {
    let p = solution.mesh().degree(j);
    let mut g = solution.coeffs(j).clone();
    for _ in 1..p {
        g = g.differentiate();
    }
    let c0 = g.as_slice().first().copied().unwrap_or(0.0);
    let c1 = g.as_slice().get(1).copied().unwrap_or(0.0);
    let f = smoothness_from_linear(c0, c1);
    let lo = smoothness_lower_bound();
    assert!(
        (lo - 1e-12..=1.0 + 1e-12).contains(&f),
        "smoothness indicator {f} outside [{lo}, 1] on element {j}"
    );
    SMOOTHNESS_CHECKS.fetch_add(1, Ordering::Relaxed);
    f
}

/// Indicator of `g(xi) = c0 + c1 xi` on `[-1, 1]`.
pub fn smoothness_from_linear(c0: f64, c1: f64) -> f64 {
    if c0 == 0.0 && c1 == 0.0 {
        return 1.0;
    }
    // rescale so that tiny or huge coefficients do not under/overflow
    let s = c0.abs().max(c1.abs());
    let (c0, c1) = (c0 / s, c1 / s);
    let sup = c0.abs() + c1.abs();
    sup / ((c0 * c0 + c1 * c1 / 3.0).sqrt() + std::f64::consts::SQRT_2 * c1.abs())
}

/// `F >= tau` raises the degree, otherwise the element is bisected.
pub fn hp_decide(f: f64, tau: f64) -> RefinementKind {
    if f >= tau {
        RefinementKind::RaiseDegree
    } else {
        RefinementKind::Bisect
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_elem: usize,
    pub n_dof: usize,
    pub max_p: usize,
    pub eta_total: f64,
    pub true_error: Option<f64>,
    pub efficiency: Option<f64>,
    pub mesh: HpMesh,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaptiveTrace {
    pub records: Vec<IterationRecord>,
}

impl AdaptiveTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.eta_total).collect()
    }

    pub fn true_errors(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.true_error).collect()
    }
}

/// State of one iteration handed to observers after it has been recorded.
pub struct StepView<'a> {
    pub record: &'a IterationRecord,
    pub solution: &'a HpSolution,
    pub estimate: &'a ErrorEstimate,
    /// Refinements about to be applied; empty on the final iteration.
    pub decisions: &'a [RefinementDecision],
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub trace: AdaptiveTrace,
    pub solution: HpSolution,
    pub estimate: ErrorEstimate,
}

pub fn adaptive_solve(problem: &ProblemSpec, config: &AdaptiveConfig) -> Result<AdaptiveRun> {
    adaptive_solve_with(problem, config, |_| {})
}

/// Solve, estimate, mark, refine until the estimate drops below the target or
/// `max_iterations` refinement steps have been taken. Iteration 0 is the
/// initial uniform mesh.
pub fn adaptive_solve_with<O>(problem: &ProblemSpec, config: &AdaptiveConfig, mut observer: O) -> Result<AdaptiveRun>
where
    O: FnMut(&StepView<'_>),
{
    config.validate()?;
    let (a, b) = problem.domain();
    let mut mesh = HpMesh::uniform(a, b, config.initial_elements, config.initial_degree)?;
    let mut trace = AdaptiveTrace::default();
    let wrap = |iteration: usize| move |e: HpError| HpError::IterationFailure {
        iteration,
        source: Box::new(e),
    };
    for iteration in 0.. {
        let solution = solve(&mesh, problem).map_err(wrap(iteration))?;
        let est = estimate(&solution, problem).map_err(wrap(iteration))?;
        let eta_total = est.total();
        let true_error = match (config.track_true_error, problem.exact()) {
            (true, Some(_)) => Some(energy_norm_error(&solution, problem).map_err(wrap(iteration))?.energy_error),
            _ => None,
        };
        let efficiency = true_error.and_then(|e| efficiency_index(eta_total, e).ok());
        let record = IterationRecord {
            iteration,
            n_elem: mesh.num_elements(),
            n_dof: mesh.num_dofs(),
            max_p: mesh.max_degree(),
            eta_total,
            true_error,
            efficiency,
            mesh: mesh.clone(),
        };

        let done = eta_total <= config.target_estimate || iteration >= config.max_iterations;
        let decisions = if done {
            Vec::new()
        } else {
            let marked = dorfler_mark(&est.eta_sq(), config.theta)?;
            marked
                .into_iter()
                .map(|j| {
                    let f = smoothness_indicator(&solution, j);
                    let mut kind = hp_decide(f, config.tau);
                    if kind == RefinementKind::RaiseDegree && config.p_max.is_some_and(|p| mesh.degree(j) >= p) {
                        kind = RefinementKind::Bisect;
                    }
                    RefinementDecision { element: j, kind }
                })
                .collect()
        };
        observer(&StepView {
            record: &record,
            solution: &solution,
            estimate: &est,
            decisions: &decisions,
        });
        trace.records.push(record);
        if decisions.is_empty() {
            return Ok(AdaptiveRun {
                trace,
                solution,
                estimate: est,
            });
        }
        mesh = mesh.apply_refinements(&decisions)?;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::LegendreCoeffs;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn marking_examples() {
        assert_eq!(dorfler_mark(&[9.0, 4.0, 1.0], 0.5).unwrap(), vec![0]);
        assert_eq!(dorfler_mark(&[1.0, 4.0, 9.0], 0.8).unwrap(), vec![2, 1]);
        assert_eq!(dorfler_mark(&[1.0, 4.0, 9.0], 0.01).unwrap(), vec![2]);
        assert_eq!(dorfler_mark(&[2.0; 5], 1.0 - 1e-9).unwrap(), vec![0, 1, 2, 3, 4]);
        // ties go to the smaller index
        assert_eq!(dorfler_mark(&[1.0, 3.0, 3.0, 1.0], 0.3).unwrap(), vec![1]);
        assert!(dorfler_mark(&[0.0, 0.0], 0.5).unwrap().is_empty());
        assert!(dorfler_mark(&[1.0], 1.0).is_err());
        assert!(dorfler_mark(&[1.0, f64::NAN], 0.5).is_err());
    }

    #[test]
    fn smoothness_examples() {
        assert_eq!(smoothness_from_linear(3.0, 0.0), 1.0);
        assert_eq!(smoothness_from_linear(0.0, 0.0), 1.0);
        // x on (0, 1) is 1/2 + xi/2
        let expected = 1.0 / (1.0 / 3f64.sqrt() + 1.0 / 2f64.sqrt());
        assert_abs_diff_eq!(smoothness_from_linear(0.5, 0.5), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.778_539, epsilon = 1e-6);
        // the minimum sits at c0 = 0
        assert_abs_diff_eq!(smoothness_from_linear(0.0, 1.0), smoothness_lower_bound(), epsilon = 1e-15);
        assert_abs_diff_eq!(smoothness_from_linear(0.0, 1e-300), smoothness_lower_bound(), epsilon = 1e-15);
    }

    #[test]
    fn smoothness_on_solution() {
        let mesh = HpMesh::uniform(0.0, 1.0, 2, 1).unwrap();
        let sol = HpSolution::from_coeffs(
            mesh,
            vec![LegendreCoeffs::new(vec![0.25, 0.25]), LegendreCoeffs::new(vec![0.25, -0.25])],
        );
        let f = smoothness_indicator(&sol, 0);
        assert_abs_diff_eq!(f, smoothness_from_linear(1.0, 1.0), epsilon = 1e-15);
        // degree 3: second derivative of 2 P_3 is 2 * 15 xi
        let mesh = HpMesh::uniform(0.0, 1.0, 1, 3).unwrap();
        let sol = HpSolution::from_coeffs(mesh, vec![LegendreCoeffs::new(vec![0.0, 0.0, 0.0, 2.0])]);
        assert_abs_diff_eq!(smoothness_indicator(&sol, 0), smoothness_lower_bound(), epsilon = 1e-15);
    }

    #[test]
    fn decisions() {
        assert_eq!(hp_decide(1.0, 0.6), RefinementKind::RaiseDegree);
        assert_eq!(hp_decide(0.51, 0.6), RefinementKind::Bisect);
        assert_eq!(hp_decide(0.6, 0.6), RefinementKind::RaiseDegree);
    }

    #[test]
    fn config_validation() {
        assert!(AdaptiveConfig::default().validate().is_ok());
        for bad in [
            AdaptiveConfig { theta: 1.0, ..Default::default() },
            AdaptiveConfig { tau: 0.5, ..Default::default() },
            AdaptiveConfig { tau: 1.0, ..Default::default() },
            AdaptiveConfig { initial_elements: 0, ..Default::default() },
            AdaptiveConfig { initial_degree: 0, ..Default::default() },
            AdaptiveConfig { target_estimate: -1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn zero_iterations_gives_single_record() {
        let p = ProblemSpec::example1(1e-2).unwrap();
        let run = adaptive_solve(&p, &AdaptiveConfig { max_iterations: 0, ..Default::default() }).unwrap();
        assert_eq!(run.trace.len(), 1);
        let r = &run.trace.records[0];
        assert_eq!((r.iteration, r.n_elem, r.n_dof, r.max_p), (0, 10, 9, 1));
        assert!(r.true_error.is_some() && r.efficiency.is_some());
    }

    #[test]
    fn runs_are_deterministic_and_dofs_grow() {
        let p = ProblemSpec::example1(1e-4).unwrap();
        let cfg = AdaptiveConfig { max_iterations: 12, ..Default::default() };
        let a = adaptive_solve(&p, &cfg).unwrap();
        let b = adaptive_solve(&p, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
        for w in a.trace.records.windows(2) {
            assert!(w[1].n_dof > w[0].n_dof);
            assert_eq!(w[1].iteration, w[0].iteration + 1);
        }
    }

    #[test]
    fn observer_sees_every_iteration() {
        let p = ProblemSpec::example2(1e-2).unwrap();
        let cfg = AdaptiveConfig { max_iterations: 5, ..Default::default() };
        let mut seen = Vec::new();
        let run = adaptive_solve_with(&p, &cfg, |s| {
            seen.push((s.record.iteration, s.decisions.len()));
            assert_eq!(s.estimate.indicators.len(), s.record.n_elem);
        })
        .unwrap();
        assert_eq!(seen.len(), run.trace.len());
        assert_eq!(seen.last().unwrap().1, 0);
        assert!(seen[..seen.len() - 1].iter().all(|&(_, n)| n > 0));
        assert!(run.trace.records.iter().all(|r| r.true_error.is_none()));
    }

    #[test]
    fn target_stops_early() {
        let p = ProblemSpec::example1(1.0).unwrap();
        let cfg = AdaptiveConfig { target_estimate: 1e-3, ..Default::default() };
        let run = adaptive_solve(&p, &cfg).unwrap();
        assert!(run.trace.last().unwrap().eta_total <= 1e-3);
        assert!(run.trace.len() < 81);
    }

    #[test]
    fn degree_cap_turns_p_into_h() {
        let p = ProblemSpec::manufactured_sin(1.0).unwrap();
        let cfg = AdaptiveConfig {
            max_iterations: 15,
            initial_elements: 2,
            p_max: Some(3),
            target_estimate: 0.0,
            ..Default::default()
        };
        let run = adaptive_solve(&p, &cfg).unwrap();
        assert!(run.trace.records.iter().all(|r| r.max_p <= 3));
    }

    proptest! {
        #[test]
        fn marking_is_minimal(eta in prop::collection::vec(0.0f64..10.0, 1..40), theta in 0.01f64..0.99) {
            let total: f64 = eta.iter().sum();
            let marked = dorfler_mark(&eta, theta).unwrap();
            if total == 0.0 {
                prop_assert!(marked.is_empty());
            } else {
                prop_assert!(!marked.is_empty());
                let mut sorted = marked.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), marked.len());
                // no unmarked element beats a marked one
                let min_marked = marked.iter().map(|&j| eta[j]).fold(f64::INFINITY, f64::min);
                for (j, &e) in eta.iter().enumerate() {
                    if !marked.contains(&j) {
                        prop_assert!(e <= min_marked);
                    }
                }
            }
        }

        #[test]
        fn smoothness_in_range(c0 in -1e3f64..1e3, c1 in -1e3f64..1e3, scale in -200i32..200) {
            let s = 10f64.powi(scale);
            let f = smoothness_from_linear(c0 * s, c1 * s);
            prop_assert!(f >= smoothness_lower_bound() - 1e-12 && f <= 1.0 + 1e-12);
        }
    }
}
