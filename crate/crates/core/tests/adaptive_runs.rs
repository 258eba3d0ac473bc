use hp_robust::adaptivity::{adaptive_solve, adaptive_solve_with, AdaptiveConfig};
use hp_robust::analysis::{efficiency_index, energy_norm_error, residual_norm, Enrichment};
use hp_robust::assembly::Factorization;
use hp_robust::estimator::check_weight_windows;
use hp_robust::{HpError, ProblemSpec};

fn cfg(n: usize) -> AdaptiveConfig {
    AdaptiveConfig {
        max_iterations: n,
        target_estimate: 0.0,
        ..Default::default()
    }
}

#[test]
fn example1_estimate_decreases_at_the_end() {
    for eps in [1.0, 1e-2, 1e-4, 1e-6, 1e-8] {
        let run = adaptive_solve(&ProblemSpec::example1(eps).unwrap(), &cfg(30)).unwrap();
        let tail = &run.trace.records[run.trace.len() - 10..];
        for w in tail.windows(2) {
            assert!(
                w[1].eta_total < w[0].eta_total,
                "eps {eps}: iteration {} -> {}: {} -> {}",
                w[0].iteration,
                w[1].iteration,
                w[0].eta_total,
                w[1].eta_total
            );
        }
    }
}

#[test]
fn trace_bookkeeping() {
    let run = adaptive_solve(&ProblemSpec::example1(1e-3).unwrap(), &cfg(15)).unwrap();
    assert_eq!(run.trace.len(), 16);
    for (i, r) in run.trace.records.iter().enumerate() {
        assert_eq!(r.iteration, i);
        assert_eq!(r.n_elem, r.mesh.num_elements());
        assert_eq!(r.n_dof, r.mesh.num_dofs());
        assert_eq!(r.max_p, r.mesh.max_degree());
        let e = r.true_error.unwrap();
        assert_eq!(r.efficiency, Some(r.eta_total / e));
    }
    for w in run.trace.records.windows(2) {
        assert!(w[1].n_dof > w[0].n_dof);
    }
    let last = run.trace.last().unwrap();
    assert_eq!(run.solution.mesh(), &last.mesh);
    assert_eq!(run.estimate.total(), last.eta_total);
}

#[test]
fn airy_runs_use_pivoted_factorization() {
    let p = ProblemSpec::example2(1e-3).unwrap();
    let mut methods = Vec::new();
    adaptive_solve_with(&p, &cfg(10), |s| {
        let report = s.solution.report().unwrap();
        methods.push(report.method);
        assert!(report.relative_residual < 1e-10);
        check_weight_windows(s.estimate, s.solution.mesh(), p.epsilon()).unwrap();
    })
    .unwrap();
    assert!(methods.iter().all(|&m| m == Factorization::PivotedLu));

    let q = ProblemSpec::example1(1e-3).unwrap();
    let run = adaptive_solve(&q, &cfg(3)).unwrap();
    assert_eq!(run.solution.report().unwrap().method, Factorization::Cholesky);
}

#[test]
fn residual_route_agrees_with_energy_error() {
    // d >= 0: the dual norm of the residual is the energy norm of the error,
    // so both routes give the same efficiency index
    let p = ProblemSpec::example1(1e-3).unwrap();
    let mut compared = 0;
    adaptive_solve_with(&p, &cfg(12), |s| {
        if s.record.iteration % 3 != 0 {
            return;
        }
        let energy = energy_norm_error(s.solution, &p).unwrap().energy_error;
        let dual = residual_norm(s.solution, &p, Enrichment { splits: 8, extra_degree: 8 }).unwrap();
        let a = efficiency_index(s.record.eta_total, energy).unwrap();
        let b = efficiency_index(s.record.eta_total, dual).unwrap();
        assert!((a - b).abs() <= 1e-2 * a, "iteration {}: {a} vs {b}", s.record.iteration);
        compared += 1;
    })
    .unwrap();
    assert!(compared >= 4);
}

#[test]
fn invalid_configuration_is_rejected() {
    let p = ProblemSpec::example1(1e-2).unwrap();
    let bad = AdaptiveConfig {
        tau: 0.4,
        ..Default::default()
    };
    assert!(matches!(adaptive_solve(&p, &bad), Err(HpError::Domain(_))));
}

#[test]
fn airy_is_deterministic() {
    let p = ProblemSpec::example2(1e-4).unwrap();
    let a = adaptive_solve(&p, &cfg(20)).unwrap();
    let b = adaptive_solve(&p, &cfg(20)).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.solution.all_coeffs(), b.solution.all_coeffs());
}
