use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use hp_robust::adaptivity::{adaptive_solve_with, AdaptiveTrace};
use hp_robust::analysis::{fit_exponential_series, ExponentialFit};
use hp_robust::estimator::efficiency_diagnostics;
use hp_robust::ProblemSpec;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Emit, OscDegree, RunConfig};
use crate::output::{self, TraceRow};
use crate::CliError;

/// Samples per element in solution files.
pub const SAMPLES_PER_ELEMENT: usize = 20;
/// Trailing iterations used for efficiency statistics.
pub const EFFICIENCY_WINDOW: usize = 10;
/// Trailing iterations used for the exponential fits.
pub const FIT_WINDOW: usize = 15;

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub problem: String,
    pub settings: Settings,
    pub runs: Vec<EpsilonSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub theta: f64,
    pub tau: f64,
    pub max_iterations: usize,
    pub target_estimate: f64,
    pub initial_elements: usize,
    pub initial_degree: usize,
    pub p_max: Option<usize>,
    pub beta: f64,
    pub osc_degree: OscDegree,
    pub emit: BTreeSet<Emit>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl From<ExponentialFit> for Fit {
    fn from(f: ExponentialFit) -> Self {
        Fit {
            slope: f.slope,
            r_squared: f.r_squared,
            points: f.points,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub iterations: usize,
    pub n_elem: usize,
    pub n_dof: usize,
    pub max_p: usize,
    pub final_estimate: f64,
    pub final_true_error: Option<f64>,
    pub efficiency_last: Option<Range>,
    pub estimate_fit: Option<Fit>,
    pub error_fit: Option<Fit>,
    pub max_diagnostic_ratio: Option<f64>,
    pub files: Vec<String>,
}

pub fn epsilon_tag(eps: f64) -> String {
    format!("{eps:e}")
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Runs every epsilon of `config`, writes the requested artifacts and the
/// summary, and returns the summary.
pub fn execute(config: &RunConfig) -> Result<Summary, CliError> {
    create_dir(&config.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let results: Vec<Result<EpsilonSummary, CliError>> =
        pool.install(|| config.epsilons.par_iter().map(|&eps| run_one(config, eps)).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let a = &config.adaptive;
    let summary = Summary {
        problem: config.problem.clone(),
        settings: Settings {
            theta: a.theta,
            tau: a.tau,
            max_iterations: a.max_iterations,
            target_estimate: a.target_estimate,
            initial_elements: a.initial_elements,
            initial_degree: a.initial_degree,
            p_max: a.p_max,
            beta: config.beta,
            osc_degree: config.osc_degree,
            emit: config.emit.clone(),
        },
        runs,
    };
    output::write_json(&config.out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn run_one(config: &RunConfig, eps: f64) -> Result<EpsilonSummary, CliError> {
    let problem = ProblemSpec::by_name(&config.problem, eps).map_err(|e| CliError::Config(e.to_string()))?;
    let tag = format!("{}_{}", config.problem, epsilon_tag(eps));
    let emits = |e| config.emit.contains(&e);
    let run_dir = config.out.join(&tag);
    if emits(Emit::Mesh) || emits(Emit::Indicators) {
        create_dir(&run_dir)?;
    }
    let mut files: Vec<PathBuf> = Vec::new();
    let mut diag_rows = Vec::new();
    let mut max_ratio: Option<f64> = None;
    let mut failure: Option<CliError> = None;

    let run = adaptive_solve_with(&problem, &config.adaptive, |step| {
        if failure.is_some() {
            return;
        }
        let iter = step.record.iteration;
        let mut attempt = || -> Result<(), CliError> {
            if emits(Emit::Mesh) {
                let p = run_dir.join(format!("mesh_{iter}.csv"));
                output::write_mesh(&p, step.solution.mesh())?;
                files.push(p);
            }
            if emits(Emit::Indicators) {
                let p = run_dir.join(format!("indicators_{iter}.csv"));
                output::write_indicators(&p, step.solution.mesh(), step.estimate)?;
                files.push(p);
            }
            if emits(Emit::Diagnostics) {
                let diag = efficiency_diagnostics(step.solution, &problem, config.beta, config.osc_degree.into())
                    .map_err(|e| CliError::Solver(format!("epsilon {eps:e}, iteration {iter}: {e}")))?;
                if let Some(m) = diag.max_ratio() {
                    max_ratio = Some(max_ratio.map_or(m, |r| r.max(m)));
                }
                diag_rows.extend(output::diagnostic_rows(iter, &diag));
            }
            Ok(())
        };
        failure = attempt().err();
    })
    .map_err(|e| CliError::Solver(format!("epsilon {eps:e}: {e}")))?;
    if let Some(e) = failure {
        return Err(e);
    }

    let rows: Vec<TraceRow> = run.trace.records.iter().map(TraceRow::from).collect();
    if emits(Emit::Trace) {
        let p = config.out.join(format!("trace_{tag}.csv"));
        output::write_trace(&p, &rows)?;
        files.push(p);
        let p = config.out.join(format!("series_{tag}.csv"));
        output::write_series(&p, &rows)?;
        files.push(p);
    }
    if emits(Emit::Diagnostics) {
        let p = config.out.join(format!("diagnostics_{}.csv", epsilon_tag(eps)));
        output::write_diagnostics(&p, diag_rows)?;
        files.push(p);
    }
    if emits(Emit::Solution) {
        let p = config.out.join(format!("solution_{tag}.csv"));
        output::write_solution(&p, &run.solution, SAMPLES_PER_ELEMENT)?;
        files.push(p);
        let p = config.out.join(format!("hpmesh_{tag}.csv"));
        output::write_mesh(&p, run.solution.mesh())?;
        files.push(p);
    }

    let last = run.trace.last().expect("at least one iteration");
    Ok(EpsilonSummary {
        epsilon: eps,
        iterations: last.iteration,
        n_elem: last.n_elem,
        n_dof: last.n_dof,
        max_p: last.max_p,
        final_estimate: last.eta_total,
        final_true_error: last.true_error,
        efficiency_last: efficiency_range(&run.trace),
        estimate_fit: tail_fit(&run.trace, |r| Some(r.eta_total)),
        error_fit: tail_fit(&run.trace, |r| r.true_error),
        max_diagnostic_ratio: max_ratio,
        files: files
            .iter()
            .map(|p| p.strip_prefix(&config.out).unwrap_or(p).display().to_string())
            .collect(),
    })
}

fn efficiency_range(trace: &AdaptiveTrace) -> Option<Range> {
    let start = trace.len().saturating_sub(EFFICIENCY_WINDOW);
    let values: Vec<f64> = trace.records[start..].iter().filter_map(|r| r.efficiency).collect();
    if values.is_empty() {
        return None;
    }
    Some(Range {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

fn tail_fit(
    trace: &AdaptiveTrace,
    value: impl Fn(&hp_robust::adaptivity::IterationRecord) -> Option<f64>,
) -> Option<Fit> {
    let start = trace.len().saturating_sub(FIT_WINDOW);
    let (xs, ys): (Vec<f64>, Vec<f64>) = trace.records[start..]
        .iter()
        .filter_map(|r| value(r).map(|v| (r.iteration as f64, v)))
        .unzip();
    fit_exponential_series(&xs, &ys).ok().map(Fit::from)
}
