use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use hp_robust::adaptivity::AdaptiveConfig;
use hp_robust::estimator::ProjectionDegree;
use hp_robust::ProblemSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Trace,
    Mesh,
    Indicators,
    Diagnostics,
    Solution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum OscDegree {
    #[value(name = "p")]
    #[serde(rename = "p")]
    Same,
    #[value(name = "2p")]
    #[serde(rename = "2p")]
    Double,
}

impl From<OscDegree> for ProjectionDegree {
    fn from(d: OscDegree) -> Self {
        match d {
            OscDegree::Same => ProjectionDegree::Same,
            OscDegree::Double => ProjectionDegree::Double,
        }
    }
}

/// Flags of `run`. Everything is optional so that a config file can fill the
/// gaps; flags win over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key = value file with the same names as the long flags (dashes or underscores).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// example1, example2 or manufactured-sin.
    #[arg(long)]
    pub problem: Option<String>,
    /// Comma-separated list of diffusion parameters.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub epsilon: Option<Vec<f64>>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Stop once the estimate drops below this value.
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long = "init-elems")]
    pub init_elems: Option<usize>,
    #[arg(long = "init-degree")]
    pub init_degree: Option<usize>,
    /// Degree at which p-refinement turns into bisection; 0 disables the cap.
    #[arg(long = "p-max")]
    pub p_max: Option<usize>,
    /// Weight exponent of the oscillation term in the diagnostics, in (1/2, 1].
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long = "osc-degree", value_enum)]
    pub osc_degree: Option<OscDegree>,
    #[arg(long, env = "HP_ROBUST_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Number of epsilon values solved concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum, value_delimiter = ',', num_args = 1..)]
    pub emit: Option<Vec<Emit>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    problem: Option<String>,
    epsilon: Option<EpsilonList>,
    theta: Option<f64>,
    tau: Option<f64>,
    #[serde(alias = "max-iter")]
    max_iter: Option<usize>,
    target: Option<f64>,
    #[serde(alias = "init-elems")]
    init_elems: Option<usize>,
    #[serde(alias = "init-degree")]
    init_degree: Option<usize>,
    #[serde(alias = "p-max")]
    p_max: Option<usize>,
    beta: Option<f64>,
    #[serde(alias = "osc-degree")]
    osc_degree: Option<OscDegree>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    emit: Option<Vec<Emit>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum EpsilonList {
    One(f64),
    Many(Vec<f64>),
    Text(String),
}

impl EpsilonList {
    fn into_vec(self) -> Result<Vec<f64>, CliError> {
        match self {
            EpsilonList::One(e) => Ok(vec![e]),
            EpsilonList::Many(v) => Ok(v),
            EpsilonList::Text(s) => s
                .split(',')
                .map(|t| f64::from_str(t.trim()).map_err(|e| CliError::Config(format!("epsilon `{t}`: {e}"))))
                .collect(),
        }
    }
}

/// Fully resolved settings of one `run` invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub epsilons: Vec<f64>,
    #[serde(skip)]
    pub adaptive: AdaptiveConfig,
    pub beta: f64,
    pub osc_degree: OscDegree,
    pub out: PathBuf,
    pub jobs: usize,
    pub emit: BTreeSet<Emit>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => FileConfig::default(),
        };
        let defaults = AdaptiveConfig::default();
        let epsilons = match (&args.epsilon, file.epsilon) {
            (Some(v), _) => v.clone(),
            (None, Some(list)) => list.into_vec()?,
            (None, None) => return Err(CliError::Config("no epsilon given".into())),
        };
        let p_max = args.p_max.or(file.p_max).map_or(defaults.p_max, |p| (p > 0).then_some(p));
        let adaptive = AdaptiveConfig {
            theta: args.theta.or(file.theta).unwrap_or(defaults.theta),
            tau: args.tau.or(file.tau).unwrap_or(defaults.tau),
            max_iterations: args.max_iter.or(file.max_iter).unwrap_or(defaults.max_iterations),
            target_estimate: args.target.or(file.target).unwrap_or(defaults.target_estimate),
            initial_elements: args.init_elems.or(file.init_elems).unwrap_or(defaults.initial_elements),
            initial_degree: args.init_degree.or(file.init_degree).unwrap_or(defaults.initial_degree),
            p_max,
            track_true_error: true,
        };
        let config = RunConfig {
            problem: args
                .problem
                .clone()
                .or(file.problem)
                .ok_or_else(|| CliError::Config("no problem given".into()))?,
            epsilons,
            adaptive,
            beta: args.beta.or(file.beta).unwrap_or(1.0),
            osc_degree: args.osc_degree.or(file.osc_degree).unwrap_or(OscDegree::Same),
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("hp-robust-out")),
            jobs: args.jobs.or(file.jobs).unwrap_or(1),
            emit: args
                .emit
                .clone()
                .or(file.emit)
                .unwrap_or_else(|| vec![Emit::Trace])
                .into_iter()
                .collect(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.epsilons.is_empty() {
            return bad("empty epsilon list".into());
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return bad(format!("epsilon must be positive, got {e}"));
        }
        for &e in &self.epsilons {
            let problem = ProblemSpec::by_name(&self.problem, e).map_err(|e| CliError::Config(e.to_string()))?;
            if self.emit.contains(&Emit::Diagnostics) && problem.exact().is_none() {
                return bad(format!("diagnostics need an exact solution, `{}` has none", self.problem));
            }
        }
        self.adaptive.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.beta > 0.5 && self.beta <= 1.0) {
            return bad(format!("beta must lie in (1/2, 1], got {}", self.beta));
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1".into());
        }
        Ok(())
    }
}

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
