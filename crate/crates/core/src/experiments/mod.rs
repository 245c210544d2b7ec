//! Seeded multi-trial runner, aggregation, sweeps and operator probes.
//!
//! The harness runs in `f64`. Trial `k` of a configuration uses seed
//! `base_seed + k`, and parallel results are merged by trial index, so
//! every output is reproducible from `(config, base_seed)` regardless of
//! thread count.

mod aggregate;
pub mod csv;
mod probe;
mod problem;
mod sweeps;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::algorithms::{run_training, AlgoConfig, StartState, StepsizeSchedule, TrainingOptions, TrainingSetup};
use crate::error::{invalid, Error, Result};
use crate::features::ProjectionBall;

pub use aggregate::{aggregate_trials, bias_variance, AggregatePoint, BiasVarianceSummary};
pub use probe::{operator_probe, ProbeResult};
pub use problem::Problem;
pub use sweeps::{bias_variance_by_b, sweep_lambda, sweep_rho, LambdaRow, RhoCurve, Vary};

/// Error measure between the iterate and the reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// `‖Φθ − V_ref‖₂` over states.
    #[default]
    ValueL2,
    /// `‖Φθ − V_ref‖₂ / √|S|`.
    ValueRms,
    /// `‖θ − θ_ref‖₂`; needs a parameter-space reference.
    ParamL2,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ValueL2 => "value-l2",
            Self::ValueRms => "value-rms",
            Self::ParamL2 => "param-l2",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::ValueL2, Self::ValueRms, Self::ParamL2]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown metric `{s}` (expected value-l2, value-rms or param-l2)"
                ))
            })
    }
}

/// What the error is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reference {
    /// Ground-truth `V_π`.
    #[default]
    ValuePi,
    /// ETD(0) fixed point `θ*`.
    Etd0,
    /// ETD(λ) fixed point `θ*_λ` at the configured λ.
    EtdLambda,
    /// Finite-period fixed point at the configured `b` and λ.
    FiniteB,
}

impl Reference {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ValuePi => "v-pi",
            Self::Etd0 => "theta-star",
            Self::EtdLambda => "theta-star-lambda",
            Self::FiniteB => "finite-b",
        }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Reference {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Self::ValuePi, Self::Etd0, Self::EtdLambda, Self::FiniteB]
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| {
                invalid(format!(
                    "unknown reference `{s}` (expected v-pi, theta-star, theta-star-lambda or finite-b)"
                ))
            })
    }
}

/// Run length, either in outer iterations or as a transition budget that
/// is divided by the per-iteration sample cost (`b + 1` for PER variants).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Iterations(u64),
    Transitions(u64),
}

/// Snapshot spacing, in outer iterations or in transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stride {
    Iterations(u64),
    Transitions(u64),
}

/// Where each trial's trajectory starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Start {
    /// Drawn from the behavior stationary distribution.
    #[default]
    Stationary,
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub algo: AlgoConfig<f64>,
    pub schedule: StepsizeSchedule<f64>,
    pub ball: ProjectionBall<f64>,
    pub horizon: Horizon,
    pub stride: Stride,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub metric: Metric,
    pub reference: Reference,
    pub start: Start,
    /// Cap on concurrently running trials; `None` uses every core.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults: η = 2⁻⁹, no projection, 20 seeds, value-l2 against `V_π`.
    pub fn new(problem: Problem, algo: AlgoConfig<f64>, horizon: Horizon) -> Self {
        Self {
            problem,
            algo,
            schedule: StepsizeSchedule::Constant(2f64.powi(-9)),
            ball: ProjectionBall::Disabled,
            horizon,
            stride: Stride::Iterations(1),
            n_seeds: 20,
            base_seed: 0,
            metric: Metric::default(),
            reference: Reference::default(),
            start: Start::default(),
            jobs: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.algo.validate()?;
        if self.n_seeds == 0 {
            return Err(invalid("n_seeds must be at least 1"));
        }
        if matches!(self.stride, Stride::Iterations(0) | Stride::Transitions(0)) {
            return Err(invalid("stride must be positive"));
        }
        if self.jobs == Some(0) {
            return Err(invalid("jobs must be at least 1"));
        }
        if let Start::Fixed(s) = self.start {
            if s >= self.problem.mdp.n_states() {
                return Err(invalid(format!("start state {s} out of range")));
            }
        }
        if self.metric == Metric::ParamL2 && self.reference == Reference::ValuePi {
            return Err(invalid("metric param-l2 needs a parameter-space reference, not v-pi"));
        }
        Ok(())
    }

    /// Outer iterations `T` after converting a transition budget.
    pub fn iterations(&self) -> u64 {
        let per = self.algo.kind.transitions_per_iter(self.algo.b);
        match self.horizon {
            Horizon::Iterations(t) => t,
            Horizon::Transitions(n) => n / per,
        }
    }

    pub fn stride_iterations(&self) -> u64 {
        let per = self.algo.kind.transitions_per_iter(self.algo.b);
        match self.stride {
            Stride::Iterations(k) => k,
            Stride::Transitions(n) => (n / per).max(1),
        }
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }
}

/// Resolved reference in value space and, where defined, parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePoint {
    pub value: DVector<f64>,
    pub theta: Option<DVector<f64>>,
}

pub fn resolve_reference(cfg: &ExperimentConfig) -> Result<ReferencePoint> {
    let p = &cfg.problem;
    let theta = match cfg.reference {
        Reference::ValuePi => {
            return Ok(ReferencePoint {
                value: p.v_pi.clone(),
                theta: None,
            })
        }
        Reference::Etd0 => p.etd0_fixed_point()?.1,
        Reference::EtdLambda => p.etd_lambda_fixed_point(cfg.algo.lambda)?.1,
        Reference::FiniteB => p.finite_b_fixed_point(cfg.algo.lambda, cfg.algo.b)?,
    };
    Ok(ReferencePoint {
        value: p.features.phi() * &theta,
        theta: Some(theta),
    })
}

fn error_of(cfg: &ExperimentConfig, reference: &ReferencePoint, theta: &DVector<f64>) -> f64 {
    match cfg.metric {
        Metric::ValueL2 => (cfg.problem.features.phi() * theta - &reference.value).norm(),
        Metric::ValueRms => {
            let n = reference.value.len() as f64;
            (cfg.problem.features.phi() * theta - &reference.value).norm() / n.sqrt()
        }
        Metric::ParamL2 => match &reference.theta {
            Some(t) => (theta - t).norm(),
            None => f64::NAN,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordPoint {
    pub iter: u64,
    pub transitions: u64,
    pub error: f64,
}

/// Error curve of one seeded trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub points: Vec<RecordPoint>,
    /// Set when the run was truncated at the divergence threshold; the last
    /// point is the iterate that tripped it.
    pub diverged: bool,
    pub final_theta: DVector<f64>,
}

impl RunRecord {
    pub fn initial_error(&self) -> f64 {
        self.points[0].error
    }

    pub fn final_error(&self) -> f64 {
        self.points.last().expect("records hold at least θ₀").error
    }
}

fn run_trial_with(cfg: &ExperimentConfig, reference: &ReferencePoint, seed: u64) -> Result<RunRecord> {
    let p = &cfg.problem;
    let start = match cfg.start {
        Start::Stationary => StartState::Distribution(p.d_mu.clone()),
        Start::Fixed(s) => StartState::Fixed(s),
    };
    let setup = TrainingSetup {
        mdp: &p.mdp,
        target: &p.target,
        behavior: &p.behavior,
        features: &p.features,
        start: &start,
    };
    let opts = TrainingOptions {
        stride: cfg.stride_iterations(),
        theta0: None,
    };
    let run = run_training(
        &cfg.algo,
        &setup,
        &cfg.schedule,
        &cfg.ball,
        cfg.iterations(),
        seed,
        &opts,
    )?;
    let points = run
        .snapshots
        .iter()
        .map(|s| RecordPoint {
            iter: s.iter,
            transitions: s.transitions,
            error: error_of(cfg, reference, &s.theta),
        })
        .collect();
    let final_theta = run.snapshots.last().expect("θ₀ is always recorded").theta.clone();
    Ok(RunRecord {
        seed,
        points,
        diverged: run.diverged,
        final_theta,
    })
}

/// One seeded trial of `cfg`.
pub fn run_trial(cfg: &ExperimentConfig, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let reference = resolve_reference(cfg)?;
    run_trial_with(cfg, &reference, seed)
}

/// Runs `f(0..n)` in parallel under the configured job cap, in index order.
pub(crate) fn par_map<R, F>(jobs: Option<usize>, n: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    let go = || (0..n).into_par_iter().map(&f).collect::<Result<Vec<R>>>();
    match jobs {
        None => go(),
        Some(1) => (0..n).map(&f).collect(),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| invalid(format!("cannot start {j} worker threads: {e}")))?
            .install(go),
    }
}

/// All `n_seeds` trials, ordered by trial index.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let reference = resolve_reference(cfg)?;
    par_map(cfg.jobs, cfg.n_seeds, |k| run_trial_with(cfg, &reference, cfg.seed(k)))
}
