use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use super::aggregate::{bias_variance, mean_std};
use super::{aggregate_trials, run_trials, AggregatePoint, BiasVarianceSummary, ExperimentConfig, Problem, Stride};
use crate::algorithms::AlgoKind;
use crate::error::{invalid, Error, Result};

/// Final value estimates of every trial, split into survivors and a diverged count.
fn final_values(cfg: &ExperimentConfig) -> Result<(Vec<DVector<f64>>, usize)> {
    let records = run_trials(cfg)?;
    let phi = cfg.problem.features.phi();
    let alive: Vec<_> = records
        .iter()
        .filter(|r| !r.diverged)
        .map(|r| phi * &r.final_theta)
        .collect();
    let n_div = records.len() - alive.len();
    Ok((alive, n_div))
}

/// Bias and variance of the final iterate `Φθ_T` across seeds for each period length.
pub fn bias_variance_by_b(
    cfg: &ExperimentConfig,
    b_values: &[usize],
    v_ref: &DVector<f64>,
) -> Result<Vec<BiasVarianceSummary>> {
    if v_ref.len() != cfg.problem.mdp.n_states() {
        return Err(invalid("reference value vector has the wrong length"));
    }
    b_values
        .iter()
        .map(|&b| {
            if b < 1 {
                return Err(invalid("every b in the sweep must be >= 1"));
            }
            let mut c = cfg.clone();
            c.algo = c.algo.with_b(b);
            // Only θ_T is needed.
            c.stride = Stride::Iterations(c.iterations().max(1));
            let (values, n_div) = final_values(&c)?;
            Ok(bias_variance(b, &values, n_div, v_ref))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub final_error_mean: Option<f64>,
    pub final_error_std: Option<f64>,
    pub n_diverged: usize,
    /// Finite-period fixed point at this λ and the configured `b`.
    pub fixed_point: DVector<f64>,
    /// `‖θ_{b,λ} − Π V_π‖₂` in parameter space.
    pub fixedpoint_dist_to_projection: f64,
}

/// PER-ETD(λ) final errors and finite-period fixed-point loci over a λ grid.
pub fn sweep_lambda(cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    let projection = cfg.problem.value_projection()?;
    lambdas
        .iter()
        .map(|&lambda| {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(invalid(format!("lambda = {lambda} in the sweep must lie in [0, 1]")));
            }
            let mut c = cfg.clone();
            c.algo.kind = AlgoKind::PerEtdLambda;
            c.algo.lambda = lambda;
            c.stride = Stride::Iterations(c.iterations().max(1));
            let records = run_trials(&c)?;
            let finals: Vec<f64> = records
                .iter()
                .filter(|r| !r.diverged)
                .map(|r| r.final_error())
                .collect();
            let (mean, std) = mean_std(&finals);
            let fixed_point = c.problem.finite_b_fixed_point(lambda, c.algo.b)?;
            Ok(LambdaRow {
                lambda,
                final_error_mean: mean,
                final_error_std: std,
                n_diverged: records.len() - finals.len(),
                fixedpoint_dist_to_projection: (&fixed_point - &projection).norm(),
                fixed_point,
            })
        })
        .collect()
}

/// Which Baird policy a ρ_max sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    Target,
    Behavior,
}

impl fmt::Display for Vary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Target => "target",
            Self::Behavior => "behavior",
        })
    }
}

impl FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target" => Ok(Self::Target),
            "behavior" => Ok(Self::Behavior),
            _ => Err(invalid(format!(
                "unknown sweep side `{s}` (expected target or behavior)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoCurve {
    /// Solid-action probability of the varied policy.
    pub param: f64,
    pub rho_max: f64,
    pub curve: Vec<AggregatePoint>,
}

/// Rebuilds the Baird policies for each solid-action probability and
/// aggregates the resulting error curves.
pub fn sweep_rho(cfg: &ExperimentConfig, values: &[f64], vary: Vary) -> Result<Vec<RhoCurve>> {
    let (target, behavior) = cfg
        .problem
        .baird
        .ok_or_else(|| invalid("sweep_rho needs a Baird problem"))?;
    values
        .iter()
        .map(|&v| {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("policy parameter {v} must lie in (0, 1)")));
            }
            let (t, b) = match vary {
                Vary::Target => (v, behavior),
                Vary::Behavior => (target, v),
            };
            let mut c = cfg.clone();
            c.problem = Problem::baird(t, b, cfg.problem.features.clone())?;
            let curve = aggregate_trials(&run_trials(&c)?)?;
            Ok(RhoCurve {
                param: v,
                rho_max: c.problem.rho_max,
                curve,
            })
        })
        .collect()
}
