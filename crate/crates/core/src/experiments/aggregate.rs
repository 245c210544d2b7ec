use nalgebra::DVector;

use super::RunRecord;
use crate::error::{invalid, Result};

/// Pointwise summary of a set of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub iter: u64,
    pub transitions: u64,
    /// `None` when every trial has diverged by this point.
    pub mean: Option<f64>,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single trial.
    pub std: Option<f64>,
    pub n_ok: usize,
    pub n_diverged: usize,
}

/// Mean and sample standard deviation over the trials still alive at each
/// snapshot.
///
/// A diverged record counts as diverged from its truncation point onward;
/// before that its errors enter the statistics like any other trial.
pub fn aggregate_trials(records: &[RunRecord]) -> Result<Vec<AggregatePoint>> {
    let longest = records
        .iter()
        .max_by_key(|r| r.points.len())
        .ok_or_else(|| invalid("aggregate_trials needs at least one record"))?;
    for r in records {
        let prefix = r.points.iter().zip(&longest.points).all(|(a, b)| a.iter == b.iter);
        if !prefix || (!r.diverged && r.points.len() != longest.points.len()) {
            return Err(invalid(format!(
                "record for seed {} is not on the shared snapshot grid",
                r.seed
            )));
        }
    }
    let out = longest
        .points
        .iter()
        .enumerate()
        .map(|(i, grid)| {
            let alive: Vec<f64> = records
                .iter()
                .filter(|r| i < r.points.len() && !(r.diverged && i + 1 >= r.points.len()))
                .map(|r| r.points[i].error)
                .collect();
            let n_diverged = records.len() - alive.len();
            let (mean, std) = mean_std(&alive);
            AggregatePoint {
                iter: grid.iter,
                transitions: grid.transitions,
                mean,
                std,
                n_ok: alive.len(),
                n_diverged,
            }
        })
        .collect();
    Ok(out)
}

pub(crate) fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (Some(mean), Some((ss / (n - 1.0)).sqrt()))
}

/// Bias and variance of a set of final value estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasVarianceSummary {
    pub b: usize,
    /// `‖mean_k v_k − V_ref‖₂`.
    pub bias: f64,
    /// `mean_k ‖v_k − mean_j v_j‖₂²`.
    pub variance: f64,
    /// `mean_k ‖v_k − V_ref‖₂²`, equal to `bias² + variance`.
    pub mse: f64,
    pub n_seeds: usize,
    pub n_diverged: usize,
}

impl BiasVarianceSummary {
    /// True when no trial survived; bias, variance and mse are then NaN.
    pub fn all_diverged(&self) -> bool {
        self.n_diverged == self.n_seeds
    }
}

/// Bias/variance decomposition of the value estimates `values` around `v_ref`.
pub fn bias_variance(
    b: usize,
    values: &[DVector<f64>],
    n_diverged: usize,
    v_ref: &DVector<f64>,
) -> BiasVarianceSummary {
    let n_seeds = values.len() + n_diverged;
    if values.is_empty() {
        return BiasVarianceSummary {
            b,
            bias: f64::NAN,
            variance: f64::NAN,
            mse: f64::NAN,
            n_seeds,
            n_diverged,
        };
    }
    let k = values.len() as f64;
    let mean = values.iter().fold(DVector::zeros(v_ref.len()), |acc, v| acc + v) / k;
    let bias = (&mean - v_ref).norm();
    let variance = values.iter().map(|v| (v - &mean).norm_squared()).sum::<f64>() / k;
    let mse = values.iter().map(|v| (v - v_ref).norm_squared()).sum::<f64>() / k;
    BiasVarianceSummary {
        b,
        bias,
        variance,
        mse,
        n_seeds,
        n_diverged,
    }
}
