use nalgebra::DVector;

use super::Problem;
use crate::algorithms::{operator0_sample, operator_lambda_sample, SampleWindow};
use crate::error::{invalid, Result};
use crate::mdp::TrajectorySampler;

/// Monte-Carlo statistics of the empirical operator at a fixed `θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub b: usize,
    pub lambda: Option<f64>,
    pub n_samples: usize,
    pub mean: DVector<f64>,
    /// Standard error of `mean` in ℓ2 norm, `√(tr Σ / N)`.
    pub mean_se: f64,
    /// Trace of the sample covariance `Σ`.
    pub cov_trace: f64,
    /// `E‖T̂‖²`.
    pub second_moment: f64,
    pub second_moment_se: f64,
}

/// Draws `n_samples` back-to-back windows of `b + 1` transitions from one
/// trajectory started at `d_μ`, restarting the traces in each, and
/// summarizes the operator values. `lambda = None` uses the PER-ETD(0)
/// operator.
pub fn operator_probe(
    problem: &Problem,
    theta: &DVector<f64>,
    b: usize,
    lambda: Option<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<ProbeResult> {
    if n_samples < 2 {
        return Err(invalid("operator_probe needs n_samples >= 2"));
    }
    if b < 1 {
        return Err(invalid("operator_probe needs b >= 1"));
    }
    if theta.len() != problem.features.dim() {
        return Err(invalid("theta dimension does not match the features"));
    }
    if let Some(l) = lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(invalid(format!("lambda = {l} must lie in [0, 1]")));
        }
    }
    let gamma = problem.gamma();
    let features = &problem.features;
    let mut sampler =
        TrajectorySampler::from_distribution(&problem.mdp, &problem.target, &problem.behavior, &problem.d_mu, seed)?;
    let d = theta.len();
    // Welford accumulators for the vector mean and the squared norm.
    let mut mean = DVector::zeros(d);
    let mut m2 = 0.0;
    let mut sq_mean = 0.0;
    let mut sq_m2 = 0.0;
    for k in 1..=n_samples {
        let trs = (0..=b)
            .map(|_| sampler.sample_transition())
            .collect::<Result<Vec<_>>>()?;
        let window = SampleWindow::new(trs)?;
        let x = match lambda {
            None => operator0_sample(&window, theta, gamma, features).value,
            Some(l) => operator_lambda_sample(&window, theta, gamma, l, features).value,
        };
        let kf = k as f64;
        let delta = &x - &mean;
        mean += &delta / kf;
        m2 += delta.dot(&(&x - &mean));
        let sq = x.norm_squared();
        let dsq = sq - sq_mean;
        sq_mean += dsq / kf;
        sq_m2 += dsq * (sq - sq_mean);
    }
    let n = n_samples as f64;
    let cov_trace = m2 / (n - 1.0);
    Ok(ProbeResult {
        b,
        lambda,
        n_samples,
        mean,
        mean_se: (cov_trace / n).sqrt(),
        cov_trace,
        second_moment: sq_mean,
        second_moment_se: (sq_m2 / (n - 1.0) / n).sqrt(),
    })
}
