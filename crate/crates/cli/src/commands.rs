use std::io::Write;

use nalgebra::DVector;
use per_etd::algorithms::AlgoKind;
use per_etd::experiments::{
    bias_variance_by_b, csv, operator_probe, resolve_reference, run_trials, sweep_lambda, sweep_rho,
};
use per_etd::fixed_points::theory_constants;

use crate::error::CliError;
use crate::setup::Setup;

fn fmt_vec(v: &DVector<f64>) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Closed-form fixed point and theory constants, or the finite-period
/// fixed-point loci over a λ grid when one is configured.
pub fn fixed_point(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let p = &setup.problem;
    if setup.settings.raw("experiment.lambda_values").is_some() {
        let projection = p.value_projection()?;
        writeln!(out, "lambda,b,theta,dist_to_projection")?;
        for b in &setup.bs {
            for lambda in setup.lambda_values()? {
                let th = p.finite_b_fixed_point(lambda, *b)?;
                writeln!(out, "{lambda},{b},{},{}", fmt_vec(&th), (&th - &projection).norm())?;
            }
        }
        writeln!(out, "projection,,{},0", fmt_vec(&projection))?;
        return Ok(());
    }
    let lambda = setup.lambda;
    let (model, theta) = p.etd_lambda_fixed_point(lambda)?;
    let c = theory_constants(&model, &p.features, &theta, &p.v_pi)?;
    writeln!(out, "lambda = {lambda}")?;
    writeln!(out, "theta_star = {}", fmt_vec(&theta))?;
    writeln!(out, "mu = {}", c.mu)?;
    writeln!(out, "lipschitz = {}", c.lip)?;
    writeln!(out, "t0 = {}", c.t0)?;
    writeln!(out, "eps_approx = {}", c.eps_approx)?;
    writeln!(out, "condition = {}", model.condition_number())?;
    writeln!(out, "rho_max = {}", p.rho_max)?;
    if setup.settings.raw("algo.b").is_some() {
        for &b in &setup.bs {
            writeln!(out, "theta_b{b} = {}", fmt_vec(&p.finite_b_fixed_point(lambda, b)?))?;
        }
    }
    Ok(())
}

fn check_divergence(total: usize, diverged: usize, what: &str) -> Result<(), CliError> {
    if total > 0 && diverged == total {
        return Err(CliError::Diverged(format!("{diverged} of {total} {what}")));
    }
    Ok(())
}

pub fn run(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let mut runs = Vec::new();
    for algo in setup.algo_configs() {
        let cfg = setup.experiment(algo)?;
        runs.push((algo, run_trials(&cfg)?));
    }
    csv::write_curves(&mut *out, &runs)?;
    let total = runs.iter().map(|(_, r)| r.len()).sum();
    let diverged = runs.iter().flat_map(|(_, r)| r).filter(|r| r.diverged).count();
    check_divergence(total, diverged, "trials")
}

pub fn sweep_b(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let kind = setup.single_algo()?;
    if !kind.is_periodic() {
        return Err(CliError::Invalid(format!(
            "`algo.algo`: sweep-b needs a periodic algorithm, got {kind}"
        )));
    }
    let algo = per_etd::Algo::new(kind).with_lambda(setup.lambda).with_b(setup.bs[0]);
    let cfg = setup.experiment(algo)?;
    let v_ref = resolve_reference(&cfg)?.value;
    let rows = bias_variance_by_b(&cfg, &setup.bs, &v_ref)?;
    csv::write_bias_variance(&mut *out, &rows)?;
    let (n, d) = rows.iter().fold((0, 0), |(n, d), r| (n + r.n_seeds, d + r.n_diverged));
    check_divergence(n, d, "trials")
}

pub fn sweep_lambda_cmd(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let algo = per_etd::Algo::new(AlgoKind::PerEtdLambda).with_b(setup.single_b()?);
    let cfg = setup.experiment(algo)?;
    let rows = sweep_lambda(&cfg, &setup.lambda_values()?)?;
    csv::write_lambda_sweep(&mut *out, &rows)?;
    let d = rows.iter().map(|r| r.n_diverged).sum();
    check_divergence(rows.len() * cfg.n_seeds, d, "trials")
}

pub fn sweep_rho_cmd(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let kind = setup.single_algo()?;
    let algo = per_etd::Algo::new(kind)
        .with_lambda(setup.lambda)
        .with_b(setup.single_b()?);
    let cfg = setup.experiment(algo)?;
    let curves = sweep_rho(&cfg, &setup.rho_values()?, setup.vary()?)?;
    csv::write_rho_sweep(&mut *out, &curves)?;
    let all_gone = curves.iter().all(|c| c.curve.last().is_some_and(|p| p.mean.is_none()));
    if all_gone {
        return Err(CliError::Diverged("every policy setting".into()));
    }
    Ok(())
}

pub fn probe(setup: &Setup, out: &mut impl Write) -> Result<(), CliError> {
    let lambda = match setup.single_algo()? {
        AlgoKind::PerEtd0 => None,
        AlgoKind::PerEtdLambda => Some(setup.lambda),
        other => {
            return Err(CliError::Invalid(format!(
                "`algo.algo`: probe needs per-etd0 or per-etd-lambda, got {other}"
            )))
        }
    };
    let p = &setup.problem;
    let theta = setup.theta()?;
    let n = setup.samples()?;
    let base_seed: u64 = setup.settings.get_or("experiment.base_seed", 0)?;
    writeln!(
        out,
        "b,lambda,n_samples,mean_norm,mean_se,cov_trace,second_moment,second_moment_se,dist_to_expected"
    )?;
    for (k, &b) in setup.bs.iter().enumerate() {
        let r = operator_probe(p, &theta, b, lambda, n, base_seed.wrapping_add(k as u64))?;
        let expected = p.finite_b_operator(lambda.unwrap_or(0.0), b)?.apply(&theta);
        writeln!(
            out,
            "{b},{},{n},{},{},{},{},{},{}",
            lambda.map(|l| l.to_string()).unwrap_or_default(),
            r.mean.norm(),
            r.mean_se,
            r.cov_trace,
            r.second_moment,
            r.second_moment_se,
            (&r.mean - &expected).norm()
        )?;
    }
    Ok(())
}
