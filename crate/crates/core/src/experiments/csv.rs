//! CSV emission with fixed headers. Floats use Rust's shortest round-trip
//! formatting, missing values are empty fields.

use std::io::{self, Write};

use super::{BiasVarianceSummary, LambdaRow, RhoCurve, RunRecord};
use crate::algorithms::AlgoConfig;

pub const CURVES_HEADER: &str = "algo,b,lambda,seed,iter,transitions,error,diverged";
pub const BIAS_VARIANCE_HEADER: &str = "b,bias,variance,n_seeds,n_diverged";
pub const LAMBDA_SWEEP_HEADER: &str = "lambda,final_error_mean,final_error_std,fixedpoint_dist_to_projection";
pub const RHO_SWEEP_HEADER: &str = "rho_max,iter,error_mean,error_std";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn finite(x: f64) -> Option<f64> {
    (!x.is_nan()).then_some(x)
}

/// One row per snapshot per trial; `diverged` is the trial's flag (0/1).
pub fn write_curves<W: Write>(mut w: W, runs: &[(AlgoConfig<f64>, Vec<RunRecord>)]) -> io::Result<()> {
    writeln!(w, "{CURVES_HEADER}")?;
    for (algo, records) in runs {
        for r in records {
            for p in &r.points {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    algo.kind,
                    algo.reported_b(),
                    algo.reported_lambda(),
                    r.seed,
                    p.iter,
                    p.transitions,
                    p.error,
                    u8::from(r.diverged)
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_bias_variance<W: Write>(mut w: W, rows: &[BiasVarianceSummary]) -> io::Result<()> {
    writeln!(w, "{BIAS_VARIANCE_HEADER}")?;
    for s in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.b,
            opt(finite(s.bias)),
            opt(finite(s.variance)),
            s.n_seeds,
            s.n_diverged
        )?;
    }
    Ok(())
}

pub fn write_lambda_sweep<W: Write>(mut w: W, rows: &[LambdaRow]) -> io::Result<()> {
    writeln!(w, "{LAMBDA_SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.lambda,
            opt(r.final_error_mean),
            opt(r.final_error_std),
            r.fixedpoint_dist_to_projection
        )?;
    }
    Ok(())
}

pub fn write_rho_sweep<W: Write>(mut w: W, curves: &[RhoCurve]) -> io::Result<()> {
    writeln!(w, "{RHO_SWEEP_HEADER}")?;
    for c in curves {
        for p in &c.curve {
            writeln!(w, "{},{},{},{}", c.rho_max, p.iter, opt(p.mean), opt(p.std))?;
        }
    }
    Ok(())
}
