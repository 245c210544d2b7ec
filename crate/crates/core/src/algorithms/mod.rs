//! Online evaluators and their building blocks.

mod learner;
mod operators;
mod stepsize;
mod traces;

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub use learner::{
    etd0_step, etd_lambda_step, per_etd0_iterate, per_etd_lambda_iterate, run_training, td0_step, LearnerState,
    Snapshot, StartState, TrainingOptions, TrainingRun, TrainingSetup, DIVERGENCE_THRESHOLD,
};
pub use operators::{empirical_operator0, empirical_operator_lambda, SampleWindow};
pub(crate) use operators::{operator0_sample, operator_lambda_sample};
pub use stepsize::StepsizeSchedule;
pub use traces::{followon_step, TraceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgoKind {
    Td0,
    Etd0,
    EtdLambda,
    PerEtd0,
    PerEtdLambda,
}

impl AlgoKind {
    pub const ALL: [AlgoKind; 5] = [
        Self::Td0,
        Self::Etd0,
        Self::EtdLambda,
        Self::PerEtd0,
        Self::PerEtdLambda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Td0 => "td0",
            Self::Etd0 => "etd0",
            Self::EtdLambda => "etd-lambda",
            Self::PerEtd0 => "per-etd0",
            Self::PerEtdLambda => "per-etd-lambda",
        }
    }

    /// Restarting variants that consume `b + 1` transitions per iteration.
    pub fn is_periodic(self) -> bool {
        matches!(self, Self::PerEtd0 | Self::PerEtdLambda)
    }

    pub fn uses_lambda(self) -> bool {
        matches!(self, Self::EtdLambda | Self::PerEtdLambda)
    }

    /// Transitions drawn by one outer iteration with period `b`.
    pub fn transitions_per_iter(self, b: usize) -> u64 {
        if self.is_periodic() {
            b as u64 + 1
        } else {
            1
        }
    }
}

impl fmt::Display for AlgoKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgoKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            invalid(format!(
                "unknown algorithm `{s}` (expected td0, etd0, etd-lambda, per-etd0 or per-etd-lambda)"
            ))
        })
    }
}

/// Algorithm tag with its period length and trace-decay parameter.
///
/// `b` is ignored by the non-periodic algorithms and `lambda` by those
/// without an eligibility trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoConfig<T> {
    pub kind: AlgoKind,
    pub b: usize,
    pub lambda: T,
}

impl<T: Real> AlgoConfig<T> {
    pub fn new(kind: AlgoKind) -> Self {
        Self {
            kind,
            b: 1,
            lambda: T::zero(),
        }
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = b;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_periodic() && self.b < 1 {
            return Err(invalid(format!("{}: period length b must be >= 1", self.kind)));
        }
        if !(self.lambda >= T::zero() && self.lambda <= T::one()) {
            return Err(invalid(format!("lambda = {} must lie in [0, 1]", self.lambda)));
        }
        Ok(())
    }

    /// Period length as reported in output, `0` for non-periodic algorithms.
    pub fn reported_b(&self) -> usize {
        if self.kind.is_periodic() {
            self.b
        } else {
            0
        }
    }

    /// Trace decay as reported in output, `0` where it does not apply.
    pub fn reported_lambda(&self) -> T {
        if self.kind.uses_lambda() {
            self.lambda
        } else {
            T::zero()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algorithm_names_round_trip() {
        for k in AlgoKind::ALL {
            assert_eq!(k.as_str().parse::<AlgoKind>().unwrap(), k);
        }
        assert!("etd".parse::<AlgoKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AlgoConfig::<f64>::new(AlgoKind::PerEtd0).with_b(0).validate().is_err());
        assert!(AlgoConfig::<f64>::new(AlgoKind::Td0).with_b(0).validate().is_ok());
        assert!(AlgoConfig::new(AlgoKind::EtdLambda)
            .with_lambda(1.5)
            .validate()
            .is_err());
        assert_eq!(AlgoKind::PerEtdLambda.transitions_per_iter(4), 5);
    }
}
