//! Empirical emphatic operators evaluated on one restart window.

use nalgebra::DVector;

use super::traces::{followon_step, TraceState};
use crate::error::{invalid, Result};
use crate::features::FeatureMap;
use crate::mdp::Transition;
use crate::scalar::Real;

/// `b + 1` consecutive transitions `(s_t^0, …, s_t^b)` of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow<T> {
    transitions: Vec<Transition<T>>,
}

impl<T: Real> SampleWindow<T> {
    /// Validates that the window chains and has period length `b ≥ 1`.
    pub fn new(transitions: Vec<Transition<T>>) -> Result<Self> {
        if transitions.len() < 2 {
            return Err(invalid(format!(
                "window needs at least 2 transitions (b >= 1), got {}",
                transitions.len()
            )));
        }
        if let Some(i) = transitions.windows(2).position(|w| w[0].s_next != w[1].s) {
            return Err(invalid(format!("window breaks between transitions {i} and {}", i + 1)));
        }
        Ok(Self { transitions })
    }

    /// Period length `b`.
    pub fn b(&self) -> usize {
        self.transitions.len() - 1
    }

    pub fn transitions(&self) -> &[Transition<T>] {
        &self.transitions
    }

    fn last(&self) -> &Transition<T> {
        self.transitions.last().expect("window is non-empty")
    }
}

/// Operator value together with the follow-on trace that produced it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct OperatorSample<T: Real> {
    pub value: DVector<T>,
    pub followon: T,
}

/// `ρ^b e ((φ^b − γφ^{b+1})ᵀθ − r^b)`, shared by both operators so that
/// the `λ = 0` path reproduces the PER-ETD(0) arithmetic exactly.
fn finish<T: Real>(
    e: DVector<T>,
    last: &Transition<T>,
    theta: &DVector<T>,
    gamma: T,
    features: &FeatureMap<T>,
) -> DVector<T> {
    let phi = features.phi();
    let mut pred = T::zero();
    for j in 0..theta.len() {
        pred += (phi[(last.s, j)] - gamma * phi[(last.s_next, j)]) * theta[j];
    }
    e * (last.rho * (pred - last.r))
}

pub(crate) fn operator0_sample<T: Real>(
    window: &SampleWindow<T>,
    theta: &DVector<T>,
    gamma: T,
    features: &FeatureMap<T>,
) -> OperatorSample<T> {
    let b = window.b();
    let f = window.transitions[..b]
        .iter()
        .fold(T::one(), |f, tr| followon_step(f, tr.rho, gamma));
    let last = window.last();
    let e = features.row(last.s) * f;
    OperatorSample {
        value: finish(e, last, theta, gamma, features),
        followon: f,
    }
}

pub(crate) fn operator_lambda_sample<T: Real>(
    window: &SampleWindow<T>,
    theta: &DVector<T>,
    gamma: T,
    lambda: T,
    features: &FeatureMap<T>,
) -> OperatorSample<T> {
    let trs = &window.transitions;
    let mut trace = TraceState::restart(features.row(trs[0].s));
    for tau in 1..trs.len() {
        trace.advance(gamma, lambda, trs[tau - 1].rho, &features.row(trs[tau].s));
    }
    let last = window.last();
    OperatorSample {
        value: finish(trace.e, last, theta, gamma, features),
        followon: trace.f,
    }
}

fn check_dims<T: Real>(theta: &DVector<T>, features: &FeatureMap<T>, window: &SampleWindow<T>) -> Result<()> {
    if theta.len() != features.dim() {
        return Err(invalid("theta dimension does not match the features"));
    }
    let n = features.n_states();
    if window.transitions.iter().any(|t| t.s >= n || t.s_next >= n) {
        return Err(invalid("window visits a state outside the feature map"));
    }
    Ok(())
}

/// PER-ETD(0) operator
/// `F^b ρ^b φ^b (φ^b − γφ^{b+1})ᵀθ − F^b ρ^b φ^b r^b`.
pub fn empirical_operator0<T: Real>(
    window: &SampleWindow<T>,
    theta: &DVector<T>,
    gamma: T,
    features: &FeatureMap<T>,
) -> Result<DVector<T>> {
    check_dims(theta, features, window)?;
    Ok(operator0_sample(window, theta, gamma, features).value)
}

/// PER-ETD(λ) operator `ρ^b e^b (φ^b − γφ^{b+1})ᵀθ − ρ^b r^b e^b`.
pub fn empirical_operator_lambda<T: Real>(
    window: &SampleWindow<T>,
    theta: &DVector<T>,
    gamma: T,
    lambda: T,
    features: &FeatureMap<T>,
) -> Result<DVector<T>> {
    check_dims(theta, features, window)?;
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(invalid(format!("lambda = {lambda} must lie in [0, 1]")));
    }
    Ok(operator_lambda_sample(window, theta, gamma, lambda, features).value)
}
