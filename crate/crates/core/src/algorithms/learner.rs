use nalgebra::DVector;

use super::operators::{operator0_sample, operator_lambda_sample, SampleWindow};
use super::stepsize::StepsizeSchedule;
use super::traces::TraceState;
use super::{AlgoConfig, AlgoKind};
use crate::error::{invalid, Result};
use crate::features::{project_ball, FeatureMap, ProjectionBall};
use crate::mdp::{FiniteMdp, Policy, TrajectorySampler, Transition};
use crate::scalar::Real;

/// `‖θ‖` or `|F|` above this flags a trial as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Parameter iterate plus the persistent traces of the vanilla learners.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState<T: Real> {
    pub theta: DVector<T>,
    /// Outer iterations completed.
    pub t: u64,
    pub algo: AlgoConfig<T>,
    /// Persistent traces (ETD(0)/ETD(λ)); started lazily from the first state.
    pub trace: Option<TraceState<T>>,
    /// Transitions drawn so far.
    pub transitions: u64,
    /// Largest `|F|` seen in the most recent update.
    pub last_followon: T,
}

impl<T: Real> LearnerState<T> {
    /// `θ₀ = 0`.
    pub fn new(algo: AlgoConfig<T>, dim: usize) -> Self {
        Self::with_theta(algo, DVector::zeros(dim))
    }

    pub fn with_theta(algo: AlgoConfig<T>, theta: DVector<T>) -> Self {
        Self {
            theta,
            t: 0,
            algo,
            trace: None,
            transitions: 0,
            last_followon: T::one(),
        }
    }

    /// True once `‖θ‖` or `|F|` exceeds [`DIVERGENCE_THRESHOLD`] or turns non-finite.
    pub fn diverged(&self) -> bool {
        let limit = T::lit(DIVERGENCE_THRESHOLD);
        let norm = self.theta.norm();
        !(norm <= limit) || !(self.last_followon.abs() <= limit)
    }
}

#[inline]
fn td_error<T: Real>(theta: &DVector<T>, tr: &Transition<T>, gamma: T, features: &FeatureMap<T>) -> T {
    let phi = features.phi();
    let mut v = T::zero();
    let mut v_next = T::zero();
    for j in 0..theta.len() {
        v += phi[(tr.s, j)] * theta[j];
        v_next += phi[(tr.s_next, j)] * theta[j];
    }
    tr.r + gamma * v_next - v
}

/// Plain TD(0): `θ + η (r + γθᵀφ(s') − θᵀφ(s)) φ(s)`, no importance ratio.
pub fn td0_step<T: Real>(
    theta: &DVector<T>,
    tr: &Transition<T>,
    eta: T,
    gamma: T,
    features: &FeatureMap<T>,
) -> DVector<T> {
    let delta = td_error(theta, tr, gamma, features);
    let mut out = theta.clone();
    out.axpy(eta * delta, &features.row(tr.s), T::one());
    out
}

fn primed_trace<'s, T: Real>(
    state: &'s mut LearnerState<T>,
    tr: &Transition<T>,
    features: &FeatureMap<T>,
) -> &'s mut TraceState<T> {
    state
        .trace
        .get_or_insert_with(|| TraceState::restart(features.row(tr.s)))
}

/// Vanilla ETD(0): `θ ← Π(θ + η ρ_t F_t δ_t φ(s_t))`, then `F ← γρ_t F + 1`.
pub fn etd0_step<T: Real>(
    state: &mut LearnerState<T>,
    tr: &Transition<T>,
    eta: T,
    gamma: T,
    features: &FeatureMap<T>,
    ball: &ProjectionBall<T>,
) {
    let delta = td_error(&state.theta, tr, gamma, features);
    let trace = primed_trace(state, tr, features);
    let f = trace.f;
    trace.f = super::traces::followon_step(f, tr.rho, gamma);
    trace.m = trace.f;
    let next_f = trace.f;
    let mut theta = std::mem::replace(&mut state.theta, DVector::zeros(0));
    theta.axpy(eta * tr.rho * f * delta, &features.row(tr.s), T::one());
    state.theta = project_ball(theta, ball);
    state.last_followon = next_f;
    state.t += 1;
    state.transitions += 1;
}

/// Vanilla ETD(λ): `θ ← Π(θ + η ρ_t δ_t e_t)`, then the traces advance
/// to the next state (`F`, then `M = λ + (1 − λ)F`, then
/// `e = γλρ_t e + M φ(s_{t+1})`).
pub fn etd_lambda_step<T: Real>(
    state: &mut LearnerState<T>,
    tr: &Transition<T>,
    eta: T,
    gamma: T,
    features: &FeatureMap<T>,
    ball: &ProjectionBall<T>,
) {
    let lambda = state.algo.lambda;
    let delta = td_error(&state.theta, tr, gamma, features);
    let mut theta = std::mem::replace(&mut state.theta, DVector::zeros(0));
    let trace = primed_trace(state, tr, features);
    theta.axpy(eta * tr.rho * delta, &trace.e, T::one());
    trace.advance(gamma, lambda, tr.rho, &features.row(tr.s_next));
    state.last_followon = trace.f;
    state.theta = project_ball(theta, ball);
    state.t += 1;
    state.transitions += 1;
}

fn draw_window<T: Real>(sampler: &mut TrajectorySampler<'_, T>, b: usize) -> Result<SampleWindow<T>> {
    let trs = (0..=b)
        .map(|_| sampler.sample_transition())
        .collect::<Result<Vec<_>>>()?;
    SampleWindow::new(trs)
}

fn per_update<T: Real>(
    state: &mut LearnerState<T>,
    sampler: &mut TrajectorySampler<'_, T>,
    schedule: &StepsizeSchedule<T>,
    ball: &ProjectionBall<T>,
    gamma: T,
    features: &FeatureMap<T>,
    lambda: Option<T>,
) -> Result<()> {
    let b = state.algo.b;
    if b < 1 {
        return Err(invalid("periodic restart needs b >= 1"));
    }
    let window = draw_window(sampler, b)?;
    let sample = match lambda {
        None => operator0_sample(&window, &state.theta, gamma, features),
        Some(l) => operator_lambda_sample(&window, &state.theta, gamma, l, features),
    };
    let eta = schedule.stepsize_at(state.t);
    let mut theta = std::mem::replace(&mut state.theta, DVector::zeros(0));
    theta.axpy(-eta, &sample.value, T::one());
    state.theta = project_ball(theta, ball);
    state.last_followon = sample.followon;
    state.t += 1;
    state.transitions += (b + 1) as u64;
    Ok(())
}

/// One outer iteration of PER-ETD(0): draws `b + 1` fresh transitions from
/// the continuing trajectory, restarts `F`, and takes a projected step.
pub fn per_etd0_iterate<T: Real>(
    state: &mut LearnerState<T>,
    sampler: &mut TrajectorySampler<'_, T>,
    schedule: &StepsizeSchedule<T>,
    ball: &ProjectionBall<T>,
    gamma: T,
    features: &FeatureMap<T>,
) -> Result<()> {
    per_update(state, sampler, schedule, ball, gamma, features, None)
}

/// One outer iteration of PER-ETD(λ).
pub fn per_etd_lambda_iterate<T: Real>(
    state: &mut LearnerState<T>,
    sampler: &mut TrajectorySampler<'_, T>,
    schedule: &StepsizeSchedule<T>,
    ball: &ProjectionBall<T>,
    gamma: T,
    features: &FeatureMap<T>,
) -> Result<()> {
    let lambda = state.algo.lambda;
    per_update(state, sampler, schedule, ball, gamma, features, Some(lambda))
}

/// Where the behavior trajectory begins.
#[derive(Debug, Clone, PartialEq)]
pub enum StartState<T: Real> {
    /// Drawn from the given distribution (normally `d_μ`).
    Distribution(DVector<T>),
    Fixed(usize),
}

/// Everything a training run reads but never mutates.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSetup<'a, T: Real> {
    pub mdp: &'a FiniteMdp<T>,
    pub target: &'a Policy<T>,
    pub behavior: &'a Policy<T>,
    pub features: &'a FeatureMap<T>,
    pub start: &'a StartState<T>,
}

/// Iterate recorded by [`run_training`].
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T: Real> {
    pub iter: u64,
    pub transitions: u64,
    pub theta: DVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun<T: Real> {
    pub snapshots: Vec<Snapshot<T>>,
    /// Set when the run stopped early on the divergence threshold; the last
    /// snapshot is the iterate that tripped it.
    pub diverged: bool,
}

#[derive(Debug, Clone)]
pub struct TrainingOptions<T: Real> {
    /// Record every `stride`-th outer iteration (plus `θ₀` and `θ_T`).
    pub stride: u64,
    pub theta0: Option<DVector<T>>,
}

impl<T: Real> Default for TrainingOptions<T> {
    fn default() -> Self {
        Self {
            stride: 1,
            theta0: None,
        }
    }
}

/// Runs `iterations` outer iterations of `algo` with one seeded sampler.
///
/// TD and ETD consume one transition per iteration; PER variants consume
/// `b + 1`.
pub fn run_training<T: Real>(
    algo: &AlgoConfig<T>,
    setup: &TrainingSetup<'_, T>,
    schedule: &StepsizeSchedule<T>,
    ball: &ProjectionBall<T>,
    iterations: u64,
    seed: u64,
    opts: &TrainingOptions<T>,
) -> Result<TrainingRun<T>> {
    algo.validate()?;
    if opts.stride == 0 {
        return Err(invalid("snapshot stride must be positive"));
    }
    let features = setup.features;
    if features.n_states() != setup.mdp.n_states() {
        return Err(invalid("feature map and MDP have different state counts"));
    }
    let gamma = setup.mdp.gamma();
    let mut sampler = match setup.start {
        StartState::Distribution(d) => {
            TrajectorySampler::from_distribution(setup.mdp, setup.target, setup.behavior, d, seed)?
        }
        StartState::Fixed(s) => TrajectorySampler::new(setup.mdp, setup.target, setup.behavior, *s, seed)?,
    };
    let mut state = match &opts.theta0 {
        Some(th) if th.len() != features.dim() => return Err(invalid("theta0 has the wrong dimension")),
        Some(th) => LearnerState::with_theta(*algo, th.clone()),
        None => LearnerState::new(*algo, features.dim()),
    };
    let snap = |s: &LearnerState<T>| Snapshot {
        iter: s.t,
        transitions: s.transitions,
        theta: s.theta.clone(),
    };
    let mut snapshots = vec![snap(&state)];
    let mut diverged = false;
    while state.t < iterations {
        match algo.kind {
            AlgoKind::Td0 => {
                let tr = sampler.sample_transition()?;
                let eta = schedule.stepsize_at(state.t);
                state.theta = td0_step(&state.theta, &tr, eta, gamma, features);
                state.t += 1;
                state.transitions += 1;
            }
            AlgoKind::Etd0 => {
                let tr = sampler.sample_transition()?;
                let eta = schedule.stepsize_at(state.t);
                etd0_step(&mut state, &tr, eta, gamma, features, ball);
            }
            AlgoKind::EtdLambda => {
                let tr = sampler.sample_transition()?;
                let eta = schedule.stepsize_at(state.t);
                etd_lambda_step(&mut state, &tr, eta, gamma, features, ball);
            }
            AlgoKind::PerEtd0 => per_etd0_iterate(&mut state, &mut sampler, schedule, ball, gamma, features)?,
            AlgoKind::PerEtdLambda => {
                per_etd_lambda_iterate(&mut state, &mut sampler, schedule, ball, gamma, features)?
            }
        }
        if state.diverged() {
            diverged = true;
            snapshots.push(snap(&state));
            break;
        }
        if state.t % opts.stride == 0 || state.t == iterations {
            snapshots.push(snap(&state));
        }
    }
    Ok(TrainingRun { snapshots, diverged })
}
