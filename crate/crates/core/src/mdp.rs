//! Finite MDPs, policies, policy-induced Markov chains and a seeded
//! trajectory sampler that follows the behavior policy.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg;
use crate::scalar::Real;

/// Cap on power-iteration steps in [`stationary_distribution`].
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Default tolerance for [`stationary_distribution`].
pub const STATIONARY_TOL: f64 = 1e-12;

fn check_simplex<T: Real>(row: &[T], what: impl Fn() -> String) -> Result<()> {
    let mut sum = T::zero();
    for &p in row {
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(invalid(format!("{}: entry {p} is not a probability", what())));
        }
        sum += p;
    }
    if (sum - T::one()).abs() > T::prob_tol() {
        return Err(invalid(format!("{}: entries sum to {sum}, expected 1", what())));
    }
    Ok(())
}

/// Tabular MDP `(S, A, r, P, γ)` with deterministic rewards per `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp<T> {
    n_states: usize,
    n_actions: usize,
    /// Flattened `[s][a][s']`.
    transition: Vec<T>,
    /// Flattened `[s][a]`.
    reward: Vec<T>,
    gamma: T,
    r_max: T,
}

impl<T: Real> FiniteMdp<T> {
    /// Builds an MDP from nested `transition[s][a][s']` and `reward[s][a]` tables.
    pub fn new(transition: Vec<Vec<Vec<T>>>, reward: Vec<Vec<T>>, gamma: T) -> Result<Self> {
        let n_states = transition.len();
        if n_states == 0 {
            return Err(invalid("MDP needs at least one state"));
        }
        let n_actions = transition[0].len();
        if n_actions == 0 {
            return Err(invalid("MDP needs at least one action"));
        }
        if !(gamma > T::zero() && gamma < T::one()) {
            return Err(invalid(format!("gamma = {gamma} must lie strictly in (0, 1)")));
        }
        if reward.len() != n_states {
            return Err(invalid(format!(
                "reward table has {} rows, expected {n_states}",
                reward.len()
            )));
        }
        let mut flat = Vec::with_capacity(n_states * n_actions * n_states);
        let mut rflat = Vec::with_capacity(n_states * n_actions);
        let mut r_max = T::zero();
        for (s, (rows, rewards)) in transition.iter().zip(&reward).enumerate() {
            if rows.len() != n_actions || rewards.len() != n_actions {
                return Err(invalid(format!("state {s}: expected {n_actions} actions")));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n_states {
                    return Err(invalid(format!(
                        "transition[{s}][{a}] has length {}, expected {n_states}",
                        row.len()
                    )));
                }
                check_simplex(row, || format!("transition[{s}][{a}]"))?;
                flat.extend_from_slice(row);
                let r = rewards[a];
                if !r.is_finite() {
                    return Err(invalid(format!("reward[{s}][{a}] is not finite")));
                }
                r_max = r_max.max(r.abs());
                rflat.push(r);
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transition: flat,
            reward: rflat,
            gamma,
            r_max,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// `max |r(s, a)|`.
    pub fn r_max(&self) -> T {
        self.r_max
    }

    /// Next-state distribution `P(· | s, a)`.
    pub fn transition_row(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    pub fn reward(&self, s: usize, a: usize) -> T {
        self.reward[s * self.n_actions + a]
    }

    /// Copy with every reward multiplied by `k`.
    pub fn scaled_rewards(&self, k: T) -> Self {
        let mut out = self.clone();
        out.reward.iter_mut().for_each(|r| *r *= k);
        out.r_max = self.r_max * k.abs();
        out
    }

    /// Parses the plain-text MDP format: a header line `states actions gamma`
    /// followed by one line `s a r p(0) ... p(|S|-1)` for every pair.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty MDP file".into(),
        })?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be `states actions gamma`".into(),
            });
        }
        let perr = |line: usize, what: &str| Error::Parse {
            line,
            msg: format!("bad {what}"),
        };
        let n_states: usize = head[0].parse().map_err(|_| perr(hline, "state count"))?;
        let n_actions: usize = head[1].parse().map_err(|_| perr(hline, "action count"))?;
        let gamma: f64 = head[2].parse().map_err(|_| perr(hline, "gamma"))?;
        let mut transition = vec![vec![Vec::new(); n_actions]; n_states];
        let mut reward = vec![vec![T::zero(); n_actions]; n_states];
        let mut seen = vec![vec![false; n_actions]; n_states];
        for (line, body) in lines {
            let tok: Vec<&str> = body.split_whitespace().collect();
            if tok.len() != 3 + n_states {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {} fields, found {}", 3 + n_states, tok.len()),
                });
            }
            let s: usize = tok[0].parse().map_err(|_| perr(line, "state id"))?;
            let a: usize = tok[1].parse().map_err(|_| perr(line, "action id"))?;
            if s >= n_states || a >= n_actions {
                return Err(Error::Parse {
                    line,
                    msg: format!("pair ({s}, {a}) out of range"),
                });
            }
            if seen[s][a] {
                return Err(Error::Parse {
                    line,
                    msg: format!("duplicate pair ({s}, {a})"),
                });
            }
            seen[s][a] = true;
            let num = |t: &str| -> Result<T> { t.parse::<f64>().map(T::lit).map_err(|_| perr(line, "number")) };
            reward[s][a] = num(tok[2])?;
            transition[s][a] = tok[3..].iter().map(|t| num(t)).collect::<Result<_>>()?;
        }
        if let Some((s, a)) = (0..n_states)
            .flat_map(|s| (0..n_actions).map(move |a| (s, a)))
            .find(|&(s, a)| !seen[s][a])
        {
            return Err(Error::Parse {
                line: 0,
                msg: format!("missing pair ({s}, {a})"),
            });
        }
        Self::new(transition, reward, T::lit(gamma))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}

/// Stochastic policy `π(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    n_states: usize,
    n_actions: usize,
    probs: Vec<T>,
}

impl<T: Real> Policy<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("policy table must be non-empty"));
        }
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for (s, row) in rows.iter().enumerate() {
            if row.len() != n_actions {
                return Err(invalid(format!("policy row {s} has {} actions", row.len())));
            }
            check_simplex(row, || format!("policy row {s}"))?;
            probs.extend_from_slice(row);
        }
        Ok(Self {
            n_states,
            n_actions,
            probs,
        })
    }

    /// Same action distribution in every state.
    pub fn state_independent(n_states: usize, row: &[T]) -> Result<Self> {
        Self::new(vec![row.to_vec(); n_states])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> T {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// Parses one whitespace-separated probability row per state.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>().map(T::lit).map_err(|_| Error::Parse {
                        line: i + 1,
                        msg: format!("bad probability `{t}`"),
                    })
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    fn check_shape(&self, mdp: &FiniteMdp<T>) -> Result<()> {
        if self.n_states != mdp.n_states() || self.n_actions != mdp.n_actions() {
            return Err(invalid(format!(
                "policy shape {}x{} does not match MDP {}x{}",
                self.n_states,
                self.n_actions,
                mdp.n_states(),
                mdp.n_actions()
            )));
        }
        Ok(())
    }
}

/// `P_π` and `r_π` for a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain<T: Real> {
    pub p_pi: DMatrix<T>,
    pub r_pi: DVector<T>,
}

/// `P_π(s'|s) = Σ_a π(a|s) P(s'|s,a)` and `r_π(s) = Σ_a π(a|s) r(s,a)`.
pub fn induced_chain<T: Real>(mdp: &FiniteMdp<T>, policy: &Policy<T>) -> Result<InducedChain<T>> {
    policy.check_shape(mdp)?;
    let n = mdp.n_states();
    let mut p_pi = DMatrix::zeros(n, n);
    let mut r_pi = DVector::zeros(n);
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let w = policy.prob(s, a);
            if w == T::zero() {
                continue;
            }
            r_pi[s] += w * mdp.reward(s, a);
            for (t, &p) in mdp.transition_row(s, a).iter().enumerate() {
                p_pi[(s, t)] += w * p;
            }
        }
    }
    Ok(InducedChain { p_pi, r_pi })
}

fn l1_stationarity_residual<T: Real>(p: &DMatrix<T>, d: &DVector<T>) -> T {
    (p.tr_mul(d) - d).abs().sum()
}

/// Unique stationary distribution of a row-stochastic matrix.
///
/// The normalized null-space system `(Pᵀ − I) d = 0, 𝟙ᵀd = 1` is solved
/// directly; power iteration on the lazy chain `(I + P)/2` is used only
/// when the direct solution fails the residual or sign checks.
pub fn stationary_distribution<T: Real>(p: &DMatrix<T>, tol: T) -> Result<DVector<T>> {
    let n = p.nrows();
    if n == 0 || !p.is_square() {
        return Err(invalid("stationary distribution needs a non-empty square matrix"));
    }
    for s in 0..n {
        let row: Vec<T> = p.row(s).iter().copied().collect();
        check_simplex(&row, || format!("transition matrix row {s}"))?;
    }
    let mut sys = p.transpose() - DMatrix::identity(n, n);
    sys.row_mut(n - 1).fill(T::one());
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = T::one();
    let direct = match linalg::solve(&sys, &rhs, "stationary distribution") {
        Ok(d) => d,
        Err(_) => {
            return Err(Error::Ergodicity(
                "stationary distribution is not unique (reducible chain)".into(),
            ))
        }
    };
    if let Some(d) = clean_distribution(direct, tol) {
        if l1_stationarity_residual(p, &d) <= tol.max(T::prob_tol()) {
            return Ok(d);
        }
    }
    let lazy = (p + DMatrix::identity(n, n)) * T::lit(0.5);
    let mut d = DVector::from_element(n, T::one() / T::from_count(n));
    for _ in 0..MAX_POWER_ITERATIONS {
        let next = lazy.tr_mul(&d);
        let delta = (&next - &d).abs().sum();
        d = next;
        if delta <= tol {
            if let Some(d) = clean_distribution(d, tol) {
                return Ok(d);
            }
            break;
        }
    }
    Err(Error::Ergodicity(format!(
        "power iteration did not converge within {MAX_POWER_ITERATIONS} steps"
    )))
}

fn clean_distribution<T: Real>(mut d: DVector<T>, tol: T) -> Option<DVector<T>> {
    let slack = tol.max(T::prob_tol()) * T::lit(10.0);
    if d.iter().any(|&x| !x.is_finite() || x < -slack) {
        return None;
    }
    d.iter_mut().for_each(|x| *x = x.max(T::zero()));
    let total = d.sum();
    if total <= T::zero() {
        return None;
    }
    Some(d / total)
}

/// `V_π = (I − γP_π)⁻¹ r_π`.
pub fn value_function<T: Real>(chain: &InducedChain<T>, gamma: T) -> Result<DVector<T>> {
    if !(gamma > T::zero() && gamma < T::one()) {
        return Err(invalid(format!("gamma = {gamma} must lie strictly in (0, 1)")));
    }
    let n = chain.p_pi.nrows();
    let sys = DMatrix::identity(n, n) - &chain.p_pi * gamma;
    let v = linalg::solve(&sys, &chain.r_pi, "value function")?;
    let resid = (&sys * &v - &chain.r_pi).norm();
    if resid > T::solve_tol() * chain.r_pi.norm().max(T::one()) {
        return Err(Error::Numerical(format!("value function residual {resid:e}")));
    }
    Ok(v)
}

/// `ρ(s, a) = π(a|s) / μ(a|s)`; zero when the target never takes `a`.
pub fn importance_ratio<T: Real>(target: &Policy<T>, behavior: &Policy<T>, s: usize, a: usize) -> Result<T> {
    let p = target.prob(s, a);
    if p == T::zero() {
        return Ok(T::zero());
    }
    let q = behavior.prob(s, a);
    if q <= T::zero() {
        return Err(Error::Coverage { state: s, action: a });
    }
    Ok(p / q)
}

/// `max_{s,a} π(a|s)/μ(a|s)` over pairs the target policy can take.
pub fn rho_max<T: Real>(target: &Policy<T>, behavior: &Policy<T>) -> Result<T> {
    if target.n_states() != behavior.n_states() || target.n_actions() != behavior.n_actions() {
        return Err(invalid("target and behavior policies have different shapes"));
    }
    let mut best = T::zero();
    for s in 0..target.n_states() {
        for a in 0..target.n_actions() {
            best = best.max(importance_ratio(target, behavior, s, a)?);
        }
    }
    Ok(best)
}

/// Index of the dashed action in [`baird_mdp`].
pub const BAIRD_DASHED: usize = 0;
/// Index of the solid action in [`baird_mdp`].
pub const BAIRD_SOLID: usize = 1;
/// Discount used by the Baird preset.
pub const BAIRD_GAMMA: f64 = 0.99;

/// Seven-state Baird counterexample.
///
/// The dashed action moves uniformly to states `0..=5` with reward 0; the
/// solid action moves to state `6` with reward 1. Both policies are state
/// independent and parameterized by their solid-action probability.
pub fn baird_mdp<T: Real>(p_solid_target: T, p_solid_behavior: T) -> Result<(FiniteMdp<T>, Policy<T>, Policy<T>)> {
    for (name, p) in [("target", p_solid_target), ("behavior", p_solid_behavior)] {
        if !(p > T::zero() && p < T::one()) {
            return Err(invalid(format!(
                "{name} solid-action probability {p} must lie in (0, 1)"
            )));
        }
    }
    const N: usize = 7;
    let sixth = T::one() / T::lit(6.0);
    let dashed: Vec<T> = (0..N).map(|t| if t < 6 { sixth } else { T::zero() }).collect();
    let solid: Vec<T> = (0..N).map(|t| if t == 6 { T::one() } else { T::zero() }).collect();
    let transition = vec![vec![dashed, solid]; N];
    let reward = vec![vec![T::zero(), T::one()]; N];
    let mdp = FiniteMdp::new(transition, reward, T::lit(BAIRD_GAMMA))?;
    let target = Policy::state_independent(N, &[T::one() - p_solid_target, p_solid_target])?;
    let behavior = Policy::state_independent(N, &[T::one() - p_solid_behavior, p_solid_behavior])?;
    Ok((mdp, target, behavior))
}

/// One sampled step `(s, a, r, s', ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub s: usize,
    pub a: usize,
    pub r: T,
    pub s_next: usize,
    pub rho: T,
}

/// Draws an index from a discrete distribution, never returning a
/// zero-probability index.
fn draw_index<T: Real>(probs: &[T], u: T) -> usize {
    let mut acc = T::zero();
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= T::zero() {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Seeded sampler of one continuous behavior-policy trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySampler<'a, T> {
    rng: ChaCha8Rng,
    state: usize,
    mdp: &'a FiniteMdp<T>,
    target: &'a Policy<T>,
    behavior: &'a Policy<T>,
}

impl<'a, T: Real> TrajectorySampler<'a, T> {
    /// Starts at a fixed state.
    pub fn new(
        mdp: &'a FiniteMdp<T>,
        target: &'a Policy<T>,
        behavior: &'a Policy<T>,
        initial_state: usize,
        seed: u64,
    ) -> Result<Self> {
        target.check_shape(mdp)?;
        behavior.check_shape(mdp)?;
        if initial_state >= mdp.n_states() {
            return Err(invalid(format!("initial state {initial_state} out of range")));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: initial_state,
            mdp,
            target,
            behavior,
        })
    }

    /// Draws the initial state from `start` (typically `d_μ`) with the
    /// sampler's own generator.
    pub fn from_distribution(
        mdp: &'a FiniteMdp<T>,
        target: &'a Policy<T>,
        behavior: &'a Policy<T>,
        start: &DVector<T>,
        seed: u64,
    ) -> Result<Self> {
        if start.len() != mdp.n_states() {
            return Err(invalid("start distribution length does not match the MDP"));
        }
        let mut sampler = Self::new(mdp, target, behavior, 0, seed)?;
        let u = sampler.uniform();
        sampler.state = draw_index(start.as_slice(), u);
        Ok(sampler)
    }

    pub fn current_state(&self) -> usize {
        self.state
    }

    fn uniform(&mut self) -> T {
        T::lit(self.rng.gen::<f64>())
    }

    /// Samples `a ~ μ(·|s)`, `s' ~ P(·|s,a)` and advances the trajectory.
    pub fn sample_transition(&mut self) -> Result<Transition<T>> {
        let s = self.state;
        let u = self.uniform();
        let a = draw_index(self.behavior.row(s), u);
        let u = self.uniform();
        let s_next = draw_index(self.mdp.transition_row(s, a), u);
        let rho = importance_ratio(self.target, self.behavior, s, a)?;
        self.state = s_next;
        Ok(Transition {
            s,
            a,
            r: self.mdp.reward(s, a),
            s_next,
            rho,
        })
    }
}
