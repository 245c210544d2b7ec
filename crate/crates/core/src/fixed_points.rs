//! Closed-form fixed points of the emphatic operators and the constants
//! that parameterize the theoretical stepsize, projection radius and
//! period-length choices.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::features::FeatureMap;
use crate::linalg;
use crate::scalar::Real;

/// Emphatic weights `f` and emphasis weights `m = λ d_μ + (1 − λ) f`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmphaticWeights<T: Real> {
    pub f: DVector<T>,
    pub m: DVector<T>,
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if !(gamma >= T::zero() && gamma < T::one()) {
        return Err(invalid(format!("gamma = {gamma} must lie in [0, 1)")));
    }
    Ok(())
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(invalid(format!("lambda = {lambda} must lie in [0, 1]")));
    }
    Ok(())
}

fn check_chain<T: Real>(features: &FeatureMap<T>, p_pi: &DMatrix<T>, vecs: &[&DVector<T>]) -> Result<()> {
    let n = features.n_states();
    if p_pi.nrows() != n || p_pi.ncols() != n || vecs.iter().any(|v| v.len() != n) {
        return Err(invalid(format!(
            "chain quantities must be sized for {n} states (features have {n} rows)"
        )));
    }
    Ok(())
}

/// Solves `f = d_μ + γ P_πᵀ f`.
pub fn emphatic_f<T: Real>(d_mu: &DVector<T>, p_pi: &DMatrix<T>, gamma: T) -> Result<DVector<T>> {
    check_gamma(gamma)?;
    let n = d_mu.len();
    if p_pi.nrows() != n || p_pi.ncols() != n {
        return Err(invalid("d_mu and P_pi sizes disagree"));
    }
    let sys = DMatrix::identity(n, n) - p_pi.transpose() * gamma;
    let f = linalg::solve(&sys, d_mu, "emphatic weights")?;
    let resid = (&sys * &f - d_mu).norm();
    if resid > T::solve_tol() * d_mu.norm().max(T::one()) {
        return Err(Error::Numerical(format!("emphatic weight residual {resid:e}")));
    }
    Ok(f)
}

/// `f` together with `m = λ d_μ + (1 − λ) f`.
pub fn emphatic_weights<T: Real>(
    d_mu: &DVector<T>,
    p_pi: &DMatrix<T>,
    gamma: T,
    lambda: T,
) -> Result<EmphaticWeights<T>> {
    check_lambda(lambda)?;
    let f = emphatic_f(d_mu, p_pi, gamma)?;
    let m = d_mu * lambda + &f * (T::one() - lambda);
    Ok(EmphaticWeights { f, m })
}

/// Affine operator `θ ↦ Aθ − c`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel<T: Real> {
    pub a_matrix: DMatrix<T>,
    pub c_vector: DVector<T>,
}

impl<T: Real> OperatorModel<T> {
    pub fn apply(&self, theta: &DVector<T>) -> DVector<T> {
        &self.a_matrix * theta - &self.c_vector
    }

    /// `θ* = A⁻¹c`, rejecting systems with condition number above 1e12.
    pub fn solve(&self, what: &str) -> Result<DVector<T>> {
        let theta = linalg::solve(&self.a_matrix, &self.c_vector, what)?;
        let resid = self.apply(&theta).norm();
        if resid > T::solve_tol() * (T::one() + self.c_vector.norm()) {
            return Err(Error::Numerical(format!("{what}: residual {resid:e}")));
        }
        Ok(theta)
    }

    pub fn condition_number(&self) -> T {
        linalg::condition_number(&self.a_matrix)
    }
}

/// `A = Φᵀ diag(w) (I − γP_π) Φ`, `c = Φᵀ diag(w) r_π` for a generic
/// row-weighting `Φᵀ diag(w)` supplied as a `d × |S|` matrix.
fn operator_from_weighting<T: Real>(
    weighting: &DMatrix<T>,
    features: &FeatureMap<T>,
    p_pi: &DMatrix<T>,
    r_pi: &DVector<T>,
    gamma: T,
) -> OperatorModel<T> {
    let n = features.n_states();
    let bellman = DMatrix::identity(n, n) - p_pi * gamma;
    OperatorModel {
        a_matrix: weighting * bellman * features.phi(),
        c_vector: weighting * r_pi,
    }
}

/// `Φᵀ diag(w)`.
fn weighted_transpose<T: Real>(features: &FeatureMap<T>, w: &DVector<T>) -> DMatrix<T> {
    let phi = features.phi();
    DMatrix::from_fn(features.dim(), features.n_states(), |j, s| phi[(s, j)] * w[s])
}

/// ETD(0) fixed point `θ* = (ΦᵀF(I − γP_π)Φ)⁻¹ ΦᵀF r_π`.
pub fn etd0_fixed_point<T: Real>(
    features: &FeatureMap<T>,
    f: &DVector<T>,
    p_pi: &DMatrix<T>,
    r_pi: &DVector<T>,
    gamma: T,
) -> Result<(OperatorModel<T>, DVector<T>)> {
    check_gamma(gamma)?;
    check_chain(features, p_pi, &[f, r_pi])?;
    let model = operator_from_weighting(&weighted_transpose(features, f), features, p_pi, r_pi, gamma);
    let theta = model.solve("ETD(0) fixed point")?;
    Ok((model, theta))
}

/// ETD(λ) fixed point with `M = diag(λ d_μ + (1 − λ) f)`:
/// `A = ΦᵀM(I − γλP_π)⁻¹(I − γP_π)Φ`, `c = ΦᵀM(I − γλP_π)⁻¹ r_π`.
pub fn etd_lambda_fixed_point<T: Real>(
    features: &FeatureMap<T>,
    f: &DVector<T>,
    d_mu: &DVector<T>,
    p_pi: &DMatrix<T>,
    r_pi: &DVector<T>,
    gamma: T,
    lambda: T,
) -> Result<(OperatorModel<T>, DVector<T>)> {
    check_gamma(gamma)?;
    check_lambda(lambda)?;
    check_chain(features, p_pi, &[f, d_mu, r_pi])?;
    let n = features.n_states();
    let m = d_mu * lambda + f * (T::one() - lambda);
    // Φ^T M (I − γλP)^{-1} = ((I − γλP)^{-T} M Φ)^T
    let resolvent_t = DMatrix::identity(n, n) - p_pi.transpose() * (gamma * lambda);
    let m_phi = weighted_transpose(features, &m).transpose();
    let solved = linalg::solve_matrix(&resolvent_t, &m_phi, "ETD(lambda) resolvent")?;
    let weighting = solved.transpose();
    let model = operator_from_weighting(&weighting, features, p_pi, r_pi, gamma);
    let theta = model.solve("ETD(lambda) fixed point")?;
    Ok((model, theta))
}

/// Expected operator of PER-ETD(λ) with period `b` under a stationary
/// start: `A = β̄_b(I − γP_π)Φ`, `c = β̄_b r_π`, where
/// `f̄_τ = d_μ + γP_πᵀ f̄_{τ−1}` from `f̄_0 = d_μ` and
/// `β̄_τ = λΦᵀD_μ + (1 − λ)ΦᵀF̄_τ + γλ β̄_{τ−1} P_π` from `β̄_0 = ΦᵀD_μ`.
pub fn finite_b_operator<T: Real>(
    features: &FeatureMap<T>,
    d_mu: &DVector<T>,
    p_pi: &DMatrix<T>,
    r_pi: &DVector<T>,
    gamma: T,
    lambda: T,
    b: usize,
) -> Result<OperatorModel<T>> {
    check_gamma(gamma)?;
    check_lambda(lambda)?;
    check_chain(features, p_pi, &[d_mu, r_pi])?;
    let p_t = p_pi.transpose();
    let phi_d = weighted_transpose(features, d_mu);
    let mut f_bar = d_mu.clone();
    let mut beta = phi_d.clone();
    for _ in 0..b {
        f_bar = d_mu + &p_t * &f_bar * gamma;
        beta = &phi_d * lambda
            + weighted_transpose(features, &f_bar) * (T::one() - lambda)
            + &beta * p_pi * (gamma * lambda);
    }
    Ok(operator_from_weighting(&beta, features, p_pi, r_pi, gamma))
}

/// Fixed point of PER-ETD(λ) at a finite period length `b`.
pub fn finite_b_fixed_point<T: Real>(
    features: &FeatureMap<T>,
    d_mu: &DVector<T>,
    p_pi: &DMatrix<T>,
    r_pi: &DVector<T>,
    gamma: T,
    lambda: T,
    b: usize,
) -> Result<DVector<T>> {
    let model = finite_b_operator(features, d_mu, p_pi, r_pi, gamma, lambda, b)?;
    model.solve(&format!("finite-period fixed point (b = {b})"))
}

/// Smallest eigenvalue of `(A + Aᵀ)/2`; errors when it is not positive.
pub fn monotonicity_constant<T: Real>(a_matrix: &DMatrix<T>) -> Result<T> {
    if !a_matrix.is_square() || a_matrix.is_empty() {
        return Err(invalid("key matrix must be square and non-empty"));
    }
    let mu = linalg::min_symmetric_eigenvalue(a_matrix);
    if !(mu > T::zero()) {
        return Err(Error::NotPositiveDefinite { mu: mu.to_f64_lossy() });
    }
    Ok(mu)
}

/// Spectral norm of the key matrix.
pub fn lipschitz_constant<T: Real>(a_matrix: &DMatrix<T>) -> T {
    linalg::spectral_norm(a_matrix)
}

/// `‖Φθ* − V_π‖_∞`.
pub fn approx_error<T: Real>(features: &FeatureMap<T>, theta_star: &DVector<T>, v_pi: &DVector<T>) -> Result<T> {
    if theta_star.len() != features.dim() || v_pi.len() != features.n_states() {
        return Err(invalid("approx_error: dimension mismatch"));
    }
    Ok((features.phi() * theta_star - v_pi).amax())
}

/// Constants that parameterize the theoretical step and projection choices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryConstants<T> {
    /// Strong-monotonicity constant μ of the key matrix.
    pub mu: T,
    /// Lipschitz constant L (spectral norm of the key matrix).
    pub lip: T,
    /// `8 L² / μ²`.
    pub t0: T,
    pub eps_approx: T,
}

pub fn theory_constants<T: Real>(
    model: &OperatorModel<T>,
    features: &FeatureMap<T>,
    theta_star: &DVector<T>,
    v_pi: &DVector<T>,
) -> Result<TheoryConstants<T>> {
    let mu = monotonicity_constant(&model.a_matrix)?;
    let lip = lipschitz_constant(&model.a_matrix);
    Ok(TheoryConstants {
        mu,
        lip,
        t0: T::lit(8.0) * lip * lip / (mu * mu),
        eps_approx: approx_error(features, theta_star, v_pi)?,
    })
}

/// Which period-length rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BVariant {
    Etd0,
    EtdLambda,
}

/// Inputs to [`select_b`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BSelectorParams<T> {
    /// `max{γ, χ}`.
    pub xi: T,
    /// Bias constant; the first branch of the rule is skipped when absent.
    pub c_b: Option<T>,
    pub rho_max: T,
}

impl<T: Real> BSelectorParams<T> {
    /// `ξ = max{γ, χ}`; `χ` defaults to `γ`.
    pub fn new(gamma: T, chi: Option<T>, c_b: Option<T>, rho_max: T) -> Result<Self> {
        let chi = chi.unwrap_or(gamma);
        if !(chi > T::zero() && chi < T::one()) {
            return Err(invalid(format!("mixing rate chi = {chi} must lie in (0, 1)")));
        }
        let params = Self {
            xi: gamma.max(chi),
            c_b,
            rho_max,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if !(self.xi > T::zero() && self.xi < T::one()) {
            return Err(invalid(format!("xi = {} must lie in (0, 1)", self.xi)));
        }
        if let Some(c) = self.c_b {
            if !(c > T::zero()) {
                return Err(invalid(format!("c_b = {c} must be positive")));
            }
        }
        if !(self.rho_max > T::zero()) {
            return Err(invalid("rho_max must be positive"));
        }
        Ok(())
    }
}

fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Period length prescribed by the finite-time bounds for horizon `t_horizon`.
pub fn select_b<T: Real>(
    params: &BSelectorParams<T>,
    gamma: T,
    t_horizon: u64,
    mu: T,
    b_phi: T,
    variant: BVariant,
) -> Result<usize> {
    params.validate()?;
    if t_horizon < 2 {
        return Err(invalid("horizon T must be at least 2"));
    }
    let xi = params.xi.to_f64_lossy();
    let log_t = (t_horizon as f64).ln();
    let inv_xi = (1.0 / xi).ln();
    let g2rho = (gamma * gamma * params.rho_max).to_f64_lossy();
    let variance_branch = match variant {
        BVariant::Etd0 if g2rho <= 1.0 => log_t / inv_xi,
        BVariant::Etd0 => log_t / (g2rho.ln() + inv_xi),
        BVariant::EtdLambda => log_t / (params.rho_max.to_f64_lossy().ln() + inv_xi),
    };
    let mut b = ceil_tol(variance_branch);
    if let Some(c_b) = params.c_b {
        if !(mu > T::zero()) {
            return Err(invalid("monotonicity constant must be positive"));
        }
        let first = (mu.to_f64_lossy().ln() - (5.0 * c_b.to_f64_lossy() * b_phi.to_f64_lossy()).ln()) / xi.ln();
        b = b.max(ceil_tol(first));
    }
    Ok(b.max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{baird_phi1, baird_phi2};
    use crate::mdp::{baird_mdp, induced_chain, stationary_distribution, value_function};
    use approx::assert_relative_eq;

    struct Baird {
        d_mu: DVector<f64>,
        p_pi: DMatrix<f64>,
        r_pi: DVector<f64>,
        v_pi: DVector<f64>,
        f: DVector<f64>,
    }

    fn baird() -> Baird {
        let (mdp, pi, mu) = baird_mdp(0.9, 1.0 / 7.0).unwrap();
        let target = induced_chain(&mdp, &pi).unwrap();
        let behavior = induced_chain(&mdp, &mu).unwrap();
        let d_mu = stationary_distribution(&behavior.p_pi, 1e-12).unwrap();
        let v_pi = value_function(&target, 0.99).unwrap();
        let f = emphatic_f(&d_mu, &target.p_pi, 0.99).unwrap();
        Baird {
            d_mu,
            p_pi: target.p_pi,
            r_pi: target.r_pi,
            v_pi,
            f,
        }
    }

    #[test]
    fn emphatic_f_examples() {
        let d = DVector::from_vec(vec![0.3, 0.7]);
        let p = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.1, 0.9]);
        assert_eq!(emphatic_f(&d, &p, 0.0).unwrap(), d);
        let one = emphatic_f(&DVector::from_element(1, 1.0), &DMatrix::from_element(1, 1, 1.0), 0.5);
        assert_relative_eq!(one.unwrap()[0], 2.0, epsilon = 1e-14);
        let b = baird();
        assert_relative_eq!(b.f.sum(), 100.0, epsilon = 1e-9);
        // Hand-derived: f(7) = 1/7 + γ·0.9·100.
        assert_relative_eq!(b.f[6], 1.0 / 7.0 + 0.99 * 90.0, epsilon = 1e-9);
    }

    #[test]
    fn emphasis_weights_blend() {
        let b = baird();
        let w = emphatic_weights(&b.d_mu, &b.p_pi, 0.99, 0.25).unwrap();
        let expect = &b.d_mu * 0.25 + &b.f * 0.75;
        assert_relative_eq!(w.m, expect, epsilon = 1e-12);
    }

    #[test]
    fn etd0_fixed_point_examples() {
        let b = baird();
        let tab = FeatureMap::tabular(7);
        let (_, th) = etd0_fixed_point(&tab, &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert_relative_eq!(th, b.v_pi, epsilon = 1e-9);

        let phi1 = baird_phi1();
        let (model, th) = etd0_fixed_point(&phi1, &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert!(model.apply(&th).norm() < 1e-12);
        // Scalar case: θ* = c / A computed by hand from the definitions.
        let phi = phi1.phi();
        let mut a = 0.0;
        let mut c = 0.0;
        for s in 0..7 {
            let next: f64 = (0..7).map(|t| b.p_pi[(s, t)] * phi[(t, 0)]).sum();
            a += b.f[s] * phi[(s, 0)] * (phi[(s, 0)] - 0.99 * next);
            c += b.f[s] * phi[(s, 0)] * b.r_pi[s];
        }
        assert_relative_eq!(th[0], c / a, max_relative = 1e-10);

        let r3 = &b.r_pi * 3.0;
        let (_, th3) = etd0_fixed_point(&phi1, &b.f, &b.p_pi, &r3, 0.99).unwrap();
        assert_relative_eq!(th3[0], 3.0 * th[0], max_relative = 1e-12);
    }

    #[test]
    fn etd_lambda_endpoints() {
        let b = baird();
        let phi2 = baird_phi2();
        let (_, th0) = etd0_fixed_point(&phi2, &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        let (_, thl0) = etd_lambda_fixed_point(&phi2, &b.f, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.0).unwrap();
        assert_relative_eq!(th0, thl0, epsilon = 1e-10);
        let (_, th1) = etd_lambda_fixed_point(&phi2, &b.f, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 1.0).unwrap();
        let proj = crate::features::weighted_projection(&b.v_pi, &phi2, &b.d_mu).unwrap();
        assert_relative_eq!(th1, proj, epsilon = 1e-9);
        let (m, th) = etd_lambda_fixed_point(&phi2, &b.f, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.4).unwrap();
        assert_eq!(th.len(), 2);
        assert!(m.apply(&th).norm() <= 1e-10 * (1.0 + m.c_vector.norm()));
    }

    #[test]
    fn finite_b_examples() {
        let b = baird();
        let phi2 = baird_phi2();
        // b = 0 is the off-policy TD fixed point with D_μ weighting.
        let th = finite_b_fixed_point(&phi2, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.0, 0).unwrap();
        let (_, expect) = etd0_fixed_point(&phi2, &b.d_mu, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert_relative_eq!(th, expect, epsilon = 1e-10);

        let far = finite_b_fixed_point(&phi2, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.3, 4000).unwrap();
        let (_, lim) = etd_lambda_fixed_point(&phi2, &b.f, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.3).unwrap();
        assert!((far - lim).norm() < 1e-6);

        let tab = FeatureMap::tabular(7);
        for (lam, bb) in [(0.0, 3), (0.5, 7), (1.0, 2)] {
            let m = finite_b_operator(&tab, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, lam, bb).unwrap();
            assert!(m.condition_number() < 1e12);
            let th = m.solve("tabular").unwrap();
            assert_relative_eq!(th, b.v_pi, epsilon = 1e-8);
        }
    }

    #[test]
    fn finite_b_lambda_zero_is_pure_followon() {
        let b = baird();
        let phi2 = baird_phi2();
        let mut f_bar = b.d_mu.clone();
        for _ in 0..6 {
            f_bar = &b.d_mu + b.p_pi.transpose() * &f_bar * 0.99;
        }
        let direct = operator_from_weighting(&weighted_transpose(&phi2, &f_bar), &phi2, &b.p_pi, &b.r_pi, 0.99);
        let rec = finite_b_operator(&phi2, &b.d_mu, &b.p_pi, &b.r_pi, 0.99, 0.0, 6).unwrap();
        assert_relative_eq!(direct.a_matrix, rec.a_matrix, epsilon = 1e-12);
        assert_relative_eq!(direct.c_vector, rec.c_vector, epsilon = 1e-12);
    }

    #[test]
    fn monotonicity_examples() {
        let a = DMatrix::<f64>::identity(3, 3) * 2.0;
        assert_relative_eq!(monotonicity_constant(&a).unwrap(), 2.0, epsilon = 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 4.0, 0.0, 1.0]);
        match monotonicity_constant(&bad) {
            Err(Error::NotPositiveDefinite { mu }) => assert_relative_eq!(mu, -1.0, epsilon = 1e-12),
            other => panic!("expected violation, got {other:?}"),
        }
        let b = baird();
        let (model, _) = etd0_fixed_point(&baird_phi1(), &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert!(monotonicity_constant(&model.a_matrix).unwrap() > 0.0);
    }

    #[test]
    fn lipschitz_examples() {
        assert_relative_eq!(
            lipschitz_constant(&DMatrix::<f64>::identity(4, 4)),
            1.0,
            epsilon = 1e-14
        );
        let d = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(lipschitz_constant(&d), 3.0, epsilon = 1e-14);
    }

    /// Power iteration on AᵀA, independent of the SVD path.
    fn power_norm(a: &DMatrix<f64>) -> f64 {
        let ata = a.transpose() * a;
        let mut v = DVector::from_element(a.ncols(), 1.0);
        let mut lam = 0.0;
        for _ in 0..20_000 {
            let w = &ata * &v;
            lam = w.norm();
            v = w / lam;
        }
        lam.sqrt()
    }

    #[test]
    fn lipschitz_matches_power_iteration() {
        // Fixed pseudo-random 5x5 entries.
        let vals: Vec<f64> = (0..25).map(|i| ((i * 37 + 11) % 17) as f64 / 17.0 - 0.4).collect();
        let a = DMatrix::from_row_slice(5, 5, &vals);
        assert_relative_eq!(lipschitz_constant(&a), power_norm(&a), epsilon = 1e-9);
    }

    #[test]
    fn approx_error_examples() {
        let b = baird();
        let tab = FeatureMap::tabular(7);
        let (_, th) = etd0_fixed_point(&tab, &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert!(approx_error(&tab, &th, &b.v_pi).unwrap() < 1e-9);
        let phi2 = baird_phi2();
        let th0 = DVector::from_vec(vec![2.0, -1.0]);
        assert!(approx_error(&phi2, &th0, &(phi2.phi() * &th0)).unwrap() == 0.0);
        let phi1 = baird_phi1();
        let (_, th) = etd0_fixed_point(&phi1, &b.f, &b.p_pi, &b.r_pi, 0.99).unwrap();
        assert!(approx_error(&phi1, &th, &b.v_pi).unwrap() > 0.0);
    }

    #[test]
    fn select_b_examples() {
        let p = BSelectorParams {
            xi: 0.5,
            c_b: None,
            rho_max: 1.0,
        };
        assert_eq!(select_b(&p, 0.5, 1024, 1.0, 1.0, BVariant::Etd0).unwrap(), 10);
        let p = BSelectorParams {
            xi: 0.5,
            c_b: None,
            rho_max: 2.0,
        };
        assert_eq!(select_b(&p, 0.5, 1024, 1.0, 1.0, BVariant::EtdLambda).unwrap(), 5);
        // First branch dominates when the bias constant is large.
        let p = BSelectorParams {
            xi: 0.5,
            c_b: Some(1000.0),
            rho_max: 1.0,
        };
        let b = select_b(&p, 0.5, 1024, 1.0, 1.0, BVariant::Etd0).unwrap();
        assert_eq!(b, (5000f64.ln() / 2f64.ln()).ceil() as usize);
    }

    #[test]
    fn select_b_grows_logarithmically() {
        let p = BSelectorParams::new(0.9, Some(0.7), None, 3.0).unwrap();
        let bound = (1.0 / (1.0 / 0.9f64).ln()).ceil() as usize;
        for t in [4u64, 100, 10_000, 1 << 30] {
            let b1 = select_b(&p, 0.9, t, 0.1, 1.0, BVariant::Etd0).unwrap();
            let b2 = select_b(&p, 0.9, 2 * t, 0.1, 1.0, BVariant::Etd0).unwrap();
            assert!(b2 >= b1 && b2 - b1 <= bound);
        }
    }

    #[test]
    fn select_b_rejects_bad_params() {
        let p = BSelectorParams {
            xi: 1.0,
            c_b: None,
            rho_max: 1.0,
        };
        assert!(select_b(&p, 0.5, 100, 1.0, 1.0, BVariant::Etd0).is_err());
        let p = BSelectorParams {
            xi: 0.5,
            c_b: Some(0.0),
            rho_max: 1.0,
        };
        assert!(select_b(&p, 0.5, 100, 1.0, 1.0, BVariant::Etd0).is_err());
        assert!(BSelectorParams::new(0.9, Some(1.2), None, 2.0).is_err());
    }
}
