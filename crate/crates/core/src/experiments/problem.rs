use nalgebra::DVector;

use crate::error::Result;
use crate::features::{weighted_projection, FeatureMap};
use crate::fixed_points::{
    emphatic_f, etd0_fixed_point, etd_lambda_fixed_point, finite_b_fixed_point, finite_b_operator, OperatorModel,
};
use crate::mdp::{
    baird_mdp, induced_chain, rho_max, stationary_distribution, value_function, FiniteMdp, InducedChain, Policy,
};
use crate::scalar::Real;

/// An evaluation problem: MDP, both policies, features, and the derived
/// chain quantities every solver and metric needs.
#[derive(Debug, Clone)]
pub struct Problem {
    pub mdp: FiniteMdp<f64>,
    pub target: Policy<f64>,
    pub behavior: Policy<f64>,
    pub features: FeatureMap<f64>,
    /// Target-policy chain `(P_π, r_π)`.
    pub chain: InducedChain<f64>,
    /// Stationary distribution of the behavior chain.
    pub d_mu: DVector<f64>,
    pub v_pi: DVector<f64>,
    pub rho_max: f64,
    /// `(target, behavior)` solid-action probabilities when built from the Baird preset.
    pub baird: Option<(f64, f64)>,
}

impl Problem {
    pub fn new(
        mdp: FiniteMdp<f64>,
        target: Policy<f64>,
        behavior: Policy<f64>,
        features: FeatureMap<f64>,
    ) -> Result<Self> {
        if features.n_states() != mdp.n_states() {
            return Err(crate::error::invalid(format!(
                "feature map has {} rows but the MDP has {} states",
                features.n_states(),
                mdp.n_states()
            )));
        }
        let rho_max = rho_max(&target, &behavior)?;
        let chain = induced_chain(&mdp, &target)?;
        let behavior_chain = induced_chain(&mdp, &behavior)?;
        let d_mu = stationary_distribution(&behavior_chain.p_pi, f64::prob_tol())?;
        let v_pi = value_function(&chain, mdp.gamma())?;
        Ok(Self {
            mdp,
            target,
            behavior,
            features,
            chain,
            d_mu,
            v_pi,
            rho_max,
            baird: None,
        })
    }

    /// Baird counterexample with the given solid-action probabilities.
    pub fn baird(target_solid: f64, behavior_solid: f64, features: FeatureMap<f64>) -> Result<Self> {
        let (mdp, target, behavior) = baird_mdp(target_solid, behavior_solid)?;
        let mut p = Self::new(mdp, target, behavior, features)?;
        p.baird = Some((target_solid, behavior_solid));
        Ok(p)
    }

    /// Same MDP and policies with a different feature map.
    pub fn with_features(&self, features: FeatureMap<f64>) -> Result<Self> {
        let mut p = Self::new(self.mdp.clone(), self.target.clone(), self.behavior.clone(), features)?;
        p.baird = self.baird;
        Ok(p)
    }

    pub fn gamma(&self) -> f64 {
        self.mdp.gamma()
    }

    pub fn emphatic_f(&self) -> Result<DVector<f64>> {
        emphatic_f(&self.d_mu, &self.chain.p_pi, self.gamma())
    }

    pub fn etd0_fixed_point(&self) -> Result<(OperatorModel<f64>, DVector<f64>)> {
        let f = self.emphatic_f()?;
        etd0_fixed_point(&self.features, &f, &self.chain.p_pi, &self.chain.r_pi, self.gamma())
    }

    pub fn etd_lambda_fixed_point(&self, lambda: f64) -> Result<(OperatorModel<f64>, DVector<f64>)> {
        let f = self.emphatic_f()?;
        etd_lambda_fixed_point(
            &self.features,
            &f,
            &self.d_mu,
            &self.chain.p_pi,
            &self.chain.r_pi,
            self.gamma(),
            lambda,
        )
    }

    pub fn finite_b_operator(&self, lambda: f64, b: usize) -> Result<OperatorModel<f64>> {
        finite_b_operator(
            &self.features,
            &self.d_mu,
            &self.chain.p_pi,
            &self.chain.r_pi,
            self.gamma(),
            lambda,
            b,
        )
    }

    pub fn finite_b_fixed_point(&self, lambda: f64, b: usize) -> Result<DVector<f64>> {
        finite_b_fixed_point(
            &self.features,
            &self.d_mu,
            &self.chain.p_pi,
            &self.chain.r_pi,
            self.gamma(),
            lambda,
            b,
        )
    }

    /// `d_μ`-weighted projection of `V_π` onto the feature span.
    pub fn value_projection(&self) -> Result<DVector<f64>> {
        weighted_projection(&self.v_pi, &self.features, &self.d_mu)
    }
}
