//! Random ergodic MDP instances shared by the property suites.

#![allow(dead_code)]

use nalgebra::DVector;
use per_etd::features::FeatureMap;
use per_etd::mdp::{induced_chain, stationary_distribution, FiniteMdp, InducedChain, Policy};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct Instance {
    pub mdp: FiniteMdp<f64>,
    pub target: Policy<f64>,
    pub behavior: Policy<f64>,
    pub features: FeatureMap<f64>,
}

impl Instance {
    pub fn chain(&self) -> InducedChain<f64> {
        induced_chain(&self.mdp, &self.target).unwrap()
    }

    pub fn d_mu(&self) -> DVector<f64> {
        let c = induced_chain(&self.mdp, &self.behavior).unwrap();
        stationary_distribution(&c.p_pi, 1e-12).unwrap()
    }
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Strictly positive simplex vectors, so every chain is ergodic and every
/// target action is covered.
fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(normalize)
}

pub fn instance(max_states: usize, max_dim: usize) -> impl Strategy<Value = Instance> {
    (2..=max_states, 1..=3usize, 1..=max_dim, 0.1f64..0.95).prop_flat_map(|(n, k, d, gamma)| {
        let d = d.min(n);
        (
            prop::collection::vec(prop::collection::vec(simplex(n), k), n),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, k), n),
            prop::collection::vec(simplex(k), n),
            prop::collection::vec(simplex(k), n),
            prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), n),
        )
            .prop_filter_map("rank-deficient features", move |(p, r, pi, mu, phi)| {
                let features = FeatureMap::from_rows(&phi).ok()?;
                Some(Instance {
                    mdp: FiniteMdp::new(p, r, gamma).ok()?,
                    target: Policy::new(pi).ok()?,
                    behavior: Policy::new(mu).ok()?,
                    features,
                })
            })
    })
}
