mod common;

use common::{instance, Instance};
use nalgebra::{DMatrix, DVector};
use per_etd::algorithms::{
    run_training, AlgoConfig, AlgoKind, StartState, StepsizeSchedule, TrainingOptions, TrainingSetup,
};
use per_etd::features::{weighted_projection, ProjectionBall};
use per_etd::fixed_points::*;
use per_etd::mdp::{rho_max, stationary_distribution, value_function, Policy};
use proptest::prelude::*;

fn residual_ok(model: &OperatorModel<f64>, theta: &DVector<f64>) -> bool {
    model.apply(theta).norm() <= 1e-10 * (1.0 + model.c_vector.norm())
}

fn well_conditioned(model: &OperatorModel<f64>) -> bool {
    model.condition_number() < 1e6
}

fn permuted(p: &Policy<f64>, perm: &[usize]) -> Policy<f64> {
    Policy::new(perm.iter().map(|&s| p.row(s).to_vec()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn induced_rows_are_stochastic(inst in instance(8, 3)) {
        let c = inst.chain();
        for s in 0..inst.mdp.n_states() {
            prop_assert!((c.p_pi.row(s).sum() - 1.0).abs() <= 1e-12);
            prop_assert!(c.p_pi.row(s).iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn stationary_distribution_is_invariant(inst in instance(8, 3)) {
        let c = inst.chain();
        let d = stationary_distribution(&c.p_pi, 1e-12).unwrap();
        prop_assert!((d.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(d.iter().all(|&x| x > 0.0));
        prop_assert!((c.p_pi.tr_mul(&d) - &d).abs().sum() <= 1e-10);
    }

    #[test]
    fn value_function_satisfies_bellman(inst in instance(8, 3)) {
        let c = inst.chain();
        let v = value_function(&c, inst.mdp.gamma()).unwrap();
        let resid = &v - &c.r_pi - &c.p_pi * &v * inst.mdp.gamma();
        prop_assert!(resid.amax() <= 1e-10 * (1.0 + v.amax()));
    }

    #[test]
    fn rho_max_ignores_state_labels(inst in instance(8, 1), seed in any::<u64>()) {
        let n = inst.mdp.n_states();
        let mut perm: Vec<usize> = (0..n).collect();
        // Deterministic shuffle driven by the proptest seed.
        let mut x = seed | 1;
        for i in (1..n).rev() {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            perm.swap(i, (x % (i as u64 + 1)) as usize);
        }
        let base = rho_max(&inst.target, &inst.behavior).unwrap();
        let relabeled = rho_max(&permuted(&inst.target, &perm), &permuted(&inst.behavior, &perm)).unwrap();
        prop_assert_eq!(base, relabeled);
        prop_assert!(base >= 1.0 - 1e-12);
    }

    #[test]
    fn mass_identity(inst in instance(8, 3)) {
        let gamma = inst.mdp.gamma();
        let f = emphatic_f(&inst.d_mu(), &inst.chain().p_pi, gamma).unwrap();
        prop_assert!((f.sum() - 1.0 / (1.0 - gamma)).abs() <= 1e-10 * (1.0 / (1.0 - gamma)));
    }

    #[test]
    fn fixed_points_zero_the_operator(inst in instance(8, 4), lambda in 0.0f64..=1.0, b in 1usize..12) {
        let Instance { features, mdp, .. } = &inst;
        let c = inst.chain();
        let d_mu = inst.d_mu();
        let gamma = mdp.gamma();
        let f = emphatic_f(&d_mu, &c.p_pi, gamma).unwrap();

        let (model, theta) = etd0_fixed_point(features, &f, &c.p_pi, &c.r_pi, gamma).unwrap();
        prop_assert!(residual_ok(&model, &theta));

        let (model, theta) = etd_lambda_fixed_point(features, &f, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda).unwrap();
        prop_assert!(residual_ok(&model, &theta));

        let model = finite_b_operator(features, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda, b).unwrap();
        if well_conditioned(&model) {
            let theta = finite_b_fixed_point(features, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda, b).unwrap();
            prop_assert!(residual_ok(&model, &theta));
        }
    }

    #[test]
    fn emphatic_key_matrix_is_monotone(inst in instance(8, 4), lambda in 0.0f64..=1.0) {
        let c = inst.chain();
        let d_mu = inst.d_mu();
        let gamma = inst.mdp.gamma();
        let f = emphatic_f(&d_mu, &c.p_pi, gamma).unwrap();
        let (model, _) = etd_lambda_fixed_point(&inst.features, &f, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda).unwrap();
        let mu = monotonicity_constant(&model.a_matrix).unwrap();
        let lip = lipschitz_constant(&model.a_matrix);
        prop_assert!(mu > 0.0);
        prop_assert!(mu <= lip * (1.0 + 1e-12));
    }

    #[test]
    fn lambda_one_is_the_weighted_projection(inst in instance(8, 4)) {
        let c = inst.chain();
        let d_mu = inst.d_mu();
        let gamma = inst.mdp.gamma();
        let f = emphatic_f(&d_mu, &c.p_pi, gamma).unwrap();
        let (_, theta) = etd_lambda_fixed_point(&inst.features, &f, &d_mu, &c.p_pi, &c.r_pi, gamma, 1.0).unwrap();
        let v = value_function(&c, gamma).unwrap();
        let proj = weighted_projection(&v, &inst.features, &d_mu).unwrap();
        prop_assert!((theta - &proj).norm() <= 1e-8 * (1.0 + proj.norm()));
    }

    #[test]
    fn zero_lambda_finite_period_uses_truncated_followon(inst in instance(8, 4), b in 0usize..10) {
        let c = inst.chain();
        let d_mu = inst.d_mu();
        let gamma = inst.mdp.gamma();
        // f̄_b = Σ_{k≤b} (γP_πᵀ)^k d_μ, built term by term.
        let mut term = d_mu.clone();
        let mut f_bar = d_mu.clone();
        for _ in 0..b {
            term = c.p_pi.tr_mul(&term) * gamma;
            f_bar += &term;
        }
        let phi = inst.features.phi();
        let n = inst.mdp.n_states();
        let weighting = phi.transpose() * DMatrix::from_diagonal(&f_bar);
        let bellman = DMatrix::identity(n, n) - &c.p_pi * gamma;
        let a = &weighting * bellman * phi;
        let model = finite_b_operator(&inst.features, &d_mu, &c.p_pi, &c.r_pi, gamma, 0.0, b).unwrap();
        prop_assert!((model.a_matrix - a).amax() <= 1e-12 * (1.0 + f_bar.amax()));
        prop_assert!((model.c_vector - weighting * &c.r_pi).amax() <= 1e-12 * (1.0 + f_bar.amax()));
    }

    #[test]
    fn long_periods_approach_the_emphatic_fixed_point(inst in instance(6, 3), lambda in 0.0f64..=1.0) {
        let c = inst.chain();
        let d_mu = inst.d_mu();
        let gamma = inst.mdp.gamma();
        let f = emphatic_f(&d_mu, &c.p_pi, gamma).unwrap();
        let (model, theta) = etd_lambda_fixed_point(&inst.features, &f, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda).unwrap();
        prop_assume!(well_conditioned(&model));
        // γ ≤ 0.95 so γ^1000 is far below the tolerance.
        let long = finite_b_fixed_point(&inst.features, &d_mu, &c.p_pi, &c.r_pi, gamma, lambda, 1000).unwrap();
        prop_assert!((long - &theta).norm() <= 1e-6 * (1.0 + theta.norm()));
    }

    #[test]
    fn snapshots_follow_the_stride(
        inst in instance(5, 2),
        kind in prop::sample::select(AlgoKind::ALL.to_vec()),
        b in 1usize..5,
        iters in 0u64..60,
        stride in 1u64..15,
        seed in any::<u64>(),
    ) {
        let algo = AlgoConfig::new(kind).with_b(b).with_lambda(0.5);
        let start = StartState::Distribution(inst.d_mu());
        let setup = TrainingSetup {
            mdp: &inst.mdp,
            target: &inst.target,
            behavior: &inst.behavior,
            features: &inst.features,
            start: &start,
        };
        let sched = StepsizeSchedule::constant(0.01).unwrap();
        let opts = TrainingOptions { stride, theta0: None };
        let run = run_training(&algo, &setup, &sched, &ProjectionBall::Disabled, iters, seed, &opts).unwrap();
        prop_assert!(!run.diverged);
        let iter_list: Vec<u64> = run.snapshots.iter().map(|s| s.iter).collect();
        let mut expected: Vec<u64> = (0..=iters).step_by(stride as usize).collect();
        if *expected.last().unwrap() != iters {
            expected.push(iters);
        }
        prop_assert_eq!(iter_list, expected);
        for s in &run.snapshots {
            prop_assert_eq!(s.transitions, s.iter * kind.transitions_per_iter(b));
        }
    }

    #[test]
    fn projection_keeps_iterates_in_the_ball(
        inst in instance(5, 3),
        kind in prop::sample::select(vec![AlgoKind::Etd0, AlgoKind::EtdLambda, AlgoKind::PerEtd0, AlgoKind::PerEtdLambda]),
        radius in 0.01f64..2.0,
        seed in any::<u64>(),
    ) {
        let algo = AlgoConfig::new(kind).with_b(3).with_lambda(0.3);
        let start = StartState::Fixed(0);
        let setup = TrainingSetup {
            mdp: &inst.mdp,
            target: &inst.target,
            behavior: &inst.behavior,
            features: &inst.features,
            start: &start,
        };
        let sched = StepsizeSchedule::constant(0.5).unwrap();
        let ball = ProjectionBall::with_radius(radius).unwrap();
        let run = run_training(&algo, &setup, &sched, &ball, 50, seed, &TrainingOptions::default()).unwrap();
        for s in &run.snapshots {
            prop_assert!(s.theta.norm() <= radius * (1.0 + 1e-12));
        }
    }
}
