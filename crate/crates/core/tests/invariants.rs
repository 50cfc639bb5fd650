//! Property tests spanning several modules.

mod common;

use std::sync::Arc;

use normflow::dynamics::{integrate_flow, AnnProblem, FlowConfig};
use normflow::gradients::{generalized_gradient, risk_and_gradient};
use normflow::manifold::rescale_full;
use normflow::one_neuron::{circle_g, OneNeuron};
use normflow::{
    Architecture, InputMeasure, Objective, ParamVector, Profile, QuadratureSettings, Smoothing, TargetFunction,
};
use proptest::prelude::*;

use common::*;

fn objective(profile: Profile) -> Objective {
    Objective::new(
        InputMeasure::unit_interval(),
        TargetFunction::profile(profile, 1).unwrap(),
        QuadratureSettings::default(),
    )
    .unwrap()
}

fn params(dims: &[usize], v: Vec<f64>) -> ParamVector {
    ParamVector::new(Arc::new(Architecture::new(dims).unwrap()), v).unwrap()
}

fn shallow(width: usize) -> impl Strategy<Value = ParamVector> {
    prop::collection::vec(-2.0..2.0f64, 3 * width + 1).prop_map(move |v| params(&[1, width, 1], v))
}

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        (0.0..1.0f64).prop_map(|center| Profile::AbsOffset { center }),
        (-2.0..2.0f64, -1.0..1.0f64).prop_map(|(slope, intercept)| Profile::Affine { slope, intercept }),
        prop::collection::vec(-1.0..1.0f64, 1..4).prop_map(|coeffs| Profile::Polynomial { coeffs }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rescaling_keeps_realization_with_dead_neurons(theta in shallow(4), dead in 0usize..4) {
        let mut v = theta.into_values();
        // zero the incoming weight and bias of one neuron
        v[dead] = 0.0;
        v[4 + dead] = 0.0;
        let theta = params(&[1, 4, 1], v);
        let obj = objective(Profile::AbsOffset { center: 0.3 });
        let r = rescale_full(&theta);
        for i in 0..=50 {
            let x = [i as f64 / 50.0];
            let a = obj.realize(&theta, &x, Smoothing::Exact).unwrap()[0];
            let b = obj.realize(&r, &x, Smoothing::Exact).unwrap()[0];
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn risk_is_nonnegative_and_permutation_invariant(theta in shallow(3), p in profile()) {
        let obj = objective(p);
        let risk = obj.risk(&theta, Smoothing::Exact).unwrap();
        prop_assert!(risk >= 0.0);
        // swap hidden neurons 0 and 2 with their outgoing weights
        let mut v = theta.as_slice().to_vec();
        for (a, b) in [(0, 2), (3, 5), (6, 8)] {
            v.swap(a, b);
        }
        let swapped = obj.risk(&theta.with_values(v).unwrap(), Smoothing::Exact).unwrap();
        prop_assert!((risk - swapped).abs() <= 1e-12 * (1.0 + risk));
    }

    #[test]
    fn smoothed_risk_approaches_relu_risk(theta in shallow(3)) {
        let obj = objective(Profile::AbsOffset { center: 0.3 });
        let exact = obj.risk(&theta, Smoothing::Exact).unwrap();
        let fine = obj.risk(&theta, Smoothing::Smoothed(1_000_000)).unwrap();
        prop_assert!((fine - exact).abs() <= 1e-4 * (1.0 + exact));
    }

    #[test]
    fn inactive_smoothing_gives_the_generalized_gradient(
        w in 0.1..2.0f64, b in 0.05..1.0f64, v in -2.0..2.0f64, c in -1.0..1.0f64,
    ) {
        // pre-activations lie in [b, w + b], clear of the smoothing band (0, 1/100)
        let theta = params(&[1, 1, 1], vec![w, b, v, c]);
        let obj = objective(Profile::AbsOffset { center: 0.4 });
        let smooth = risk_and_gradient(&obj, &theta, Smoothing::Smoothed(100)).unwrap().gradient;
        let general = generalized_gradient(&obj, &theta).unwrap();
        for (x, y) in smooth.iter().zip(&general) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn one_neuron_flow_stays_on_circle_and_descends(
        phi in 0.0..std::f64::consts::TAU, t3 in -2.0..2.0f64, p in profile(),
    ) {
        let problem = OneNeuron::new(p).unwrap();
        let cfg = FlowConfig { t_end: 2.0, step: 1e-3, reproject: false, ..FlowConfig::default() };
        let rec = integrate_flow(&problem, &[phi.cos(), phi.sin(), t3], &cfg).unwrap();
        for s in &rec.states {
            prop_assert!((circle_g(s) - 1.0).abs() <= 1e-6);
        }
        for w in rec.risk.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8);
        }
    }

    #[test]
    fn deep_flow_keeps_unit_neurons(v in prop::collection::vec(-1.5..1.5f64, 37)) {
        let dims = [2, 4, 4, 1];
        let theta = params(&dims, v);
        prop_assume!(theta.min_hidden_norm() > 0.1);
        let obj = Objective::new(
            InputMeasure::uniform(0.0, 1.0, 2).unwrap(),
            TargetFunction::profile(Profile::AbsOffset { center: 0.3 }, 1).unwrap(),
            QuadratureSettings::default().with_nodes_per_axis(16),
        )
        .unwrap();
        let problem = AnnProblem::new(obj, ParamVector::zeros(theta.arch_arc().clone())).unwrap();
        let cfg = FlowConfig { t_end: 0.1, step: 1e-3, reproject: false, ..FlowConfig::default() };
        let rec = integrate_flow(&problem, theta.as_slice(), &cfg).unwrap();
        for s in &rec.states {
            prop_assert!(psi_deviation(s, &dims) <= 1e-6);
        }
    }
}
