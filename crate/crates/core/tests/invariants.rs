use proptest::prelude::*;

use erw_core::env_model::{build_example, stationary_distribution, validate_system, ExampleFamily};
use erw_core::parameters::{coupled_delta, derive, identity_suite, random_critical_system, IDENTITY_TOL};
use erw_core::rng::{substream, CounterRng};
use erw_core::simulators::blp::{simulate_backward_blp, simulate_forward_blp, BlpConfig};
use erw_core::simulators::coupling::{simulate_coupled_blp, CoupledConfig, CoupledModel};
use erw_core::simulators::stack::StackModel;
use erw_core::simulators::walk::{simulate_walk, WalkConfig};
use erw_core::statistics::ks::{ks_two_sample, normal_cdf};
use erw_core::statistics::tail::{kaplan_meier, tail_exponent, Observation, TailMethod};

fn geometric(alpha: f64, p1: f64) -> erw_core::env_model::CookieSystem {
    build_example(&ExampleFamily::Geometric { alpha, p1 }).unwrap()
}

// delta = (2 p1 - 1) / alpha on geometric stacks.
#[test]
fn geometric_oracles() {
    let d = derive(&geometric(0.5, 0.75)).unwrap();
    assert!((d.delta - 1.0).abs() < 1e-12);
    let d = derive(&geometric(0.1, 0.9)).unwrap();
    assert!((d.delta - 8.0).abs() < 1e-10);
    let d = derive(&geometric(0.2, 0.55)).unwrap();
    assert!((d.delta - 0.5).abs() < 1e-12);
}

#[test]
fn fair_coin_is_recurrent_with_zero_delta() {
    let sys = validate_system(vec![vec![1.0]], vec![0.5], vec![1.0]).unwrap();
    let d = derive(&sys).unwrap();
    assert!(d.delta.abs() < 1e-12 && d.delta_tilde.abs() < 1e-12);
}

#[test]
fn coupled_at_full_switch_matches_base() {
    let base = build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap();
    let c = coupled_delta(&[0.75, 0.4], base.p(), &base, 1.0, 1e-10).unwrap();
    let d0 = derive(&base).unwrap().delta;
    assert!(c.delta_hat >= d0 - 1e-9);
    assert!((c.delta_hat - c.delta_hat_series).abs() < 1e-8 * c.delta_hat.abs().max(1.0));
}

#[test]
fn pareto_calibration_both_methods() {
    let mut rng = CounterRng::new(17);
    let obs: Vec<Observation> = (0..200_000)
        .map(|_| Observation::exact(rng.open_uniform().powf(-1.0 / 0.75)))
        .collect();
    let s = tail_exponent(&obs, TailMethod::SurvivalRegression, (4.0, 4096.0), 1).unwrap();
    assert!((s.exponent - 0.75).abs() < 0.05, "{}", s.exponent);
    let h = tail_exponent(&obs, TailMethod::Hill, (4.0, 4096.0), 1).unwrap();
    assert!((h.exponent - 0.75).abs() < 0.05, "{}", h.exponent);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identities_hold_on_random_critical_systems(seed in any::<u64>(), n in 1usize..6) {
        let sys = random_critical_system(&mut CounterRng::new(seed), n);
        let rep = identity_suite(&sys, 1e-10).unwrap();
        prop_assert!(rep.critical);
        prop_assert!(rep.max_residual() < IDENTITY_TOL, "{:?}", rep);
    }

    #[test]
    fn mirror_swaps_deltas(seed in any::<u64>(), n in 1usize..5) {
        let sys = random_critical_system(&mut CounterRng::new(seed), n);
        let d = derive(&sys).unwrap();
        let m = derive(&sys.mirrored()).unwrap();
        prop_assert!((d.delta - m.delta_tilde).abs() < 1e-8);
        prop_assert!((d.delta_tilde - m.delta).abs() < 1e-8);
        let twice = sys.mirrored().mirrored();
        prop_assert!(twice.p().iter().zip(sys.p()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn stationary_law_is_a_distribution(seed in any::<u64>(), n in 1usize..6) {
        let sys = random_critical_system(&mut CounterRng::new(seed), n);
        let law = stationary_distribution(&sys).unwrap();
        let total: f64 = law.mu.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        prop_assert!(law.mu.iter().all(|&m| m >= -1e-14));
    }

    #[test]
    fn walks_are_reproducible(key in any::<u64>(), alpha in 0.05f64..0.95, p1 in 0.05f64..0.95) {
        let model = StackModel::new(&geometric(alpha, p1));
        let cfg = WalkConfig { horizon: 2000, targets: vec![5, 10], stride: 7, ..Default::default() };
        let a = simulate_walk(&model, key, &cfg);
        prop_assert_eq!(&a, &simulate_walk(&model, key, &cfg));
        prop_assert_eq!(a.steps, 2000);
        let ends: Vec<i64> = a.positions.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
        prop_assert!(ends.iter().all(|&d| d <= 7));
    }

    #[test]
    fn blp_runs_are_reproducible(key in any::<u64>(), y0 in 1u64..20) {
        let model = StackModel::new(&geometric(0.5, 0.75));
        let cfg = BlpConfig { y0, horizon: 500, ..Default::default() };
        prop_assert_eq!(simulate_forward_blp(&model, key, &cfg), simulate_forward_blp(&model, key, &cfg));
        prop_assert_eq!(simulate_backward_blp(&model, key, &cfg), simulate_backward_blp(&model, key, &cfg));
    }

    #[test]
    fn coupling_is_monotone(key in any::<u64>(), eps in 0.01f64..1.0, y0 in 1u64..10) {
        let base = build_example(&ExampleFamily::TwoType { alpha: 0.3, p: 0.7 }).unwrap();
        let c = coupled_delta(&[0.75, 0.4], base.p(), &base, eps, 1e-10).unwrap();
        let cm = CoupledModel::new(&c);
        let run = simulate_coupled_blp(&cm, substream(key, 0), &CoupledConfig { y0, horizon: 60, value_cap: 2_000 });
        prop_assert_eq!(run.forward_violations, 0);
        prop_assert_eq!(run.backward_violations, 0);
    }

    #[test]
    fn kaplan_meier_is_nonincreasing(values in prop::collection::vec((1.0f64..100.0, any::<bool>()), 1..60)) {
        let obs: Vec<Observation> = values.iter().map(|&(v, c)| Observation { value: v, censored: c }).collect();
        let at: Vec<f64> = (0..50).map(|i| 1.0 + 2.0 * i as f64).collect();
        let s = kaplan_meier(&obs, &at);
        prop_assert!(s.iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert!(s.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn ks_two_sample_is_symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..40), b in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let d = ks_two_sample(&a, &b);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - ks_two_sample(&b, &a)).abs() < 1e-15);
        prop_assert!(ks_two_sample(&a, &a) < 1e-15);
    }

    #[test]
    fn normal_cdf_is_odd_about_half(x in -8.0f64..8.0) {
        prop_assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-12);
    }
}
