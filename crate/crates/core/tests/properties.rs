use proptest::prelude::*;

use prewet::model::{builtin_steps, solve_h, BridgeSpec, Potential, StepDistribution};
use prewet::rng::{tag, StreamRng};
use prewet::sampler::exact_sample;
use prewet::transfer::{
    area_statistics, build_tables, build_tables_auto, build_tables_unchecked, partition_ratio, AreaQuery,
    RECOMBINATION_TOL,
};

fn step_strategy() -> impl Strategy<Value = StepDistribution> {
    (0..3usize).prop_map(|i| builtin_steps()[i].1.clone())
}

fn potential_strategy() -> impl Strategy<Value = Potential> {
    prop_oneof![
        Just(Potential::Linear),
        (1.0f64..3.0).prop_map(|b| Potential::power(b).unwrap()),
    ]
}

fn spec_strategy() -> impl Strategy<Value = BridgeSpec> {
    (
        step_strategy(),
        potential_strategy(),
        0.0f64..1.0,
        1usize..80,
        0usize..5,
        0usize..5,
        6usize..24,
    )
        .prop_map(|(step, pot, lambda, n, a, b, k)| BridgeSpec::new(step, pot, lambda, n, a, b, k).unwrap())
}

fn reachable(spec: &BridgeSpec) -> bool {
    build_tables_unchecked(spec).is_ok()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn partition_function_recombines_at_every_index(spec in spec_strategy()) {
        prop_assume!(reachable(&spec));
        let t = build_tables_unchecked(&spec).unwrap();
        prop_assert!(t.recombination_error() < RECOMBINATION_TOL);
    }

    #[test]
    fn marginals_are_probability_vectors(spec in spec_strategy()) {
        prop_assume!(reachable(&spec));
        let t = build_tables_unchecked(&spec).unwrap();
        for k in 0..=spec.n {
            let m = t.marginal(k).unwrap();
            prop_assert!(m.pmf.iter().all(|&p| p >= 0.0));
            prop_assert!((m.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert_eq!(t.marginal(0).unwrap().pmf[spec.a], 1.0);
    }

    #[test]
    fn partition_ratio_is_a_probability(spec in spec_strategy()) {
        prop_assume!(reachable(&spec));
        let spec = spec.with_tail_tolerance(1e-6).unwrap();
        prop_assume!(build_tables(&spec).is_ok());
        let free = spec.clone().with_lambda(0.0).unwrap();
        prop_assume!(build_tables(&free).is_ok());
        let r = partition_ratio(&spec, &free).unwrap();
        prop_assert!(r > 0.0 && r <= 1.0);
        if spec.lambda == 0.0 {
            prop_assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn z_decreases_in_lambda(spec in spec_strategy(), dl in 0.01f64..0.5) {
        prop_assume!(reachable(&spec) && spec.n >= 2);
        let heavier = spec.clone().with_lambda(spec.lambda + dl).unwrap();
        let z0 = build_tables_unchecked(&spec).unwrap().log_z();
        let z1 = build_tables_unchecked(&heavier).unwrap().log_z();
        prop_assert!(z1 < z0);
    }

    #[test]
    fn marginal_means_do_not_increase_in_lambda(spec in spec_strategy(), dl in 0.01f64..0.5) {
        prop_assume!(reachable(&spec));
        let heavier = spec.clone().with_lambda(spec.lambda + dl).unwrap();
        let t0 = build_tables_unchecked(&spec).unwrap();
        let t1 = build_tables_unchecked(&heavier).unwrap();
        for k in 1..spec.n {
            prop_assert!(t1.mean(k).unwrap() <= t0.mean(k).unwrap() + 1e-10);
        }
    }

    #[test]
    fn doubling_truncation_barely_moves_z(
        step in step_strategy(),
        lambda in 0.01f64..1.0,
        n in 2usize..200,
    ) {
        let spec = BridgeSpec::with_default_truncation(step, Potential::Linear, lambda, n, 0, 0).unwrap();
        let t = build_tables_auto(&spec).unwrap();
        let accepted = t.spec().clone();
        let wide = accepted.clone().with_truncation(2 * accepted.k).unwrap();
        let t2 = build_tables(&wide).unwrap();
        prop_assert!((t2.log_z() - t.log_z()).exp_m1().abs() < 10.0 * spec.tail_tolerance);
    }

    #[test]
    fn area_buckets_bracket_the_exact_law(
        lambda in 0.05f64..0.5,
        n in 5usize..40,
        g in 2usize..6,
        up in 1.0f64..3.0,
        lo in 0.1f64..0.9,
    ) {
        let spec = BridgeSpec::with_default_truncation(
            prewet::model::lazy_srw(), Potential::Linear, lambda, n, 0, 0,
        ).unwrap();
        let t = build_tables(&spec).unwrap();
        let mean = t.mean_area();
        let exact = area_statistics(&t, &AreaQuery::exact((up * mean).ceil(), (lo * mean).floor())).unwrap();
        let mut q = AreaQuery::exact((up * mean).ceil(), (lo * mean).floor());
        q.bucket = g;
        let coarse = area_statistics(&t, &q).unwrap();
        let tol = 1e-12;
        prop_assert!(coarse.upper.lo <= exact.upper.value + tol && exact.upper.value <= coarse.upper.hi + tol);
        prop_assert!(coarse.lower.lo <= exact.lower.value + tol && exact.lower.value <= coarse.lower.hi + tol);
    }

    #[test]
    fn covariance_is_symmetric_with_nonnegative_variance(spec in spec_strategy()) {
        prop_assume!(reachable(&spec) && spec.n >= 2);
        let t = build_tables_unchecked(&spec).unwrap();
        let mid = spec.n / 2;
        prop_assert!(t.covariance(mid, mid).unwrap() >= -1e-12);
        let c = t.covariance(1, spec.n - 1).unwrap();
        let var1 = t.covariance(1, 1).unwrap().max(0.0);
        let var2 = t.covariance(spec.n - 1, spec.n - 1).unwrap().max(0.0);
        prop_assert!(c.abs() <= (var1 * var2).sqrt() + 1e-9);
    }

    #[test]
    fn samples_respect_path_invariants(spec in spec_strategy(), seed in any::<u64>()) {
        prop_assume!(reachable(&spec));
        let t = build_tables_unchecked(&spec).unwrap();
        let mut rng = StreamRng::for_task(seed, tag::TEST, 0, 0);
        for _ in 0..50 {
            prop_assert!(exact_sample(&t, &mut rng).check().is_ok());
        }
    }

    #[test]
    fn scale_decreases_in_lambda(pot in potential_strategy(), l in 1e-6f64..1.0, f in 1.1f64..10.0) {
        let h0 = solve_h(&pot, 1.0, l).unwrap();
        let h1 = solve_h(&pot, 1.0, l * f).unwrap();
        prop_assert!(h1 < h0);
        // λ H² V(2H) = 1 at the root
        let residual = l * h0 * h0 * pot.value(2.0 * h0) - 1.0;
        prop_assert!(residual.abs() < 1e-9);
    }
}
