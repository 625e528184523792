use prewet::exec::Execution;
use prewet::model::{builtin_steps, lazy_srw, BridgeSpec, Potential};
use prewet::oracle::{canonical_spec, enumerate_paths, frozen_fixture, identity_suite};
use prewet::transfer::{area_statistics, build_tables, build_tables_unchecked, AreaQuery};

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn transfer_matches_frozen_fixture() {
    let fx = frozen_fixture();
    let t = build_tables(&canonical_spec()).unwrap();
    assert!(rel(t.z(), fx.z) < 1e-12);
    for (k, pmf) in fx.marginals.iter().enumerate() {
        let m = t.marginal(k).unwrap();
        for (x, p) in pmf.iter().enumerate() {
            assert!((m.pmf[x] - p).abs() <= 1e-12 * p.max(1e-3), "k={k} x={x}");
        }
    }
    for i in 0..=6 {
        for j in i..=6 {
            let c = t.covariance(i, j).unwrap();
            assert!((c - fx.covariance[i][j]).abs() < 1e-12, "({i},{j})");
        }
    }
    let q = AreaQuery::exact(fx.area_upper_threshold, fx.area_lower_threshold);
    let a = area_statistics(&t, &q).unwrap();
    assert!(rel(a.upper.value, fx.area_upper) < 1e-10);
    assert!(rel(a.lower.value, fx.area_lower) < 1e-10);
}

#[test]
fn transfer_matches_enumeration_across_catalog() {
    for (name, step) in builtin_steps() {
        for pot in [Potential::Linear, Potential::power(2.0).unwrap()] {
            for (n, a, b, lambda) in [(5, 0, 0, 0.0), (7, 1, 2, 0.2), (4, 3, 0, 1.0)] {
                let spec = BridgeSpec::new(step.clone(), pot.clone(), lambda, n, a, b, 5).unwrap();
                let law = enumerate_paths(&spec).unwrap();
                let t = build_tables_unchecked(&spec).unwrap();
                assert!(rel(t.z(), law.z) < 1e-11, "{name} {n} {lambda}: {} vs {}", t.z(), law.z);
                for k in 0..=n {
                    let m = t.marginal(k).unwrap();
                    for (x, p) in law.marginal(k, 5).iter().enumerate() {
                        assert!((m.pmf[x] - p).abs() < 1e-12, "{name} k={k} x={x}");
                    }
                }
                let c = t.covariance(1, n - 1).unwrap();
                assert!((c - law.covariance(1, n - 1)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn free_bridge_ratio_matches_enumeration() {
    for n in 2..=10 {
        for b in 0..=2 {
            let free = BridgeSpec::new(lazy_srw(), Potential::Linear, 0.0, n, 0, b, 6).unwrap();
            let law = enumerate_paths(&free).unwrap();
            let t = build_tables_unchecked(&free).unwrap();
            assert!(rel(t.z(), law.z) < 1e-12);
        }
    }
}

#[test]
fn identity_grid_holds() {
    let r = identity_suite(Execution::Parallel).unwrap();
    assert!(r.exchangeability_exact);
    assert!(r.xi_second_moment_bounded);
    assert!(r.chebyshev_holds && r.chebyshev_cases > 0);
    assert!(r.etemadi_holds);
    assert!(r.small_droplet.zeta > 0.0);
    assert!(r.passed(), "{r:?}");
    for p in &r.max_tail.points {
        assert!(p.3 <= r.max_tail.c * (p.0 as f64).powf(1.5) / (p.2 * p.2) as f64 * (1.0 + 1e-12));
    }
}
