//! The shipped canonical fixture must equal a fresh enumeration.
//! Regenerate with `PREWET_BLESS=1 cargo test -p prewet --test fixture`.

use prewet::oracle::{canonical_fixture, frozen_fixture};

#[test]
fn canonical_fixture_is_current() {
    let fresh = canonical_fixture().unwrap();
    if std::env::var_os("PREWET_BLESS").is_some() {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/canonical_n6.json");
        std::fs::write(path, serde_json::to_string_pretty(&fresh).unwrap() + "\n").unwrap();
        return;
    }
    let frozen = frozen_fixture();
    assert_eq!(frozen.marginals.len(), fresh.marginals.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-14 * a.abs().max(b.abs()).max(1e-300);
    assert!(close(frozen.z, fresh.z));
    for (f, g) in frozen.marginals.iter().flatten().zip(fresh.marginals.iter().flatten()) {
        assert!(close(*f, *g), "{f} vs {g}");
    }
    for (f, g) in frozen
        .covariance
        .iter()
        .flatten()
        .zip(fresh.covariance.iter().flatten())
    {
        assert!((f - g).abs() <= 1e-14, "{f} vs {g}");
    }
    assert!(close(frozen.area_upper, fresh.area_upper));
    assert!(close(frozen.area_lower, fresh.area_lower));
    assert_eq!(frozen.area_law.len(), fresh.area_law.len());
    assert!(frozen.max_deviation(&fresh) <= 1e-14);
}
