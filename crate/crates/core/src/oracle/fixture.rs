//! The canonical small instance and its frozen oracle values.

use serde::{Deserialize, Serialize};

use super::enumerate_paths;
use crate::error::Result;
use crate::model::{lazy_srw, BridgeSpec, Potential};

pub const CANONICAL_JSON: &str = include_str!("../../fixtures/canonical_n6.json");
pub const CANONICAL_UPPER: f64 = 10.0;
pub const CANONICAL_LOWER: f64 = 5.0;

/// Lazy walk, `V(x) = |x|`, `λ = 0.3`, `N = 6`, `a = 0`, `b = 1`, `K = 6`.
pub fn canonical_spec() -> BridgeSpec {
    BridgeSpec::new(lazy_srw(), Potential::Linear, 0.3, 6, 0, 1, 6).expect("canonical spec is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFixture {
    pub z: f64,
    /// `marginals[k][x] = P(X_k = x)`.
    pub marginals: Vec<Vec<f64>>,
    /// `covariance[i][j] = Cov(X_i, X_j)`.
    pub covariance: Vec<Vec<f64>>,
    pub area_upper_threshold: f64,
    pub area_lower_threshold: f64,
    pub area_upper: f64,
    pub area_lower: f64,
    /// `(area, probability)`.
    pub area_law: Vec<(usize, f64)>,
}

impl CanonicalFixture {
    /// Largest relative deviation from `other` over Z, marginals and area
    /// events; covariances count absolutely. Infinite on a shape mismatch.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        let rel = |a: f64, b: f64| {
            if a == b {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs())
            }
        };
        let same_shape = self.marginals.len() == other.marginals.len()
            && self.covariance.len() == other.covariance.len()
            && self.area_law.len() == other.area_law.len()
            && self
                .marginals
                .iter()
                .zip(&other.marginals)
                .all(|(a, b)| a.len() == b.len());
        if !same_shape {
            return f64::INFINITY;
        }
        let mut worst = rel(self.z, other.z)
            .max(rel(self.area_upper, other.area_upper))
            .max(rel(self.area_lower, other.area_lower));
        for (a, b) in self.marginals.iter().flatten().zip(other.marginals.iter().flatten()) {
            worst = worst.max(rel(*a, *b));
        }
        for (a, b) in self.covariance.iter().flatten().zip(other.covariance.iter().flatten()) {
            worst = worst.max((a - b).abs());
        }
        worst
    }
}

/// Recomputes the fixture by enumeration.
pub fn canonical_fixture() -> Result<CanonicalFixture> {
    let spec = canonical_spec();
    let law = enumerate_paths(&spec)?;
    let n = spec.n;
    let marginals = (0..=n).map(|k| law.marginal(k, spec.k)).collect();
    let covariance = (0..=n)
        .map(|i| (0..=n).map(|j| law.covariance(i, j)).collect())
        .collect();
    let (area_upper, area_lower) = law.area_events(CANONICAL_UPPER, CANONICAL_LOWER);
    Ok(CanonicalFixture {
        z: law.z,
        marginals,
        covariance,
        area_upper_threshold: CANONICAL_UPPER,
        area_lower_threshold: CANONICAL_LOWER,
        area_upper,
        area_lower,
        area_law: law.area_law().into_iter().collect(),
    })
}

/// The versioned fixture shipped with the crate.
pub fn frozen_fixture() -> CanonicalFixture {
    serde_json::from_str(CANONICAL_JSON).expect("shipped fixture parses")
}
