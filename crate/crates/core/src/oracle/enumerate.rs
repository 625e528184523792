use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::BridgeSpec;

/// Largest number of candidate paths `(K+1)^(N-1)` the enumerator accepts.
pub const ENUMERATION_BUDGET: u128 = 100_000_000;
pub const MAX_ENUMERATION_N: usize = 12;
pub const MAX_ENUMERATION_K: usize = 8;

/// Exact law of the tilted bridge on `0..=K` by listing every path.
#[derive(Debug, Clone)]
pub struct PathLaw {
    pub z: f64,
    /// Admissible paths `X_0..X_N` with their probabilities.
    pub paths: Vec<(Vec<usize>, f64)>,
}

pub fn enumerate_paths(spec: &BridgeSpec) -> Result<PathLaw> {
    spec.validate()?;
    let (n, k) = (spec.n, spec.k);
    if n > MAX_ENUMERATION_N || k > MAX_ENUMERATION_K {
        return Err(Error::Precondition(format!(
            "enumeration needs N <= {MAX_ENUMERATION_N} and K <= {MAX_ENUMERATION_K}, got N = {n}, K = {k}"
        )));
    }
    let candidates = (k as u128 + 1).pow(n.saturating_sub(1) as u32);
    if candidates > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            paths: candidates,
            budget: ENUMERATION_BUDGET,
        });
    }
    let boltzmann: Vec<f64> = (0..=k)
        .map(|x| (-spec.lambda * spec.potential.value(x as f64)).exp())
        .collect();

    let mut raw = Vec::new();
    let mut path = vec![spec.a];
    visit(spec, &boltzmann, &mut path, 1.0, &mut raw);

    let z: f64 = raw.iter().map(|(_, w)| w).sum();
    if !(z > 0.0) {
        return Err(Error::EmptyPathSpace);
    }
    let paths = raw.into_iter().map(|(p, w)| (p, w / z)).collect();
    Ok(PathLaw { z, paths })
}

fn visit(spec: &BridgeSpec, boltzmann: &[f64], path: &mut Vec<usize>, weight: f64, out: &mut Vec<(Vec<usize>, f64)>) {
    let i = path.len() - 1;
    let x = path[i] as i64;
    if i == spec.n {
        if path[i] == spec.b {
            out.push((path.clone(), weight));
        }
        return;
    }
    let last = i + 1 == spec.n;
    for y in 0..=spec.k {
        let p = spec.step.prob(y as i64 - x);
        if p == 0.0 || (last && y != spec.b) {
            continue;
        }
        let w = if last { p } else { p * boltzmann[y] };
        path.push(y);
        visit(spec, boltzmann, path, weight * w, out);
        path.pop();
    }
}

impl PathLaw {
    pub fn n(&self) -> usize {
        self.paths[0].0.len() - 1
    }

    /// `E[f(X)]`.
    pub fn expect(&self, f: impl Fn(&[usize]) -> f64) -> f64 {
        self.paths.iter().map(|(p, q)| q * f(p)).sum()
    }

    /// Law of `X_k` on `0..=K`.
    pub fn marginal(&self, k: usize, cap: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; cap + 1];
        for (p, q) in &self.paths {
            pmf[p[k]] += q;
        }
        pmf
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let mi = self.expect(|p| p[i] as f64);
        let mj = self.expect(|p| p[j] as f64);
        self.expect(|p| (p[i] as f64 - mi) * (p[j] as f64 - mj))
    }

    /// Law of `A = sum_{i=1}^{N} X_i`.
    pub fn area_law(&self) -> BTreeMap<usize, f64> {
        let mut law = BTreeMap::new();
        for (p, q) in &self.paths {
            *law.entry(p[1..].iter().sum()).or_insert(0.0) += q;
        }
        law
    }

    /// `(P(A >= upper), P(A <= lower))`.
    pub fn area_events(&self, upper: f64, lower: f64) -> (f64, f64) {
        let law = self.area_law();
        let up = law.iter().filter(|(a, _)| **a as f64 >= upper).map(|(_, q)| q).sum();
        let lo = law.iter().filter(|(a, _)| **a as f64 <= lower).map(|(_, q)| q).sum();
        (up, lo)
    }

    pub fn probability_of(&self, path: &[usize]) -> f64 {
        self.paths.iter().find(|(p, _)| p == path).map_or(0.0, |(_, q)| *q)
    }
}
