//! Exact finite-volume computations for the area-tilted bridge by dynamic
//! programming over the truncated height lattice.
//!
//! `forward[k][x]` carries the weight of all admissible paths `0..=k` ending
//! at `x` (including the potential of site `k` when it is interior), and
//! `backward[k][x]` the weight of the continuations `k..=N` from `x`
//! (excluding site `k`). Every vector is rescaled to max-entry one after each
//! step; the removed factor is accumulated in a per-index log scale, so no
//! entry can underflow through the length of the bridge.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::{normalize_max, Kernel};
use crate::model::{solve_h, BridgeSpec};

/// Relative tolerance of the `k`-independence of the recombined partition function.
pub const RECOMBINATION_TOL: f64 = 1e-10;
/// Retries of [`build_tables_auto`] before giving up on truncation overflow.
pub const TRUNCATION_RETRIES: usize = 3;

#[derive(Debug, Clone)]
pub struct TransferTables {
    spec: BridgeSpec,
    kernel: Kernel,
    width: usize,
    forward: Vec<f64>,
    forward_log: Vec<f64>,
    backward: Vec<f64>,
    backward_log: Vec<f64>,
    log_z: f64,
}

/// Law of `X_k` on heights `0..=K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightMarginal {
    pub index: usize,
    pub pmf: Vec<f64>,
}

impl HeightMarginal {
    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// `E[X^p]`.
    pub fn moment(&self, p: f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(x, &q)| if x == 0 { 0.0 } else { (x as f64).powf(p) * q })
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(2.0) - m * m
    }

    /// `P(X > threshold)`, summed from the top so that tiny tails keep their
    /// relative accuracy.
    pub fn tail_above(&self, threshold: f64) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .rev()
            .take_while(|(x, _)| *x as f64 > threshold)
            .map(|(_, &q)| q)
            .sum()
    }
}

/// Builds the tables and checks the truncation invariant.
pub fn build_tables(spec: &BridgeSpec) -> Result<TransferTables> {
    let tables = build_tables_unchecked(spec)?;
    tables.check_truncation()?;
    Ok(tables)
}

/// Like [`build_tables`], doubling `K` on truncation overflow up to
/// [`TRUNCATION_RETRIES`] times.
pub fn build_tables_auto(spec: &BridgeSpec) -> Result<TransferTables> {
    let mut spec = spec.clone();
    let mut attempt = 0;
    loop {
        match build_tables(&spec) {
            Err(Error::TruncationOverflow { .. }) if attempt < TRUNCATION_RETRIES => {
                attempt += 1;
                spec = spec.clone().with_truncation(2 * spec.k.max(1))?;
            }
            other => return other,
        }
    }
}

/// Builds the tables for the measure restricted to heights `0..=K` without
/// the tail-mass check. Use when the height cap is part of the question.
pub fn build_tables_unchecked(spec: &BridgeSpec) -> Result<TransferTables> {
    spec.validate()?;
    let kernel = Kernel::from_spec(spec);
    let width = spec.k + 1;
    let n = spec.n;

    let mut forward = vec![0.0; (n + 1) * width];
    let mut forward_log = vec![0.0; n + 1];
    forward[spec.a] = 1.0;
    for k in 0..n {
        let (done, rest) = forward.split_at_mut((k + 1) * width);
        let cur = &done[k * width..];
        let next = &mut rest[..width];
        kernel.apply_left(cur, is_interior(k + 1, n), next);
        let scale = normalize_max(next).ok_or(Error::EmptyPathSpace)?;
        forward_log[k + 1] = forward_log[k] + scale;
    }
    let end = forward[n * width + spec.b];
    if !(end > 0.0) {
        return Err(Error::EmptyPathSpace);
    }
    let log_z = end.ln() + forward_log[n];

    let mut backward = vec![0.0; (n + 1) * width];
    let mut backward_log = vec![0.0; n + 1];
    backward[n * width + spec.b] = 1.0;
    for k in (0..n).rev() {
        let (head, tail) = backward.split_at_mut((k + 1) * width);
        let prev = &mut head[k * width..];
        let next = &tail[..width];
        kernel.apply_right(next, is_interior(k + 1, n), prev);
        let scale = normalize_max(prev).ok_or(Error::EmptyPathSpace)?;
        backward_log[k] = backward_log[k + 1] + scale;
    }

    Ok(TransferTables {
        spec: spec.clone(),
        kernel,
        width,
        forward,
        forward_log,
        backward,
        backward_log,
        log_z,
    })
}

fn is_interior(k: usize, n: usize) -> bool {
    k >= 1 && k < n
}

impl TransferTables {
    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.spec.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// Rescaled forward vector at `k`; the true vector is `exp(forward_log(k))` times this.
    pub fn forward(&self, k: usize) -> &[f64] {
        &self.forward[k * self.width..(k + 1) * self.width]
    }

    pub fn forward_log(&self, k: usize) -> f64 {
        self.forward_log[k]
    }

    pub fn backward(&self, k: usize) -> &[f64] {
        &self.backward[k * self.width..(k + 1) * self.width]
    }

    pub fn backward_log(&self, k: usize) -> f64 {
        self.backward_log[k]
    }

    /// Whether site `k` carries the potential.
    pub fn is_interior(&self, k: usize) -> bool {
        is_interior(k, self.spec.n)
    }

    /// `ln Z` recombined at index `k`.
    pub fn log_z_at(&self, k: usize) -> f64 {
        let dot: f64 = self.forward(k).iter().zip(self.backward(k)).map(|(f, b)| f * b).sum();
        dot.ln() + self.forward_log[k] + self.backward_log[k]
    }

    /// Largest relative deviation of the recombined `Z` from `Z` over all `k`.
    pub fn recombination_error(&self) -> f64 {
        (0..=self.spec.n)
            .map(|k| (self.log_z_at(k) - self.log_z).exp_m1().abs())
            .fold(0.0, f64::max)
    }

    fn check_truncation(&self) -> Result<()> {
        let level = self.spec.k.saturating_sub(self.spec.buffer());
        for k in 0..=self.spec.n {
            let m = self.marginal_unchecked(k);
            let mass = m.tail_above(level as f64);
            if mass >= self.spec.tail_tolerance {
                return Err(Error::TruncationOverflow {
                    index: k,
                    level,
                    mass,
                    tolerance: self.spec.tail_tolerance,
                    k: self.spec.k,
                });
            }
        }
        Ok(())
    }

    fn marginal_unchecked(&self, k: usize) -> HeightMarginal {
        let mut pmf: Vec<f64> = self
            .forward(k)
            .iter()
            .zip(self.backward(k))
            .map(|(f, b)| f * b)
            .collect();
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        HeightMarginal { index: k, pmf }
    }

    /// Law of `X_k`.
    pub fn marginal(&self, k: usize) -> Result<HeightMarginal> {
        if k > self.spec.n {
            return Err(Error::IndexOutOfRange {
                index: k,
                n: self.spec.n,
            });
        }
        Ok(self.marginal_unchecked(k))
    }

    /// `P(X_k > threshold)`.
    pub fn tail_probability(&self, k: usize, threshold: f64) -> Result<f64> {
        if !(threshold >= 0.0) {
            return Err(Error::param("threshold", format!("{threshold} must be >= 0")));
        }
        let limit = self.spec.k.saturating_sub(self.spec.buffer());
        if threshold > limit as f64 {
            return Err(Error::ThresholdBeyondTruncation { threshold, limit });
        }
        Ok(self.marginal(k)?.tail_above(threshold))
    }

    pub fn mean(&self, k: usize) -> Result<f64> {
        Ok(self.marginal(k)?.mean())
    }

    /// `Cov(X_i, X_j)` by propagating `forward[i] * x` through `j - i`
    /// kernel applications.
    pub fn covariance(&self, i: usize, j: usize) -> Result<f64> {
        if i > j {
            return Err(Error::IndexOrder { i, j });
        }
        Ok(self.covariance_profile(i, j)?[j - i])
    }

    /// `Cov(X_i, X_j)` for every `j` in `i..=j_max`, in one sweep.
    pub fn covariance_profile(&self, i: usize, j_max: usize) -> Result<Vec<f64>> {
        if i > j_max {
            return Err(Error::IndexOrder { i, j: j_max });
        }
        if j_max > self.spec.n {
            return Err(Error::IndexOutOfRange {
                index: j_max,
                n: self.spec.n,
            });
        }
        let means: Vec<f64> = (i..=j_max).map(|k| self.marginal_unchecked(k).mean()).collect();

        let mut v: Vec<f64> = self.forward(i).iter().enumerate().map(|(x, f)| f * x as f64).collect();
        let mut log_v = self.forward_log[i];
        let mut next = vec![0.0; self.width];
        let mut out = Vec::with_capacity(j_max - i + 1);
        for j in i..=j_max {
            if j > i {
                self.kernel.apply_left(&v, self.is_interior(j), &mut next);
                std::mem::swap(&mut v, &mut next);
                match normalize_max(&mut v) {
                    Some(s) => log_v += s,
                    None => {
                        // X_i = 0 almost surely
                        out.push(0.0);
                        continue;
                    }
                }
            }
            let dot: f64 = v
                .iter()
                .zip(self.backward(j))
                .enumerate()
                .map(|(y, (a, b))| a * b * y as f64)
                .sum();
            let cross = if dot > 0.0 {
                (dot.ln() + log_v + self.backward_log[j] - self.log_z).exp()
            } else {
                0.0
            };
            out.push(cross - means[0] * means[j - i]);
        }
        Ok(out)
    }

    /// `E[sum_{i=1}^{N} X_i]`.
    pub fn mean_area(&self) -> f64 {
        (1..=self.spec.n).map(|k| self.marginal_unchecked(k).mean()).sum()
    }
}

/// `Z^lambda / Z^0 = E^0[exp(-lambda sum V(X_j))]`.
pub fn partition_ratio(tilted: &BridgeSpec, free: &BridgeSpec) -> Result<f64> {
    if !tilted.same_except_lambda(free) {
        return Err(Error::SpecMismatch(
            "step, potential, N, boundary, K or tolerance".into(),
        ));
    }
    if free.lambda != 0.0 {
        return Err(Error::SpecMismatch(format!(
            "reference spec has lambda = {}, expected 0",
            free.lambda
        )));
    }
    let zl = build_tables(tilted)?.log_z();
    let z0 = build_tables(free)?.log_z();
    Ok((zl - z0).exp().min(1.0))
}

/// `P(max_{0<=k<=N} X_k <= cap)` under the tilted bridge, as a ratio of
/// partition functions of the lattice capped at `cap` and of `tables`.
pub fn max_height_probability(tables: &TransferTables, cap: usize) -> Result<f64> {
    let spec = tables.spec();
    if spec.a > cap || spec.b > cap {
        return Ok(0.0);
    }
    if cap >= spec.k {
        return Ok(1.0);
    }
    let capped = spec.clone().with_truncation(cap)?;
    match build_tables_unchecked(&capped) {
        Ok(t) => Ok((t.log_z() - tables.log_z()).exp().min(1.0)),
        Err(Error::EmptyPathSpace) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Probability reported together with a rigorous bracket `[lo, hi]` coming
/// from area bucketing. With unit buckets all three coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BracketedProbability {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Area events `{A >= upper}` and `{A <= lower}` for `A = sum_{i=1}^{N} X_i`.
#[derive(Debug, Clone, Copy)]
pub struct AreaQuery {
    pub upper_threshold: f64,
    pub lower_threshold: f64,
    /// Area bucket size `g`.
    pub bucket: usize,
    /// Cap on `(K+1) * N * buckets` cell updates per DP pass.
    pub budget: u128,
    pub exec: Execution,
}

pub const DEFAULT_AREA_BUDGET: u128 = 20_000_000_000;
/// Target number of buckets across the `H N` area scale.
pub const AREA_BUCKETS: f64 = 4096.0;

impl AreaQuery {
    pub fn exact(upper_threshold: f64, lower_threshold: f64) -> Self {
        Self {
            upper_threshold,
            lower_threshold,
            bucket: 1,
            budget: DEFAULT_AREA_BUDGET,
            exec: Execution::default(),
        }
    }

    /// Thresholds `delta^{-1} H N` and `delta H N` with `H = H_1(lambda)`,
    /// bucket `g = max(1, round(H N / 4096))`.
    pub fn from_delta(spec: &BridgeSpec, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::param("delta", format!("{delta} not in (0, 1]")));
        }
        let h = solve_h(&spec.potential, 1.0, spec.lambda)?;
        let hn = h * spec.n as f64;
        Ok(Self {
            upper_threshold: hn / delta,
            lower_threshold: delta * hn,
            bucket: ((hn / AREA_BUCKETS).round() as usize).max(1),
            budget: DEFAULT_AREA_BUDGET,
            exec: Execution::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaStatistics {
    pub mean: f64,
    pub upper: BracketedProbability,
    pub lower: BracketedProbability,
    pub bucket: usize,
}

#[derive(Clone, Copy)]
enum Rounding {
    Floor,
    Ceil,
}

/// Mean area and the two area-event probabilities.
pub fn area_statistics(tables: &TransferTables, query: &AreaQuery) -> Result<AreaStatistics> {
    if !(query.upper_threshold >= 0.0 && query.lower_threshold >= 0.0) {
        return Err(Error::param("threshold", "area thresholds must be >= 0"));
    }
    let g = query.bucket.max(1);
    let mean = tables.mean_area();
    let up_bucket = (query.upper_threshold / g as f64).ceil() as usize;
    let lo_bucket = (query.lower_threshold / g as f64).floor() as usize;
    let cap = up_bucket.max(lo_bucket + 1);

    let spec = tables.spec();
    let required = (spec.k as u128 + 1) * spec.n as u128 * (cap as u128 + 1);
    if required > query.budget {
        return Err(Error::AreaDpBudget {
            required,
            budget: query.budget,
        });
    }

    if g == 1 {
        let law = area_law(tables, cap, 1, Rounding::Floor, query.exec)?;
        let upper = law[up_bucket..].iter().sum::<f64>();
        let lower = law[..=lo_bucket].iter().sum::<f64>();
        return Ok(AreaStatistics {
            mean,
            upper: exact(upper),
            lower: exact(lower),
            bucket: 1,
        });
    }

    // floor(x/g) summed underestimates A/g, ceil(x/g) overestimates it
    let under = area_law(tables, cap, g, Rounding::Floor, query.exec)?;
    let over = area_law(tables, cap, g, Rounding::Ceil, query.exec)?;
    let up_lo = under[up_bucket..].iter().sum::<f64>();
    let up_hi = over[up_bucket..].iter().sum::<f64>();
    let low_lo = over[..=lo_bucket].iter().sum::<f64>();
    let low_hi = under[..=lo_bucket].iter().sum::<f64>();
    Ok(AreaStatistics {
        mean,
        upper: bracket(up_lo, up_hi),
        lower: bracket(low_lo, low_hi),
        bucket: g,
    })
}

fn exact(p: f64) -> BracketedProbability {
    BracketedProbability { value: p, lo: p, hi: p }
}

fn bracket(lo: f64, hi: f64) -> BracketedProbability {
    BracketedProbability {
        value: 0.5 * (lo + hi),
        lo,
        hi,
    }
}

/// Law of the quantized area at the right boundary, over buckets `0..=cap`
/// (the last bucket collects everything at or above `cap`).
fn area_law(tables: &TransferTables, cap: usize, g: usize, rounding: Rounding, exec: Execution) -> Result<Vec<f64>> {
    let spec = tables.spec();
    let kernel = tables.kernel();
    let heights = spec.k + 1;
    let stride = cap + 1;
    let contribution = |y: usize| match rounding {
        Rounding::Floor => y / g,
        Rounding::Ceil => y.div_ceil(g),
    };

    let mut cur = vec![0.0; heights * stride];
    let mut next = vec![0.0; heights * stride];
    cur[spec.a * stride] = 1.0;
    for k in 1..=spec.n {
        let interior = tables.is_interior(k);
        exec::for_each_chunk(exec, &mut next, stride, |y, row| {
            row.iter_mut().for_each(|r| *r = 0.0);
            let c = contribution(y);
            let w = if interior { kernel.weight(y) } else { 1.0 };
            for x in kernel.sources(y) {
                let p = kernel.step_prob(y as i64 - x as i64) * w;
                if p == 0.0 {
                    continue;
                }
                let src = &cur[x * stride..(x + 1) * stride];
                if c >= cap {
                    row[cap] += p * src.iter().sum::<f64>();
                    continue;
                }
                for (q, &s) in src[..stride - c].iter().enumerate() {
                    row[q + c] += p * s;
                }
                row[cap] += p * src[stride - c..].iter().sum::<f64>();
            }
        });
        std::mem::swap(&mut cur, &mut next);
        if normalize_max(&mut cur).is_none() {
            return Err(Error::EmptyPathSpace);
        }
    }
    let end = &cur[spec.b * stride..(spec.b + 1) * stride];
    let total: f64 = end.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyPathSpace);
    }
    Ok(end.iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lazy_srw, Potential};
    use approx::assert_relative_eq;

    fn lazy(lambda: f64, n: usize, a: usize, b: usize, k: usize) -> BridgeSpec {
        BridgeSpec::new(lazy_srw(), Potential::Linear, lambda, n, a, b, k).unwrap()
    }

    #[test]
    fn single_step_carries_no_potential() {
        for lambda in [0.0, 0.7, 5.0] {
            let t = build_tables(&lazy(lambda, 1, 0, 0, 3)).unwrap();
            assert_relative_eq!(t.z(), 0.5, max_relative = 1e-15);
            let t = build_tables(&lazy(lambda, 1, 2, 3, 5)).unwrap();
            assert_relative_eq!(t.z(), 0.25, max_relative = 1e-15);
        }
    }

    #[test]
    fn two_steps_two_terms() {
        let t = build_tables(&lazy(0.5, 2, 0, 0, 4)).unwrap();
        let expected = 0.25 * 0.25 * (-0.5f64).exp() + 0.5 * 0.5;
        assert_relative_eq!(t.z(), expected, max_relative = 1e-14);
    }

    #[test]
    fn two_step_free_mean_height() {
        let t = build_tables(&lazy(0.0, 2, 0, 0, 4)).unwrap();
        assert_relative_eq!(t.mean(1).unwrap(), 0.2, max_relative = 1e-14);
        assert_relative_eq!(t.z(), 5.0 / 16.0, max_relative = 1e-14);
    }

    #[test]
    fn boundary_marginals_are_point_masses() {
        let t = build_tables(&lazy(0.3, 6, 2, 1, 8)).unwrap();
        let m0 = t.marginal(0).unwrap();
        assert_eq!(m0.pmf[2], 1.0);
        let mn = t.marginal(6).unwrap();
        assert_relative_eq!(mn.pmf[1], 1.0, max_relative = 1e-14);
        assert!(t.marginal(7).is_err());
    }

    #[test]
    fn recombination_is_k_independent() {
        let spec = BridgeSpec::with_default_truncation(lazy_srw(), Potential::Linear, 1e-3, 3000, 0, 0).unwrap();
        let t = build_tables(&spec).unwrap();
        assert!(t.recombination_error() < RECOMBINATION_TOL);
        assert!(t.log_z().is_finite() && t.log_z() < 0.0);
    }

    #[test]
    fn long_bridges_do_not_underflow() {
        let spec = BridgeSpec::with_default_truncation(lazy_srw(), Potential::Linear, 1e-2, 200_000, 0, 0).unwrap();
        let t = build_tables(&spec).unwrap();
        assert!(t.log_z().is_finite());
        assert!(t.log_z() < -100.0);
    }

    #[test]
    fn truncation_overflow_and_auto_doubling() {
        // free walk of 400 steps spreads over ~20 sites
        let spec = lazy(0.0, 400, 0, 0, 10);
        assert!(matches!(build_tables(&spec), Err(Error::TruncationOverflow { .. })));
        let t = build_tables_auto(&spec.clone().with_truncation(20).unwrap()).unwrap();
        assert!(t.spec().k >= 80);
    }

    #[test]
    fn doubling_k_barely_moves_z() {
        let spec = BridgeSpec::with_default_truncation(lazy_srw(), Potential::Linear, 1e-2, 500, 0, 0).unwrap();
        let t1 = build_tables(&spec).unwrap();
        let t2 = build_tables(&spec.clone().with_truncation(2 * spec.k).unwrap()).unwrap();
        assert!((t2.log_z() - t1.log_z()).exp_m1().abs() < 10.0 * spec.tail_tolerance);
    }

    #[test]
    fn z_strictly_decreasing_in_lambda() {
        let zs: Vec<f64> = [0.0, 0.01, 0.1, 0.5, 1.0]
            .iter()
            .map(|&l| build_tables(&lazy(l, 8, 0, 0, 8)).unwrap().log_z())
            .collect();
        assert!(zs.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn partition_ratio_contract() {
        let free = lazy(0.0, 10, 0, 0, 10);
        let tilted = free.clone().with_lambda(0.3).unwrap();
        assert_eq!(partition_ratio(&free, &free).unwrap(), 1.0);
        let r = partition_ratio(&tilted, &free).unwrap();
        assert!(r > 0.0 && r < 1.0);
        let other = lazy(0.0, 11, 0, 0, 10);
        assert!(matches!(partition_ratio(&tilted, &other), Err(Error::SpecMismatch(_))));
        assert!(matches!(partition_ratio(&tilted, &tilted), Err(Error::SpecMismatch(_))));
        // no interior site can leave 0: N = 1
        let free1 = lazy(0.0, 1, 0, 0, 3);
        assert_eq!(
            partition_ratio(&free1.clone().with_lambda(2.0).unwrap(), &free1).unwrap(),
            1.0
        );
    }

    #[test]
    fn tail_probability_contract() {
        let t = build_tables(&lazy(0.3, 6, 0, 1, 6)).unwrap();
        let p = t.tail_probability(3, 0.0).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(matches!(
            t.tail_probability(3, 5.5),
            Err(Error::ThresholdBeyondTruncation { .. })
        ));
        assert!(t.tail_probability(3, 5.0).is_ok());
    }

    #[test]
    fn covariance_contract() {
        let t = build_tables(&lazy(0.3, 6, 0, 1, 6)).unwrap();
        assert!(matches!(t.covariance(4, 2), Err(Error::IndexOrder { i: 4, j: 2 })));
        for i in 1..6 {
            let var = t.covariance(i, i).unwrap();
            assert!(var >= 0.0);
            assert_relative_eq!(var, t.marginal(i).unwrap().variance(), max_relative = 1e-12);
        }
        let prof = t.covariance_profile(1, 5).unwrap();
        for (d, c) in prof.iter().enumerate() {
            assert_relative_eq!(*c, t.covariance(1, 1 + d).unwrap(), max_relative = 1e-14);
        }
    }

    #[test]
    fn free_bridge_height_grows_with_length() {
        let means: Vec<f64> = [50, 200, 800]
            .iter()
            .map(|&n| {
                let spec = lazy(0.0, n, 0, 0, 200);
                build_tables(&spec).unwrap().mean(n / 2).unwrap()
            })
            .collect();
        assert!(means.windows(2).all(|w| w[1] > w[0]));
        // diffusive: quadrupling N roughly doubles the height
        assert!((means[2] / means[1] - 2.0).abs() < 0.2);
    }

    #[test]
    fn marginal_means_decrease_in_lambda() {
        let lambdas = [0.0, 0.01, 0.05, 0.2, 1.0];
        let tabs: Vec<TransferTables> = lambdas
            .iter()
            .map(|&l| build_tables(&lazy(l, 40, 0, 0, 40)).unwrap())
            .collect();
        for k in 1..40 {
            let m: Vec<f64> = tabs.iter().map(|t| t.mean(k).unwrap()).collect();
            assert!(m.windows(2).all(|w| w[1] <= w[0] + 1e-12), "k = {k}: {m:?}");
        }
    }

    #[test]
    fn max_height_probability_bounds() {
        let t = build_tables(&lazy(0.1, 30, 0, 0, 30)).unwrap();
        let ps: Vec<f64> = (0..12).map(|h| max_height_probability(&t, h).unwrap()).collect();
        assert!(ps[0] > 0.0);
        assert!(ps.windows(2).all(|w| w[1] >= w[0]));
        assert!(*ps.last().unwrap() <= 1.0);
    }

    #[test]
    fn area_mean_and_events_on_two_steps() {
        // N = 2, a = b = 0: A = X_1 in {0, 1}
        let t = build_tables(&lazy(0.0, 2, 0, 0, 4)).unwrap();
        let s = area_statistics(&t, &AreaQuery::exact(1.0, 0.0)).unwrap();
        assert_relative_eq!(s.mean, 0.2, max_relative = 1e-14);
        assert_relative_eq!(s.upper.value, 0.2, max_relative = 1e-14);
        assert_relative_eq!(s.lower.value, 0.8, max_relative = 1e-14);
    }

    #[test]
    fn area_budget_enforced() {
        let t = build_tables(&lazy(0.1, 20, 0, 0, 20)).unwrap();
        let mut q = AreaQuery::exact(1e6, 1.0);
        q.budget = 1000;
        assert!(matches!(area_statistics(&t, &q), Err(Error::AreaDpBudget { .. })));
    }

    #[test]
    fn bucketed_area_brackets_exact() {
        let spec = lazy(0.05, 60, 0, 0, 40);
        let t = build_tables(&spec).unwrap();
        let exact = area_statistics(&t, &AreaQuery::exact(300.0, 120.0)).unwrap();
        let mut q = AreaQuery::exact(300.0, 120.0);
        q.bucket = 3;
        let b = area_statistics(&t, &q).unwrap();
        for (e, br) in [(exact.upper, b.upper), (exact.lower, b.lower)] {
            assert!(br.lo <= e.value * (1.0 + 1e-12) && e.value <= br.hi * (1.0 + 1e-12));
        }
        assert_eq!(b.bucket, 3);
    }

    #[test]
    fn area_sequential_equals_parallel() {
        let t = build_tables(&lazy(0.05, 60, 0, 0, 40)).unwrap();
        let mut q = AreaQuery::exact(300.0, 120.0);
        q.exec = Execution::Sequential;
        let s = area_statistics(&t, &q).unwrap();
        q.exec = Execution::Parallel;
        let p = area_statistics(&t, &q).unwrap();
        assert_eq!(s, p);
    }
}
