//! Step laws, self-potentials, the characteristic height scale and the
//! finite-volume problem description shared by every other module.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-12;
const MAX_APERIODICITY_SEARCH: usize = 64;
/// Number of consecutive convolution powers that must satisfy the
/// aperiodicity condition before `A` is accepted.
pub const APERIODICITY_WINDOW: usize = 8;

/// Integer-valued jump law with zero mean, finite positive variance and
/// verified strict aperiodicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDistribution {
    min_jump: i64,
    probs: Vec<f64>,
    mean: f64,
    variance: f64,
    aperiodicity: usize,
}

impl StepDistribution {
    /// Builds a law from `(jump, probability)` pairs. Jumps may repeat; their
    /// masses are added.
    pub fn new(pairs: &[(i64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidStep("empty support".into()));
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for &(j, p) in pairs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidStep(format!("p({j}) = {p} is not a probability")));
            }
            probs[(j - lo) as usize] += p;
        }
        Self::from_dense(lo, probs)
    }

    fn from_dense(mut min_jump: i64, mut probs: Vec<f64>) -> Result<Self> {
        // trim zero mass at both ends so the support bounds are sharp
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        let lead = probs.iter().take_while(|&&p| p == 0.0).count();
        probs.drain(..lead);
        min_jump += lead as i64;
        if probs.is_empty() {
            return Err(Error::InvalidStep("no positive mass".into()));
        }

        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidStep(format!("masses sum to {total}")));
        }
        let (mean, variance) = moments(min_jump, &probs);
        if mean.abs() > PROB_TOL {
            return Err(Error::InvalidStep(format!("mean {mean:e} is not zero")));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidStep(format!("variance {variance} must be positive")));
        }
        let aperiodicity = find_aperiodicity(min_jump, &probs).ok_or_else(|| {
            Error::InvalidStep(format!("not strictly aperiodic within {MAX_APERIODICITY_SEARCH} steps"))
        })?;
        Ok(Self {
            min_jump,
            probs,
            mean,
            variance,
            aperiodicity,
        })
    }

    pub fn prob(&self, jump: i64) -> f64 {
        let idx = jump - self.min_jump;
        if idx < 0 {
            return 0.0;
        }
        self.probs.get(idx as usize).copied().unwrap_or(0.0)
    }

    /// `(jump, probability)` over the support, ascending in jump.
    pub fn support(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(move |(i, &p)| (self.min_jump + i as i64, p))
    }

    /// Dense probabilities over `min_jump()..=max_jump()`.
    pub fn dense(&self) -> &[f64] {
        &self.probs
    }

    pub fn min_jump(&self) -> i64 {
        self.min_jump
    }

    pub fn max_jump(&self) -> i64 {
        self.min_jump + self.probs.len() as i64 - 1
    }

    /// Largest upward jump (0 if the walk never moves up).
    pub fn max_positive_jump(&self) -> usize {
        self.max_jump().max(0) as usize
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Smallest `A` such that `p^n(-1), p^n(0), p^n(1)` are all positive for
    /// every checked `n >= A`.
    pub fn aperiodicity_constant(&self) -> usize {
        self.aperiodicity
    }

    /// `n`-fold convolution power, returned with the lowest reachable jump.
    pub fn convolution_power(&self, n: usize) -> (i64, Vec<f64>) {
        convolution_power(self.min_jump, &self.probs, n)
    }

    /// Whether `min{p^n(-1), p^n(0), p^n(1)} > 0`.
    pub fn aperiodic_at(&self, n: usize) -> bool {
        let (lo, pn) = self.convolution_power(n);
        [-1i64, 0, 1].iter().all(|&j| {
            let idx = j - lo;
            idx >= 0 && pn.get(idx as usize).is_some_and(|&p| p > 0.0)
        })
    }

    /// `P(xi >= -x)`.
    pub fn mass_at_least(&self, threshold: i64) -> f64 {
        self.support().filter(|&(j, _)| j >= threshold).map(|(_, p)| p).sum()
    }
}

fn moments(min_jump: i64, probs: &[f64]) -> (f64, f64) {
    // pair +j with -j so that symmetric laws have an exactly zero mean
    let max_jump = min_jump + probs.len() as i64 - 1;
    let at = |j: i64| -> f64 {
        if j < min_jump || j > max_jump {
            0.0
        } else {
            probs[(j - min_jump) as usize]
        }
    };
    let reach = min_jump.abs().max(max_jump.abs());
    let mut mean = 0.0;
    let mut second = 0.0;
    for j in 1..=reach {
        let (pp, pm) = (at(j), at(-j));
        mean += j as f64 * (pp - pm);
        second += (j * j) as f64 * (pp + pm);
    }
    (mean, second - mean * mean)
}

fn convolution_power(min_jump: i64, probs: &[f64], n: usize) -> (i64, Vec<f64>) {
    let mut acc = vec![1.0];
    let mut lo = 0i64;
    for _ in 0..n {
        let mut next = vec![0.0; acc.len() + probs.len() - 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &p) in probs.iter().enumerate() {
                next[i + j] += a * p;
            }
        }
        acc = next;
        lo += min_jump;
    }
    (lo, acc)
}

fn find_aperiodicity(min_jump: i64, probs: &[f64]) -> Option<usize> {
    let check = |pn: &(i64, Vec<f64>)| {
        [-1i64, 0, 1].iter().all(|&j| {
            let idx = j - pn.0;
            idx >= 0 && pn.1.get(idx as usize).is_some_and(|&p| p > 0.0)
        })
    };
    let limit = MAX_APERIODICITY_SEARCH + APERIODICITY_WINDOW;
    let mut ok = Vec::with_capacity(limit + 1);
    ok.push(false);
    let mut acc = (0i64, vec![1.0]);
    for _ in 1..=limit {
        let mut next = vec![0.0; acc.1.len() + probs.len() - 1];
        for (i, &a) in acc.1.iter().enumerate() {
            for (j, &p) in probs.iter().enumerate() {
                next[i + j] += a * p;
            }
        }
        acc = (acc.0 + min_jump, next);
        ok.push(check(&acc));
    }
    (1..=MAX_APERIODICITY_SEARCH).find(|&a| ok[a..=a + APERIODICITY_WINDOW].iter().all(|&b| b))
}

/// Lazy simple random walk: `p(0) = 1/2`, `p(+-1) = 1/4`.
pub fn lazy_srw() -> StepDistribution {
    StepDistribution::new(&[(-1, 0.25), (0, 0.5), (1, 0.25)]).expect("lazy walk is valid")
}

/// Two-sided geometric law `p(x) ∝ q^|x|`, truncated at `|x| <= x_max`.
pub fn geometric(q: f64, x_max: u32) -> Result<StepDistribution> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q", format!("{q} not in (0, 1)")));
    }
    if x_max == 0 {
        return Err(Error::param("x_max", "must be positive"));
    }
    symmetric(x_max, |x| q.powi(x as i32))
}

/// Discretized Gaussian `p(x) ∝ exp(-x²/2s²)`, truncated at `|x| <= x_max`.
pub fn discrete_gaussian(s: f64, x_max: u32) -> Result<StepDistribution> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::param("s", format!("{s} must be positive")));
    }
    if x_max == 0 {
        return Err(Error::param("x_max", "must be positive"));
    }
    symmetric(x_max, |x| (-((x * x) as f64) / (2.0 * s * s)).exp())
}

// Mirror-symmetric construction keeps the mean exactly zero, so no
// re-centering shift is ever needed.
fn symmetric(x_max: u32, weight: impl Fn(u64) -> f64) -> Result<StepDistribution> {
    let half: Vec<f64> = (0..=x_max as u64).map(&weight).collect();
    let total = half[0] + 2.0 * half[1..].iter().sum::<f64>();
    let mut probs = Vec::with_capacity(2 * x_max as usize + 1);
    probs.extend(half[1..].iter().rev().map(|w| w / total));
    probs.push(half[0] / total);
    probs.extend(half[1..].iter().map(|w| w / total));
    StepDistribution::from_dense(-(x_max as i64), probs)
}

/// Named catalog of the built-in step laws at their default parameters.
pub fn builtin_steps() -> Vec<(&'static str, StepDistribution)> {
    vec![
        ("lazy", lazy_srw()),
        ("geometric", geometric(0.5, 30).expect("valid")),
        ("gaussian", discrete_gaussian(2.0, 20).expect("valid")),
    ]
}

/// Jump law of the walk conditioned to stay non-negative from height `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalStep {
    pub min_jump: i64,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl ConditionalStep {
    pub fn prob(&self, jump: i64) -> f64 {
        let idx = jump - self.min_jump;
        if idx < 0 {
            return 0.0;
        }
        self.probs.get(idx as usize).copied().unwrap_or(0.0)
    }
}

/// `p_x(k) = p(k) 1{k >= -x} / P(xi >= -x)` with its mean and variance.
pub fn conditional_step(step: &StepDistribution, x: u64) -> Result<ConditionalStep> {
    let floor = -(x as i64);
    let mass = step.mass_at_least(floor);
    if !(mass > 0.0) {
        return Err(Error::EmptySupport { x });
    }
    let min_jump = step.min_jump().max(floor);
    let probs: Vec<f64> = (min_jump..=step.max_jump()).map(|j| step.prob(j) / mass).collect();
    let mean: f64 = probs
        .iter()
        .enumerate()
        .map(|(i, p)| (min_jump + i as i64) as f64 * p)
        .sum();
    let second: f64 = probs
        .iter()
        .enumerate()
        .map(|(i, p)| ((min_jump + i as i64) as f64).powi(2) * p)
        .sum();
    Ok(ConditionalStep {
        min_jump,
        probs,
        mean,
        variance: second - mean * mean,
    })
}

/// Convex non-decreasing self-potential with `V(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `V(x) = |x|`
    Linear,
    /// `V(x) = |x|^beta`, `beta >= 1`
    Power { beta: f64 },
    /// Values at `x = 0, 1, ..., n-1`; linear interpolation in between and
    /// linear extrapolation with the last slope beyond.
    Table { values: Vec<f64> },
}

impl Potential {
    pub fn power(beta: f64) -> Result<Self> {
        let p = Potential::Power { beta };
        p.validate()?;
        Ok(p)
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        let p = Potential::Table { values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Linear => Ok(()),
            Potential::Power { beta } => {
                if *beta >= 1.0 && beta.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidPotential(format!("power {beta} must be >= 1")))
                }
            }
            Potential::Table { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidPotential("table needs two values".into()));
                }
                if values[0] != 0.0 {
                    return Err(Error::InvalidPotential("V(0) must be 0".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidPotential("non-finite table entry".into()));
                }
                for w in values.windows(2) {
                    if w[1] < w[0] {
                        return Err(Error::InvalidPotential("table is decreasing".into()));
                    }
                }
                for w in values.windows(3) {
                    if w[2] - 2.0 * w[1] + w[0] < -1e-12 {
                        return Err(Error::InvalidPotential("table is not convex".into()));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        match self {
            Potential::Linear => x,
            Potential::Power { beta } => x.powf(*beta),
            Potential::Table { values } => {
                let n = values.len();
                let last = (n - 1) as f64;
                if x >= last {
                    let slope = values[n - 1] - values[n - 2];
                    values[n - 1] + slope * (x - last)
                } else {
                    let i = x.floor() as usize;
                    let t = x - i as f64;
                    values[i] * (1.0 - t) + values[i + 1] * t
                }
            }
        }
    }

    /// Upper bound `f(alpha)` on `limsup V(alpha x)/V(x)`.
    pub fn growth_certificate(&self, alpha: f64) -> f64 {
        match self {
            Potential::Linear => alpha,
            Potential::Power { beta } => alpha.powf(*beta),
            Potential::Table { values } => {
                let start = values.len() as f64;
                (0..64)
                    .map(|i| start * (1e6f64 / start).powf(i as f64 / 63.0))
                    .map(|x| self.value(alpha * x) / self.value(x))
                    .filter(|r| r.is_finite())
                    .fold(0.0, f64::max)
            }
        }
    }

    /// `V((x+y)/2) <= (V(x)+V(y))/2` and monotonicity on `0..=n`.
    pub fn check_shape(&self, n: u32) -> bool {
        let v: Vec<f64> = (0..=n).map(|x| self.value(x as f64)).collect();
        v[0] == 0.0
            && v.windows(2).all(|w| w[1] >= w[0])
            && (0..=n).all(|x| {
                (x..=n).step_by(2).all(|y| {
                    let mid = self.value((x + y) as f64 / 2.0);
                    mid <= 0.5 * (v[x as usize] + v[y as usize]) + 1e-12 * (1.0 + mid.abs())
                })
            })
    }
}

/// Unique `H > 0` with `lambda H² V(2 gamma H) = 1`.
pub fn solve_h(potential: &Potential, gamma: f64, lambda: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("{gamma} must be positive")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("{lambda} must be positive")));
    }
    let objective = |h: f64| -> Result<f64> {
        let v = lambda * h * h * potential.value(2.0 * gamma * h) - 1.0;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteObjective { at: h })
        }
    };

    let mut lo = 1e-9;
    let mut hi = 1.0;
    while objective(lo)? > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::BracketFailure { limit: lo });
        }
    }
    while objective(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e18 {
            return Err(Error::BracketFailure { limit: 1e18 });
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if objective(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One fully specified finite-volume problem: bridge of length `n` from
/// height `a` to height `b`, weighted by `exp(-lambda sum V(X_i))` over the
/// interior sites and restricted to heights `0..=k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeSpec {
    pub step: StepDistribution,
    pub potential: Potential,
    pub lambda: f64,
    pub n: usize,
    pub a: usize,
    pub b: usize,
    pub k: usize,
    pub tail_tolerance: f64,
}

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

impl BridgeSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        step: StepDistribution,
        potential: Potential,
        lambda: f64,
        n: usize,
        a: usize,
        b: usize,
        k: usize,
    ) -> Result<Self> {
        let spec = Self {
            step,
            potential,
            lambda,
            n,
            a,
            b,
            k,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uses `K = ceil(8 H_1(lambda)) + max(a, b) + max positive jump`.
    pub fn with_default_truncation(
        step: StepDistribution,
        potential: Potential,
        lambda: f64,
        n: usize,
        a: usize,
        b: usize,
    ) -> Result<Self> {
        let h = solve_h(&potential, 1.0, lambda)?;
        let k = default_truncation(h, a.max(b), &step);
        Self::new(step, potential, lambda, n, a, b, k)
    }

    pub fn with_tail_tolerance(mut self, eps: f64) -> Result<Self> {
        self.tail_tolerance = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_truncation(mut self, k: usize) -> Result<Self> {
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary(mut self, a: usize, b: usize) -> Result<Self> {
        self.a = a;
        self.b = b;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidSpec(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if self.n == 0 {
            return Err(Error::InvalidSpec("N must be at least 1".into()));
        }
        if self.a > self.k || self.b > self.k {
            return Err(Error::InvalidSpec(format!(
                "boundary ({}, {}) exceeds truncation K = {}",
                self.a, self.b, self.k
            )));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-6) {
            return Err(Error::InvalidSpec(format!(
                "tail tolerance {} not in (0, 1e-6]",
                self.tail_tolerance
            )));
        }
        Ok(())
    }

    /// `exp(-lambda V(x))` for `x = 0..=k`.
    pub fn site_weights(&self) -> Vec<f64> {
        (0..=self.k)
            .map(|x| (-self.lambda * self.potential.value(x as f64)).exp())
            .collect()
    }

    /// Characteristic height `H_1(lambda)`; `None` at `lambda = 0`.
    pub fn height_scale(&self) -> Option<f64> {
        solve_h(&self.potential, 1.0, self.lambda).ok()
    }

    /// Heights above `k - buffer` are considered contaminated by truncation.
    pub fn buffer(&self) -> usize {
        self.step.max_positive_jump()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// True when the two specs agree in everything except lambda.
    pub fn same_except_lambda(&self, other: &Self) -> bool {
        self.step == other.step
            && self.potential == other.potential
            && self.n == other.n
            && self.a == other.a
            && self.b == other.b
            && self.k == other.k
            && self.tail_tolerance == other.tail_tolerance
    }
}

pub fn default_truncation(h: f64, boundary: usize, step: &StepDistribution) -> usize {
    (8.0 * h).ceil() as usize + boundary + step.max_positive_jump()
}
