//! Exact backward sampling from the transfer tables, independent coupling of
//! two walks, and a single-site heat-bath chain.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::kernel::Kernel;
use crate::model::BridgeSpec;
use crate::rng::StreamRng;
use crate::spectral::TransferOperator;
use crate::transfer::TransferTables;

/// Replicas handled by one RNG stream.
pub const REPLICA_BATCH: usize = 1000;

#[derive(Debug, Clone)]
pub struct PathSample<'a> {
    pub heights: Vec<usize>,
    pub spec: &'a BridgeSpec,
    pub seed: u64,
    pub stream: u64,
}

impl PathSample<'_> {
    /// Checks the endpoint, support and height-cap invariants.
    pub fn check(&self) -> Result<()> {
        let h = &self.heights;
        if h.len() != self.spec.n + 1 || h[0] != self.spec.a || h[self.spec.n] != self.spec.b {
            return Err(Error::Precondition(
                "path endpoints do not match the bridge spec".into(),
            ));
        }
        if h.iter().any(|&x| x > self.spec.k) {
            return Err(Error::Precondition("path exceeds the height cap".into()));
        }
        if h.windows(2)
            .any(|w| self.spec.step.prob(w[1] as i64 - w[0] as i64) <= 0.0)
        {
            return Err(Error::Precondition("path uses a jump outside the support".into()));
        }
        Ok(())
    }
}

/// Draws an index with probability proportional to `weights`.
fn pick<R: RngCore + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // rounding left u at the very top: take the last positive weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Fills `out` with `X_0..X_N` drawn from the tilted bridge measure.
pub fn exact_sample_into<R: RngCore + ?Sized>(
    tables: &TransferTables,
    rng: &mut R,
    out: &mut Vec<usize>,
    scratch: &mut Vec<f64>,
) {
    let spec = tables.spec();
    let kernel = tables.kernel();
    out.clear();
    out.push(spec.a);
    let mut x = spec.a;
    for k in 0..spec.n {
        let targets = kernel.targets(x);
        let first = *targets.start();
        let next = tables.backward(k + 1);
        let weighted = tables.is_interior(k + 1);
        scratch.clear();
        scratch.extend(targets.map(|y| {
            let w = if weighted {
                kernel.entry(x, y)
            } else {
                kernel.step_prob(y as i64 - x as i64)
            };
            w * next[y]
        }));
        assert!(
            scratch.iter().any(|&w| w > 0.0),
            "dead end at index {k}, height {x}: tables are not positive along reachable states"
        );
        x = first + pick(rng, scratch);
        out.push(x);
    }
}

/// One exact sample of the bridge.
pub fn exact_sample<'a>(tables: &'a TransferTables, rng: &mut StreamRng) -> PathSample<'a> {
    let mut heights = Vec::with_capacity(tables.len() + 1);
    exact_sample_into(tables, rng, &mut heights, &mut Vec::new());
    PathSample {
        heights,
        spec: tables.spec(),
        seed: rng.seed(),
        stream: rng.stream(),
    }
}

/// Runs `count` replicas of `f`, each batch of [`REPLICA_BATCH`] on its own
/// stream `(tag, grid_index, batch)`. Results come back in replica order.
pub fn replicate<T, F>(exec: Execution, count: usize, seed: u64, tag: u64, grid_index: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync + Send,
{
    let batches = count.div_ceil(REPLICA_BATCH);
    let per_batch = exec::map_range(exec, batches, |b| {
        let mut rng = StreamRng::for_task(seed, tag, grid_index, b as u64);
        let size = REPLICA_BATCH.min(count - b * REPLICA_BATCH);
        (0..size).map(|_| f(&mut rng)).collect::<Vec<T>>()
    });
    per_batch.into_iter().flatten().collect()
}

/// Free-endpoint walk on `0..=K`: the Doob transform of the truncated kernel.
#[derive(Debug, Clone)]
pub struct FreeChain {
    rows: Vec<(usize, Vec<f64>)>,
}

impl FreeChain {
    pub fn new(op: &TransferOperator) -> Self {
        let rows = op
            .doob_transitions()
            .into_iter()
            .map(|(first, probs)| {
                let mut acc = 0.0;
                let cdf = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                (first, cdf)
            })
            .collect();
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn step<R: RngCore + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let (first, cdf) = &self.rows[x];
        let u = rng.random::<f64>() * cdf[cdf.len() - 1];
        first + cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingOutcome {
    /// First common index with `X_j = Y_j`, `None` if no meeting up to the horizon.
    pub meet_time: Option<usize>,
    pub paths: Option<(Vec<usize>, Vec<usize>)>,
}

/// Runs two independent copies of `chain` from `ax` and `ay` until they occupy
/// the same height at the same index, or until `horizon` steps.
pub fn couple<R: RngCore + ?Sized>(
    chain: &FreeChain,
    ax: usize,
    ay: usize,
    horizon: usize,
    rng: &mut R,
    keep_paths: bool,
) -> CouplingOutcome {
    let (mut x, mut y) = (ax, ay);
    let mut paths = keep_paths.then(|| (vec![x], vec![y]));
    let mut meet_time = (x == y).then_some(0);
    let mut j = 0;
    while meet_time.is_none() && j < horizon {
        x = chain.step(x, rng);
        y = chain.step(y, rng);
        j += 1;
        if let Some((px, py)) = paths.as_mut() {
            px.push(x);
            py.push(y);
        }
        if x == y {
            meet_time = Some(j);
        }
    }
    CouplingOutcome { meet_time, paths }
}

/// Independent exact bridges `X ~ tx`, `Y ~ ty` and their first meeting index.
/// Both specs must share `N`, `b`, the step law and the site weights.
pub fn couple_bridges<R: RngCore + ?Sized>(
    tx: &TransferTables,
    ty: &TransferTables,
    rng: &mut R,
) -> Result<CouplingOutcome> {
    let (sx, sy) = (tx.spec(), ty.spec());
    if sx.n != sy.n || sx.b != sy.b || sx.k != sy.k || sx.step != sy.step || sx.site_weights() != sy.site_weights() {
        return Err(Error::SpecMismatch(
            "coupled bridges need the same N, b, K, step and weights".into(),
        ));
    }
    let mut scratch = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    exact_sample_into(tx, rng, &mut x, &mut scratch);
    exact_sample_into(ty, rng, &mut y, &mut scratch);
    let meet_time = x.iter().zip(&y).position(|(a, b)| a == b);
    Ok(CouplingOutcome {
        meet_time,
        paths: Some((x, y)),
    })
}

/// Follows `X` up to the meeting index and `Y` afterwards; plain `X` if the
/// walks never met or no paths were kept.
pub fn splice(outcome: &CouplingOutcome) -> Option<Vec<usize>> {
    let (x, y) = outcome.paths.as_ref()?;
    Some(match outcome.meet_time {
        Some(t) => x[..=t].iter().chain(&y[t + 1..]).copied().collect(),
        None => x.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoMeetPoint {
    pub n: usize,
    pub p_no_meet: f64,
    pub stderr: f64,
}

/// Estimates `P(no meeting by N)` for each horizon from `replicas`
/// independent couplings run to the largest horizon.
#[allow(clippy::too_many_arguments)]
pub fn no_meet_curve(
    chain: &FreeChain,
    ax: usize,
    ay: usize,
    horizons: &[usize],
    replicas: usize,
    seed: u64,
    grid_index: u64,
    exec: Execution,
) -> Vec<NoMeetPoint> {
    let horizon = horizons.iter().copied().max().unwrap_or(0);
    let meets = replicate(exec, replicas, seed, crate::rng::tag::COUPLE, grid_index, |rng| {
        couple(chain, ax, ay, horizon, rng, false).meet_time
    });
    let r = replicas as f64;
    horizons
        .iter()
        .map(|&n| {
            let alive = meets.iter().filter(|m| m.is_none_or(|t| t > n)).count() as f64;
            let p = alive / r;
            NoMeetPoint {
                n,
                p_no_meet: p,
                stderr: (p * (1.0 - p) / r).sqrt(),
            }
        })
        .collect()
}

/// Systematic-scan heat bath on the bridge measure: each interior site is
/// redrawn from its exact conditional law given its two neighbours.
#[derive(Debug, Clone)]
pub struct HeatBath<'a> {
    spec: &'a BridgeSpec,
    kernel: Kernel,
    path: Vec<usize>,
    scratch: Vec<f64>,
}

impl<'a> HeatBath<'a> {
    /// Starts from the flat path at `max(a, b)`, lowered near the ends as far
    /// as the jump range requires.
    pub fn new(spec: &'a BridgeSpec) -> Result<Self> {
        spec.validate()?;
        let up = spec.step.max_jump().max(0) as usize;
        let down = (-spec.step.min_jump()).max(0) as usize;
        let top = spec.a.max(spec.b);
        let path: Vec<usize> = (0..=spec.n)
            .map(|i| top.min(spec.a + i * up).min(spec.b + (spec.n - i) * down))
            .collect();
        let feasible = path[0] == spec.a
            && path[spec.n] == spec.b
            && path.windows(2).all(|w| spec.step.prob(w[1] as i64 - w[0] as i64) > 0.0);
        if !feasible {
            return Err(Error::EmptyPathSpace);
        }
        Ok(Self {
            spec,
            kernel: Kernel::from_spec(spec),
            path,
            scratch: Vec::new(),
        })
    }

    pub fn path(&self) -> &[usize] {
        &self.path
    }

    /// Redraws site `i` from `p(x - X_{i-1}) p(X_{i+1} - x) w(x)`.
    pub fn update_site<R: RngCore + ?Sized>(&mut self, i: usize, rng: &mut R) {
        let (l, r) = (self.path[i - 1], self.path[i + 1]);
        let targets = self.kernel.targets(l);
        let sources = self.kernel.sources(r);
        let lo = *targets.start().max(sources.start());
        let hi = *targets.end().min(sources.end());
        self.scratch.clear();
        for x in lo..=hi {
            self.scratch
                .push(self.kernel.entry(l, x) * self.kernel.step_prob(r as i64 - x as i64));
        }
        self.path[i] = lo + pick(rng, &self.scratch);
    }

    pub fn sweep<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        for i in 1..self.spec.n {
            self.update_site(i, rng);
        }
    }

    /// Runs `sweeps` sweeps, calling `observe` on the path after each.
    pub fn run<R, F>(&mut self, sweeps: usize, rng: &mut R, mut observe: F)
    where
        R: RngCore + ?Sized,
        F: FnMut(&[usize]),
    {
        for _ in 0..sweeps {
            self.sweep(rng);
            observe(&self.path);
        }
    }
}

/// Path after `sweeps` heat-bath sweeps from the flat start.
pub fn mcmc_heatbath<'a>(spec: &'a BridgeSpec, sweeps: usize, rng: &mut StreamRng) -> Result<PathSample<'a>> {
    let mut chain = HeatBath::new(spec)?;
    chain.run(sweeps, rng, |_| {});
    Ok(PathSample {
        heights: chain.path,
        spec,
        seed: rng.seed(),
        stream: rng.stream(),
    })
}
