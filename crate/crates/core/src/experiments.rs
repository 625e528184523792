//! Parameter sweeps and exponent fits over a geometric λ grid.
//!
//! Lengths are measured in units of `H²` with `H = H_1(λ)`. Every grid point
//! is independent and runs on the configured execution mode; results are
//! returned in grid order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::model::{default_truncation, lazy_srw, solve_h, BridgeSpec, Potential, StepDistribution};
use crate::rng::tag;
use crate::rng::StreamRng;
use crate::sampler::{exact_sample_into, no_meet_curve, replicate, FreeChain, HeatBath};
use crate::spectral::{build_operator, TransferOperator};
use crate::stats::{correlated_stderr, fit_line, mean_stderr, LinearFit};
use crate::transfer::{area_statistics, build_tables_auto, max_height_probability, AreaQuery, TransferTables};

/// Smallest allowed `N / H²` for pointwise quantities: mid-bulk sites must
/// sit at least `5 H²` from either end.
pub const MIN_N_MULTIPLIER: f64 = 10.0;

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub potential: Potential,
    pub step: StepDistribution,
    /// `N = n_multiplier · H²`.
    pub n_multiplier: f64,
    /// `T` grid for the tail fit, in units of `H`.
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl SweepConfig {
    /// Lazy walk, five points `1e-2 .. 1e-4`, `N = 20 H²`, `T = 2..=8`.
    pub fn desk(potential: Potential) -> Self {
        Self {
            lambdas: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            potential,
            step: lazy_srw(),
            n_multiplier: 20.0,
            t_grid: (2..=8).map(f64::from).collect(),
            replicas: 100_000,
            seed: 0,
            exec: Execution::default(),
        }
    }

    pub fn with_lambdas(mut self, lambdas: &[f64]) -> Self {
        self.lambdas = lambdas.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::InsufficientGrid { needed: 1, got: 0 });
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::param("lambdas", "every lambda must be finite and >= 0"));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("lambdas", "grid must be strictly decreasing"));
        }
        if !(self.n_multiplier >= MIN_N_MULTIPLIER) {
            return Err(Error::param(
                "n_multiplier",
                format!("{} is below the minimum {MIN_N_MULTIPLIER}", self.n_multiplier),
            ));
        }
        if self.t_grid.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::param("t_grid", "tail multiples must be positive"));
        }
        self.potential.validate()
    }

    pub fn h(&self, lambda: f64) -> Result<f64> {
        solve_h(&self.potential, 1.0, lambda)
    }

    /// Bridge `0 → 0` of length `multiplier · H²` with the default truncation.
    pub fn bridge(&self, lambda: f64, multiplier: f64) -> Result<(f64, BridgeSpec)> {
        let h = self.h(lambda)?;
        let n = ((multiplier * h * h).round() as usize).max(2);
        let spec = BridgeSpec::with_default_truncation(self.step.clone(), self.potential.clone(), lambda, n, 0, 0)?;
        Ok((h, spec))
    }

    /// Free-endpoint operator with the default truncation.
    pub fn operator(&self, lambda: f64) -> Result<(f64, TransferOperator)> {
        let h = self.h(lambda)?;
        let spec = BridgeSpec::with_default_truncation(self.step.clone(), self.potential.clone(), lambda, 1, 0, 0)?;
        Ok((h, build_operator(&spec)?))
    }
}

/// One line of the sweep CSV `lambda,H,quantity,value,stderr`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub h: f64,
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
}

impl SweepRow {
    fn exact(lambda: f64, h: f64, quantity: impl Into<String>, value: f64) -> Self {
        Self::mc(lambda, h, quantity, value, 0.0)
    }

    fn mc(lambda: f64, h: f64, quantity: impl Into<String>, value: f64, stderr: f64) -> Self {
        Self {
            lambda,
            h,
            quantity: quantity.into(),
            value,
            stderr,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub spec_hashes: Vec<String>,
}

/// Fitted exponent (slope) with its raw points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(x, y)` pairs entering the fit.
    pub points: Vec<(f64, f64)>,
    /// `false` when the regime has no such exponent (e.g. `λ = 0`).
    pub applicable: bool,
    pub provenance: Provenance,
}

impl FitResult {
    fn from_fit(fit: LinearFit, points: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        if !fit.slope.is_finite() {
            return Err(Error::Precondition("fitted exponent is not finite".into()));
        }
        Ok(Self {
            exponent: fit.slope,
            stderr: fit.slope_stderr,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            points,
            applicable: true,
            provenance,
        })
    }

    fn fit(points: Vec<(f64, f64)>, provenance: Provenance) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
        Self::from_fit(fit_line(&xs, &ys)?, points, provenance)
    }

    fn not_applicable(provenance: Provenance) -> Self {
        Self {
            exponent: f64::NAN,
            stderr: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            points: Vec::new(),
            applicable: false,
            provenance,
        }
    }
}

fn exact_provenance(specs: &[&BridgeSpec]) -> Provenance {
    Provenance {
        seed: None,
        spec_hashes: specs.iter().map(|s| s.hash()).collect(),
    }
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Sweep output: per-λ rows plus a fit.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fit: FitResult,
}

/// Slope of `log E[X_{N/2}]` against `log λ`.
pub fn height_scaling(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    if cfg.lambdas.len() < 4 {
        return Err(Error::InsufficientGrid {
            needed: 4,
            got: cfg.lambdas.len(),
        });
    }
    let points = collect(exec::map(cfg.exec, &cfg.lambdas, |&lambda| {
        let (h, spec) = cfg.bridge(lambda, cfg.n_multiplier)?;
        let tables = build_tables_auto(&spec)?;
        let mean = tables.mean(spec.n / 2)?;
        Ok((lambda, h, mean, tables.spec().hash()))
    }))?;
    let rows = points
        .iter()
        .map(|&(l, h, m, _)| SweepRow::exact(l, h, "mean_mid_height", m))
        .collect();
    let provenance = Provenance {
        seed: None,
        spec_hashes: points.iter().map(|p| p.3.clone()).collect(),
    };
    let fit = FitResult::fit(
        points.iter().map(|&(l, _, m, _)| (l.ln(), m.ln())).collect(),
        provenance,
    )?;
    Ok(SweepReport { rows, fit })
}

/// Per-λ fits of `log(-log P(X_{N/2} > T H))` against `log T`.
#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub rows: Vec<SweepRow>,
    /// One fit per λ, in grid order.
    pub fits: Vec<FitResult>,
}

pub fn tail_exponent(cfg: &SweepConfig) -> Result<TailReport> {
    cfg.validate()?;
    let t_max = cfg.t_grid.iter().copied().fold(0.0, f64::max);
    let per_lambda = collect(exec::map(cfg.exec, &cfg.lambdas, |&lambda| {
        if lambda == 0.0 {
            return Ok((Vec::new(), FitResult::not_applicable(Provenance::default())));
        }
        let (h, spec) = cfg.bridge(lambda, cfg.n_multiplier)?;
        // the top of the T grid must sit well inside the reliable window
        let k = default_truncation(h * (2.0 * t_max).max(8.0) / 8.0, 0, &cfg.step);
        let spec = spec.with_truncation(k)?;
        let tables = build_tables_auto(&spec)?;
        let mid = spec.n / 2;
        let mut rows = Vec::new();
        let mut points = Vec::new();
        for &t in &cfg.t_grid {
            let p = tables.tail_probability(mid, t * h)?;
            rows.push(SweepRow::exact(lambda, h, format!("tail_p_T{t}"), p));
            if p > 0.0 && p < 1.0 {
                points.push((t.ln(), (-p.ln()).ln()));
            }
        }
        let fit = FitResult::fit(points, exact_provenance(&[tables.spec()]))?;
        Ok((rows, fit))
    }))?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (r, f) in per_lambda {
        rows.extend(r);
        fits.push(f);
    }
    Ok(TailReport { rows, fits })
}

/// Area statistics per λ and the decay of both area-event probabilities in `N / H²`.
#[derive(Debug, Clone, Serialize)]
pub struct AreaReport {
    pub rows: Vec<SweepRow>,
    /// `E[A] / (H N)` per λ at the largest multiplier.
    pub mean_ratio: Vec<f64>,
    /// Fits of `-log P(A >= HN/δ)` against `N / H²`, one per λ.
    pub upper: Vec<FitResult>,
    /// Fits of `-log P(A <= δ HN)` against `N / H²`, one per λ.
    pub lower: Vec<FitResult>,
}

pub fn area_law(cfg: &SweepConfig, delta: f64, multipliers: &[f64]) -> Result<AreaReport> {
    cfg.validate()?;
    if multipliers.len() < 2 {
        return Err(Error::InsufficientGrid {
            needed: 2,
            got: multipliers.len(),
        });
    }
    let grid: Vec<(f64, f64)> = cfg
        .lambdas
        .iter()
        .flat_map(|&l| multipliers.iter().map(move |&m| (l, m)))
        .collect();
    let stats = collect(exec::map(cfg.exec, &grid, |&(lambda, mult)| {
        let (h, spec) = cfg.bridge(lambda, mult)?;
        let tables = build_tables_auto(&spec)?;
        let mut query = AreaQuery::from_delta(tables.spec(), delta)?;
        query.exec = Execution::Sequential;
        let a = area_statistics(&tables, &query)?;
        Ok((h, spec.n, a, tables.spec().hash()))
    }))?;

    let mut report = AreaReport {
        rows: Vec::new(),
        mean_ratio: Vec::new(),
        upper: Vec::new(),
        lower: Vec::new(),
    };
    for (li, &lambda) in cfg.lambdas.iter().enumerate() {
        let block = &stats[li * multipliers.len()..(li + 1) * multipliers.len()];
        let mut up = Vec::new();
        let mut lo = Vec::new();
        let mut hashes = Vec::new();
        for (&(h, n, a, ref hash), &mult) in block.iter().zip(multipliers) {
            let x = n as f64 / (h * h);
            report.rows.push(SweepRow::exact(
                lambda,
                h,
                format!("mean_area_per_hn_m{mult}"),
                a.mean / (h * n as f64),
            ));
            report.rows.push(SweepRow::mc(
                lambda,
                h,
                format!("area_upper_p_m{mult}"),
                a.upper.value,
                (a.upper.hi - a.upper.lo) / 2.0,
            ));
            report.rows.push(SweepRow::mc(
                lambda,
                h,
                format!("area_lower_p_m{mult}"),
                a.lower.value,
                (a.lower.hi - a.lower.lo) / 2.0,
            ));
            if a.upper.value > 0.0 {
                up.push((x, -a.upper.value.ln()));
            }
            if a.lower.value > 0.0 {
                lo.push((x, -a.lower.value.ln()));
            }
            hashes.push(hash.clone());
        }
        let (h, n, a, _) = &block[block.len() - 1];
        report.mean_ratio.push(a.mean / (h * *n as f64));
        let prov = Provenance {
            seed: None,
            spec_hashes: hashes,
        };
        report.upper.push(FitResult::fit(up, prov.clone())?);
        report.lower.push(FitResult::fit(lo, prov)?);
    }
    Ok(report)
}

/// Correlation length from the covariance decay, next to the spectral prediction.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationPoint {
    pub lambda: f64,
    pub h: f64,
    /// `-1 / slope` of `log Cov(X_i, X_{i+r})` against `r`.
    pub xi: f64,
    /// `1 / (-log(1 - gap))`.
    pub xi_spectral: f64,
    pub gap: f64,
    pub fit: FitResult,
    /// `(r, Cov)` over the full profile.
    pub profile: Vec<(usize, f64)>,
}

/// Fit window for the covariance decay, in units of `H²`.
pub const CORRELATION_WINDOW: (f64, f64) = (1.0, 4.0);

pub fn correlation_length(cfg: &SweepConfig) -> Result<Vec<CorrelationPoint>> {
    cfg.validate()?;
    collect(exec::map(cfg.exec, &cfg.lambdas, |&lambda| {
        let (h, spec) = cfg.bridge(lambda, cfg.n_multiplier)?;
        let tables = build_tables_auto(&spec)?;
        let h2 = h * h;
        let r_max = (CORRELATION_WINDOW.1 * h2).ceil() as usize;
        let i = (spec.n / 2).saturating_sub(r_max / 2);
        let cov = tables.covariance_profile(i, i + r_max)?;
        let lo = (CORRELATION_WINDOW.0 * h2).floor() as usize;
        let points: Vec<(f64, f64)> = (lo..=r_max)
            .filter(|&r| cov[r] > 0.0)
            .map(|r| (r as f64, cov[r].ln()))
            .collect();
        let fit = FitResult::fit(points, exact_provenance(&[tables.spec()]))?;
        let (_, op) = cfg.operator(lambda)?;
        let gap = op.spectral_gap()?;
        Ok(CorrelationPoint {
            lambda,
            h,
            xi: -1.0 / fit.exponent,
            xi_spectral: 1.0 / -(1.0 - gap).ln(),
            gap,
            fit,
            profile: cov.into_iter().enumerate().collect(),
        })
    }))
}

/// Total-variation relaxation of the free-endpoint law from `δ_0`.
#[derive(Debug, Clone, Serialize)]
pub struct RelaxationPoint {
    pub lambda: f64,
    pub h: f64,
    pub gap: f64,
    /// Fit of `log TV` against `N` over the tail half of the run.
    pub fit: FitResult,
    pub tv: Vec<(usize, f64)>,
}

/// Run length of the relaxation curve, in units of `H²`.
pub const RELAXATION_SPAN: f64 = 8.0;

pub fn relaxation(cfg: &SweepConfig) -> Result<Vec<RelaxationPoint>> {
    cfg.validate()?;
    collect(exec::map(cfg.exec, &cfg.lambdas, |&lambda| {
        let (h, op) = cfg.operator(lambda)?;
        let n_max = (RELAXATION_SPAN * h * h).ceil() as usize;
        let tv = op.tv_relaxation(0, n_max)?;
        let points: Vec<(f64, f64)> = tv[n_max / 2..]
            .iter()
            .filter(|(_, d)| *d > 0.0)
            .map(|&(n, d)| (n as f64, d.ln()))
            .collect();
        let fit = FitResult::fit(points, exact_provenance(&[op.spec()]))?;
        Ok(RelaxationPoint {
            lambda,
            h,
            gap: op.spectral_gap()?,
            fit,
            tv,
        })
    }))
}

/// `E[X_{N/2}^{2p}] / H^{2p+1}` per λ.
#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub p: f64,
    pub rows: Vec<SweepRow>,
    /// max / min of the normalized moment over the grid.
    pub spread: f64,
    pub provenance: Provenance,
}

pub fn moment_scaling(cfg: &SweepConfig, p: f64) -> Result<MomentReport> {
    if !(p > 1.0 && p < 21.0 / 8.0) {
        return Err(Error::Precondition(format!(
            "moment order p = {p} must lie in (1, 21/8)"
        )));
    }
    cfg.validate()?;
    let points = collect(exec::map(cfg.exec, &cfg.lambdas, |&lambda| {
        let (h, spec) = cfg.bridge(lambda, cfg.n_multiplier)?;
        let tables = build_tables_auto(&spec)?;
        let moment = tables.marginal(spec.n / 2)?.moment(2.0 * p);
        Ok((lambda, h, moment / h.powf(2.0 * p + 1.0), tables.spec().hash()))
    }))?;
    let (min, max) = points
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.2), hi.max(p.2)));
    Ok(MomentReport {
        p,
        rows: points
            .iter()
            .map(|&(l, h, v, _)| SweepRow::exact(l, h, format!("moment_2p_over_h_p{p}"), v))
            .collect(),
        spread: max / min,
        provenance: Provenance {
            seed: None,
            spec_hashes: points.into_iter().map(|p| p.3).collect(),
        },
    })
}

/// `(λ, N, P(no meeting by N), stderr)` rows and the decay fit in `N / H²`.
#[derive(Debug, Clone, Serialize)]
pub struct CouplingReport {
    pub lambda: f64,
    pub h: f64,
    pub starts: (usize, usize),
    pub curve: Vec<(usize, f64, f64)>,
    /// Fit of `log P(no meet)` against `N / H²`.
    pub fit: FitResult,
}

/// Independent free-endpoint walks from `0` and `round(rho H)`, `rho` in `[0, 1]`.
pub fn coupling(cfg: &SweepConfig, horizons_h2: &[f64], rho: f64) -> Result<Vec<CouplingReport>> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::param("rho", format!("{rho} not in [0, 1]")));
    }
    let indexed: Vec<(usize, f64)> = cfg.lambdas.iter().copied().enumerate().collect();
    // replicas are already spread over the pool; grid points run in order
    indexed
        .iter()
        .map(|&(gi, lambda)| {
            let (h, op) = cfg.operator(lambda)?;
            let chain = FreeChain::new(&op);
            let starts = (0, ((rho * h).round() as usize).min(op.kernel().len() - 1));
            let h2 = h * h;
            let horizons: Vec<usize> = horizons_h2.iter().map(|m| (m * h2).round() as usize).collect();
            let curve = no_meet_curve(
                &chain,
                starts.0,
                starts.1,
                &horizons,
                cfg.replicas,
                cfg.seed,
                gi as u64,
                cfg.exec,
            );
            let points: Vec<(f64, f64)> = curve
                .iter()
                .filter(|c| c.p_no_meet > 0.0)
                .map(|c| (c.n as f64 / h2, c.p_no_meet.ln()))
                .collect();
            let fit = FitResult::fit(
                points,
                Provenance {
                    seed: Some(cfg.seed),
                    spec_hashes: vec![op.spec().hash()],
                },
            )?;
            Ok(CouplingReport {
                lambda,
                h,
                starts,
                curve: curve.iter().map(|c| (c.n, c.p_no_meet, c.stderr)).collect(),
                fit,
            })
        })
        .collect()
}

/// `P(max_k X_k <= δ H)` against `N`, exactly and by sampling.
#[derive(Debug, Clone, Serialize)]
pub struct MaxHeightReport {
    pub lambda: f64,
    pub h: f64,
    pub cap: usize,
    /// `(N, exact, sampled, stderr)`.
    pub points: Vec<(usize, f64, f64, f64)>,
    /// Fit of `log P` (exact) against `N`.
    pub fit: FitResult,
    /// `slope / λ^{2/3}`.
    pub normalized_slope: f64,
}

pub fn max_height_floor(cfg: &SweepConfig, delta: f64, multipliers: &[f64]) -> Result<Vec<MaxHeightReport>> {
    cfg.validate()?;
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let indexed: Vec<(usize, f64)> = cfg.lambdas.iter().copied().enumerate().collect();
    indexed
        .iter()
        .map(|&(gi, lambda)| {
            let h = cfg.h(lambda)?;
            let cap = (delta * h).floor() as usize;
            let mut points = Vec::new();
            let mut hashes = Vec::new();
            for (mi, &mult) in multipliers.iter().enumerate() {
                let (_, spec) = cfg.bridge(lambda, mult)?;
                let tables = build_tables_auto(&spec)?;
                let exact = max_height_probability(&tables, cap)?;
                let hits = replicate(
                    cfg.exec,
                    cfg.replicas,
                    cfg.seed,
                    tag::MAX_HEIGHT,
                    (gi * multipliers.len() + mi) as u64,
                    |rng| {
                        let mut path = Vec::new();
                        exact_sample_into(&tables, rng, &mut path, &mut Vec::new());
                        f64::from(path.iter().all(|&x| x <= cap))
                    },
                );
                let (p, se) = mean_stderr(&hits);
                points.push((spec.n, exact, p, se));
                hashes.push(tables.spec().hash());
            }
            let fit = FitResult::fit(
                points
                    .iter()
                    .filter(|p| p.1 > 0.0)
                    .map(|p| (p.0 as f64, p.1.ln()))
                    .collect(),
                Provenance {
                    seed: Some(cfg.seed),
                    spec_hashes: hashes,
                },
            )?;
            Ok(MaxHeightReport {
                lambda,
                h,
                cap,
                normalized_slope: fit.exponent / lambda.powf(2.0 / 3.0),
                points,
                fit,
            })
        })
        .collect()
}

/// Heat-bath time average of `X_site` with its autocorrelation-adjusted error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeatBathAverage {
    pub mean: f64,
    pub stderr: f64,
    pub tau: f64,
    pub sweeps: usize,
}

pub fn heatbath_average(
    spec: &BridgeSpec,
    site: usize,
    burn_in: usize,
    sweeps: usize,
    seed: u64,
) -> Result<HeatBathAverage> {
    if site > spec.n {
        return Err(Error::IndexOutOfRange { index: site, n: spec.n });
    }
    let mut rng = StreamRng::for_task(seed, tag::HEATBATH, 0, 0);
    let mut chain = HeatBath::new(spec)?;
    chain.run(burn_in, &mut rng, |_| {});
    let mut series = Vec::with_capacity(sweeps);
    chain.run(sweeps, &mut rng, |p| series.push(p[site] as f64));
    let (mean, stderr, tau) = correlated_stderr(&series);
    Ok(HeatBathAverage {
        mean,
        stderr,
        tau,
        sweeps,
    })
}

/// Exact mean of `X_site` for comparison with [`heatbath_average`].
pub fn transfer_mean(tables: &TransferTables, site: usize) -> Result<f64> {
    tables.mean(site)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SweepConfig {
        SweepConfig::desk(Potential::Linear).with_lambdas(&[0.2, 0.1, 0.05, 0.025])
    }

    #[test]
    fn config_validation() {
        assert!(small().validate().is_ok());
        assert!(small().with_lambdas(&[0.1, 0.2]).validate().is_err());
        let mut c = small();
        c.n_multiplier = 5.0;
        assert!(c.validate().is_err());
        assert!(matches!(
            height_scaling(&small().with_lambdas(&[0.1])),
            Err(Error::InsufficientGrid { needed: 4, got: 1 })
        ));
    }

    #[test]
    fn height_grows_as_lambda_drops() {
        let r = height_scaling(&small()).unwrap();
        assert!(r.fit.exponent < 0.0);
        assert!(r.fit.r_squared > 0.9);
        assert_eq!(r.rows.len(), 4);
    }

    #[test]
    fn tail_control_is_not_applicable() {
        let mut c = small().with_lambdas(&[0.1, 0.0]);
        c.t_grid = vec![1.0, 1.5, 2.0];
        let r = tail_exponent(&c).unwrap();
        assert!(r.fits[0].applicable && r.fits[0].exponent > 1.0);
        assert!(!r.fits[1].applicable);
    }

    #[test]
    fn moment_order_contract() {
        assert!(moment_scaling(&small(), 3.0).is_err());
        assert!(moment_scaling(&small(), 1.0).is_err());
        let r = moment_scaling(&small(), 2.0).unwrap();
        assert!(r.spread >= 1.0);
    }

    #[test]
    fn covariance_is_positive_on_the_diagonal() {
        let c = correlation_length(&small().with_lambdas(&[0.1])).unwrap();
        assert!(c[0].profile[0].1 > 0.0);
        assert!(c[0].xi > 0.0 && c[0].xi_spectral > 0.0);
    }

    #[test]
    fn max_height_probability_decreases_in_n() {
        let mut c = small().with_lambdas(&[0.05]);
        c.replicas = 2000;
        let r = max_height_floor(&c, 0.5, &[10.0, 15.0, 20.0]).unwrap();
        assert!(r[0].fit.exponent < 0.0);
        for &(_, exact, p, se) in &r[0].points {
            assert!((p - exact).abs() <= 4.0 * se.max(1.0 / 2000.0));
        }
    }
}
