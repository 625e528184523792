//! Subcommand bodies. Each reads its section of the configuration, runs the
//! computation, writes CSV files and returns the JSON results for the summary.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};

use prewet::experiments::{
    area_law, correlation_length, coupling, height_scaling, moment_scaling, relaxation, tail_exponent, FitResult,
    SweepConfig, SweepRow,
};
use prewet::oracle::{canonical_fixture, canonical_spec, frozen_fixture, identity_suite};
use prewet::rng::{tag, StreamRng};
use prewet::sampler::{exact_sample_into, replicate, HeatBath, PathSample};
use prewet::transfer::{area_statistics, build_tables, AreaQuery, RECOMBINATION_TOL};
use prewet::{BridgeSpec, Execution};

use crate::config::{self, canonical_bridge, Config, SampleMethod};
use crate::output::{self, num, Output};
use crate::{Command, Failure};

pub struct Run {
    pub command: Command,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
}

type Outcome<T> = std::result::Result<T, Failure>;

/// What a command hands back: summary results and an optional failed assertion.
struct Done {
    results: Value,
    line: String,
    violation: Option<String>,
}

impl Done {
    fn ok(results: Value, line: String) -> Self {
        Self {
            results,
            line,
            violation: None,
        }
    }

    fn check(mut self, holds: bool, message: impl FnOnce() -> String) -> Self {
        if !holds && self.violation.is_none() {
            self.violation = Some(message());
        }
        self
    }
}

fn load(path: Option<&PathBuf>) -> Outcome<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).map_err(|e| {
        Failure::Config(config::ConfigError {
            field: "--config".into(),
            message: format!("{}: {e}", path.display()),
        })
    })?;
    config::parse(&text).map_err(Failure::Config)
}

fn runtime(context: &str) -> impl Fn(prewet::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{e} (spec {context})"))
}

fn io(e: std::io::Error) -> Failure {
    Failure::Runtime(format!("writing output: {e}"))
}

pub fn execute(run: &Run) -> Outcome<String> {
    let cfg = load(run.config.as_ref())?;
    let hash = cfg.hash();
    let mut out = Output::create(&run.out).map_err(io)?;
    let done = match run.command {
        Command::Exact => exact(&cfg, &mut out)?,
        Command::Sample => sample(&cfg, run.seed, &mut out)?,
        Command::Couple => couple(&cfg, run.seed, &hash, &mut out)?,
        Command::Scaling => scaling(&cfg, run.seed, &hash, &mut out)?,
        Command::Tails => tails(&cfg, run.seed, &hash, &mut out)?,
        Command::Area => area(&cfg, run.seed, &hash, &mut out)?,
        Command::Correlations => correlations(&cfg, run.seed, &hash, &mut out)?,
        Command::Relaxation => relax(&cfg, run.seed, &hash, &mut out)?,
        Command::Moments => moments(&cfg, run.seed, &hash, &mut out)?,
        Command::OracleCheck => oracle_check()?,
    };
    let results = json!({
        "passed": done.violation.is_none(),
        "violation": done.violation,
        "data": done.results,
    });
    out.finish(run.command.name(), &hash, run.seed, results).map_err(io)?;
    match done.violation {
        Some(v) => Err(Failure::Assertion(v)),
        None => Ok(format!("{}: {}", run.command.name(), done.line)),
    }
}

fn bridge_spec(cfg: &Config) -> Outcome<(BridgeSpec, config::BridgeConfig)> {
    let bridge = cfg.bridge.clone().unwrap_or_else(canonical_bridge);
    let spec = bridge.spec().map_err(Failure::Config)?;
    Ok((spec, bridge))
}

fn sweep_config(cfg: &Config, seed: u64) -> Outcome<(SweepConfig, config::SweepSection)> {
    let section = cfg.sweep.clone().unwrap_or_default();
    let sweep = section.build(seed).map_err(Failure::Config)?;
    Ok((sweep, section))
}

fn exact(cfg: &Config, out: &mut Output) -> Outcome<Done> {
    let (spec, bridge) = bridge_spec(cfg)?;
    let hash = spec.hash();
    let err = runtime(&hash);
    let tables = build_tables(&spec).map_err(&err)?;
    let n = spec.n;

    let mut marginals = Vec::new();
    let mut means = Vec::new();
    for k in 0..=n {
        let m = tables.marginal(k).map_err(&err)?;
        means.push(m.mean());
        for (x, p) in m.pmf.iter().enumerate() {
            marginals.push(vec![k.to_string(), x.to_string(), num(*p)]);
        }
    }
    out.csv("marginals.csv", &output::MARGINALS_HEADER, marginals)
        .map_err(io)?;

    let mut cov = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let c = tables.covariance(i.min(j), i.max(j)).map_err(&err)?;
            cov.push(vec![i.to_string(), j.to_string(), num(c)]);
        }
    }
    out.csv("covariance.csv", &output::COVARIANCE_HEADER, cov).map_err(io)?;

    let query = match &bridge.area {
        Some(t) => AreaQuery::exact(t.upper, t.lower),
        None => AreaQuery::from_delta(&spec, 0.5).map_err(&err)?,
    };
    let area = area_statistics(&tables, &query).map_err(&err)?;
    let recombination = tables.recombination_error();
    let results = json!({
        "spec_hash": hash,
        "n": n,
        "k": spec.k,
        "z": tables.z(),
        "log_z": tables.log_z(),
        "means": means,
        "area": {
            "mean": area.mean,
            "upper_threshold": query.upper_threshold,
            "lower_threshold": query.lower_threshold,
            "bucket": area.bucket,
            "upper": area.upper,
            "lower": area.lower,
        },
        "recombination_error": recombination,
    });
    Ok(Done::ok(
        results,
        format!("Z = {:.6e}, log Z = {:.6}", tables.z(), tables.log_z()),
    )
    .check(recombination < RECOMBINATION_TOL, || {
        format!("recombination error {recombination:e} >= {RECOMBINATION_TOL:e} (spec {hash})")
    }))
}

fn sample(cfg: &Config, seed: u64, out: &mut Output) -> Outcome<Done> {
    let (spec, _) = bridge_spec(cfg)?;
    let section = cfg.sample.clone().unwrap_or_default();
    if section.count == 0 {
        return Err(Failure::Config(config::ConfigError {
            field: "sample.count".into(),
            message: "must be positive".into(),
        }));
    }
    let hash = spec.hash();
    let err = runtime(&hash);
    let paths: Vec<Vec<usize>> = match section.method {
        SampleMethod::Exact => {
            let tables = build_tables(&spec).map_err(&err)?;
            replicate(Execution::default(), section.count, seed, tag::SAMPLE, 0, |rng| {
                let mut path = Vec::new();
                exact_sample_into(&tables, rng, &mut path, &mut Vec::new());
                path
            })
        }
        SampleMethod::Heatbath => {
            let mut rng = StreamRng::for_task(seed, tag::HEATBATH, 0, 0);
            let mut chain = HeatBath::new(&spec).map_err(&err)?;
            let mut paths = Vec::with_capacity(section.count);
            for _ in 0..section.count {
                chain.run(section.sweeps.max(1), &mut rng, |_| {});
                paths.push(chain.path().to_vec());
            }
            paths
        }
    };
    let mut bad = None;
    for (r, path) in paths.iter().enumerate() {
        let s = PathSample {
            heights: path.clone(),
            spec: &spec,
            seed,
            stream: 0,
        };
        if let Err(e) = s.check() {
            bad = Some(format!("replica {r}: {e} (spec {hash})"));
            break;
        }
    }
    let rows = paths.iter().enumerate().flat_map(|(r, p)| {
        p.iter()
            .enumerate()
            .map(move |(k, x)| vec![r.to_string(), k.to_string(), x.to_string()])
    });
    out.csv("samples.csv", &["replica", "k", "x"], rows).map_err(io)?;
    let mid = spec.n / 2;
    let mean_mid = paths.iter().map(|p| p[mid] as f64).sum::<f64>() / paths.len() as f64;
    let method = match section.method {
        SampleMethod::Exact => "exact",
        SampleMethod::Heatbath => "heatbath",
    };
    let results = json!({
        "spec_hash": hash,
        "method": method,
        "count": paths.len(),
        "sweeps": section.sweeps,
        "mean_mid_height": mean_mid,
    });
    let line = format!("{} {method} paths, mean X_{mid} = {mean_mid:.4}", paths.len());
    let mut done = Done::ok(results, line);
    done.violation = bad;
    Ok(done)
}

fn sweep_rows(rows: &[SweepRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter()
        .map(|r| vec![num(r.lambda), num(r.h), r.quantity.clone(), num(r.value), num(r.stderr)])
}

fn fit_json(f: &FitResult) -> Value {
    json!({
        "exponent": f.exponent,
        "stderr": f.stderr,
        "intercept": f.intercept,
        "r_squared": f.r_squared,
        "applicable": f.applicable,
        "points": f.points,
        "provenance": f.provenance,
    })
}

fn couple(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, _) = sweep_config(cfg, seed)?;
    let section = cfg.coupling.clone().unwrap_or_default();
    section.check().map_err(Failure::Config)?;
    let reports = coupling(&sweep, &section.horizons, section.rho).map_err(runtime(hash))?;
    let rows = reports.iter().flat_map(|r| {
        r.curve
            .iter()
            .map(move |&(n, p, se)| vec![num(r.lambda), n.to_string(), num(p), num(se)])
    });
    out.csv("coupling.csv", &output::COUPLING_HEADER, rows).map_err(io)?;
    let results: Vec<Value> = reports
        .iter()
        .map(|r| json!({"lambda": r.lambda, "h": r.h, "starts": r.starts, "fit": fit_json(&r.fit)}))
        .collect();
    let worst = reports
        .iter()
        .map(|r| r.fit.exponent / r.fit.stderr)
        .fold(f64::NEG_INFINITY, f64::max);
    let done = Done::ok(
        json!({"rho": section.rho, "replicas": sweep.replicas, "points": results}),
        format!("{} grid points, weakest decay {worst:.1} sigma", reports.len()),
    );
    Ok(done.check(
        reports
            .iter()
            .all(|r| r.fit.exponent < 0.0 && r.fit.exponent / r.fit.stderr <= -4.0),
        || format!("no-meet probability does not decay at 4 sigma (weakest {worst:.2} sigma)"),
    ))
}

fn scaling(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, _) = sweep_config(cfg, seed)?;
    let report = height_scaling(&sweep).map_err(runtime(hash))?;
    out.csv("sweep.csv", &output::SWEEP_HEADER, sweep_rows(&report.rows))
        .map_err(io)?;
    let slope = report.fit.exponent;
    Ok(Done::ok(
        json!({"fit": fit_json(&report.fit)}),
        format!("slope {slope:.4}, R² {:.5}", report.fit.r_squared),
    )
    .check(slope < 0.0, || {
        format!("height does not decrease with lambda (slope {slope})")
    }))
}

fn tails(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, _) = sweep_config(cfg, seed)?;
    let report = tail_exponent(&sweep).map_err(runtime(hash))?;
    out.csv("sweep.csv", &output::SWEEP_HEADER, sweep_rows(&report.rows))
        .map_err(io)?;
    let fits: Vec<Value> = sweep
        .lambdas
        .iter()
        .zip(&report.fits)
        .map(|(l, f)| json!({"lambda": l, "fit": fit_json(f)}))
        .collect();
    let slopes: Vec<String> = report
        .fits
        .iter()
        .filter(|f| f.applicable)
        .map(|f| format!("{:.4}", f.exponent))
        .collect();
    Ok(
        Done::ok(json!({"fits": fits}), format!("slopes [{}]", slopes.join(", ")))
            .check(report.fits.iter().all(|f| !f.applicable || f.exponent > 0.0), || {
                "a tail fit has a non-positive slope".into()
            }),
    )
}

fn area(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, section) = sweep_config(cfg, seed)?;
    let report = area_law(&sweep, section.delta, &section.area_multipliers).map_err(runtime(hash))?;
    out.csv("sweep.csv", &output::SWEEP_HEADER, sweep_rows(&report.rows))
        .map_err(io)?;
    let per_lambda: Vec<Value> = sweep
        .lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| {
            json!({
                "lambda": l,
                "mean_ratio": report.mean_ratio[i],
                "upper": fit_json(&report.upper[i]),
                "lower": fit_json(&report.lower[i]),
            })
        })
        .collect();
    let decays = report.upper.iter().chain(&report.lower).all(|f| f.exponent > 0.0);
    Ok(Done::ok(
        json!({"delta": section.delta, "multipliers": section.area_multipliers, "points": per_lambda}),
        format!("mean area / HN = {:?}", report.mean_ratio),
    )
    .check(decays, || "an area-event probability does not decay in N / H²".into()))
}

fn correlations(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, _) = sweep_config(cfg, seed)?;
    let err = runtime(hash);
    let points = correlation_length(&sweep).map_err(&err)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (idx, p) in points.iter().enumerate() {
        for (q, v) in [("xi", p.xi), ("xi_spectral", p.xi_spectral), ("gap", p.gap)] {
            rows.push(vec![num(p.lambda), num(p.h), q.to_string(), num(v), num(0.0)]);
        }
        let (_, spec) = sweep.bridge(p.lambda, sweep.n_multiplier).map_err(&err)?;
        let r_max = p.profile.len().saturating_sub(1);
        let i = (spec.n / 2).saturating_sub(r_max / 2);
        let cov = p
            .profile
            .iter()
            .map(|&(r, c)| vec![i.to_string(), (i + r).to_string(), num(c)]);
        out.csv(&format!("covariance_{idx}.csv"), &output::COVARIANCE_HEADER, cov)
            .map_err(io)?;
        results.push(json!({
            "lambda": p.lambda,
            "h": p.h,
            "xi": p.xi,
            "xi_spectral": p.xi_spectral,
            "gap": p.gap,
            "covariance_file": format!("covariance_{idx}.csv"),
            "fit": fit_json(&p.fit),
        }));
    }
    out.csv("sweep.csv", &output::SWEEP_HEADER, rows).map_err(io)?;
    let line = points
        .iter()
        .map(|p| format!("xi/xi_gap = {:.4}", p.xi / p.xi_spectral))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Done::ok(json!({"points": results}), line)
        .check(points.iter().all(|p| p.xi > 0.0), || "covariance does not decay".into()))
}

fn relax(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, _) = sweep_config(cfg, seed)?;
    let points = relaxation(&sweep).map_err(runtime(hash))?;
    let rows = points.iter().flat_map(|p| {
        p.tv.iter()
            .map(move |&(n, d)| vec![num(p.lambda), n.to_string(), num(d)])
    });
    out.csv("tv.csv", &output::TV_HEADER, rows).map_err(io)?;
    let results: Vec<Value> = points
        .iter()
        .map(|p| json!({"lambda": p.lambda, "h": p.h, "gap": p.gap, "fit": fit_json(&p.fit)}))
        .collect();
    let line = points
        .iter()
        .map(|p| format!("slope·H² = {:.4}", p.fit.exponent * p.h * p.h))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(
        Done::ok(json!({"points": results}), line).check(points.iter().all(|p| p.fit.exponent < 0.0), || {
            "total variation does not decay".into()
        }),
    )
}

fn moments(cfg: &Config, seed: u64, hash: &str, out: &mut Output) -> Outcome<Done> {
    let (sweep, section) = sweep_config(cfg, seed)?;
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for (i, &p) in section.moment_p.iter().enumerate() {
        let report = moment_scaling(&sweep, p).map_err(|e| match e {
            prewet::Error::Precondition(m) => Failure::Config(config::ConfigError {
                field: format!("sweep.moment_p[{i}]"),
                message: m,
            }),
            e => runtime(hash)(e),
        })?;
        rows.extend(sweep_rows(&report.rows));
        results.push(json!({"p": p, "spread": report.spread, "provenance": report.provenance}));
    }
    out.csv("sweep.csv", &output::SWEEP_HEADER, rows).map_err(io)?;
    let spreads: Vec<f64> = results
        .iter()
        .map(|r| r["spread"].as_f64().unwrap_or(f64::NAN))
        .collect();
    Ok(
        Done::ok(json!({"moments": results}), format!("max/min spreads {spreads:.4?}"))
            .check(spreads.iter().all(|s| s.is_finite()), || {
                "a normalized moment is not finite".into()
            }),
    )
}

fn oracle_check() -> Outcome<Done> {
    let spec = canonical_spec();
    let hash = spec.hash();
    let err = runtime(&hash);
    let report = identity_suite(Execution::default()).map_err(&err)?;
    let fresh = canonical_fixture().map_err(&err)?;
    let frozen = frozen_fixture();
    let tables = build_tables(&spec).map_err(&err)?;
    let rel = |a: f64, b: f64| {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    };
    let mut worst = rel(tables.z(), frozen.z);
    for (k, row) in frozen.marginals.iter().enumerate() {
        let m = tables.marginal(k).map_err(&err)?;
        for (x, p) in row.iter().enumerate() {
            worst = worst.max(rel(m.pmf[x], *p));
        }
    }
    let fixture_drift = fresh.max_deviation(&frozen);
    let fixture_fresh = fixture_drift <= 1e-14;
    let results = json!({
        "spec_hash": hash,
        "identities": report,
        "identities_passed": report.passed(),
        "fixture_matches_enumeration": fixture_fresh,
        "fixture_max_deviation": fixture_drift,
        "transfer_max_relative_deviation": worst,
    });
    let line = format!(
        "{} exchangeability, {} Chebyshev, {} Etemadi cases; fixture deviation {worst:.2e}",
        report.exchangeability_cases, report.chebyshev_cases, report.etemadi_cases
    );
    Ok(Done::ok(results, line)
        .check(report.passed(), || "identity or inequality grid failed".into())
        .check(fixture_fresh, || {
            format!("shipped fixture differs from enumeration by {fixture_drift:e}")
        })
        .check(worst <= 1e-10, || {
            format!("transfer deviates from fixture by {worst:e}")
        }))
}
