//! JSON run configuration. Unknown keys are rejected; every validation error
//! names the offending field by its dotted path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use prewet::experiments::SweepConfig;
use prewet::model::{discrete_gaussian, geometric, lazy_srw, BridgeSpec, Potential, StepDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    fn new(field: impl Into<String>, message: impl ToString) -> Self {
        Self {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error at `{}`: {}", self.field, self.message)
    }
}

type Checked<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub bridge: Option<BridgeConfig>,
    pub sweep: Option<SweepSection>,
    pub sample: Option<SampleSection>,
    pub coupling: Option<CouplingSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepConfig {
    #[default]
    Lazy,
    Geometric {
        q: f64,
        x_max: u32,
    },
    Gaussian {
        s: f64,
        x_max: u32,
    },
    /// Explicit `(jump, probability)` pairs.
    Custom {
        jumps: Vec<(i64, f64)>,
    },
}

impl StepConfig {
    pub fn build(&self, field: &str) -> Checked<StepDistribution> {
        let built = match self {
            StepConfig::Lazy => Ok(lazy_srw()),
            StepConfig::Geometric { q, x_max } => geometric(*q, *x_max),
            StepConfig::Gaussian { s, x_max } => discrete_gaussian(*s, *x_max),
            StepConfig::Custom { jumps } => StepDistribution::new(jumps),
        };
        built.map_err(|e| ConfigError::new(field, e))
    }
}

fn linear() -> Potential {
    Potential::Linear
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaThresholds {
    pub upper: f64,
    pub lower: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeConfig {
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default = "linear")]
    pub potential: Potential,
    pub lambda: f64,
    pub n: usize,
    #[serde(default)]
    pub a: usize,
    #[serde(default)]
    pub b: usize,
    /// Height cap; defaults to `ceil(8 H) + max(a, b) + max jump`.
    pub k: Option<usize>,
    pub tail_tolerance: Option<f64>,
    /// Area events `{A >= upper}`, `{A <= lower}`; omitted means `δ = 1/2` around `H N`.
    pub area: Option<AreaThresholds>,
}

impl BridgeConfig {
    pub fn spec(&self) -> Checked<BridgeSpec> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ConfigError::new(
                "bridge.lambda",
                format!("{} must be finite and >= 0", self.lambda),
            ));
        }
        if self.n == 0 {
            return Err(ConfigError::new("bridge.n", "must be at least 1"));
        }
        self.potential
            .validate()
            .map_err(|e| ConfigError::new("bridge.potential", e))?;
        let step = self.step.build("bridge.step")?;
        let k = match self.k {
            Some(k) => k,
            None if self.lambda > 0.0 => {
                let h = prewet::solve_h(&self.potential, 1.0, self.lambda)
                    .map_err(|e| ConfigError::new("bridge.lambda", e))?;
                prewet::model::default_truncation(h, self.a.max(self.b), &step)
            }
            None => return Err(ConfigError::new("bridge.k", "required when lambda = 0")),
        };
        for (field, v) in [("bridge.a", self.a), ("bridge.b", self.b)] {
            if v > k {
                return Err(ConfigError::new(field, format!("{v} exceeds the height cap K = {k}")));
            }
        }
        let mut spec = BridgeSpec::new(step, self.potential.clone(), self.lambda, self.n, self.a, self.b, k)
            .map_err(|e| ConfigError::new("bridge", e))?;
        if let Some(eps) = self.tail_tolerance {
            spec = spec
                .with_tail_tolerance(eps)
                .map_err(|e| ConfigError::new("bridge.tail_tolerance", e))?;
        }
        Ok(spec)
    }
}

fn default_lambdas() -> Vec<f64> {
    vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
}
fn default_multiplier() -> f64 {
    20.0
}
fn default_t_grid() -> Vec<f64> {
    (2..=8).map(f64::from).collect()
}
fn default_replicas() -> usize {
    100_000
}
fn default_delta() -> f64 {
    0.5
}
fn default_area_multipliers() -> Vec<f64> {
    vec![8.0, 16.0, 24.0, 32.0]
}
fn default_moment_p() -> Vec<f64> {
    vec![1.25, 2.0, 2.5]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default = "linear")]
    pub potential: Potential,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_multiplier")]
    pub n_multiplier: f64,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<f64>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// Area-event parameter `δ`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// `N / H²` values of the area sweep.
    #[serde(default = "default_area_multipliers")]
    pub area_multipliers: Vec<f64>,
    #[serde(default = "default_moment_p")]
    pub moment_p: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl SweepSection {
    pub fn build(&self, seed: u64) -> Checked<SweepConfig> {
        for (i, l) in self.lambdas.iter().enumerate() {
            if !(*l >= 0.0 && l.is_finite()) {
                return Err(ConfigError::new(
                    format!("sweep.lambdas[{i}]"),
                    format!("{l} must be finite and >= 0"),
                ));
            }
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(ConfigError::new("sweep.lambdas", "grid must be strictly decreasing"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(ConfigError::new("sweep.delta", format!("{} not in (0, 1]", self.delta)));
        }
        if self.replicas == 0 {
            return Err(ConfigError::new("sweep.replicas", "must be positive"));
        }
        let mut cfg = SweepConfig::desk(self.potential.clone());
        cfg.step = self.step.build("sweep.step")?;
        cfg.lambdas = self.lambdas.clone();
        cfg.n_multiplier = self.n_multiplier;
        cfg.t_grid = self.t_grid.clone();
        cfg.replicas = self.replicas;
        cfg.seed = seed;
        cfg.validate().map_err(|e| {
            let field = match &e {
                prewet::Error::InvalidParameter { name, .. } => format!("sweep.{name}"),
                prewet::Error::InvalidPotential(_) => "sweep.potential".into(),
                _ => "sweep".into(),
            };
            ConfigError::new(field, e)
        })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    #[default]
    Exact,
    Heatbath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSection {
    #[serde(default = "default_sample_count")]
    pub count: usize,
    #[serde(default)]
    pub method: SampleMethod,
    /// Heat-bath sweeps between recorded paths.
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
}

fn default_sample_count() -> usize {
    1000
}
fn default_sweeps() -> usize {
    100
}

impl Default for SampleSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    /// Horizons in units of `H²`.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
    /// Second walk starts at `round(rho H)`; the first at 0.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_horizons() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
}
fn default_rho() -> f64 {
    1.0
}

impl Default for CouplingSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl CouplingSection {
    pub fn check(&self) -> Checked<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(ConfigError::new("coupling.rho", format!("{} not in [0, 1]", self.rho)));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|h| !(*h > 0.0)) {
            return Err(ConfigError::new("coupling.horizons", "need positive horizons"));
        }
        Ok(())
    }
}

/// Canonical N = 6 instance used when no bridge is configured.
pub fn canonical_bridge() -> BridgeConfig {
    BridgeConfig {
        step: StepConfig::Lazy,
        potential: Potential::Linear,
        lambda: 0.3,
        n: 6,
        a: 0,
        b: 1,
        k: Some(6),
        tail_tolerance: None,
        area: Some(AreaThresholds {
            upper: prewet::oracle::CANONICAL_UPPER,
            lower: prewet::oracle::CANONICAL_LOWER,
        }),
    }
}

pub fn parse(text: &str) -> Checked<Config> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<root>".to_string() } else { path };
        ConfigError::new(field, e.into_inner())
    })
}

impl Config {
    /// Hex SHA-256 of the configuration as parsed, defaults filled in.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_lambda_names_the_field() {
        let c = parse(r#"{"bridge": {"lambda": -1, "n": 4}}"#).unwrap();
        let e = c.bridge.unwrap().spec().unwrap_err();
        assert_eq!(e.field, "bridge.lambda");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse(r#"{"bridge": {"lambda": 0.1, "n": 4, "colour": 1}}"#).unwrap_err();
        assert_eq!(e.field, "bridge.colour");
        assert!(e.message.contains("colour"));
        let e = parse(r#"{"sweep": {"lambdas": "x"}}"#).unwrap_err();
        assert_eq!(e.field, "sweep.lambdas");
    }

    #[test]
    fn defaults_fill_in() {
        let c = parse(r#"{"sweep": {}, "coupling": {}}"#).unwrap();
        assert_eq!(c.sweep.unwrap().lambdas.len(), 5);
        assert_eq!(c.coupling.unwrap().rho, 1.0);
        let spec = canonical_bridge().spec().unwrap();
        assert_eq!((spec.n, spec.k, spec.b), (6, 6, 1));
    }

    #[test]
    fn sweep_grid_must_decrease() {
        let c = parse(r#"{"sweep": {"lambdas": [1e-3, 1e-2]}}"#).unwrap();
        assert_eq!(c.sweep.unwrap().build(0).unwrap_err().field, "sweep.lambdas");
    }
}
