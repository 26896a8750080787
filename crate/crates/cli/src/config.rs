//! Scenario configuration: flat TOML with nested tables, one file per run.
//!
//! Every field has a default, so a minimal config is just
//! `scenario = "counterexample-audit"`. The shipped files under `configs/`
//! carry the tuned values each scenario was calibrated with.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// One of the names listed by `hjblab list`.
    pub scenario: String,
    /// Base seed for every random stream in the run.
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// Output directory; defaults to `out/<scenario>`.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub counterexample: Counterexample,
    #[serde(default)]
    pub scan: Scan,
    #[serde(default)]
    pub lq_stochastic: Lq,
    #[serde(default)]
    pub adaptive_plant: Adaptive,
    #[serde(default)]
    pub critic: Critic,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub trials: Trials,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub features: Features,
}

/// Behavior policy for the learning scenarios. `critic-stochastic` ignores
/// this and always compares `zero` against `optimal`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    /// "optimal" | "zero" | "greedy_from_critic" | "optimal_plus_robustifier";
    /// when omitted each scenario uses its natural policy.
    #[serde(default)]
    pub kind: Option<String>,
    /// Robustifier gain `K` (optimal_plus_robustifier only).
    #[serde(default = "defaults::k_gain")]
    pub k: f64,
    /// Robustifier offset `A` (optimal_plus_robustifier only).
    #[serde(default = "defaults::one")]
    pub a: f64,
}

/// Critic feature map.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Features {
    /// Only "monomials" is selectable from config.
    #[serde(default = "defaults::features_kind")]
    pub kind: String,
    #[serde(default = "defaults::features_degree")]
    pub degree: u32,
    /// Include the constant feature; when omitted each scenario picks the
    /// smallest basis that represents its value function exactly.
    #[serde(default)]
    pub constant: Option<bool>,
}

/// Counterexample environment and robustifier gains.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Counterexample {
    /// Constant input gain `g(x) == g`.
    #[serde(default = "defaults::one")]
    pub g: f64,
    /// Robustifier gain `K`.
    #[serde(default = "defaults::k_gain")]
    pub k: f64,
    /// Robustifier offset `A`.
    #[serde(default = "defaults::one")]
    pub a: f64,
}

/// Dense sign-scan window on the slice `x1 = 0`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scan {
    #[serde(default = "defaults::scan_min")]
    pub x2_min: f64,
    #[serde(default = "defaults::scan_max")]
    pub x2_max: f64,
    #[serde(default = "defaults::scan_step")]
    pub step: f64,
}

/// Scalar stochastic LQ benchmark `dX = (aX + bU) dt + s dB`,
/// cost `q x^2 + r u^2`, discount `gamma`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lq {
    #[serde(default = "defaults::minus_one")]
    pub a: f64,
    #[serde(default = "defaults::one")]
    pub b: f64,
    #[serde(default = "defaults::one")]
    pub q: f64,
    #[serde(default = "defaults::one")]
    pub r: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    #[serde(default = "defaults::noise")]
    pub s: f64,
}

/// Adaptive-baseline scenario: shipped plant `x' = x + u`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adaptive {
    /// Feedback gain `K`; the run lasts `T = 20 / K`.
    #[serde(default = "defaults::one")]
    pub k: f64,
    #[serde(default = "defaults::g_min")]
    pub g_min: f64,
    #[serde(default = "defaults::two")]
    pub alpha_f: f64,
    #[serde(default = "defaults::two")]
    pub alpha_g: f64,
    #[serde(default = "defaults::one")]
    pub x0: f64,
    #[serde(default)]
    pub theta_f0: f64,
    #[serde(default = "defaults::theta_g0")]
    pub theta_g0: f64,
    #[serde(default = "defaults::adaptive_dt")]
    pub dt: f64,
    /// Steps between logged rows of run.csv.
    #[serde(default = "defaults::adaptive_log_stride")]
    pub log_stride: usize,
}

/// Critic learning knobs shared by the learning scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Critic {
    /// Learning rate `alpha`.
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    /// Replay capacity `M`.
    #[serde(default = "defaults::buffer")]
    pub buffer: usize,
    /// Excitation threshold the warm-up must reach.
    #[serde(default = "defaults::pe_threshold")]
    pub pe_threshold: f64,
    /// Warm-up duration (time units).
    #[serde(default = "defaults::one")]
    pub warmup: f64,
    /// Integrator steps between replay pushes.
    #[serde(default = "defaults::sample_stride")]
    pub sample_stride: usize,
    /// Warm-up restart period (time units); 0 disables restarts.
    #[serde(default = "defaults::restart_period")]
    pub restart_period: f64,
    /// Warm-up restart box half-width.
    #[serde(default = "defaults::one")]
    pub restart_radius: f64,
}

/// Fixed-step integrator window for the learning scenarios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: f64,
}

/// Monte Carlo batch shape.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trials {
    #[serde(default = "defaults::count")]
    pub count: usize,
    /// Integrator steps between logged grid points.
    #[serde(default = "defaults::log_stride")]
    pub log_stride: usize,
    /// Initial state (length must match the scenario's environment).
    #[serde(default = "defaults::x0")]
    pub x0: Vec<f64>,
}

mod defaults {
    pub fn seed() -> u64 {
        42
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn two() -> f64 {
        2.0
    }
    pub fn minus_one() -> f64 {
        -1.0
    }
    pub fn k_gain() -> f64 {
        3.0
    }
    pub fn scan_min() -> f64 {
        -5.0
    }
    pub fn scan_max() -> f64 {
        5.0
    }
    pub fn scan_step() -> f64 {
        1e-3
    }
    pub fn gamma() -> f64 {
        0.1
    }
    pub fn noise() -> f64 {
        0.1
    }
    pub fn g_min() -> f64 {
        0.5
    }
    pub fn theta_g0() -> f64 {
        0.6
    }
    pub fn adaptive_dt() -> f64 {
        1e-4
    }
    pub fn adaptive_log_stride() -> usize {
        100
    }
    pub fn alpha() -> f64 {
        10.0
    }
    pub fn buffer() -> usize {
        20
    }
    pub fn pe_threshold() -> f64 {
        1e-4
    }
    pub fn sample_stride() -> usize {
        5
    }
    pub fn restart_period() -> f64 {
        0.05
    }
    pub fn dt() -> f64 {
        1e-3
    }
    pub fn horizon() -> f64 {
        10.0
    }
    pub fn count() -> usize {
        200
    }
    pub fn log_stride() -> usize {
        10
    }
    pub fn x0() -> Vec<f64> {
        vec![0.5]
    }
    pub fn features_kind() -> String {
        "monomials".into()
    }
    pub fn features_degree() -> u32 {
        2
    }
}

impl Default for Counterexample {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Scan {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Lq {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Adaptive {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Critic {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Integrator {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Trials {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Policy {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}
impl Default for Features {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl ScenarioConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Self =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    /// Reject configurations no scenario can run.
    pub fn validate(&self) -> Result<()> {
        if !crate::scenarios::REGISTRY
            .iter()
            .any(|s| s.name == self.scenario)
        {
            bail!(
                "unknown scenario '{}'; run `hjblab list` for the registry",
                self.scenario
            );
        }
        let positives = [
            ("scan.step", self.scan.step),
            ("lq_stochastic.r", self.lq_stochastic.r),
            ("adaptive_plant.k", self.adaptive_plant.k),
            ("adaptive_plant.g_min", self.adaptive_plant.g_min),
            ("adaptive_plant.alpha_f", self.adaptive_plant.alpha_f),
            ("adaptive_plant.alpha_g", self.adaptive_plant.alpha_g),
            ("adaptive_plant.dt", self.adaptive_plant.dt),
            ("critic.alpha", self.critic.alpha),
            ("critic.pe_threshold", self.critic.pe_threshold),
            ("critic.warmup", self.critic.warmup),
            ("integrator.dt", self.integrator.dt),
            ("integrator.horizon", self.integrator.horizon),
            ("counterexample.k", self.counterexample.k),
            ("counterexample.a", self.counterexample.a),
        ];
        for (name, value) in positives {
            if !value.is_finite() || value <= 0.0 {
                bail!("{name} must be positive and finite (got {value})");
            }
        }
        if self.scan.x2_min >= self.scan.x2_max {
            bail!("scan window is empty: x2_min >= x2_max");
        }
        if self.lq_stochastic.q < 0.0 || self.lq_stochastic.gamma < 0.0 {
            bail!("lq_stochastic.q and lq_stochastic.gamma must be >= 0");
        }
        if self.critic.buffer == 0 || self.critic.sample_stride == 0 {
            bail!("critic.buffer and critic.sample_stride must be >= 1");
        }
        if self.trials.count == 0 || self.trials.log_stride == 0 {
            bail!("trials.count and trials.log_stride must be >= 1");
        }
        if self.critic.restart_period < 0.0 {
            bail!("critic.restart_period must be >= 0 (0 disables restarts)");
        }
        let kinds = [
            "optimal",
            "zero",
            "greedy_from_critic",
            "optimal_plus_robustifier",
        ];
        if let Some(kind) = &self.policy.kind {
            if !kinds.contains(&kind.as_str()) {
                bail!("policy.kind must be one of {kinds:?} (got '{kind}')");
            }
        }
        if self.features.kind != "monomials" {
            bail!(
                "features.kind supports only 'monomials' (got '{}')",
                self.features.kind
            );
        }
        if self.features.degree < 2 {
            bail!("features.degree must be >= 2 so the benchmark values stay representable");
        }
        if self.integrator.dt * self.critic.alpha * self.critic.buffer as f64 > 1.0 {
            bail!(
                "integrator.dt = {} violates the critic stability guard dt <= 1/(alpha*M) = {}",
                self.integrator.dt,
                1.0 / (self.critic.alpha * self.critic.buffer as f64)
            );
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out").join(&self.scenario))
    }
}
