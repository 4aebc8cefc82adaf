//! Experiment configuration: a TOML-addressable mirror of every knob a run
//! needs, with validation and a stable content hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::PolicyKind;

/// How budgets are assigned to arms outside the optimal subset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum BudgetRule {
    /// Independent `Uniform[0, b_max]` per suboptimal arm.
    #[default]
    UniformRandom,
    /// Every suboptimal arm gets exactly `b_max`.
    Fixed,
    /// Explicit per-arm budgets (entries for optimal arms are zeroed).
    PerArm { budgets: Vec<f64> },
}

/// Which manipulation strategy every strategic arm runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    None,
    #[default]
    Lsi,
    Random,
    PbLsi,
    PdLsi,
    PbdLsi,
}

/// Oracle selection, mirroring [`crate::oracle::OracleSpec`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OracleConfig {
    #[default]
    ExactTopK,
    GreedyCoverage,
    Failing {
        inner: Box<OracleConfig>,
        success_prob: f64,
    },
}

impl OracleConfig {
    pub fn build(&self) -> Result<crate::oracle::OracleSpec> {
        use crate::oracle::OracleSpec;
        Ok(match self {
            OracleConfig::ExactTopK => OracleSpec::exact_top_k(),
            OracleConfig::GreedyCoverage => OracleSpec::greedy_coverage(),
            OracleConfig::Failing {
                inner,
                success_prob,
            } => OracleSpec::failing(inner.build()?, *success_prob)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DistributionConfig {
    #[default]
    Bernoulli,
    TruncatedGaussian {
        sigma: f64,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilyConfig {
    #[default]
    Linear,
    /// Coverage with weights and link probabilities drawn from the
    /// instance-generation stream.
    Coverage { num_targets: usize },
}

fn default_policies() -> Vec<PolicyKind> {
    vec![PolicyKind::Scucb]
}

fn default_true() -> bool {
    true
}

/// Everything one experiment needs. Unset fields fall back to the synthetic
/// protocol defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub num_arms: usize,
    pub action_size: usize,
    pub horizon: usize,
    pub b_max: f64,
    #[serde(default)]
    pub budget_rule: BudgetRule,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub strategy: StrategyKind,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub gamma: f64,
    #[serde(default)]
    pub distribution: DistributionConfig,
    #[serde(default)]
    pub reward_family: FamilyConfig,
    /// Explicit true means; drawn `Uniform[0, 1]` per seed when absent.
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    pub seeds: Vec<u64>,
    /// Budget bound given to the learner; defaults to `b_max`.
    #[serde(default)]
    pub learner_b_max: Option<f64>,
    /// Rounds between recorded CSV rows; defaults to 1 for horizons up to
    /// 10^4 and 10 beyond.
    #[serde(default)]
    pub record_stride: Option<usize>,
    /// Scale the budget bonus term by gamma along with the concentration
    /// term. On by default: tuned runs damp the whole exploration bonus,
    /// which is what keeps the budget-aware policy competitive at small
    /// gamma. Set to false to tune only the concentration term.
    #[serde(default = "default_true")]
    pub scale_budget_bonus: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_arms == 0 {
            return Err(Error::Config("num_arms must be positive".into()));
        }
        if self.action_size < 1 || self.action_size > self.num_arms {
            return Err(Error::Config(format!(
                "action_size {} not in [1, {}]",
                self.action_size, self.num_arms
            )));
        }
        if self.horizon <= self.num_arms {
            return Err(Error::Config(format!(
                "horizon {} must exceed the {}-round initialization",
                self.horizon, self.num_arms
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.b_max < 0.0 || !self.b_max.is_finite() {
            return Err(Error::Config("b_max must be finite and >= 0".into()));
        }
        if let Some(lb) = self.learner_b_max {
            if lb < 0.0 || !lb.is_finite() {
                return Err(Error::Config(
                    "learner_b_max must be finite and >= 0".into(),
                ));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        if let Some(means) = &self.means {
            if means.len() != self.num_arms {
                return Err(Error::Config(format!(
                    "{} means for {} arms",
                    means.len(),
                    self.num_arms
                )));
            }
            if means.iter().any(|mu| !(0.0..=1.0).contains(mu)) {
                return Err(Error::Config("means must lie in [0, 1]".into()));
            }
        }
        if let BudgetRule::PerArm { budgets } = &self.budget_rule {
            if budgets.len() != self.num_arms {
                return Err(Error::Config(format!(
                    "{} budgets for {} arms",
                    budgets.len(),
                    self.num_arms
                )));
            }
        }
        if let FamilyConfig::Coverage { num_targets } = self.reward_family {
            if num_targets == 0 {
                return Err(Error::Config("coverage needs at least one target".into()));
            }
        }
        if let Some(stride) = self.record_stride {
            if stride == 0 {
                return Err(Error::Config("record_stride must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn effective_stride(&self) -> usize {
        self.record_stride
            .unwrap_or(if self.horizon <= 10_000 { 1 } else { 10 })
    }

    pub fn learner_b_max(&self) -> f64 {
        self.learner_b_max.unwrap_or(self.b_max)
    }

    /// Replications (one per seed).
    pub fn replications(&self) -> usize {
        self.seeds.len()
    }

    /// Stable content hash over the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
