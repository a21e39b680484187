//! The run configuration file: a flat TOML (or JSON) key-value document.
//!
//! ```toml
//! channels = 6
//! sense_k = 3
//! horizon_T = 2
//! p01 = 0.3
//! p11 = 0.5
//! initial_belief = [0.99, 0.5, 0.4, 0.39, 0.25, 0.25]
//! utility = "at-least-one"
//! policy = "myopic"
//! seed = 42
//! episodes = 100000
//! ```

use std::path::Path;

use myopic_core::{
    printed_uninformed_belief, stationary_belief, BeliefVector, ChannelModel, ExperimentConfig,
    PolicySpec, SensingAction, UtilityKind,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Where the initial belief comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BeliefSource {
    /// One idle probability per channel.
    Values(Vec<f64>),
    /// A rule applied to every channel.
    Rule(BeliefRule),
}

/// Uninformed initial beliefs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefRule {
    /// Fixed point of the belief update, `p01 / (p01 + 1 − p11)`.
    Stationary,
    /// `p01 / (p01 + p11)`; not a fixed point in general.
    #[serde(rename = "paper-footnote")]
    PrintedUninformed,
}

/// Named policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    /// Sense the `k` largest beliefs.
    Myopic,
    /// Brute-force optimum.
    Optimal,
}

/// The `policy` key: a name, or actions played open-loop before turning myopic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyChoice {
    /// `"myopic"` or `"optimal"`.
    Named(PolicyName),
    /// `[[0, 1, 3], [2, 4, 5]]`: these actions in slots 0, 1, …, then myopic.
    Actions(Vec<Vec<usize>>),
}

impl Default for PolicyChoice {
    fn default() -> Self {
        PolicyChoice::Named(PolicyName::Myopic)
    }
}

/// A run configuration as read from disk and echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigDocument {
    /// Number of channels `N`.
    pub channels: usize,
    /// Channels sensed per slot.
    pub sense_k: usize,
    /// Number of slots.
    #[serde(rename = "horizon_T")]
    pub horizon_t: usize,
    /// `P(idle next | busy now)`.
    pub p01: f64,
    /// `P(idle next | idle now)`.
    pub p11: f64,
    /// Initial idle probabilities.
    pub initial_belief: BeliefSource,
    /// Reward rule.
    #[serde(default)]
    pub utility: UtilityKind,
    /// Policy to evaluate or simulate.
    #[serde(default)]
    pub policy: PolicyChoice,
    /// Simulation seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Simulation episodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episodes: Option<u64>,
}

impl RunConfigDocument {
    /// Parses TOML text.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("config: {}", e.message())))
    }

    /// Parses JSON text.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))
    }

    /// Reads a file; `.json` files are JSON, everything else TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        if path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("json"))
        {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    /// The document describing an existing instance with a given policy.
    pub fn describe(cfg: &ExperimentConfig, policy: PolicyChoice) -> Self {
        Self {
            channels: cfg.channels(),
            sense_k: cfg.sense_k(),
            horizon_t: cfg.horizon(),
            p01: cfg.model().p01(),
            p11: cfg.model().p11(),
            initial_belief: BeliefSource::Values(cfg.initial_belief().as_slice().to_vec()),
            utility: cfg.utility(),
            policy,
            seed: None,
            episodes: None,
        }
    }

    /// Validates the document and builds the instance.
    pub fn experiment(&self) -> Result<ExperimentConfig, CliError> {
        let model = ChannelModel::new(self.p01, self.p11)?;
        let belief = match &self.initial_belief {
            BeliefSource::Values(v) => {
                if v.len() != self.channels {
                    return Err(CliError::Input(format!(
                        "initial_belief has {} entries but channels = {}",
                        v.len(),
                        self.channels
                    )));
                }
                BeliefVector::new(v.clone())?
            }
            BeliefSource::Rule(rule) => {
                let w = match rule {
                    BeliefRule::Stationary => stationary_belief(&model)?,
                    BeliefRule::PrintedUninformed => printed_uninformed_belief(&model)?,
                };
                BeliefVector::uniform(self.channels, w)?
            }
        };
        Ok(ExperimentConfig::new(
            self.sense_k,
            self.horizon_t,
            self.utility,
            model,
            belief,
        )?)
    }

    /// The configured policy.
    pub fn policy_spec(&self) -> Result<PolicySpec, CliError> {
        policy_spec(&self.policy, self.channels, self.horizon_t)
    }
}

/// Builds the policy for a choice on `n` channels over `horizon` slots.
pub fn policy_spec(
    choice: &PolicyChoice,
    n: usize,
    horizon: usize,
) -> Result<PolicySpec, CliError> {
    match choice {
        PolicyChoice::Named(PolicyName::Myopic) => Ok(PolicySpec::Myopic),
        PolicyChoice::Named(PolicyName::Optimal) => Ok(PolicySpec::Optimal),
        PolicyChoice::Actions(list) => {
            if list.len() > horizon {
                return Err(CliError::Input(format!(
                    "policy lists {} actions for {horizon} slots",
                    list.len()
                )));
            }
            let actions = list
                .iter()
                .map(|a| SensingAction::new(a.clone(), n))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(PolicySpec::open_loop(actions, PolicySpec::Myopic))
        }
    }
}
