//! Experiment configuration.
//!
//! A [`ScenarioConfig`] is always fully resolved: every field is present and
//! validated. Partial sources (CLI flags, a JSON config file) are layered as
//! [`PartialConfig`] values and resolved against the built-in defaults, some
//! of which depend on `K`, `L` and the scenario.

use serde::{Deserialize, Serialize};

use crate::choice::{OptionId, PreferenceVector};
use crate::dirichlet_luce::validate_alpha;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::policy::PolicyKind;

/// Ground truth used when `K = 5` and no `theta_true` is given.
pub const DEFAULT_THETA_5: [f64; 5] = [0.40, 0.25, 0.16, 0.11, 0.08];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// No constraints at any time.
    Free,
    /// One option is forced into every presentation.
    Promotion,
    /// Presentations are restricted to `init_pool` during the initial phase.
    Censorship,
    /// The initial phase always shows the same `L` options.
    #[serde(alias = "unfair")]
    UnfairComparison,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Free => "free",
            Scenario::Promotion => "promotion",
            Scenario::Censorship => "censorship",
            Scenario::UnfairComparison => "unfair_comparison",
        }
    }

    /// Whether the scenario has a constrained initial phase.
    pub fn has_initial_phase(self) -> bool {
        matches!(self, Scenario::Censorship | Scenario::UnfairComparison)
    }
}

/// Full description of an experiment. Option indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub runs: usize,
    pub theta_true: Vec<f64>,
    pub model: ModelKind,
    pub policy: PolicyKind,
    pub alpha: Vec<f64>,
    pub promoted_option: usize,
    pub init_phase_length: usize,
    pub init_pool: Vec<usize>,
    pub thompson_sweeps: usize,
    pub estimate_samples: usize,
    pub estimate_burn_in: usize,
    pub thin: usize,
    pub master_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        PartialConfig::default()
            .resolve()
            .expect("built-in defaults are valid")
    }
}

/// Any subset of the configuration fields; unset fields fall through to the
/// next layer and finally to the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub scenario: Option<Scenario>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub runs: Option<usize>,
    pub theta_true: Option<Vec<f64>>,
    pub model: Option<ModelKind>,
    pub policy: Option<PolicyKind>,
    pub alpha: Option<Vec<f64>>,
    pub promoted_option: Option<usize>,
    pub init_phase_length: Option<usize>,
    pub init_pool: Option<Vec<usize>>,
    pub thompson_sweeps: Option<usize>,
    pub estimate_samples: Option<usize>,
    pub estimate_burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub master_seed: Option<u64>,
}

impl PartialConfig {
    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: PartialConfig) -> PartialConfig {
        PartialConfig {
            scenario: self.scenario.or(lower.scenario),
            k: self.k.or(lower.k),
            l: self.l.or(lower.l),
            t: self.t.or(lower.t),
            runs: self.runs.or(lower.runs),
            theta_true: self.theta_true.or(lower.theta_true),
            model: self.model.or(lower.model),
            policy: self.policy.or(lower.policy),
            alpha: self.alpha.or(lower.alpha),
            promoted_option: self.promoted_option.or(lower.promoted_option),
            init_phase_length: self.init_phase_length.or(lower.init_phase_length),
            init_pool: self.init_pool.or(lower.init_pool),
            thompson_sweeps: self.thompson_sweeps.or(lower.thompson_sweeps),
            estimate_samples: self.estimate_samples.or(lower.estimate_samples),
            estimate_burn_in: self.estimate_burn_in.or(lower.estimate_burn_in),
            thin: self.thin.or(lower.thin),
            master_seed: self.master_seed.or(lower.master_seed),
        }
    }

    /// Fills unset fields with defaults and validates the result.
    pub fn resolve(self) -> Result<ScenarioConfig> {
        let scenario = self.scenario.unwrap_or(Scenario::Free);
        let k = self.k.unwrap_or(5);
        let l = self.l.unwrap_or(2.min(k));
        let config = ScenarioConfig {
            scenario,
            k,
            l,
            t: self.t.unwrap_or(10_000),
            runs: self.runs.unwrap_or(10),
            theta_true: self.theta_true.unwrap_or_else(|| default_theta(k)),
            model: self.model.unwrap_or(ModelKind::DirichletLuce),
            policy: self.policy.unwrap_or(PolicyKind::Thompson),
            alpha: self.alpha.unwrap_or_else(|| vec![1.0; k]),
            promoted_option: self.promoted_option.unwrap_or(2.min(k.saturating_sub(1))),
            init_phase_length: self.init_phase_length.unwrap_or(100),
            init_pool: self
                .init_pool
                .unwrap_or_else(|| default_init_pool(scenario, k, l)),
            thompson_sweeps: self.thompson_sweeps.unwrap_or(5),
            estimate_samples: self.estimate_samples.unwrap_or(4000),
            estimate_burn_in: self.estimate_burn_in.unwrap_or(1000),
            thin: self.thin.unwrap_or(1),
            master_seed: self.master_seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<ScenarioConfig> for PartialConfig {
    fn from(c: ScenarioConfig) -> Self {
        PartialConfig {
            scenario: Some(c.scenario),
            k: Some(c.k),
            l: Some(c.l),
            t: Some(c.t),
            runs: Some(c.runs),
            theta_true: Some(c.theta_true),
            model: Some(c.model),
            policy: Some(c.policy),
            alpha: Some(c.alpha),
            promoted_option: Some(c.promoted_option),
            init_phase_length: Some(c.init_phase_length),
            init_pool: Some(c.init_pool),
            thompson_sweeps: Some(c.thompson_sweeps),
            estimate_samples: Some(c.estimate_samples),
            estimate_burn_in: Some(c.estimate_burn_in),
            thin: Some(c.thin),
            master_seed: Some(c.master_seed),
        }
    }
}

/// The `K = 5` default, otherwise weights proportional to `K, K-1, ..., 1`.
pub fn default_theta(k: usize) -> Vec<f64> {
    if k == DEFAULT_THETA_5.len() {
        return DEFAULT_THETA_5.to_vec();
    }
    let total = (k * (k + 1) / 2) as f64;
    (0..k).map(|i| (k - i) as f64 / total).collect()
}

/// Censorship hides the best options behind the `L` worst; the unfair
/// comparison pins the `L` best.
fn default_init_pool(scenario: Scenario, k: usize, l: usize) -> Vec<usize> {
    match scenario {
        Scenario::UnfairComparison => (0..l.min(k)).collect(),
        _ => (k.saturating_sub(l)..k).collect(),
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k < 2 {
            return invalid(format!("K must be at least 2, got {}", self.k));
        }
        if self.l == 0 || self.l > self.k {
            return invalid(format!("L must be in [1, K = {}], got {}", self.k, self.l));
        }
        if self.runs == 0 {
            return invalid("runs must be at least 1".into());
        }
        if self.theta_true.len() != self.k {
            return invalid(format!(
                "theta_true has {} entries, expected K = {}",
                self.theta_true.len(),
                self.k
            ));
        }
        PreferenceVector::new(self.theta_true.clone())?;
        if self.theta_true.windows(2).any(|w| w[0] <= w[1]) {
            return invalid("theta_true must be strictly decreasing".into());
        }
        if self.alpha.len() != self.k {
            return invalid(format!(
                "alpha has {} entries, expected K = {}",
                self.alpha.len(),
                self.k
            ));
        }
        validate_alpha(&self.alpha)?;
        if self.scenario == Scenario::Promotion && self.promoted_option >= self.k {
            return Err(Error::UnknownOption {
                option: self.promoted_option,
                k: self.k,
            });
        }
        if self.scenario.has_initial_phase() {
            if let Some(bad) = self.init_pool.iter().find(|o| **o >= self.k) {
                return Err(Error::UnknownOption {
                    option: *bad,
                    k: self.k,
                });
            }
            let mut pool = self.init_pool.clone();
            pool.sort_unstable();
            pool.dedup();
            if pool.len() < self.l {
                return Err(Error::InfeasibleConstraint(format!(
                    "initial pool of {} options cannot fill {} slots",
                    pool.len(),
                    self.l
                )));
            }
            if self.scenario == Scenario::UnfairComparison && pool.len() != self.l {
                return Err(Error::InfeasibleConstraint(format!(
                    "unfair comparison pins exactly L = {} options, got {}",
                    self.l,
                    pool.len()
                )));
            }
        }
        if self.thompson_sweeps == 0 || self.estimate_samples == 0 || self.thin == 0 {
            return invalid("thompson_sweeps, estimate_samples and thin must be positive".into());
        }
        Ok(())
    }

    pub fn theta(&self) -> PreferenceVector {
        PreferenceVector::new(self.theta_true.clone()).expect("validated")
    }

    pub fn promoted(&self) -> OptionId {
        OptionId(self.promoted_option)
    }

    /// Length of the interaction window used for the top-L discovery rate.
    pub fn late_window(&self) -> usize {
        late_window(self.t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let partial: PartialConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?;
        partial.resolve()
    }
}

/// Last `max(1000, T/10)` interactions, capped at `T`.
pub fn late_window(t: usize) -> usize {
    1000.max(t / 10).min(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ScenarioConfig::default();
        assert_eq!(c.scenario, Scenario::Free);
        assert_eq!((c.k, c.l, c.t, c.runs), (5, 2, 10_000, 10));
        assert_eq!(c.theta_true, DEFAULT_THETA_5.to_vec());
        assert_eq!(c.alpha, vec![1.0; 5]);
        assert_eq!(c.promoted_option, 2);
        assert_eq!(c.model, ModelKind::DirichletLuce);
        assert_eq!(c.policy, PolicyKind::Thompson);
        assert_eq!(
            (
                c.thompson_sweeps,
                c.estimate_samples,
                c.estimate_burn_in,
                c.thin
            ),
            (5, 4000, 1000, 1)
        );
    }

    #[test]
    fn scenario_dependent_pools() {
        let censor = PartialConfig {
            scenario: Some(Scenario::Censorship),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(censor.init_pool, vec![3, 4]);
        let unfair = PartialConfig {
            scenario: Some(Scenario::UnfairComparison),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(unfair.init_pool, vec![0, 1]);
    }

    #[test]
    fn generic_default_theta_is_decreasing() {
        let theta = default_theta(4);
        assert_eq!(theta, vec![0.4, 0.3, 0.2, 0.1]);
        let c = PartialConfig {
            k: Some(7),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(c.theta_true.len(), 7);
    }

    #[test]
    fn layering_prefers_upper() {
        let upper = PartialConfig {
            t: Some(50),
            ..Default::default()
        };
        let lower = PartialConfig {
            t: Some(70),
            runs: Some(3),
            ..Default::default()
        };
        let c = upper.over(lower).resolve().unwrap();
        assert_eq!((c.t, c.runs), (50, 3));
    }

    #[test]
    fn validation_failures() {
        let bad = |p: PartialConfig| p.resolve().is_err();
        assert!(bad(PartialConfig {
            theta_true: Some(vec![0.5, 0.5, 0.2]),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            theta_true: Some(vec![0.1, 0.2, 0.3, 0.2, 0.2]),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            l: Some(6),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            alpha: Some(vec![1.0, 1.0, 0.0, 1.0, 1.0]),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            scenario: Some(Scenario::Censorship),
            init_pool: Some(vec![4]),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            scenario: Some(Scenario::UnfairComparison),
            init_pool: Some(vec![0, 1, 2]),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            scenario: Some(Scenario::Promotion),
            promoted_option: Some(5),
            ..Default::default()
        }));
        assert!(bad(PartialConfig {
            runs: Some(0),
            ..Default::default()
        }));
    }

    #[test]
    fn json_round_trip() {
        let c = PartialConfig {
            scenario: Some(Scenario::Promotion),
            master_seed: Some(u64::MAX),
            theta_true: Some(vec![0.4, 0.3, 0.2, 0.1]),
            k: Some(4),
            ..Default::default()
        }
        .resolve()
        .unwrap();
        let text = c.to_json();
        assert!(text.contains("\"K\": 4"));
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), c);
        assert!(ScenarioConfig::from_json("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn late_window_rule() {
        assert_eq!(late_window(10_000), 1000);
        assert_eq!(late_window(50_000), 5000);
        assert_eq!(late_window(300), 300);
        assert_eq!(late_window(0), 0);
    }
}
