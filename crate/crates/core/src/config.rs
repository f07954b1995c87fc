//! Run configuration, loaded from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::answerer::{AnswererFeatures, AnswererObjective};
use crate::env::GameConfig;
use crate::error::{Error, Result};
use crate::gain::{GainParams, UtilityKind};
use crate::svgd::{Bandwidth, StepRule};

/// Which agent a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Particle ensemble with gain-shaped rewards.
    #[default]
    Full,
    /// Uniform questioner, never updated.
    Random,
    /// One particle, no intrinsic reward, flat prior.
    Reinforce,
    /// Particle ensemble without intrinsic reward.
    EntropyOnly,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "none" => Ok(Method::Full),
            "random" => Ok(Method::Random),
            "reinforce" => Ok(Method::Reinforce),
            "entropy-only" => Ok(Method::EntropyOnly),
            other => Err(Error::Config(format!("unknown baseline '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Full => "full",
            Method::Random => "random",
            Method::Reinforce => "reinforce",
            Method::EntropyOnly => "entropy-only",
        })
    }
}

/// How a particle picks its query during training rollouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutSelection {
    /// Direct draw from the particle's policy.
    #[default]
    Sample,
    /// Gain-priced choice among the particle's own candidates.
    Gain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeekerConfig {
    pub n_particles: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta0: f64,
    pub utility: UtilityKind,
    /// Gaussian prior scale; `inf` gives a flat prior.
    pub prior_sigma: f64,
    /// Answer samples M per gain estimate.
    pub answer_samples: usize,
    /// Std-dev of the initial particle entries.
    pub init_scale: f64,
    pub bandwidth: Bandwidth,
    pub answerer_features: AnswererFeatures,
    pub rollout_selection: RolloutSelection,
    pub rollout_candidates: usize,
}

impl Default for SeekerConfig {
    fn default() -> Self {
        Self {
            n_particles: 10,
            gamma: 0.99,
            alpha: 0.01,
            beta: 1.0,
            eta0: 0.1,
            utility: UtilityKind::Entropy,
            prior_sigma: 10.0,
            answer_samples: 16,
            init_scale: 0.1,
            bandwidth: Bandwidth::Median,
            answerer_features: AnswererFeatures::default(),
            rollout_selection: RolloutSelection::Sample,
            rollout_candidates: 1,
        }
    }
}

impl SeekerConfig {
    pub fn gain_params(&self) -> GainParams {
        GainParams {
            samples: self.answer_samples,
            utility: self.utility,
            beta: self.beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub epochs: usize,
    pub episodes_per_epoch: usize,
    pub step_theta: f64,
    pub step_omega: f64,
    pub baseline_decay: f64,
    pub answerer_objective: AnswererObjective,
    pub step_rule: StepRule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Full,
            epochs: 100,
            episodes_per_epoch: 32,
            step_theta: 0.05,
            step_omega: 1e-3,
            baseline_decay: 0.9,
            answerer_objective: AnswererObjective::Imitation,
            step_rule: StepRule::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Candidates drawn from each particle before gain-priced selection.
    pub candidates_per_particle: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            candidates_per_particle: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub game: GameConfig,
    pub seeker: SeekerConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        let s = &self.seeker;
        let t = &self.train;
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if s.n_particles == 0 {
            return fail("n_particles must be positive");
        }
        if !(0.0..=1.0).contains(&s.gamma) {
            return fail("gamma must lie in [0, 1]");
        }
        if !(s.alpha > 0.0) || !(s.beta > 0.0) {
            return fail("alpha and beta must be positive");
        }
        if !(s.eta0 >= 0.0) {
            return fail("eta0 must be non-negative");
        }
        if !(s.prior_sigma > 0.0) {
            return fail("prior_sigma must be positive");
        }
        if s.answer_samples < 2 {
            return fail("answer_samples must be at least 2");
        }
        if !(s.init_scale >= 0.0) || !s.init_scale.is_finite() {
            return fail("init_scale must be finite and non-negative");
        }
        if let Bandwidth::Fixed(h) = s.bandwidth {
            if !(h > 0.0) {
                return fail("fixed bandwidth must be positive");
            }
        }
        if s.rollout_candidates == 0 || self.eval.candidates_per_particle == 0 {
            return fail("candidate counts must be positive");
        }
        if t.episodes_per_epoch == 0 {
            return fail("episodes_per_epoch must be positive");
        }
        if !(t.step_theta > 0.0) || !(t.step_omega > 0.0) {
            return fail("step sizes must be positive");
        }
        if !(0.0..1.0).contains(&t.baseline_decay) {
            return fail("baseline_decay must lie in [0, 1)");
        }
        Ok(())
    }

    /// Rewrites the config into the named comparison agent.
    pub fn with_method(mut self, method: Method) -> Self {
        self.train.method = method;
        match method {
            Method::Full => {}
            Method::Random => {
                self.seeker.n_particles = 1;
                self.seeker.eta0 = 0.0;
                self.seeker.init_scale = 0.0;
                self.seeker.rollout_selection = RolloutSelection::Sample;
            }
            Method::Reinforce => {
                self.seeker.n_particles = 1;
                self.seeker.eta0 = 0.0;
                self.seeker.prior_sigma = f64::INFINITY;
                self.seeker.rollout_selection = RolloutSelection::Sample;
            }
            Method::EntropyOnly => {
                self.seeker.eta0 = 0.0;
            }
        }
        self
    }
}
