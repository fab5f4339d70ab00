use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::learner::LearnerConfig;
use crate::rng;
use crate::strategies::{StrategyName, StrategySpec};
use crate::{Error, Result};

pub const DEFAULT_SEEDING_MAX_EPOCHS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    Standard,
    /// Half the iterations, with the initial pool enlarged so the final
    /// labeled-set size matches the standard run.
    LargeInitial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Dataset manifest path, relative to the config file.
    pub dataset: Option<String>,
    pub strategy: StrategySpec,
    pub iterations: usize,
    pub epochs_per_iter: usize,
    pub initial_fraction: f64,
    pub seeding_dice_threshold: f64,
    pub seeding_max_epochs: usize,
    pub learner: LearnerConfig,
    pub seed: u64,
    pub variant: Variant,
    /// Zero the Adam moments before each iteration's training.
    pub reset_optimizer: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            strategy: StrategySpec::new(StrategyName::Random, 12, 6, 0),
            iterations: 50,
            epochs_per_iter: 10,
            initial_fraction: 0.10,
            seeding_dice_threshold: 0.10,
            seeding_max_epochs: DEFAULT_SEEDING_MAX_EPOCHS,
            learner: LearnerConfig::default(),
            seed: 0,
            variant: Variant::Standard,
            reset_optimizer: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::parse("config", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        self.learner.validate()?;
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be >= 1"));
        }
        if !(self.initial_fraction > 0.0 && self.initial_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "initial_fraction must be in (0, 1], got {}",
                self.initial_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.seeding_dice_threshold) {
            return Err(Error::invalid("seeding_dice_threshold must be in [0, 1]"));
        }
        Ok(())
    }

    pub fn effective_iterations(&self) -> usize {
        match self.variant {
            Variant::Standard => self.iterations,
            Variant::LargeInitial => (self.iterations / 2).max(1),
        }
    }

    pub fn initial_pool_size(&self, n_train: usize) -> Result<usize> {
        let base = (self.initial_fraction * n_train as f64).ceil() as usize;
        let extra = (self.iterations - self.effective_iterations()) * self.strategy.n_u;
        let size = base + extra;
        if size == 0 {
            return Err(Error::invalid("initial pool would contain 0 labeled samples"));
        }
        if size > n_train {
            return Err(Error::invalid(format!("initial pool of {size} exceeds train split of {n_train}")));
        }
        Ok(size)
    }

    /// `iterations · N_u` must fit in the unlabeled pool at the start.
    pub fn validate_budget(&self, n_train: usize) -> Result<()> {
        self.validate()?;
        let unlabeled = n_train - self.initial_pool_size(n_train)?;
        let needed = self.effective_iterations() * self.strategy.n_u;
        if needed > unlabeled {
            return Err(Error::invalid(format!(
                "{} iterations x {} queries need {needed} unlabeled samples, pool has {unlabeled}",
                self.effective_iterations(),
                self.strategy.n_u
            )));
        }
        Ok(())
    }

    /// Learner settings with the seed tied to the experiment seed.
    pub fn effective_learner(&self) -> LearnerConfig {
        LearnerConfig { seed: rng::derive(self.seed, self.learner.seed), ..self.learner.clone() }
    }

    pub fn label(&self) -> String {
        match self.variant {
            Variant::Standard => self.strategy.name.to_string(),
            Variant::LargeInitial => format!("{}_large_initial", self.strategy.name),
        }
    }
}
