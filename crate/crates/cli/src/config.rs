//! Run configuration: built-in profiles with a TOML file merged on top.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nagi_core::{EvolutionConfig, TaskKind, TaskSettings};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Paper,
    Desk,
}

impl FromStr for Profile {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            _ => Err(CliError::Usage(format!("unknown profile `{s}` (expected paper or desk)"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    pub profile: Profile,
    /// Write a resumable checkpoint every this many generations (0 = only
    /// at the end).
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub environment: TaskSettings,
}

fn default_checkpoint_every() -> usize {
    50
}

/// Per-step decay that matches ten steps of 1% decay, for 1 ms steps.
fn coarse_decay() -> f64 {
    1.0 - 0.99f64.powi(10)
}

impl RunConfig {
    pub fn profile_defaults(task: TaskKind, profile: Profile) -> Self {
        let mut evolution = EvolutionConfig::default();
        let mut environment = TaskSettings::default();
        let (pop, gens) = match (profile, task) {
            (Profile::Paper, TaskKind::CartPole) => (256, 500),
            (Profile::Paper, _) => (100, 1000),
            (Profile::Desk, TaskKind::FoodForaging) => (20, 30),
            (Profile::Desk, TaskKind::LogicGate) => (50, 100),
            (Profile::Desk, TaskKind::CartPole) => (64, 100),
        };
        evolution.population_size = pop;
        evolution.generations = gens;
        if profile == Profile::Desk {
            // 1,000 steps of 1 ms keep a sample at one second of network
            // time, with decay and bias rescaled to the coarser step.
            let k = coarse_decay();
            let sim = &mut environment.sim;
            sim.dt_ms = 1.0;
            sim.membrane_decay_per_step = k;
            sim.theta_decay_per_step = k;
            sim.bias_current *= k / 0.01;
            environment.lifetime.sample_steps = 1000;
            environment.cartpole.steps_per_iteration = 50;
        }
        Self { task, profile, checkpoint_every: default_checkpoint_every(), evolution, environment }
    }

    /// Profile defaults, then `file` merged over them, then `seed`.
    pub fn resolve(task: TaskKind, profile: Profile, file: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let base = Self::profile_defaults(task, profile);
        let mut cfg = match file {
            None => base,
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                Self::merge_toml(&base, &text).map_err(|e| match e {
                    CliError::Config { key, message } => {
                        CliError::Config { key, message: format!("{}: {message}", path.display()) }
                    }
                    other => other,
                })?
            }
        };
        cfg.task = task;
        cfg.profile = profile;
        if let Some(s) = seed {
            cfg.evolution.master_seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overlays the tables of `text` onto `base`. Unknown keys and type
    /// errors are reported with their dotted key path.
    pub fn merge_toml(base: &Self, text: &str) -> Result<Self> {
        let overlay: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Config { key: String::new(), message: e.to_string() })?;
        let mut merged = toml::Table::try_from(base)
            .map_err(|e| CliError::Config { key: String::new(), message: e.to_string() })?;
        merge_tables(&mut merged, overlay);
        let de = toml::Value::Table(merged);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config {
            key: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.evolution.validate()?;
        self.environment.validate()?;
        if self.evolution.master_seed > i64::MAX as u64 {
            return Err(CliError::Config {
                key: "evolution.master_seed".into(),
                message: "seed must fit in a signed 64-bit integer".into(),
            });
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

fn merge_tables(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
