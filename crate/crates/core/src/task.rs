//! The three benchmark tasks behind one evaluation interface.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cartpole::{run_cartpole_lifetime, shuffle, CartPoleConfig, Mode};
use crate::environment::{run_lifetime, BinaryEnvironment, FoodColor, FoodCondition, Gate, LifetimeConfig, LifetimeReport};
use crate::error::{Error, Result};
use crate::evolution::Task;
use crate::genome::{develop, Genome, GenomeConfig};
use crate::seed::{derive_seed, rng_from};
use crate::spiking::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    FoodForaging,
    LogicGate,
    CartPole,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::FoodForaging, TaskKind::LogicGate, TaskKind::CartPole];

    pub fn id(self) -> &'static str {
        match self {
            TaskKind::FoodForaging => "food-foraging",
            TaskKind::LogicGate => "logic-gate",
            TaskKind::CartPole => "cart-pole",
        }
    }

    /// `(inputs, outputs)` of the controller.
    pub fn arity(self) -> (usize, usize) {
        match self {
            TaskKind::FoodForaging => (4, 2),
            TaskKind::LogicGate => (6, 2),
            TaskKind::CartPole => (12, 2),
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskKind::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown task `{s}` (expected food-foraging, logic-gate or cart-pole)")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskSettings {
    pub sim: SimParams,
    pub lifetime: LifetimeConfig,
    pub cartpole: CartPoleConfig,
    /// Draw a fresh condition (food) or gate order for every training
    /// lifetime instead of the fixed cycle. The order stays cyclic within
    /// the lifetime either way.
    pub shuffle_training_conditions: bool,
}

impl TaskSettings {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.lifetime.validate()?;
        self.cartpole.validate()
    }
}

/// One lifetime plus the orders it was run with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: LifetimeReport,
    pub input_order: Vec<String>,
    pub condition_order: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRunner {
    pub kind: TaskKind,
    pub settings: TaskSettings,
    pub genome: GenomeConfig,
    pub mode: Mode,
}

const WEIGHT_STREAM: u64 = 0;
const ENVIRONMENT_STREAM: u64 = 1;

impl TaskRunner {
    pub fn new(kind: TaskKind, settings: TaskSettings, genome: GenomeConfig, mode: Mode) -> Self {
        Self { kind, settings, genome, mode }
    }

    /// Binary environment for one lifetime. The input order is always
    /// random; the condition order is random in testing and fixed in
    /// training unless `shuffle_training_conditions` is set.
    pub fn binary_environment<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<BinaryEnvironment> {
        match self.kind {
            TaskKind::FoodForaging => {
                let inputs = if rng.random_bool(0.5) {
                    [FoodColor::Black, FoodColor::White]
                } else {
                    [FoodColor::White, FoodColor::Black]
                };
                let mut conditions = FoodCondition::ALL;
                if self.shuffles_conditions() {
                    shuffle(&mut conditions, rng);
                }
                Some(BinaryEnvironment::food(inputs, conditions))
            }
            TaskKind::LogicGate => {
                let mut pairs = [(false, false), (false, true), (true, false), (true, true)];
                shuffle(&mut pairs, rng);
                let mut gates: Vec<Gate> = match self.mode {
                    Mode::Train => Gate::TRAINING.to_vec(),
                    Mode::Test => Gate::TEST.to_vec(),
                };
                if self.shuffles_conditions() {
                    shuffle(&mut gates, rng);
                }
                Some(BinaryEnvironment::logic(&gates, pairs))
            }
            TaskKind::CartPole => None,
        }
    }

    fn shuffles_conditions(&self) -> bool {
        self.mode == Mode::Test || self.settings.shuffle_training_conditions
    }

    /// Develops `genome` with weights from `seed` and runs one lifetime.
    pub fn evaluate_detailed(&self, genome: &Genome, seed: u64) -> Result<Evaluation> {
        let (n_in, n_out) = self.kind.arity();
        if genome.n_inputs != n_in || genome.n_outputs != n_out {
            return Err(Error::ArityMismatch {
                expected_inputs: n_in,
                expected_outputs: n_out,
                found_inputs: genome.n_inputs,
                found_outputs: genome.n_outputs,
            });
        }
        let mut weight_rng = rng_from(derive_seed(seed, &[WEIGHT_STREAM]), &[]);
        let mut env_rng = rng_from(derive_seed(seed, &[ENVIRONMENT_STREAM]), &[]);
        let mut net = develop(genome, &self.settings.sim, &self.genome, &mut weight_rng)?;
        let dt = self.settings.sim.dt_ms;
        match self.binary_environment(&mut env_rng) {
            Some(env) => {
                let report = run_lifetime(&mut net, &env, &self.settings.lifetime, dt)?;
                Ok(Evaluation { report, input_order: env.input_order, condition_order: env.condition_order })
            }
            None => {
                let cp = &self.settings.cartpole;
                let conditions = cp.schedule.conditions(self.mode, &mut env_rng);
                let report = run_cartpole_lifetime(&mut net, &conditions, cp, dt, &mut env_rng)?;
                Ok(Evaluation {
                    report,
                    input_order: Vec::new(),
                    condition_order: conditions.iter().map(|s| s.to_string()).collect(),
                })
            }
        }
    }
}

impl Task for TaskRunner {
    fn arity(&self) -> (usize, usize) {
        self.kind.arity()
    }

    fn evaluate(&self, genome: &Genome, seed: u64) -> Result<LifetimeReport> {
        Ok(self.evaluate_detailed(genome, seed)?.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::init_genome;

    #[test]
    fn task_ids_round_trip() {
        for t in TaskKind::ALL {
            assert_eq!(t.id().parse::<TaskKind>().unwrap(), t);
        }
        assert!("pong".parse::<TaskKind>().is_err());
    }

    #[test]
    fn training_food_keeps_condition_cycle() {
        let r = TaskRunner::new(TaskKind::FoodForaging, TaskSettings::default(), GenomeConfig::default(), Mode::Train);
        for s in 0..10 {
            let env = r.binary_environment(&mut rng_from(s, &[])).unwrap();
            assert_eq!(env.condition_order, ["black", "white", "none", "both"]);
        }
    }

    #[test]
    fn test_logic_uses_only_test_gates() {
        let r = TaskRunner::new(TaskKind::LogicGate, TaskSettings::default(), GenomeConfig::default(), Mode::Test);
        let env = r.binary_environment(&mut rng_from(4, &[])).unwrap();
        let mut gates = env.condition_order.clone();
        gates.sort();
        assert_eq!(gates, ["AND", "NAND", "NOR", "OR"]);
    }

    #[test]
    fn evaluation_rejects_wrong_arity() {
        let r = TaskRunner::new(TaskKind::CartPole, TaskSettings::default(), GenomeConfig::default(), Mode::Train);
        let g = init_genome(4, 2, &GenomeConfig::default(), &mut rng_from(0, &[]));
        assert!(matches!(r.evaluate(&g, 1), Err(Error::ArityMismatch { expected_inputs: 12, .. })));
    }
}
