//! Spiking neural networks with evolvable STDP plasticity, evolved by a
//! NEAT-style algorithm and evaluated in environments whose rules change
//! during an agent's lifetime.

pub mod cartpole;
pub mod encoding;
pub mod environment;
pub mod error;
pub mod evolution;
pub mod genome;
pub mod plasticity;
pub mod seed;
pub mod spiking;
pub mod task;

pub use cartpole::{CartPoleConfig, CartPoleParams, CartPoleState, Mode, PoleSchedule};
pub use encoding::{ActionDecoder, ObservationEncoder, RateRange, SpikeGenerator};
pub use environment::{BinaryEnvironment, DamageModel, Gate, LifetimeConfig, LifetimeReport};
pub use error::{Error, Result};
pub use evolution::{ChampionArchive, Champion, Evolution, EvolutionConfig, GenerationStats, Summary, Task};
pub use genome::{CompatibilityConfig, Genome, GenomeConfig, InnovationRegistry};
pub use plasticity::{LearningRule, RuleKind};
pub use spiking::{Controller, Network, NodeId, SimParams};
pub use task::{Evaluation, TaskKind, TaskRunner, TaskSettings};
