//! Mutable binary-classification environments and the health/damage
//! lifetime model.
//!
//! An agent sees a sequence of samples. Four consecutive samples share one
//! environment condition (which food colour is edible, or which logic gate
//! is active), after which the condition changes. Each step the agent's
//! current action is decoded from its output spike counts, it is told
//! through a reward or penalty channel whether that action is correct, and
//! it loses health according to how confidently it chose. Fitness is the
//! normalized number of steps survived.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::encoding::{binary_to_rates, ActionDecoder, RateRange, SpikeGenerator};
use crate::error::{Error, Result};
use crate::spiking::Controller;

pub const SAMPLES_PER_CONDITION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DamageModel {
    pub d_correct: f64,
    pub d_incorrect: f64,
    pub s_target: u32,
}

impl Default for DamageModel {
    fn default() -> Self {
        Self { d_correct: 1.0, d_incorrect: 2.0, s_target: 3 }
    }
}

impl DamageModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_incorrect > self.d_correct && self.d_correct > 0.0) || self.s_target == 0 {
            return Err(Error::InvalidConfig(
                "damage requires d_incorrect > d_correct > 0 and s_target >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Share of the decision attributed to the correct and incorrect outputs.
/// Below `2 * s_target` total spikes only the first `s_target` spikes of
/// each side count, so sparse firing cannot look fully confident.
pub fn spike_participation(s_correct: usize, s_incorrect: usize, s_target: u32) -> (f64, f64) {
    let st = s_target as usize;
    let p_c = if s_correct + s_incorrect <= 2 * st {
        let num = s_correct.min(st) as f64 - s_incorrect.min(st) as f64 + st as f64;
        num / (2 * st) as f64
    } else {
        s_correct as f64 / (s_correct + s_incorrect) as f64
    };
    (p_c, 1.0 - p_c)
}

/// Health lost in one step. With no output spikes at all the agent takes
/// the full incorrect-action damage.
pub fn damage(s_correct: usize, s_incorrect: usize, model: &DamageModel) -> f64 {
    if s_correct == 0 && s_incorrect == 0 {
        return model.d_incorrect;
    }
    let (p_c, p_i) = spike_participation(s_correct, s_incorrect, model.s_target);
    model.d_correct * p_c + model.d_incorrect * p_i
}

pub fn fitness_from_lifetime(t: u64, l_min: u64, l_max: u64) -> Result<f64> {
    if l_min >= l_max || t < l_min || t > l_max {
        return Err(Error::LifetimeOutOfRange { t, l_min, l_max });
    }
    Ok((t - l_min) as f64 / (l_max - l_min) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoodColor {
    Black,
    White,
}

impl FoodColor {
    /// One-hot bit presented on the light sensor pair.
    pub fn bit(self) -> bool {
        self == FoodColor::Black
    }
}

/// Which food colour is edible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoodCondition {
    Black,
    White,
    None,
    Both,
}

impl FoodCondition {
    pub const ALL: [FoodCondition; 4] =
        [FoodCondition::Black, FoodCondition::White, FoodCondition::None, FoodCondition::Both];
}

pub const EAT: usize = 0;
pub const AVOID: usize = 1;

pub fn food_correct_action(condition: FoodCondition, color: FoodColor) -> usize {
    let edible = match condition {
        FoodCondition::Black => color == FoodColor::Black,
        FoodCondition::White => color == FoodColor::White,
        FoodCondition::None => false,
        FoodCondition::Both => true,
    };
    if edible {
        EAT
    } else {
        AVOID
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    A,
    B,
    NotA,
    NotB,
    Only0,
    Only1,
    Xor,
    Xnor,
    And,
    Nand,
    Or,
    Nor,
}

impl Gate {
    pub const TRAINING: [Gate; 8] =
        [Gate::A, Gate::B, Gate::NotA, Gate::NotB, Gate::Only0, Gate::Only1, Gate::Xor, Gate::Xnor];
    pub const TEST: [Gate; 4] = [Gate::And, Gate::Nand, Gate::Or, Gate::Nor];

    pub fn output(self, a: bool, b: bool) -> bool {
        match self {
            Gate::A => a,
            Gate::B => b,
            Gate::NotA => !a,
            Gate::NotB => !b,
            Gate::Only0 => false,
            Gate::Only1 => true,
            Gate::Xor => a ^ b,
            Gate::Xnor => !(a ^ b),
            Gate::And => a && b,
            Gate::Nand => !(a && b),
            Gate::Or => a || b,
            Gate::Nor => !(a || b),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Gate::A => "A",
            Gate::B => "B",
            Gate::NotA => "NOT A",
            Gate::NotB => "NOT B",
            Gate::Only0 => "ONLY 0",
            Gate::Only1 => "ONLY 1",
            Gate::Xor => "XOR",
            Gate::Xnor => "XNOR",
            Gate::And => "AND",
            Gate::Nand => "NAND",
            Gate::Or => "OR",
            Gate::Nor => "NOR",
        };
        f.write_str(s)
    }
}

/// Output index 0 emits `0`, output index 1 emits `1`.
pub fn gate_correct_action(gate: Gate, a: bool, b: bool) -> usize {
    gate.output(a, b) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub correct: usize,
    pub condition: String,
    pub input: String,
}

/// One full cycle of samples; lifetimes longer than a cycle wrap around.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEnvironment {
    pub task: &'static str,
    pub samples: Vec<Sample>,
    pub input_order: Vec<String>,
    pub condition_order: Vec<String>,
}

fn color_name(c: FoodColor) -> &'static str {
    match c {
        FoodColor::Black => "black",
        FoodColor::White => "white",
    }
}

fn condition_name(c: FoodCondition) -> &'static str {
    match c {
        FoodCondition::Black => "black",
        FoodCondition::White => "white",
        FoodCondition::None => "none",
        FoodCondition::Both => "both",
    }
}

fn pair_name((a, b): (bool, bool)) -> String {
    format!("({}, {})", a as u8, b as u8)
}

impl BinaryEnvironment {
    /// Food foraging: inputs alternate in `inputs` order, conditions change
    /// every four samples in `conditions` order.
    pub fn food(inputs: [FoodColor; 2], conditions: [FoodCondition; 4]) -> Self {
        let samples = (0..conditions.len() * SAMPLES_PER_CONDITION)
            .map(|k| {
                let color = inputs[k % 2];
                let cond = conditions[k / SAMPLES_PER_CONDITION];
                Sample {
                    bits: vec![color.bit()],
                    correct: food_correct_action(cond, color),
                    condition: condition_name(cond).to_string(),
                    input: color_name(color).to_string(),
                }
            })
            .collect();
        Self {
            task: "food-foraging",
            samples,
            input_order: inputs.iter().map(|&c| color_name(c).to_string()).collect(),
            condition_order: conditions.iter().map(|&c| condition_name(c).to_string()).collect(),
        }
    }

    /// Logic gates: each gate is shown with the four input pairs in
    /// `input_order`.
    pub fn logic(gates: &[Gate], input_order: [(bool, bool); 4]) -> Self {
        let samples = gates
            .iter()
            .flat_map(|&g| {
                input_order.iter().map(move |&(a, b)| Sample {
                    bits: vec![a, b],
                    correct: gate_correct_action(g, a, b),
                    condition: g.to_string(),
                    input: pair_name((a, b)),
                })
            })
            .collect();
        Self {
            task: "logic-gate",
            samples,
            input_order: input_order.iter().map(|&p| pair_name(p)).collect(),
            condition_order: gates.iter().map(|g| g.to_string()).collect(),
        }
    }

    pub fn n_bits(&self) -> usize {
        self.samples[0].bits.len()
    }

    /// One-hot pair per bit, then the reward and penalty channels.
    pub fn n_inputs(&self) -> usize {
        2 * self.n_bits() + 2
    }

    pub fn n_outputs(&self) -> usize {
        2
    }

    pub fn sample(&self, k: usize) -> &Sample {
        &self.samples[k % self.samples.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifetimeConfig {
    pub sample_steps: u64,
    /// Defaults to `d_correct` times the step count of one full cycle.
    pub initial_health: Option<f64>,
    pub damage: DamageModel,
    pub rates: RateRange,
    /// Record output spike counts every this many steps (0 = off).
    pub trace_every: u64,
}

impl Default for LifetimeConfig {
    fn default() -> Self {
        Self {
            sample_steps: 10_000,
            initial_health: None,
            damage: DamageModel::default(),
            rates: RateRange::default(),
            trace_every: 0,
        }
    }
}

impl LifetimeConfig {
    pub fn health_for(&self, env: &BinaryEnvironment) -> f64 {
        self.initial_health.unwrap_or(
            self.damage.d_correct * (env.samples.len() as u64 * self.sample_steps) as f64,
        )
    }

    /// `(l_min, l_max)`: lifetimes under constant incorrect and constant
    /// correct damage.
    pub fn lifetime_bounds(&self, env: &BinaryEnvironment) -> (u64, u64) {
        let h = self.health_for(env);
        (
            (h / self.damage.d_incorrect).ceil() as u64,
            (h / self.damage.d_correct).ceil() as u64,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.damage.validate()?;
        if self.sample_steps == 0 {
            return Err(Error::InvalidConfig("lifetime.sample_steps must be >= 1".into()));
        }
        if self.initial_health.is_some_and(|h| !(h > 0.0)) {
            return Err(Error::InvalidConfig("lifetime.initial_health must be > 0".into()));
        }
        if !(0.0 < self.rates.low_hz && self.rates.low_hz < self.rates.high_hz) {
            return Err(Error::InvalidConfig("rates require 0 < low_hz < high_hz".into()));
        }
        Ok(())
    }
}

/// Outcome of one sample presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub condition: String,
    pub input: String,
    pub correct_action: usize,
    /// Action at the last step of the sample; `None` if no action yet.
    pub final_action: Option<usize>,
    pub correct_steps: u64,
    pub steps: u64,
    pub completed: bool,
}

/// One cart-pole episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRun {
    pub pole_size: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeReport {
    pub survived_steps: u64,
    pub l_min: u64,
    pub l_max: u64,
    pub fitness: f64,
    pub accuracy: f64,
    pub eos_accuracy: f64,
    pub samples: Vec<SampleOutcome>,
    pub condition_runs: Vec<ConditionRun>,
    /// `(step, counts)` snapshots when tracing is enabled.
    pub count_trace: Vec<(u64, Vec<usize>)>,
}

/// Runs one lifetime of `agent` in `env`.
pub fn run_lifetime<C: Controller + ?Sized>(
    agent: &mut C,
    env: &BinaryEnvironment,
    cfg: &LifetimeConfig,
    dt_ms: f64,
) -> Result<LifetimeReport> {
    cfg.validate()?;
    if agent.num_inputs() != env.n_inputs() || agent.num_outputs() != env.n_outputs() {
        return Err(Error::ArityMismatch {
            expected_inputs: env.n_inputs(),
            expected_outputs: env.n_outputs(),
            found_inputs: agent.num_inputs(),
            found_outputs: agent.num_outputs(),
        });
    }
    let n_in = env.n_inputs();
    let (reward_ch, penalty_ch) = (n_in - 2, n_in - 1);
    let (l_min, l_max) = cfg.lifetime_bounds(env);
    let mut health = cfg.health_for(env);
    let rates = cfg.rates;

    let mut gens = vec![SpikeGenerator::silent(); n_in];
    let mut spikes = vec![false; n_in];
    let mut counts = vec![0usize; 2];
    let mut decoder = ActionDecoder::default();
    let mut action: Option<usize> = None;
    let mut correct_steps = 0u64;
    let mut samples: Vec<SampleOutcome> = Vec::new();
    let mut count_trace = Vec::new();
    let mut t = 0u64;

    for step in 0..l_max {
        let k = (step / cfg.sample_steps) as usize;
        let offset = step % cfg.sample_steps;
        let sample = env.sample(k);
        if offset == 0 {
            for (b, &bit) in sample.bits.iter().enumerate() {
                let (ra, rb) = binary_to_rates(bit, rates);
                gens[2 * b].reset(ra, dt_ms, step);
                gens[2 * b + 1].reset(rb, dt_ms, step);
            }
            samples.push(SampleOutcome {
                index: k,
                condition: sample.condition.clone(),
                input: sample.input.clone(),
                correct_action: sample.correct,
                final_action: None,
                correct_steps: 0,
                steps: 0,
                completed: false,
            });
        }
        let rewarded = action == Some(sample.correct);
        let (r_rate, p_rate) =
            if rewarded { (rates.high_hz, rates.low_hz) } else { (rates.low_hz, rates.high_hz) };
        gens[reward_ch].set_rate(r_rate, dt_ms, step);
        gens[penalty_ch].set_rate(p_rate, dt_ms, step);

        for (s, g) in spikes.iter_mut().zip(gens.iter_mut()) {
            *s = g.tick(step);
        }
        agent.step(&spikes);
        agent.output_counts(&mut counts);
        action = decoder.decode(&counts);

        let is_correct = action == Some(sample.correct);
        let current = samples.last_mut().expect("sample started");
        current.steps += 1;
        if is_correct {
            correct_steps += 1;
            current.correct_steps += 1;
        }
        if offset + 1 == cfg.sample_steps {
            current.final_action = action;
            current.completed = true;
        }
        if cfg.trace_every > 0 && step % cfg.trace_every == 0 {
            count_trace.push((step, counts.clone()));
        }

        health -= damage(counts[sample.correct], counts[1 - sample.correct], &cfg.damage);
        t = step + 1;
        if health <= 0.0 {
            break;
        }
    }

    let t = t.clamp(l_min, l_max);
    let completed: Vec<&SampleOutcome> = samples.iter().filter(|s| s.completed).collect();
    let eos_accuracy = if completed.is_empty() {
        0.0
    } else {
        completed.iter().filter(|s| s.final_action == Some(s.correct_action)).count() as f64
            / completed.len() as f64
    };
    Ok(LifetimeReport {
        survived_steps: t,
        l_min,
        l_max,
        fitness: fitness_from_lifetime(t, l_min, l_max)?,
        accuracy: correct_steps as f64 / t as f64,
        eos_accuracy,
        samples,
        condition_runs: Vec::new(),
        count_trace,
    })
}
