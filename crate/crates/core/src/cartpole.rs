//! Cart-pole balancing with a pole whose length changes between episodes.
//!
//! The dynamics are the classic frictionless cart-pole equations integrated
//! with explicit Euler steps of `tau` seconds. The "size" of a pole is its
//! half-length.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{ActionDecoder, ObservationEncoder, SpikeGenerator};
use crate::environment::{ConditionRun, LifetimeReport};
use crate::error::{Error, Result};
use crate::spiking::Controller;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn observation(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub force_mag: f64,
    pub tau: f64,
    pub x_limit: f64,
    pub theta_limit: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        Self {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            x_limit: 2.4,
            theta_limit: 12.0 * std::f64::consts::PI / 180.0,
        }
    }
}

pub fn physics_step(s: &CartPoleState, force: f64, p: &CartPoleParams) -> CartPoleState {
    let total_mass = p.cart_mass + p.pole_mass;
    let pml = p.pole_mass * p.half_length;
    let (sin, cos) = s.theta.sin_cos();
    let temp = (force + pml * s.theta_dot * s.theta_dot * sin) / total_mass;
    let theta_acc = (p.gravity * sin - cos * temp)
        / (p.half_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass));
    let x_acc = temp - pml * theta_acc * cos / total_mass;
    CartPoleState {
        x: s.x + p.tau * s.x_dot,
        x_dot: s.x_dot + p.tau * x_acc,
        theta: s.theta + p.tau * s.theta_dot,
        theta_dot: s.theta_dot + p.tau * theta_acc,
    }
}

pub fn is_terminal(s: &CartPoleState, p: &CartPoleParams) -> bool {
    s.x.abs() > p.x_limit || s.theta.abs() > p.theta_limit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoleSchedule {
    pub training_sizes: Vec<f64>,
    pub test_sizes: Vec<f64>,
    pub training_repeats: usize,
    pub max_iterations: u64,
}

impl Default for PoleSchedule {
    fn default() -> Self {
        Self {
            training_sizes: vec![0.5, 0.3, 0.7],
            test_sizes: vec![0.4, 0.6],
            training_repeats: 3,
            max_iterations: 200,
        }
    }
}

impl PoleSchedule {
    /// Training runs sizes in listed order with repeats grouped; test runs
    /// each test size once in a random order.
    pub fn conditions<R: Rng + ?Sized>(&self, mode: Mode, rng: &mut R) -> Vec<f64> {
        match mode {
            Mode::Train => self
                .training_sizes
                .iter()
                .flat_map(|&s| std::iter::repeat_n(s, self.training_repeats))
                .collect(),
            Mode::Test => {
                let mut sizes = self.test_sizes.clone();
                shuffle(&mut sizes, rng);
                sizes
            }
        }
    }
}

pub(crate) fn shuffle<T, R: Rng + ?Sized>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartPoleConfig {
    pub physics: CartPoleParams,
    pub schedule: PoleSchedule,
    /// Network steps simulated per environment iteration.
    pub steps_per_iteration: u64,
    pub reset_range: f64,
    /// Scale pole mass with length (constant density) instead of holding
    /// it fixed.
    pub pole_mass_scales_with_length: bool,
    pub encoder: ObservationEncoder,
    /// A condition run is successful with strictly more balanced steps.
    pub success_threshold: u64,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        Self {
            physics: CartPoleParams::default(),
            schedule: PoleSchedule::default(),
            steps_per_iteration: 500,
            reset_range: 0.05,
            pole_mass_scales_with_length: false,
            encoder: ObservationEncoder::default(),
            success_threshold: 100,
        }
    }
}

impl CartPoleConfig {
    pub fn params_for(&self, size: f64) -> CartPoleParams {
        let base = self.physics;
        let pole_mass = if self.pole_mass_scales_with_length {
            base.pole_mass * size / base.half_length
        } else {
            base.pole_mass
        };
        CartPoleParams { half_length: size, pole_mass, ..base }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.schedule;
        if s.training_sizes.iter().chain(&s.test_sizes).any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidConfig("cartpole.schedule sizes must be > 0".into()));
        }
        if s.max_iterations == 0 || self.steps_per_iteration == 0 {
            return Err(Error::InvalidConfig(
                "cartpole.schedule.max_iterations and cartpole.steps_per_iteration must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Balanced iterations over the maximum possible for the schedule.
pub fn schedule_fitness(steps: &[u64], max_iterations: u64) -> f64 {
    let t_max = max_iterations * steps.len() as u64;
    if t_max == 0 {
        return 0.0;
    }
    steps.iter().sum::<u64>() as f64 / t_max as f64
}

/// Runs the agent through each pole size in `conditions`, carrying the same
/// network across episodes. Fitness is the total number of balanced
/// iterations over the maximum possible.
///
/// `accuracy` holds the fraction of successful episodes and
/// `eos_accuracy` the fraction that reached the iteration limit.
pub fn run_cartpole_lifetime<C: Controller + ?Sized, R: Rng + ?Sized>(
    agent: &mut C,
    conditions: &[f64],
    cfg: &CartPoleConfig,
    dt_ms: f64,
    rng: &mut R,
) -> Result<LifetimeReport> {
    cfg.validate()?;
    if agent.num_inputs() != 12 || agent.num_outputs() != 2 {
        return Err(Error::ArityMismatch {
            expected_inputs: 12,
            expected_outputs: 2,
            found_inputs: agent.num_inputs(),
            found_outputs: agent.num_outputs(),
        });
    }
    let max_it = cfg.schedule.max_iterations;
    let mut gens = [SpikeGenerator::silent(); 12];
    let mut spikes = [false; 12];
    let mut counts = [0usize; 2];
    let mut decoder = ActionDecoder::default();
    let mut now = 0u64;
    let mut runs = Vec::with_capacity(conditions.len());

    for &size in conditions {
        let params = cfg.params_for(size);
        let r = cfg.reset_range;
        let mut state = CartPoleState {
            x: rng.random_range(-r..=r),
            x_dot: rng.random_range(-r..=r),
            theta: rng.random_range(-r..=r),
            theta_dot: rng.random_range(-r..=r),
        };
        let mut steps = 0;
        while steps < max_it {
            let rates = cfg.encoder.observation_to_rates(state.observation());
            for (g, &rate) in gens.iter_mut().zip(&rates) {
                if steps == 0 {
                    g.reset(rate, dt_ms, now);
                } else {
                    g.retune(rate, dt_ms, now);
                }
            }
            let mut action = None;
            for _ in 0..cfg.steps_per_iteration {
                for (s, g) in spikes.iter_mut().zip(gens.iter_mut()) {
                    *s = g.tick(now);
                }
                agent.step(&spikes);
                agent.output_counts(&mut counts);
                action = decoder.decode(&counts);
                now += 1;
            }
            let force = match action {
                Some(LEFT) => -params.force_mag,
                Some(_) => params.force_mag,
                None => 0.0,
            };
            state = physics_step(&state, force, &params);
            if is_terminal(&state, &params) {
                break;
            }
            steps += 1;
        }
        runs.push(ConditionRun { pole_size: size, steps });
    }

    let total: u64 = runs.iter().map(|r| r.steps).sum();
    let steps: Vec<u64> = runs.iter().map(|r| r.steps).collect();
    let n = conditions.len().max(1) as f64;
    Ok(LifetimeReport {
        survived_steps: total,
        l_min: 0,
        l_max: max_it * conditions.len() as u64,
        fitness: schedule_fitness(&steps, max_it),
        accuracy: runs.iter().filter(|r| r.steps > cfg.success_threshold).count() as f64 / n,
        eos_accuracy: runs.iter().filter(|r| r.steps == max_it).count() as f64 / n,
        samples: Vec::new(),
        condition_runs: runs,
        count_trace: Vec::new(),
    })
}
