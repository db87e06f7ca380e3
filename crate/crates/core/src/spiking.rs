//! Discrete-time spiking network.
//!
//! Neurons follow a simplified leaky integrate-and-fire model with an
//! adaptive (homeostatic) threshold. Input neurons are pure spike
//! generators. The update is synchronous: spikes emitted by neurons at step
//! `n` are delivered at step `n + 1`, while input spikes are delivered in
//! the step they are generated. All time bookkeeping is done in whole steps
//! and converted to milliseconds through [`SimParams::dt_ms`].

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plasticity::{delta_w, LearningRule};

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neurotransmitter {
    Excitatory,
    Inhibitory,
}

impl Neurotransmitter {
    pub fn sign(self) -> f64 {
        match self {
            Neurotransmitter::Excitatory => 1.0,
            Neurotransmitter::Inhibitory => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Neurotransmitter::Excitatory => Neurotransmitter::Inhibitory,
            Neurotransmitter::Inhibitory => Neurotransmitter::Excitatory,
        }
    }
}

/// Simulation constants shared by every neuron of a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub dt_ms: f64,
    /// Fraction of the membrane potential lost per step.
    pub membrane_decay_per_step: f64,
    /// Fraction of the homeostasis accumulator lost per step.
    pub theta_decay_per_step: f64,
    pub theta_increment: f64,
    pub resting_threshold: f64,
    pub bias_current: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub weight_budget: f64,
    pub stdp_window_ms: f64,
    pub actuator_window_ms: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt_ms: 0.1,
            membrane_decay_per_step: 0.01,
            theta_decay_per_step: 0.01,
            theta_increment: 0.2,
            resting_threshold: 1.0,
            bias_current: 0.001,
            w_min: 0.0,
            w_max: 1.0,
            weight_budget: 5.0,
            stdp_window_ms: 40.0,
            actuator_window_ms: 250.0,
        }
    }
}

impl SimParams {
    pub fn ms_to_steps(&self, ms: f64) -> u64 {
        (ms / self.dt_ms).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.dt_ms > 0.0) {
            return bad("sim.dt_ms must be > 0");
        }
        if !(0.0..1.0).contains(&self.membrane_decay_per_step)
            || !(0.0..1.0).contains(&self.theta_decay_per_step)
        {
            return bad("sim decay constants must lie in [0, 1)");
        }
        if !(self.w_min >= 0.0 && self.w_min <= self.w_max) {
            return bad("sim weight bounds must satisfy 0 <= w_min <= w_max");
        }
        if !(self.weight_budget > 0.0 && self.stdp_window_ms > 0.0 && self.actuator_window_ms > 0.0)
        {
            return bad("sim budget and windows must be > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub step_index: u64,
    pub dt_ms: f64,
}

impl SimClock {
    pub fn new(dt_ms: f64) -> Self {
        assert!(dt_ms > 0.0, "dt_ms must be positive");
        Self { step_index: 0, dt_ms }
    }

    pub fn time_ms(&self) -> f64 {
        self.step_index as f64 * self.dt_ms
    }
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new(0.1)
    }
}

/// State and loci of a hidden or output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub membrane_v: f64,
    pub theta: f64,
    pub resting_threshold: f64,
    pub bias_enabled: bool,
    pub neurotransmitter: Neurotransmitter,
    pub rule: LearningRule,
}

impl NeuronState {
    pub fn new(neurotransmitter: Neurotransmitter, bias_enabled: bool, rule: LearningRule) -> Self {
        Self {
            membrane_v: 0.0,
            theta: 0.0,
            resting_threshold: 1.0,
            bias_enabled,
            neurotransmitter,
            rule,
        }
    }

    /// Advances the neuron by one step given the signed sum of arriving
    /// spike weights. Returns whether it fired.
    pub fn step(&mut self, weighted_input: f64, incoming_weight_sum: f64, p: &SimParams) -> bool {
        self.theta *= 1.0 - p.theta_decay_per_step;
        let bias = if self.bias_enabled { p.bias_current } else { 0.0 };
        self.membrane_v += weighted_input - p.membrane_decay_per_step * self.membrane_v + bias;
        if self.membrane_v > effective_threshold(self, incoming_weight_sum) {
            self.membrane_v = 0.0;
            self.theta += p.theta_increment;
            true
        } else {
            false
        }
    }
}

/// Resting threshold raised by homeostasis, capped by the incoming weight
/// sum so weakly driven neurons can still fire.
pub fn effective_threshold(n: &NeuronState, incoming_weight_sum: f64) -> f64 {
    (n.resting_threshold + n.theta).min(incoming_weight_sum)
}

/// Scales `weights` down proportionally when their sum exceeds `budget`.
pub fn normalize_weight_budget(weights: &mut [f64], budget: f64) {
    let sum: f64 = weights.iter().sum();
    if sum > budget {
        let scale = budget / sum;
        weights.iter_mut().for_each(|w| *w *= scale);
    }
}

/// Trailing windows of output spike timestamps (in steps).
#[derive(Debug, Clone)]
pub struct SpikeTrainWindow {
    window_steps: u64,
    ids: Vec<NodeId>,
    spikes: Vec<VecDeque<u64>>,
}

impl SpikeTrainWindow {
    pub fn new(output_ids: &[NodeId], window_steps: u64) -> Self {
        Self {
            window_steps,
            ids: output_ids.to_vec(),
            spikes: vec![VecDeque::new(); output_ids.len()],
        }
    }

    pub fn window_steps(&self) -> u64 {
        self.window_steps
    }

    /// Records a spike of the `slot`-th output at `step`, dropping
    /// timestamps that can no longer fall inside the window.
    pub fn record(&mut self, slot: usize, step: u64) {
        let q = &mut self.spikes[slot];
        q.push_back(step);
        while q.front().is_some_and(|&s| step - s >= self.window_steps) {
            q.pop_front();
        }
    }

    fn count_slot(&self, slot: usize, now: u64) -> usize {
        let q = &self.spikes[slot];
        let stale = q.partition_point(|&s| s + self.window_steps <= now);
        let future = q.partition_point(|&s| s <= now);
        future.saturating_sub(stale)
    }

    /// Number of spikes of `output_id` within the trailing window ending at
    /// step `now` (a spike exactly one window length ago is excluded).
    pub fn count_spikes(&self, output_id: NodeId, now: u64) -> Result<usize> {
        let slot = self
            .ids
            .iter()
            .position(|&i| i == output_id)
            .ok_or(Error::TopologyMismatch(output_id))?;
        Ok(self.count_slot(slot, now))
    }

    pub fn counts_into(&self, now: u64, out: &mut [usize]) {
        for (slot, c) in out.iter_mut().enumerate().take(self.ids.len()) {
            *c = self.count_slot(slot, now);
        }
    }

    pub fn clear(&mut self) {
        self.spikes.iter_mut().for_each(VecDeque::clear);
    }
}

/// Something that consumes input spikes and exposes output spike counts
/// over the actuator window. Implemented by [`Network`] and by scripted
/// test agents.
pub trait Controller {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    /// Advances one step.
    fn step(&mut self, input_spikes: &[bool]);
    /// Spike counts of each output over the trailing actuator window.
    fn output_counts(&self, counts: &mut [usize]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Hidden,
    Output,
}

#[derive(Debug, Clone)]
pub struct NeuronSpec {
    pub id: NodeId,
    pub role: Role,
    pub state: NeuronState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynapseSpec {
    pub pre: NodeId,
    pub post: NodeId,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Synapse {
    pub pre: NodeId,
    pub post: NodeId,
    pub weight: f64,
    post_slot: usize,
    /// Delivery steps of recent presynaptic spikes.
    input_history: VecDeque<u64>,
}

#[derive(Debug, Clone)]
struct Neuron {
    state: NeuronState,
    incoming: Vec<usize>,
    incoming_sum: f64,
    output_history: VecDeque<u64>,
    /// `delta_w` at step offsets `-w..=w`, index `offset + w`.
    dw_table: Vec<f64>,
    current: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    params: SimParams,
    input_ids: Vec<NodeId>,
    hidden_ids: Vec<NodeId>,
    output_ids: Vec<NodeId>,
    /// Neuron slot (into `neurons`) of each output, in output order.
    output_slots: Vec<usize>,
    slot_of: HashMap<NodeId, usize>,
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    /// Outgoing synapses of each input (first) and each neuron slot.
    input_outgoing: Vec<Vec<usize>>,
    neuron_outgoing: Vec<Vec<usize>>,
    spiked: Vec<bool>,
    delivered: Vec<usize>,
    output_spikes: Vec<bool>,
    window: SpikeTrainWindow,
    clock: SimClock,
    stdp_steps: u64,
}

impl Network {
    /// Builds a network. Incoming weights are clamped into the weight
    /// bounds and budget-normalized per neuron.
    pub fn new(
        params: SimParams,
        input_ids: &[NodeId],
        neurons: Vec<NeuronSpec>,
        synapses: Vec<SynapseSpec>,
    ) -> Result<Self> {
        params.validate()?;
        let mut seen = HashSet::new();
        for &id in input_ids.iter().chain(neurons.iter().map(|n| &n.id)) {
            if !seen.insert(id) {
                return Err(Error::Development(format!("duplicate node id {id}")));
            }
        }
        let input_index: HashMap<NodeId, usize> =
            input_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let slot_of: HashMap<NodeId, usize> =
            neurons.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        for n in &neurons {
            if n.role == Role::Output && n.state.neurotransmitter != Neurotransmitter::Excitatory {
                return Err(Error::Development(format!("output neuron {} must be excitatory", n.id)));
            }
        }

        let stdp_steps = params.ms_to_steps(params.stdp_window_ms);
        let hidden_ids = neurons.iter().filter(|n| n.role == Role::Hidden).map(|n| n.id).collect();
        let output_ids: Vec<NodeId> =
            neurons.iter().filter(|n| n.role == Role::Output).map(|n| n.id).collect();
        let output_slots = output_ids.iter().map(|id| slot_of[id]).collect();

        let mut built: Vec<Neuron> = neurons
            .into_iter()
            .map(|n| Neuron {
                dw_table: stdp_table(&n.state.rule, stdp_steps, params.dt_ms),
                state: n.state,
                incoming: Vec::new(),
                incoming_sum: 0.0,
                output_history: VecDeque::new(),
                current: 0.0,
            })
            .collect();

        let mut input_outgoing = vec![Vec::new(); input_ids.len()];
        let mut neuron_outgoing = vec![Vec::new(); built.len()];
        let mut edges = HashSet::new();
        let mut syns = Vec::with_capacity(synapses.len());
        for s in synapses {
            if !edges.insert((s.pre, s.post)) {
                return Err(Error::Development(format!("duplicate synapse {} -> {}", s.pre, s.post)));
            }
            let post_slot = *slot_of.get(&s.post).ok_or_else(|| {
                Error::Development(format!("synapse {} -> {} targets a non-neuron", s.pre, s.post))
            })?;
            let idx = syns.len();
            if let Some(&i) = input_index.get(&s.pre) {
                input_outgoing[i].push(idx);
            } else if let Some(&j) = slot_of.get(&s.pre) {
                neuron_outgoing[j].push(idx);
            } else {
                return Err(Error::Development(format!("synapse source {} does not exist", s.pre)));
            }
            built[post_slot].incoming.push(idx);
            syns.push(Synapse {
                pre: s.pre,
                post: s.post,
                weight: s.weight.clamp(params.w_min, params.w_max),
                post_slot,
                input_history: VecDeque::new(),
            });
        }

        let window = SpikeTrainWindow::new(&output_ids, params.ms_to_steps(params.actuator_window_ms));
        let n_neurons = built.len();
        let n_outputs = output_ids.len();
        let mut net = Self {
            params,
            input_ids: input_ids.to_vec(),
            hidden_ids,
            output_ids,
            output_slots,
            slot_of,
            neurons: built,
            synapses: syns,
            input_outgoing,
            neuron_outgoing,
            spiked: vec![false; n_neurons],
            delivered: Vec::new(),
            output_spikes: vec![false; n_outputs],
            window,
            clock: SimClock::new(params.dt_ms),
            stdp_steps,
        };
        for slot in 0..n_neurons {
            net.normalize(slot);
        }
        Ok(net)
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn input_ids(&self) -> &[NodeId] {
        &self.input_ids
    }

    pub fn hidden_ids(&self) -> &[NodeId] {
        &self.hidden_ids
    }

    pub fn output_ids(&self) -> &[NodeId] {
        &self.output_ids
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn window(&self) -> &SpikeTrainWindow {
        &self.window
    }

    pub fn neuron(&self, id: NodeId) -> Option<&NeuronState> {
        self.slot_of.get(&id).map(|&s| &self.neurons[s].state)
    }

    pub fn incoming_weight_sum(&self, id: NodeId) -> Option<f64> {
        self.slot_of.get(&id).map(|&s| self.neurons[s].incoming_sum)
    }

    /// Spikes emitted by the output neurons in the last step.
    pub fn output_spikes(&self) -> &[bool] {
        &self.output_spikes
    }

    /// Spikes emitted by every hidden/output neuron in the last step, keyed
    /// by node id.
    pub fn last_spikes(&self) -> impl Iterator<Item = (NodeId, bool)> + '_ {
        self.slot_of.iter().map(|(&id, &s)| (id, self.spiked[s]))
    }

    pub fn count_spikes(&self, output_id: NodeId) -> Result<usize> {
        self.window
            .count_spikes(output_id, self.clock.step_index.saturating_sub(1))
    }

    fn normalize(&mut self, slot: usize) {
        let n = &mut self.neurons[slot];
        let sum: f64 = n.incoming.iter().map(|&s| self.synapses[s].weight).sum();
        if sum > self.params.weight_budget {
            let scale = self.params.weight_budget / sum;
            for &s in &n.incoming {
                self.synapses[s].weight *= scale;
            }
            n.incoming_sum = n.incoming.iter().map(|&s| self.synapses[s].weight).sum();
        } else {
            n.incoming_sum = sum;
        }
    }

    fn clamp_weight(&self, w: f64) -> f64 {
        w.clamp(self.params.w_min, self.params.w_max)
    }

    /// Advances the network by one step and returns the output spikes.
    pub fn step_network(&mut self, input_spikes: &[bool]) -> &[bool] {
        assert_eq!(input_spikes.len(), self.input_ids.len(), "input spike vector length");
        let now = self.clock.step_index;
        let w = self.stdp_steps;

        // Deliver input spikes from this step and neuron spikes from the last.
        self.delivered.clear();
        for n in &mut self.neurons {
            n.current = 0.0;
        }
        for (i, _) in input_spikes.iter().enumerate().filter(|(_, &s)| s) {
            for &s in &self.input_outgoing[i] {
                let syn = &self.synapses[s];
                self.neurons[syn.post_slot].current += syn.weight;
                self.delivered.push(s);
            }
        }
        for j in 0..self.neurons.len() {
            if !self.spiked[j] {
                continue;
            }
            let sign = self.neurons[j].state.neurotransmitter.sign();
            for &s in &self.neuron_outgoing[j] {
                let syn = &self.synapses[s];
                self.neurons[syn.post_slot].current += sign * syn.weight;
                self.delivered.push(s);
            }
        }

        for (j, n) in self.neurons.iter_mut().enumerate() {
            self.spiked[j] = n.state.step(n.current, n.incoming_sum, &self.params);
        }

        // STDP: each arriving spike pairs with earlier output spikes.
        for k in 0..self.delivered.len() {
            let s = self.delivered[k];
            let slot = self.synapses[s].post_slot;
            let neuron = &mut self.neurons[slot];
            while neuron.output_history.front().is_some_and(|&t| now - t > w) {
                neuron.output_history.pop_front();
            }
            if !neuron.output_history.is_empty() {
                let dw: f64 = neuron
                    .output_history
                    .iter()
                    .map(|&t_out| neuron.dw_table[(w + t_out - now) as usize])
                    .sum();
                let new_w = self.clamp_weight(self.synapses[s].weight + dw);
                self.synapses[s].weight = new_w;
                self.normalize(slot);
            }
            let hist = &mut self.synapses[s].input_history;
            hist.push_back(now);
            while hist.front().is_some_and(|&t| now - t > w) {
                hist.pop_front();
            }
        }

        // STDP: each output spike pairs with recent inputs, including this step's.
        for slot in 0..self.neurons.len() {
            if !self.spiked[slot] {
                continue;
            }
            let mut touched = false;
            for k in 0..self.neurons[slot].incoming.len() {
                let s = self.neurons[slot].incoming[k];
                let table = &self.neurons[slot].dw_table;
                let syn = &mut self.synapses[s];
                while syn.input_history.front().is_some_and(|&t| now - t > w) {
                    syn.input_history.pop_front();
                }
                if syn.input_history.is_empty() {
                    continue;
                }
                let dw: f64 = syn
                    .input_history
                    .iter()
                    .map(|&t_in| table[(w + now - t_in) as usize])
                    .sum();
                syn.weight = (syn.weight + dw).clamp(self.params.w_min, self.params.w_max);
                touched = true;
            }
            if touched {
                self.normalize(slot);
            }
            let n = &mut self.neurons[slot];
            n.output_history.push_back(now);
            while n.output_history.front().is_some_and(|&t| now - t > w) {
                n.output_history.pop_front();
            }
        }

        for (k, &slot) in self.output_slots.iter().enumerate() {
            self.output_spikes[k] = self.spiked[slot];
            if self.spiked[slot] {
                self.window.record(k, now);
            }
        }
        self.clock.step_index += 1;
        &self.output_spikes
    }
}

fn stdp_table(rule: &LearningRule, half_width_steps: u64, dt_ms: f64) -> Vec<f64> {
    let w = half_width_steps as i64;
    (-w..=w).map(|k| delta_w(rule, k as f64 * dt_ms)).collect()
}

impl Controller for Network {
    fn num_inputs(&self) -> usize {
        self.input_ids.len()
    }

    fn num_outputs(&self) -> usize {
        self.output_ids.len()
    }

    fn step(&mut self, input_spikes: &[bool]) {
        self.step_network(input_spikes);
    }

    fn output_counts(&self, counts: &mut [usize]) {
        self.window
            .counts_into(self.clock.step_index.saturating_sub(1), counts);
    }
}
