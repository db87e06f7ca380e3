//! Conversion between task values and spike trains.

use serde::{Deserialize, Serialize};

/// Input firing-rate range in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRange {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for RateRange {
    fn default() -> Self {
        Self { low_hz: 5.0, high_hz: 50.0 }
    }
}

/// One-hot rate pair for a bit: `1 -> (high, low)`, `0 -> (low, high)`.
pub fn binary_to_rates(bit: bool, range: RateRange) -> (f64, f64) {
    if bit {
        (range.high_hz, range.low_hz)
    } else {
        (range.low_hz, range.high_hz)
    }
}

/// Evenly spaced spike train. The period is the requested rate's period
/// rounded to whole steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeGenerator {
    period_steps: Option<u64>,
    next_spike: u64,
    last_spike: Option<u64>,
    rate_bits: u64,
}

fn period_for(rate_hz: f64, dt_ms: f64) -> Option<u64> {
    if rate_hz > 0.0 {
        Some(((1000.0 / rate_hz) / dt_ms).round().max(1.0) as u64)
    } else {
        None
    }
}

impl SpikeGenerator {
    pub fn silent() -> Self {
        Self { period_steps: None, next_spike: 0, last_spike: None, rate_bits: 0f64.to_bits() }
    }

    pub fn period_steps(&self) -> Option<u64> {
        self.period_steps
    }

    pub fn rate_hz(&self) -> f64 {
        f64::from_bits(self.rate_bits)
    }

    /// Sets a new rate and restarts the train: the next spike is at `now`.
    pub fn reset(&mut self, rate_hz: f64, dt_ms: f64, now: u64) {
        self.period_steps = period_for(rate_hz, dt_ms);
        self.rate_bits = rate_hz.to_bits();
        self.next_spike = now;
    }

    /// Restarts only if the rate actually changed.
    pub fn set_rate(&mut self, rate_hz: f64, dt_ms: f64, now: u64) {
        if rate_hz.to_bits() != self.rate_bits {
            self.reset(rate_hz, dt_ms, now);
        }
    }

    /// Changes the rate while keeping the phase: the next spike comes one
    /// new period after the previous one (or immediately if that has
    /// already passed). Used for continuously varying observations.
    pub fn retune(&mut self, rate_hz: f64, dt_ms: f64, now: u64) {
        self.period_steps = period_for(rate_hz, dt_ms);
        self.rate_bits = rate_hz.to_bits();
        if let Some(p) = self.period_steps {
            self.next_spike = match self.last_spike {
                Some(last) => (last + p).max(now),
                None => now,
            };
        }
    }

    /// Whether the train spikes at step `now`. Must be called once per
    /// step with increasing `now`.
    pub fn tick(&mut self, now: u64) -> bool {
        match self.period_steps {
            Some(p) if now >= self.next_spike => {
                self.last_spike = Some(now);
                self.next_spike = now + p;
                true
            }
            _ => false,
        }
    }
}

/// A train at `rate_hz` whose first spike is at step 0.
pub fn rate_to_spike_train(rate_hz: f64, dt_ms: f64) -> SpikeGenerator {
    let mut g = SpikeGenerator::silent();
    g.reset(rate_hz, dt_ms, 0);
    g
}

/// Shape of one receptor neuron's response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Receptor {
    Sigmoid { omega: f64, z: f64 },
    Gaussian { mu: f64, sigma: f64 },
}

/// Receptor response with rate span `h` above the floor `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceptorParams {
    pub receptor: Receptor,
    pub h: f64,
    pub l: f64,
}

impl ReceptorParams {
    pub fn sigmoid(omega: f64, z: f64) -> Self {
        Self { receptor: Receptor::Sigmoid { omega, z }, h: 45.0, l: 5.0 }
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Self {
        Self { receptor: Receptor::Gaussian { mu, sigma }, h: 45.0, l: 5.0 }
    }

    pub fn rate(&self, x: f64) -> f64 {
        let r = match self.receptor {
            Receptor::Sigmoid { omega, z } => self.h / (1.0 + (-omega * (x - z)).exp()) + self.l,
            Receptor::Gaussian { mu, sigma } => {
                self.h * (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() + self.l
            }
        };
        r.clamp(self.l, self.l + self.h)
    }
}

pub fn sigmoid_rate(x: f64, omega: f64, z: f64, h: f64, l: f64) -> f64 {
    h / (1.0 + (-omega * (x - z)).exp()) + l
}

pub fn gaussian_rate(x: f64, mu: f64, sigma: f64, h: f64, l: f64) -> f64 {
    h * (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp() + l
}

/// Three receptors covering one observation: falling sigmoid, Gaussian,
/// rising sigmoid.
pub type ReceptorTriple = [ReceptorParams; 3];

pub fn linear_triple() -> ReceptorTriple {
    [
        ReceptorParams::sigmoid(-2.5, -0.6),
        ReceptorParams::gaussian(0.0, 0.4),
        ReceptorParams::sigmoid(2.5, 0.6),
    ]
}

pub fn angle_triple() -> ReceptorTriple {
    [
        ReceptorParams::sigmoid(-60.0, -0.05),
        ReceptorParams::gaussian(0.0, 0.05),
        ReceptorParams::sigmoid(60.0, 0.05),
    ]
}

/// Maps a cart-pole observation `(x, x_dot, theta, theta_dot)` onto twelve
/// input rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationEncoder {
    pub position_scale: f64,
    pub velocity_clip: f64,
    pub velocity_scale: f64,
    pub angle_scale: f64,
}

impl Default for ObservationEncoder {
    fn default() -> Self {
        Self { position_scale: 2.4, velocity_clip: 2.0, velocity_scale: 2.0, angle_scale: 1.0 }
    }
}

impl ObservationEncoder {
    pub fn scale(&self, obs: [f64; 4]) -> [f64; 4] {
        let vel = |v: f64| v.clamp(-self.velocity_clip, self.velocity_clip) / self.velocity_scale;
        [obs[0] / self.position_scale, vel(obs[1]), obs[2] / self.angle_scale, vel(obs[3])]
    }

    pub fn observation_to_rates(&self, obs: [f64; 4]) -> [f64; 12] {
        let scaled = self.scale(obs);
        let (lin, ang) = (linear_triple(), angle_triple());
        let mut rates = [0.0; 12];
        for (i, &x) in scaled.iter().enumerate() {
            let triple = if i == 2 { &ang } else { &lin };
            for (k, r) in triple.iter().enumerate() {
                rates[3 * i + k] = r.rate(x);
            }
        }
        rates
    }
}

/// Picks the output with a strict maximum count. On a tie, the output that
/// last held a strict lead wins; before any strict lead there is no action.
pub fn decode_action(counts: &[usize], previous_leader: Option<usize>) -> Option<usize> {
    let max = *counts.iter().max()?;
    let mut leaders = counts.iter().enumerate().filter(|(_, &c)| c == max);
    let first = leaders.next().map(|(i, _)| i);
    if leaders.next().is_none() {
        first
    } else {
        previous_leader
    }
}

/// Stateful wrapper of [`decode_action`] that remembers the last strict
/// leader.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActionDecoder {
    leader: Option<usize>,
}

impl ActionDecoder {
    pub fn decode(&mut self, counts: &[usize]) -> Option<usize> {
        let action = decode_action(counts, self.leader);
        self.leader = action;
        action
    }

    pub fn leader(&self) -> Option<usize> {
        self.leader
    }
}
