//! Spike-timing-dependent plasticity.
//!
//! Every hidden and output neuron carries one of four STDP rules which is
//! applied to all of its incoming synapses. Asymmetric rules use two
//! exponential lobes, symmetric rules a difference-of-Gaussians kernel.
//! Timings are in milliseconds.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    AsymmetricHebbian,
    AsymmetricAntiHebbian,
    SymmetricHebbian,
    SymmetricAntiHebbian,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [
        RuleKind::AsymmetricHebbian,
        RuleKind::AsymmetricAntiHebbian,
        RuleKind::SymmetricHebbian,
        RuleKind::SymmetricAntiHebbian,
    ];

    pub fn is_symmetric(self) -> bool {
        matches!(self, RuleKind::SymmetricHebbian | RuleKind::SymmetricAntiHebbian)
    }

    pub fn is_hebbian(self) -> bool {
        matches!(self, RuleKind::AsymmetricHebbian | RuleKind::SymmetricHebbian)
    }

    /// Builds the kind from its two binary traits.
    pub fn from_traits(symmetric: bool, hebbian: bool) -> Self {
        match (symmetric, hebbian) {
            (false, true) => RuleKind::AsymmetricHebbian,
            (false, false) => RuleKind::AsymmetricAntiHebbian,
            (true, true) => RuleKind::SymmetricHebbian,
            (true, false) => RuleKind::SymmetricAntiHebbian,
        }
    }

    /// Legal ranges of `[a_plus, a_minus, shape_plus, shape_minus]`.
    pub fn param_ranges(self) -> &'static [ParamRange; 4] {
        if self.is_symmetric() {
            &SYMMETRIC_RANGES
        } else {
            &ASYMMETRIC_RANGES
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::AsymmetricHebbian => "asymmetric_hebbian",
            RuleKind::AsymmetricAntiHebbian => "asymmetric_anti_hebbian",
            RuleKind::SymmetricHebbian => "symmetric_hebbian",
            RuleKind::SymmetricAntiHebbian => "symmetric_anti_hebbian",
        }
    }
}

/// Closed interval of a rule parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.min, self.max)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.min..=self.max).contains(&x)
    }

    /// Variance of the perturbation noise used when mutating a parameter.
    pub fn mutation_variance(&self) -> f64 {
        0.2 * self.span()
    }
}

/// A+, A-, tau+, tau-.
pub const ASYMMETRIC_RANGES: [ParamRange; 4] = [
    ParamRange::new(0.1, 1.0),
    ParamRange::new(0.1, 1.0),
    ParamRange::new(1.0, 10.0),
    ParamRange::new(1.0, 10.0),
];

/// A+, A-, sigma+, sigma-. The sigma ranges are disjoint so sigma- > sigma+
/// holds for any in-range pair.
pub const SYMMETRIC_RANGES: [ParamRange; 4] = [
    ParamRange::new(1.0, 10.6),
    ParamRange::new(1.0, 44.0),
    ParamRange::new(3.5, 10.0),
    ParamRange::new(13.5, 20.0),
];

/// An STDP rule and its four parameters. `shape_plus`/`shape_minus` are the
/// time constants of asymmetric rules or the Gaussian widths of symmetric
/// rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRule {
    pub kind: RuleKind,
    pub a_plus: f64,
    pub a_minus: f64,
    pub shape_plus: f64,
    pub shape_minus: f64,
}

impl LearningRule {
    pub fn params(&self) -> [f64; 4] {
        [self.a_plus, self.a_minus, self.shape_plus, self.shape_minus]
    }

    pub fn set_params(&mut self, p: [f64; 4]) {
        [self.a_plus, self.a_minus, self.shape_plus, self.shape_minus] = p;
    }

    pub fn in_range(&self) -> bool {
        self.kind
            .param_ranges()
            .iter()
            .zip(self.params())
            .all(|(r, p)| r.contains(p))
            && (!self.kind.is_symmetric() || self.shape_minus > self.shape_plus)
    }
}

/// Half-width of the pairing window around a spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdpWindow {
    pub half_width_ms: f64,
}

impl Default for StdpWindow {
    fn default() -> Self {
        Self { half_width_ms: 40.0 }
    }
}

impl StdpWindow {
    pub fn contains(&self, dt_r: f64) -> bool {
        dt_r.abs() <= self.half_width_ms
    }
}

pub fn relative_timing(t_out_ms: f64, t_in_ms: f64) -> f64 {
    t_out_ms - t_in_ms
}

/// Difference of two zero-mean normalized Gaussians.
pub fn dog(dt_r: f64, sigma_plus: f64, sigma_minus: f64) -> f64 {
    let gauss = |s: f64| (-0.5 * (dt_r / s).powi(2)).exp() / (s * (2.0 * PI).sqrt());
    gauss(sigma_plus) - gauss(sigma_minus)
}

/// Weight change for a pre/post pair separated by `dt_r = t_out - t_in`.
pub fn delta_w(rule: &LearningRule, dt_r: f64) -> f64 {
    let hebbian = if rule.kind.is_symmetric() {
        let g = dog(dt_r, rule.shape_plus, rule.shape_minus);
        if g > 0.0 {
            rule.a_plus * g
        } else if g < 0.0 {
            rule.a_minus * g
        } else {
            0.0
        }
    } else if dt_r > 0.0 {
        rule.a_plus * (-dt_r / rule.shape_plus).exp()
    } else if dt_r < 0.0 {
        -rule.a_minus * (dt_r / rule.shape_minus).exp()
    } else {
        0.0
    };
    if rule.kind.is_hebbian() {
        hebbian
    } else {
        -hebbian
    }
}

/// Uniform draw of every parameter within the kind's ranges.
pub fn sample_rule<R: Rng + ?Sized>(kind: RuleKind, rng: &mut R) -> LearningRule {
    let r = kind.param_ranges();
    let mut draw = |i: usize| rng.random_range(r[i].min..=r[i].max);
    LearningRule {
        kind,
        a_plus: draw(0),
        a_minus: draw(1),
        shape_plus: draw(2),
        shape_minus: draw(3),
    }
}

/// A new spike seen by a neuron.
#[derive(Debug, Clone, Copy)]
pub enum StdpEvent<'a> {
    /// Presynaptic spike arriving on incoming synapse `synapse` at `t_ms`,
    /// paired against the neuron's recent output spikes.
    Input {
        synapse: usize,
        t_ms: f64,
        output_history: &'a [f64],
    },
    /// Output spike at `t_ms`, paired against the recent input spikes of
    /// every incoming synapse (`input_histories[i]` belongs to synapse `i`).
    Output {
        t_ms: f64,
        input_histories: &'a [Vec<f64>],
    },
}

/// Applies one spike event to a neuron's incoming weights: every pair
/// formed with the opposite-side history inside the window contributes its
/// `delta_w`, the touched weights are clamped to `[w_min, w_max]`, then the
/// incoming weights are rescaled to fit the budget.
pub fn apply_stdp(
    weights: &mut [f64],
    event: StdpEvent<'_>,
    rule: &LearningRule,
    window: StdpWindow,
    bounds: (f64, f64),
    budget: f64,
) {
    let (w_min, w_max) = bounds;
    let mut touched = false;
    match event {
        StdpEvent::Input {
            synapse,
            t_ms,
            output_history,
        } => {
            let dw: f64 = output_history
                .iter()
                .map(|&t_out| relative_timing(t_out, t_ms))
                .filter(|&dt| window.contains(dt))
                .map(|dt| delta_w(rule, dt))
                .sum();
            if output_history.iter().any(|&t| window.contains(relative_timing(t, t_ms))) {
                weights[synapse] = (weights[synapse] + dw).clamp(w_min, w_max);
                touched = true;
            }
        }
        StdpEvent::Output {
            t_ms,
            input_histories,
        } => {
            for (w, history) in weights.iter_mut().zip(input_histories) {
                let mut paired = false;
                let mut dw = 0.0;
                for &t_in in history {
                    let dt = relative_timing(t_ms, t_in);
                    if window.contains(dt) {
                        dw += delta_w(rule, dt);
                        paired = true;
                    }
                }
                if paired {
                    *w = (*w + dw).clamp(w_min, w_max);
                    touched = true;
                }
            }
        }
    }
    if touched {
        crate::spiking::normalize_weight_budget(weights, budget);
    }
}
