//! Weightless NEAT-style genome and its development into a [`Network`].
//!
//! Node ids are laid out as inputs `0..n_inputs`, outputs
//! `n_inputs..n_inputs + n_outputs`, then hidden nodes in order of creation.
//! Connection genes carry no weight; weights are drawn at development time.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plasticity::{sample_rule, LearningRule, RuleKind};
use crate::spiking::{Network, NeuronSpec, NeuronState, Neurotransmitter, NodeId, Role, SimParams, SynapseSpec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

/// Loci of a hidden or output node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronLoci {
    pub neurotransmitter: Neurotransmitter,
    pub bias: bool,
    pub rule: LearningRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loci: Option<NeuronLoci>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub enabled: bool,
}

/// Nodes are kept sorted by id and connections by innovation number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub n_inputs: usize,
    pub n_outputs: usize,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenomeConfig {
    pub p_excitatory: f64,
    pub p_bias: f64,
    /// Chance of the polarity matching the neurotransmitter: Hebbian for
    /// excitatory neurons, anti-Hebbian for inhibitory ones.
    pub p_matching_polarity: f64,
    pub p_symmetric: f64,
    pub p_switch_neurotransmitter: f64,
    pub p_flip_bias: f64,
    pub p_switch_rule: f64,
    pub p_perturb_params: f64,
    pub p_reinit_params: f64,
    pub p_add_connection: f64,
    pub p_add_node: f64,
    pub add_connection_attempts: usize,
    pub weight_mean: f64,
    pub weight_sd: f64,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self {
            p_excitatory: 0.7,
            p_bias: 0.2,
            p_matching_polarity: 0.7,
            p_symmetric: 0.5,
            p_switch_neurotransmitter: 0.1,
            p_flip_bias: 0.1,
            p_switch_rule: 0.1,
            p_perturb_params: 0.1,
            p_reinit_params: 0.02,
            p_add_connection: 0.05,
            p_add_node: 0.03,
            add_connection_attempts: 20,
            weight_mean: 1.0,
            weight_sd: 0.2,
        }
    }
}

impl GenomeConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_excitatory", self.p_excitatory),
            ("p_bias", self.p_bias),
            ("p_matching_polarity", self.p_matching_polarity),
            ("p_symmetric", self.p_symmetric),
            ("p_switch_neurotransmitter", self.p_switch_neurotransmitter),
            ("p_flip_bias", self.p_flip_bias),
            ("p_switch_rule", self.p_switch_rule),
            ("p_perturb_params", self.p_perturb_params),
            ("p_reinit_params", self.p_reinit_params),
            ("p_add_connection", self.p_add_connection),
            ("p_add_node", self.p_add_node),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("genome.{name} must be in [0, 1], got {p}")));
            }
        }
        if !(self.weight_sd >= 0.0) || !self.weight_mean.is_finite() {
            return Err(Error::InvalidConfig("genome.weight_sd must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatibilityConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub threshold: f64,
}

impl Default for CompatibilityConfig {
    fn default() -> Self {
        Self { c1: 1.0, c2: 1.0, c3: 0.4, threshold: 3.0 }
    }
}

/// Historical markings shared by a population.
///
/// Every `(from, to)` pair gets one innovation number for the whole run, and
/// splitting a given connection yields the same hidden node id, so identical
/// structural mutations always line up during crossover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RegistryRepr", into = "RegistryRepr")]
pub struct InnovationRegistry {
    connections: HashMap<(NodeId, NodeId), u64>,
    splits: HashMap<(NodeId, NodeId), NodeId>,
    next_innovation: u64,
    next_node: NodeId,
}

#[derive(Serialize, Deserialize)]
struct RegistryRepr {
    connections: Vec<(NodeId, NodeId, u64)>,
    splits: Vec<(NodeId, NodeId, NodeId)>,
    next_innovation: u64,
    next_node: NodeId,
}

impl From<RegistryRepr> for InnovationRegistry {
    fn from(r: RegistryRepr) -> Self {
        Self {
            connections: r.connections.into_iter().map(|(a, b, i)| ((a, b), i)).collect(),
            splits: r.splits.into_iter().map(|(a, b, n)| ((a, b), n)).collect(),
            next_innovation: r.next_innovation,
            next_node: r.next_node,
        }
    }
}

impl From<InnovationRegistry> for RegistryRepr {
    fn from(r: InnovationRegistry) -> Self {
        let mut connections: Vec<_> = r.connections.into_iter().map(|((a, b), i)| (a, b, i)).collect();
        connections.sort_by_key(|c| c.2);
        let mut splits: Vec<_> = r.splits.into_iter().map(|((a, b), n)| (a, b, n)).collect();
        splits.sort_by_key(|s| s.2);
        Self { connections, splits, next_innovation: r.next_innovation, next_node: r.next_node }
    }
}

impl InnovationRegistry {
    /// Registry pre-seeded with the numbering used by [`init_genome`].
    pub fn new(n_inputs: usize, n_outputs: usize) -> Self {
        let mut connections = HashMap::new();
        for (from, to, innovation) in initial_edges(n_inputs, n_outputs) {
            connections.insert((from, to), innovation);
        }
        Self {
            connections,
            splits: HashMap::new(),
            next_innovation: (n_inputs * n_outputs) as u64,
            next_node: (n_inputs + n_outputs) as NodeId,
        }
    }

    pub fn connection(&mut self, from: NodeId, to: NodeId) -> u64 {
        let next = &mut self.next_innovation;
        *self.connections.entry((from, to)).or_insert_with(|| {
            *next += 1;
            *next - 1
        })
    }

    /// Node id for splitting `(from, to)`. `taken` reports ids the genome
    /// already holds; a fresh id is issued if the registered one is taken.
    pub fn split_node(&mut self, from: NodeId, to: NodeId, taken: impl Fn(NodeId) -> bool) -> NodeId {
        if let Some(&id) = self.splits.get(&(from, to)) {
            if !taken(id) {
                return id;
            }
            return self.fresh_node();
        }
        let id = self.fresh_node();
        self.splits.insert((from, to), id);
        id
    }

    fn fresh_node(&mut self) -> NodeId {
        self.next_node += 1;
        self.next_node - 1
    }

    pub fn next_innovation(&self) -> u64 {
        self.next_innovation
    }

    pub fn next_node(&self) -> NodeId {
        self.next_node
    }
}

fn initial_edges(n_inputs: usize, n_outputs: usize) -> impl Iterator<Item = (NodeId, NodeId, u64)> {
    (0..n_inputs).flat_map(move |i| {
        (0..n_outputs).map(move |o| (i as NodeId, (n_inputs + o) as NodeId, (i * n_outputs + o) as u64))
    })
}

/// Draws the loci of a new neuron. Output neurons are always excitatory.
pub fn init_loci<R: Rng + ?Sized>(kind: NodeKind, cfg: &GenomeConfig, rng: &mut R) -> NeuronLoci {
    let excitatory = kind == NodeKind::Output || rng.random_bool(cfg.p_excitatory);
    let neurotransmitter = if excitatory { Neurotransmitter::Excitatory } else { Neurotransmitter::Inhibitory };
    let bias = rng.random_bool(cfg.p_bias);
    let matching = rng.random_bool(cfg.p_matching_polarity);
    let hebbian = matching == excitatory;
    let symmetric = rng.random_bool(cfg.p_symmetric);
    let rule = sample_rule(RuleKind::from_traits(symmetric, hebbian), rng);
    NeuronLoci { neurotransmitter, bias, rule }
}

/// Fully connected input-to-output genome without hidden nodes.
pub fn init_genome<R: Rng + ?Sized>(
    n_inputs: usize,
    n_outputs: usize,
    cfg: &GenomeConfig,
    rng: &mut R,
) -> Genome {
    assert!(n_inputs >= 1 && n_outputs >= 1, "genome needs at least one input and one output");
    let mut nodes: Vec<NodeGene> =
        (0..n_inputs).map(|i| NodeGene { id: i as NodeId, kind: NodeKind::Input, loci: None }).collect();
    for o in 0..n_outputs {
        nodes.push(NodeGene {
            id: (n_inputs + o) as NodeId,
            kind: NodeKind::Output,
            loci: Some(init_loci(NodeKind::Output, cfg, rng)),
        });
    }
    let connections = initial_edges(n_inputs, n_outputs)
        .map(|(from, to, innovation)| ConnectionGene { innovation, from, to, enabled: true })
        .collect();
    Genome { n_inputs, n_outputs, nodes, connections, fitness: None }
}

/// What a single [`mutate`] call changed on one non-input node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LocusEvents {
    pub node: NodeId,
    pub neurotransmitter_switched: bool,
    pub bias_flipped: bool,
    pub rule_switched: bool,
    pub params_perturbed: bool,
    pub params_reinitialized: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub loci: Vec<LocusEvents>,
    pub added_connection: Option<(NodeId, NodeId)>,
    pub reenabled_connection: Option<(NodeId, NodeId)>,
    pub added_node: Option<NodeId>,
}

pub fn mutate<R: Rng + ?Sized>(
    g: &Genome,
    registry: &mut InnovationRegistry,
    cfg: &GenomeConfig,
    rng: &mut R,
) -> Genome {
    mutate_with_report(g, registry, cfg, rng).0
}

/// Locus mutations are rolled independently on every existing hidden and
/// output node, followed by the structural mutations.
pub fn mutate_with_report<R: Rng + ?Sized>(
    g: &Genome,
    registry: &mut InnovationRegistry,
    cfg: &GenomeConfig,
    rng: &mut R,
) -> (Genome, MutationReport) {
    let mut child = g.clone();
    child.fitness = None;
    let mut report = MutationReport::default();

    for node in &mut child.nodes {
        let Some(loci) = node.loci.as_mut() else { continue };
        let mut ev = LocusEvents { node: node.id, ..Default::default() };
        if node.kind == NodeKind::Hidden && rng.random_bool(cfg.p_switch_neurotransmitter) {
            loci.neurotransmitter = loci.neurotransmitter.flipped();
            ev.neurotransmitter_switched = true;
        }
        if rng.random_bool(cfg.p_flip_bias) {
            loci.bias = !loci.bias;
            ev.bias_flipped = true;
        }
        if rng.random_bool(cfg.p_switch_rule) {
            let old = loci.rule.kind;
            let others: Vec<RuleKind> = RuleKind::ALL.into_iter().filter(|&k| k != old).collect();
            let new = others[rng.random_range(0..others.len())];
            if new.is_symmetric() == old.is_symmetric() {
                loci.rule.kind = new;
            } else {
                loci.rule = sample_rule(new, rng);
            }
            ev.rule_switched = true;
        }
        if rng.random_bool(cfg.p_perturb_params) {
            perturb_params(&mut loci.rule, rng);
            ev.params_perturbed = true;
        }
        if rng.random_bool(cfg.p_reinit_params) {
            loci.rule = sample_rule(loci.rule.kind, rng);
            ev.params_reinitialized = true;
        }
        report.loci.push(ev);
    }

    if rng.random_bool(cfg.p_add_connection) {
        add_connection(&mut child, registry, cfg, rng, &mut report);
    }
    if rng.random_bool(cfg.p_add_node) {
        report.added_node = add_node(&mut child, registry, cfg, rng);
    }
    (child, report)
}

/// Adds zero-mean normal noise of variance `m(p)` to every parameter, then
/// clamps into range.
pub fn perturb_params<R: Rng + ?Sized>(rule: &mut LearningRule, rng: &mut R) {
    let ranges = rule.kind.param_ranges();
    let mut p = rule.params();
    for (x, r) in p.iter_mut().zip(ranges) {
        let noise = Normal::new(0.0, r.mutation_variance().sqrt()).expect("finite variance");
        *x = r.clamp(*x + noise.sample(rng));
    }
    rule.set_params(p);
}

fn add_connection<R: Rng + ?Sized>(
    g: &mut Genome,
    registry: &mut InnovationRegistry,
    cfg: &GenomeConfig,
    rng: &mut R,
    report: &mut MutationReport,
) {
    let targets: Vec<NodeId> = g.nodes.iter().filter(|n| n.kind != NodeKind::Input).map(|n| n.id).collect();
    for _ in 0..cfg.add_connection_attempts {
        let from = g.nodes[rng.random_range(0..g.nodes.len())].id;
        let to = targets[rng.random_range(0..targets.len())];
        match g.connections.iter_mut().find(|c| c.from == from && c.to == to) {
            Some(c) if c.enabled => continue,
            Some(c) => {
                c.enabled = true;
                report.reenabled_connection = Some((from, to));
            }
            None => {
                let innovation = registry.connection(from, to);
                g.insert_connection(ConnectionGene { innovation, from, to, enabled: true });
                report.added_connection = Some((from, to));
            }
        }
        return;
    }
}

fn add_node<R: Rng + ?Sized>(
    g: &mut Genome,
    registry: &mut InnovationRegistry,
    cfg: &GenomeConfig,
    rng: &mut R,
) -> Option<NodeId> {
    let enabled: Vec<usize> = (0..g.connections.len()).filter(|&i| g.connections[i].enabled).collect();
    if enabled.is_empty() {
        return None;
    }
    let idx = enabled[rng.random_range(0..enabled.len())];
    let (from, to) = (g.connections[idx].from, g.connections[idx].to);
    g.connections[idx].enabled = false;
    let ids: HashSet<NodeId> = g.nodes.iter().map(|n| n.id).collect();
    let h = registry.split_node(from, to, |id| ids.contains(&id));
    let loci = init_loci(NodeKind::Hidden, cfg, rng);
    g.insert_node(NodeGene { id: h, kind: NodeKind::Hidden, loci: Some(loci) });
    for (a, b) in [(from, h), (h, to)] {
        let innovation = registry.connection(a, b);
        g.insert_connection(ConnectionGene { innovation, from: a, to: b, enabled: true });
    }
    Some(h)
}

/// NEAT crossover. The child takes the structure of the fitter parent
/// (`a` on ties); matching connection genes and the loci of nodes present
/// in both parents are inherited from either parent at random.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, fitness_a: f64, fitness_b: f64, rng: &mut R) -> Genome {
    debug_assert_eq!((a.n_inputs, a.n_outputs), (b.n_inputs, b.n_outputs));
    let (fit, other) = if fitness_a >= fitness_b { (a, b) } else { (b, a) };
    let other_conns: HashMap<u64, &ConnectionGene> = other.connections.iter().map(|c| (c.innovation, c)).collect();
    let other_nodes: HashMap<NodeId, &NodeGene> = other.nodes.iter().map(|n| (n.id, n)).collect();

    let connections = fit
        .connections
        .iter()
        .map(|c| match other_conns.get(&c.innovation) {
            Some(o) if rng.random_bool(0.5) => **o,
            _ => *c,
        })
        .collect();
    let nodes = fit
        .nodes
        .iter()
        .map(|n| match other_nodes.get(&n.id) {
            Some(o) if o.kind == n.kind && rng.random_bool(0.5) => **o,
            _ => *n,
        })
        .collect();
    Genome { n_inputs: fit.n_inputs, n_outputs: fit.n_outputs, nodes, connections, fitness: None }
}

/// Disagreement between the loci of two nodes with the same id.
pub fn locus_distance(a: &NodeGene, b: &NodeGene) -> f64 {
    let (la, lb) = match (&a.loci, &b.loci) {
        (Some(la), Some(lb)) => (la, lb),
        (None, None) => return 0.0,
        _ => return 3.0,
    };
    let mut d = 0.0;
    if la.neurotransmitter != lb.neurotransmitter {
        d += 1.0;
    }
    if la.bias != lb.bias {
        d += 1.0;
    }
    if la.rule.kind != lb.rule.kind {
        d += 1.0;
    } else {
        let ranges = la.rule.kind.param_ranges();
        let (pa, pb) = (la.rule.params(), lb.rule.params());
        let sum: f64 = (0..4).map(|i| (pa[i] - pb[i]).abs() / ranges[i].span()).sum();
        d += sum / 4.0;
    }
    d
}

/// `c1·E/N + c2·D/N + c3·L̄` over connection genes (excess `E`, disjoint
/// `D`) and matching node ids (mean locus distance `L̄`).
pub fn compatibility_distance(a: &Genome, b: &Genome, c: &CompatibilityConfig) -> f64 {
    let ia: HashSet<u64> = a.connections.iter().map(|g| g.innovation).collect();
    let ib: HashSet<u64> = b.connections.iter().map(|g| g.innovation).collect();
    let max_a = ia.iter().copied().max();
    let max_b = ib.iter().copied().max();
    let cutoff = max_a.min(max_b);
    let (mut excess, mut disjoint) = (0usize, 0usize);
    for &i in ia.symmetric_difference(&ib) {
        if cutoff.is_some_and(|m| i <= m) {
            disjoint += 1;
        } else {
            excess += 1;
        }
    }
    let larger = a.connections.len().max(b.connections.len());
    let n = if larger < 20 { 1.0 } else { larger as f64 };

    let nodes_b: HashMap<NodeId, &NodeGene> = b.nodes.iter().map(|n| (n.id, n)).collect();
    let (mut sum, mut matching) = (0.0, 0usize);
    for na in &a.nodes {
        if let Some(nb) = nodes_b.get(&na.id) {
            sum += locus_distance(na, nb);
            matching += 1;
        }
    }
    let mean_locus = if matching == 0 { 0.0 } else { sum / matching as f64 };
    c.c1 * excess as f64 / n + c.c2 * disjoint as f64 / n + c.c3 * mean_locus
}

/// One initial weight before clamping and budget normalization.
pub fn sample_weight<R: Rng + ?Sized>(cfg: &GenomeConfig, rng: &mut R) -> f64 {
    Normal::new(cfg.weight_mean, cfg.weight_sd).expect("validated sd").sample(rng)
}

/// Builds the phenotype: one synapse per enabled connection with weights
/// drawn in innovation order.
pub fn develop<R: Rng + ?Sized>(
    g: &Genome,
    params: &SimParams,
    cfg: &GenomeConfig,
    rng: &mut R,
) -> Result<Network> {
    g.validate()?;
    let input_ids: Vec<NodeId> = g.input_ids().collect();
    let neurons = g
        .nodes
        .iter()
        .filter_map(|n| {
            let loci = n.loci?;
            let role = if n.kind == NodeKind::Output { Role::Output } else { Role::Hidden };
            Some(NeuronSpec { id: n.id, role, state: NeuronState::new(loci.neurotransmitter, loci.bias, loci.rule) })
        })
        .collect();
    let synapses = g
        .connections
        .iter()
        .filter(|c| c.enabled)
        .map(|c| SynapseSpec { pre: c.from, post: c.to, weight: sample_weight(cfg, rng).clamp(params.w_min, params.w_max) })
        .collect();
    Network::new(*params, &input_ids, neurons, synapses)
}

#[derive(Serialize, Deserialize)]
struct GenomeDocument<'a> {
    format_version: u32,
    genome: std::borrow::Cow<'a, Genome>,
}

impl Genome {
    pub fn input_ids(&self) -> impl Iterator<Item = NodeId> {
        0..self.n_inputs as NodeId
    }

    pub fn output_ids(&self) -> impl Iterator<Item = NodeId> {
        self.n_inputs as NodeId..(self.n_inputs + self.n_outputs) as NodeId
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    pub fn enabled_connections(&self) -> impl Iterator<Item = &ConnectionGene> {
        self.connections.iter().filter(|c| c.enabled)
    }

    fn insert_node(&mut self, n: NodeGene) {
        let at = self.nodes.partition_point(|m| m.id < n.id);
        self.nodes.insert(at, n);
    }

    fn insert_connection(&mut self, c: ConnectionGene) {
        let at = self.connections.partition_point(|d| d.innovation < c.innovation);
        self.connections.insert(at, c);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Development(m));
        let mut kinds = BTreeMap::new();
        for n in &self.nodes {
            if kinds.insert(n.id, n.kind).is_some() {
                return bad(format!("duplicate node id {}", n.id));
            }
            let expected = if (n.id as usize) < self.n_inputs {
                NodeKind::Input
            } else if (n.id as usize) < self.n_inputs + self.n_outputs {
                NodeKind::Output
            } else {
                NodeKind::Hidden
            };
            if n.kind != expected {
                return bad(format!("node {} should be {:?}, found {:?}", n.id, expected, n.kind));
            }
            match (n.kind, &n.loci) {
                (NodeKind::Input, Some(_)) => return bad(format!("input node {} carries loci", n.id)),
                (NodeKind::Input, None) => {}
                (_, None) => return bad(format!("node {} is missing its loci", n.id)),
                (kind, Some(l)) => {
                    if kind == NodeKind::Output && l.neurotransmitter != Neurotransmitter::Excitatory {
                        return bad(format!("output node {} must be excitatory", n.id));
                    }
                    if !l.rule.in_range() {
                        return bad(format!("node {} has rule parameters out of range", n.id));
                    }
                }
            }
        }
        if kinds.len() < self.n_inputs + self.n_outputs {
            return bad("genome is missing input or output nodes".into());
        }
        if !self.nodes.windows(2).all(|w| w[0].id < w[1].id) {
            return bad("node genes are not sorted by id".into());
        }
        let mut innovations = HashSet::new();
        let mut enabled = HashSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return bad(format!("duplicate innovation {}", c.innovation));
            }
            if !kinds.contains_key(&c.from) {
                return bad(format!("connection {} has unknown source {}", c.innovation, c.from));
            }
            match kinds.get(&c.to) {
                None => return bad(format!("connection {} has unknown target {}", c.innovation, c.to)),
                Some(NodeKind::Input) => return bad(format!("connection {} targets input {}", c.innovation, c.to)),
                _ => {}
            }
            if c.enabled && !enabled.insert((c.from, c.to)) {
                return bad(format!("duplicate enabled connection {} -> {}", c.from, c.to));
            }
        }
        if !self.connections.windows(2).all(|w| w[0].innovation < w[1].innovation) {
            return bad("connection genes are not sorted by innovation".into());
        }
        Ok(())
    }

    /// Versioned JSON document.
    pub fn to_json(&self) -> String {
        let doc = GenomeDocument { format_version: FORMAT_VERSION, genome: std::borrow::Cow::Borrowed(self) };
        serde_json::to_string_pretty(&doc).expect("genome serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: GenomeDocument<'static> = serde_json::from_str(s)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported genome format_version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let g = doc.genome.into_owned();
        g.validate()?;
        Ok(g)
    }
}
