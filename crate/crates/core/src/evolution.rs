//! Generational loop: parallel evaluation, speciation, elitism and
//! reproduction.
//!
//! All randomness is derived from the master seed. Individual `i` of
//! generation `g` is evaluated with `derive_seed(master, [g, i])`, and
//! reproduction for generation `g` draws from its own stream, so a run is
//! reproducible regardless of thread count and can be resumed from any
//! checkpoint.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::LifetimeReport;
use crate::error::{Error, Result};
use crate::genome::{
    compatibility_distance, crossover, init_genome, mutate, CompatibilityConfig, Genome, GenomeConfig,
    InnovationRegistry,
};
use crate::seed::{derive_seed, rng_from};

/// Evaluates genomes for the evolutionary loop.
pub trait Task: Sync {
    fn arity(&self) -> (usize, usize);
    fn evaluate(&self, genome: &Genome, seed: u64) -> Result<LifetimeReport>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub population_size: usize,
    pub generations: usize,
    pub elitism_fraction: f64,
    /// Take elites from each species instead of from the whole population.
    pub per_species_elitism: bool,
    pub tournament_size: usize,
    pub stagnation_limit: usize,
    pub compatibility: CompatibilityConfig,
    pub genome: GenomeConfig,
    pub master_seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 1000,
            elitism_fraction: 0.1,
            per_species_elitism: false,
            tournament_size: 3,
            stagnation_limit: 20,
            compatibility: CompatibilityConfig::default(),
            genome: GenomeConfig::default(),
            master_seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidConfig("evolution.population_size must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.elitism_fraction) {
            return Err(Error::InvalidConfig("evolution.elitism_fraction must be in [0, 1)".into()));
        }
        if self.tournament_size == 0 {
            return Err(Error::InvalidConfig("evolution.tournament_size must be >= 1".into()));
        }
        self.genome.validate()
    }

    pub fn elite_count(&self) -> usize {
        if self.elitism_fraction <= 0.0 {
            return 0;
        }
        ((self.elitism_fraction * self.population_size as f64).floor() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Self { min: 0.0, mean: 0.0, max: 0.0 };
        }
        // Rounding can push the mean a hair outside [min, max].
        Self { min, mean: (sum / n as f64).clamp(min, max), max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub fitness: Summary,
    pub accuracy: Summary,
    pub eos_accuracy: Summary,
    pub species_count: usize,
    pub best_genome: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub key: u64,
    pub genome: Genome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u64,
    pub representative: Genome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    pub best_fitness: f64,
    pub last_improved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Champion {
    pub key: u64,
    pub generation: usize,
    pub fitness: f64,
    pub accuracy: f64,
    pub eos_accuracy: f64,
    pub genome: Genome,
}

/// Best-ever individuals by each metric. Later individuals replace a
/// champion only with a strictly better value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChampionArchive {
    pub by_fitness: Option<Champion>,
    pub by_accuracy: Option<Champion>,
    pub by_eos_accuracy: Option<Champion>,
}

impl ChampionArchive {
    pub fn offer(&mut self, c: &Champion) {
        let better = |slot: &Option<Champion>, f: fn(&Champion) -> f64| slot.as_ref().is_none_or(|o| f(c) > f(o));
        if better(&self.by_fitness, |c| c.fitness) {
            self.by_fitness = Some(c.clone());
        }
        if better(&self.by_accuracy, |c| c.accuracy) {
            self.by_accuracy = Some(c.clone());
        }
        if better(&self.by_eos_accuracy, |c| c.eos_accuracy) {
            self.by_eos_accuracy = Some(c.clone());
        }
    }
}

/// Assigns each genome to the first species whose representative is
/// within `threshold`; unmatched genomes found new species. Returns member
/// lists, one per representative followed by one per new species.
pub fn speciate(
    population: &[Genome],
    representatives: &[Genome],
    c: &CompatibilityConfig,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut reps: Vec<&Genome> = representatives.iter().collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); reps.len()];
    let mut founders = Vec::new();
    for (i, g) in population.iter().enumerate() {
        match reps.iter().position(|r| compatibility_distance(r, g, c) <= c.threshold) {
            Some(s) => members[s].push(i),
            None => {
                reps.push(g);
                members.push(vec![i]);
                founders.push(i);
            }
        }
    }
    (members, founders)
}

/// Splits `total` offspring among species in proportion to their mean
/// fitness using the largest-remainder method. Species with zero mean share
/// nothing unless all are zero, in which case shares are equal.
pub fn offspring_quotas(mean_fitness: &[f64], total: usize) -> Vec<usize> {
    if mean_fitness.is_empty() {
        return Vec::new();
    }
    let weights: Vec<f64> = mean_fitness.iter().map(|&f| f.max(0.0)).collect();
    let sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = if sum > 0.0 {
        weights.iter().map(|w| w / sum * total as f64).collect()
    } else {
        vec![total as f64 / weights.len() as f64; weights.len()]
    };
    let mut quotas: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut left = total - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| (shares[b] - shares[b].floor()).total_cmp(&(shares[a] - shares[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        quotas[i] += 1;
        left -= 1;
    }
    quotas
}

/// Tournament winner among `members` (drawn with replacement).
pub fn tournament<R: Rng + ?Sized>(members: &[usize], fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = members[rng.random_range(0..members.len())];
    for _ in 1..size {
        let c = members[rng.random_range(0..members.len())];
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// `quota` parent pairs from one species.
pub fn select_parents<R: Rng + ?Sized>(
    members: &[usize],
    fitness: &[f64],
    quota: usize,
    tournament_size: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    assert!(!members.is_empty(), "species must not be empty");
    (0..quota)
        .map(|_| {
            if members.len() == 1 {
                (members[0], members[0])
            } else {
                (tournament(members, fitness, tournament_size, rng), tournament(members, fitness, tournament_size, rng))
            }
        })
        .collect()
}

/// Complete, serializable state of a run; doubles as the checkpoint format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub config: EvolutionConfig,
    pub generation: usize,
    pub population: Vec<Individual>,
    pub species: Vec<Species>,
    pub registry: InnovationRegistry,
    pub archive: ChampionArchive,
    pub history: Vec<GenerationStats>,
    next_key: u64,
    next_species: u64,
}

const REPRODUCTION_STREAM: u64 = u64::MAX;

impl Evolution {
    pub fn new(config: EvolutionConfig, n_inputs: usize, n_outputs: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_from(config.master_seed, &[REPRODUCTION_STREAM, u64::MAX]);
        let population = (0..config.population_size)
            .map(|i| Individual { key: i as u64, genome: init_genome(n_inputs, n_outputs, &config.genome, &mut rng) })
            .collect();
        Ok(Self {
            config,
            generation: 0,
            population,
            species: Vec::new(),
            registry: InnovationRegistry::new(n_inputs, n_outputs),
            archive: ChampionArchive::default(),
            history: Vec::new(),
            next_key: config.population_size as u64,
            next_species: 0,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.generation >= self.config.generations
    }

    pub fn evaluation_seed(&self, index: usize) -> u64 {
        derive_seed(self.config.master_seed, &[self.generation as u64, index as u64])
    }

    /// Evaluates the current population and breeds the next one.
    pub fn step<T: Task + ?Sized>(&mut self, task: &T) -> Result<&GenerationStats> {
        let gen = self.generation;
        let seeds: Vec<u64> = (0..self.population.len()).map(|i| self.evaluation_seed(i)).collect();
        let reports: Vec<LifetimeReport> = self
            .population
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(ind, &seed)| task.evaluate(&ind.genome, seed))
            .collect::<Result<_>>()?;
        let fitness: Vec<f64> = reports.iter().map(|r| r.fitness).collect();

        let best = (0..fitness.len()).fold(0, |b, i| if fitness[i] > fitness[b] { i } else { b });
        for (ind, r) in self.population.iter().zip(&reports) {
            self.archive.offer(&Champion {
                key: ind.key,
                generation: gen,
                fitness: r.fitness,
                accuracy: r.accuracy,
                eos_accuracy: r.eos_accuracy,
                genome: Genome { fitness: Some(r.fitness), ..ind.genome.clone() },
            });
        }

        let mut rng = rng_from(self.config.master_seed, &[REPRODUCTION_STREAM, gen as u64]);
        self.update_species(&fitness, gen, best, &mut rng);

        self.history.push(GenerationStats {
            generation: gen,
            fitness: Summary::of(fitness.iter().copied()),
            accuracy: Summary::of(reports.iter().map(|r| r.accuracy)),
            eos_accuracy: Summary::of(reports.iter().map(|r| r.eos_accuracy)),
            species_count: self.species.len(),
            best_genome: self.population[best].key,
        });

        self.population = self.reproduce(&fitness, &mut rng);
        self.generation += 1;
        Ok(self.history.last().expect("just pushed"))
    }

    fn update_species<R: Rng + ?Sized>(&mut self, fitness: &[f64], gen: usize, best: usize, rng: &mut R) {
        let genomes: Vec<Genome> = self.population.iter().map(|i| i.genome.clone()).collect();
        let reps: Vec<Genome> = self.species.iter().map(|s| s.representative.clone()).collect();
        let (members, _) = speciate(&genomes, &reps, &self.config.compatibility);

        let mut next = Vec::new();
        for (k, m) in members.into_iter().enumerate() {
            if m.is_empty() {
                continue;
            }
            let top = m.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
            let mut s = match self.species.get(k) {
                Some(old) => old.clone(),
                None => {
                    self.next_species += 1;
                    Species {
                        id: self.next_species - 1,
                        representative: genomes[m[0]].clone(),
                        members: Vec::new(),
                        best_fitness: f64::NEG_INFINITY,
                        last_improved: gen,
                    }
                }
            };
            if top > s.best_fitness {
                s.best_fitness = top;
                s.last_improved = gen;
            }
            s.representative = genomes[m[rng.random_range(0..m.len())]].clone();
            s.members = m;
            next.push(s);
        }

        let limit = self.config.stagnation_limit;
        next.retain(|s| s.members.contains(&best) || gen - s.last_improved < limit);
        self.species = next;
    }

    fn reproduce<R: Rng + ?Sized>(&mut self, fitness: &[f64], rng: &mut R) -> Vec<Individual> {
        let n = self.config.population_size;
        let by_fitness = |idx: &mut Vec<usize>| idx.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));

        let mut elites: Vec<usize> = if self.config.per_species_elitism {
            let mut e = Vec::new();
            for s in &self.species {
                let mut m = s.members.clone();
                by_fitness(&mut m);
                let k = ((self.config.elitism_fraction * m.len() as f64).floor() as usize).max(1);
                e.extend(m.into_iter().take(k));
            }
            by_fitness(&mut e);
            e.truncate(n - 1);
            e
        } else {
            let mut all: Vec<usize> = (0..self.population.len()).collect();
            by_fitness(&mut all);
            all.truncate(self.config.elite_count());
            all
        };
        if self.config.elitism_fraction <= 0.0 {
            elites.clear();
        }

        let means: Vec<f64> = self
            .species
            .iter()
            .map(|s| s.members.iter().map(|&i| fitness[i]).sum::<f64>() / s.members.len() as f64)
            .collect();
        let quotas = offspring_quotas(&means, n - elites.len());

        let mut next: Vec<Individual> = elites.iter().map(|&i| self.population[i].clone()).collect();
        for (s, &q) in self.species.iter().zip(&quotas) {
            for (a, b) in select_parents(&s.members, fitness, q, self.config.tournament_size, rng) {
                let pa = &self.population[a].genome;
                let child = if a == b {
                    mutate(pa, &mut self.registry, &self.config.genome, rng)
                } else {
                    let x = crossover(pa, &self.population[b].genome, fitness[a], fitness[b], rng);
                    mutate(&x, &mut self.registry, &self.config.genome, rng)
                };
                next.push(Individual { key: self.next_key, genome: child });
                self.next_key += 1;
            }
        }
        next
    }

    /// Runs the remaining generations, calling `on_generation` after each.
    pub fn run<T, F>(&mut self, task: &T, mut on_generation: F) -> Result<()>
    where
        T: Task + ?Sized,
        F: FnMut(&Evolution) -> Result<()>,
    {
        let (n_in, n_out) = task.arity();
        if let Some(ind) = self.population.first() {
            if (ind.genome.n_inputs, ind.genome.n_outputs) != (n_in, n_out) {
                return Err(Error::ArityMismatch {
                    expected_inputs: n_in,
                    expected_outputs: n_out,
                    found_inputs: ind.genome.n_inputs,
                    found_outputs: ind.genome.n_outputs,
                });
            }
        }
        while !self.is_finished() {
            self.step(task)?;
            on_generation(self)?;
        }
        Ok(())
    }
}

pub fn evolve<T: Task + ?Sized>(config: EvolutionConfig, task: &T) -> Result<(Vec<GenerationStats>, ChampionArchive)> {
    let (n_in, n_out) = task.arity();
    let mut evo = Evolution::new(config, n_in, n_out)?;
    evo.run(task, |_| Ok(()))?;
    Ok((evo.history, evo.archive))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::init_genome;

    struct Constant;

    impl Task for Constant {
        fn arity(&self) -> (usize, usize) {
            (2, 2)
        }

        fn evaluate(&self, _: &Genome, _: u64) -> Result<LifetimeReport> {
            Ok(LifetimeReport {
                survived_steps: 0,
                l_min: 0,
                l_max: 1,
                fitness: 0.5,
                accuracy: 0.5,
                eos_accuracy: 0.5,
                samples: Vec::new(),
                condition_runs: Vec::new(),
                count_trace: Vec::new(),
            })
        }
    }

    fn small(pop: usize, gens: usize) -> EvolutionConfig {
        EvolutionConfig { population_size: pop, generations: gens, master_seed: 5, ..Default::default() }
    }

    #[test]
    fn one_elite_of_ten() {
        let mut evo = Evolution::new(small(10, 1), 2, 2).unwrap();
        let before = evo.population.clone();
        evo.step(&Constant).unwrap();
        assert_eq!(evo.population.len(), 10);
        let kept: Vec<_> = evo.population.iter().filter(|i| before.contains(i)).collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].key, 0);
    }

    #[test]
    fn quotas_are_proportional_and_complete() {
        let q = offspring_quotas(&[0.6, 0.3], 9);
        assert_eq!(q.iter().sum::<usize>(), 9);
        assert_eq!(q, vec![6, 3]);
        assert_eq!(offspring_quotas(&[0.0, 0.0, 0.0], 7).iter().sum::<usize>(), 7);
        assert_eq!(offspring_quotas(&[0.5, 0.25, 0.25], 10), vec![5, 3, 2]);
    }

    #[test]
    fn clones_form_one_species() {
        let g = init_genome(3, 2, &GenomeConfig::default(), &mut rng_from(1, &[]));
        let pop = vec![g; 8];
        let (m, f) = speciate(&pop, &[], &CompatibilityConfig::default());
        assert_eq!(m, vec![(0..8).collect::<Vec<_>>()]);
        assert_eq!(f, vec![0]);
    }

    #[test]
    fn zero_threshold_separates_distinct_genomes() {
        let cfg = GenomeConfig::default();
        let mut rng = rng_from(2, &[]);
        let pop: Vec<Genome> = (0..5).map(|_| init_genome(2, 2, &cfg, &mut rng)).collect();
        let c = CompatibilityConfig { threshold: 0.0, ..Default::default() };
        let (m, _) = speciate(&pop, &[], &c);
        assert_eq!(m.len(), 5);
    }

    #[test]
    fn single_member_pairs_with_itself() {
        let pairs = select_parents(&[4], &[0.0; 5], 3, 3, &mut rng_from(0, &[]));
        assert_eq!(pairs, vec![(4, 4); 3]);
    }

    #[test]
    fn archive_requires_strict_improvement() {
        let g = init_genome(1, 1, &GenomeConfig::default(), &mut rng_from(0, &[]));
        let c = |key, f| Champion { key, generation: 0, fitness: f, accuracy: f, eos_accuracy: f, genome: g.clone() };
        let mut a = ChampionArchive::default();
        a.offer(&c(1, 0.5));
        a.offer(&c(2, 0.5));
        assert_eq!(a.by_fitness.as_ref().unwrap().key, 1);
        a.offer(&c(3, 0.6));
        assert_eq!(a.by_accuracy.as_ref().unwrap().key, 3);
    }

    #[test]
    fn population_size_is_constant() {
        let mut evo = Evolution::new(small(13, 4), 2, 2).unwrap();
        evo.run(&Constant, |e| {
            assert_eq!(e.population.len(), 13);
            Ok(())
        })
        .unwrap();
        assert_eq!(evo.history.len(), 4);
    }
}
