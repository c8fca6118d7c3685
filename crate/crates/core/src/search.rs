//! Grammatical evolution of reduction strategies with NSGA-II selection, and
//! the random-sampling baseline that spends the same evaluation budget.
//!
//! Randomness is split into substreams keyed by the master seed:
//! initial chromosome `i` uses `[INIT, i]`, offspring pair `p` of generation
//! `g` uses `[VARIATION, g, p]` for both tournaments and all variation, and a
//! strategy is evaluated with [`evaluation_rng`] keyed by its rendered text.
//! Results are therefore identical for any degree of parallelism.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::MutationCache;
use crate::front::{Front, FrontEntry};
use crate::genome::{self, Chromosome, GenomeConfig, MappingResult};
use crate::grammar::Grammar;
use crate::indicators::hypervolume;
use crate::nsga2::{crowding_distance, fast_nondominated_sort};
use crate::objectives::{evaluate, ObjectivePair};
use crate::rng::{evaluation_rng, substream, DOMAIN_INIT, DOMAIN_RANDOM_SEARCH, DOMAIN_VARIATION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid search configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_evaluations: usize,
    pub population_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub prune_prob: f64,
    pub duplicate_prob: f64,
    /// Strategy executions averaged per fitness evaluation.
    pub repetitions: usize,
    pub genome: GenomeConfig,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 10_000,
            population_size: 100,
            crossover_prob: 1.0,
            mutation_prob: 0.01,
            prune_prob: 0.1,
            duplicate_prob: 0.1,
            repetitions: 5,
            genome: GenomeConfig::default(),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(ConfigError("population_size must be even and at least 2".into()));
        }
        if self.max_evaluations < self.population_size {
            return Err(ConfigError("max_evaluations must cover the initial population".into()));
        }
        for (name, p) in [
            ("crossover_prob", self.crossover_prob),
            ("mutation_prob", self.mutation_prob),
            ("prune_prob", self.prune_prob),
            ("duplicate_prob", self.duplicate_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(ConfigError(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.repetitions == 0 {
            return Err(ConfigError("repetitions must be at least 1".into()));
        }
        self.genome.validate().map_err(ConfigError)
    }

    /// Generations after the initial population that fit the budget.
    pub fn generations(&self) -> usize {
        (self.max_evaluations - self.population_size) / self.population_size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub mapping: MappingResult,
    pub objectives: ObjectivePair,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn is_mapped(&self) -> bool {
        self.mapping.is_mapped()
    }

    fn front_entry(&self) -> Option<FrontEntry> {
        let strategy = self.mapping.strategy.as_ref().filter(|_| self.is_mapped())?;
        Some(FrontEntry {
            chromosome: Some(self.chromosome.clone()),
            strategy_text: strategy.render(),
            objectives: self.objectives,
        })
    }
}

/// Maps and evaluates one chromosome. Chromosomes that fail to map get
/// [`ObjectivePair::PENALTY`].
pub fn evaluate_chromosome(
    chromosome: Chromosome,
    grammar: &Grammar,
    cache: &MutationCache,
    config: &SearchConfig,
) -> Individual {
    let mapping = genome::map(&chromosome, grammar, config.genome.max_wraps);
    let objectives = match (&mapping.strategy, mapping.is_mapped()) {
        (Some(s), true) => {
            let label = s.render();
            evaluate(s, cache, config.repetitions, &mut evaluation_rng(config.seed, &label))
        }
        _ => ObjectivePair::PENALTY,
    };
    Individual { chromosome, mapping, objectives, rank: 0, crowding: 0.0 }
}

/// One line of the run log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub evaluations: usize,
    pub rank0_size: usize,
    /// Area dominated by the mapped rank-0 members in (time, 1 - score)
    /// space up to (1, 1).
    pub rank0_hypervolume: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub front: Front,
    pub log: Vec<GenerationLog>,
    pub evaluations: usize,
    /// Final population for the evolutionary search; every sample for random search.
    pub population: Vec<Individual>,
}

/// Non-dominated, deduplicated front of the mapped members of `individuals`.
pub fn front_of(individuals: &[Individual]) -> Front {
    Front::non_dominated(individuals.iter().filter_map(Individual::front_entry).collect())
}

/// Hypervolume of the mapped members, with objectives taken as raw
/// minimisation coordinates `(time, 1 - score)`.
pub fn raw_hypervolume<'a>(individuals: impl IntoIterator<Item = &'a Individual>) -> f64 {
    let points: Vec<[f64; 2]> = individuals
        .into_iter()
        .filter(|i| i.is_mapped())
        .map(|i| [i.objectives.time, 1.0 - i.objectives.score])
        .collect();
    hypervolume(&points)
}

fn log_line(generation: usize, evaluations: usize, population: &[Individual]) -> GenerationLog {
    let rank0: Vec<&Individual> = population.iter().filter(|i| i.rank == 0).collect();
    GenerationLog {
        generation,
        evaluations,
        rank0_size: rank0.len(),
        rank0_hypervolume: raw_hypervolume(rank0.iter().copied()),
    }
}

fn assign_rank_and_crowding(population: &mut [Individual]) {
    let points: Vec<ObjectivePair> = population.iter().map(|i| i.objectives).collect();
    for (rank, front) in fast_nondominated_sort(&points).into_iter().enumerate() {
        let crowding = crowding_distance(&points, &front);
        for (&i, c) in front.iter().zip(crowding) {
            population[i].rank = rank;
            population[i].crowding = c;
        }
    }
}

/// Keeps the best `size` members by rank, then crowding distance, breaking
/// remaining ties by position.
fn environmental_selection(combined: Vec<Individual>, size: usize) -> Vec<Individual> {
    let points: Vec<ObjectivePair> = combined.iter().map(|i| i.objectives).collect();
    let mut chosen: Vec<(usize, usize, f64)> = Vec::with_capacity(size);
    for (rank, front) in fast_nondominated_sort(&points).into_iter().enumerate() {
        if chosen.len() == size {
            break;
        }
        let crowding = crowding_distance(&points, &front);
        let mut members: Vec<(usize, usize, f64)> = front.into_iter().zip(crowding).map(|(i, c)| (i, rank, c)).collect();
        if chosen.len() + members.len() > size {
            members.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
            members.truncate(size - chosen.len());
        }
        chosen.extend(members);
    }
    let mut slots: Vec<Option<Individual>> = combined.into_iter().map(Some).collect();
    chosen
        .into_iter()
        .map(|(i, rank, crowding)| {
            let mut ind = slots[i].take().expect("selected once");
            ind.rank = rank;
            ind.crowding = crowding;
            ind
        })
        .collect()
}

/// Binary tournament on (rank, crowding distance); a full tie is a coin flip.
fn tournament<'p>(population: &'p [Individual], rng: &mut impl Rng) -> &'p Individual {
    let a = &population[rng.random_range(0..population.len())];
    let b = &population[rng.random_range(0..population.len())];
    match a.rank.cmp(&b.rank).then(b.crowding.total_cmp(&a.crowding)) {
        std::cmp::Ordering::Less => a,
        std::cmp::Ordering::Greater => b,
        std::cmp::Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

fn breed(
    population: &[Individual],
    generation: usize,
    pair: usize,
    grammar: &Grammar,
    config: &SearchConfig,
) -> [Chromosome; 2] {
    let g = &config.genome;
    let mut rng = substream(config.seed, &[DOMAIN_VARIATION, generation as u64, pair as u64]);
    let a = tournament(population, &mut rng).chromosome.clone();
    let b = tournament(population, &mut rng).chromosome.clone();
    let (c, d) = if rng.random_bool(config.crossover_prob) { genome::crossover(&a, &b, &mut rng, g) } else { (a, b) };
    [c, d].map(|child| {
        let mut child = genome::mutate(&child, config.mutation_prob, &mut rng, g);
        if rng.random_bool(config.prune_prob) {
            child = genome::prune(&child, grammar, &mut rng, g);
        }
        if rng.random_bool(config.duplicate_prob) {
            child = genome::duplicate(&child, &mut rng, g);
        }
        child
    })
}

/// Multi-objective grammatical evolution.
///
/// Starts from `population_size` random chromosomes and runs full
/// generations of `population_size` offspring while the evaluation budget
/// allows. Returns the final population's non-dominated mapped members.
pub fn run_ge(config: &SearchConfig, grammar: &Grammar, cache: &MutationCache) -> Result<SearchOutcome, ConfigError> {
    config.validate()?;
    let n = config.population_size;
    let mut population: Vec<Individual> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(config.seed, &[DOMAIN_INIT, i as u64]);
            evaluate_chromosome(genome::random_chromosome(&mut rng, &config.genome), grammar, cache, config)
        })
        .collect();
    let mut evaluations = n;
    assign_rank_and_crowding(&mut population);
    let mut log = vec![log_line(0, evaluations, &population)];

    for generation in 1..=config.generations() {
        let offspring: Vec<Individual> = (0..n / 2)
            .into_par_iter()
            .flat_map_iter(|pair| breed(&population, generation, pair, grammar, config))
            .map(|c| evaluate_chromosome(c, grammar, cache, config))
            .collect();
        evaluations += offspring.len();
        population.extend(offspring);
        population = environmental_selection(population, n);
        log.push(log_line(generation, evaluations, &population));
    }

    Ok(SearchOutcome { front: front_of(&population), log, evaluations, population })
}

/// Evaluates `max_evaluations` independent random chromosomes and returns
/// their non-dominated set. The log has one line per `population_size`
/// samples, describing the non-dominated set of all samples so far.
pub fn run_random_search(
    config: &SearchConfig,
    grammar: &Grammar,
    cache: &MutationCache,
) -> Result<SearchOutcome, ConfigError> {
    config.validate()?;
    let mut samples: Vec<Individual> = (0..config.max_evaluations)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(config.seed, &[DOMAIN_RANDOM_SEARCH, i as u64]);
            evaluate_chromosome(genome::random_chromosome(&mut rng, &config.genome), grammar, cache, config)
        })
        .collect();
    let mut log = Vec::new();
    let step = config.population_size;
    for (generation, end) in (step..=samples.len()).step_by(step).enumerate() {
        let prefix = &samples[..end];
        let points: Vec<ObjectivePair> = prefix.iter().map(|i| i.objectives).collect();
        let rank0: Vec<&Individual> = fast_nondominated_sort(&points)
            .first()
            .map(|f| f.iter().map(|&i| &prefix[i]).collect())
            .unwrap_or_default();
        log.push(GenerationLog {
            generation,
            evaluations: end,
            rank0_size: rank0.len(),
            rank0_hypervolume: raw_hypervolume(rank0.iter().copied()),
        });
    }
    assign_rank_and_crowding(&mut samples);
    let evaluations = samples.len();
    Ok(SearchOutcome { front: front_of(&samples), log, evaluations, population: samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{synth_cache, SynthSpec};
    use crate::nsga2::dominates;

    fn small_config(seed: u64) -> SearchConfig {
        SearchConfig { max_evaluations: 400, population_size: 20, seed, ..SearchConfig::default() }
    }

    fn cache() -> MutationCache {
        synth_cache(&SynthSpec { n_mutants: 200, n_tests: 40, kill_density: 0.6, ..SynthSpec::default() }, 1).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        assert_eq!(SearchConfig::default().generations(), 99);
        assert!(SearchConfig { population_size: 7, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { mutation_prob: 1.5, ..SearchConfig::default() }.validate().is_err());
        assert!(SearchConfig { repetitions: 0, ..SearchConfig::default() }.validate().is_err());
    }

    #[test]
    fn budget_and_front_contract() {
        let c = cache();
        let g = Grammar::default_grammar();
        let out = run_ge(&small_config(3), &g, &c).unwrap();
        assert_eq!(out.evaluations, 400);
        assert_eq!(out.log.last().unwrap().evaluations, 400);
        assert_eq!(out.population.len(), 20);
        assert!(!out.front.is_empty());
        let pts = out.front.objectives();
        for a in &pts {
            assert!(pts.iter().all(|b| !dominates(a, b)));
        }
        assert!(out.front.entries().iter().all(|e| e.chromosome.is_some()));
    }

    #[test]
    fn elitism_keeps_hypervolume() {
        let c = cache();
        let g = Grammar::default_grammar();
        let out = run_ge(&small_config(5), &g, &c).unwrap();
        let first = out.log.first().unwrap().rank0_hypervolume;
        let last = out.log.last().unwrap().rank0_hypervolume;
        assert!(last >= first, "{first} -> {last}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let c = cache();
        let g = Grammar::default_grammar();
        let cfg = small_config(11);
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run_ge(&cfg, &g, &c).unwrap().front)
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn random_search_front_matches_samples() {
        let c = cache();
        let g = Grammar::default_grammar();
        let cfg = small_config(2);
        let out = run_random_search(&cfg, &g, &c).unwrap();
        assert_eq!(out.population.len(), 400);
        assert_eq!(out.log.len(), 20);
        let mapped: Vec<ObjectivePair> = out.population.iter().filter(|i| i.is_mapped()).map(|i| i.objectives).collect();
        for e in out.front.entries() {
            assert!(mapped.iter().all(|m| !dominates(m, &e.objectives)));
        }
        for m in &mapped {
            assert!(out.front.objectives().iter().any(|f| f == m || dominates(f, m)));
        }
        assert_eq!(run_random_search(&cfg, &g, &c).unwrap().front, out.front);
    }

    #[test]
    fn failed_mappings_are_penalised_and_excluded() {
        let c = cache();
        let g = Grammar::default_grammar();
        // a chromosome of ones keeps <mutantOps> recursing until the wrap budget runs out
        let ind = evaluate_chromosome(Chromosome::new(vec![1; 15]), &g, &c, &SearchConfig::default());
        assert!(!ind.is_mapped());
        assert_eq!(ind.objectives, ObjectivePair::PENALTY);
        assert!(front_of(&[ind]).is_empty());
    }
}
