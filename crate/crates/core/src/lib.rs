//! Search-based mutant reduction.
//!
//! A reduction strategy is a short program over a mutation cache (operators,
//! mutants, tests and who kills whom). Strategies are drawn from a BNF
//! grammar and evolved by grammatical evolution under NSGA-II, minimising the
//! relative cost of mutation analysis while keeping the mutation score of the
//! selected tests close to the full score.
//!
//! ```
//! use mutreduce::{synth_cache, run_ge, Grammar, SearchConfig, SynthSpec};
//!
//! let cache = synth_cache(&SynthSpec::default(), 7).unwrap();
//! let config = SearchConfig { max_evaluations: 200, population_size: 20, seed: 1, ..SearchConfig::default() };
//! let outcome = run_ge(&config, &Grammar::default_grammar(), &cache).unwrap();
//! assert!(!outcome.front.is_empty());
//! ```

pub mod baselines;
pub mod cache;
pub mod experiment;
pub mod front;
pub mod genome;
pub mod grammar;
pub mod indicators;
pub mod nsga2;
pub mod objectives;
pub mod rng;
pub mod search;
pub mod stats;
pub mod strategy;

pub use baselines::{baseline_front, sweep_front, BaselineKind, BaselineSpec};
pub use cache::{load_cache, save_cache, synth_cache, CacheError, MutationCache, SynthSpec};
pub use experiment::{compare_experiment, MethodRuns, StatReport};
pub use front::{Front, FrontEntry};
pub use genome::{map, Chromosome, GenomeConfig, MappingStatus};
pub use grammar::{Grammar, GrammarError};
pub use indicators::{hypervolume, igd, reference_front, NormalizationBounds, NormalizedFront};
pub use objectives::{evaluate, ObjectivePair};
pub use search::{run_ge, run_random_search, SearchConfig, SearchOutcome};
pub use stats::{a12, kruskal_wallis, EffectSize, KruskalWallis, Magnitude};
pub use strategy::{ReductionRun, Reducer, Strategy};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/caches.md")]
    struct Caches;
    #[doc = include_str!("../../../book/src/grammar.md")]
    struct GrammarChapter;
    #[doc = include_str!("../../../book/src/strategies.md")]
    struct Strategies;
    #[doc = include_str!("../../../book/src/search.md")]
    struct Search;
    #[doc = include_str!("../../../book/src/baselines.md")]
    struct Baselines;
    #[doc = include_str!("../../../book/src/analysis.md")]
    struct Analysis;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
