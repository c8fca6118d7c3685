//! The TIME and SCORE fitness objectives.
//!
//! TIME is the cost of a reduction relative to generating and executing
//! every mutant. SCORE is the mutation score over all of `M` reached by the
//! tests that kill `M'`, relative to the score of the full suite.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cache::MutationCache;
use crate::rng::StreamRng;
use crate::strategy::{ReductionRun, Reducer};

/// Objective values of one strategy: `time` is minimised, `score` maximised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub time: f64,
    pub score: f64,
}

impl ObjectivePair {
    pub const fn new(time: f64, score: f64) -> Self {
        Self { time, score }
    }

    /// Worst feasible corner, given to chromosomes that fail to map.
    pub const PENALTY: Self = Self::new(1.0, 0.0);
}

/// Tests that kill the reduced mutants: for each killable mutant of `M'`, the
/// killer with the best priority rank. Test indices, ascending.
pub fn select_tests(reduced_mutants: &[usize], cache: &MutationCache) -> Vec<usize> {
    let mut selected = vec![false; cache.tests().len()];
    for &m in reduced_mutants {
        if let Some(&t) = cache.mutant_killers(m).first() {
            selected[t] = true;
        }
    }
    selected.iter().enumerate().filter(|(_, &s)| s).map(|(t, _)| t).collect()
}

/// `MS(T', M)`: fraction of all mutants killed by some test in `tests`.
pub fn reduced_suite_score(tests: &[usize], cache: &MutationCache) -> f64 {
    let mut killed = vec![false; cache.mutants().len()];
    for &t in tests {
        for &m in cache.test_kills(t) {
            killed[m] = true;
        }
    }
    killed.iter().filter(|&&k| k).count() as f64 / cache.mutants().len() as f64
}

/// Relative score `reduced / global`, defined as 0 when the global score is 0.
pub fn score_ratio(reduced: f64, global: f64) -> f64 {
    if global > 0.0 {
        reduced / global
    } else {
        0.0
    }
}

pub fn time_objective(run: &ReductionRun, cache: &MutationCache) -> f64 {
    run.strategy_cost / cache.total_cost()
}

pub fn score_objective(run: &ReductionRun, cache: &MutationCache) -> f64 {
    let tests = select_tests(&run.reduced_mutants, cache);
    score_ratio(reduced_suite_score(&tests, cache), cache.global_score())
}

/// Runs `reducer` `repetitions` times and aggregates the objectives.
///
/// Repetition `i` uses a fresh generator seeded with the `i`-th `u64` drawn
/// from `rng`. TIME is the ratio of summed costs; SCORE is the mean of the
/// per-repetition score ratios.
pub fn evaluate<R: Reducer + ?Sized>(
    reducer: &R,
    cache: &MutationCache,
    repetitions: usize,
    rng: &mut (impl Rng + ?Sized),
) -> ObjectivePair {
    let repetitions = repetitions.max(1);
    let seeds: Vec<u64> = (0..repetitions).map(|_| rng.random()).collect();
    let mut cost = 0.0;
    let mut reduced_score = 0.0;
    for seed in seeds {
        let run = reducer.reduce(cache, &mut StreamRng::seed_from_u64(seed));
        cost += run.strategy_cost;
        reduced_score += reduced_suite_score(&select_tests(&run.reduced_mutants, cache), cache);
    }
    let n = repetitions as f64;
    ObjectivePair {
        time: cost / (n * cache.total_cost()),
        score: score_ratio(reduced_score / n, cache.global_score()).min(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cache::{synth_cache, MutantRecord, OperatorRecord, SynthSpec, TestRecord};
    use crate::rng::substream;
    use crate::strategy::{Amount, Operation, Strategy};

    fn ranked_cache() -> MutationCache {
        let tests = (1..=5).map(|i| TestRecord { id: format!("t{i}"), priority_rank: i - 1 }).collect();
        let mutant = |id: &str, killers: &[&str]| MutantRecord {
            id: id.into(),
            operator_id: "A".into(),
            exec_cost: 1.0,
            killers: killers.iter().map(|s| s.to_string()).collect(),
        };
        MutationCache::new(
            vec![OperatorRecord { id: "A".into(), generation_cost: 0.0 }],
            tests,
            vec![mutant("m1", &["t2", "t5"]), mutant("m2", &["t5"]), mutant("m3", &[]), mutant("m4", &["t1"])],
        )
        .unwrap()
    }

    #[test]
    fn selects_highest_priority_killer() {
        let c = ranked_cache();
        let tests = select_tests(&[c.mutant_index("m1").unwrap()], &c);
        assert_eq!(tests, vec![c.test_index("t2").unwrap()]);
        assert!(select_tests(&[], &c).is_empty());
        // unkillable mutants add nothing
        assert!(select_tests(&[c.mutant_index("m3").unwrap()], &c).is_empty());
    }

    #[test]
    fn worked_score_ratio() {
        assert_eq!(score_ratio(0.5, 0.8), 0.625);
        assert_eq!(score_ratio(0.5, 0.0), 0.0);
    }

    #[test]
    fn time_ratio() {
        let c = ranked_cache();
        let half = ReductionRun::from_selection(&c, vec![], vec![0, 1]);
        assert_eq!(time_objective(&half, &c), 0.5);
        let empty = ReductionRun::from_selection(&c, vec![], vec![]);
        assert_eq!(time_objective(&empty, &c), 0.0);
        assert_eq!(score_objective(&empty, &c), 0.0);
    }

    #[test]
    fn full_reduction_scores_one() {
        let c = synth_cache(&SynthSpec::default(), 3).unwrap();
        let run = Strategy::identity().execute(&c, &mut substream(0, &[]));
        assert!((time_objective(&run, &c) - 1.0).abs() < 1e-12);
        assert_eq!(score_objective(&run, &c), 1.0);
        let pair = evaluate(&Strategy::identity(), &c, 5, &mut substream(1, &[]));
        assert!((pair.time - 1.0).abs() < 1e-12);
        assert_eq!(pair.score, 1.0);
    }

    #[test]
    fn deterministic_strategy_equals_single_run() {
        let c = synth_cache(&SynthSpec::default(), 4).unwrap();
        let s = Strategy::new(vec![
            Operation::ExecuteOperators(Amount::Percent(100)),
            Operation::GroupMutantsByOperator,
            Operation::OrderGroups(crate::strategy::SortOrder::Descending),
            Operation::TakeGroups {
                action: crate::strategy::GroupAction::Discard,
                end: crate::strategy::GroupEnd::First,
                count: 2,
            },
        ]);
        assert!(!s.is_stochastic());
        let run = s.execute(&c, &mut substream(0, &[]));
        let pair = evaluate(&s, &c, 5, &mut substream(8, &[]));
        assert!((pair.time - time_objective(&run, &c)).abs() < 1e-12);
        assert!((pair.score - score_objective(&run, &c)).abs() < 1e-12);
    }

    #[test]
    fn repetitions_aggregate_independently() {
        let c = synth_cache(&SynthSpec { n_mutants: 300, ..SynthSpec::default() }, 5).unwrap();
        let s = Strategy::parse("Execute Operators 100% → Retain Mutants random 50%").unwrap();
        let pair = evaluate(&s, &c, 5, &mut substream(21, &[]));

        // re-derive the five substreams and aggregate by hand
        let mut seeder = substream(21, &[]);
        let seeds: Vec<u64> = (0..5).map(|_| seeder.random()).collect();
        let runs: Vec<ReductionRun> =
            seeds.iter().map(|&sd| s.execute(&c, &mut StreamRng::seed_from_u64(sd))).collect();
        let cost: f64 = runs.iter().map(|r| r.strategy_cost).sum();
        let scores: Vec<f64> = runs.iter().map(|r| score_objective(r, &c)).collect();
        let mean_score = scores.iter().sum::<f64>() / 5.0;
        assert!((pair.time - cost / (5.0 * c.total_cost())).abs() < 1e-12);
        assert!((pair.score - mean_score).abs() < 1e-12);
        // each repetition keeps exactly half of the mutants
        assert!(runs.iter().all(|r| r.reduced_mutants.len() == 150));
        // the repetitions genuinely differ
        assert!(runs.windows(2).any(|w| w[0].reduced_mutants != w[1].reduced_mutants));
    }
}
