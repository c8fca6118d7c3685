//! Cached mutation-analysis data.
//!
//! A [`MutationCache`] records every mutation operator, every mutant it
//! generates (with its execution cost and the set of tests that kill it) and
//! the prioritised test suite. Strategies never run a mutation tool; they read
//! costs and kills from the cache.
//!
//! Records are kept sorted by id, so record indices double as the canonical
//! ascending-id order used for tie-breaking throughout the crate.

mod io;
mod synth;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use io::{load_cache, load_kill_matrix_csv, parse_cache_json, parse_kill_matrix_csv, save_cache, to_cache_json, write_kill_matrix_csv};
pub use synth::{perturb_killers, synth_cache, SynthSpec};

/// Errors raised while building, reading or writing a cache.
#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("malformed cache file: {0}")]
    Parse(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("mutant `{mutant}` references unknown operator `{operator}`")]
    UnknownOperator { mutant: String, operator: String },
    #[error("mutant `{mutant}` lists unknown killer test `{test}`")]
    UnknownTest { mutant: String, test: String },
    #[error("mutant `{mutant}` has non-positive exec_cost {value}")]
    NonPositiveExecCost { mutant: String, value: f64 },
    #[error("operator `{operator}` has invalid generation_cost {value}")]
    InvalidGenerationCost { operator: String, value: f64 },
    #[error("test priority ranks must be a permutation of 0..{count}; `{test}` has rank {rank}")]
    InvalidRank { test: String, rank: u32, count: usize },
    #[error("cache has no {0}")]
    Empty(&'static str),
    #[error("invalid synthetic cache spec: {0}")]
    InvalidSynthSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRecord {
    pub id: String,
    /// Abstract cost units spent generating this operator's mutants.
    #[serde(default)]
    pub generation_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantRecord {
    pub id: String,
    pub operator_id: String,
    /// Abstract cost units to run the suite against this mutant.
    pub exec_cost: f64,
    /// Tests that kill this mutant. Empty means the suite never kills it.
    #[serde(default)]
    pub killers: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub id: String,
    /// Position in the prioritised suite; 0 runs first.
    pub priority_rank: u32,
}

/// Validated, immutable mutation-analysis data plus lookup indices.
#[derive(Debug, Clone)]
pub struct MutationCache {
    operators: Vec<OperatorRecord>,
    mutants: Vec<MutantRecord>,
    tests: Vec<TestRecord>,
    total_cost: f64,
    killable_count: usize,
    mutant_operator: Vec<usize>,
    operator_mutants: Vec<Vec<usize>>,
    // killer test indices of each mutant, ordered by priority rank
    mutant_killers: Vec<Vec<usize>>,
    test_kills: Vec<Vec<usize>>,
}

impl PartialEq for MutationCache {
    fn eq(&self, other: &Self) -> bool {
        self.operators == other.operators && self.mutants == other.mutants && self.tests == other.tests
    }
}

fn check_unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<(), CacheError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CacheError::DuplicateId { kind, id: id.to_string() });
        }
    }
    Ok(())
}

impl MutationCache {
    /// Validates the records and computes derived totals and indices.
    pub fn new(
        mut operators: Vec<OperatorRecord>,
        mut tests: Vec<TestRecord>,
        mut mutants: Vec<MutantRecord>,
    ) -> Result<Self, CacheError> {
        if operators.is_empty() {
            return Err(CacheError::Empty("operators"));
        }
        if mutants.is_empty() {
            return Err(CacheError::Empty("mutants"));
        }
        if tests.is_empty() {
            return Err(CacheError::Empty("tests"));
        }
        check_unique("operator", operators.iter().map(|o| o.id.as_str()))?;
        check_unique("test", tests.iter().map(|t| t.id.as_str()))?;
        check_unique("mutant", mutants.iter().map(|m| m.id.as_str()))?;
        operators.sort_by(|a, b| a.id.cmp(&b.id));
        tests.sort_by(|a, b| a.id.cmp(&b.id));
        mutants.sort_by(|a, b| a.id.cmp(&b.id));

        for op in &operators {
            if !op.generation_cost.is_finite() || op.generation_cost < 0.0 {
                return Err(CacheError::InvalidGenerationCost {
                    operator: op.id.clone(),
                    value: op.generation_cost,
                });
            }
        }
        let mut rank_seen = vec![false; tests.len()];
        for t in &tests {
            let slot = rank_seen.get_mut(t.priority_rank as usize);
            match slot {
                Some(seen) if !*seen => *seen = true,
                _ => {
                    return Err(CacheError::InvalidRank {
                        test: t.id.clone(),
                        rank: t.priority_rank,
                        count: tests.len(),
                    })
                }
            }
        }

        let op_index: HashMap<&str, usize> =
            operators.iter().enumerate().map(|(i, o)| (o.id.as_str(), i)).collect();
        let test_index: HashMap<&str, usize> =
            tests.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();

        let mut mutant_operator = Vec::with_capacity(mutants.len());
        let mut operator_mutants = vec![Vec::new(); operators.len()];
        let mut mutant_killers = Vec::with_capacity(mutants.len());
        let mut test_kills = vec![Vec::new(); tests.len()];
        for (mi, m) in mutants.iter().enumerate() {
            if !(m.exec_cost.is_finite() && m.exec_cost > 0.0) {
                return Err(CacheError::NonPositiveExecCost {
                    mutant: m.id.clone(),
                    value: m.exec_cost,
                });
            }
            let oi = *op_index.get(m.operator_id.as_str()).ok_or_else(|| CacheError::UnknownOperator {
                mutant: m.id.clone(),
                operator: m.operator_id.clone(),
            })?;
            mutant_operator.push(oi);
            operator_mutants[oi].push(mi);
            let mut killers = Vec::with_capacity(m.killers.len());
            for k in &m.killers {
                let ti = *test_index.get(k.as_str()).ok_or_else(|| CacheError::UnknownTest {
                    mutant: m.id.clone(),
                    test: k.clone(),
                })?;
                killers.push(ti);
                test_kills[ti].push(mi);
            }
            killers.sort_by_key(|&ti| tests[ti].priority_rank);
            mutant_killers.push(killers);
        }

        let total_cost = operators.iter().map(|o| o.generation_cost).sum::<f64>()
            + mutants.iter().map(|m| m.exec_cost).sum::<f64>();
        let killable_count = mutants.iter().filter(|m| !m.killers.is_empty()).count();

        Ok(Self {
            operators,
            mutants,
            tests,
            total_cost,
            killable_count,
            mutant_operator,
            operator_mutants,
            mutant_killers,
            test_kills,
        })
    }

    pub fn operators(&self) -> &[OperatorRecord] {
        &self.operators
    }

    pub fn mutants(&self) -> &[MutantRecord] {
        &self.mutants
    }

    pub fn tests(&self) -> &[TestRecord] {
        &self.tests
    }

    /// Sum of every operator's generation cost and every mutant's execution cost.
    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    /// Number of mutants killed by at least one test.
    pub fn killable_count(&self) -> usize {
        self.killable_count
    }

    /// Mutation score of the full suite over all mutants, with no mutant
    /// treated as equivalent.
    pub fn global_score(&self) -> f64 {
        self.killable_count as f64 / self.mutants.len() as f64
    }

    /// `(operator_id, mutant_count)` sorted by count descending, ties by id.
    pub fn operator_yields(&self) -> Vec<(String, usize)> {
        let mut yields: Vec<(String, usize)> = self
            .operators
            .iter()
            .zip(&self.operator_mutants)
            .map(|(op, ms)| (op.id.clone(), ms.len()))
            .collect();
        yields.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        yields
    }

    /// Operator indices ordered like [`operator_yields`](Self::operator_yields).
    pub fn operator_indices_by_yield(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.operators.len()).collect();
        // records are id-sorted, so a stable sort on count keeps the id tie-break
        idx.sort_by_key(|&i| std::cmp::Reverse(self.operator_mutants[i].len()));
        idx
    }

    pub fn operator_index(&self, id: &str) -> Option<usize> {
        self.operators.binary_search_by(|o| o.id.as_str().cmp(id)).ok()
    }

    pub fn mutant_index(&self, id: &str) -> Option<usize> {
        self.mutants.binary_search_by(|m| m.id.as_str().cmp(id)).ok()
    }

    pub fn test_index(&self, id: &str) -> Option<usize> {
        self.tests.binary_search_by(|t| t.id.as_str().cmp(id)).ok()
    }

    /// Operator index of mutant `mutant`.
    pub fn mutant_operator(&self, mutant: usize) -> usize {
        self.mutant_operator[mutant]
    }

    /// Mutant indices generated by operator `operator`, ascending.
    pub fn operator_mutants(&self, operator: usize) -> &[usize] {
        &self.operator_mutants[operator]
    }

    /// Killer test indices of `mutant`, highest priority first.
    pub fn mutant_killers(&self, mutant: usize) -> &[usize] {
        &self.mutant_killers[mutant]
    }

    /// Mutant indices killed by test `test`, ascending.
    pub fn test_kills(&self, test: usize) -> &[usize] {
        &self.test_kills[test]
    }

    pub fn exec_cost(&self, mutant: usize) -> f64 {
        self.mutants[mutant].exec_cost
    }

    pub fn generation_cost(&self, operator: usize) -> f64 {
        self.operators[operator].generation_cost
    }

    /// Consumes the cache, returning its records.
    pub fn into_records(self) -> (Vec<OperatorRecord>, Vec<TestRecord>, Vec<MutantRecord>) {
        (self.operators, self.tests, self.mutants)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn op(id: &str, cost: f64) -> OperatorRecord {
        OperatorRecord { id: id.into(), generation_cost: cost }
    }

    pub(crate) fn test(id: &str, rank: u32) -> TestRecord {
        TestRecord { id: id.into(), priority_rank: rank }
    }

    pub(crate) fn mutant(id: &str, op: &str, cost: f64, killers: &[&str]) -> MutantRecord {
        MutantRecord {
            id: id.into(),
            operator_id: op.into(),
            exec_cost: cost,
            killers: killers.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn small() -> MutationCache {
        MutationCache::new(
            vec![op("A", 1.0), op("B", 2.0)],
            vec![test("t1", 0), test("t2", 2), test("t3", 1)],
            vec![
                mutant("m1", "A", 3.0, &["t1", "t2"]),
                mutant("m2", "A", 4.0, &[]),
                mutant("m3", "B", 5.0, &["t3"]),
                mutant("m4", "B", 6.0, &["t2"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn derived_totals() {
        let c = small();
        assert_eq!(c.total_cost(), 1.0 + 2.0 + 3.0 + 4.0 + 5.0 + 6.0);
        assert_eq!(c.killable_count(), 3);
        assert_eq!(c.global_score(), 0.75);
    }

    #[test]
    fn killers_are_rank_ordered() {
        let c = small();
        let m1 = c.mutant_index("m1").unwrap();
        let ids: Vec<_> = c.mutant_killers(m1).iter().map(|&t| c.tests()[t].id.as_str()).collect();
        assert_eq!(ids, ["t1", "t2"]);
    }

    #[test]
    fn yields_tie_break_by_id() {
        let mut mutants = Vec::new();
        for (op_id, n) in [("A", 5), ("B", 3), ("C", 5)] {
            for i in 0..n {
                mutants.push(mutant(&format!("{op_id}{i}"), op_id, 1.0, &[]));
            }
        }
        let c = MutationCache::new(vec![op("C", 0.0), op("B", 0.0), op("A", 0.0)], vec![test("t", 0)], mutants)
            .unwrap();
        assert_eq!(c.operator_yields(), vec![("A".into(), 5), ("C".into(), 5), ("B".into(), 3)]);
        let by_yield: Vec<_> = c.operator_indices_by_yield().iter().map(|&i| c.operators()[i].id.clone()).collect();
        assert_eq!(by_yield, ["A", "C", "B"]);
    }

    #[test]
    fn single_operator_yield() {
        let c = MutationCache::new(
            vec![op("A", 0.0)],
            vec![test("t", 0)],
            vec![mutant("m1", "A", 1.0, &["t"]), mutant("m2", "A", 1.0, &["t"])],
        )
        .unwrap();
        assert_eq!(c.operator_yields(), vec![("A".into(), 2)]);
        assert_eq!(c.global_score(), 1.0);
    }

    #[test]
    fn rejects_unknown_killer() {
        let err = MutationCache::new(
            vec![op("A", 0.0)],
            vec![test("t1", 0)],
            vec![mutant("m1", "A", 1.0, &["tX"])],
        )
        .unwrap_err();
        match err {
            CacheError::UnknownTest { mutant, test } => assert_eq!((mutant.as_str(), test.as_str()), ("m1", "tX")),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_bad_records() {
        let dup = MutationCache::new(
            vec![op("A", 0.0), op("A", 1.0)],
            vec![test("t1", 0)],
            vec![mutant("m1", "A", 1.0, &[])],
        );
        assert!(matches!(dup, Err(CacheError::DuplicateId { kind: "operator", .. })));

        let cost = MutationCache::new(vec![op("A", 0.0)], vec![test("t1", 0)], vec![mutant("m1", "A", 0.0, &[])]);
        assert!(matches!(cost, Err(CacheError::NonPositiveExecCost { .. })));

        let dangling = MutationCache::new(vec![op("A", 0.0)], vec![test("t1", 0)], vec![mutant("m1", "Z", 1.0, &[])]);
        assert!(matches!(dangling, Err(CacheError::UnknownOperator { .. })));

        let ranks = MutationCache::new(
            vec![op("A", 0.0)],
            vec![test("t1", 0), test("t2", 0)],
            vec![mutant("m1", "A", 1.0, &[])],
        );
        assert!(matches!(ranks, Err(CacheError::InvalidRank { .. })));

        let gen = MutationCache::new(vec![op("A", -1.0)], vec![test("t1", 0)], vec![mutant("m1", "A", 1.0, &[])]);
        assert!(matches!(gen, Err(CacheError::InvalidGenerationCost { .. })));

        let empty = MutationCache::new(vec![op("A", 0.0)], vec![test("t1", 0)], vec![]);
        assert!(matches!(empty, Err(CacheError::Empty("mutants"))));
    }
}
