use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::io::round_sig9;
use super::{CacheError, MutantRecord, MutationCache, OperatorRecord, TestRecord};

/// Parameters of a synthetic mutation cache.
///
/// The generator follows a fixed, seed-stable law:
///
/// * operator `k` of a random permutation receives weight `cost_skew^-k`;
///   every operator gets one mutant (while mutants last) and the remainder is
///   apportioned by largest remainder over the weights, so `cost_skew = 1`
///   gives near-equal yields and larger values concentrate mutants in a few
///   operators;
/// * each operator draws a base cost from `U(0.5, 2)`; its mutants cost
///   `base * LogNormal(0, 0.5)` and its generation cost is `0.1 * base * yield`;
/// * a mutant is killable with probability `kill_density`; a killable mutant
///   copies the killer set of an earlier killable sibling (same operator) with
///   probability `redundancy`, otherwise it draws 1 to 3 distinct tests;
/// * test priority ranks are a random permutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_operators: usize,
    pub n_mutants: usize,
    pub n_tests: usize,
    pub kill_density: f64,
    pub cost_skew: f64,
    pub redundancy: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { n_operators: 7, n_mutants: 100, n_tests: 50, kill_density: 0.3, cost_skew: 2.0, redundancy: 0.5 }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), CacheError> {
        let bad = |msg: &str| Err(CacheError::InvalidSynthSpec(msg.to_string()));
        if self.n_operators == 0 || self.n_mutants == 0 || self.n_tests == 0 {
            return bad("n_operators, n_mutants and n_tests must be >= 1");
        }
        if !(self.kill_density > 0.0 && self.kill_density <= 1.0) {
            return bad("kill_density must lie in (0, 1]");
        }
        if !(self.cost_skew >= 1.0 && self.cost_skew.is_finite()) {
            return bad("cost_skew must be a finite value >= 1");
        }
        if !(0.0..=1.0).contains(&self.redundancy) {
            return bad("redundancy must lie in [0, 1]");
        }
        Ok(())
    }
}

fn width(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let n = weights.len();
    let base = usize::from(total >= n);
    let mut counts = vec![base; n];
    let rest = total - base * n;
    let wsum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| w / wsum * rest as f64).collect();
    let mut assigned = 0;
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c += q.floor() as usize;
        assigned += q.floor() as usize;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(rest - assigned) {
        counts[i] += 1;
    }
    counts
}

fn draw_killers(rng: &mut impl Rng, test_ids: &[String]) -> BTreeSet<String> {
    let k = rng.random_range(1..=3usize).min(test_ids.len());
    index::sample(rng, test_ids.len(), k).into_iter().map(|i| test_ids[i].clone()).collect()
}

/// Generates a cache that is a pure function of `(spec, seed)`.
pub fn synth_cache(spec: &SynthSpec, seed: u64) -> Result<MutationCache, CacheError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let op_ids: Vec<String> = (0..spec.n_operators).map(|i| format!("op{i:0w$}", w = width(spec.n_operators))).collect();
    let test_ids: Vec<String> = (0..spec.n_tests).map(|i| format!("t{i:0w$}", w = width(spec.n_tests))).collect();

    let mut weights: Vec<f64> = (0..spec.n_operators).map(|k| spec.cost_skew.powi(-(k as i32))).collect();
    weights.shuffle(&mut rng);
    let yields = apportion(&weights, spec.n_mutants);
    let base_cost: Vec<f64> = (0..spec.n_operators).map(|_| rng.random_range(0.5..2.0)).collect();

    let mut owner: Vec<usize> = yields.iter().enumerate().flat_map(|(op, &n)| std::iter::repeat_n(op, n)).collect();
    owner.shuffle(&mut rng);

    let noise = LogNormal::new(0.0, 0.5).expect("valid lognormal");
    let mut killable_siblings: Vec<Vec<BTreeSet<String>>> = vec![Vec::new(); spec.n_operators];
    let mut mutants = Vec::with_capacity(spec.n_mutants);
    for (i, &op) in owner.iter().enumerate() {
        let exec_cost = round_sig9(base_cost[op] * noise.sample(&mut rng)).max(1e-6);
        let killers = if rng.random_bool(spec.kill_density) {
            let siblings = &killable_siblings[op];
            let set = if !siblings.is_empty() && rng.random_bool(spec.redundancy) {
                siblings[rng.random_range(0..siblings.len())].clone()
            } else {
                draw_killers(&mut rng, &test_ids)
            };
            killable_siblings[op].push(set.clone());
            set
        } else {
            BTreeSet::new()
        };
        mutants.push(MutantRecord {
            id: format!("m{i:0w$}", w = width(spec.n_mutants)),
            operator_id: op_ids[op].clone(),
            exec_cost,
            killers,
        });
    }

    let operators = op_ids
        .iter()
        .enumerate()
        .map(|(k, id)| OperatorRecord { id: id.clone(), generation_cost: round_sig9(0.1 * base_cost[k] * yields[k] as f64) })
        .collect();
    let mut ranks: Vec<u32> = (0..spec.n_tests as u32).collect();
    ranks.shuffle(&mut rng);
    let tests = test_ids.into_iter().zip(ranks).map(|(id, priority_rank)| TestRecord { id, priority_rank }).collect();

    MutationCache::new(operators, tests, mutants)
}

/// Returns a clone of `cache` where `round(fraction * |M|)` mutants, chosen
/// uniformly, have their killer sets re-drawn. A re-drawn mutant is killable
/// with probability equal to the cache's global score.
pub fn perturb_killers(cache: &MutationCache, fraction: f64, seed: u64) -> Result<MutationCache, CacheError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CacheError::InvalidSynthSpec("perturbation fraction must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (operators, tests, mut mutants) = cache.clone().into_records();
    let test_ids: Vec<String> = tests.iter().map(|t| t.id.clone()).collect();
    let n = (fraction * mutants.len() as f64).round() as usize;
    let p_kill = cache.global_score();
    for i in index::sample(&mut rng, mutants.len(), n).into_vec() {
        mutants[i].killers =
            if rng.random_bool(p_kill) { draw_killers(&mut rng, &test_ids) } else { BTreeSet::new() };
    }
    MutationCache::new(operators, tests, mutants)
}
