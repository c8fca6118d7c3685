//! Executable mutant reduction strategies.
//!
//! A strategy is the sequence of operations obtained by walking the mapped
//! derivation tree depth first. Execution threads a working state through the
//! operations:
//!
//! * an operator pool, initially every operator of the cache;
//! * a mutant pool, filled by `Execute Operators`, which is either flat or
//!   split into one group per operator after `Group Mutants by Operator`.
//!
//! Operator selections act on operators not yet executed. Mutant selections
//! act on each group separately (a flat pool is a single group) and do nothing
//! before some operator has been executed. The final mutant pool is the
//! reduced set `M'`.
//!
//! Amounts are either a percentage, retaining `round(p * s)` of a pool of size
//! `s` (halves round away from zero), or a quantity `q`, retaining `min(q, s)`.

use std::fmt;

use rand::seq::index;
use rand::Rng;

use crate::cache::MutationCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Amount {
    /// Whole percent, 0 to 100.
    Percent(u8),
    Quantity(u32),
}

impl Amount {
    /// Elements selected from a pool of `pool` elements.
    pub fn count(self, pool: usize) -> usize {
        match self {
            Amount::Percent(p) => (usize::from(p.min(100)) * pool + 50) / 100,
            Amount::Quantity(q) => (q as usize).min(pool),
        }
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::Percent(p) => write!(f, "{p}%"),
            Amount::Quantity(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SortOrder {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupEnd {
    First,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupAction {
    Retain,
    Discard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    RetainOperators(Amount),
    DiscardOperators(Amount),
    ExecuteOperators(Amount),
    RetainMutants(Amount),
    DiscardMutants(Amount),
    GroupMutantsByOperator,
    /// Sorts groups by size; equal sizes keep ascending operator id order.
    OrderGroups(SortOrder),
    TakeGroups { action: GroupAction, end: GroupEnd, count: u32 },
    /// Keeps a random sample of each group.
    SampleMutants(Amount),
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::RetainOperators(a) => write!(f, "Retain Operators random {a}"),
            Operation::DiscardOperators(a) => write!(f, "Discard Operators random {a}"),
            Operation::ExecuteOperators(a) => write!(f, "Execute Operators {a}"),
            Operation::RetainMutants(a) => write!(f, "Retain Mutants random {a}"),
            Operation::DiscardMutants(a) => write!(f, "Discard Mutants random {a}"),
            Operation::GroupMutantsByOperator => write!(f, "Group Mutants by Operator"),
            Operation::OrderGroups(SortOrder::Ascending) => write!(f, "Order Groups by Size ascending"),
            Operation::OrderGroups(SortOrder::Descending) => write!(f, "Order Groups by Size descending"),
            Operation::TakeGroups { action, end, count } => {
                let action = match action {
                    GroupAction::Retain => "Retain",
                    GroupAction::Discard => "Discard",
                };
                let end = match end {
                    GroupEnd::First => "First",
                    GroupEnd::Last => "Last",
                };
                write!(f, "{action} {end} {count} Groups")
            }
            Operation::SampleMutants(a) => write!(f, "Sample Mutants random {a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse strategy at word {position}: {message}")]
pub struct StrategyParseError {
    pub position: usize,
    pub message: String,
}

/// Separator between operations in rendered text.
pub const STEP_SEPARATOR: &str = " → ";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Strategy {
    pub operations: Vec<Operation>,
}

struct Words<'a> {
    words: Vec<&'a str>,
    pos: usize,
}

impl<'a> Words<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, StrategyParseError> {
        Err(StrategyParseError { position: self.pos, message: message.into() })
    }

    fn next(&mut self) -> Option<&'a str> {
        let w = self.words.get(self.pos).copied();
        self.pos += usize::from(w.is_some());
        w
    }

    fn expect(&mut self, word: &str) -> Result<(), StrategyParseError> {
        match self.next() {
            Some(w) if w == word => Ok(()),
            Some(w) => {
                self.pos -= 1;
                self.err(format!("expected `{word}`, found `{w}`"))
            }
            None => self.err(format!("expected `{word}`, found end of text")),
        }
    }

    fn amount(&mut self) -> Result<Amount, StrategyParseError> {
        let Some(w) = self.next() else { return self.err("expected an amount") };
        if let Some(p) = w.strip_suffix('%') {
            match p.parse::<u8>() {
                Ok(p) if p <= 100 => Ok(Amount::Percent(p)),
                _ => self.err(format!("invalid percentage `{w}`")),
            }
        } else {
            w.parse().map(Amount::Quantity).or_else(|_| self.err(format!("invalid amount `{w}`")))
        }
    }

    fn operation(&mut self) -> Result<Operation, StrategyParseError> {
        let Some(head) = self.next() else { return self.err("expected an operation") };
        let op = match head {
            "Retain" | "Discard" => {
                let retain = head == "Retain";
                match self.next() {
                    Some("Operators") => {
                        self.expect("random")?;
                        let a = self.amount()?;
                        if retain { Operation::RetainOperators(a) } else { Operation::DiscardOperators(a) }
                    }
                    Some("Mutants") => {
                        self.expect("random")?;
                        let a = self.amount()?;
                        if retain { Operation::RetainMutants(a) } else { Operation::DiscardMutants(a) }
                    }
                    Some(end @ ("First" | "Last")) => {
                        let end = if end == "First" { GroupEnd::First } else { GroupEnd::Last };
                        let Amount::Quantity(count) = self.amount()? else {
                            return self.err("group count must be a quantity");
                        };
                        self.expect("Groups")?;
                        let action = if retain { GroupAction::Retain } else { GroupAction::Discard };
                        Operation::TakeGroups { action, end, count }
                    }
                    _ => return self.err(format!("unknown operation after `{head}`")),
                }
            }
            "Execute" => {
                self.expect("Operators")?;
                Operation::ExecuteOperators(self.amount()?)
            }
            "Group" => {
                for w in ["Mutants", "by", "Operator"] {
                    self.expect(w)?;
                }
                Operation::GroupMutantsByOperator
            }
            "Order" => {
                for w in ["Groups", "by", "Size"] {
                    self.expect(w)?;
                }
                match self.next() {
                    Some("ascending") => Operation::OrderGroups(SortOrder::Ascending),
                    Some("descending") => Operation::OrderGroups(SortOrder::Descending),
                    _ => return self.err("expected `ascending` or `descending`"),
                }
            }
            "Sample" => {
                self.expect("Mutants")?;
                self.expect("random")?;
                Operation::SampleMutants(self.amount()?)
            }
            other => {
                self.pos -= 1;
                return self.err(format!("unknown operation `{other}`"));
            }
        };
        Ok(op)
    }
}

impl Strategy {
    pub fn new(operations: Vec<Operation>) -> Self {
        Self { operations }
    }

    /// Executes every operator and keeps every mutant.
    pub fn identity() -> Self {
        Self::new(vec![Operation::ExecuteOperators(Amount::Percent(100)), Operation::RetainMutants(Amount::Percent(100))])
    }

    /// Parses rendered text. Separators are optional; operations are
    /// recognised by their leading words.
    pub fn parse(text: &str) -> Result<Self, StrategyParseError> {
        let mut words = Words { words: text.split_whitespace().filter(|w| *w != "→").collect(), pos: 0 };
        if words.words.is_empty() {
            return words.err("empty strategy");
        }
        let mut operations = Vec::new();
        while words.pos < words.words.len() {
            operations.push(words.operation()?);
        }
        Ok(Self { operations })
    }

    /// Builds a strategy from the terminal symbols of a grammar derivation.
    pub fn from_terminals(terminals: &[String]) -> Result<Self, StrategyParseError> {
        Self::parse(&terminals.join(" "))
    }

    /// One operation per step, joined by [`STEP_SEPARATOR`].
    pub fn render(&self) -> String {
        self.to_string()
    }

    /// Whether execution draws on the random generator in a way that can
    /// change the outcome.
    pub fn is_stochastic(&self) -> bool {
        self.operations.iter().any(|op| match op {
            Operation::RetainOperators(a)
            | Operation::DiscardOperators(a)
            | Operation::ExecuteOperators(a)
            | Operation::RetainMutants(a)
            | Operation::DiscardMutants(a)
            | Operation::SampleMutants(a) => !matches!(a, Amount::Percent(0 | 100)),
            _ => false,
        })
    }

    pub fn execute(&self, cache: &MutationCache, rng: &mut (impl Rng + ?Sized)) -> ReductionRun {
        let mut state = ExecState::new(cache);
        for op in &self.operations {
            state.apply(op, rng);
        }
        state.finish()
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.operations.iter().enumerate() {
            if i > 0 {
                f.write_str(STEP_SEPARATOR)?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// Outcome of applying a reduction to a cache.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionRun {
    /// Executed operator indices, ascending.
    pub selected_operators: Vec<usize>,
    /// `M'` as mutant indices, ascending.
    pub reduced_mutants: Vec<usize>,
    /// Generation cost of executed operators plus execution cost of `M'`.
    pub strategy_cost: f64,
}

impl ReductionRun {
    /// Builds a run from executed operators and surviving mutants, charging costs.
    pub fn from_selection(cache: &MutationCache, mut operators: Vec<usize>, mut mutants: Vec<usize>) -> Self {
        operators.sort_unstable();
        mutants.sort_unstable();
        let strategy_cost = operators.iter().map(|&o| cache.generation_cost(o)).sum::<f64>()
            + mutants.iter().map(|&m| cache.exec_cost(m)).sum::<f64>();
        Self { selected_operators: operators, reduced_mutants: mutants, strategy_cost }
    }

    pub fn operator_ids<'c>(&self, cache: &'c MutationCache) -> Vec<&'c str> {
        self.selected_operators.iter().map(|&o| cache.operators()[o].id.as_str()).collect()
    }

    pub fn mutant_ids<'c>(&self, cache: &'c MutationCache) -> Vec<&'c str> {
        self.reduced_mutants.iter().map(|&m| cache.mutants()[m].id.as_str()).collect()
    }
}

/// Anything that turns a cache into a reduced mutant set.
pub trait Reducer {
    fn reduce(&self, cache: &MutationCache, rng: &mut dyn rand::RngCore) -> ReductionRun;

    /// Text identifying the reducer in front files.
    fn label(&self) -> String;
}

impl Reducer for Strategy {
    fn reduce(&self, cache: &MutationCache, rng: &mut dyn rand::RngCore) -> ReductionRun {
        self.execute(cache, rng)
    }

    fn label(&self) -> String {
        self.render()
    }
}

/// Uniform random subset of `pool` of size `k`, in the pool's order.
pub(crate) fn sample_keep(pool: &[usize], k: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<usize> {
    if k >= pool.len() {
        return pool.to_vec();
    }
    let mut picked = index::sample(rng, pool.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i]).collect()
}

fn sample_drop(pool: &[usize], k: usize, rng: &mut (impl Rng + ?Sized)) -> Vec<usize> {
    if k == 0 {
        return pool.to_vec();
    }
    let k = k.min(pool.len());
    let mut dropped = vec![false; pool.len()];
    for i in index::sample(rng, pool.len(), k) {
        dropped[i] = true;
    }
    pool.iter().zip(dropped).filter(|(_, d)| !d).map(|(&m, _)| m).collect()
}

struct ExecState<'c> {
    cache: &'c MutationCache,
    operator_pool: Vec<usize>,
    executed: Vec<usize>,
    groups: Vec<Vec<usize>>,
    grouped: bool,
}

impl<'c> ExecState<'c> {
    fn new(cache: &'c MutationCache) -> Self {
        Self {
            cache,
            operator_pool: (0..cache.operators().len()).collect(),
            executed: Vec::new(),
            groups: vec![Vec::new()],
            grouped: false,
        }
    }

    fn group_operator(&self, group: &[usize]) -> usize {
        group.first().map_or(usize::MAX, |&m| self.cache.mutant_operator(m))
    }

    fn apply(&mut self, op: &Operation, rng: &mut (impl Rng + ?Sized)) {
        match *op {
            Operation::RetainOperators(a) => {
                self.operator_pool = sample_keep(&self.operator_pool, a.count(self.operator_pool.len()), rng);
            }
            Operation::DiscardOperators(a) => {
                self.operator_pool = sample_drop(&self.operator_pool, a.count(self.operator_pool.len()), rng);
            }
            Operation::ExecuteOperators(a) => {
                let chosen = sample_keep(&self.operator_pool, a.count(self.operator_pool.len()), rng);
                self.operator_pool.retain(|o| !chosen.contains(o));
                for &o in &chosen {
                    let mutants = self.cache.operator_mutants(o);
                    if self.grouped {
                        if !mutants.is_empty() {
                            self.groups.push(mutants.to_vec());
                        }
                    } else {
                        self.groups[0].extend_from_slice(mutants);
                    }
                }
                if !self.grouped {
                    self.groups[0].sort_unstable();
                }
                self.executed.extend(chosen);
            }
            Operation::RetainMutants(a) | Operation::SampleMutants(a) => {
                for g in &mut self.groups {
                    *g = sample_keep(g, a.count(g.len()), rng);
                }
            }
            Operation::DiscardMutants(a) => {
                for g in &mut self.groups {
                    *g = sample_drop(g, a.count(g.len()), rng);
                }
            }
            Operation::GroupMutantsByOperator => {
                let mut all: Vec<usize> = self.groups.drain(..).flatten().collect();
                all.sort_unstable();
                let mut by_op: Vec<Vec<usize>> = vec![Vec::new(); self.cache.operators().len()];
                for m in all {
                    by_op[self.cache.mutant_operator(m)].push(m);
                }
                self.groups = by_op.into_iter().filter(|g| !g.is_empty()).collect();
                self.grouped = true;
            }
            Operation::OrderGroups(order) => {
                if self.grouped {
                    let mut keyed: Vec<(usize, usize, Vec<usize>)> = self
                        .groups
                        .drain(..)
                        .map(|g| (g.len(), 0, g))
                        .collect();
                    for entry in &mut keyed {
                        entry.1 = self.group_operator(&entry.2);
                    }
                    keyed.sort_by(|a, b| {
                        let by_size = match order {
                            SortOrder::Ascending => a.0.cmp(&b.0),
                            SortOrder::Descending => b.0.cmp(&a.0),
                        };
                        by_size.then(a.1.cmp(&b.1))
                    });
                    self.groups = keyed.into_iter().map(|(_, _, g)| g).collect();
                }
            }
            Operation::TakeGroups { action, end, count } => {
                if self.grouped {
                    let n = self.groups.len();
                    let k = (count as usize).min(n);
                    let range = match end {
                        GroupEnd::First => 0..k,
                        GroupEnd::Last => n - k..n,
                    };
                    self.groups = self
                        .groups
                        .drain(..)
                        .enumerate()
                        .filter(|(i, _)| range.contains(i) == (action == GroupAction::Retain))
                        .map(|(_, g)| g)
                        .collect();
                }
            }
        }
    }

    fn finish(self) -> ReductionRun {
        let mutants: Vec<usize> = self.groups.into_iter().flatten().collect();
        ReductionRun::from_selection(self.cache, self.executed, mutants)
    }
}
