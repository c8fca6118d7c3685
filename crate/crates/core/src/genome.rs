//! Integer chromosomes, genotype-phenotype mapping and variation operators.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grammar::{Grammar, Sym};
use crate::strategy::Strategy;

/// Gene bounds, length limits and wrap budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenomeConfig {
    pub lower_gene: u32,
    pub upper_gene: u32,
    pub min_length: usize,
    pub max_length: usize,
    pub max_wraps: usize,
}

impl Default for GenomeConfig {
    fn default() -> Self {
        Self { lower_gene: 0, upper_gene: 179, min_length: 15, max_length: 100, max_wraps: 10 }
    }
}

impl GenomeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.lower_gene > self.upper_gene {
            return Err("lower gene bound exceeds upper gene bound".into());
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err("chromosome length limits must satisfy 1 <= min <= max".into());
        }
        Ok(())
    }

    fn random_gene(&self, rng: &mut (impl Rng + ?Sized)) -> u32 {
        rng.random_range(self.lower_gene..=self.upper_gene)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Chromosome {
    pub genes: Vec<u32>,
}

impl Chromosome {
    pub fn new(genes: Vec<u32>) -> Self {
        Self { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Whether length and every gene lie within `cfg`.
    pub fn is_valid(&self, cfg: &GenomeConfig) -> bool {
        (cfg.min_length..=cfg.max_length).contains(&self.len())
            && self.genes.iter().all(|g| (cfg.lower_gene..=cfg.upper_gene).contains(g))
    }
}

/// Comma-separated genes, as written to run logs and front files.
impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.genes.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Chromosome {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(Self::default());
        }
        s.split(',').map(|g| g.trim().parse()).collect::<Result<_, _>>().map(Self::new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingStatus {
    Mapped,
    /// Genes ran out after the last permitted wrap.
    WrapLimit,
    /// The derivation is not a valid strategy.
    InvalidPhenotype,
}

/// Terminal string produced by expanding a grammar with a chromosome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub terminals: Vec<String>,
    /// Gene reads, counting re-reads after wrapping.
    pub genes_consumed: usize,
    pub wraps_used: usize,
    pub status: MappingStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingResult {
    pub strategy: Option<Strategy>,
    pub genes_consumed: usize,
    pub wraps_used: usize,
    pub status: MappingStatus,
}

impl MappingResult {
    pub fn is_mapped(&self) -> bool {
        self.status == MappingStatus::Mapped
    }
}

// Only reachable through pathological grammars; every rule terminates, so a
// normal expansion is bounded by the gene budget.
const MAX_EXPANSIONS: usize = 1_000_000;

/// Leftmost depth-first expansion from the start symbol.
///
/// Rules with a single production consume no gene. Otherwise the next gene
/// `g` selects production `g mod k`. Reading past the last gene wraps to the
/// first; more than `max_wraps` wraps fails the mapping.
pub fn derive(chromosome: &Chromosome, grammar: &Grammar, max_wraps: usize) -> Derivation {
    let compiled = grammar.compiled();
    let mut stack: Vec<&Sym> = vec![&Sym::N(0)];
    let mut terminals = Vec::new();
    let (mut pos, mut consumed, mut wraps, mut expansions) = (0usize, 0usize, 0usize, 0usize);
    let fail = |terminals, consumed, wraps| Derivation {
        terminals,
        genes_consumed: consumed,
        wraps_used: wraps,
        status: MappingStatus::WrapLimit,
    };
    while let Some(sym) = stack.pop() {
        match sym {
            Sym::T(t) => terminals.push(t.clone()),
            Sym::N(rule) => {
                expansions += 1;
                if expansions > MAX_EXPANSIONS {
                    return fail(terminals, consumed, wraps);
                }
                let prods = &compiled[*rule];
                let choice = if prods.len() == 1 {
                    0
                } else {
                    if pos == chromosome.len() {
                        wraps += 1;
                        pos = 0;
                        if wraps > max_wraps || chromosome.is_empty() {
                            return fail(terminals, consumed, wraps);
                        }
                    }
                    let gene = chromosome.genes[pos];
                    pos += 1;
                    consumed += 1;
                    gene as usize % prods.len()
                };
                stack.extend(prods[choice].iter().rev());
            }
        }
    }
    Derivation { terminals, genes_consumed: consumed, wraps_used: wraps, status: MappingStatus::Mapped }
}

/// Maps a chromosome to a strategy.
pub fn map(chromosome: &Chromosome, grammar: &Grammar, max_wraps: usize) -> MappingResult {
    let d = derive(chromosome, grammar, max_wraps);
    let (strategy, status) = match d.status {
        MappingStatus::Mapped => match Strategy::from_terminals(&d.terminals) {
            Ok(s) => (Some(s), MappingStatus::Mapped),
            Err(_) => (None, MappingStatus::InvalidPhenotype),
        },
        other => (None, other),
    };
    MappingResult { strategy, genes_consumed: d.genes_consumed, wraps_used: d.wraps_used, status }
}

/// Uniform length in the configured limits, uniform genes in bounds.
pub fn random_chromosome(rng: &mut (impl Rng + ?Sized), cfg: &GenomeConfig) -> Chromosome {
    let len = rng.random_range(cfg.min_length..=cfg.max_length);
    Chromosome::new((0..len).map(|_| cfg.random_gene(rng)).collect())
}

fn clamp_length(mut genes: Vec<u32>, rng: &mut (impl Rng + ?Sized), cfg: &GenomeConfig) -> Chromosome {
    genes.truncate(cfg.max_length);
    while genes.len() < cfg.min_length {
        genes.push(cfg.random_gene(rng));
    }
    Chromosome::new(genes)
}

/// Children `a[..cut_a] + b[cut_b..]` and `b[..cut_b] + a[cut_a..]`, clamped
/// to the length limits by truncation or random padding.
pub fn crossover_at(
    a: &Chromosome,
    b: &Chromosome,
    cut_a: usize,
    cut_b: usize,
    rng: &mut (impl Rng + ?Sized),
    cfg: &GenomeConfig,
) -> (Chromosome, Chromosome) {
    let (cut_a, cut_b) = (cut_a.min(a.len()), cut_b.min(b.len()));
    let first = a.genes[..cut_a].iter().chain(&b.genes[cut_b..]).copied().collect();
    let second = b.genes[..cut_b].iter().chain(&a.genes[cut_a..]).copied().collect();
    (clamp_length(first, rng, cfg), clamp_length(second, rng, cfg))
}

/// Single-point crossover with an independent uniform cut in each parent.
pub fn crossover(
    a: &Chromosome,
    b: &Chromosome,
    rng: &mut (impl Rng + ?Sized),
    cfg: &GenomeConfig,
) -> (Chromosome, Chromosome) {
    let cut_a = rng.random_range(0..=a.len());
    let cut_b = rng.random_range(0..=b.len());
    crossover_at(a, b, cut_a, cut_b, rng, cfg)
}

/// Replaces each gene with probability `p` by a uniform gene in bounds.
pub fn mutate(chromosome: &Chromosome, p: f64, rng: &mut (impl Rng + ?Sized), cfg: &GenomeConfig) -> Chromosome {
    let genes = chromosome
        .genes
        .iter()
        .map(|&g| if p > 0.0 && rng.random_bool(p.min(1.0)) { cfg.random_gene(rng) } else { g })
        .collect();
    Chromosome::new(genes)
}

/// Truncates to the genes read by a wrap-free mapping, padding back to the
/// minimum length with unread random genes. Chromosomes that fail to map or
/// need a wrap are returned unchanged.
pub fn prune(chromosome: &Chromosome, grammar: &Grammar, rng: &mut (impl Rng + ?Sized), cfg: &GenomeConfig) -> Chromosome {
    let d = derive(chromosome, grammar, cfg.max_wraps);
    if d.status != MappingStatus::Mapped || d.wraps_used > 0 {
        return chromosome.clone();
    }
    clamp_length(chromosome.genes[..d.genes_consumed].to_vec(), rng, cfg)
}

/// Appends a copy of a random contiguous segment, truncated to the maximum length.
pub fn duplicate(chromosome: &Chromosome, rng: &mut (impl Rng + ?Sized), cfg: &GenomeConfig) -> Chromosome {
    let room = cfg.max_length.saturating_sub(chromosome.len());
    if room == 0 || chromosome.is_empty() {
        return chromosome.clone();
    }
    let start = rng.random_range(0..chromosome.len());
    let end = rng.random_range(start + 1..=chromosome.len());
    let take = (end - start).min(room);
    let mut genes = chromosome.genes.clone();
    genes.extend_from_slice(&chromosome.genes[start..start + take]);
    Chromosome::new(genes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use crate::strategy::{Amount, Operation};

    fn cfg() -> GenomeConfig {
        GenomeConfig::default()
    }

    #[test]
    fn mod_rule_table() {
        let g = Grammar::parse(
            "<s> ::= <two> <three> <seven>\n<two> ::= \"a\" | \"b\"\n<three> ::= \"c\" | \"d\" | \"e\"\n<seven> ::= \"0\" | \"1\" | \"2\" | \"3\" | \"4\" | \"5\" | \"6\"",
        )
        .unwrap();
        for (genes, expected) in [([5, 5, 5], "b e 5"), ([0, 0, 0], "a c 0"), ([179, 179, 179], "b e 4"), ([2, 4, 13], "a d 6")] {
            let d = derive(&Chromosome::new(genes.to_vec()), &g, 10);
            assert_eq!(d.terminals.join(" "), expected);
            assert_eq!(d.genes_consumed, 3);
        }
    }

    #[test]
    fn single_option_rules_read_nothing() {
        let g = Grammar::parse("<a> ::= <b> \"y\"\n<b> ::= \"x\"").unwrap();
        let d = derive(&Chromosome::new(vec![3; 15]), &g, 10);
        assert_eq!(d.status, MappingStatus::Mapped);
        assert_eq!(d.genes_consumed, 0);
        assert_eq!(d.terminals, ["x", "y"]);
    }

    #[test]
    fn wrap_limit() {
        let g = Grammar::parse("<a> ::= \"x\" | \"x\" <a>").unwrap();
        let d = derive(&Chromosome::new(vec![1]), &g, 10);
        assert_eq!(d.status, MappingStatus::WrapLimit);
        assert_eq!((d.wraps_used, d.genes_consumed), (11, 11));
    }

    #[test]
    fn wraps_map_iff_within_budget() {
        // <s> reads exactly `reads` genes; a length-2 chromosome then needs
        // reads / 2 - 1 wraps.
        for w in 0..=13usize {
            let reads = 2 * (w + 1);
            let body = vec!["<b>"; reads].join(" ");
            let g = Grammar::parse(&format!("<s> ::= {body}\n<b> ::= \"0\" | \"1\"")).unwrap();
            let d = derive(&Chromosome::new(vec![0, 1]), &g, 10);
            if w <= 10 {
                assert_eq!((d.status, d.wraps_used, d.genes_consumed), (MappingStatus::Mapped, w, reads));
            } else {
                assert_eq!(d.status, MappingStatus::WrapLimit);
            }
        }
    }

    #[test]
    fn all_zero_chromosome_takes_first_options() {
        let g = Grammar::default_grammar();
        let r = map(&Chromosome::new(vec![0; 15]), &g, 10);
        assert!(r.is_mapped());
        // <strategy>, <amount>, <percentage>, <mutantOps>, <mutantOp>, <amount>, <percentage>
        assert_eq!(r.genes_consumed, 7);
        let expected = Strategy::new(vec![
            Operation::ExecuteOperators(Amount::Percent(10)),
            Operation::RetainMutants(Amount::Percent(10)),
        ]);
        assert_eq!(r.strategy.unwrap(), expected);
    }

    #[test]
    fn random_chromosomes_respect_bounds() {
        let mut rng = substream(1, &[]);
        for _ in 0..1000 {
            assert!(random_chromosome(&mut rng, &cfg()).is_valid(&cfg()));
        }
        let a = random_chromosome(&mut substream(5, &[]), &cfg());
        assert_eq!(a, random_chromosome(&mut substream(5, &[]), &cfg()));
        assert_ne!(a, random_chromosome(&mut substream(6, &[]), &cfg()));
    }

    #[test]
    fn crossover_lengths() {
        let mut rng = substream(2, &[]);
        let a = Chromosome::new((0..20).collect());
        let b = Chromosome::new((100..130).collect());
        let (c, d) = crossover_at(&a, &b, 10, 10, &mut rng, &cfg());
        assert_eq!((c.len(), d.len()), (30, 20));
        assert_eq!(&c.genes[..10], &a.genes[..10]);
        assert_eq!(&c.genes[10..], &b.genes[10..]);
        let (e, f) = crossover_at(&a, &a, 7, 7, &mut rng, &cfg());
        assert_eq!((&e, &f), (&a, &a));
        for _ in 0..1000 {
            let p = random_chromosome(&mut rng, &cfg());
            let q = random_chromosome(&mut rng, &cfg());
            let (x, y) = crossover(&p, &q, &mut rng, &cfg());
            assert!(x.is_valid(&cfg()) && y.is_valid(&cfg()));
        }
    }

    #[test]
    fn mutation_rates() {
        let mut rng = substream(3, &[]);
        let c = random_chromosome(&mut rng, &cfg());
        assert_eq!(mutate(&c, 0.0, &mut rng, &cfg()), c);
        let all = mutate(&Chromosome::new(vec![1000; 50]), 1.0, &mut rng, &cfg());
        assert!(all.genes.iter().all(|&g| g <= 179));

        let base = Chromosome::new(vec![0; 100]);
        let mut changed = 0usize;
        let mut total = 0usize;
        for _ in 0..1000 {
            let m = mutate(&base, 0.01, &mut rng, &cfg());
            changed += m.genes.iter().filter(|&&g| g != 0).count();
            total += 100;
        }
        // expected rate 0.01 * 179/180; binomial sd over 1e5 genes is ~3.1e-4
        let rate = changed as f64 / total as f64;
        assert!((rate - 0.01).abs() <= 0.005, "{rate}");
    }

    #[test]
    fn prune_truncates_to_read_prefix() {
        let g = Grammar::default_grammar();
        let mut rng = substream(4, &[]);
        let mut genes = vec![0u32; 40];
        // first option everywhere except <mutantOps>, which recurses several times
        genes[3] = 1;
        genes[6] = 1;
        let c = Chromosome::new(genes);
        let before = map(&c, &g, 10);
        let pruned = prune(&c, &g, &mut rng, &cfg());
        assert_eq!(pruned.len(), before.genes_consumed.max(15));
        assert_eq!(map(&pruned, &g, 10).strategy, before.strategy);

        let tight = Chromosome::new(vec![0; 7]);
        let cfg7 = GenomeConfig { min_length: 7, ..cfg() };
        assert_eq!(prune(&tight, &g, &mut rng, &cfg7), tight);
    }

    #[test]
    fn prune_consumed_17_of_40() {
        // a grammar reading exactly one gene per <a> expansion
        let g = Grammar::parse("<a> ::= \"x\" | \"x\" <a>").unwrap();
        let mut genes = vec![1u32; 40];
        genes[16] = 0;
        let c = Chromosome::new(genes);
        let p = prune(&c, &g, &mut substream(9, &[]), &cfg());
        assert_eq!(p.len(), 17);
        assert_eq!(derive(&p, &g, 10).terminals, derive(&c, &g, 10).terminals);
    }

    #[test]
    fn duplicate_appends_slice() {
        let mut rng = substream(5, &[]);
        let full = Chromosome::new(vec![1; 100]);
        assert_eq!(duplicate(&full, &mut rng, &cfg()), full);
        for _ in 0..200 {
            let c = random_chromosome(&mut rng, &cfg());
            let d = duplicate(&c, &mut rng, &cfg());
            assert!(d.is_valid(&cfg()));
            assert_eq!(&d.genes[..c.len()], c.genes.as_slice());
            let tail = &d.genes[c.len()..];
            assert_eq!(tail.is_empty(), c.len() == cfg().max_length);
            assert!(tail.is_empty() || c.genes.windows(tail.len()).any(|w| w == tail));
        }
    }

    #[test]
    fn chromosome_text_round_trip() {
        let c = Chromosome::new(vec![3, 179, 0, 42]);
        assert_eq!(c.to_string(), "3,179,0,42");
        assert_eq!("3,179,0,42".parse::<Chromosome>().unwrap(), c);
        assert!("3,x".parse::<Chromosome>().is_err());
    }
}
