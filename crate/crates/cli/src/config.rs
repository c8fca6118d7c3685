//! Flat `key = value` configuration files.
//!
//! Keys are the GE parameter names, case-insensitive, with spaces or
//! underscores: `Population Size = 100` and `population_size=100` are the
//! same setting. Probabilities accept `0.01` or `1%`. Lines starting with `#`
//! are comments.

use mutreduce::SearchConfig;

use crate::CliError;

/// Search parameters plus the number of independent runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings {
    pub search: SearchConfig,
    pub runs: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self { search: SearchConfig::default(), runs: 30 }
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().split([' ', '_', '-']).filter(|w| !w.is_empty()).collect::<Vec<_>>().join("_")
}

fn parse_probability(key: &str, value: &str) -> Result<f64, CliError> {
    let bad = || CliError::Validation(format!("{key}: `{value}` is not a probability"));
    let p = match value.strip_suffix('%') {
        Some(pct) => pct.trim().parse::<f64>().map_err(|_| bad())? / 100.0,
        None => value.parse::<f64>().map_err(|_| bad())?,
    };
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(bad())
    }
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.replace([',', '_'], "").parse().map_err(|_| CliError::Validation(format!("{key}: `{value}` is not a whole number")))
}

impl TrainSettings {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        let s = &mut self.search;
        match normalize_key(key).as_str() {
            "independent_runs" => self.runs = parse_int(key, value)?,
            "strategy_repetitions" => s.repetitions = parse_int(key, value)?,
            "maximum_evaluations" => s.max_evaluations = parse_int(key, value)?,
            "population_size" => s.population_size = parse_int(key, value)?,
            "crossover_probability" => s.crossover_prob = parse_probability(key, value)?,
            "mutation_probability" => s.mutation_prob = parse_probability(key, value)?,
            "prune_probability" => s.prune_prob = parse_probability(key, value)?,
            "duplicate_probability" => s.duplicate_prob = parse_probability(key, value)?,
            "lower_gene_bound" => s.genome.lower_gene = parse_int(key, value)?,
            "upper_gene_bound" => s.genome.upper_gene = parse_int(key, value)?,
            "maximum_chromosome_length" => s.genome.max_length = parse_int(key, value)?,
            "minimum_chromosome_length" => s.genome.min_length = parse_int(key, value)?,
            "maximum_wraps" => s.genome.max_wraps = parse_int(key, value)?,
            "crossover_operator" if normalize_key(value) == "single_point_crossover" => {}
            "mutation_operator" if normalize_key(value) == "random_integer_mutation" => {}
            "crossover_operator" | "mutation_operator" => {
                return Err(CliError::Validation(format!("{key}: unsupported operator `{value}`")))
            }
            _ => return Err(CliError::Validation(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("config line {}: expected `key = value`", i + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Applies a `key=value` pair given on the command line.
    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) =
            pair.split_once('=').ok_or_else(|| CliError::Validation(format!("`{pair}`: expected key=value")))?;
        self.set(key, value)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.runs == 0 {
            return Err(CliError::Validation("independent_runs must be at least 1".into()));
        }
        self.search.validate().map_err(|e| CliError::Validation(e.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_names_and_snake_case_agree() {
        let mut a = TrainSettings::default();
        a.apply_text("# scaled\nPopulation Size = 40\nMaximum Evaluations = 2,000\nMutation Probability = 2%\n").unwrap();
        let mut b = TrainSettings::default();
        for p in ["population_size=40", "maximum_evaluations=2000", "mutation_probability=0.02"] {
            b.apply_pair(p).unwrap();
        }
        assert_eq!(a, b);
        assert_eq!(a.search.population_size, 40);
        assert!((a.search.mutation_prob - 0.02).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut s = TrainSettings::default();
        assert!(s.apply_pair("colour=blue").is_err());
        assert!(s.apply_pair("prune_probability=1.5").is_err());
        assert!(s.apply_text("population_size 10").is_err());
        assert!(s.apply_pair("crossover_operator=uniform").is_err());
        s.apply_pair("Crossover Operator=Single Point Crossover").unwrap();
    }
}
