//! Conventional mutant reduction strategies and their parameter sweeps.
//!
//! * RMS (random mutant sampling) generates every mutant and keeps a uniform
//!   `round(p * |M|)` of them. It pays every operator's generation cost.
//! * ROS (random operator selection) executes a uniform `round(p * |ops|)`
//!   operators and keeps all their mutants.
//! * SM (selective mutation) skips the `n` operators with the highest yield
//!   (ties by ascending id) and keeps every mutant of the rest.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;

use crate::cache::MutationCache;
use crate::front::{Front, FrontEntry};
use crate::objectives::evaluate;
use crate::rng::evaluation_rng;
use crate::strategy::{Amount, ReductionRun, Reducer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    Rms,
    Ros,
    Sm,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Rms, BaselineKind::Ros, BaselineKind::Sm];

    /// Default parameter grid: 10% to 90% in steps of 10% for RMS and ROS,
    /// one to six excluded operators for SM.
    pub fn sweep(self) -> Vec<BaselineSpec> {
        match self {
            BaselineKind::Rms | BaselineKind::Ros => {
                (1..=9).map(|k| BaselineSpec { kind: self, parameter: k * 10 }).collect()
            }
            BaselineKind::Sm => (1..=6).map(|n| BaselineSpec { kind: self, parameter: n }).collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Rms => "rms",
            BaselineKind::Ros => "ros",
            BaselineKind::Sm => "sm",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown baseline `{0}` (expected rms, ros or sm)")]
pub struct UnknownBaseline(pub String);

impl FromStr for BaselineKind {
    type Err = UnknownBaseline;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rms" => Ok(BaselineKind::Rms),
            "ros" => Ok(BaselineKind::Ros),
            "sm" => Ok(BaselineKind::Sm),
            _ => Err(UnknownBaseline(s.to_string())),
        }
    }
}

/// A baseline with its parameter: a whole percentage for RMS and ROS, the
/// number of excluded operators for SM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BaselineSpec {
    pub kind: BaselineKind,
    pub parameter: u32,
}

impl BaselineSpec {
    pub fn run(&self, cache: &MutationCache, rng: &mut dyn rand::RngCore) -> ReductionRun {
        let n_ops = cache.operators().len();
        match self.kind {
            BaselineKind::Rms => {
                let total = cache.mutants().len();
                let k = Amount::Percent(self.parameter.min(100) as u8).count(total);
                let mutants = index::sample(rng, total, k).into_vec();
                ReductionRun::from_selection(cache, (0..n_ops).collect(), mutants)
            }
            BaselineKind::Ros => {
                let k = Amount::Percent(self.parameter.min(100) as u8).count(n_ops);
                let operators = index::sample(rng, n_ops, k).into_vec();
                let mutants = operators.iter().flat_map(|&o| cache.operator_mutants(o).iter().copied()).collect();
                ReductionRun::from_selection(cache, operators, mutants)
            }
            BaselineKind::Sm => {
                let kept: Vec<usize> = cache.operator_indices_by_yield().into_iter().skip(self.parameter as usize).collect();
                let mutants = kept.iter().flat_map(|&o| cache.operator_mutants(o).iter().copied()).collect();
                ReductionRun::from_selection(cache, kept, mutants)
            }
        }
    }

    /// Parses labels written by [`Display`](fmt::Display), e.g. `RMS 10%` or `SM 2`.
    pub fn parse(text: &str) -> Option<Self> {
        let mut words = text.split_whitespace();
        let kind: BaselineKind = words.next()?.parse().ok()?;
        let param = words.next()?;
        if words.next().is_some() {
            return None;
        }
        let parameter = match kind {
            BaselineKind::Rms | BaselineKind::Ros => param.strip_suffix('%')?.parse().ok().filter(|p| *p <= 100)?,
            BaselineKind::Sm => param.parse().ok()?,
        };
        Some(Self { kind, parameter })
    }
}

impl fmt::Display for BaselineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BaselineKind::Rms => write!(f, "RMS {}%", self.parameter),
            BaselineKind::Ros => write!(f, "ROS {}%", self.parameter),
            BaselineKind::Sm => write!(f, "SM {}", self.parameter),
        }
    }
}

impl Reducer for BaselineSpec {
    fn reduce(&self, cache: &MutationCache, rng: &mut dyn rand::RngCore) -> ReductionRun {
        self.run(cache, rng)
    }

    fn label(&self) -> String {
        self.to_string()
    }
}

/// Evaluates every point of `specs` and returns the non-dominated subset.
/// Each point is evaluated with the stream keyed by `seed` and its label.
pub fn sweep_front(specs: &[BaselineSpec], cache: &MutationCache, seed: u64, repetitions: usize) -> Front {
    Front::non_dominated(
        specs
            .iter()
            .map(|spec| {
                let label = spec.label();
                let objectives = evaluate(spec, cache, repetitions, &mut evaluation_rng(seed, &label));
                FrontEntry { chromosome: None, strategy_text: label, objectives }
            })
            .collect(),
    )
}

/// Front of the default sweep of `kind`.
pub fn baseline_front(kind: BaselineKind, cache: &MutationCache, seed: u64, repetitions: usize) -> Front {
    sweep_front(&kind.sweep(), cache, seed, repetitions)
}
