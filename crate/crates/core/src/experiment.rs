//! Multi-run comparison of methods by HV and IGD.
//!
//! All fronts of all methods share one reference front (the non-dominated
//! union) and one set of normalisation bounds (the extent of every point).

use std::io;

use serde::Serialize;

use crate::front::Front;
use crate::indicators::{igd, reference_front, IndicatorError, NormalizationBounds, NormalizedFront};
use crate::stats::{a12, kruskal_wallis, mean, std_dev, EffectSize, KruskalWallis, StatsError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("need at least two methods")]
    TooFewMethods,
    #[error("method `{method}` has {got} runs, expected {expected}")]
    MismatchedRuns { method: String, got: usize, expected: usize },
    #[error("method `{0}` has no runs")]
    NoRuns(String),
    #[error("method `{method}` run {run}: {source}")]
    Indicator {
        method: String,
        run: usize,
        #[source]
        source: IndicatorError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// A method's fronts, one per independent run.
#[derive(Debug, Clone)]
pub struct MethodRuns {
    pub name: String,
    pub fronts: Vec<Front>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Indicator {
    Hv,
    Igd,
}

impl Indicator {
    pub fn name(self) -> &'static str {
        match self {
            Indicator::Hv => "HV",
            Indicator::Igd => "IGD",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mean: f64,
    pub sd: f64,
}

/// The first method compared against another.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseComparison {
    pub method: String,
    pub other: String,
    /// A12 of the first method's values over the other's.
    pub effect: EffectSize,
    pub kruskal_wallis: KruskalWallis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub indicator: Indicator,
    pub methods: Vec<MethodSummary>,
    pub kruskal_wallis: KruskalWallis,
    pub pairwise: Vec<PairwiseComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunIndicators {
    pub method: String,
    pub run: usize,
    pub hv: f64,
    pub igd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatReport {
    pub hv: IndicatorReport,
    pub igd: IndicatorReport,
    pub runs: Vec<RunIndicators>,
    pub bounds: NormalizationBounds,
    pub reference: Front,
}

impl StatReport {
    pub fn indicator(&self, indicator: Indicator) -> &IndicatorReport {
        match indicator {
            Indicator::Hv => &self.hv,
            Indicator::Igd => &self.igd,
        }
    }

    /// Per-run values of `indicator` for `method`, in run order.
    pub fn values(&self, method: &str, indicator: Indicator) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.method == method)
            .map(|r| match indicator {
                Indicator::Hv => r.hv,
                Indicator::Igd => r.igd,
            })
            .collect()
    }
}

fn summarize(indicator: Indicator, names: &[String], samples: &[Vec<f64>]) -> Result<IndicatorReport, ExperimentError> {
    let methods = names
        .iter()
        .zip(samples)
        .map(|(name, xs)| MethodSummary { method: name.clone(), mean: mean(xs), sd: std_dev(xs) })
        .collect();
    let kw = kruskal_wallis(samples)?;
    let mut pairwise = Vec::new();
    for (name, xs) in names.iter().zip(samples).skip(1) {
        pairwise.push(PairwiseComparison {
            method: names[0].clone(),
            other: name.clone(),
            effect: a12(&samples[0], xs),
            kruskal_wallis: kruskal_wallis(&[samples[0].clone(), xs.clone()])?,
        });
    }
    Ok(IndicatorReport { indicator, methods, kruskal_wallis: kw, pairwise })
}

/// Computes per-run HV and IGD for every method, a Kruskal-Wallis test
/// across methods, and A12 plus a two-group Kruskal-Wallis test of the first
/// method against each other method.
pub fn compare_experiment(methods: &[MethodRuns]) -> Result<StatReport, ExperimentError> {
    if methods.len() < 2 {
        return Err(ExperimentError::TooFewMethods);
    }
    let expected = methods[0].fronts.len();
    if expected == 0 {
        return Err(ExperimentError::NoRuns(methods[0].name.clone()));
    }
    for m in methods {
        if m.fronts.len() != expected {
            return Err(ExperimentError::MismatchedRuns { method: m.name.clone(), got: m.fronts.len(), expected });
        }
    }
    let all_fronts = || methods.iter().flat_map(|m| m.fronts.iter());
    let reference = reference_front(all_fronts());
    let bounds = NormalizationBounds::from_fronts(all_fronts()).ok_or_else(|| ExperimentError::Indicator {
        method: methods[0].name.clone(),
        run: 0,
        source: IndicatorError::EmptyFront,
    })?;
    let reference_points = NormalizedFront::new(&reference, bounds).points;

    let mut runs = Vec::new();
    for m in methods {
        for (run, front) in m.fronts.iter().enumerate() {
            let nf = NormalizedFront::new(front, bounds);
            let igd = igd(&nf.points, &reference_points).map_err(|source| ExperimentError::Indicator {
                method: m.name.clone(),
                run,
                source,
            })?;
            runs.push(RunIndicators { method: m.name.clone(), run, hv: nf.hypervolume(), igd });
        }
    }
    let names: Vec<String> = methods.iter().map(|m| m.name.clone()).collect();
    let hv_samples: Vec<Vec<f64>> = names
        .iter()
        .map(|n| runs.iter().filter(|r| &r.method == n).map(|r| r.hv).collect())
        .collect();
    let igd_samples: Vec<Vec<f64>> = names
        .iter()
        .map(|n| runs.iter().filter(|r| &r.method == n).map(|r| r.igd).collect())
        .collect();
    Ok(StatReport {
        hv: summarize(Indicator::Hv, &names, &hv_samples)?,
        igd: summarize(Indicator::Igd, &names, &igd_samples)?,
        runs,
        bounds,
        reference,
    })
}

/// One-row table for an indicator: a `mean (sd)` cell per method, the
/// Kruskal-Wallis p-value, and an `A12 (magnitude)` cell per comparison
/// against the first method.
pub fn write_indicator_table(
    writer: impl io::Write,
    experiment: &str,
    report: &IndicatorReport,
) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["experiment".to_string(), "indicator".to_string()];
    header.extend(report.methods.iter().map(|m| m.method.clone()));
    header.push("p_value".into());
    header.extend(report.pairwise.iter().map(|p| format!("a12_{}_vs_{}", p.method, p.other)));
    wtr.write_record(&header)?;
    let mut row = vec![experiment.to_string(), report.indicator.name().to_string()];
    row.extend(report.methods.iter().map(|m| format!("{:.4} ({:.4})", m.mean, m.sd)));
    row.push(format!("{:.4e}", report.kruskal_wallis.p));
    row.extend(report.pairwise.iter().map(|p| format!("{:.2} ({})", p.effect.value, p.effect.magnitude.letter())));
    wtr.write_record(&row)?;
    wtr.flush()?;
    Ok(())
}

/// Long-form pairwise comparisons of both indicators.
pub fn write_pairwise_csv(writer: impl io::Write, report: &StatReport) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["indicator", "method", "other", "a12", "magnitude", "kruskal_wallis_h", "kruskal_wallis_p"])?;
    for ind in [&report.hv, &report.igd] {
        for p in &ind.pairwise {
            wtr.write_record([
                ind.indicator.name().to_string(),
                p.method.clone(),
                p.other.clone(),
                p.effect.value.to_string(),
                format!("{:?}", p.effect.magnitude),
                p.kruskal_wallis.h.to_string(),
                p.kruskal_wallis.p.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Raw per-run indicator values.
pub fn write_runs_csv(writer: impl io::Write, report: &StatReport) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in &report.runs {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Scatter data: one `time,score,method,run` row per front member.
pub fn write_scatter_csv(writer: impl io::Write, methods: &[MethodRuns]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["time", "score", "method", "run"])?;
    for m in methods {
        for (run, front) in m.fronts.iter().enumerate() {
            for e in front.entries() {
                wtr.write_record([
                    e.objectives.time.to_string(),
                    e.objectives.score.to_string(),
                    m.name.clone(),
                    run.to_string(),
                ])?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}
