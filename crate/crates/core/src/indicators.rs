//! Pareto front quality indicators in normalised minimisation space.
//!
//! Fronts are mapped into `[0, 1]^2` with both coordinates minimised:
//! `t' = (time - t_min) / (t_max - t_min)` and
//! `s' = 1 - (score - s_min) / (s_max - s_min)`. A zero-width axis maps to 0.
//! Hypervolume is measured against the reference point `(1, 1)`.

use serde::{Deserialize, Serialize};

use crate::front::Front;
use crate::objectives::ObjectivePair;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationBounds {
    pub time_min: f64,
    pub time_max: f64,
    pub score_min: f64,
    pub score_max: f64,
}

impl NormalizationBounds {
    /// Bounds of every point of every front; `None` if all fronts are empty.
    pub fn from_fronts<'a>(fronts: impl IntoIterator<Item = &'a Front>) -> Option<Self> {
        let mut bounds: Option<Self> = None;
        for p in fronts.into_iter().flat_map(|f| f.entries().iter().map(|e| e.objectives)) {
            let b = bounds.get_or_insert(Self { time_min: p.time, time_max: p.time, score_min: p.score, score_max: p.score });
            b.time_min = b.time_min.min(p.time);
            b.time_max = b.time_max.max(p.time);
            b.score_min = b.score_min.min(p.score);
            b.score_max = b.score_max.max(p.score);
        }
        bounds
    }

    pub fn normalize(&self, p: &ObjectivePair) -> [f64; 2] {
        let scale = |v: f64, lo: f64, hi: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
        let t = scale(p.time, self.time_min, self.time_max);
        let s = if self.score_max > self.score_min { 1.0 - scale(p.score, self.score_min, self.score_max) } else { 0.0 };
        [t, s]
    }
}

/// A front in normalised minimisation coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFront {
    pub points: Vec<[f64; 2]>,
    pub bounds: NormalizationBounds,
}

impl NormalizedFront {
    pub fn new(front: &Front, bounds: NormalizationBounds) -> Self {
        Self { points: front.entries().iter().map(|e| bounds.normalize(&e.objectives)).collect(), bounds }
    }

    pub fn hypervolume(&self) -> f64 {
        hypervolume(&self.points)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndicatorError {
    #[error("IGD is undefined for an empty front")]
    EmptyFront,
    #[error("IGD needs a non-empty reference front")]
    EmptyReference,
}

/// Exact area dominated by `points` inside the unit square, up to `(1, 1)`.
/// Coordinates are clipped to `[0, 1]`.
pub fn hypervolume(points: &[[f64; 2]]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = 1.0;
    for [x, y] in pts {
        if y < ceiling {
            area += (1.0 - x) * (ceiling - y);
            ceiling = y;
        }
    }
    area
}

/// Mean over reference points of the Euclidean distance to the nearest front point.
pub fn igd(front: &[[f64; 2]], reference: &[[f64; 2]]) -> Result<f64, IndicatorError> {
    if reference.is_empty() {
        return Err(IndicatorError::EmptyReference);
    }
    if front.is_empty() {
        return Err(IndicatorError::EmptyFront);
    }
    let total: f64 = reference
        .iter()
        .map(|r| front.iter().map(|p| (p[0] - r[0]).hypot(p[1] - r[1])).fold(f64::INFINITY, f64::min))
        .sum();
    Ok(total / reference.len() as f64)
}

/// Non-dominated members of the union of `fronts`, one per objective pair.
pub fn reference_front<'a>(fronts: impl IntoIterator<Item = &'a Front>) -> Front {
    Front::non_dominated(fronts.into_iter().flat_map(|f| f.entries().iter().cloned()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::front::FrontEntry;

    fn front(points: &[(f64, f64)]) -> Front {
        Front::non_dominated(
            points
                .iter()
                .enumerate()
                .map(|(i, &(time, score))| FrontEntry {
                    chromosome: None,
                    strategy_text: format!("s{i}"),
                    objectives: ObjectivePair { time, score },
                })
                .collect(),
        )
    }

    #[test]
    fn hypervolume_cases() {
        assert_eq!(hypervolume(&[[0.0, 0.0]]), 1.0);
        assert_eq!(hypervolume(&[[1.0, 1.0]]), 0.0);
        assert!((hypervolume(&[[0.2, 0.6], [0.5, 0.3]]) - 0.47).abs() < 1e-12);
        assert_eq!(hypervolume(&[]), 0.0);
        // clipping
        assert_eq!(hypervolume(&[[-0.5, -2.0]]), 1.0);
        assert_eq!(hypervolume(&[[1.5, 0.0]]), 0.0);
    }

    #[test]
    fn hypervolume_monotone() {
        let base = [[0.2, 0.6], [0.5, 0.3]];
        let h = hypervolume(&base);
        // dominated point changes nothing
        assert_eq!(hypervolume(&[base[0], base[1], [0.6, 0.7]]), h);
        // non-dominated point adds area
        assert!(hypervolume(&[base[0], base[1], [0.1, 0.9]]) > h);
    }

    #[test]
    fn igd_cases() {
        assert_eq!(igd(&[[0.3, 0.4]], &[[0.0, 0.0]]).unwrap(), 0.5);
        let pts = [[0.1, 0.9], [0.4, 0.2]];
        assert_eq!(igd(&pts, &pts).unwrap(), 0.0);
        assert_eq!(igd(&[], &pts), Err(IndicatorError::EmptyFront));
        assert_eq!(igd(&pts, &[]), Err(IndicatorError::EmptyReference));
    }

    #[test]
    fn normalization() {
        let f = front(&[(0.2, 0.5), (0.6, 0.9)]);
        let b = NormalizationBounds::from_fronts([&f]).unwrap();
        let n = NormalizedFront::new(&f, b);
        assert_eq!(n.points, vec![[0.0, 1.0], [1.0, 0.0]]);
        let flat = front(&[(0.3, 0.7)]);
        let b = NormalizationBounds::from_fronts([&flat]).unwrap();
        assert_eq!(NormalizedFront::new(&flat, b).points, vec![[0.0, 0.0]]);
    }

    #[test]
    fn reference_front_cases() {
        let a = front(&[(0.1, 0.3), (0.5, 0.8)]);
        assert_eq!(reference_front([&a]).objectives(), a.objectives());
        let better = front(&[(0.05, 0.4), (0.4, 0.9)]);
        assert_eq!(reference_front([&a, &better]).objectives(), better.objectives());
        assert_eq!(reference_front([&better, &a]).objectives(), better.objectives());
    }
}
