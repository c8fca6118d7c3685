//! Non-parametric statistics: Kruskal-Wallis H test and the Vargha-Delaney
//! A12 effect size.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("exact permutation test limited to {max} observations, got {got}")]
    TooLargeForExact { max: usize, got: usize },
}

/// Mid-ranks (1-based) of `values`, ties sharing their average rank.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KruskalWallis {
    pub h: f64,
    pub p: f64,
}

fn check_groups(groups: &[Vec<f64>]) -> Result<(), StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(StatsError::EmptyGroup(i));
    }
    Ok(())
}

/// Tie-corrected H statistic; 0 when every observation is equal.
fn h_statistic(groups: &[Vec<f64>]) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let ranks = mid_ranks(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);

    let mut sorted = pooled;
    sorted.sort_by(f64::total_cmp);
    let ties: f64 = sorted
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let t = run.len() as f64;
            t * t * t - t
        })
        .sum();
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        0.0
    } else {
        (h / correction).max(0.0)
    }
}

/// Kruskal-Wallis test with the chi-squared approximation on `k - 1` degrees
/// of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KruskalWallis, StatsError> {
    check_groups(groups)?;
    let h = h_statistic(groups);
    if h == 0.0 {
        return Ok(KruskalWallis { h, p: 1.0 });
    }
    let chi = ChiSquared::new((groups.len() - 1) as f64).expect("positive degrees of freedom");
    Ok(KruskalWallis { h, p: chi.sf(h).clamp(0.0, 1.0) })
}

/// Largest pooled sample accepted by [`kruskal_wallis_exact`].
pub const EXACT_MAX_OBSERVATIONS: usize = 12;

/// Exact permutation p-value: the fraction of all assignments of the pooled
/// observations to groups of the observed sizes whose H is at least the observed H.
pub fn kruskal_wallis_exact(groups: &[Vec<f64>]) -> Result<KruskalWallis, StatsError> {
    check_groups(groups)?;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    if pooled.len() > EXACT_MAX_OBSERVATIONS {
        return Err(StatsError::TooLargeForExact { max: EXACT_MAX_OBSERVATIONS, got: pooled.len() });
    }
    let observed = h_statistic(groups);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let (mut extreme, mut total) = (0u64, 0u64);
    let mut label = vec![usize::MAX; pooled.len()];
    let mut fill = vec![0usize; sizes.len()];
    enumerate(0, &pooled, &sizes, &mut label, &mut fill, &mut |labels| {
        let mut gs: Vec<Vec<f64>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
        for (v, &g) in pooled.iter().zip(labels) {
            gs[g].push(*v);
        }
        total += 1;
        if h_statistic(&gs) >= observed - 1e-9 {
            extreme += 1;
        }
    });
    Ok(KruskalWallis { h: observed, p: extreme as f64 / total as f64 })
}

fn enumerate(
    i: usize,
    pooled: &[f64],
    sizes: &[usize],
    label: &mut Vec<usize>,
    fill: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if i == pooled.len() {
        visit(label);
        return;
    }
    for g in 0..sizes.len() {
        if fill[g] < sizes[g] {
            fill[g] += 1;
            label[i] = g;
            enumerate(i + 1, pooled, sizes, label, fill, visit);
            fill[g] -= 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    /// Vargha-Delaney thresholds 0.56 / 0.64 / 0.71 on the folded scale
    /// `|a12 - 0.5| + 0.5`.
    pub fn of(a12: f64) -> Self {
        let folded = (a12 - 0.5).abs() + 0.5;
        if folded < 0.56 {
            Magnitude::Negligible
        } else if folded < 0.64 {
            Magnitude::Small
        } else if folded < 0.71 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn letter(self) -> char {
        match self {
            Magnitude::Negligible => 'N',
            Magnitude::Small => 'S',
            Magnitude::Medium => 'M',
            Magnitude::Large => 'L',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub value: f64,
    pub magnitude: Magnitude,
}

/// Probability that an observation of `a` exceeds one of `b`, ties counting half.
///
/// # Panics
/// If either sample is empty.
pub fn a12(a: &[f64], b: &[f64]) -> EffectSize {
    assert!(!a.is_empty() && !b.is_empty(), "A12 needs non-empty samples");
    // rank-sum form, O((m + n) log(m + n)); the numerator is a half-integer
    // computed exactly, so the single division matches pair counting bit for bit
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = mid_ranks(&pooled);
    let (m, n) = (a.len() as f64, b.len() as f64);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let value = ((r1 - m * (m + 1.0) / 2.0) / (m * n)).clamp(0.0, 1.0);
    EffectSize { value, magnitude: Magnitude::of(value) }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_groups_keep_a_positive_p() {
        let groups: Vec<Vec<f64>> = (0..4).map(|g| (0..30).map(|i| f64::from(g * 100 + i)).collect()).collect();
        let kw = kruskal_wallis(&groups).unwrap();
        assert!(kw.p > 0.0 && kw.p < 1e-15, "{}", kw.p);
    }

    fn pairs(a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for x in a {
            for y in b {
                s += if x > y {
                    1.0
                } else if x == y {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s / (a.len() * b.len()) as f64
    }

    #[test]
    fn mid_ranks_with_ties() {
        assert_eq!(mid_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn identical_groups() {
        let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(kw.h, 0.0);
        assert_eq!(kw.p, 1.0);
        let flat = kruskal_wallis(&[vec![4.0; 3], vec![4.0; 5]]).unwrap();
        assert_eq!((flat.h, flat.p), (0.0, 1.0));
    }

    #[test]
    fn separated_groups_by_hand() {
        // ranks 1..3 vs 4..6: R = 6 and 15; H = 12/42 * (36/3 + 225/3) - 21 = 27/7
        let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((kw.h - 27.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(kruskal_wallis(&[vec![1.0]]), Err(StatsError::TooFewGroups));
        assert_eq!(kruskal_wallis(&[vec![1.0], vec![]]), Err(StatsError::EmptyGroup(1)));
        assert!(kruskal_wallis_exact(&[vec![1.0; 7], vec![2.0; 7]]).is_err());
    }

    #[test]
    fn exact_p_for_full_separation() {
        // only 2 of the 20 splits of six values are as extreme as 1,2,3 | 4,5,6
        let kw = kruskal_wallis_exact(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert!((kw.p - 0.1).abs() < 1e-12);
    }

    #[test]
    fn a12_cases() {
        let same = a12(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!((same.value, same.magnitude), (0.5, Magnitude::Negligible));
        let high = a12(&[5.0, 6.0], &[1.0, 2.0]);
        assert_eq!((high.value, high.magnitude), (1.0, Magnitude::Large));
        assert_eq!(a12(&[1.0, 2.0], &[2.0, 3.0]).value, pairs(&[1.0, 2.0], &[2.0, 3.0]));
        assert_eq!(a12(&[1.0, 2.0], &[2.0, 3.0]).value, 0.125);
    }

    #[test]
    fn magnitude_thresholds() {
        assert_eq!(Magnitude::of(0.55), Magnitude::Negligible);
        assert_eq!(Magnitude::of(0.56), Magnitude::Small);
        assert_eq!(Magnitude::of(0.36), Magnitude::Medium);
        assert_eq!(Magnitude::of(0.71), Magnitude::Large);
        assert_eq!(Magnitude::of(0.2), Magnitude::Large);
    }

    #[test]
    fn spread() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(std_dev(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(std_dev(&[4.0]), 0.0);
    }
}
