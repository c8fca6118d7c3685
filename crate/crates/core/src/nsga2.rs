//! Pareto dominance, non-dominated sorting and crowding distance for the
//! (minimise time, maximise score) objective space.

use crate::objectives::ObjectivePair;

/// `a` is no worse than `b` in both objectives and strictly better in one.
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    a.time <= b.time && a.score >= b.score && (a.time < b.time || a.score > b.score)
}

/// Partitions indices into fronts; front 0 is non-dominated, front `i + 1` is
/// non-dominated once fronts `0..=i` are removed. Indices ascend within a front.
pub fn fast_nondominated_sort(points: &[ObjectivePair]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (indices into `points`), in
/// the order of `front`.
///
/// Per objective, members are sorted (ties by index) and both extremes get
/// infinity; interior members add the gap between their neighbours divided by
/// the objective's range. A zero range adds nothing.
pub fn crowding_distance(points: &[ObjectivePair], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives: [fn(&ObjectivePair) -> f64; 2] = [|p| p.time, |p| p.score];
    for value in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(&points[front[a]]).total_cmp(&value(&points[front[b]])).then(front[a].cmp(&front[b])));
        let lo = value(&points[front[order[0]]]);
        let hi = value(&points[front[order[n - 1]]]);
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            let gap = value(&points[front[order[k + 1]]]) - value(&points[front[order[k - 1]]]);
            distance[order[k]] += gap / range;
        }
    }
    distance
}
