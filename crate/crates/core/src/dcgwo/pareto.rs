// SPDX-License-Identifier: Apache-2.0
//! Two-objective Pareto ranking (both objectives maximized) and crowding
//! distance.

use std::cmp::Ordering;

/// `a` dominates `b`: no worse in both objectives, strictly better in one.
pub fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 >= b.0 && a.1 >= b.1 && (a.0 > b.0 || a.1 > b.1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fronts {
    /// Indices into the input, rank 0 first, ascending within a front.
    pub fronts: Vec<Vec<usize>>,
    /// For each point, the indices of the points that dominate it.
    pub dominated_by: Vec<Vec<usize>>,
}

impl Fronts {
    pub fn rank_of(&self) -> Vec<usize> {
        let mut rank = vec![0; self.dominated_by.len()];
        for (r, f) in self.fronts.iter().enumerate() {
            for &i in f {
                rank[i] = r;
            }
        }
        rank
    }
}

/// Peels fronts by repeatedly taking the points whose dominator lists have
/// emptied, then striking them from every other list.
pub fn nondominated_sort(points: &[(f64, f64)]) -> Fronts {
    let n = points.len();
    let mut dominated_by = vec![Vec::new(); n];
    let mut dominates_list = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(points[i], points[j]) {
                dominated_by[j].push(i);
                dominates_list[i].push(j);
            }
        }
    }
    let mut remaining: Vec<usize> = dominated_by.iter().map(Vec::len).collect();
    let mut current: Vec<usize> = (0..n).filter(|&i| remaining[i] == 0).collect();
    let mut fronts = Vec::new();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                remaining[j] -= 1;
                if remaining[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    Fronts { fronts, dominated_by }
}

type Objective = fn(&(f64, f64)) -> f64;

/// Crowding distance of each member of one front. Each objective is sorted
/// descending (ties by `keys`); the ends of each sorted list get +inf and
/// interior members add the normalized gap between their neighbours.
pub fn crowding(front: &[(f64, f64)], keys: &[u64]) -> Vec<f64> {
    assert_eq!(front.len(), keys.len());
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let objectives: [Objective; 2] = [|p| p.0, |p| p.1];
    for f in objectives {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| f(&front[b]).total_cmp(&f(&front[a])).then(keys[a].cmp(&keys[b])));
        let hi = f(&front[order[0]]);
        let lo = f(&front[order[n - 1]]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for k in 1..n - 1 {
            let i = order[k];
            if dist[i].is_finite() {
                dist[i] += (f(&front[order[k - 1]]) - f(&front[order[k + 1]])) / range;
            }
        }
    }
    dist
}

/// Orders front members by crowding distance, largest first, ties by key.
pub fn by_crowding(dist: &[f64], keys: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&a, &b| match dist[b].partial_cmp(&dist[a]) {
        Some(Ordering::Equal) | None => keys[a].cmp(&keys[b]),
        Some(o) => o,
    });
    order
}
