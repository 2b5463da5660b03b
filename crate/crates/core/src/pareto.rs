//! Pareto dominance, the external non-dominated archive, fast non-dominated
//! sorting and crowding distance. Both objectives are minimised.

use crate::fitness::{Individual, Objectives};

/// `u` dominates `v`: no worse in every objective, strictly better in one.
pub fn dominates(u: &[f64; 2], v: &[f64; 2]) -> bool {
    let no_worse = u[0] <= v[0] && u[1] <= v[1];
    let better = u[0] < v[0] || u[1] < v[1];
    no_worse && better
}

/// Items the archive can hold. `same_solution` identifies re-submissions of
/// an already archived solution, which are not stored twice.
pub trait ArchiveItem: Objectives {
    fn same_solution(&self, other: &Self) -> bool;
}

impl ArchiveItem for Individual {
    fn same_solution(&self, other: &Self) -> bool {
        self.fitness == other.fitness && self.tree == other.tree
    }
}

/// Raw points are always distinct solutions.
impl ArchiveItem for [f64; 2] {
    fn same_solution(&self, _other: &Self) -> bool {
        false
    }
}

/// External population: mutually non-dominated members in insertion order.
///
/// Distinct solutions sharing an objective vector are all kept.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoArchive<T> {
    members: Vec<T>,
}

impl<T> Default for ParetoArchive<T> {
    fn default() -> Self {
        ParetoArchive { members: Vec::new() }
    }
}

impl<T: ArchiveItem> ParetoArchive<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn members(&self) -> &[T] {
        &self.members
    }

    pub fn into_members(self) -> Vec<T> {
        self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Inserts `y` unless a member dominates it (or it is already stored),
    /// then drops every member `y` dominates. Returns whether `y` was added.
    pub fn update(&mut self, y: T) -> bool {
        let fy = y.objectives();
        if self
            .members
            .iter()
            .any(|m| dominates(&m.objectives(), &fy) || m.same_solution(&y))
        {
            return false;
        }
        self.members.retain(|m| !dominates(&fy, &m.objectives()));
        self.members.push(y);
        true
    }

    /// Value-returning form of [`update`](Self::update).
    pub fn updated(mut self, y: T) -> (Self, bool) {
        let accepted = self.update(y);
        (self, accepted)
    }

    pub fn objective_vectors(&self) -> Vec<[f64; 2]> {
        self.members.iter().map(|m| m.objectives()).collect()
    }
}

/// Indices of points not dominated by any other point.
pub fn nondominated_filter<T: Objectives>(points: &[T]) -> Vec<usize> {
    let objs: Vec<[f64; 2]> = points.iter().map(|p| p.objectives()).collect();
    (0..objs.len())
        .filter(|&i| !objs.iter().any(|o| dominates(o, &objs[i])))
        .collect()
}

/// Fronts of the fast non-dominated sort; front 0 is the non-dominated set.
/// Indices inside each front are ascending.
pub fn fast_nondominated_sort<T: Objectives>(points: &[T]) -> Vec<Vec<usize>> {
    let objs: Vec<[f64; 2]> = points.iter().map(|p| p.objectives()).collect();
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objs[i], &objs[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&objs[j], &objs[i]) {
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

/// Crowding distance of each point in a front.
///
/// Per objective the extreme points get `+∞`; interior points add the gap
/// between their neighbours divided by the objective's range. An objective
/// that is constant across the front contributes nothing.
pub fn crowding_distance<T: Objectives>(front: &[T]) -> Vec<f64> {
    let n = front.len();
    let objs: Vec<[f64; 2]> = front.iter().map(|p| p.objectives()).collect();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    for m in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objs[a][m].total_cmp(&objs[b][m]).then(a.cmp(&b)));
        let lo = objs[order[0]][m];
        let hi = objs[order[n - 1]][m];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 || !range.is_finite() {
            continue;
        }
        for k in 1..n - 1 {
            let i = order[k];
            if dist[i].is_finite() {
                dist[i] += (objs[order[k + 1]][m] - objs[order[k - 1]][m]) / range;
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 3.0]));
        assert!(!dominates(&[1.0, 3.0], &[3.0, 1.0]));
        assert!(!dominates(&[3.0, 1.0], &[1.0, 3.0]));
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]));
    }

    #[test]
    fn archive_examples() {
        let mut a: ParetoArchive<[f64; 2]> = ParetoArchive::new();
        assert!(a.update([3.0, 7.0]));
        assert_eq!(a.len(), 1);

        let (a, ok) = ParetoArchive::new().updated([1.0, 5.0]);
        assert!(ok);
        let (a, ok) = a.updated([0.0, 6.0]);
        assert!(ok);
        assert_eq!(a.objective_vectors(), vec![[1.0, 5.0], [0.0, 6.0]]);

        let mut a = ParetoArchive::new();
        for p in [[1.0, 5.0], [2.0, 4.0], [3.0, 3.0]] {
            a.update(p);
        }
        // (1,3) dominates all three members, (1,5) included
        assert!(a.update([1.0, 3.0]));
        assert_eq!(a.objective_vectors(), vec![[1.0, 3.0]]);
        assert!(!a.update([2.0, 4.0]));

        let mut a = ParetoArchive::new();
        for p in [[1.0, 5.0], [2.0, 4.0], [3.0, 3.0]] {
            a.update(p);
        }
        assert!(a.update([2.0, 3.0]));
        assert_eq!(a.objective_vectors(), vec![[1.0, 5.0], [2.0, 3.0]]);
    }

    #[test]
    fn filter_examples() {
        let same = vec![[1.0, 1.0]; 4];
        assert_eq!(nondominated_filter(&same), vec![0, 1, 2, 3]);
        let chain: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 9.0 - i as f64]).collect();
        assert_eq!(nondominated_filter(&chain).len(), 10);
    }

    #[test]
    fn sort_examples() {
        let chain: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 9.0 - i as f64]).collect();
        assert_eq!(fast_nondominated_sort(&chain).len(), 1);
        let ordered = [[3.0, 3.0], [1.0, 1.0], [2.0, 2.0]];
        assert_eq!(fast_nondominated_sort(&ordered), vec![vec![1], vec![2], vec![0]]);
    }

    #[test]
    fn crowding_examples() {
        assert_eq!(crowding_distance(&[[1.0, 1.0]]), vec![f64::INFINITY]);
        assert_eq!(crowding_distance(&[[1.0, 1.0], [0.0, 2.0]]), vec![f64::INFINITY; 2]);
        let d = crowding_distance(&[[0.0, 2.0], [1.0, 1.0], [2.0, 0.0]]);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        assert!((d[1] - 2.0).abs() < 1e-12);
        // constant second objective contributes nothing
        let d = crowding_distance(&[[0.0, 1.0], [1.0, 1.0], [3.0, 1.0]]);
        assert!((d[1] - 1.0).abs() < 1e-12);
    }

    fn point() -> impl Strategy<Value = [f64; 2]> {
        prop_oneof![
            (0i32..8, 0i32..8).prop_map(|(a, b)| [a as f64, b as f64]),
            (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b]),
        ]
    }

    proptest! {
        #[test]
        fn dominance_is_strict_partial_order(a in point(), b in point(), c in point()) {
            prop_assert!(!dominates(&a, &a));
            prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
            if dominates(&a, &b) && dominates(&b, &c) {
                prop_assert!(dominates(&a, &c));
            }
        }

        #[test]
        fn front_zero_matches_filter(pts in prop::collection::vec(point(), 1..60)) {
            let fronts = fast_nondominated_sort(&pts);
            prop_assert_eq!(&fronts[0], &nondominated_filter(&pts));
            let mut all: Vec<usize> = fronts.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..pts.len()).collect::<Vec<_>>());
        }

        #[test]
        fn crowding_permutation_invariant(pts in prop::collection::vec(point(), 1..30), rot in 0usize..30) {
            let d = crowding_distance(&pts);
            let k = rot % pts.len();
            let mut rotated = pts.clone();
            rotated.rotate_left(k);
            let dr = crowding_distance(&rotated);
            for i in 0..pts.len() {
                let j = (i + pts.len() - k) % pts.len();
                // equal coordinates may swap boundary roles, so compare only distinct-point fronts
                let distinct = pts.iter().filter(|p| p[0] == pts[i][0] || p[1] == pts[i][1]).count() == 1;
                if distinct {
                    prop_assert!((d[i] - dr[j]).abs() < 1e-12 || (d[i].is_infinite() && dr[j].is_infinite()));
                }
            }
        }
    }
}
