use std::collections::BTreeSet;

use super::sparse::SymPattern;

/// Fill-reducing ordering applied before factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    #[default]
    MinimumDegree,
}

impl Ordering {
    /// Returns `perm` with `perm[new] = old`.
    pub fn permutation(self, pattern: &SymPattern) -> Vec<usize> {
        match self {
            Ordering::Natural => (0..pattern.dim()).collect(),
            Ordering::MinimumDegree => minimum_degree(pattern),
        }
    }
}

/// Greedy minimum-degree ordering on the explicit elimination graph.
///
/// Ties go to the lowest original index, so the result is deterministic.
pub fn minimum_degree(pattern: &SymPattern) -> Vec<usize> {
    let n = pattern.dim();
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| pattern.row(i).iter().copied().filter(|&k| k != i).collect())
        .collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (adj[i].len(), i)).collect();
    let mut perm = Vec::with_capacity(n);
    while let Some((_, v)) = queue.pop_first() {
        perm.push(v);
        let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &a in &nbrs {
            queue.remove(&(adj[a].len(), a));
            adj[a].remove(&v);
        }
        for (x, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[x + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            queue.insert((adj[a].len(), a));
        }
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AreaGraph;

    #[test]
    fn permutation_is_a_bijection() {
        let g = AreaGraph::lattice(6, 7).unwrap();
        let p = SymPattern::from_neighbors(g.adjacency_lists());
        let mut perm = minimum_degree(&p);
        perm.sort_unstable();
        assert_eq!(perm, (0..42).collect::<Vec<_>>());
    }

    #[test]
    fn star_center_is_not_eliminated_early() {
        let g = AreaGraph::from_pairs(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let p = SymPattern::from_neighbors(g.adjacency_lists());
        let perm = minimum_degree(&p);
        assert!(!perm[..3].contains(&0));
    }
}
