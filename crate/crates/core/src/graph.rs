//! Areal adjacency, the enumerated border set, and border-to-border adjacency.
//!
//! Areas are indexed `0..n_areas`. Borders (edges) are indexed by their
//! position in [`EdgeSet`], which lists every adjacent pair `(i, k)` with
//! `i < k` in lexicographic order. Every per-edge vector in the crate (the
//! adjacency weights, their logits, step-change probabilities) uses that
//! order.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

/// Symmetric binary adjacency over areal units with no isolated areas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AreaGraph {
    neighbors: Vec<Vec<usize>>,
}

impl AreaGraph {
    /// Builds the graph from a list of unordered area pairs.
    ///
    /// Duplicates and reversed duplicates collapse to one adjacency. A
    /// disconnected graph is accepted with a warning; an isolated area is not.
    pub fn from_pairs(n_areas: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n_areas];
        for &(i, k) in pairs {
            for idx in [i, k] {
                if idx >= n_areas {
                    return Err(Error::AreaOutOfRange {
                        index: idx,
                        n_areas,
                    });
                }
            }
            if i == k {
                return Err(Error::SelfLoop(i));
            }
            sets[i].insert(k);
            sets[k].insert(i);
        }
        let neighbors: Vec<Vec<usize>> =
            sets.into_iter().map(|s| s.into_iter().collect()).collect();
        if let Some(i) = neighbors.iter().position(Vec::is_empty) {
            return Err(Error::IsolatedArea(i));
        }
        let graph = AreaGraph { neighbors };
        let n_components = graph.n_components();
        if n_components > 1 {
            log::warn!("adjacency graph has {n_components} connected components");
        }
        Ok(graph)
    }

    /// Builds the graph from a dense 0/1 matrix given row by row.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut pairs = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "adjacency row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (k, &w) in row.iter().enumerate() {
                match w {
                    0 => {}
                    1 if i == k => return Err(Error::SelfLoop(i)),
                    1 => {
                        if rows[k][i] != 1 {
                            return Err(Error::domain(
                                "adjacency",
                                format!("matrix not symmetric at ({i}, {k})"),
                            ));
                        }
                        if i < k {
                            pairs.push((i, k));
                        }
                    }
                    other => {
                        return Err(Error::domain(
                            "adjacency",
                            format!("entry ({i}, {k}) = {other} is not 0/1"),
                        ))
                    }
                }
            }
        }
        Self::from_pairs(n, &pairs)
    }

    /// Rook-adjacency grid; area `r * ncol + c` sits at row `r`, column `c`.
    pub fn lattice(nrow: usize, ncol: usize) -> Result<Self> {
        if nrow == 0 || ncol == 0 || nrow * ncol < 2 {
            return Err(Error::domain(
                "lattice",
                format!("degenerate dimension {nrow}x{ncol}"),
            ));
        }
        let mut pairs = Vec::with_capacity(2 * nrow * ncol);
        for r in 0..nrow {
            for c in 0..ncol {
                let a = r * ncol + c;
                if c + 1 < ncol {
                    pairs.push((a, a + 1));
                }
                if r + 1 < nrow {
                    pairs.push((a, a + ncol));
                }
            }
        }
        Self::from_pairs(nrow * ncol, &pairs)
    }

    pub fn n_areas(&self) -> usize {
        self.neighbors.len()
    }

    /// Sorted neighbours of area `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn is_adjacent(&self, i: usize, k: usize) -> bool {
        self.neighbors[i].binary_search(&k).is_ok()
    }

    pub fn adjacency_lists(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    /// Dense 0/1 adjacency, mostly for tests and export.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let n = self.n_areas();
        let mut m = vec![vec![0u8; n]; n];
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &k in nb {
                m[i][k] = 1;
            }
        }
        m
    }

    pub fn n_components(&self) -> usize {
        let n = self.n_areas();
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(a) = stack.pop() {
                for &b in &self.neighbors[a] {
                    if !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        count
    }
}

/// Canonically ordered list of adjacent pairs `(i, k)`, `i < k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSet {
    edges: Vec<(usize, usize)>,
    n_areas: usize,
    /// For each area, `(neighbour, edge index)` sorted by neighbour.
    incident: Vec<Vec<(usize, usize)>>,
}

impl EdgeSet {
    pub fn from_graph(g: &AreaGraph) -> Self {
        let n = g.n_areas();
        let mut edges = Vec::new();
        for i in 0..n {
            for &k in g.neighbors(i) {
                if i < k {
                    edges.push((i, k));
                }
            }
        }
        let mut incident = vec![Vec::new(); n];
        for (e, &(i, k)) in edges.iter().enumerate() {
            incident[i].push((k, e));
            incident[k].push((i, e));
        }
        for list in &mut incident {
            list.sort_unstable();
        }
        EdgeSet {
            edges,
            n_areas: n,
            incident,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn n_areas(&self) -> usize {
        self.n_areas
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Edges touching area `i`, as `(other endpoint, edge index)`.
    pub fn incident(&self, i: usize) -> &[(usize, usize)] {
        &self.incident[i]
    }

    /// Index of the edge joining `i` and `k`, in either order.
    pub fn index_of(&self, i: usize, k: usize) -> Option<usize> {
        let (a, b) = if i < k { (i, k) } else { (k, i) };
        self.edges.binary_search(&(a, b)).ok()
    }

    /// Re-expands the edge list into a dense symmetric 0/1 matrix.
    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.n_areas]; self.n_areas];
        for &(i, k) in &self.edges {
            m[i][k] = 1;
            m[k][i] = 1;
        }
        m
    }
}

/// Adjacency between borders, used by the clustered boundary prior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGraph {
    neighbors: Vec<Vec<usize>>,
}

impl EdgeGraph {
    /// Two distinct borders are adjacent when they share an endpoint area.
    pub fn shared_endpoint(es: &EdgeSet) -> Self {
        let mut sets = vec![BTreeSet::new(); es.len()];
        for i in 0..es.n_areas() {
            let inc = es.incident(i);
            for (a, &(_, ea)) in inc.iter().enumerate() {
                for &(_, eb) in &inc[a + 1..] {
                    sets[ea].insert(eb);
                    sets[eb].insert(ea);
                }
            }
        }
        EdgeGraph {
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Geometric rule on a rook lattice: two borders are adjacent when their
    /// unit segments meet at a grid corner. `es` must come from
    /// `AreaGraph::lattice(nrow, ncol)`.
    pub fn lattice_corners(nrow: usize, ncol: usize, es: &EdgeSet) -> Result<Self> {
        if es.n_areas() != nrow * ncol {
            return Err(Error::Dimension(format!(
                "{} areas for a {nrow}x{ncol} lattice",
                es.n_areas()
            )));
        }
        let mut at_corner: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (e, &(a, b)) in es.edges().iter().enumerate() {
            let (r, c) = (a / ncol, a % ncol);
            let corners = if b == a + 1 && c + 1 < ncol {
                [(r, c + 1), (r + 1, c + 1)]
            } else if b == a + ncol {
                [(r + 1, c), (r + 1, c + 1)]
            } else {
                return Err(Error::domain(
                    "lattice",
                    format!("border ({a}, {b}) is not a rook adjacency"),
                ));
            };
            for p in corners {
                at_corner.entry(p).or_default().push(e);
            }
        }
        let mut pairs = Vec::new();
        for list in at_corner.values() {
            for (x, &ea) in list.iter().enumerate() {
                for &eb in &list[x + 1..] {
                    pairs.push((ea, eb));
                }
            }
        }
        Self::from_pairs(es.len(), &pairs)
    }

    /// Explicit border adjacency, e.g. from polygon geometry.
    pub fn from_pairs(n_edges: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut sets = vec![BTreeSet::new(); n_edges];
        for &(a, b) in pairs {
            for idx in [a, b] {
                if idx >= n_edges {
                    return Err(Error::EdgeOutOfRange {
                        index: idx,
                        n_edges,
                    });
                }
            }
            if a == b {
                return Err(Error::domain(
                    "edge adjacency",
                    format!("edge {a} adjacent to itself"),
                ));
            }
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Ok(EdgeGraph {
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, e: usize) -> &[usize] {
        &self.neighbors[e]
    }

    pub fn adjacency_lists(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// Number of unordered adjacent border pairs.
    pub fn n_pairs(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }
}
