//! Simple undirected graphs in compressed adjacency form, and the random
//! graph models that produce them.

mod generate;
mod io;

use std::collections::BTreeMap;

pub use generate::{
    expected_edge_count, generate, type_assignment, EdgeRule, GenSpec, Model, TypeAssignment,
    DEFAULT_EDGE_LIMIT,
};
pub use io::{read_binary, read_edge_list, write_binary, write_edge_list, MAGIC, VERSION};

use crate::{Error, Result};

pub type VertexId = u32;

/// Immutable simple undirected graph.
///
/// Neighbours of `v` are `adjacency[offsets[v]..offsets[v + 1]]`, sorted
/// ascending; every edge appears in both endpoint lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<VertexId>,
}

impl Graph {
    /// Graph on `n` isolated vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            adjacency: Vec::new(),
        }
    }

    /// Builds a graph from undirected edges. Duplicate edges (in either
    /// orientation) are merged; loops and out-of-range endpoints are errors.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        if n > VertexId::MAX as usize {
            return Err(Error::Format(format!("{n} vertices exceed the u32 index range")));
        }
        for &(u, v) in edges {
            if u == v {
                return Err(Error::Format(format!("self-loop at vertex {u}")));
            }
            if u as usize >= n || v as usize >= n {
                return Err(Error::Format(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
        }
        let mut degree = vec![0usize; n];
        for &(u, v) in edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut adjacency = vec![0; offsets[n]];
        for &(u, v) in edges {
            adjacency[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            adjacency[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        let mut has_duplicates = false;
        for v in 0..n {
            let list = &mut adjacency[offsets[v]..offsets[v + 1]];
            list.sort_unstable();
            has_duplicates |= list.windows(2).any(|w| w[0] == w[1]);
        }
        let g = Self { offsets, adjacency };
        if has_duplicates {
            return Ok(g.dedup());
        }
        Ok(g)
    }

    fn dedup(self) -> Self {
        let n = self.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut adjacency = Vec::with_capacity(self.adjacency.len());
        offsets.push(0);
        for v in 0..n {
            let mut last = None;
            for &u in self.neighbors(v) {
                if last != Some(u) {
                    adjacency.push(u);
                    last = Some(u);
                }
            }
            offsets.push(adjacency.len());
        }
        Self { offsets, adjacency }
    }

    /// Assembles a graph from raw arrays, checking every structural invariant.
    pub fn from_parts(offsets: Vec<usize>, adjacency: Vec<VertexId>) -> Result<Self> {
        let g = Self { offsets, adjacency };
        g.validate()?;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.adjacency.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[VertexId] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn adjacency(&self) -> &[VertexId] {
        &self.adjacency
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as VertexId)).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u as VertexId, v))
        })
    }

    /// Checks simplicity, symmetry, sortedness and offset consistency.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.offsets.is_empty() || self.offsets[0] != 0 {
            return bad("offsets must start at 0".into());
        }
        if self.offsets.windows(2).any(|w| w[1] < w[0]) {
            return bad("offsets are not nondecreasing".into());
        }
        if *self.offsets.last().unwrap() != self.adjacency.len() {
            return bad("last offset does not match adjacency length".into());
        }
        let n = self.n();
        for v in 0..n {
            let list = self.neighbors(v);
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("neighbours of {v} are not strictly increasing"));
            }
            for &u in list {
                let u = u as usize;
                if u >= n {
                    return bad(format!("neighbour {u} of {v} out of range"));
                }
                if u == v {
                    return bad(format!("self-loop at {v}"));
                }
                if !self.has_edge(u, v) {
                    return bad(format!("edge {v}->{u} has no reverse"));
                }
            }
        }
        Ok(())
    }

    /// Subgraph induced by the vertices with `keep[v]`, on the same vertex set.
    pub fn induced(&self, keep: &[bool]) -> Self {
        let mut offsets = Vec::with_capacity(self.n() + 1);
        let mut adjacency = Vec::new();
        offsets.push(0);
        for v in 0..self.n() {
            if keep[v] {
                adjacency.extend(self.neighbors(v).iter().filter(|&&u| keep[u as usize]));
            }
            offsets.push(adjacency.len());
        }
        Self { offsets, adjacency }
    }
}

/// Exact degree histogram: degree → number of vertices.
pub fn degree_histogram(g: &Graph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for v in 0..g.n() {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn complete_graph_histogram() {
        let g = k4();
        assert_eq!(g.m(), 6);
        assert_eq!(degree_histogram(&g), BTreeMap::from([(3, 4)]));
        g.validate().unwrap();
    }

    #[test]
    fn empty_graph_histogram() {
        assert_eq!(degree_histogram(&Graph::empty(7)), BTreeMap::from([(0, 7)]));
    }

    #[test]
    fn rejects_loops_and_range() {
        assert!(Graph::from_edges(3, &[(1, 1)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn merges_duplicates() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (0, 1), (1, 2)]).unwrap();
        assert_eq!(g.m(), 2);
        g.validate().unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn validate_catches_asymmetry() {
        assert!(Graph::from_parts(vec![0, 1, 1], vec![1]).is_err());
        assert!(Graph::from_parts(vec![0, 1, 2], vec![1, 0]).is_ok());
        assert!(Graph::from_parts(vec![0, 2, 2], vec![1, 1]).is_err());
    }

    #[test]
    fn induced_subgraph() {
        let g = k4();
        let h = g.induced(&[true, true, false, true]);
        assert_eq!(h.n(), 4);
        assert_eq!(h.m(), 3);
        assert_eq!(h.degree(2), 0);
        h.validate().unwrap();
    }
}
