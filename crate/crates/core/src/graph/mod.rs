//! Immutable undirected contact networks in compressed adjacency form.

mod generate;
mod io;

pub use generate::{generate, GraphSpec};
pub use io::{load_edge_list, parse_edge_list, write_edge_list, LoadedGraph};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Undirected simple graph stored as an offset array plus a contiguous
/// neighbor array. Neighbor lists are sorted ascending and symmetric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
}

impl Graph {
    /// Builds a canonical graph from an arbitrary edge collection.
    ///
    /// Edges may appear in either orientation and more than once; duplicates
    /// collapse. Self-loops and out-of-range endpoints are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if node_count == 0 {
            return Err(Error::param("graph must have at least one node"));
        }
        let mut lists: Vec<Vec<NodeId>> = vec![Vec::new(); node_count];
        for (u, v) in edges {
            for x in [u, v] {
                if x >= node_count {
                    return Err(Error::Index {
                        index: x,
                        len: node_count,
                    });
                }
            }
            if u == v {
                return Err(Error::param(format!("self-loop on node {u}")));
            }
            lists[u].push(v);
            lists[v].push(u);
        }
        Ok(Self::from_lists(lists))
    }

    /// `lists` must be symmetric and loop-free; sorting and deduplication
    /// happen here.
    pub(crate) fn from_lists(mut lists: Vec<Vec<NodeId>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let mut total = 0;
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            total += list.len();
            offsets.push(total);
        }
        let mut neighbors = Vec::with_capacity(total);
        for list in lists {
            neighbors.extend(list);
        }
        Graph { offsets, neighbors }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        self.neighbors.len() as f64 / self.node_count() as f64
    }

    fn check(&self, v: NodeId) -> Result<()> {
        if v < self.node_count() {
            Ok(())
        } else {
            Err(Error::Index {
                index: v,
                len: self.node_count(),
            })
        }
    }

    pub fn degree(&self, v: NodeId) -> Result<usize> {
        self.check(v)?;
        Ok(self.offsets[v + 1] - self.offsets[v])
    }

    pub fn neighbors(&self, v: NodeId) -> Result<&[NodeId]> {
        self.check(v)?;
        Ok(self.adj(v))
    }

    /// Unchecked neighbor access for hot loops; panics when `v` is out of range.
    #[inline]
    pub(crate) fn adj(&self, v: NodeId) -> &[NodeId] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.adj(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.node_count() && self.adj(u).binary_search(&v).is_ok()
    }

    /// Local clustering coefficient averaged over all nodes; nodes of degree
    /// below two contribute zero.
    pub fn average_clustering(&self) -> f64 {
        let n = self.node_count();
        let mut total = 0.0;
        for u in 0..n {
            let nbrs = self.adj(u);
            let d = nbrs.len();
            if d < 2 {
                continue;
            }
            let mut links = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                let adj_a = self.adj(a);
                links += nbrs[i + 1..]
                    .iter()
                    .filter(|b| adj_a.binary_search(b).is_ok())
                    .count();
            }
            total += 2.0 * links as f64 / (d * (d - 1)) as f64;
        }
        total / n as f64
    }
}
