//! Undirected weighted graphs with self-loops, and per-community edge
//! statistics.
//!
//! Edges are stored once per unordered pair with `u <= v`. A self-loop
//! `(u, u)` is an ordinary edge: it is internal to whichever community holds
//! `u`, adds its weight once to the internal weight and twice to the degree,
//! so `degree = 2 * internal + outgoing` holds for every community.

use crate::error::{Error, Result};
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    #[inline]
    pub fn is_self_loop(&self) -> bool {
        self.u == self.v
    }
}

/// An undirected weighted graph on nodes `0..node_count`.
///
/// Edges are kept sorted by `(u, v)` with `u <= v`; there are no duplicate
/// pairs and no zero-weight edges.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl Graph {
    /// A graph with no edges.
    pub fn empty(node_count: usize) -> Self {
        Graph {
            node_count,
            edges: Vec::new(),
        }
    }

    /// Builds a graph from `(u, v, weight)` triples in any order and
    /// orientation. Zero-weight edges are dropped; a repeated unordered
    /// pair is an error.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut out = Vec::new();
        for (u, v, weight) in edges {
            for node in [u, v] {
                if node >= node_count {
                    return Err(Error::NodeOutOfRange { node, node_count });
                }
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { u, v, weight });
            }
            if weight == 0.0 {
                continue;
            }
            let (u, v) = if u <= v { (u, v) } else { (v, u) };
            out.push(Edge { u, v, weight });
        }
        out.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = out.windows(2).find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v)) {
            return Err(Error::DuplicateEdge {
                u: w[0].u,
                v: w[0].v,
            });
        }
        Ok(Graph {
            node_count,
            edges: out,
        })
    }

    /// Unit-weight edges from node pairs.
    pub fn from_pairs<I>(node_count: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(node_count, pairs.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    /// Internal constructor for edge lists that are already canonical.
    pub(crate) fn from_sorted_unchecked(node_count: usize, edges: Vec<Edge>) -> Self {
        debug_assert!(edges
            .windows(2)
            .all(|w| (w[0].u, w[0].v) < (w[1].u, w[1].v)));
        debug_assert!(edges.iter().all(|e| e.u <= e.v && e.weight > 0.0));
        Graph { node_count, edges }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_edgeless(&self) -> bool {
        self.edges.is_empty()
    }

    /// Weight of edge `{u, v}`, if present.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let key = if u <= v { (u, v) } else { (v, u) };
        self.edges
            .binary_search_by_key(&key, |e| (e.u, e.v))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    /// Sum of edge weights; a self-loop counts once.
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Sum of incident weights per node (self-loops count twice).
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.node_count];
        for e in &self.edges {
            deg[e.u] += e.weight;
            deg[e.v] += e.weight;
        }
        deg
    }

    /// Neighbour lists `(neighbour, weight)`. A self-loop appears once in
    /// its node's list.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            adj[e.u].push((e.v, e.weight));
            if !e.is_self_loop() {
                adj[e.v].push((e.u, e.weight));
            }
        }
        adj
    }

    /// Returns a new graph whose edge weights are `f(edge)`; edges mapped
    /// to `None` or to zero are dropped.
    pub fn map_weights<F>(&self, mut f: F) -> Graph
    where
        F: FnMut(&Edge) -> Option<f64>,
    {
        let edges = self
            .edges
            .iter()
            .filter_map(|e| {
                let w = f(e)?;
                (w > 0.0).then_some(Edge { weight: w, ..*e })
            })
            .collect();
        Graph::from_sorted_unchecked(self.node_count, edges)
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Graph {
        self.map_weights(|e| Some(e.weight * factor))
    }
}

/// Edge statistics of one community.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CommunityStats {
    /// Weight of edges with both endpoints inside (self-loops included).
    pub internal_weight: f64,
    /// Weight of edges with exactly one endpoint inside.
    pub outgoing_weight: f64,
    /// `2 * internal_weight + outgoing_weight`.
    pub degree: f64,
}

/// Sum of edge weights of `g`.
pub fn total_weight(g: &Graph) -> f64 {
    g.total_weight()
}

/// Per-community internal weight, outgoing weight and degree, indexed by
/// community id.
pub fn community_stats(g: &Graph, p: &Partition) -> Result<Vec<CommunityStats>> {
    p.check_node_count(g.node_count())?;
    let mut stats = vec![CommunityStats::default(); p.community_count()];
    for e in g.edges() {
        let (cu, cv) = (p.community_of(e.u), p.community_of(e.v));
        if cu == cv {
            stats[cu].internal_weight += e.weight;
        } else {
            stats[cu].outgoing_weight += e.weight;
            stats[cv].outgoing_weight += e.weight;
        }
    }
    for s in &mut stats {
        s.degree = 2.0 * s.internal_weight + s.outgoing_weight;
    }
    Ok(stats)
}
