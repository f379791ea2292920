#![allow(dead_code)]

use std::collections::BTreeMap;

use hicode_lab::graph::Graph;
use hicode_lab::partition::Partition;
use proptest::prelude::*;

/// Graphs on 1..=max_nodes nodes with up to 3n edges, self-loops allowed,
/// weights either 1 or in [0.1, 5).
pub fn graph(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(|n| {
        let weight = prop_oneof![Just(1.0), 0.1f64..5.0];
        prop::collection::vec((0..n, 0..n, weight), 0..=3 * n).prop_map(move |raw| {
            let mut edges = BTreeMap::new();
            for (u, v, w) in raw {
                edges.insert((u.min(v), u.max(v)), w);
            }
            Graph::from_edges(n, edges.into_iter().map(|((u, v), w)| (u, v, w))).unwrap()
        })
    })
}

/// Graphs with at least one edge.
pub fn nonempty_graph(max_nodes: usize) -> impl Strategy<Value = Graph> {
    graph(max_nodes).prop_filter("needs an edge", |g| !g.is_edgeless())
}

pub fn partition_of(n: usize) -> impl Strategy<Value = Partition> {
    (1..=n.max(1)).prop_flat_map(move |k| {
        prop::collection::vec(0..k, n).prop_map(Partition::from_labels)
    })
}

pub fn graph_and_partition(max_nodes: usize) -> impl Strategy<Value = (Graph, Partition)> {
    nonempty_graph(max_nodes).prop_flat_map(|g| {
        let n = g.node_count();
        (Just(g), partition_of(n))
    })
}

pub fn two_partitions(max_nodes: usize) -> impl Strategy<Value = (Partition, Partition)> {
    (1..=max_nodes).prop_flat_map(|n| (partition_of(n), partition_of(n)))
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
