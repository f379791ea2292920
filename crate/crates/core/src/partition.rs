use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A total assignment of nodes `0..n` to disjoint, nonempty communities
/// labelled `0..k`.
///
/// One partition is one "layer" of communities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Builds a partition from labels that are already dense: every id in
    /// `0..k` must be used, where `k - 1` is the largest label.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let community_count = labels.iter().max().map_or(0, |&m| m + 1);
        let mut used = vec![false; community_count];
        for &c in &labels {
            used[c] = true;
        }
        if let Some(missing) = used.iter().position(|&u| !u) {
            return Err(Error::InvalidPartition(format!(
                "community id {missing} is empty (ids must be 0..{community_count} and all used)"
            )));
        }
        Ok(Partition {
            labels,
            community_count,
        })
    }

    /// Builds a partition from arbitrary labels, renumbering them densely
    /// while keeping their relative order (`{7, 2, 7, 9}` becomes `{1, 0, 1, 2}`).
    pub fn from_labels<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        let labels: Vec<usize> = labels.into_iter().collect();
        let mut ids = BTreeMap::new();
        for &l in &labels {
            ids.insert(l, 0usize);
        }
        for (dense, id) in ids.values_mut().enumerate() {
            *id = dense;
        }
        let community_count = ids.len();
        let labels = labels.into_iter().map(|l| ids[&l]).collect();
        Partition {
            labels,
            community_count,
        }
    }

    /// Every node in one community.
    pub fn single(node_count: usize) -> Self {
        Partition {
            labels: vec![0; node_count],
            community_count: usize::from(node_count > 0),
        }
    }

    /// Every node in its own community.
    pub fn singletons(node_count: usize) -> Self {
        Partition {
            labels: (0..node_count).collect(),
            community_count: node_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    #[inline]
    pub fn community_of(&self, node: usize) -> usize {
        self.labels[node]
    }

    #[inline]
    pub fn same_community(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.community_count];
        for &c in &self.labels {
            sizes[c] += 1;
        }
        sizes
    }

    /// Members of each community, in ascending node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.community_count];
        for (v, &c) in self.labels.iter().enumerate() {
            members[c].push(v);
        }
        members
    }

    /// True when both partitions group the nodes identically, whatever the
    /// community ids.
    pub fn is_equivalent(&self, other: &Partition) -> bool {
        if self.node_count() != other.node_count()
            || self.community_count != other.community_count
        {
            return false;
        }
        let mut forward = vec![usize::MAX; self.community_count];
        let mut backward = vec![usize::MAX; other.community_count];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            if forward[a] == usize::MAX && backward[b] == usize::MAX {
                forward[a] = b;
                backward[b] = a;
            } else if forward[a] != b || backward[b] != a {
                return false;
            }
        }
        true
    }

    pub(crate) fn check_node_count(&self, node_count: usize) -> Result<()> {
        if self.node_count() != node_count {
            return Err(Error::NodeCountMismatch {
                graph: node_count,
                partition: self.node_count(),
            });
        }
        Ok(())
    }
}
