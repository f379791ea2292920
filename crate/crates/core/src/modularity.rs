//! Community and partition modularity on weighted graphs.
//!
//! With `e` the total edge weight, community `i` with internal weight
//! `e_in` and degree `d` scores `e_in / e - (d / 2e)^2`; a partition scores
//! the sum over its communities.

use crate::error::{Error, Result};
use crate::graph::{community_stats, CommunityStats, Graph};
use crate::partition::Partition;

fn term(stats: &CommunityStats, total: f64) -> f64 {
    let share = stats.degree / (2.0 * total);
    stats.internal_weight / total - share * share
}

fn checked_total(g: &Graph) -> Result<f64> {
    let total = g.total_weight();
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::EmptyGraph)
    }
}

/// Modularity contribution of community `community` of `p`.
pub fn community_modularity(g: &Graph, p: &Partition, community: usize) -> Result<f64> {
    let total = checked_total(g)?;
    if community >= p.community_count() {
        return Err(Error::InvalidPartition(format!(
            "community {community} does not exist ({} communities)",
            p.community_count()
        )));
    }
    let stats = community_stats(g, p)?;
    Ok(term(&stats[community], total))
}

/// Modularity of the whole partition.
pub fn partition_modularity(g: &Graph, p: &Partition) -> Result<f64> {
    let total = checked_total(g)?;
    let stats = community_stats(g, p)?;
    Ok(modularity_from_stats(&stats, total))
}

/// Sums per-community terms in community order.
pub fn modularity_from_stats(stats: &[CommunityStats], total_weight: f64) -> f64 {
    stats.iter().map(|s| term(s, total_weight)).sum()
}

/// Layer modularity in the equal-degree form `1 - 1/k - sum(e_out) / sum(d)`.
///
/// Matches [`partition_modularity`] exactly when every community has the
/// same degree, and approximates it otherwise.
pub fn balanced_layer_modularity(stats: &[CommunityStats]) -> f64 {
    let k = stats.len() as f64;
    let out: f64 = stats.iter().map(|s| s.outgoing_weight).sum();
    let deg: f64 = stats.iter().map(|s| s.degree).sum();
    1.0 - 1.0 / k - out / deg
}
