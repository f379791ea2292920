//! Layer weakening: removing, thinning or down-weighting the internal edges
//! of one layer, and the background-density estimate that sets how much
//! to keep.
//!
//! Cross-community edges are never touched by any method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rng::{PairUniform, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakenMethod {
    /// Drop every internal edge.
    RemoveEdge,
    /// Keep each internal edge independently with the keep fraction.
    ReduceEdge,
    /// Multiply each internal edge weight by the keep fraction.
    ReduceWeight,
}

/// How the keep fraction `f` is derived from a [`DensityEstimate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReduceFactorRule {
    /// `q / p`: thins internal density down to the background density.
    #[default]
    BackgroundRatio,
    /// `(1 - p) / (1 - q)`.
    NoiseComplement,
    /// `(p - q) / (1 - q)`, the estimated grounded probability.
    GroundedProbability,
    /// A fixed fraction, independent of the graph.
    Fixed(f64),
}

/// Observed edge densities inside and across the communities of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    /// Internal edge weight per internal node pair.
    pub p_hat: f64,
    /// Cross edge weight per cross node pair.
    pub q_hat: f64,
    /// `(p_hat - q_hat) / (1 - q_hat)`.
    pub p_true: f64,
}

impl DensityEstimate {
    pub fn from_densities(p_hat: f64, q_hat: f64) -> Result<Self> {
        if q_hat >= 1.0 {
            return Err(Error::SaturatedBackground);
        }
        Ok(DensityEstimate {
            p_hat,
            q_hat,
            p_true: (p_hat - q_hat) / (1.0 - q_hat),
        })
    }
}

/// Internal pairs count `sum s_i^2 / 2` (self-pairs at half weight, as the
/// generator samples them); cross pairs count `(n^2 - sum s_i^2) / 2`.
pub fn estimate_densities(g: &Graph, p: &Partition) -> Result<DensityEstimate> {
    p.check_node_count(g.node_count())?;
    if p.community_count() < 2 {
        return Err(Error::DegeneratePartition(format!(
            "need at least 2 communities, got {}",
            p.community_count()
        )));
    }
    let n = p.node_count() as f64;
    let square_sum: f64 = p.sizes().iter().map(|&s| (s * s) as f64).sum();
    let internal_pairs = square_sum / 2.0;
    let cross_pairs = (n * n - square_sum) / 2.0;

    let (mut internal, mut cross) = (0.0, 0.0);
    for e in g.edges() {
        if p.same_community(e.u, e.v) {
            internal += e.weight;
        } else {
            cross += e.weight;
        }
    }
    DensityEstimate::from_densities(internal / internal_pairs, cross / cross_pairs)
}

/// The fraction of internal edges (or weight) to keep, clamped to `[0, 1]`.
pub fn keep_fraction(d: &DensityEstimate, rule: ReduceFactorRule) -> f64 {
    let f = match rule {
        ReduceFactorRule::BackgroundRatio => {
            if d.p_hat <= 0.0 {
                return 1.0;
            }
            d.q_hat / d.p_hat
        }
        ReduceFactorRule::NoiseComplement => (1.0 - d.p_hat) / (1.0 - d.q_hat),
        ReduceFactorRule::GroundedProbability => (d.p_hat - d.q_hat) / (1.0 - d.q_hat),
        ReduceFactorRule::Fixed(f) => f,
    };
    if f.is_nan() {
        1.0
    } else {
        f.clamp(0.0, 1.0)
    }
}

/// Keep fraction for `rule` on layer `p` of `g`. Fixed rules skip the
/// density estimate.
pub fn layer_keep_fraction(g: &Graph, p: &Partition, rule: ReduceFactorRule) -> Result<f64> {
    match rule {
        ReduceFactorRule::Fixed(f) => {
            p.check_node_count(g.node_count())?;
            Ok(if f.is_nan() { 1.0 } else { f.clamp(0.0, 1.0) })
        }
        _ => Ok(keep_fraction(&estimate_densities(g, p)?, rule)),
    }
}

/// Drops every edge internal to a community of `p`.
pub fn remove_edge(g: &Graph, p: &Partition) -> Result<Graph> {
    p.check_node_count(g.node_count())?;
    Ok(g.map_weights(|e| (!p.same_community(e.u, e.v)).then_some(e.weight)))
}

/// Keeps each internal edge with probability `keep`; the draw for an edge
/// depends only on `(seed, u, v)`.
pub fn reduce_edge_by(g: &Graph, p: &Partition, keep: f64, seed: u64) -> Result<Graph> {
    p.check_node_count(g.node_count())?;
    let mut draws = PairUniform::new(seed, Purpose::ReduceEdge);
    Ok(g.map_weights(|e| {
        if !p.same_community(e.u, e.v) || draws.draw(e.u, e.v) < keep {
            Some(e.weight)
        } else {
            None
        }
    }))
}

/// Multiplies every internal edge weight by `keep`.
pub fn reduce_weight_by(g: &Graph, p: &Partition, keep: f64) -> Result<Graph> {
    p.check_node_count(g.node_count())?;
    Ok(g.map_weights(|e| {
        Some(if p.same_community(e.u, e.v) {
            e.weight * keep
        } else {
            e.weight
        })
    }))
}

pub fn reduce_edge(g: &Graph, p: &Partition, rule: ReduceFactorRule, seed: u64) -> Result<Graph> {
    let keep = layer_keep_fraction(g, p, rule)?;
    reduce_edge_by(g, p, keep, seed)
}

pub fn reduce_weight(g: &Graph, p: &Partition, rule: ReduceFactorRule) -> Result<Graph> {
    let keep = layer_keep_fraction(g, p, rule)?;
    reduce_weight_by(g, p, keep)
}

/// Applies `method` to layer `p`. `seed` only matters for `ReduceEdge`.
pub fn weaken(
    g: &Graph,
    p: &Partition,
    method: WeakenMethod,
    rule: ReduceFactorRule,
    seed: u64,
) -> Result<Graph> {
    match method {
        WeakenMethod::RemoveEdge => remove_edge(g, p),
        WeakenMethod::ReduceEdge => reduce_edge(g, p, rule, seed),
        WeakenMethod::ReduceWeight => reduce_weight(g, p, rule),
    }
}
