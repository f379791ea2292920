//! Multi-layer stochastic block models.
//!
//! Every layer splits the `n` nodes into `n_l` equal communities. A node pair
//! becomes an edge independently with probability
//! `1 - prod_l (1 - p_l * [u, v share a community in layer l])`, so pairs
//! internal to no layer never connect. Self-pairs are drawn with half that
//! probability, which makes the expected number of internal pairs of a
//! community of size `s` exactly `s^2 / 2`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph};
use crate::partition::Partition;
use crate::rng::{self, PairUniform, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub num_communities: usize,
    pub edge_prob: f64,
}

impl LayerSpec {
    pub fn new(num_communities: usize, edge_prob: f64) -> Self {
        LayerSpec {
            num_communities,
            edge_prob,
        }
    }
}

/// How layers after the first are laid over the first (contiguous) layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Node `v` joins community `v mod n_l`. Needs `n` divisible by the
    /// product of all community counts, which makes every intersection of
    /// a layer-0 and a layer-`l` community exactly `n / (n_0 n_l)` nodes.
    Striped,
    /// A uniformly random permutation of a balanced assignment.
    RandomBalanced,
    /// Random, but every intersection with a layer-0 community has
    /// `floor(r)` or `ceil(r)` nodes, `r = n / (n_0 n_l)`.
    Stratified,
}

impl Placement {
    /// `Striped` when the divisibility condition holds, else `RandomBalanced`.
    pub fn auto(n: usize, layers: &[LayerSpec]) -> Placement {
        if striped_divides(n, layers) {
            Placement::Striped
        } else {
            Placement::RandomBalanced
        }
    }
}

fn striped_divides(n: usize, layers: &[LayerSpec]) -> bool {
    layers
        .iter()
        .try_fold(1usize, |acc, l| acc.checked_mul(l.num_communities))
        .is_some_and(|prod| prod > 0 && n.is_multiple_of(prod))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
    pub placement: Placement,
}

impl SbmParams {
    pub fn new(n: usize, layers: Vec<LayerSpec>, seed: u64, placement: Placement) -> Self {
        SbmParams {
            n,
            layers,
            seed,
            placement,
        }
    }

    /// Two-layer model `G(n, n1, n2, p1, p2)`.
    pub fn two_layer(
        n: usize,
        n1: usize,
        n2: usize,
        p1: f64,
        p2: f64,
        seed: u64,
        placement: Placement,
    ) -> Self {
        Self::new(
            n,
            vec![LayerSpec::new(n1, p1), LayerSpec::new(n2, p2)],
            seed,
            placement,
        )
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SbmParams {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.layers.is_empty() {
            return bad("at least one layer is required".into());
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.num_communities < 2 {
                return bad(format!(
                    "layer {i}: needs at least 2 communities, got {}",
                    l.num_communities
                ));
            }
            if !(0.0..=1.0).contains(&l.edge_prob) {
                return bad(format!(
                    "layer {i}: edge probability {} not in [0, 1]",
                    l.edge_prob
                ));
            }
            if !self.n.is_multiple_of(l.num_communities) {
                return bad(format!(
                    "layer {i}: n = {} is not divisible by {} communities",
                    self.n, l.num_communities
                ));
            }
        }
        if self.placement == Placement::Striped && !striped_divides(self.n, &self.layers) {
            return bad(format!(
                "striped placement needs n = {} divisible by the product of community counts",
                self.n
            ));
        }
        Ok(())
    }
}

/// The planted layers, in the order of [`SbmParams::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub layers: Vec<Partition>,
}

impl GroundTruth {
    pub fn node_count(&self) -> usize {
        self.layers.first().map_or(0, Partition::node_count)
    }

    pub(crate) fn two_layers(&self) -> Result<(&Partition, &Partition)> {
        match self.layers.as_slice() {
            [a, b] => Ok((a, b)),
            other => Err(Error::LayerCount(other.len())),
        }
    }
}

/// Assigns every node to one community per layer.
pub fn plant_layers(params: &SbmParams) -> Result<GroundTruth> {
    params.validate()?;
    let n = params.n;
    let first = params.layers[0].num_communities;
    let block = n / first;
    let mut layers = vec![Partition::new((0..n).map(|v| v / block).collect())?];

    for (l, spec) in params.layers.iter().enumerate().skip(1) {
        let k = spec.num_communities;
        let mut rng = rng::stream(params.seed, Purpose::Placement, l as u64);
        let labels = match params.placement {
            Placement::Striped => (0..n).map(|v| v % k).collect(),
            Placement::RandomBalanced => {
                let mut labels: Vec<usize> = (0..n).map(|v| v / (n / k)).collect();
                labels.shuffle(&mut rng);
                labels
            }
            Placement::Stratified => stratified_labels(n, first, k, &mut rng),
        };
        layers.push(Partition::new(labels)?);
    }
    Ok(GroundTruth { layers })
}

/// Labels for a layer of `k` communities whose intersections with the
/// `rows` contiguous base communities differ in size by at most one.
fn stratified_labels<R: Rng>(n: usize, rows: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let row_size = n / rows;
    let floor = row_size / k;
    let extra = row_size - k * floor;

    // Spread the `rows * extra` oversized cells over columns cyclically;
    // each row then gets `extra` distinct columns and each column the same
    // count, `rows * extra / k`.
    let mut row_order: Vec<usize> = (0..rows).collect();
    row_order.shuffle(rng);
    let mut column_names: Vec<usize> = (0..k).collect();
    column_names.shuffle(rng);

    let mut labels = vec![0; n];
    for (slot_row, &row) in row_order.iter().enumerate() {
        let mut cells: Vec<usize> = (0..k)
            .flat_map(|c| std::iter::repeat_n(column_names[c], floor))
            .collect();
        for j in 0..extra {
            cells.push(column_names[(slot_row * extra + j) % k]);
        }
        cells.shuffle(rng);
        labels[row * row_size..(row + 1) * row_size].copy_from_slice(&cells);
    }
    labels
}

/// Probability that `u` and `v` (possibly equal) form an edge, before the
/// self-pair halving.
fn pair_probability(layers: &[LayerSpec], truth: &GroundTruth, u: usize, v: usize) -> f64 {
    let miss: f64 = layers
        .iter()
        .zip(&truth.layers)
        .filter(|(_, p)| p.same_community(u, v))
        .map(|(l, _)| 1.0 - l.edge_prob)
        .product();
    1.0 - miss
}

/// Samples a graph and its planted layers. Deterministic in `params.seed`,
/// whatever the size of the rayon pool.
pub fn generate(params: &SbmParams) -> Result<(Graph, GroundTruth)> {
    let truth = plant_layers(params)?;
    let n = params.n;
    let rows: Vec<Vec<Edge>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut draws = PairUniform::new(params.seed, Purpose::EdgeSample);
            let mut row = Vec::new();
            for v in u..n {
                let mut p = pair_probability(&params.layers, &truth, u, v);
                if p == 0.0 {
                    continue;
                }
                if u == v {
                    p *= 0.5;
                }
                if draws.draw(u, v) < p {
                    row.push(Edge { u, v, weight: 1.0 });
                }
            }
            row
        })
        .collect();
    let graph = Graph::from_sorted_unchecked(n, rows.concat());
    Ok((graph, truth))
}

/// Expected per-community edge counts and the resulting layer modularity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LayerExpectation {
    pub internal: f64,
    pub outgoing: f64,
    pub degree: f64,
    pub modularity: f64,
}

impl LayerExpectation {
    fn new(num_communities: usize, internal: f64, outgoing: f64) -> Self {
        let degree = 2.0 * internal + outgoing;
        let modularity = 1.0 - 1.0 / num_communities as f64 - outgoing / degree;
        LayerExpectation {
            internal,
            outgoing,
            degree,
            modularity,
        }
    }
}

fn two_layer_specs(params: &SbmParams) -> Result<(LayerSpec, LayerSpec)> {
    params.validate()?;
    match params.layers.as_slice() {
        [a, b] => Ok((*a, *b)),
        other => Err(Error::LayerCount(other.len())),
    }
}

/// Closed-form two-layer expectations, assuming every intersection of a
/// layer-1 and a layer-2 community holds exactly `n / (n1 n2)` nodes.
///
/// For layer 1, with `s1 = n / n1`, `m1 = s1^2 / 2` and
/// `p12 = p1 + p2 - p1 p2`:
/// `e_in = (1 - 1/n2) m1 p1 + (1/n2) m1 p12`,
/// `e_out = (p2 / n2) s1 (n - s1)` and `Q = 1 - 1/n1 - e_out / d`.
/// Layer 2 is symmetric.
pub fn expected_stats(params: &SbmParams) -> Result<[LayerExpectation; 2]> {
    let (a, b) = two_layer_specs(params)?;
    let n = params.n as f64;
    let p12 = a.edge_prob + b.edge_prob - a.edge_prob * b.edge_prob;
    let side = |this: LayerSpec, other: LayerSpec| {
        let s = n / this.num_communities as f64;
        let m = s * s / 2.0;
        let k_other = other.num_communities as f64;
        let internal = (1.0 - 1.0 / k_other) * m * this.edge_prob + m * p12 / k_other;
        let outgoing = other.edge_prob / k_other * s * (n - s);
        LayerExpectation::new(this.num_communities, internal, outgoing)
    };
    Ok([side(a, b), side(b, a)])
}

/// Sum over the other layer's communities of the expected squared
/// intersection size with one community of `this` layer.
fn intersection_second_moment(
    params: &SbmParams,
    this: LayerSpec,
    other: LayerSpec,
    this_is_base: bool,
) -> f64 {
    let n = params.n;
    let (s_this, s_other) = (n / this.num_communities, n / other.num_communities);
    let k_other = other.num_communities as f64;
    match params.placement {
        Placement::Striped => {
            let r = (n / (this.num_communities * other.num_communities)) as f64;
            k_other * r * r
        }
        Placement::RandomBalanced => {
            // hypergeometric: s_this draws from n nodes, s_other marked
            let (nf, a, b) = (n as f64, s_this as f64, s_other as f64);
            let mean = a * b / nf;
            let var = a * (b / nf) * (1.0 - b / nf) * (nf - a) / (nf - 1.0);
            k_other * (var + mean * mean)
        }
        Placement::Stratified => {
            let (base_k, layer_k) = if this_is_base {
                (this.num_communities, other.num_communities)
            } else {
                (other.num_communities, this.num_communities)
            };
            let floor = n / (base_k * layer_k);
            let big = s_this - other.num_communities * floor;
            let small = other.num_communities - big;
            (big * (floor + 1) * (floor + 1) + small * floor * floor) as f64
        }
    }
}

/// Two-layer expectations that account for how intersections are actually
/// distributed under `params.placement`.
///
/// Edge counts are exact expectations over both the placement and the edge
/// draws; modularity uses the equal-degree form on those expectations.
/// For `Striped` this coincides with [`expected_stats`].
pub fn placement_expectation(params: &SbmParams) -> Result<[LayerExpectation; 2]> {
    let (a, b) = two_layer_specs(params)?;
    let n = params.n as f64;
    let p12 = a.edge_prob + b.edge_prob - a.edge_prob * b.edge_prob;
    let side = |this: LayerSpec, other: LayerSpec, is_base: bool| {
        let s = n / this.num_communities as f64;
        let s_other = n / other.num_communities as f64;
        let second = intersection_second_moment(params, this, other, is_base);
        let overlap = second / 2.0;
        let internal = (s * s / 2.0 - overlap) * this.edge_prob + overlap * p12;
        let outgoing = other.edge_prob * (s * s_other - second);
        LayerExpectation::new(this.num_communities, internal, outgoing)
    };
    Ok([side(a, b, true), side(b, a, false)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn striped_matches_worked_example() {
        let params = SbmParams::two_layer(200, 4, 5, 0.12, 0.10, 0, Placement::Striped);
        let gt = plant_layers(&params).unwrap();
        assert_eq!(gt.layers[0].members()[0], (0..50).collect::<Vec<_>>());
        assert_eq!(
            gt.layers[1].members()[0],
            (0..200).step_by(5).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_layer_is_contiguous() {
        let params = SbmParams::new(12, vec![LayerSpec::new(3, 0.5)], 1, Placement::RandomBalanced);
        let gt = plant_layers(&params).unwrap();
        assert_eq!(gt.layers.len(), 1);
        assert_eq!(gt.layers[0].labels(), &[0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }

    #[test]
    fn striped_rejected_without_divisibility() {
        let params = SbmParams::two_layer(600, 15, 12, 0.1, 0.12, 0, Placement::Striped);
        assert!(matches!(plant_layers(&params), Err(Error::InvalidParams(_))));
        assert_eq!(Placement::auto(600, &params.layers), Placement::RandomBalanced);
        assert_eq!(
            Placement::auto(200, &[LayerSpec::new(4, 0.1), LayerSpec::new(5, 0.1)]),
            Placement::Striped
        );
    }

    #[test]
    fn parameter_validation() {
        let ok = SbmParams::two_layer(60, 3, 4, 0.5, 0.5, 0, Placement::RandomBalanced);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.layers[0].num_communities = 1;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.layers[1].edge_prob = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.layers[1].num_communities = 7;
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.layers.clear();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn random_balanced_layers_are_balanced() {
        let params = SbmParams::two_layer(600, 15, 12, 0.1, 0.12, 3, Placement::RandomBalanced);
        let gt = plant_layers(&params).unwrap();
        assert_eq!(gt.layers[0].sizes(), vec![40; 15]);
        assert_eq!(gt.layers[1].sizes(), vec![50; 12]);
    }

    #[test]
    fn stratified_intersections_differ_by_at_most_one() {
        let params = SbmParams::two_layer(600, 15, 12, 0.1, 0.12, 5, Placement::Stratified);
        let gt = plant_layers(&params).unwrap();
        assert_eq!(gt.layers[1].sizes(), vec![50; 12]);
        let mut cells = vec![vec![0usize; 12]; 15];
        for v in 0..600 {
            cells[gt.layers[0].community_of(v)][gt.layers[1].community_of(v)] += 1;
        }
        for row in &cells {
            assert!(row.iter().all(|&c| c == 3 || c == 4));
            assert_eq!(row.iter().filter(|&&c| c == 4).count(), 4);
        }
        for j in 0..12 {
            assert_eq!(cells.iter().filter(|r| r[j] == 4).count(), 5);
        }
    }

    #[test]
    fn full_probability_single_layer_is_complete_inside() {
        let params = SbmParams::new(9, vec![LayerSpec::new(3, 1.0)], 4, Placement::RandomBalanced);
        let (g, gt) = generate(&params).unwrap();
        for u in 0..9 {
            for v in u + 1..9 {
                let same = gt.layers[0].same_community(u, v);
                assert_eq!(g.weight(u, v).is_some(), same, "pair ({u}, {v})");
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let params = SbmParams::two_layer(120, 4, 5, 0.2, 0.3, 11, Placement::Striped);
        let (a, _) = generate(&params).unwrap();
        let (b, _) = generate(&params).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate(&params.with_seed(12)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn no_edges_outside_every_layer() {
        let params = SbmParams::two_layer(120, 4, 5, 0.5, 0.5, 2, Placement::RandomBalanced);
        let (g, gt) = generate(&params).unwrap();
        for e in g.edges() {
            assert!(gt.layers[0].same_community(e.u, e.v) || gt.layers[1].same_community(e.u, e.v));
        }
    }

    #[test]
    fn closed_form_worked_examples() {
        let params = SbmParams::two_layer(200, 4, 5, 0.12, 0.10, 0, Placement::Striped);
        let [l1, _] = expected_stats(&params).unwrap();
        assert!((l1.internal - 172.0).abs() < 1e-9);
        assert!((l1.outgoing - 150.0).abs() < 1e-9);

        let params = SbmParams::two_layer(600, 15, 12, 0.1, 0.12, 0, Placement::RandomBalanced);
        let [l1, l2] = expected_stats(&params).unwrap();
        assert!((l2.internal - 157.333_333).abs() < 1e-3);
        assert!((l2.outgoing - 183.333_333).abs() < 1e-3);
        assert!((l2.modularity - 0.5485).abs() < 1e-4);
        assert!((l1.modularity - 0.3711).abs() < 1e-4);
    }

    #[test]
    fn closed_form_needs_two_layers() {
        let params = SbmParams::new(12, vec![LayerSpec::new(3, 0.5)], 0, Placement::Striped);
        assert!(matches!(expected_stats(&params), Err(Error::LayerCount(1))));
    }

    #[test]
    fn placement_expectation_reduces_to_closed_form_when_striped() {
        let params = SbmParams::two_layer(200, 4, 5, 0.12, 0.10, 0, Placement::Striped);
        let exact = placement_expectation(&params).unwrap();
        let closed = expected_stats(&params).unwrap();
        for (x, y) in exact.iter().zip(&closed) {
            assert!((x.internal - y.internal).abs() < 1e-9);
            assert!((x.outgoing - y.outgoing).abs() < 1e-9);
        }
    }
}
