//! Greedy modularity optimisation by local moving and aggregation.
//!
//! Each level moves single nodes to the neighbouring or empty community
//! with the largest modularity gain (visiting nodes in a seeded shuffle), then
//! collapses communities into weighted super-nodes whose self-loops carry
//! the internal weight. When the hierarchy stops improving, the result is
//! projected back onto the original nodes and local moving is re-run there;
//! if that moves anything, aggregation resumes from the improved partition.
//! The returned partition is therefore a local optimum with respect to
//! single-node moves on the input graph.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::rng::{self, Purpose};

#[derive(Clone, Debug, PartialEq)]
pub struct LouvainConfig {
    pub seed: u64,
    /// A node moves only if modularity rises by more than this.
    pub min_gain: f64,
    /// Cap on local-moving sweeps per level and on refinement rounds.
    pub max_passes: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            seed: 0,
            min_gain: 1e-7,
            max_passes: 100,
        }
    }
}

impl LouvainConfig {
    pub fn with_seed(seed: u64) -> Self {
        LouvainConfig {
            seed,
            ..Self::default()
        }
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn validate(&self) -> Result<()> {
        if !(self.min_gain > 0.0) || self.max_passes == 0 {
            return Err(Error::InvalidParams(format!(
                "louvain needs min_gain > 0 and max_passes > 0 (got {}, {})",
                self.min_gain, self.max_passes
            )));
        }
        Ok(())
    }
}

/// Weighted graph at one aggregation level. Self-loop weight is kept apart
/// from the neighbour lists.
#[derive(Clone, Debug)]
struct Level {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_graph(g: &Graph) -> Self {
        let n = g.node_count();
        let mut adj = vec![Vec::new(); n];
        let mut self_loops = vec![0.0; n];
        for e in g.edges() {
            if e.is_self_loop() {
                self_loops[e.u] += e.weight;
            } else {
                adj[e.u].push((e.v, e.weight));
                adj[e.v].push((e.u, e.weight));
            }
        }
        let degree = g.degrees();
        Level {
            adj,
            self_loops,
            degree,
        }
    }

    fn len(&self) -> usize {
        self.degree.len()
    }

    /// One super-node per community; `comm` must be dense in `0..k`.
    fn aggregate(&self, comm: &[usize], k: usize) -> Level {
        let mut self_loops = vec![0.0; k];
        let mut degree = vec![0.0; k];
        let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
        for u in 0..self.len() {
            let cu = comm[u];
            self_loops[cu] += self.self_loops[u];
            degree[cu] += self.degree[u];
            for &(v, w) in &self.adj[u] {
                let cv = comm[v];
                if cu == cv {
                    // each internal edge is seen from both ends
                    self_loops[cu] += 0.5 * w;
                } else {
                    buckets[cu].push((cv, w));
                }
            }
        }
        let adj = buckets
            .into_iter()
            .map(|mut b| {
                b.sort_by_key(|&(c, _)| c);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(b.len());
                for (c, w) in b {
                    match merged.last_mut() {
                        Some((last, acc)) if *last == c => *acc += w,
                        _ => merged.push((c, w)),
                    }
                }
                merged
            })
            .collect();
        Level {
            adj,
            self_loops,
            degree,
        }
    }
}

struct Mover<'a> {
    cfg: &'a LouvainConfig,
    total: f64,
    rng: ChaCha8Rng,
}

impl Mover<'_> {
    /// Local moving on `level` starting from `comm`. Returns whether any
    /// node changed community.
    fn local_moving(&mut self, level: &Level, comm: &mut [usize]) -> bool {
        let n = level.len();
        let m = self.total;
        let mut tot = vec![0.0; n];
        let mut size = vec![0usize; n];
        for u in 0..n {
            tot[comm[u]] += level.degree[u];
            size[comm[u]] += 1;
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut link = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;

        for _ in 0..self.cfg.max_passes {
            order.shuffle(&mut self.rng);
            let mut moved = false;
            for &u in &order {
                let k_u = level.degree[u];
                let home = comm[u];
                for &(v, w) in &level.adj[u] {
                    let c = comm[v];
                    if link[c] == 0.0 {
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[home] -= k_u;
                let gain = |c: usize, link_c: f64| link_c / m - tot[c] * k_u / (2.0 * m * m);
                let stay = gain(home, link[home]);
                touched.sort_unstable();
                let mut best = home;
                let mut best_gain = stay;
                for &c in &touched {
                    let g = gain(c, link[c]);
                    if g > best_gain {
                        best = c;
                        best_gain = g;
                    }
                }
                // an empty community has gain 0
                if best_gain < 0.0 && size[home] > 1 && -stay > self.cfg.min_gain {
                    best = size.iter().position(|&s| s == 0).unwrap_or(home);
                    best_gain = 0.0;
                }
                if best != home && best_gain - stay > self.cfg.min_gain {
                    comm[u] = best;
                    size[home] -= 1;
                    size[best] += 1;
                    moved = true;
                } else {
                    best = home;
                }
                tot[best] += k_u;
                for &c in &touched {
                    link[c] = 0.0;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
            moved_any = true;
        }
        moved_any
    }
}

/// Renumbers labels densely in order of first appearance.
fn compact(labels: &mut [usize]) -> usize {
    let mut map = vec![usize::MAX; labels.len()];
    let mut next = 0;
    for l in labels.iter_mut() {
        if map[*l] == usize::MAX {
            map[*l] = next;
            next += 1;
        }
        *l = map[*l];
    }
    next
}

/// Runs the base community detector on `g`.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn detect(g: &Graph, cfg: &LouvainConfig) -> Result<Partition> {
    cfg.validate()?;
    let total = g.total_weight();
    if !(total > 0.0) {
        return Err(Error::EmptyGraph);
    }
    let base = Level::from_graph(g);
    let mut mover = Mover {
        cfg,
        total,
        rng: rng::stream(cfg.seed, Purpose::Louvain, 0),
    };

    let mut membership: Vec<usize> = (0..base.len()).collect();
    for round in 0..cfg.max_passes {
        let mut comm = membership.clone();
        let moved = mover.local_moving(&base, &mut comm);
        if round > 0 && !moved {
            break;
        }
        let mut k = compact(&mut comm);
        membership = comm.clone();
        let mut level = base.aggregate(&comm, k);
        loop {
            let mut upper: Vec<usize> = (0..k).collect();
            if !mover.local_moving(&level, &mut upper) {
                break;
            }
            k = compact(&mut upper);
            for l in membership.iter_mut() {
                *l = upper[*l];
            }
            level = level.aggregate(&upper, k);
        }
    }
    Ok(Partition::from_labels(membership))
}
