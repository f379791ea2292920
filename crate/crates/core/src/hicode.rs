//! The identify-then-refine meta-algorithm around a base detector.
//!
//! Identification runs the detector, records its partition as the next
//! layer and weakens that layer on the working graph, `L` times.
//! Refinement then re-estimates every layer from the original graph with
//! all other layers weakened, until the estimates stop changing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::louvain::{self, LouvainConfig};
use crate::metrics::nmi;
use crate::modularity::partition_modularity;
use crate::partition::Partition;
use crate::rng::{self, Purpose};
use crate::weaken::{weaken, ReduceFactorRule, WeakenMethod};

#[derive(Clone, Debug, PartialEq)]
pub struct HicodeConfig {
    pub num_layers: usize,
    pub base: LouvainConfig,
    pub method: WeakenMethod,
    pub rule: ReduceFactorRule,
    pub refine_rounds: usize,
    /// Refinement stops once every layer's NMI to its previous estimate
    /// reaches this value.
    pub convergence_nmi: f64,
    /// Seeds the random thinning of `ReduceEdge`.
    pub seed: u64,
}

impl Default for HicodeConfig {
    fn default() -> Self {
        HicodeConfig {
            num_layers: 2,
            base: LouvainConfig::default(),
            method: WeakenMethod::ReduceEdge,
            rule: ReduceFactorRule::BackgroundRatio,
            refine_rounds: 5,
            convergence_nmi: 0.999,
            seed: 0,
        }
    }
}

impl HicodeConfig {
    fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::InvalidParams("num_layers must be at least 1".into()));
        }
        if !(self.convergence_nmi > 0.0 && self.convergence_nmi <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "convergence_nmi {} not in (0, 1]",
                self.convergence_nmi
            )));
        }
        Ok(())
    }

    /// Base-detector settings for the `run`-th detector call.
    fn base_for(&self, run: u64) -> LouvainConfig {
        if run == 0 {
            return self.base.clone();
        }
        LouvainConfig {
            seed: rng::derive(self.base.seed, Purpose::Louvain, run),
            ..self.base.clone()
        }
    }

    fn weaken_seed(&self, run: u64, step: u64) -> u64 {
        rng::derive(self.seed, Purpose::Hicode, (run << 16) | step)
    }
}

/// One entry of the refinement trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerDiagnostics {
    /// 0 for identification, then 1, 2, ... for refinement rounds.
    pub round: usize,
    pub layer: usize,
    /// Modularity of the estimate on the original graph.
    pub modularity: f64,
    /// NMI between this estimate and the previous one of the same layer.
    pub nmi_to_previous: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub layers: Vec<Partition>,
    /// Set when the working graph ran out of edges before `num_layers`
    /// layers were found.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HicodeResult {
    pub layers: Vec<Partition>,
    pub history: Vec<LayerDiagnostics>,
    pub truncated: bool,
}

/// Called with each detector input and output; used to trace the search.
pub trait Observer {
    fn detected(&mut self, round: usize, layer: usize, input: &Graph, found: &Partition);
}

impl Observer for () {
    fn detected(&mut self, _: usize, _: usize, _: &Graph, _: &Partition) {}
}

fn detect_or_truncate(g: &Graph, cfg: &LouvainConfig) -> Result<Option<Partition>> {
    if g.is_edgeless() {
        return Ok(None);
    }
    match louvain::detect(g, cfg) {
        Ok(p) => Ok(Some(p)),
        Err(Error::EmptyGraph) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Identification stage.
pub fn identify(g: &Graph, cfg: &HicodeConfig) -> Result<Identification> {
    identify_observed(g, cfg, &mut ())
}

pub fn identify_observed(
    g: &Graph,
    cfg: &HicodeConfig,
    observer: &mut dyn Observer,
) -> Result<Identification> {
    cfg.validate()?;
    let mut current = g.clone();
    let mut layers = Vec::with_capacity(cfg.num_layers);
    for l in 0..cfg.num_layers {
        let run = l as u64;
        let Some(found) = detect_or_truncate(&current, &cfg.base_for(run))? else {
            return Ok(Identification {
                layers,
                truncated: true,
            });
        };
        observer.detected(0, l, &current, &found);
        if l + 1 < cfg.num_layers {
            current = weaken(&current, &found, cfg.method, cfg.rule, cfg.weaken_seed(run, 0))?;
        }
        layers.push(found);
    }
    Ok(Identification {
        layers,
        truncated: false,
    })
}

fn diagnostics(g: &Graph, round: usize, layers: &[Partition]) -> Result<Vec<LayerDiagnostics>> {
    layers
        .iter()
        .enumerate()
        .map(|(layer, p)| {
            Ok(LayerDiagnostics {
                round,
                layer,
                modularity: partition_modularity(g, p)?,
                nmi_to_previous: None,
            })
        })
        .collect()
}

/// Refinement stage, starting from `layers`.
pub fn refine(g: &Graph, layers: Vec<Partition>, cfg: &HicodeConfig) -> Result<HicodeResult> {
    refine_observed(g, layers, cfg, &mut ())
}

pub fn refine_observed(
    g: &Graph,
    mut layers: Vec<Partition>,
    cfg: &HicodeConfig,
    observer: &mut dyn Observer,
) -> Result<HicodeResult> {
    cfg.validate()?;
    let mut history = diagnostics(g, 0, &layers)?;
    let count = layers.len();
    if count < 2 {
        return Ok(HicodeResult {
            layers,
            history,
            truncated: false,
        });
    }
    for round in 1..=cfg.refine_rounds {
        let mut converged = true;
        for l in 0..count {
            let run = (round * count + l) as u64;
            let mut residual = g.clone();
            for (j, other) in layers.iter().enumerate().filter(|&(j, _)| j != l) {
                residual = weaken(
                    &residual,
                    other,
                    cfg.method,
                    cfg.rule,
                    cfg.weaken_seed(run, j as u64),
                )?;
            }
            let Some(found) = detect_or_truncate(&residual, &cfg.base_for(run))? else {
                return Ok(HicodeResult {
                    layers,
                    history,
                    truncated: true,
                });
            };
            observer.detected(round, l, &residual, &found);
            let similarity = nmi(&found, &layers[l])?;
            converged &= similarity >= cfg.convergence_nmi;
            history.push(LayerDiagnostics {
                round,
                layer: l,
                modularity: partition_modularity(g, &found)?,
                nmi_to_previous: Some(similarity),
            });
            layers[l] = found;
        }
        if converged {
            break;
        }
    }
    Ok(HicodeResult {
        layers,
        history,
        truncated: false,
    })
}

/// Identification followed by refinement.
pub fn run(g: &Graph, cfg: &HicodeConfig) -> Result<HicodeResult> {
    run_observed(g, cfg, &mut ())
}

pub fn run_observed(
    g: &Graph,
    cfg: &HicodeConfig,
    observer: &mut dyn Observer,
) -> Result<HicodeResult> {
    let found = identify_observed(g, cfg, observer)?;
    if found.truncated {
        let history = diagnostics(g, 0, &found.layers)?;
        return Ok(HicodeResult {
            layers: found.layers,
            history,
            truncated: true,
        });
    }
    refine_observed(g, found.layers, cfg, observer)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Graph {
        Graph::from_pairs(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap()
    }

    #[test]
    fn one_layer_is_a_single_detection() {
        let g = two_triangles();
        let cfg = HicodeConfig {
            num_layers: 1,
            base: LouvainConfig::with_seed(5),
            ..HicodeConfig::default()
        };
        let direct = louvain::detect(&g, &cfg.base).unwrap();
        let found = identify(&g, &cfg).unwrap();
        assert_eq!(found.layers, vec![direct.clone()]);
        let result = run(&g, &cfg).unwrap();
        assert_eq!(result.layers, vec![direct]);
        assert!(!result.truncated);
    }

    #[test]
    fn remove_edge_on_disjoint_triangles_truncates() {
        let cfg = HicodeConfig {
            method: WeakenMethod::RemoveEdge,
            ..HicodeConfig::default()
        };
        let found = identify(&two_triangles(), &cfg).unwrap();
        assert!(found.truncated);
        assert_eq!(found.layers.len(), 1);
        let result = run(&two_triangles(), &cfg).unwrap();
        assert!(result.truncated);
    }

    #[test]
    fn zero_layers_rejected() {
        let cfg = HicodeConfig {
            num_layers: 0,
            ..HicodeConfig::default()
        };
        assert!(identify(&two_triangles(), &cfg).is_err());
    }
}
