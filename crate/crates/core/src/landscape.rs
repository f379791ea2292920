//! Modularity landscapes around two planted layers.
//!
//! Partitions are sampled near each layer (by random label swaps and
//! reassignments) and between them (by mixing the two labelings), then
//! placed on the plane by their NMI with layer 1 (x) and layer 2 (y) and
//! scored by modularity on the graph under study.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hicode::{self, HicodeConfig, Observer};
use crate::metrics::nmi;
use crate::modularity::partition_modularity;
use crate::partition::Partition;
use crate::rng::{self, Purpose};
use crate::sbm::GroundTruth;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SampleKind {
    PerturbedFrom1,
    PerturbedFrom2,
    Mixed,
    /// A planted layer itself.
    Reference1,
    Reference2,
    /// The partition the detector returned at this stage.
    Marker,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::PerturbedFrom1 => "perturbed1",
            SampleKind::PerturbedFrom2 => "perturbed2",
            SampleKind::Mixed => "mixed",
            SampleKind::Reference1 => "reference1",
            SampleKind::Reference2 => "reference2",
            SampleKind::Marker => "marker",
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SampleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "perturbed1" => SampleKind::PerturbedFrom1,
            "perturbed2" => SampleKind::PerturbedFrom2,
            "mixed" => SampleKind::Mixed,
            "reference1" => SampleKind::Reference1,
            "reference2" => SampleKind::Reference2,
            "marker" => SampleKind::Marker,
            other => return Err(format!("unknown sample kind {other:?}")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandscapeSample {
    pub kind: SampleKind,
    /// Mutation count, or the number of nodes taking layer-1 labels for
    /// mixed samples.
    pub k: usize,
    pub nmi1: f64,
    pub nmi2: f64,
    pub q: f64,
}

/// Sample counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LandscapeConfig {
    /// Perturbed samples use `k = 1..=max_mutations`.
    pub max_mutations: usize,
    /// Samples per `k` per layer.
    pub replicates: usize,
    pub mixed: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            max_mutations: 500,
            replicates: 4,
            mixed: 1200,
        }
    }
}

impl LandscapeConfig {
    pub fn sample_count(&self) -> usize {
        2 * self.max_mutations * self.replicates + self.mixed
    }
}

fn perturb_labels<R: Rng>(labels: &mut [usize], communities: usize, k: usize, rng: &mut R) {
    let n = labels.len();
    for _ in 0..k {
        if rng.random_bool(0.5) {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            labels.swap(a, b);
        } else {
            let v = rng.random_range(0..n);
            let shift = rng.random_range(1..communities);
            labels[v] = (labels[v] + shift) % communities;
        }
    }
}

/// Applies `k` random mutations to `p`. Each is, with equal chance, a swap
/// of two random nodes' labels or a move of one random node to a uniformly
/// chosen different community. Communities emptied along the way vanish.
pub fn sample_perturbed(p: &Partition, k: usize, seed: u64) -> Partition {
    let mut labels = p.labels().to_vec();
    if p.community_count() >= 2 {
        let mut rng = rng::stream(seed, Purpose::Landscape, 0);
        perturb_labels(&mut labels, p.community_count(), k, &mut rng);
    }
    Partition::from_labels(labels)
}

/// `k` uniformly chosen nodes keep their layer-1 community, the others
/// their layer-2 community; the two label sets are kept apart.
pub fn sample_mixed(l1: &Partition, l2: &Partition, k: usize, seed: u64) -> Result<Partition> {
    let n = l1.node_count();
    l2.check_node_count(n)?;
    if k > n {
        return Err(Error::InvalidParams(format!("mix count {k} exceeds {n} nodes")));
    }
    let mut rng = rng::stream(seed, Purpose::Landscape, 1);
    let offset = l1.community_count();
    let mut labels: Vec<usize> = l2.labels().iter().map(|&c| c + offset).collect();
    for v in index::sample(&mut rng, n, k) {
        labels[v] = l1.community_of(v);
    }
    Ok(Partition::from_labels(labels))
}

fn project(
    g: &Graph,
    truth: (&Partition, &Partition),
    p: &Partition,
    kind: SampleKind,
    k: usize,
) -> Result<LandscapeSample> {
    Ok(LandscapeSample {
        kind,
        k,
        nmi1: nmi(p, truth.0)?,
        nmi2: nmi(p, truth.1)?,
        q: partition_modularity(g, p)?,
    })
}

/// The default-sized landscape: 2000 samples around each layer, 1200
/// mixed samples, then the two planted layers as reference rows.
pub fn build_landscape(g: &Graph, truth: &GroundTruth, seed: u64) -> Result<Vec<LandscapeSample>> {
    build_landscape_with(g, truth, &LandscapeConfig::default(), seed)
}

/// Samples are ordered by kind, then `k`, then replicate; each draws from
/// its own derived seed so the order of evaluation does not matter.
pub fn build_landscape_with(
    g: &Graph,
    truth: &GroundTruth,
    cfg: &LandscapeConfig,
    seed: u64,
) -> Result<Vec<LandscapeSample>> {
    let (l1, l2) = truth.two_layers()?;
    l1.check_node_count(g.node_count())?;
    let n = g.node_count();
    let per_layer = cfg.max_mutations * cfg.replicates;
    let total = cfg.sample_count();

    let mut samples = (0..total)
        .into_par_iter()
        .map(|i| {
            let sample_seed = rng::derive(seed, Purpose::Landscape, i as u64);
            if i < 2 * per_layer {
                let (from, kind) = if i < per_layer {
                    (l1, SampleKind::PerturbedFrom1)
                } else {
                    (l2, SampleKind::PerturbedFrom2)
                };
                let k = (i % per_layer) / cfg.replicates + 1;
                let p = sample_perturbed(from, k, sample_seed);
                project(g, (l1, l2), &p, kind, k)
            } else {
                let k = rng::stream(sample_seed, Purpose::Landscape, 2).random_range(0..=n);
                let p = sample_mixed(l1, l2, k, sample_seed)?;
                project(g, (l1, l2), &p, SampleKind::Mixed, k)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    samples.push(project(g, (l1, l2), l1, SampleKind::Reference1, 0)?);
    samples.push(project(g, (l1, l2), l2, SampleKind::Reference2, 0)?);
    Ok(samples)
}

/// The landscape seen by one detector call.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    /// 0 for identification, then refinement rounds.
    pub round: usize,
    /// Index of the layer being estimated.
    pub layer: usize,
    /// Samples, reference rows and finally the marker row.
    pub rows: Vec<LandscapeSample>,
}

impl Stage {
    pub fn label(&self) -> String {
        format!("t{}-{}", self.round, self.layer)
    }

    pub fn samples(&self) -> impl Iterator<Item = &LandscapeSample> {
        self.rows.iter().filter(|r| {
            matches!(
                r.kind,
                SampleKind::PerturbedFrom1 | SampleKind::PerturbedFrom2 | SampleKind::Mixed
            )
        })
    }

    pub fn row(&self, kind: SampleKind) -> Option<&LandscapeSample> {
        self.rows.iter().find(|r| r.kind == kind)
    }

    pub fn marker(&self) -> Option<&LandscapeSample> {
        self.row(SampleKind::Marker)
    }
}

struct Tracer<'a> {
    truth: &'a GroundTruth,
    cfg: LandscapeConfig,
    seed: u64,
    stages: Vec<Stage>,
    error: Option<Error>,
}

impl Tracer<'_> {
    fn stage(&self, round: usize, layer: usize, input: &Graph, found: &Partition) -> Result<Stage> {
        let (l1, l2) = self.truth.two_layers()?;
        let seed = rng::derive(self.seed, Purpose::Landscape, self.stages.len() as u64);
        let mut rows = build_landscape_with(input, self.truth, &self.cfg, seed)?;
        rows.push(project(input, (l1, l2), found, SampleKind::Marker, 0)?);
        Ok(Stage { round, layer, rows })
    }
}

impl Observer for Tracer<'_> {
    fn detected(&mut self, round: usize, layer: usize, input: &Graph, found: &Partition) {
        if self.error.is_some() {
            return;
        }
        match self.stage(round, layer, input, found) {
            Ok(stage) => self.stages.push(stage),
            Err(e) => self.error = Some(e),
        }
    }
}

/// Runs the meta-algorithm and records a landscape on every graph the
/// detector sees, with the detector's output as a marker row.
pub fn trace_hicode(g: &Graph, truth: &GroundTruth, cfg: &HicodeConfig) -> Result<Vec<Stage>> {
    trace_hicode_with(g, truth, cfg, &LandscapeConfig::default())
}

pub fn trace_hicode_with(
    g: &Graph,
    truth: &GroundTruth,
    cfg: &HicodeConfig,
    landscape: &LandscapeConfig,
) -> Result<Vec<Stage>> {
    truth.two_layers()?;
    let mut tracer = Tracer {
        truth,
        cfg: *landscape,
        seed: cfg.seed,
        stages: Vec::new(),
        error: None,
    };
    hicode::run_observed(g, cfg, &mut tracer)?;
    match tracer.error {
        Some(e) => Err(e),
        None => Ok(tracer.stages),
    }
}

/// One CSV line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub stage: String,
    pub kind: String,
    pub k: usize,
    pub nmi1: f64,
    pub nmi2: f64,
    pub modularity: f64,
    pub is_marker: u8,
}

impl CsvRow {
    pub fn kind(&self) -> Option<SampleKind> {
        self.kind.parse().ok()
    }
}

pub fn stage_rows(stage: &Stage) -> Vec<CsvRow> {
    let label = stage.label();
    stage
        .rows
        .iter()
        .map(|r| CsvRow {
            stage: label.clone(),
            kind: r.kind.to_string(),
            k: r.k,
            nmi1: r.nmi1,
            nmi2: r.nmi2,
            modularity: r.q,
            is_marker: u8::from(r.kind == SampleKind::Marker),
        })
        .collect()
}

/// Writes rows with the header `stage,kind,k,nmi1,nmi2,modularity,is_marker`.
pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })
}

pub fn read_csv<R: Read>(input: R, path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{generate, Placement, SbmParams};

    fn layers() -> (Partition, Partition) {
        let l1 = Partition::from_labels((0..60).map(|v| v / 20));
        let l2 = Partition::from_labels((0..60).map(|v| v % 4));
        (l1, l2)
    }

    #[test]
    fn zero_mutations_is_identity() {
        let (l1, _) = layers();
        let p = sample_perturbed(&l1, 0, 3);
        assert!(p.is_equivalent(&l1));
        assert_eq!(nmi(&p, &l1).unwrap(), 1.0);
    }

    #[test]
    fn same_community_swap_is_a_no_op() {
        let (l1, _) = layers();
        let mut labels = l1.labels().to_vec();
        labels.swap(0, 1);
        assert!(Partition::from_labels(labels).is_equivalent(&l1));
    }

    #[test]
    fn mixing_extremes() {
        let (l1, l2) = layers();
        assert!(sample_mixed(&l1, &l2, 60, 1).unwrap().is_equivalent(&l1));
        assert!(sample_mixed(&l1, &l2, 0, 1).unwrap().is_equivalent(&l2));
        let half = sample_mixed(&l1, &l2, 30, 1).unwrap();
        let (a, b) = (nmi(&half, &l1).unwrap(), nmi(&half, &l2).unwrap());
        assert!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0);
        assert!(sample_mixed(&l1, &l2, 61, 1).is_err());
    }

    #[test]
    fn small_landscape_layout() {
        let params = SbmParams::two_layer(60, 3, 4, 0.5, 0.5, 2, Placement::Striped);
        let (g, truth) = generate(&params).unwrap();
        let cfg = LandscapeConfig {
            max_mutations: 5,
            replicates: 2,
            mixed: 7,
        };
        let rows = build_landscape_with(&g, &truth, &cfg, 9).unwrap();
        assert_eq!(rows.len(), cfg.sample_count() + 2);
        assert_eq!(rows[0].kind, SampleKind::PerturbedFrom1);
        assert_eq!((rows[0].k, rows[1].k, rows[2].k), (1, 1, 2));
        assert_eq!(rows[10].kind, SampleKind::PerturbedFrom2);
        assert_eq!(rows[20].kind, SampleKind::Mixed);
        let r1 = rows[rows.len() - 2];
        assert_eq!((r1.kind, r1.nmi1), (SampleKind::Reference1, 1.0));
        assert_eq!(rows.last().unwrap().nmi2, 1.0);
        assert_eq!(rows, build_landscape_with(&g, &truth, &cfg, 9).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let stage = Stage {
            round: 1,
            layer: 0,
            rows: vec![LandscapeSample {
                kind: SampleKind::Marker,
                k: 0,
                nmi1: 0.25,
                nmi2: 0.125,
                q: 0.5,
            }],
        };
        let rows = stage_rows(&stage);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("stage,kind,k,nmi1,nmi2,modularity,is_marker\n"));
        assert!(text.contains("t1-0,marker,0,0.25,0.125,0.5,1"));
        assert_eq!(read_csv(buf.as_slice(), Path::new("x")).unwrap(), rows);
    }
}
