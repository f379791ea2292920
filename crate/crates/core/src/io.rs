//! File formats.
//!
//! * Edge lists: one edge per line, `u<TAB>v<TAB>weight`, 0-indexed nodes,
//!   weight optional (default 1). Lines starting with `#` are ignored,
//!   except that `# nodes<TAB>N` declares the node count so trailing
//!   isolated nodes survive a round trip.
//! * Partitions: one line per node, `node<TAB>community`.
//! * Ground truth: a JSON document with a format tag, a version and one
//!   block per layer (community count, edge probability, node labels).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::partition::Partition;
use crate::sbm::{GroundTruth, Placement, SbmParams};

const TRUTH_FORMAT: &str = "hicode-ground-truth";
const TRUTH_VERSION: u32 = 1;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {what} {s:?}")))
}

/// Parses an edge list; `path` is only used in diagnostics.
pub fn read_edge_list<R: Read>(reader: R, path: &Path) -> Result<Graph> {
    let mut declared = 0usize;
    let mut max_node = None;
    let mut edges = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                if let Some(n) = parts.next() {
                    declared = parse_field(n, "node count", path, lineno)?;
                }
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(parse_err(
                path,
                lineno,
                format!("expected `u<TAB>v[<TAB>weight]`, got {} fields", fields.len()),
            ));
        }
        let u: usize = parse_field(fields[0], "node id", path, lineno)?;
        let v: usize = parse_field(fields[1], "node id", path, lineno)?;
        let w: f64 = match fields.get(2) {
            Some(w) => parse_field(w, "weight", path, lineno)?,
            None => 1.0,
        };
        max_node = max_node.max(Some(u.max(v)));
        edges.push((u, v, w));
    }
    let n = declared.max(max_node.map_or(0, |m| m + 1));
    Graph::from_edges(n, edges).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# nodes\t{}", g.node_count())?;
    for e in g.edges() {
        writeln!(out, "{}\t{}\t{}", e.u, e.v, e.weight)?;
    }
    out.flush()
}

pub fn read_partition<R: Read>(reader: R, path: &Path) -> Result<Partition> {
    let mut labels: Vec<Option<usize>> = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((node, community)) = trimmed.split_once('\t') else {
            return Err(parse_err(path, lineno, "expected `node<TAB>community`"));
        };
        let node: usize = parse_field(node, "node id", path, lineno)?;
        let community: usize = parse_field(community, "community id", path, lineno)?;
        if node >= labels.len() {
            labels.resize(node + 1, None);
        }
        if labels[node].replace(community).is_some() {
            return Err(parse_err(path, lineno, format!("node {node} listed twice")));
        }
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(v, l)| l.ok_or_else(|| parse_err(path, 0, format!("node {v} has no community"))))
        .collect::<Result<Vec<_>>>()?;
    Partition::new(labels).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn write_partition<W: Write>(p: &Partition, mut out: W) -> std::io::Result<()> {
    for (v, c) in p.labels().iter().enumerate() {
        writeln!(out, "{v}\t{c}")?;
    }
    out.flush()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthLayer {
    pub num_communities: usize,
    pub edge_prob: f64,
    /// Community of each node, indexed by node.
    pub assignment: Vec<usize>,
}

/// The on-disk ground-truth document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthDocument {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub seed: u64,
    pub placement: Placement,
    pub layers: Vec<TruthLayer>,
}

impl TruthDocument {
    pub fn new(params: &SbmParams, truth: &GroundTruth) -> Self {
        TruthDocument {
            format: TRUTH_FORMAT.into(),
            version: TRUTH_VERSION,
            n: params.n,
            seed: params.seed,
            placement: params.placement,
            layers: params
                .layers
                .iter()
                .zip(&truth.layers)
                .map(|(spec, p)| TruthLayer {
                    num_communities: spec.num_communities,
                    edge_prob: spec.edge_prob,
                    assignment: p.labels().to_vec(),
                })
                .collect(),
        }
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            if l.assignment.len() != self.n {
                return Err(Error::InvalidPartition(format!(
                    "layer {i} assigns {} nodes, expected {}",
                    l.assignment.len(),
                    self.n
                )));
            }
            let p = Partition::new(l.assignment.clone())?;
            if p.community_count() != l.num_communities {
                return Err(Error::InvalidPartition(format!(
                    "layer {i} has {} communities, header says {}",
                    p.community_count(),
                    l.num_communities
                )));
            }
            layers.push(p);
        }
        Ok(GroundTruth { layers })
    }
}

pub fn read_truth<R: Read>(reader: R, path: &Path) -> Result<TruthDocument> {
    let doc: TruthDocument = serde_json::from_reader(BufReader::new(reader)).map_err(|source| {
        Error::Json {
            path: path.to_path_buf(),
            source,
        }
    })?;
    if doc.format != TRUTH_FORMAT || doc.version != TRUTH_VERSION {
        return Err(parse_err(
            path,
            0,
            format!(
                "unsupported ground-truth format {:?} version {}",
                doc.format, doc.version
            ),
        ));
    }
    Ok(doc)
}

pub fn write_truth<W: Write>(doc: &TruthDocument, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, doc)?;
    writeln!(out)?;
    out.flush()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(io_err(path))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph> {
    let path = path.as_ref();
    read_edge_list(open(path)?, path)
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_edge_list(g, create(path)?).map_err(io_err(path))
}

pub fn load_partition(path: impl AsRef<Path>) -> Result<Partition> {
    let path = path.as_ref();
    read_partition(open(path)?, path)
}

pub fn save_partition(p: &Partition, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_partition(p, create(path)?).map_err(io_err(path))
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<TruthDocument> {
    let path = path.as_ref();
    read_truth(open(path)?, path)
}

pub fn save_truth(doc: &TruthDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_truth(doc, create(path)?).map_err(io_err(path))
}

/// Writes `contents` to `path`, mapping failures to [`Error::Io`].
pub fn save_text(contents: &str, path: impl AsRef<Path>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    std::fs::write(&path, contents).map_err(io_err(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn edge_list_parsing() {
        let text = "# a comment\n0\t1\n1\t2\t0.5\n\n2\t2\t2\n";
        let g = read_edge_list(text.as_bytes(), p()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(2, 1), Some(0.5));
        assert_eq!(g.weight(2, 2), Some(2.0));
    }

    #[test]
    fn edge_list_declared_nodes_round_trip() {
        let g = Graph::from_edges(10, [(0, 1, 0.1), (3, 3, 2.5)]).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        assert_eq!(read_edge_list(buf.as_slice(), p()).unwrap(), g);
    }

    #[test]
    fn edge_list_errors_name_the_line() {
        let err = read_edge_list("0\t1\n0\tx\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_edge_list("0 1\n".as_bytes(), p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(read_edge_list("0\t1\n1\t0\n".as_bytes(), p()).is_err());
    }

    #[test]
    fn partition_parsing() {
        let part = read_partition("1\t0\n0\t1\n2\t1\n".as_bytes(), p()).unwrap();
        assert_eq!(part.labels(), &[1, 0, 1]);
        assert!(read_partition("0\t0\n0\t1\n".as_bytes(), p()).is_err());
        assert!(read_partition("0\t0\n2\t1\n".as_bytes(), p()).is_err());
        assert!(read_partition("0\t0\n1\t2\n".as_bytes(), p()).is_err());
    }

    #[test]
    fn truth_document_round_trip() {
        let params = SbmParams::two_layer(60, 3, 4, 0.5, 0.4, 9, Placement::RandomBalanced);
        let truth = crate::sbm::plant_layers(&params).unwrap();
        let doc = TruthDocument::new(&params, &truth);
        let mut buf = Vec::new();
        write_truth(&doc, &mut buf).unwrap();
        let back = read_truth(buf.as_slice(), p()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.ground_truth().unwrap(), truth);

        let mut wrong = doc;
        wrong.version = 7;
        let mut buf = Vec::new();
        write_truth(&wrong, &mut buf).unwrap();
        assert!(read_truth(buf.as_slice(), p()).is_err());
    }
}
