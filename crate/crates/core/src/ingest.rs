//! Dataset files: line-delimited records, statement assembly into a
//! multidigraph, per-level hyper-edge bundles and the binary embedding
//! matrices.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ancestor_at, edge_id, polarity_of, Agent, AssembledGraph, CausalStatement, Edge, Evidence,
    GraphParts, ModelError, NodeAdjacency, OntologyNode, StatementType,
};
use crate::scalar::Matrix;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: unknown statement type {name:?}")]
    UnknownStatementType { line: usize, name: String },
    #[error("statement {statement}: endpoint {agent:?} is not a known agent")]
    DanglingEndpoint { statement: String, agent: String },
    #[error("statement {0}: subject and object are the same agent")]
    SelfLoop(String),
    #[error("statement {0}: no evidence")]
    NoEvidence(String),
    #[error("statement {statement}: belief {belief} outside [0, 1]")]
    Belief { statement: String, belief: f64 },
    #[error("duplicate agent id {0:?}")]
    DuplicateAgent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<IngestError>,
    },
    #[error("missing file {0}")]
    Missing(PathBuf),
    #[error("embedding file: {0}")]
    Embeddings(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl IngestError {
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        IngestError::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}

/// Reads one JSON record per non-blank line, reporting 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IngestError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(
    mut writer: impl Write,
    records: impl IntoIterator<Item = T>,
) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Deserialize)]
struct RawStatement {
    id: String,
    #[serde(rename = "type")]
    statement_type: String,
    subj: String,
    obj: String,
    belief: f64,
    #[serde(default)]
    curated: bool,
    evidence: Vec<Evidence>,
}

/// Parses a statements file; input order is preserved.
pub fn parse_statements(reader: impl BufRead) -> Result<Vec<CausalStatement>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| IngestError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawStatement = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        let statement_type: StatementType =
            raw.statement_type
                .parse()
                .map_err(|_| IngestError::UnknownStatementType {
                    line: line_no,
                    name: raw.statement_type.clone(),
                })?;
        out.push(CausalStatement {
            id: raw.id,
            statement_type,
            subj: raw.subj,
            obj: raw.obj,
            belief: raw.belief,
            curated: raw.curated,
            evidence: raw.evidence,
        });
    }
    Ok(out)
}

pub fn parse_agents(reader: impl BufRead) -> Result<Vec<Agent>, IngestError> {
    parse_jsonl(reader)
}

/// Options applied while assembling statements.
#[derive(Clone, Debug, Default)]
pub struct AssembleOptions {
    /// Statements with lower belief are dropped before merging.
    pub min_belief: f64,
    /// Categories added to the ontology even when no agent is grounded there.
    pub extra_categories: Vec<String>,
}

/// Merges statements sharing `(subj, obj, type)` into one edge each.
pub fn assemble(
    graph_id: &str,
    statements: &[CausalStatement],
    agents: &[Agent],
) -> Result<AssembledGraph, IngestError> {
    assemble_with(graph_id, statements, agents, &AssembleOptions::default())
}

pub fn assemble_with(
    graph_id: &str,
    statements: &[CausalStatement],
    agents: &[Agent],
    options: &AssembleOptions,
) -> Result<AssembledGraph, IngestError> {
    let mut known = HashSet::with_capacity(agents.len());
    for a in agents {
        if !known.insert(a.id.as_str()) {
            return Err(IngestError::DuplicateAgent(a.id.clone()));
        }
    }

    struct Merge<'a> {
        edge: Edge,
        seen: HashSet<&'a Evidence>,
    }
    let mut merged: BTreeMap<String, Merge> = BTreeMap::new();
    for st in statements {
        for endpoint in [&st.subj, &st.obj] {
            if !known.contains(endpoint.as_str()) {
                return Err(IngestError::DanglingEndpoint {
                    statement: st.id.clone(),
                    agent: endpoint.clone(),
                });
            }
        }
        if st.subj == st.obj {
            return Err(IngestError::SelfLoop(st.id.clone()));
        }
        if st.evidence.is_empty() {
            return Err(IngestError::NoEvidence(st.id.clone()));
        }
        if !(0.0..=1.0).contains(&st.belief) {
            return Err(IngestError::Belief {
                statement: st.id.clone(),
                belief: st.belief,
            });
        }
        if st.belief < options.min_belief {
            continue;
        }
        let id = edge_id(&st.subj, st.statement_type, &st.obj);
        let entry = merged.entry(id.clone()).or_insert_with(|| {
            let (polarity, directed) = polarity_of(st.statement_type);
            Merge {
                edge: Edge {
                    id,
                    subj: st.subj.clone(),
                    obj: st.obj.clone(),
                    statement_type: st.statement_type,
                    polarity,
                    directed,
                    curated: false,
                    belief: st.belief,
                    evidence_count: 0,
                    evidence: Vec::new(),
                    dois: BTreeSet::new(),
                },
                seen: HashSet::new(),
            }
        });
        let edge = &mut entry.edge;
        edge.belief = edge.belief.max(st.belief);
        edge.curated |= st.curated;
        for ev in &st.evidence {
            if entry.seen.insert(ev) {
                edge.evidence.push(ev.clone());
                edge.dois.insert(ev.doi.clone());
            }
        }
        edge.evidence_count = edge.evidence.len();
    }

    let edges: Vec<Edge> = merged.into_values().map(|m| m.edge).collect();
    let mut adjacency: BTreeMap<String, NodeAdjacency> = agents
        .iter()
        .map(|a| (a.id.clone(), NodeAdjacency::default()))
        .collect();
    for e in &edges {
        adjacency
            .get_mut(&e.subj)
            .expect("checked")
            .outgoing
            .push(e.id.clone());
        adjacency
            .get_mut(&e.obj)
            .expect("checked")
            .incoming
            .push(e.id.clone());
    }
    let ontology = OntologyNode::from_paths(
        agents,
        options.extra_categories.iter().map(String::as_str),
    )?;
    Ok(AssembledGraph::from_parts(GraphParts {
        id: graph_id.to_string(),
        agents: agents.to_vec(),
        edges,
        adjacency,
        ontology,
    }))
}

/// Re-expands merged edges into one statement per edge carrying all of its
/// evidence.
pub fn expand_edges(graph: &AssembledGraph) -> Vec<CausalStatement> {
    graph
        .edges()
        .iter()
        .map(|e| CausalStatement {
            id: e.id.clone(),
            statement_type: e.statement_type,
            subj: e.subj.clone(),
            obj: e.obj.clone(),
            belief: e.belief,
            curated: e.curated,
            evidence: e.evidence.clone(),
        })
        .collect()
}

/// All statements whose endpoints fall into the same pair of categories at
/// one ontology level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub level: usize,
    pub source_category: String,
    pub target_category: String,
    /// Ids of the bundled (merged) edges.
    pub statement_ids: BTreeSet<String>,
    pub count: usize,
}

impl HyperEdge {
    pub fn id(&self) -> String {
        format!(
            "L{}:{}->{}",
            self.level, self.source_category, self.target_category
        )
    }
}

/// Partitions the edges of `graph` by the depth-`level` ancestors of their
/// endpoints' categories.
pub fn bundle(graph: &AssembledGraph, level: usize) -> Vec<HyperEdge> {
    let mut groups: BTreeMap<(&str, &str), BTreeSet<String>> = BTreeMap::new();
    for (i, edge) in graph.edges().iter().enumerate() {
        let Some((s, o)) = graph.endpoints(i as u32) else {
            continue;
        };
        let (Ok(src), Ok(dst)) = (
            ancestor_at(&graph.agent(s).category_path, level),
            ancestor_at(&graph.agent(o).category_path, level),
        ) else {
            continue;
        };
        groups.entry((src, dst)).or_default().insert(edge.id.clone());
    }
    groups
        .into_iter()
        .map(|((src, dst), ids)| HyperEdge {
            level,
            source_category: src.to_string(),
            target_category: dst.to_string(),
            count: ids.len(),
            statement_ids: ids,
        })
        .collect()
}

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

/// Reads an `EMB1` matrix: magic, u32 LE count, u32 LE dim, then
/// `count * dim` f32 LE values row-major.
pub fn read_embeddings(mut reader: impl Read) -> Result<Matrix<f32>, IngestError> {
    let mut header = [0u8; 12];
    reader
        .read_exact(&mut header)
        .map_err(|_| IngestError::Embeddings("truncated header".into()))?;
    if &header[..4] != EMBEDDING_MAGIC {
        return Err(IngestError::Embeddings("bad magic bytes".into()));
    }
    let count = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
    let dim = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let len = count
        .checked_mul(dim)
        .ok_or_else(|| IngestError::Embeddings("size overflow".into()))?;
    let mut bytes = Vec::with_capacity(len * 4);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != len * 4 {
        return Err(IngestError::Embeddings(format!(
            "expected {} payload bytes for {count}x{dim}, found {}",
            len * 4,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Matrix::from_row_major(count, dim, data).expect("length checked"))
}

pub fn write_embeddings(mut writer: impl Write, matrix: &Matrix<f32>) -> io::Result<()> {
    let count = u32::try_from(matrix.rows()).map_err(io::Error::other)?;
    let dim = u32::try_from(matrix.cols()).map_err(io::Error::other)?;
    writer.write_all(EMBEDDING_MAGIC)?;
    writer.write_all(&count.to_le_bytes())?;
    writer.write_all(&dim.to_le_bytes())?;
    let mut buf = Vec::with_capacity(matrix.as_slice().len() * 4);
    for v in matrix.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    writer.write_all(&buf)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub id: String,
    pub name: String,
    /// Declared agent count, checked at load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agents: Option<usize>,
    /// Declared assembled-edge count, checked at load when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub documents: String,
    pub embeddings: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<String>,
}

/// `manifest.json` at the top of a dataset directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub graphs: Vec<GraphEntry>,
    pub corpus: CorpusEntry,
}

/// Relative locations inside a dataset directory.
pub mod layout {
    use std::path::{Path, PathBuf};

    pub const MANIFEST: &str = "manifest.json";
    pub const DOCUMENTS: &str = "corpus/documents.jsonl";
    pub const EMBEDDINGS: &str = "corpus/embeddings.bin";
    pub const COORDS: &str = "corpus/coords.bin";

    pub fn agents(graph_id: &str) -> PathBuf {
        Path::new("graphs").join(graph_id).join("agents.jsonl")
    }

    pub fn statements(graph_id: &str) -> PathBuf {
        Path::new("graphs").join(graph_id).join("statements.jsonl")
    }
}

pub fn open_file(path: &Path) -> Result<io::BufReader<std::fs::File>, IngestError> {
    match std::fs::File::open(path) {
        Ok(f) => Ok(io::BufReader::new(f)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Err(IngestError::Missing(path.into())),
        Err(e) => Err(IngestError::Io(e)),
    }
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, IngestError> {
    let path = dir.join(layout::MANIFEST);
    let reader = open_file(&path)?;
    serde_json::from_reader(reader).map_err(|e| {
        IngestError::Parse {
            line: e.line(),
            reason: e.to_string(),
        }
        .in_file(&path)
    })
}

/// Parses and assembles one graph of a dataset directory.
pub fn load_graph(
    dir: &Path,
    entry: &GraphEntry,
    options: &AssembleOptions,
) -> Result<AssembledGraph, IngestError> {
    let agents_path = dir.join(layout::agents(&entry.id));
    let agents = parse_agents(open_file(&agents_path)?).map_err(|e| e.in_file(&agents_path))?;
    let statements_path = dir.join(layout::statements(&entry.id));
    let statements =
        parse_statements(open_file(&statements_path)?).map_err(|e| e.in_file(&statements_path))?;
    assemble_with(&entry.id, &statements, &agents, options).map_err(|e| e.in_file(&statements_path))
}
