//! Faceted subgraph extraction: attribute, document and path facets applied
//! as a chain of refinements, plus neighbor suggestions for expansion.

mod facet;
mod paths;
mod suggest;

use std::collections::BTreeSet;

use serde_json::{json, Value as Json};

pub use facet::{
    parse_query, EdgeField, Facet, FieldKind, NodeField, Op, QueryChain, QueryError, Value,
    DEFAULT_CAP, DEFAULT_MAX_LEN, MAX_PATH_LEN,
};
pub use paths::{find_paths, path_id, path_polarity, FoundPath, PathSearch};
pub use suggest::{suggest_neighbors, Direction, Suggestion};

use crate::model::{AssembledGraph, Edge, EdgeIx, NodeIx};

/// Node and edge selection over an [`AssembledGraph`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subgraph {
    pub nodes: BTreeSet<NodeIx>,
    pub edges: BTreeSet<EdgeIx>,
}

impl Subgraph {
    pub fn full(graph: &AssembledGraph) -> Self {
        Self {
            nodes: (0..graph.node_count() as NodeIx).collect(),
            edges: (0..graph.edge_count() as EdgeIx)
                .filter(|&e| graph.endpoints(e).is_some())
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// Resolves node and edge ids; unknown ids are reported.
    pub fn from_ids<'a>(
        graph: &AssembledGraph,
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, String> {
        let mut out = Subgraph::default();
        for id in nodes {
            out.nodes.insert(graph.node_ix(id).ok_or_else(|| id.to_string())?);
        }
        for id in edges {
            let e = graph.edge_ix(id).ok_or_else(|| id.to_string())?;
            if let Some((s, o)) = graph.endpoints(e) {
                out.nodes.insert(s);
                out.nodes.insert(o);
            }
            out.edges.insert(e);
        }
        Ok(out)
    }

    pub fn node_ids<'g>(&self, graph: &'g AssembledGraph) -> Vec<&'g str> {
        self.nodes.iter().map(|&n| graph.agent(n).id.as_str()).collect()
    }

    pub fn edge_ids<'g>(&self, graph: &'g AssembledGraph) -> Vec<&'g str> {
        self.edges.iter().map(|&e| graph.edge(e).id.as_str()).collect()
    }

    /// Every edge has both endpoints in the node set.
    pub fn is_closed(&self, graph: &AssembledGraph) -> bool {
        self.edges.iter().all(|&e| {
            graph
                .endpoints(e)
                .is_some_and(|(s, o)| self.nodes.contains(&s) && self.nodes.contains(&o))
        })
    }

    pub fn is_subset(&self, other: &Subgraph) -> bool {
        self.nodes.is_subset(&other.nodes) && self.edges.is_subset(&other.edges)
    }
}

/// Size of the working subgraph after one facet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub facet: usize,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryResult {
    pub subgraph: Subgraph,
    /// Ranked paths from the last path facet in the chain.
    pub paths: Option<PathSearch>,
    pub facet_trace: Vec<TraceStep>,
}

impl QueryResult {
    pub fn to_json(&self, graph: &AssembledGraph) -> Json {
        let paths: Vec<Json> = self
            .paths
            .iter()
            .flat_map(|p| &p.paths)
            .map(|p| {
                json!({
                    "nodes": p.nodes.iter().map(|&n| &graph.agent(n).id).collect::<Vec<_>>(),
                    "edges": p.edges.iter().map(|&e| &graph.edge(e).id).collect::<Vec<_>>(),
                    "polarity": p.polarity,
                    "score": p.score,
                })
            })
            .collect();
        let trace: Vec<Json> = self
            .facet_trace
            .iter()
            .map(|t| json!({"facet": t.facet, "nodes": t.nodes, "edges": t.edges}))
            .collect();
        json!({
            "nodes": self.subgraph.node_ids(graph),
            "edges": self.subgraph.edge_ids(graph),
            "paths": paths,
            "trace": trace,
            "truncated": self.paths.as_ref().is_some_and(|p| p.truncated),
        })
    }
}

fn text_matches(op: Op, actual: &str, wanted: &str) -> bool {
    match op {
        Op::Eq => actual == wanted,
        Op::Ne => actual != wanted,
        Op::Contains => actual.to_lowercase().contains(&wanted.to_lowercase()),
        _ => false,
    }
}

fn number_matches(op: Op, actual: f64, wanted: f64) -> bool {
    match op {
        Op::Eq => actual == wanted,
        Op::Ne => actual != wanted,
        Op::Lt => actual < wanted,
        Op::Le => actual <= wanted,
        Op::Gt => actual > wanted,
        Op::Ge => actual >= wanted,
        Op::Contains => false,
    }
}

fn value_matches(op: Op, actual: Value, wanted: &Value) -> bool {
    match (actual, wanted) {
        (Value::Text(a), Value::Text(w)) => text_matches(op, &a, w),
        (Value::Number(a), Value::Number(w)) => number_matches(op, a, *w),
        (Value::Bool(a), Value::Bool(w)) => match op {
            Op::Eq => a == *w,
            Op::Ne => a != *w,
            _ => false,
        },
        _ => false,
    }
}

/// Node predicate; degrees are read from the full graph.
pub fn node_matches(graph: &AssembledGraph, n: NodeIx, field: NodeField, op: Op, value: &Value) -> bool {
    let agent = graph.agent(n);
    let actual = match field {
        NodeField::Id => Value::Text(agent.id.clone()),
        NodeField::Name => Value::Text(agent.name.clone()),
        NodeField::Category => Value::Text(agent.category_path.clone()),
        NodeField::Degree => Value::Number(graph.degree(n) as f64),
        NodeField::InDegree => Value::Number(graph.in_degree(n) as f64),
        NodeField::OutDegree => Value::Number(graph.out_degree(n) as f64),
    };
    value_matches(op, actual, value)
}

pub fn edge_matches(edge: &Edge, field: EdgeField, op: Op, value: &Value) -> bool {
    let actual = match field {
        EdgeField::Type => Value::Text(edge.statement_type.as_str().to_string()),
        EdgeField::Polarity => Value::Text(edge.polarity.as_str().to_string()),
        EdgeField::Curated => Value::Bool(edge.curated),
        EdgeField::EvidenceCount => Value::Number(edge.evidence_count as f64),
        EdgeField::Belief => Value::Number(edge.belief),
    };
    value_matches(op, actual, value)
}

fn with_endpoints(graph: &AssembledGraph, edges: BTreeSet<EdgeIx>) -> Subgraph {
    let mut nodes = BTreeSet::new();
    for &e in &edges {
        if let Some((s, o)) = graph.endpoints(e) {
            nodes.insert(s);
            nodes.insert(o);
        }
    }
    Subgraph { nodes, edges }
}

fn resolve(graph: &AssembledGraph, ids: &[String]) -> Result<Vec<NodeIx>, QueryError> {
    ids.iter()
        .map(|id| {
            graph.node_ix(id).ok_or_else(|| QueryError::UnknownEntity {
                facet: 0,
                id: id.clone(),
            })
        })
        .collect()
}

/// Applies one facet to `context`. The result is always a subgraph of the
/// context whose edges have both endpoints present.
///
/// A node facet keeps a matching node when one of its context edges
/// survives, or when it had no context edges to begin with; edges survive
/// when both endpoints match. Edge and document facets keep the matching
/// edges and their endpoints. A path facet keeps the union of the ranked
/// paths found inside the context.
pub fn apply_facet(
    graph: &AssembledGraph,
    context: &Subgraph,
    facet: &Facet,
) -> Result<(Subgraph, Option<PathSearch>), QueryError> {
    match facet {
        Facet::Node { field, op, value } => {
            let n = graph.node_count();
            let mut matched = vec![false; n];
            for &v in &context.nodes {
                matched[v as usize] = node_matches(graph, v, *field, *op, value);
            }
            let mut touched = vec![false; n];
            let mut had_edges = vec![false; n];
            let mut edges = BTreeSet::new();
            for &e in &context.edges {
                let Some((s, o)) = graph.endpoints(e) else { continue };
                had_edges[s as usize] = true;
                had_edges[o as usize] = true;
                if matched[s as usize] && matched[o as usize] {
                    touched[s as usize] = true;
                    touched[o as usize] = true;
                    edges.insert(e);
                }
            }
            let nodes = context
                .nodes
                .iter()
                .copied()
                .filter(|&v| matched[v as usize] && (touched[v as usize] || !had_edges[v as usize]))
                .collect();
            Ok((Subgraph { nodes, edges }, None))
        }
        Facet::Edge { field, op, value } => {
            let edges = context
                .edges
                .iter()
                .copied()
                .filter(|&e| edge_matches(graph.edge(e), *field, *op, value))
                .collect();
            Ok((with_endpoints(graph, edges), None))
        }
        Facet::Doc { dois } => {
            let wanted: BTreeSet<&str> = dois.iter().map(String::as_str).collect();
            let edges = context
                .edges
                .iter()
                .copied()
                .filter(|&e| graph.edge(e).dois.iter().any(|d| wanted.contains(d.as_str())))
                .collect();
            Ok((with_endpoints(graph, edges), None))
        }
        Facet::Path {
            sources,
            targets,
            max_len,
            cap,
        } => {
            let sources = resolve(graph, sources)?;
            let targets = resolve(graph, targets)?;
            let search = find_paths(graph, context, &sources, &targets, *max_len, *cap);
            let mut out = Subgraph::default();
            for p in &search.paths {
                out.nodes.extend(p.nodes.iter().copied());
                out.edges.extend(p.edges.iter().copied());
            }
            Ok((out, Some(search)))
        }
    }
}

/// Runs the chain from the full graph.
pub fn run_chain(graph: &AssembledGraph, chain: &QueryChain) -> Result<QueryResult, QueryError> {
    run_chain_from(graph, Subgraph::full(graph), chain)
}

pub fn run_chain_from(
    graph: &AssembledGraph,
    start: Subgraph,
    chain: &QueryChain,
) -> Result<QueryResult, QueryError> {
    let mut current = start;
    let mut paths = None;
    let mut facet_trace = Vec::with_capacity(chain.facets.len());
    for (i, facet) in chain.facets.iter().enumerate() {
        let (next, found) = apply_facet(graph, &current, facet).map_err(|e| e.at(i))?;
        if found.is_some() {
            paths = found;
        }
        current = next;
        facet_trace.push(TraceStep {
            facet: i,
            nodes: current.nodes.len(),
            edges: current.edges.len(),
        });
    }
    Ok(QueryResult {
        subgraph: current,
        paths,
        facet_trace,
    })
}
