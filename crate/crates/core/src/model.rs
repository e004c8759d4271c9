//! Domain types: agents, causal statements, the ontology tree and the
//! assembled multidigraph.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed category path {path:?}: {reason}")]
    Format { path: String, reason: &'static str },
    #[error("unknown statement type {0:?}")]
    UnknownStatementType(String),
    #[error("unknown polarity {0:?}")]
    UnknownPolarity(String),
}

/// Regulation type of a causal statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatementType {
    Activation,
    IncreaseAmount,
    Phosphorylation,
    Inhibition,
    DecreaseAmount,
    Dephosphorylation,
    Complex,
    Association,
}

impl StatementType {
    pub const ALL: [StatementType; 8] = [
        StatementType::Activation,
        StatementType::IncreaseAmount,
        StatementType::Phosphorylation,
        StatementType::Inhibition,
        StatementType::DecreaseAmount,
        StatementType::Dephosphorylation,
        StatementType::Complex,
        StatementType::Association,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatementType::Activation => "Activation",
            StatementType::IncreaseAmount => "IncreaseAmount",
            StatementType::Phosphorylation => "Phosphorylation",
            StatementType::Inhibition => "Inhibition",
            StatementType::DecreaseAmount => "DecreaseAmount",
            StatementType::Dephosphorylation => "Dephosphorylation",
            StatementType::Complex => "Complex",
            StatementType::Association => "Association",
        }
    }
}

impl fmt::Display for StatementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatementType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StatementType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ModelError::UnknownStatementType(s.to_string()))
    }
}

/// Signed effect of a regulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
    Unknown,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
            Polarity::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Polarity::Positive),
            "negative" => Ok(Polarity::Negative),
            "unknown" => Ok(Polarity::Unknown),
            _ => Err(ModelError::UnknownPolarity(s.to_string())),
        }
    }
}

/// Polarity and directedness implied by a statement type.
pub fn polarity_of(statement_type: StatementType) -> (Polarity, bool) {
    use StatementType::*;
    match statement_type {
        Activation | IncreaseAmount | Phosphorylation => (Polarity::Positive, true),
        Inhibition | DecreaseAmount | Dephosphorylation => (Polarity::Negative, true),
        Complex | Association => (Polarity::Unknown, false),
    }
}

pub const ROOT: &str = "root";

/// Splits a slash-delimited category path, rejecting empty segments.
pub fn path_segments(path: &str) -> Result<Vec<&str>, ModelError> {
    let segments: Vec<&str> = path.split('/').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ModelError::Format {
            path: path.to_string(),
            reason: "empty segment",
        });
    }
    Ok(segments)
}

/// Like [`path_segments`], additionally requiring the leading `root` segment.
pub fn check_category_path(path: &str) -> Result<Vec<&str>, ModelError> {
    let segments = path_segments(path)?;
    if segments[0] != ROOT {
        return Err(ModelError::Format {
            path: path.to_string(),
            reason: "path must begin with \"root\"",
        });
    }
    Ok(segments)
}

/// Depth of a category path; `root` is depth 0.
pub fn path_depth(path: &str) -> Result<usize, ModelError> {
    Ok(path_segments(path)?.len() - 1)
}

/// Prefix of `category_path` made of `depth + 1` segments, clamped to the
/// full path.
pub fn ancestor_at(category_path: &str, depth: usize) -> Result<&str, ModelError> {
    let segments = path_segments(category_path)?;
    if depth + 1 >= segments.len() {
        return Ok(category_path);
    }
    let len: usize = segments[..=depth].iter().map(|s| s.len()).sum::<usize>() + depth;
    Ok(&category_path[..len])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    pub name: String,
    #[serde(rename = "category")]
    pub category_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Evidence {
    pub text: String,
    pub doi: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalStatement {
    pub id: String,
    #[serde(rename = "type")]
    pub statement_type: StatementType,
    pub subj: String,
    pub obj: String,
    pub belief: f64,
    pub curated: bool,
    pub evidence: Vec<Evidence>,
}

/// Node of the category tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyNode {
    pub id: String,
    pub name: String,
    pub children: Vec<OntologyNode>,
    pub member_agents: Vec<String>,
}

impl OntologyNode {
    fn empty(id: &str) -> Self {
        let name = id.rsplit('/').next().unwrap_or(id).to_string();
        Self {
            id: id.to_string(),
            name,
            children: Vec::new(),
            member_agents: Vec::new(),
        }
    }

    /// Builds the tree as the union of agent category paths plus any extra
    /// (possibly empty) categories.
    pub fn from_paths<'a>(
        agents: impl IntoIterator<Item = &'a Agent>,
        extra_categories: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self, ModelError> {
        let mut members: BTreeMap<String, Vec<String>> = BTreeMap::new();
        members.entry(ROOT.to_string()).or_default();
        let mut add_path = |path: &str, agent: Option<&str>| -> Result<(), ModelError> {
            let segments = check_category_path(path)?;
            for depth in 0..segments.len() {
                let prefix = ancestor_at(path, depth)?;
                members.entry(prefix.to_string()).or_default();
            }
            if let Some(a) = agent {
                members.get_mut(path).expect("inserted").push(a.to_string());
            }
            Ok(())
        };
        for agent in agents {
            add_path(&agent.category_path, Some(&agent.id))?;
        }
        for cat in extra_categories {
            add_path(cat, None)?;
        }
        Ok(build_subtree(ROOT, &mut members))
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.id.matches('/').count()
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> impl Iterator<Item = &OntologyNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    pub fn find(&self, id: &str) -> Option<&OntologyNode> {
        if id == self.id {
            return Some(self);
        }
        let segments = path_segments(id).ok()?;
        let mut node = self;
        for depth in 1..segments.len() {
            let prefix = ancestor_at(id, depth).ok()?;
            node = node.children.iter().find(|c| c.id == prefix)?;
        }
        (node.id == id).then_some(node)
    }

    pub fn max_depth(&self) -> usize {
        self.walk().map(OntologyNode::depth).max().unwrap_or(0)
    }
}

fn build_subtree(id: &str, members: &mut BTreeMap<String, Vec<String>>) -> OntologyNode {
    let mut node = OntologyNode::empty(id);
    let mut agents = members.get_mut(id).map(std::mem::take).unwrap_or_default();
    agents.sort();
    node.member_agents = agents;
    let prefix = format!("{id}/");
    let child_ids: Vec<String> = members
        .range(prefix.clone()..)
        .take_while(|(k, _)| k.starts_with(&prefix))
        .filter(|(k, _)| !k[prefix.len()..].contains('/'))
        .map(|(k, _)| k.clone())
        .collect();
    node.children = child_ids
        .iter()
        .map(|c| build_subtree(c, members))
        .collect();
    node
}

/// Deterministic identifier of the merged edge for a statement triple.
pub fn edge_id(subj: &str, statement_type: StatementType, obj: &str) -> String {
    format!("{subj}|{statement_type}|{obj}")
}

/// A merged edge: every statement sharing `(subj, obj, statement_type)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub subj: String,
    pub obj: String,
    #[serde(rename = "type")]
    pub statement_type: StatementType,
    pub polarity: Polarity,
    pub directed: bool,
    pub curated: bool,
    pub belief: f64,
    pub evidence_count: usize,
    pub evidence: Vec<Evidence>,
    pub dois: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeAdjacency {
    pub incoming: Vec<String>,
    pub outgoing: Vec<String>,
}

/// Unvalidated constituents of an [`AssembledGraph`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphParts {
    pub id: String,
    pub agents: Vec<Agent>,
    pub edges: Vec<Edge>,
    pub adjacency: BTreeMap<String, NodeAdjacency>,
    pub ontology: OntologyNode,
}

/// Dense index of an agent within its graph.
pub type NodeIx = u32;
/// Dense index of an edge within its graph.
pub type EdgeIx = u32;

/// Deduplicated multidigraph of typed regulations between agents.
///
/// Agents and edges are stored sorted by id; their positions are the dense
/// [`NodeIx`]/[`EdgeIx`] handles used by the query and layout code.
/// Construction never fails; [`validate_dataset`] reports broken invariants.
#[derive(Clone, Debug)]
pub struct AssembledGraph {
    parts: GraphParts,
    agent_lookup: HashMap<String, NodeIx>,
    edge_lookup: HashMap<String, EdgeIx>,
    endpoints: Vec<(Option<NodeIx>, Option<NodeIx>)>,
    out_edges: Vec<Vec<EdgeIx>>,
    in_edges: Vec<Vec<EdgeIx>>,
}

impl AssembledGraph {
    pub fn from_parts(mut parts: GraphParts) -> Self {
        parts.agents.sort_by(|a, b| a.id.cmp(&b.id));
        parts.edges.sort_by(|a, b| a.id.cmp(&b.id));
        let mut agent_lookup = HashMap::with_capacity(parts.agents.len());
        for (i, a) in parts.agents.iter().enumerate() {
            agent_lookup.entry(a.id.clone()).or_insert(i as NodeIx);
        }
        let mut edge_lookup = HashMap::with_capacity(parts.edges.len());
        for (i, e) in parts.edges.iter().enumerate() {
            edge_lookup.entry(e.id.clone()).or_insert(i as EdgeIx);
        }
        let n = parts.agents.len();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        let endpoints: Vec<_> = parts
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let s = agent_lookup.get(&e.subj).copied();
                let o = agent_lookup.get(&e.obj).copied();
                if let Some(s) = s {
                    out_edges[s as usize].push(i as EdgeIx);
                }
                if let Some(o) = o {
                    in_edges[o as usize].push(i as EdgeIx);
                }
                (s, o)
            })
            .collect();
        Self {
            parts,
            agent_lookup,
            edge_lookup,
            endpoints,
            out_edges,
            in_edges,
        }
    }

    pub fn into_parts(self) -> GraphParts {
        self.parts
    }

    pub fn parts(&self) -> &GraphParts {
        &self.parts
    }

    pub fn id(&self) -> &str {
        &self.parts.id
    }

    pub fn ontology(&self) -> &OntologyNode {
        &self.parts.ontology
    }

    pub fn agents(&self) -> &[Agent] {
        &self.parts.agents
    }

    pub fn edges(&self) -> &[Edge] {
        &self.parts.edges
    }

    pub fn adjacency(&self) -> &BTreeMap<String, NodeAdjacency> {
        &self.parts.adjacency
    }

    pub fn node_count(&self) -> usize {
        self.parts.agents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parts.edges.len()
    }

    pub fn node_ix(&self, id: &str) -> Option<NodeIx> {
        self.agent_lookup.get(id).copied()
    }

    pub fn edge_ix(&self, id: &str) -> Option<EdgeIx> {
        self.edge_lookup.get(id).copied()
    }

    pub fn agent(&self, ix: NodeIx) -> &Agent {
        &self.parts.agents[ix as usize]
    }

    pub fn agent_by_id(&self, id: &str) -> Option<&Agent> {
        self.node_ix(id).map(|i| self.agent(i))
    }

    pub fn edge(&self, ix: EdgeIx) -> &Edge {
        &self.parts.edges[ix as usize]
    }

    pub fn edge_by_id(&self, id: &str) -> Option<&Edge> {
        self.edge_ix(id).map(|i| self.edge(i))
    }

    /// Endpoints of an edge, if both resolve to agents.
    pub fn endpoints(&self, e: EdgeIx) -> Option<(NodeIx, NodeIx)> {
        match self.endpoints[e as usize] {
            (Some(s), Some(o)) => Some((s, o)),
            _ => None,
        }
    }

    /// Outgoing edges (node is `subj`), ascending by edge id.
    pub fn out_edges(&self, n: NodeIx) -> &[EdgeIx] {
        &self.out_edges[n as usize]
    }

    /// Incoming edges (node is `obj`), ascending by edge id.
    pub fn in_edges(&self, n: NodeIx) -> &[EdgeIx] {
        &self.in_edges[n as usize]
    }

    pub fn out_degree(&self, n: NodeIx) -> usize {
        self.out_edges[n as usize].len()
    }

    pub fn in_degree(&self, n: NodeIx) -> usize {
        self.in_edges[n as usize].len()
    }

    pub fn degree(&self, n: NodeIx) -> usize {
        self.in_degree(n) + self.out_degree(n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub subject: String,
    pub code: String,
    pub message: String,
}

/// Findings sorted by `(severity, subject, code, message)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Checks every structural invariant of an assembled graph.
pub fn validate_dataset(graph: &AssembledGraph) -> ValidationReport {
    let mut findings = Vec::new();
    let mut push = |severity, subject: &str, code: &str, message: String| {
        findings.push(Finding {
            severity,
            subject: subject.to_string(),
            code: code.to_string(),
            message,
        })
    };
    let parts = graph.parts();

    let mut seen = BTreeSet::new();
    for agent in &parts.agents {
        if agent.id.is_empty() {
            push(Severity::Error, "", "empty-agent-id", "agent with empty id".into());
        }
        if !seen.insert(agent.id.as_str()) {
            push(
                Severity::Error,
                &agent.id,
                "duplicate-agent",
                format!("agent {:?} defined more than once", agent.id),
            );
        }
        match check_category_path(&agent.category_path) {
            Err(e) => push(Severity::Error, &agent.id, "bad-category", e.to_string()),
            Ok(_) => match parts.ontology.find(&agent.category_path) {
                None => push(
                    Severity::Error,
                    &agent.id,
                    "ungrounded-agent",
                    format!("category {:?} missing from ontology", agent.category_path),
                ),
                Some(node) => {
                    if !node.member_agents.contains(&agent.id) {
                        push(
                            Severity::Error,
                            &agent.id,
                            "ungrounded-agent",
                            format!("agent not listed under {:?}", node.id),
                        );
                    }
                    if !node.is_leaf() {
                        push(
                            Severity::Warning,
                            &agent.id,
                            "internal-grounding",
                            format!("agent grounded on non-leaf category {:?}", node.id),
                        );
                    }
                }
            },
        }
    }

    if parts.ontology.id != ROOT {
        push(
            Severity::Error,
            &parts.ontology.id,
            "bad-ontology-root",
            "ontology root must be \"root\"".into(),
        );
    }
    for node in parts.ontology.walk() {
        let sorted = node.children.windows(2).all(|w| w[0].id < w[1].id);
        if !sorted {
            push(
                Severity::Error,
                &node.id,
                "unsorted-children",
                "ontology children not sorted by id".into(),
            );
        }
        for child in &node.children {
            let parent_ok = child
                .id
                .rsplit_once('/')
                .is_some_and(|(p, last)| p == node.id && !last.is_empty());
            if !parent_ok {
                push(
                    Severity::Error,
                    &child.id,
                    "bad-ontology-path",
                    format!("child path does not extend parent {:?}", node.id),
                );
            }
        }
        for member in &node.member_agents {
            if graph.agent_by_id(member).map(|a| a.category_path.as_str()) != Some(&node.id) {
                push(
                    Severity::Error,
                    member,
                    "stale-member",
                    format!("listed under {:?} but not grounded there", node.id),
                );
            }
        }
    }

    let mut triples = BTreeSet::new();
    let mut edge_ids = BTreeSet::new();
    for edge in &parts.edges {
        if !edge_ids.insert(edge.id.as_str()) {
            push(
                Severity::Error,
                &edge.id,
                "duplicate-edge-id",
                "edge id appears more than once".into(),
            );
        }
        for endpoint in [&edge.subj, &edge.obj] {
            if graph.node_ix(endpoint).is_none() {
                push(
                    Severity::Error,
                    endpoint,
                    "dangling-endpoint",
                    format!("edge {:?} references missing agent", edge.id),
                );
            }
        }
        if edge.subj == edge.obj {
            push(Severity::Error, &edge.id, "self-loop", "edge is a self-loop".into());
        }
        if !triples.insert((&edge.subj, &edge.obj, edge.statement_type)) {
            push(
                Severity::Error,
                &edge.id,
                "duplicate-triple",
                "more than one edge for (subj, obj, type)".into(),
            );
        }
        if edge.id != edge_id(&edge.subj, edge.statement_type, &edge.obj) {
            push(
                Severity::Warning,
                &edge.id,
                "noncanonical-edge-id",
                "edge id differs from subj|type|obj".into(),
            );
        }
        if edge.evidence.is_empty() {
            push(Severity::Error, &edge.id, "no-evidence", "edge has no evidence".into());
        }
        if edge.evidence_count != edge.evidence.len() {
            push(
                Severity::Error,
                &edge.id,
                "evidence-count",
                format!(
                    "evidence_count {} but {} evidence items",
                    edge.evidence_count,
                    edge.evidence.len()
                ),
            );
        }
        if edge.evidence.iter().any(|e| e.text.is_empty()) {
            push(Severity::Error, &edge.id, "empty-evidence", "evidence text empty".into());
        }
        let dois: BTreeSet<String> = edge.evidence.iter().map(|e| e.doi.clone()).collect();
        if dois != edge.dois {
            push(
                Severity::Error,
                &edge.id,
                "doi-set",
                "doi set differs from evidence dois".into(),
            );
        }
        if !(0.0..=1.0).contains(&edge.belief) {
            push(
                Severity::Error,
                &edge.id,
                "belief-range",
                format!("belief {} outside [0, 1]", edge.belief),
            );
        }
        if polarity_of(edge.statement_type) != (edge.polarity, edge.directed) {
            push(
                Severity::Error,
                &edge.id,
                "polarity",
                "polarity/directedness disagree with statement type".into(),
            );
        }
    }

    // Adjacency, checked in both directions.
    let mut expected: BTreeMap<&str, (BTreeSet<&str>, BTreeSet<&str>)> = BTreeMap::new();
    for edge in &parts.edges {
        // Dangling endpoints are already reported above.
        if graph.node_ix(&edge.subj).is_some() {
            expected.entry(&edge.subj).or_default().1.insert(&edge.id);
        }
        if graph.node_ix(&edge.obj).is_some() {
            expected.entry(&edge.obj).or_default().0.insert(&edge.id);
        }
    }
    for agent in &parts.agents {
        expected.entry(&agent.id).or_default();
    }
    for (node, (inc, out)) in &expected {
        let listed = parts.adjacency.get(*node);
        let listed_in: BTreeSet<&str> = listed
            .map(|a| a.incoming.iter().map(String::as_str).collect())
            .unwrap_or_default();
        let listed_out: BTreeSet<&str> = listed
            .map(|a| a.outgoing.iter().map(String::as_str).collect())
            .unwrap_or_default();
        if &listed_in != inc || &listed_out != out {
            push(
                Severity::Error,
                node,
                "adjacency",
                "adjacency lists disagree with edge endpoints".into(),
            );
        }
    }
    for node in parts.adjacency.keys() {
        if !expected.contains_key(node.as_str()) {
            push(
                Severity::Error,
                node,
                "adjacency",
                "adjacency entry for unknown node".into(),
            );
        }
    }

    findings.sort();
    findings.dedup();
    ValidationReport { findings }
}
