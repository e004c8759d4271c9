//! Neighbor suggestions for expanding a subgraph around one node.

use std::str::FromStr;

use super::Subgraph;
use crate::model::{AssembledGraph, EdgeIx, NodeIx};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Incoming,
    Outgoing,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" | "incoming" => Ok(Direction::Incoming),
            "out" | "outgoing" => Ok(Direction::Outgoing),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Suggestion {
    pub edge: EdgeIx,
    pub neighbor: NodeIx,
}

/// Edges incident to `node` in the requested direction that are not yet in
/// `current`, strongest evidence first, ties by edge id.
pub fn suggest_neighbors(
    graph: &AssembledGraph,
    current: &Subgraph,
    node: NodeIx,
    direction: Direction,
) -> Vec<Suggestion> {
    let incident = match direction {
        Direction::Outgoing => graph.out_edges(node),
        Direction::Incoming => graph.in_edges(node),
    };
    let mut out: Vec<Suggestion> = incident
        .iter()
        .filter(|e| !current.edges.contains(e))
        .filter_map(|&edge| {
            let (s, o) = graph.endpoints(edge)?;
            let neighbor = match direction {
                Direction::Outgoing => o,
                Direction::Incoming => s,
            };
            Some(Suggestion { edge, neighbor })
        })
        .collect();
    // Edge indices follow id order, so the index is the id tiebreak.
    out.sort_by(|a, b| {
        graph
            .edge(b.edge)
            .evidence_count
            .cmp(&graph.edge(a.edge).evidence_count)
            .then(a.edge.cmp(&b.edge))
    });
    out
}
