//! Bounded simple-path enumeration and path polarity.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::Subgraph;
use crate::model::{AssembledGraph, EdgeIx, NodeIx, Polarity};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoundPath {
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<EdgeIx>,
    /// Sum of `ln(1 + evidence_count)` over the path's edges.
    pub score: f64,
    pub polarity: Polarity,
}

impl FoundPath {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Ranked, capped result of a path search.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathSearch {
    pub paths: Vec<FoundPath>,
    pub truncated: bool,
}

/// Stable textual identity of a path: its edge ids joined by `;`.
pub fn path_id(graph: &AssembledGraph, edges: &[EdgeIx]) -> String {
    let mut id = String::new();
    for (i, &e) in edges.iter().enumerate() {
        if i > 0 {
            id.push(';');
        }
        id.push_str(&graph.edge(e).id);
    }
    id
}

/// Aggregate sign along a path: unknown absorbs, otherwise the parity of
/// negative steps decides.
pub fn path_polarity(steps: &[Polarity]) -> Polarity {
    let mut negative = false;
    for p in steps {
        match p {
            Polarity::Unknown => return Polarity::Unknown,
            Polarity::Negative => negative = !negative,
            Polarity::Positive => {}
        }
    }
    if negative {
        Polarity::Negative
    } else {
        Polarity::Positive
    }
}

/// Traversal step out of a node within a context: directed edges follow
/// their direction, undirected edges go both ways. Ascending by edge id.
pub(crate) fn steps<'a>(
    graph: &'a AssembledGraph,
    context: &'a Subgraph,
    node: NodeIx,
) -> impl Iterator<Item = (EdgeIx, NodeIx)> + 'a {
    let out = graph.out_edges(node).iter().map(move |&e| (e, true));
    let inc = graph
        .in_edges(node)
        .iter()
        .filter(move |&&e| !graph.edge(e).directed)
        .map(move |&e| (e, false));
    merge_by_edge(out, inc).filter_map(move |(e, forward)| {
        if !context.edges.contains(&e) {
            return None;
        }
        let (s, o) = graph.endpoints(e)?;
        let next = if forward { o } else { s };
        context.nodes.contains(&next).then_some((e, next))
    })
}

fn merge_by_edge<A, B>(a: A, b: B) -> impl Iterator<Item = (EdgeIx, bool)>
where
    A: Iterator<Item = (EdgeIx, bool)>,
    B: Iterator<Item = (EdgeIx, bool)>,
{
    let mut a = a.peekable();
    let mut b = b.peekable();
    std::iter::from_fn(move || match (a.peek(), b.peek()) {
        (Some(x), Some(y)) => {
            if x.0 <= y.0 {
                a.next()
            } else {
                b.next()
            }
        }
        (Some(_), None) => a.next(),
        (None, Some(_)) => b.next(),
        (None, None) => None,
    })
}

/// Steps into a node (reverse traversal), used for distance pruning.
fn reverse_steps<'a>(
    graph: &'a AssembledGraph,
    context: &'a Subgraph,
    node: NodeIx,
) -> impl Iterator<Item = NodeIx> + 'a {
    let inc = graph.in_edges(node).iter().map(move |&e| (e, true));
    let out = graph
        .out_edges(node)
        .iter()
        .filter(move |&&e| !graph.edge(e).directed)
        .map(move |&e| (e, false));
    inc.chain(out).filter_map(move |(e, incoming)| {
        if !context.edges.contains(&e) {
            return None;
        }
        let (s, o) = graph.endpoints(e)?;
        let prev = if incoming { s } else { o };
        context.nodes.contains(&prev).then_some(prev)
    })
}

struct Candidate {
    score: f64,
    id: String,
    nodes: Vec<NodeIx>,
    edges: Vec<EdgeIx>,
}

// Greater = ranks later: lower score, then larger id, then larger node
// sequence (an undirected edge walked both ways shares one id).
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then_with(|| self.id.cmp(&other.id))
            .then_with(|| self.nodes.cmp(&other.nodes))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// All simple paths from any source to any target of at most `max_len`
/// edges inside `context`, ranked by length, then evidence score
/// (descending), then path id, then node sequence; truncated to `cap`.
pub fn find_paths(
    graph: &AssembledGraph,
    context: &Subgraph,
    sources: &[NodeIx],
    targets: &[NodeIx],
    max_len: usize,
    cap: usize,
) -> PathSearch {
    let n = graph.node_count();
    let mut is_target = vec![false; n];
    for &t in targets {
        if context.nodes.contains(&t) {
            is_target[t as usize] = true;
        }
    }
    // Distance (in steps) to the nearest target, bounded by max_len.
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for (t, &flag) in is_target.iter().enumerate() {
        if flag {
            dist[t] = 0;
            queue.push_back(t as NodeIx);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        if d >= max_len {
            continue;
        }
        for u in reverse_steps(graph, context, v) {
            if dist[u as usize] == usize::MAX {
                dist[u as usize] = d + 1;
                queue.push_back(u);
            }
        }
    }

    let mut starts: Vec<NodeIx> = sources
        .iter()
        .copied()
        .filter(|s| context.nodes.contains(s))
        .collect();
    starts.sort_unstable();
    starts.dedup();

    let weight = |e: EdgeIx| (graph.edge(e).evidence_count as f64).ln_1p();
    let mut ranked: Vec<FoundPath> = Vec::new();
    let mut truncated = false;
    let mut on_path = vec![false; n];

    for length in 1..=max_len {
        let room = cap - ranked.len();
        let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();
        let mut found = 0usize;
        for &s in &starts {
            let mut nodes = vec![s];
            let mut edges = Vec::new();
            on_path[s as usize] = true;
            enumerate(
                graph,
                context,
                &dist,
                &is_target,
                length,
                &mut on_path,
                &mut nodes,
                &mut edges,
                &mut |nodes, edges| {
                    found += 1;
                    let score = edges.iter().map(|&e| weight(e)).sum();
                    let candidate = Candidate {
                        score,
                        id: path_id(graph, edges),
                        nodes: nodes.to_vec(),
                        edges: edges.to_vec(),
                    };
                    if heap.len() < room {
                        heap.push(candidate);
                    } else if heap.peek().is_some_and(|worst| candidate < *worst) {
                        heap.pop();
                        heap.push(candidate);
                    }
                    true
                },
            );
            on_path[s as usize] = false;
        }
        let level = heap.into_sorted_vec();
        ranked.extend(level.into_iter().map(|c| FoundPath {
            polarity: path_polarity(
                &c.edges
                    .iter()
                    .map(|&e| graph.edge(e).polarity)
                    .collect::<Vec<_>>(),
            ),
            nodes: c.nodes,
            edges: c.edges,
            score: c.score,
        }));
        if found > room {
            truncated = true;
            break;
        }
        if ranked.len() == cap {
            truncated = (length + 1..=max_len).any(|longer| {
                exists_path(graph, context, &dist, &is_target, &starts, longer, &mut on_path)
            });
            break;
        }
    }
    PathSearch {
        paths: ranked,
        truncated,
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    graph: &AssembledGraph,
    context: &Subgraph,
    dist: &[usize],
    is_target: &[bool],
    length: usize,
    on_path: &mut [bool],
    nodes: &mut Vec<NodeIx>,
    edges: &mut Vec<EdgeIx>,
    emit: &mut dyn FnMut(&[NodeIx], &[EdgeIx]) -> bool,
) -> bool {
    let here = *nodes.last().expect("nonempty path");
    if edges.len() == length {
        if is_target[here as usize] {
            return emit(nodes, edges);
        }
        return true;
    }
    let remaining = length - edges.len();
    for (e, next) in steps(graph, context, here) {
        if on_path[next as usize] || dist[next as usize] > remaining - 1 {
            continue;
        }
        on_path[next as usize] = true;
        nodes.push(next);
        edges.push(e);
        let keep_going = enumerate(
            graph, context, dist, is_target, length, on_path, nodes, edges, emit,
        );
        edges.pop();
        nodes.pop();
        on_path[next as usize] = false;
        if !keep_going {
            return false;
        }
    }
    true
}

fn exists_path(
    graph: &AssembledGraph,
    context: &Subgraph,
    dist: &[usize],
    is_target: &[bool],
    starts: &[NodeIx],
    length: usize,
    on_path: &mut [bool],
) -> bool {
    let mut any = false;
    for &s in starts {
        let mut nodes = vec![s];
        let mut edges = Vec::new();
        on_path[s as usize] = true;
        enumerate(
            graph,
            context,
            dist,
            is_target,
            length,
            on_path,
            &mut nodes,
            &mut edges,
            &mut |_, _| {
                any = true;
                false
            },
        );
        on_path[s as usize] = false;
        if any {
            break;
        }
    }
    any
}
