//! Layered left-to-right flow layout for extracted subgraphs.
//!
//! Classic three phases: greedy cycle removal, longest-path layering with
//! dummy chains for long edges, and barycenter crossing reduction, followed
//! by a single median alignment pass for vertical coordinates.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AssembledGraph, EdgeIx, NodeIx};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("input graph contains a cycle")]
    Cyclic,
    #[error("edge {edge:?} references node {node:?} outside the subgraph")]
    UnknownNode { edge: String, node: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEdge {
    pub id: String,
    pub subj: String,
    pub obj: String,
}

/// A subgraph to be laid out: nodes sorted by id, edges sorted by id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FlowGraph {
    nodes: Vec<String>,
    edges: Vec<FlowEdge>,
    ends: Vec<(usize, usize)>,
}

impl FlowGraph {
    /// Nodes referenced only by edges are added automatically. Self-loops are
    /// dropped.
    pub fn new(
        nodes: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = FlowEdge>,
    ) -> Self {
        let mut edges: Vec<FlowEdge> = edges.into_iter().filter(|e| e.subj != e.obj).collect();
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        edges.dedup_by(|a, b| a.id == b.id);
        let mut node_set: BTreeSet<String> = nodes.into_iter().collect();
        for e in &edges {
            node_set.insert(e.subj.clone());
            node_set.insert(e.obj.clone());
        }
        let nodes: Vec<String> = node_set.into_iter().collect();
        let ends = edges
            .iter()
            .map(|e| {
                let s = nodes.binary_search(&e.subj).expect("inserted");
                let o = nodes.binary_search(&e.obj).expect("inserted");
                (s, o)
            })
            .collect();
        Self { nodes, edges, ends }
    }

    pub fn from_graph(
        graph: &AssembledGraph,
        nodes: impl IntoIterator<Item = NodeIx>,
        edges: impl IntoIterator<Item = EdgeIx>,
    ) -> Self {
        Self::new(
            nodes.into_iter().map(|n| graph.agent(n).id.clone()),
            edges.into_iter().map(|e| {
                let edge = graph.edge(e);
                FlowEdge {
                    id: edge.id.clone(),
                    subj: edge.subj.clone(),
                    obj: edge.obj.clone(),
                }
            }),
        )
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[FlowEdge] {
        &self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Endpoint indices (into [`Self::nodes`]) of every edge.
    pub fn ends(&self) -> &[(usize, usize)] {
        &self.ends
    }
}

/// Greedy sink/source peeling. Returns, per edge, whether it must be
/// reversed to make the graph acyclic; no returned edge can be restored
/// alone without closing a cycle.
pub fn reversal_mask(graph: &FlowGraph) -> Vec<bool> {
    let n = graph.nodes.len();
    let mut out_deg = vec![0usize; n];
    let mut in_deg = vec![0usize; n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(s, o)) in graph.ends.iter().enumerate() {
        out_deg[s] += 1;
        in_deg[o] += 1;
        incident[s].push(e);
        incident[o].push(e);
    }
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut head = Vec::with_capacity(n);
    let mut tail = Vec::new();

    let remove = |v: usize,
                      alive: &mut Vec<bool>,
                      out_deg: &mut Vec<usize>,
                      in_deg: &mut Vec<usize>| {
        alive[v] = false;
        for &e in &incident[v] {
            let (s, o) = graph.ends[e];
            if s == v && alive[o] {
                in_deg[o] -= 1;
            } else if o == v && alive[s] {
                out_deg[s] -= 1;
            }
        }
    };

    while remaining > 0 {
        loop {
            let mut progressed = false;
            while let Some(v) = (0..n).find(|&v| alive[v] && out_deg[v] == 0) {
                remove(v, &mut alive, &mut out_deg, &mut in_deg);
                tail.push(v);
                remaining -= 1;
                progressed = true;
            }
            while let Some(v) = (0..n).find(|&v| alive[v] && in_deg[v] == 0) {
                remove(v, &mut alive, &mut out_deg, &mut in_deg);
                head.push(v);
                remaining -= 1;
                progressed = true;
            }
            if !progressed {
                break;
            }
        }
        if remaining == 0 {
            break;
        }
        let v = (0..n)
            .filter(|&v| alive[v])
            .max_by(|&a, &b| {
                let da = out_deg[a] as i64 - in_deg[a] as i64;
                let db = out_deg[b] as i64 - in_deg[b] as i64;
                da.cmp(&db).then(b.cmp(&a))
            })
            .expect("remaining > 0");
        remove(v, &mut alive, &mut out_deg, &mut in_deg);
        head.push(v);
        remaining -= 1;
    }
    head.extend(tail.into_iter().rev());
    let mut position = vec![0usize; n];
    for (i, &v) in head.iter().enumerate() {
        position[v] = i;
    }
    let mut reversed: Vec<bool> = graph
        .ends
        .iter()
        .map(|&(s, o)| position[s] > position[o])
        .collect();

    // Restore any reversal that is not needed for acyclicity.
    for e in 0..reversed.len() {
        if !reversed[e] {
            continue;
        }
        let (s, o) = graph.ends[e];
        if !reaches(graph, &reversed, o, s, e) {
            reversed[e] = false;
        }
    }
    reversed
}

/// Whether `to` is reachable from `from` in the oriented graph, ignoring
/// edge `skip`.
fn reaches(graph: &FlowGraph, reversed: &[bool], from: usize, to: usize, skip: usize) -> bool {
    let n = graph.nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(s, o)) in graph.ends.iter().enumerate() {
        if e == skip {
            continue;
        }
        let (a, b) = if reversed[e] { (o, s) } else { (s, o) };
        adj[a].push(b);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            return true;
        }
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

/// Ids of the edges to treat as reversed.
pub fn remove_cycles(graph: &FlowGraph) -> BTreeSet<String> {
    reversal_mask(graph)
        .into_iter()
        .zip(&graph.edges)
        .filter(|(r, _)| *r)
        .map(|(_, e)| e.id.clone())
        .collect()
}

/// Longest-path layering of a DAG given as `n` nodes and directed pairs.
pub fn layer(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, FlowError> {
    let mut indeg = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        indeg[b] += 1;
        succ[a].push(b);
    }
    let mut layer = vec![0usize; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop_front() {
        seen += 1;
        for &w in &succ[v] {
            layer[w] = layer[w].max(layer[v] + 1);
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    if seen != n {
        return Err(FlowError::Cyclic);
    }
    Ok(layer)
}

/// Layered graph whose edges all join adjacent layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProperLayering {
    pub layer_of: Vec<usize>,
    /// Initial-order key per vertex (node id, or a derived key for dummies).
    pub keys: Vec<String>,
    /// `(upper, lower)` with `layer_of[lower] == layer_of[upper] + 1`.
    pub edges: Vec<(usize, usize)>,
}

impl ProperLayering {
    pub fn layer_count(&self) -> usize {
        self.layer_of.iter().max().map_or(0, |m| m + 1)
    }

    /// Vertices of each layer sorted by key.
    pub fn initial_order(&self) -> Vec<Vec<usize>> {
        let mut layers = vec![Vec::new(); self.layer_count()];
        for (v, &l) in self.layer_of.iter().enumerate() {
            layers[l].push(v);
        }
        for layer in &mut layers {
            layer.sort_by(|&a, &b| self.keys[a].cmp(&self.keys[b]).then(a.cmp(&b)));
        }
        layers
    }
}

/// Crossings between consecutive layers for the given per-layer orders.
pub fn count_crossings(layers: &[Vec<usize>], layer_of: &[usize], edges: &[(usize, usize)]) -> usize {
    let mut slot = vec![0usize; layer_of.len()];
    for layer in layers {
        for (i, &v) in layer.iter().enumerate() {
            slot[v] = i;
        }
    }
    let mut by_layer: Vec<Vec<(usize, usize)>> = vec![Vec::new(); layers.len()];
    for &(u, v) in edges {
        by_layer[layer_of[u]].push((slot[u], slot[v]));
    }
    by_layer
        .iter_mut()
        .enumerate()
        .map(|(l, pairs)| {
            let width = layers.get(l + 1).map_or(0, Vec::len);
            pairs.sort_unstable();
            // Inversions of the lower endpoints, counted with a Fenwick tree.
            let mut tree = vec![0usize; width + 1];
            let mut total = 0;
            for (seen, &(_, lower)) in pairs.iter().enumerate() {
                let mut i = lower + 1;
                let mut not_greater = 0;
                while i > 0 {
                    not_greater += tree[i];
                    i &= i - 1;
                }
                total += seen - not_greater;
                let mut i = lower + 1;
                while i <= width {
                    tree[i] += 1;
                    i += i & i.wrapping_neg();
                }
            }
            total
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    pub layers: Vec<Vec<usize>>,
    pub crossings: usize,
    pub initial_crossings: usize,
}

pub const MAX_SWEEPS: usize = 8;

/// Barycenter sweeps (down then up) from the key-sorted initial order,
/// keeping the best ordering seen.
pub fn order(p: &ProperLayering) -> Ordering {
    let mut layers = p.initial_order();
    let initial_crossings = count_crossings(&layers, &p.layer_of, &p.edges);
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); p.layer_of.len()];
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); p.layer_of.len()];
    for &(u, v) in &p.edges {
        lower[u].push(v);
        upper[v].push(u);
    }
    let mut best = layers.clone();
    let mut best_crossings = initial_crossings;
    let mut slot = vec![0usize; p.layer_of.len()];
    let set_slots = |layers: &[Vec<usize>], slot: &mut [usize]| {
        for layer in layers {
            for (i, &v) in layer.iter().enumerate() {
                slot[v] = i;
            }
        }
    };

    for _ in 0..MAX_SWEEPS {
        if best_crossings == 0 {
            break;
        }
        let mut improved = false;
        for downward in [true, false] {
            set_slots(&layers, &mut slot);
            let count = layers.len();
            let sequence: Vec<usize> = if downward {
                (1..count).collect()
            } else {
                (0..count.saturating_sub(1)).rev().collect()
            };
            for l in sequence {
                let neighbours = if downward { &upper } else { &lower };
                let bary: Vec<(f64, usize)> = layers[l]
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let ns = &neighbours[v];
                        let b = if ns.is_empty() {
                            i as f64
                        } else {
                            ns.iter().map(|&w| slot[w] as f64).sum::<f64>() / ns.len() as f64
                        };
                        (b, v)
                    })
                    .collect();
                let mut sorted = bary;
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                layers[l] = sorted.into_iter().map(|(_, v)| v).collect();
                for (i, &v) in layers[l].iter().enumerate() {
                    slot[v] = i;
                }
            }
            let c = count_crossings(&layers, &p.layer_of, &p.edges);
            if c < best_crossings {
                best_crossings = c;
                best = layers.clone();
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ordering {
        layers: best,
        crossings: best_crossings,
        initial_crossings,
    }
}

/// Laid-out edge, points in the edge's original direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutedEdge<T> {
    pub id: String,
    pub points: Vec<(T, T)>,
    pub reversed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowLayout<T> {
    pub positions: BTreeMap<String, (T, T)>,
    pub layer_of: BTreeMap<String, usize>,
    pub reversed_edges: BTreeSet<String>,
    /// Dummy positions per long edge, in the edge's original direction.
    pub dummy_chains: BTreeMap<String, Vec<(T, T)>>,
    pub edges: Vec<RoutedEdge<T>>,
    pub crossings: usize,
    /// Crossings of the key-sorted ordering before reduction.
    pub initial_crossings: usize,
}

/// Full pipeline: cycle removal, layering, ordering and coordinates.
pub fn flow_layout<T: Scalar>(graph: &FlowGraph, layer_gap: T, node_gap: T) -> FlowLayout<T> {
    let n = graph.nodes.len();
    let reversed = reversal_mask(graph);
    let oriented: Vec<(usize, usize)> = graph
        .ends
        .iter()
        .zip(&reversed)
        .map(|(&(s, o), &r)| if r { (o, s) } else { (s, o) })
        .collect();
    let layers_of_nodes = layer(n, &oriented).expect("reversal leaves a DAG");

    // Dummy insertion.
    let mut layer_of = layers_of_nodes.clone();
    let mut keys: Vec<String> = graph.nodes.clone();
    let mut proper = Vec::new();
    let mut chains: Vec<Vec<usize>> = Vec::with_capacity(oriented.len());
    for (e, &(a, b)) in oriented.iter().enumerate() {
        let span = layer_of[b] - layer_of[a];
        let mut chain = vec![a];
        for k in 1..span {
            let d = layer_of.len();
            layer_of.push(layers_of_nodes[a] + k);
            keys.push(format!("{}#{k}", graph.edges[e].id));
            chain.push(d);
        }
        chain.push(b);
        for w in chain.windows(2) {
            proper.push((w[0], w[1]));
        }
        chains.push(chain);
    }
    let layering = ProperLayering {
        layer_of,
        keys,
        edges: proper,
    };
    let ordering = order(&layering);

    // Vertical coordinates: slots, then one median pass that keeps order.
    let total = layering.layer_of.len();
    let mut y = vec![T::zero(); total];
    let mut upper: Vec<Vec<usize>> = vec![Vec::new(); total];
    for &(u, v) in &layering.edges {
        upper[v].push(u);
    }
    for layer in &ordering.layers {
        for (i, &v) in layer.iter().enumerate() {
            y[v] = T::of_usize(i) * node_gap;
        }
    }
    for layer in ordering.layers.iter().skip(1) {
        let mut previous: Option<T> = None;
        for &v in layer {
            let mut ys: Vec<T> = upper[v].iter().map(|&u| y[u]).collect();
            let target = if ys.is_empty() {
                y[v]
            } else {
                ys.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
                let m = ys.len();
                if m % 2 == 1 {
                    ys[m / 2]
                } else {
                    (ys[m / 2 - 1] + ys[m / 2]) / T::lit(2.0)
                }
            };
            let placed = match previous {
                Some(p) => target.max(p + node_gap),
                None => target,
            };
            y[v] = placed;
            previous = Some(placed);
        }
    }
    let xy = |v: usize| (T::of_usize(layering.layer_of[v]) * layer_gap, y[v]);

    let mut edges = Vec::with_capacity(graph.edges.len());
    let mut dummy_chains = BTreeMap::new();
    for (e, chain) in chains.iter().enumerate() {
        let mut points: Vec<(T, T)> = chain.iter().map(|&v| xy(v)).collect();
        if reversed[e] {
            points.reverse();
        }
        if points.len() > 2 {
            dummy_chains.insert(graph.edges[e].id.clone(), points[1..points.len() - 1].to_vec());
        }
        edges.push(RoutedEdge {
            id: graph.edges[e].id.clone(),
            points,
            reversed: reversed[e],
        });
    }

    FlowLayout {
        positions: (0..n).map(|v| (graph.nodes[v].clone(), xy(v))).collect(),
        layer_of: (0..n)
            .map(|v| (graph.nodes[v].clone(), layers_of_nodes[v]))
            .collect(),
        reversed_edges: graph
            .edges
            .iter()
            .zip(&reversed)
            .filter(|(_, r)| **r)
            .map(|(e, _)| e.id.clone())
            .collect(),
        dummy_chains,
        edges,
        crossings: ordering.crossings,
        initial_crossings: ordering.initial_crossings,
    }
}
