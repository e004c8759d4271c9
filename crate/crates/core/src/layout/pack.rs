//! Hierarchical circle packing of the ontology.
//!
//! Leaves are agents (or empty categories). Each group of siblings is laid
//! out with a front-chain packer in order of decreasing radius, the parent is
//! the smallest enclosing circle of its children inflated by the padding, and
//! the root ends up centered at the origin.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::enclose::{min_enclosing_circle, Circle};
use crate::model::{AssembledGraph, OntologyNode};
use crate::scalar::{Point2, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackError {
    #[error("leaf {id:?} has non-positive weight {weight}")]
    InvalidWeight { id: String, weight: f64 },
    #[error("duplicate node id {0:?} in packing input")]
    DuplicateId(String),
}

/// How leaf (agent) circles are sized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafWeight {
    Uniform,
    /// One plus the agent's undirected degree.
    #[default]
    Degree,
}

/// Gap between a parent ring and the enclosing circle of its children.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Padding<T> {
    Fixed(T),
    /// `max(fraction * enclosing radius, floor)`.
    Relative { fraction: T, floor: T },
}

impl<T: Scalar> Default for Padding<T> {
    fn default() -> Self {
        Padding::Relative {
            fraction: T::lit(0.02),
            floor: T::one(),
        }
    }
}

impl<T: Scalar> Padding<T> {
    fn amount(&self, enclosing_radius: T) -> T {
        match *self {
            Padding::Fixed(p) => p.max(T::zero()),
            Padding::Relative { fraction, floor } => (fraction * enclosing_radius).max(floor),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Category,
    Agent,
}

/// Input tree for [`pack`].
#[derive(Clone, Debug, PartialEq)]
pub struct PackNode<T> {
    pub id: String,
    pub kind: NodeKind,
    /// Used for leaves only.
    pub weight: T,
    pub children: Vec<PackNode<T>>,
}

impl<T: Scalar> PackNode<T> {
    pub fn leaf(id: impl Into<String>, weight: T) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Category,
            weight,
            children: Vec::new(),
        }
    }

    pub fn group(id: impl Into<String>, children: Vec<PackNode<T>>) -> Self {
        Self {
            id: id.into(),
            kind: NodeKind::Category,
            weight: T::one(),
            children,
        }
    }

    /// Ontology categories with the graph's agents hung under their
    /// categories as leaves.
    pub fn from_graph(graph: &AssembledGraph, mode: LeafWeight) -> Self {
        Self::from_ontology(graph.ontology(), &|agent_id| match mode {
            LeafWeight::Uniform => T::one(),
            LeafWeight::Degree => graph
                .node_ix(agent_id)
                .map_or(T::one(), |ix| T::of_usize(1 + graph.degree(ix))),
        })
    }

    fn from_ontology(node: &OntologyNode, weight_of: &dyn Fn(&str) -> T) -> Self {
        let mut children: Vec<PackNode<T>> = node
            .children
            .iter()
            .map(|c| Self::from_ontology(c, weight_of))
            .collect();
        children.extend(node.member_agents.iter().map(|a| PackNode {
            id: a.clone(),
            kind: NodeKind::Agent,
            weight: weight_of(a),
            children: Vec::new(),
        }));
        PackNode {
            id: node.id.clone(),
            kind: NodeKind::Category,
            weight: T::one(),
            children,
        }
    }

    pub fn leaf_count(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(PackNode::leaf_count).sum()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackedNode<T> {
    pub id: String,
    pub kind: NodeKind,
    pub depth: usize,
    pub circle: Circle<T>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

/// Packed geometry, nodes in pre-order with the root first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CirclePack<T> {
    pub nodes: Vec<PackedNode<T>>,
    pub padding: Padding<T>,
    pub leaf_weight: LeafWeight,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl<T: Scalar> CirclePack<T> {
    pub fn root(&self) -> &PackedNode<T> {
        &self.nodes[0]
    }

    pub fn get(&self, id: &str) -> Option<&PackedNode<T>> {
        self.position(id).map(|i| &self.nodes[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn parent_of(&self, i: usize) -> Option<&PackedNode<T>> {
        self.nodes[i].parent.map(|p| &self.nodes[p])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &PackedNode<T>> {
        self.nodes.iter().filter(|n| n.children.is_empty())
    }

    /// Whether `ancestor` is `node` or one of its ancestors.
    pub fn is_ancestor(&self, ancestor: usize, mut node: usize) -> bool {
        loop {
            if node == ancestor {
                return true;
            }
            match self.nodes[node].parent {
                Some(p) => node = p,
                None => return false,
            }
        }
    }

    /// Nodes visible at `zoom_scale`: a node discloses its children when its
    /// projected radius reaches `threshold_px`. Disclosed nodes stay visible
    /// as rings around their children.
    pub fn visible(&self, zoom_scale: T, threshold_px: T) -> BTreeSet<String> {
        let mut visible = BTreeSet::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            visible.insert(node.id.clone());
            if node.circle.radius * zoom_scale >= threshold_px {
                stack.extend(node.children.iter().copied());
            }
        }
        visible
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.clone(), i))
            .collect();
    }
}

/// Default projected radius (pixels) at which a group discloses its children.
pub const DEFAULT_LOD_THRESHOLD_PX: f64 = 50.0;

/// Visible ontology node ids at a zoom scale.
pub fn lod_depth<T: Scalar>(
    zoom_scale: T,
    pack: &CirclePack<T>,
    threshold_px: T,
) -> BTreeSet<String> {
    pack.visible(zoom_scale, threshold_px)
}

/// Packs `tree`; leaf radius is `base * sqrt(weight)`.
pub fn pack<T: Scalar>(
    tree: &PackNode<T>,
    padding: Padding<T>,
    base: T,
    leaf_weight: LeafWeight,
) -> Result<CirclePack<T>, PackError> {
    // Bottom-up: radii and child offsets relative to the parent center.
    struct Local<T> {
        radius: T,
        offsets: Vec<Point2<T>>,
        children: Vec<Local<T>>,
    }

    fn solve<T: Scalar>(
        node: &PackNode<T>,
        padding: &Padding<T>,
        base: T,
    ) -> Result<Local<T>, PackError> {
        if node.children.is_empty() {
            if !(node.weight > T::zero() && node.weight.is_finite()) {
                return Err(PackError::InvalidWeight {
                    id: node.id.clone(),
                    weight: node.weight.as_f64(),
                });
            }
            return Ok(Local {
                radius: base * node.weight.sqrt(),
                offsets: Vec::new(),
                children: Vec::new(),
            });
        }
        let children = node
            .children
            .iter()
            .map(|c| solve(c, padding, base))
            .collect::<Result<Vec<_>, _>>()?;
        let mut order: Vec<usize> = (0..children.len()).collect();
        order.sort_by(|&a, &b| {
            children[b]
                .radius
                .partial_cmp(&children[a].radius)
                .expect("finite radii")
                .then_with(|| node.children[a].id.cmp(&node.children[b].id))
        });
        let radii: Vec<T> = order.iter().map(|&i| children[i].radius).collect();
        let (placed, enclosing) = pack_siblings(&radii);
        let mut offsets = vec![Point2::origin(); children.len()];
        for (slot, &i) in order.iter().enumerate() {
            offsets[i] = placed[slot];
        }
        Ok(Local {
            radius: enclosing + padding.amount(enclosing),
            offsets,
            children,
        })
    }

    fn emit<T: Scalar>(
        node: &PackNode<T>,
        local: &Local<T>,
        center: Point2<T>,
        depth: usize,
        parent: Option<usize>,
        out: &mut Vec<PackedNode<T>>,
    ) -> usize {
        let me = out.len();
        out.push(PackedNode {
            id: node.id.clone(),
            kind: node.kind,
            depth,
            circle: Circle {
                center,
                radius: local.radius,
            },
            parent,
            children: Vec::new(),
        });
        for (i, child) in node.children.iter().enumerate() {
            let c = emit(
                child,
                &local.children[i],
                center.add(local.offsets[i]),
                depth + 1,
                Some(me),
                out,
            );
            out[me].children.push(c);
        }
        me
    }

    let local = solve(tree, &padding, base)?;
    let mut nodes = Vec::new();
    emit(tree, &local, Point2::origin(), 0, None, &mut nodes);
    let mut pack = CirclePack {
        nodes,
        padding,
        leaf_weight,
        index: HashMap::new(),
    };
    pack.rebuild_index();
    if pack.index.len() != pack.nodes.len() {
        let mut seen = BTreeSet::new();
        let dup = pack
            .nodes
            .iter()
            .find(|n| !seen.insert(n.id.as_str()))
            .expect("a duplicate exists");
        return Err(PackError::DuplicateId(dup.id.clone()));
    }
    Ok(pack)
}

/// Convenience: pack a graph's ontology with the given leaf weighting and the
/// default padding.
pub fn pack_graph(graph: &AssembledGraph, leaf_weight: LeafWeight) -> Result<CirclePack<f64>, PackError> {
    let tree = PackNode::from_graph(graph, leaf_weight);
    pack(&tree, Padding::default(), 1.0, leaf_weight)
}

/// Front-chain packing of circles with the given radii (already in placement
/// order). Returns centers relative to the enclosing circle's center and the
/// enclosing radius.
pub fn pack_siblings<T: Scalar>(radii: &[T]) -> (Vec<Point2<T>>, T) {
    let n = radii.len();
    let mut pos = vec![Point2::origin(); n];
    match n {
        0 => return (pos, T::zero()),
        1 => return (pos, radii[0]),
        _ => {}
    }
    pos[0] = Point2::new(-radii[1], T::zero());
    pos[1] = Point2::new(radii[0], T::zero());
    if n > 2 {
        pos[2] = place(pos[1], radii[1], pos[0], radii[0], radii[2]);

        // Doubly linked front chain over circle indices.
        let mut next = vec![usize::MAX; n];
        let mut prev = vec![usize::MAX; n];
        let (mut a, mut b) = (0usize, 1usize);
        next[0] = 1;
        prev[1] = 0;
        next[1] = 2;
        prev[2] = 1;
        next[2] = 0;
        prev[0] = 2;

        let mut i = 3;
        'pack: while i < n {
            pos[i] = place(pos[a], radii[a], pos[b], radii[b], radii[i]);
            let (mut j, mut k) = (next[b], prev[a]);
            let (mut sj, mut sk) = (radii[b], radii[a]);
            loop {
                if sj <= sk {
                    if intersects(pos[j], radii[j], pos[i], radii[i]) {
                        b = j;
                        next[a] = b;
                        prev[b] = a;
                        continue 'pack;
                    }
                    sj = sj + radii[j];
                    j = next[j];
                } else {
                    if intersects(pos[k], radii[k], pos[i], radii[i]) {
                        a = k;
                        next[a] = b;
                        prev[b] = a;
                        continue 'pack;
                    }
                    sk = sk + radii[k];
                    k = prev[k];
                }
                if j == next[k] {
                    break;
                }
            }
            // Insert i between a and b.
            prev[i] = a;
            next[i] = b;
            next[a] = i;
            prev[b] = i;
            b = i;

            // New closest pair to the centroid.
            let score = |c: usize| {
                let d = next[c];
                let ab = radii[c] + radii[d];
                let x = (pos[c].x * radii[d] + pos[d].x * radii[c]) / ab;
                let y = (pos[c].y * radii[d] + pos[d].y * radii[c]) / ab;
                x * x + y * y
            };
            let mut best = score(a);
            let mut c = next[b];
            while c != b {
                let s = score(c);
                if s < best {
                    a = c;
                    best = s;
                }
                c = next[c];
            }
            b = next[a];
            i += 1;
        }
    }
    let circles: Vec<Circle<T>> = pos
        .iter()
        .zip(radii)
        .map(|(p, &r)| Circle { center: *p, radius: r })
        .collect();
    let enclosing = min_enclosing_circle(&circles).expect("nonempty");
    for p in &mut pos {
        *p = p.sub(enclosing.center);
    }
    (pos, enclosing.radius)
}

/// Center of a circle of radius `rc` tangent to circles `(a, ra)` and
/// `(b, rb)`.
fn place<T: Scalar>(b: Point2<T>, rb: T, a: Point2<T>, ra: T, rc: T) -> Point2<T> {
    let d = b.sub(a);
    let d2 = d.dot(d);
    if d2 <= T::zero() {
        return Point2::new(a.x + rc, a.y);
    }
    let two = T::lit(2.0);
    let a2 = (ra + rc) * (ra + rc);
    let b2 = (rb + rc) * (rb + rc);
    if a2 > b2 {
        let x = (d2 + b2 - a2) / (two * d2);
        let y = (b2 / d2 - x * x).max(T::zero()).sqrt();
        Point2::new(b.x - x * d.x - y * d.y, b.y - x * d.y + y * d.x)
    } else {
        let x = (d2 + a2 - b2) / (two * d2);
        let y = (a2 / d2 - x * x).max(T::zero()).sqrt();
        Point2::new(a.x + x * d.x - y * d.y, a.y + x * d.y + y * d.x)
    }
}

fn intersects<T: Scalar>(a: Point2<T>, ra: T, b: Point2<T>, rb: T) -> bool {
    let dr = (ra + rb) * (T::one() - T::lit(1e-7));
    let d = b.sub(a);
    dr > T::zero() && dr * dr > d.dot(d)
}
