//! Geometry for the overview (circle packing, hyper-edge routes, semantic
//! zoom) and for extracted subgraphs (layered flow layout).

pub mod enclose;
pub mod flow;
pub mod pack;
pub mod route;

use serde::{Deserialize, Serialize};

use crate::ingest::HyperEdge;
use crate::scalar::Scalar;
use enclose::Circle;
use flow::FlowLayout;
use pack::CirclePack;
use route::{RoutedPath, Segment};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleRecord<T> {
    pub id: String,
    pub x: T,
    pub y: T,
    pub r: T,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperEdgeRecord<T> {
    pub id: String,
    pub level: usize,
    pub src: String,
    pub dst: String,
    pub count: usize,
    pub brightness: T,
    pub segments: Vec<Segment<T>>,
}

/// Overview payload: circles plus routed hyper-edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GlobalLayoutExport<T> {
    pub circles: Vec<CircleRecord<T>>,
    pub hyper_edges: Vec<HyperEdgeRecord<T>>,
}

impl<T: Scalar> GlobalLayoutExport<T> {
    /// Circles no deeper than `max_depth` and the given routed bundles.
    pub fn new(
        pack: &CirclePack<T>,
        max_depth: usize,
        bundles: &[HyperEdge],
        routes: &[RoutedPath<T>],
    ) -> Self {
        let circles = pack
            .nodes
            .iter()
            .filter(|n| n.depth <= max_depth)
            .map(|n| circle_record(&n.id, &n.circle, n.depth))
            .collect();
        let hyper_edges = bundles
            .iter()
            .zip(routes)
            .map(|(b, r)| HyperEdgeRecord {
                id: b.id(),
                level: b.level,
                src: b.source_category.clone(),
                dst: b.target_category.clone(),
                count: b.count,
                brightness: r.brightness,
                segments: r.segments.clone(),
            })
            .collect();
        Self {
            circles,
            hyper_edges,
        }
    }
}

fn circle_record<T: Scalar>(id: &str, c: &Circle<T>, depth: usize) -> CircleRecord<T> {
    CircleRecord {
        id: id.to_string(),
        x: c.center.x,
        y: c.center.y,
        r: c.radius,
        depth,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowNodeRecord<T> {
    pub id: String,
    pub layer: usize,
    pub x: T,
    pub y: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowEdgeRecord<T> {
    pub id: String,
    pub points: Vec<(T, T)>,
    pub reversed: bool,
}

/// Subgraph layout payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowLayoutExport<T> {
    pub nodes: Vec<FlowNodeRecord<T>>,
    pub edges: Vec<FlowEdgeRecord<T>>,
    pub crossings: usize,
}

impl<T: Scalar> From<&FlowLayout<T>> for FlowLayoutExport<T> {
    fn from(layout: &FlowLayout<T>) -> Self {
        Self {
            nodes: layout
                .positions
                .iter()
                .map(|(id, &(x, y))| FlowNodeRecord {
                    id: id.clone(),
                    layer: layout.layer_of[id],
                    x,
                    y,
                })
                .collect(),
            edges: layout
                .edges
                .iter()
                .map(|e| FlowEdgeRecord {
                    id: e.id.clone(),
                    points: e.points.clone(),
                    reversed: e.reversed,
                })
                .collect(),
            crossings: layout.crossings,
        }
    }
}
