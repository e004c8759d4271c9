//! Causal-graph atlas: data model, ingestion, overview and subgraph layout,
//! faceted queries, and literature clustering.

pub mod fixtures;
pub mod ingest;
pub mod knowledge;
pub mod layout;
pub mod model;
pub mod query;
pub mod scalar;

pub use model::{AssembledGraph, EdgeIx, NodeIx};
pub use scalar::{Point2, Scalar};

pub type Circle = layout::enclose::Circle<f64>;
pub type Circle32 = layout::enclose::Circle<f32>;
pub type CirclePack = layout::pack::CirclePack<f64>;
pub type CirclePack32 = layout::pack::CirclePack<f32>;
pub type FlowLayout = layout::flow::FlowLayout<f64>;
pub type RoutedPath = layout::route::RoutedPath<f64>;
pub type Point = Point2<f64>;
pub type Polygon = knowledge::Polygon<f64>;
pub type Polygon32 = knowledge::Polygon<f32>;
pub type ClusterTree = knowledge::ClusterTree<f64>;
pub type ClusterTree32 = knowledge::ClusterTree<f32>;
