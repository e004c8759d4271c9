//! Corpus services: document records and search, embedding neighbors,
//! 2D projection, density clustering with alpha-shape boundaries, and
//! document-to-graph links.

pub mod alpha;
pub mod hdbscan;
pub mod pca;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use alpha::{alpha_shape, convex_hull, default_alpha, AlphaError, Polygon};
pub use hdbscan::{hdbscan, ClusterError, Clustering, Level};
pub use pca::{principal_components, project_2d, Projection, ProjectionError};

use crate::ingest::{parse_jsonl, IngestError};
use crate::model::AssembledGraph;
use crate::scalar::{Matrix, Point2, Scalar};

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("{documents} documents but {rows} embedding rows")]
    RowCount { documents: usize, rows: usize },
    #[error("duplicate doi {0:?}")]
    DuplicateDoi(String),
    #[error("unknown doi {0:?}")]
    UnknownDoi(String),
    #[error("k must lie in [1, {max}], got {k}")]
    BadK { k: usize, max: usize },
    #[error("page_size must lie in [1, {MAX_PAGE_SIZE}], got {0}")]
    PageSize(usize),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub const MAX_PAGE_SIZE: usize = 500;

/// One corpus document; `row` indexes the embedding matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doi: String,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub publisher: String,
    pub year: i32,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub figures: u32,
    #[serde(default)]
    pub tables: u32,
    #[serde(default, skip_serializing)]
    pub row: usize,
}

/// Reads documents.jsonl, numbering rows by line order.
pub fn parse_documents(reader: impl BufRead) -> Result<Vec<DocumentRecord>, IngestError> {
    let mut docs: Vec<DocumentRecord> = parse_jsonl(reader)?;
    for (i, d) in docs.iter_mut().enumerate() {
        d.row = i;
    }
    Ok(docs)
}

/// Documents plus their embeddings with precomputed norms.
#[derive(Clone, Debug)]
pub struct Corpus {
    documents: Vec<DocumentRecord>,
    embeddings: Matrix<f32>,
    norms: Vec<f64>,
    by_doi: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(mut documents: Vec<DocumentRecord>, embeddings: Matrix<f32>) -> Result<Self, KnowledgeError> {
        if documents.len() != embeddings.rows() {
            return Err(KnowledgeError::RowCount {
                documents: documents.len(),
                rows: embeddings.rows(),
            });
        }
        let mut by_doi = HashMap::with_capacity(documents.len());
        for (i, d) in documents.iter_mut().enumerate() {
            d.row = i;
            if by_doi.insert(d.doi.clone(), i).is_some() {
                return Err(KnowledgeError::DuplicateDoi(d.doi.clone()));
            }
        }
        let norms: Vec<f64> = embeddings
            .iter_rows()
            .map(|r| r.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt())
            .collect();
        let zero = norms.iter().filter(|&&n| n == 0.0).count();
        if zero > 0 {
            log::warn!("{zero} documents have zero-norm embeddings and are excluded from neighbor search");
        }
        Ok(Self {
            documents,
            embeddings,
            norms,
            by_doi,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[DocumentRecord] {
        &self.documents
    }

    pub fn embeddings(&self) -> &Matrix<f32> {
        &self.embeddings
    }

    pub fn get(&self, doi: &str) -> Option<&DocumentRecord> {
        self.by_doi.get(doi).map(|&i| &self.documents[i])
    }

    pub fn row_of(&self, doi: &str) -> Option<usize> {
        self.by_doi.get(doi).copied()
    }

    /// Cosine similarity between two rows; zero if either norm is zero.
    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.norms[a], self.norms[b]);
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let d: f64 = self
            .embeddings
            .row(a)
            .iter()
            .zip(self.embeddings.row(b))
            .map(|(&x, &y)| f64::from(x) * f64::from(y))
            .sum();
        d / (na * nb)
    }

    /// Top-k documents by cosine similarity to `doi`, excluding itself and
    /// zero-norm rows; ties by doi ascending.
    pub fn semantic_neighbors(&self, doi: &str, k: usize) -> Result<Vec<(usize, f64)>, KnowledgeError> {
        let q = self
            .row_of(doi)
            .ok_or_else(|| KnowledgeError::UnknownDoi(doi.to_string()))?;
        let max = self.len().saturating_sub(1);
        if k == 0 || k > max {
            return Err(KnowledgeError::BadK { k, max });
        }
        if self.norms[q] == 0.0 {
            log::warn!("document {doi} has a zero-norm embedding; no neighbors");
            return Ok(Vec::new());
        }
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .filter(|&r| r != q && self.norms[r] > 0.0)
            .map(|r| (r, self.cosine(q, r)))
            .collect();
        let order = |a: &(usize, f64), b: &(usize, f64)| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.documents[a.0].doi.cmp(&self.documents[b.0].doi))
        };
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored)
    }

    /// Conjunctive facet filter ordered by (year desc, doi asc), paged from
    /// page 0.
    pub fn search(&self, facets: &SearchFacets, page: usize, page_size: usize) -> Result<DocumentPage, KnowledgeError> {
        if !(1..=MAX_PAGE_SIZE).contains(&page_size) {
            return Err(KnowledgeError::PageSize(page_size));
        }
        let facets = facets.lowered();
        let mut hits: Vec<usize> = self
            .documents
            .iter()
            .filter(|d| facets.matches(d))
            .map(|d| d.row)
            .collect();
        hits.sort_by(|&a, &b| {
            let (da, db) = (&self.documents[a], &self.documents[b]);
            db.year.cmp(&da.year).then_with(|| da.doi.cmp(&db.doi))
        });
        let total = hits.len();
        let rows = hits
            .into_iter()
            .skip(page.saturating_mul(page_size))
            .take(page_size)
            .collect();
        Ok(DocumentPage {
            total,
            page,
            page_size,
            rows,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchFacets {
    pub text: Option<String>,
    pub author: Option<String>,
    pub publisher: Option<String>,
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub has_figures: Option<bool>,
    pub has_tables: Option<bool>,
    pub entity: Option<String>,
}

impl SearchFacets {
    fn lowered(&self) -> SearchFacets {
        let low = |s: &Option<String>| s.as_ref().map(|s| s.to_lowercase());
        SearchFacets {
            text: low(&self.text),
            author: low(&self.author),
            publisher: low(&self.publisher),
            entity: low(&self.entity),
            ..self.clone()
        }
    }

    /// Expects lowercased text facets.
    fn matches(&self, d: &DocumentRecord) -> bool {
        let has = |hay: &str, needle: &str| hay.to_lowercase().contains(needle);
        if let Some(t) = &self.text {
            if !has(&d.title, t) && !has(&d.abstract_text, t) {
                return false;
            }
        }
        if let Some(a) = &self.author {
            if !d.authors.iter().any(|x| has(x, a)) {
                return false;
            }
        }
        if let Some(p) = &self.publisher {
            if !has(&d.publisher, p) {
                return false;
            }
        }
        if let Some(e) = &self.entity {
            if !d.entities.iter().any(|x| has(x, e)) {
                return false;
            }
        }
        if self.year_min.is_some_and(|y| d.year < y) || self.year_max.is_some_and(|y| d.year > y) {
            return false;
        }
        if self.has_figures.is_some_and(|want| want != (d.figures > 0)) {
            return false;
        }
        if self.has_tables.is_some_and(|want| want != (d.tables > 0)) {
            return false;
        }
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentPage {
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphLink {
    pub graph: String,
    pub edges: Vec<String>,
}

/// Inverse index doi → graph → citing edge ids.
#[derive(Clone, Debug, Default)]
pub struct DocGraphIndex {
    links: HashMap<String, BTreeMap<String, BTreeSet<String>>>,
}

impl DocGraphIndex {
    pub fn build<'a>(graphs: impl IntoIterator<Item = &'a AssembledGraph>) -> Self {
        let mut links: HashMap<String, BTreeMap<String, BTreeSet<String>>> = HashMap::new();
        for g in graphs {
            for e in g.edges() {
                let dois = e.dois.iter().chain(e.evidence.iter().map(|ev| &ev.doi));
                for doi in dois {
                    links
                        .entry(doi.clone())
                        .or_default()
                        .entry(g.id().to_string())
                        .or_default()
                        .insert(e.id.clone());
                }
            }
        }
        Self { links }
    }

    /// Links sorted by graph id; empty for unknown dois.
    pub fn graphs_for_document(&self, doi: &str) -> Vec<GraphLink> {
        self.links.get(doi).map_or_else(Vec::new, |by_graph| {
            by_graph
                .iter()
                .map(|(g, edges)| GraphLink {
                    graph: g.clone(),
                    edges: edges.iter().cloned().collect(),
                })
                .collect()
        })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster<T> {
    pub id: usize,
    pub parent: Option<usize>,
    pub level: Level,
    pub members: BTreeSet<usize>,
    pub stability: T,
    pub hue: usize,
    pub boundary: Option<Polygon<T>>,
}

/// Coarse and fine clusters with boundaries, plus noise rows.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree<T> {
    pub clusters: Vec<Cluster<T>>,
    pub noise: BTreeSet<usize>,
}

impl<T: Scalar> ClusterTree<T> {
    pub fn level(&self, level: Level) -> impl Iterator<Item = &Cluster<T>> {
        self.clusters.iter().filter(move |c| c.level == level)
    }

    /// Cluster id per row at `level`, `None` for noise.
    pub fn labels(&self, n: usize, level: Level) -> Vec<Option<usize>> {
        let mut labels = vec![None; n];
        for c in self.level(level) {
            for &m in &c.members {
                labels[m] = Some(c.id);
            }
        }
        labels
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    /// Starting alpha radius for boundaries; per-cluster default when unset.
    pub alpha: Option<f64>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            min_cluster_size: 25,
            min_samples: 5,
            alpha: None,
        }
    }
}

const ALPHA_ATTEMPTS: usize = 8;

/// Single boundary polygon enclosing every point. The alpha radius starts
/// at `alpha` (or the default) and doubles while the shape splits into several pieces;
/// the convex hull is the last resort. Collinear or tiny sets get a
/// slightly inflated bounding box.
pub fn cluster_boundary<T: Scalar>(points: &[Point2<T>], alpha: Option<T>) -> Polygon<T> {
    let mut alpha = alpha.unwrap_or_else(|| default_alpha(points));
    for _ in 0..ALPHA_ATTEMPTS {
        match alpha_shape(points, alpha) {
            Ok(mut polys) if polys.len() == 1 => return polys.pop().expect("one polygon"),
            Ok(_) => alpha = alpha * T::lit(2.0),
            Err(_) => return inflated_bbox(points),
        }
    }
    match convex_hull(points) {
        Ok(hull) => Polygon {
            vertices: hull.iter().map(|&i| points[i]).collect(),
        },
        Err(_) => inflated_bbox(points),
    }
}

fn inflated_bbox<T: Scalar>(points: &[Point2<T>]) -> Polygon<T> {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y);
    let eps = if span > T::zero() {
        span * T::lit(1e-3)
    } else {
        T::lit(1e-3)
    };
    let (lo, hi) = (
        Point2::new(lo.x - eps, lo.y - eps),
        Point2::new(hi.x + eps, hi.y + eps),
    );
    Polygon {
        vertices: vec![lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)],
    }
}

/// Clusters 2D coordinates and draws a boundary for every cluster.
pub fn cluster<T: Scalar>(points: &[Point2<T>], params: ClusterParams) -> Result<ClusterTree<T>, ClusterError> {
    let raw = hdbscan(points, params.min_cluster_size, params.min_samples)?;
    let clusters = raw
        .clusters
        .into_iter()
        .map(|c| {
            let member_points: Vec<Point2<T>> = c.members.iter().map(|&m| points[m]).collect();
            Cluster {
                boundary: Some(cluster_boundary(&member_points, params.alpha.map(T::lit))),
                id: c.id,
                parent: c.parent,
                level: c.level,
                members: c.members,
                stability: c.stability,
                hue: c.hue,
            }
        })
        .collect();
    Ok(ClusterTree {
        clusters,
        noise: raw.noise,
    })
}

/// Rows of an n×2 matrix as points.
pub fn points_of<T: Scalar>(coords: &Matrix<T>) -> Vec<Point2<T>> {
    coords.iter_rows().map(|r| Point2::new(r[0], r[1])).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportPoint {
    pub doi: String,
    pub x: f64,
    pub y: f64,
    pub cluster: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportCluster {
    pub id: usize,
    pub parent: Option<usize>,
    pub level: Level,
    pub hue: usize,
    pub stability: f64,
    pub polygon: Option<Vec<[f64; 2]>>,
}

/// Cluster view payload; `level` selects which clusters are listed and
/// which id each point reports (all levels report fine ids).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterExport {
    pub points: Vec<ExportPoint>,
    pub clusters: Vec<ExportCluster>,
    pub noise: Vec<String>,
}

impl ClusterExport {
    pub fn new<T: Scalar>(corpus: &Corpus, coords: &[Point2<T>], tree: &ClusterTree<T>, level: Option<Level>) -> Self {
        let labels = tree.labels(corpus.len(), level.unwrap_or(Level::Fine));
        let points = corpus
            .documents()
            .iter()
            .zip(coords)
            .zip(labels)
            .map(|((d, p), cluster)| ExportPoint {
                doi: d.doi.clone(),
                x: p.x.as_f64(),
                y: p.y.as_f64(),
                cluster,
            })
            .collect();
        let clusters = tree
            .clusters
            .iter()
            .filter(|c| level.is_none_or(|l| c.level == l))
            .map(|c| ExportCluster {
                id: c.id,
                parent: c.parent,
                level: c.level,
                hue: c.hue,
                stability: c.stability.as_f64(),
                polygon: c
                    .boundary
                    .as_ref()
                    .map(|p| p.vertices.iter().map(|v| [v.x.as_f64(), v.y.as_f64()]).collect()),
            })
            .collect();
        let noise = tree
            .noise
            .iter()
            .map(|&r| corpus.documents()[r].doi.clone())
            .collect();
        Self {
            points,
            clusters,
            noise,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(doi: &str, year: i32, title: &str) -> DocumentRecord {
        DocumentRecord {
            doi: doi.into(),
            title: title.into(),
            authors: vec!["Ada Lovelace".into()],
            publisher: "Press".into(),
            year,
            abstract_text: String::new(),
            entities: vec![],
            figures: 1,
            tables: 0,
            row: 0,
        }
    }

    fn corpus() -> Corpus {
        let docs = vec![doc("10.1/a", 2020, "IL6 signalling"), doc("10.1/b", 2021, "Tocilizumab trial"), doc("10.1/c", 2021, "il6 again")];
        let emb = Matrix::from_row_major(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        Corpus::new(docs, emb).unwrap()
    }

    #[test]
    fn duplicate_row_ranks_first() {
        let c = corpus();
        let n = c.semantic_neighbors("10.1/a", 1).unwrap();
        assert_eq!(n, vec![(2, 1.0)]);
        assert!(matches!(c.semantic_neighbors("10.1/a", 3), Err(KnowledgeError::BadK { .. })));
        assert!(matches!(c.semantic_neighbors("x", 1), Err(KnowledgeError::UnknownDoi(_))));
    }

    #[test]
    fn search_orders_by_year_then_doi() {
        let c = corpus();
        let facets = SearchFacets {
            text: Some("IL6".into()),
            ..Default::default()
        };
        assert_eq!(c.search(&facets, 0, 10).unwrap().rows, vec![2, 0]);
        assert_eq!(c.search(&SearchFacets::default(), 1, 2).unwrap().rows, vec![0]);
        assert!(c.search(&facets, 0, 0).is_err());
        let tables = SearchFacets {
            has_tables: Some(true),
            ..Default::default()
        };
        assert_eq!(c.search(&tables, 0, 10).unwrap().total, 0);
    }

    #[test]
    fn row_count_mismatch() {
        let emb = Matrix::from_row_major(1, 2, vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            Corpus::new(vec![doc("a", 1, ""), doc("b", 1, "")], emb),
            Err(KnowledgeError::RowCount { .. })
        ));
    }

    #[test]
    fn boundary_of_collinear_points_is_a_box() {
        let pts: Vec<Point2<f64>> = (0..5).map(|i| Point2::new(i as f64, 0.0)).collect();
        let b = cluster_boundary(&pts, None);
        assert_eq!(b.vertices.len(), 4);
        assert!(pts.iter().all(|&p| b.contains(p, 1e-9)));
    }
}
