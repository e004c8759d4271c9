//! HTTP JSON routes over an immutable [`Dataset`].

use std::collections::BTreeMap;
use std::sync::Arc;

use atlas_core::knowledge::{ClusterExport, DocumentRecord, Level, SearchFacets};
use atlas_core::layout::flow::{flow_layout, FlowGraph};
use atlas_core::layout::{FlowLayoutExport, GlobalLayoutExport};
use atlas_core::model::{AssembledGraph, Edge};
use atlas_core::query::{run_chain, suggest_neighbors, Direction, QueryChain, QueryError, Subgraph};
use axum::body::Bytes;
use axum::extract::{Path, Query, Request, State};
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::dataset::{Dataset, GraphData};

pub const VERSION_HEADER: &str = "x-dataset-version";
pub const DEFAULT_PAGE_SIZE: usize = 20;
pub const DEFAULT_NEIGHBORS: usize = 10;
pub const EVIDENCE_NEIGHBORS: usize = 5;
const LAYER_GAP: f64 = 120.0;
const NODE_GAP: f64 = 80.0;

/// Error response: `{"error": message, ...detail}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let mut err = ApiError::bad_request(e.to_string());
        if let Some(facet) = e.facet() {
            err = err.with("facet", json!(facet));
        }
        match &e {
            QueryError::UnknownField { field, .. } | QueryError::TypeMismatch { field, .. } => {
                err.with("field", json!(field))
            }
            _ => err,
        }
    }
}

type ApiResult = Result<Json<Value>, ApiError>;
type Shared = State<Arc<Dataset>>;

pub fn router(dataset: Arc<Dataset>) -> Router {
    let api = Router::new()
        .route("/graphs", get(list_graphs))
        .route("/graphs/{id}/overview", get(overview))
        .route("/graphs/{id}/query", post(query))
        .route("/graphs/{id}/nodes/{nid}", get(node))
        .route("/graphs/{id}/edges/{eid}", get(edge))
        .route("/graphs/{id}/edges/{eid}/evidence", get(evidence))
        .route("/graphs/{id}/layout", post(subgraph_layout))
        .route("/corpus/documents", get(search))
        .route("/corpus/documents/{*rest}", get(document))
        .route("/corpus/clusters", get(clusters));
    Router::new()
        .nest("/api", api)
        .fallback(|| async { ApiError::not_found("no such route") })
        .layer(middleware::from_fn_with_state(dataset.clone(), stamp_version))
        .with_state(dataset)
}

async fn stamp_version(State(ds): Shared, req: Request, next: Next) -> Response {
    let mut res = next.run(req).await;
    if let Ok(v) = HeaderValue::from_str(&ds.version) {
        res.headers_mut().insert(VERSION_HEADER, v);
    }
    res
}

fn graph<'a>(ds: &'a Dataset, id: &str) -> Result<&'a GraphData, ApiError> {
    ds.graph(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown graph {id:?}")))
}

fn edge_json(e: &Edge) -> Value {
    json!({
        "id": e.id,
        "subj": e.subj,
        "obj": e.obj,
        "type": e.statement_type,
        "polarity": e.polarity,
        "directed": e.directed,
        "curated": e.curated,
        "belief": e.belief,
        "evidence_count": e.evidence_count,
    })
}

fn document_json(d: &DocumentRecord) -> Value {
    let mut v = serde_json::to_value(d).expect("document serializes");
    v["row"] = json!(d.row);
    v
}

async fn list_graphs(State(ds): Shared) -> Json<Value> {
    let list: Vec<Value> = ds
        .manifest
        .graphs
        .iter()
        .filter_map(|entry| ds.graph(&entry.id))
        .map(|g| {
            json!({
                "id": g.entry.id,
                "name": g.entry.name,
                "nodes": g.graph.node_count(),
                "edges": g.graph.edge_count(),
                "max_depth": g.max_level(),
            })
        })
        .collect();
    Json(Value::Array(list))
}

fn parse_param<T: std::str::FromStr>(params: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, ApiError> {
    match params.get(key).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|_| ApiError::bad_request(format!("invalid {key} {raw:?}")).with("field", json!(key))),
    }
}

/// Circles down to `depth` (or those visible at `zoom`) plus the
/// hyper-edges bundled at that level.
async fn overview(State(ds): Shared, Path(id): Path<String>, Query(params): Query<BTreeMap<String, String>>) -> ApiResult {
    let g = graph(&ds, &id)?;
    let depth: usize = parse_param(&params, "depth")?.unwrap_or(1);
    let zoom: Option<f64> = parse_param(&params, "zoom")?;
    let level = depth.min(g.max_level());
    let (bundles, routes): (Vec<_>, Vec<_>) = g.levels[level].iter().cloned().unzip();
    let mut export = GlobalLayoutExport::new(&g.pack, depth, &bundles, &routes);
    if let Some(zoom) = zoom {
        if !(zoom > 0.0 && zoom.is_finite()) {
            return Err(ApiError::bad_request("zoom must be positive").with("field", json!("zoom")));
        }
        let visible = g.pack.visible(zoom, ds.options.lod_threshold_px);
        export.circles.retain(|c| visible.contains(&c.id));
    }
    let mut body = serde_json::to_value(export).expect("export serializes");
    body["depth"] = json!(depth);
    body["level"] = json!(level);
    Ok(Json(body))
}

async fn query(State(ds): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let g = graph(&ds, &id)?;
    let doc: Value = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    let chain = QueryChain::from_json(&doc)?;
    let result = run_chain(&g.graph, &chain)?;
    Ok(Json(result.to_json(&g.graph)))
}

fn subgraph_param(graph: &AssembledGraph, raw: Option<&String>) -> Result<Subgraph, ApiError> {
    let ids: Vec<&str> = raw
        .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();
    Subgraph::from_ids(graph, [], ids)
        .map_err(|id| ApiError::bad_request(format!("unknown edge {id:?} in subgraph")).with("field", json!("subgraph")))
}

async fn node(
    State(ds): Shared,
    Path((id, nid)): Path<(String, String)>,
    Query(params): Query<BTreeMap<String, String>>,
) -> ApiResult {
    let g = graph(&ds, &id)?;
    let graph = &g.graph;
    let n = graph
        .node_ix(&nid)
        .ok_or_else(|| ApiError::not_found(format!("unknown node {nid:?}")))?;
    let direction: Direction = match params.get("direction") {
        None => Direction::Outgoing,
        Some(d) => d
            .parse()
            .map_err(|e: String| ApiError::bad_request(e).with("field", json!("direction")))?,
    };
    let current = subgraph_param(graph, params.get("subgraph"))?;
    let suggestions: Vec<Value> = suggest_neighbors(graph, &current, n, direction)
        .into_iter()
        .map(|s| {
            json!({
                "neighbor": graph.agent(s.neighbor).id,
                "edge": edge_json(graph.edge(s.edge)),
            })
        })
        .collect();
    let agent = graph.agent(n);
    Ok(Json(json!({
        "node": {
            "id": agent.id,
            "name": agent.name,
            "category": agent.category_path,
            "description": agent.description,
            "in_degree": graph.in_degree(n),
            "out_degree": graph.out_degree(n),
        },
        "direction": match direction { Direction::Incoming => "in", Direction::Outgoing => "out" },
        "suggestions": suggestions,
    })))
}

fn find_edge<'a>(g: &'a GraphData, eid: &str) -> Result<&'a Edge, ApiError> {
    g.graph
        .edge_by_id(eid)
        .ok_or_else(|| ApiError::not_found(format!("unknown edge {eid:?}")))
}

async fn edge(State(ds): Shared, Path((id, eid)): Path<(String, String)>) -> ApiResult {
    let g = graph(&ds, &id)?;
    let e = find_edge(g, &eid)?;
    let mut body = edge_json(e);
    body["dois"] = json!(e.dois);
    Ok(Json(body))
}

async fn evidence(State(ds): Shared, Path((id, eid)): Path<(String, String)>) -> ApiResult {
    let g = graph(&ds, &id)?;
    let e = find_edge(g, &eid)?;
    let corpus = &ds.corpus.corpus;
    let k = EVIDENCE_NEIGHBORS.min(corpus.len().saturating_sub(1));
    let items: Vec<Value> = e
        .evidence
        .iter()
        .map(|ev| {
            let document = corpus.get(&ev.doi);
            let neighbors: Vec<&str> = match document {
                Some(_) if k > 0 => corpus
                    .semantic_neighbors(&ev.doi, k)
                    .map(|n| n.into_iter().map(|(r, _)| corpus.documents()[r].doi.as_str()).collect())
                    .unwrap_or_default(),
                _ => Vec::new(),
            };
            json!({
                "text": ev.text,
                "doi": ev.doi,
                "source": ev.source,
                "document": document.map(document_json),
                "neighbors": neighbors,
            })
        })
        .collect();
    Ok(Json(Value::Array(items)))
}

async fn subgraph_layout(State(ds): Shared, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let g = graph(&ds, &id)?;
    let doc: Value = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed JSON: {e}")))?;
    let ids = |key: &str| -> Result<Vec<String>, ApiError> {
        match doc.get(key) {
            None => Ok(Vec::new()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| ApiError::bad_request(format!("{key} must be an array of ids")).with("field", json!(key))),
        }
    };
    let (nodes, edges) = (ids("nodes")?, ids("edges")?);
    let mut sub = Subgraph::from_ids(
        &g.graph,
        nodes.iter().map(String::as_str),
        edges.iter().map(String::as_str),
    )
    .map_err(|id| ApiError::bad_request(format!("unknown id {id:?}")))?;
    if doc.get("edges").is_none() {
        // Nodes only: take the induced subgraph.
        for n in sub.nodes.clone() {
            for &e in g.graph.out_edges(n) {
                if g.graph.endpoints(e).is_some_and(|(_, o)| sub.nodes.contains(&o)) {
                    sub.edges.insert(e);
                }
            }
        }
    }
    if sub.is_empty() {
        return Err(ApiError::bad_request("layout needs at least one node"));
    }
    let flow = FlowGraph::from_graph(&g.graph, sub.nodes.iter().copied(), sub.edges.iter().copied());
    let layout = flow_layout(&flow, LAYER_GAP, NODE_GAP);
    Ok(Json(serde_json::to_value(FlowLayoutExport::from(&layout)).expect("layout serializes")))
}

async fn search(State(ds): Shared, Query(params): Query<BTreeMap<String, String>>) -> ApiResult {
    let text = |k: &str| params.get(k).filter(|v| !v.is_empty()).cloned();
    let facets = SearchFacets {
        text: text("text"),
        author: text("author"),
        publisher: text("publisher"),
        entity: text("entity"),
        year_min: parse_param(&params, "year_min")?,
        year_max: parse_param(&params, "year_max")?,
        has_figures: parse_param(&params, "has_figures")?,
        has_tables: parse_param(&params, "has_tables")?,
    };
    let page: usize = parse_param(&params, "page")?.unwrap_or(0);
    let page_size: usize = parse_param(&params, "page_size")?.unwrap_or(DEFAULT_PAGE_SIZE);
    let corpus = &ds.corpus.corpus;
    let result = corpus
        .search(&facets, page, page_size)
        .map_err(|e| ApiError::bad_request(e.to_string()).with("field", json!("page_size")))?;
    Ok(Json(json!({
        "total": result.total,
        "page": result.page,
        "page_size": result.page_size,
        "documents": result.rows.iter().map(|&r| document_json(&corpus.documents()[r])).collect::<Vec<_>>(),
    })))
}

/// `{doi}`, `{doi}/neighbors` and `{doi}/graphs`; DOIs contain slashes.
async fn document(State(ds): Shared, Path(rest): Path<String>, Query(params): Query<BTreeMap<String, String>>) -> ApiResult {
    let corpus = &ds.corpus.corpus;
    if let Some(doi) = rest.strip_suffix("/graphs") {
        if corpus.get(&rest).is_none() {
            return Ok(Json(serde_json::to_value(ds.doc_index.graphs_for_document(doi)).expect("links serialize")));
        }
    }
    if let Some(doi) = rest.strip_suffix("/neighbors") {
        if corpus.get(&rest).is_none() {
            let k: usize = parse_param(&params, "k")?.unwrap_or(DEFAULT_NEIGHBORS);
            let found = corpus.semantic_neighbors(doi, k).map_err(|e| match e {
                atlas_core::knowledge::KnowledgeError::UnknownDoi(_) => ApiError::not_found(e.to_string()),
                _ => ApiError::bad_request(e.to_string()).with("field", json!("k")),
            })?;
            let list: Vec<Value> = found
                .into_iter()
                .map(|(r, sim)| {
                    let d = &corpus.documents()[r];
                    json!({"doi": d.doi, "title": d.title, "similarity": sim})
                })
                .collect();
            return Ok(Json(Value::Array(list)));
        }
    }
    let d = corpus
        .get(&rest)
        .ok_or_else(|| ApiError::not_found(format!("unknown doi {rest:?}")))?;
    Ok(Json(document_json(d)))
}

async fn clusters(State(ds): Shared, Query(params): Query<BTreeMap<String, String>>) -> ApiResult {
    let level = match params.get("level").map(String::as_str) {
        None | Some("") | Some("all") => None,
        Some("coarse") => Some(Level::Coarse),
        Some("fine") => Some(Level::Fine),
        Some(other) => {
            return Err(ApiError::bad_request(format!("unknown level {other:?}")).with("field", json!("level")))
        }
    };
    let c = &ds.corpus;
    let export = ClusterExport::new(&c.corpus, &c.coords, &c.clusters, level);
    Ok(Json(serde_json::to_value(export).expect("export serializes")))
}
