//! HTTP routes on the scenario dataset, driven in-process through the router.

use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use atlas_core::fixtures::{scenario, scenario_fixture};
use atlas_core::ingest::layout;
use atlas_server::{load_dataset, router, Dataset, LoadError, LoadOptions, VERSION_HEADER};
use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn dataset() -> Arc<Dataset> {
    static DS: OnceLock<Arc<Dataset>> = OnceLock::new();
    DS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        scenario_fixture(dir.path()).unwrap();
        Arc::new(load_dataset(dir.path(), &LoadOptions::default()).unwrap())
    })
    .clone()
}

fn app() -> Router {
    router(dataset())
}

struct Reply {
    status: StatusCode,
    version: Option<String>,
    body: Value,
}

async fn send(app: Router, method: Method, uri: &str, body: Option<&str>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let res = app.oneshot(req).await.unwrap();
    let status = res.status();
    let version = res
        .headers()
        .get(VERSION_HEADER)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = serde_json::from_slice(&bytes).unwrap_or_else(|e| panic!("{uri}: body is not JSON ({e})"));
    Reply { status, version, body }
}

async fn get(uri: &str) -> Reply {
    send(app(), Method::GET, uri, None).await
}

async fn post(uri: &str, body: &str) -> Reply {
    send(app(), Method::POST, uri, Some(body)).await
}

fn ok(r: Reply) -> Value {
    assert_eq!(r.status, StatusCode::OK, "{}", r.body);
    r.body
}

/// Compares against `tests/golden/<name>.json`; `UPDATE_GOLDEN=1` rewrites.
fn golden(name: &str, value: &Value) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"));
    let text = serde_json::to_string_pretty(value).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, text).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    let want: Value = serde_json::from_str(&want).unwrap();
    assert_eq!(value, &want, "golden {name}");
}

fn edge_path(subj: &str, t: &str, obj: &str) -> String {
    format!("{subj}%7C{t}%7C{obj}")
}

const G: &str = scenario::GRAPH;

#[tokio::test]
async fn graph_summaries() {
    let body = ok(get("/api/graphs").await);
    let list = body.as_array().unwrap();
    assert_eq!(list.len(), 1);
    let ds = dataset();
    let entry = &ds.manifest.graphs[0];
    assert_eq!(list[0]["id"], G);
    assert_eq!(list[0]["nodes"], json!(entry.agents.unwrap()));
    assert_eq!(list[0]["edges"], json!(entry.edges.unwrap()));
    golden("graphs", &body);
}

#[tokio::test]
async fn overview_depth_slices() {
    let shallow = ok(get(&format!("/api/graphs/{G}/overview?depth=1")).await);
    assert_eq!(shallow["level"], 1);
    let circles = shallow["circles"].as_array().unwrap();
    assert!(circles.iter().all(|c| c["depth"].as_u64().unwrap() <= 1));
    assert!(shallow["hyperEdges"].as_array().unwrap().iter().all(|h| h["level"] == 1));
    golden("overview_depth1", &shallow);

    let deep = ok(get(&format!("/api/graphs/{G}/overview?depth=9")).await);
    let max = dataset().graphs[G].max_level();
    assert_eq!(deep["level"], json!(max));
    let bundled: u64 = deep["hyperEdges"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h["count"].as_u64().unwrap())
        .sum();
    assert_eq!(bundled as usize, dataset().graphs[G].graph.edge_count());

    let zoomed_out = ok(get(&format!("/api/graphs/{G}/overview?depth=9&zoom=0.001")).await);
    let zoomed_in = ok(get(&format!("/api/graphs/{G}/overview?depth=9&zoom=1000")).await);
    let n = |v: &Value| v["circles"].as_array().unwrap().len();
    assert!(n(&zoomed_out) <= n(&zoomed_in));
    assert!(n(&zoomed_out) >= 1);

    let bad = get(&format!("/api/graphs/{G}/overview?zoom=-1")).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.body["field"], "zoom");
    let bad = get(&format!("/api/graphs/{G}/overview?depth=deep")).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    assert_eq!(bad.body["field"], "depth");
    assert_eq!(get("/api/graphs/nope/overview").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn doi_chain_and_path_query() {
    let dois = json!(scenario::SEED_DOIS);
    let chain = json!({"chain": [{"facet": "doc", "dois": dois}]}).to_string();
    let body = ok(post(&format!("/api/graphs/{G}/query"), &chain).await);
    let toci_il6 = format!("{}|Inhibition|{}", scenario::TOCILIZUMAB, scenario::IL6);
    assert!(body["edges"].as_array().unwrap().contains(&json!(toci_il6)));
    assert_eq!(body["trace"].as_array().unwrap().len(), 1);
    golden("query_doi", &body);

    let chain = json!({"chain": [{"facet": "path", "sources": [scenario::TOCILIZUMAB], "targets": [scenario::COVID_19], "max_len": 2}]});
    let body = ok(post(&format!("/api/graphs/{G}/query"), &chain.to_string()).await);
    let paths = body["paths"].as_array().unwrap();
    assert_eq!(paths.len(), 1);
    assert_eq!(paths[0]["nodes"], json!([scenario::TOCILIZUMAB, scenario::IL6, scenario::COVID_19]));
    assert_eq!(paths[0]["polarity"], "negative");
    assert_eq!(body["truncated"], false);

    let empty = ok(post(&format!("/api/graphs/{G}/query"), r#"{"chain":[]}"#).await);
    assert_eq!(empty["edges"].as_array().unwrap().len(), dataset().graphs[G].graph.edge_count());
}

#[tokio::test]
async fn malformed_queries_carry_detail() {
    let uri = format!("/api/graphs/{G}/query");
    let r = post(&uri, "{not json").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.body["error"].as_str().unwrap().contains("JSON"));

    let r = post(
        &uri,
        r#"{"chain":[{"facet":"doc","dois":["x"]},{"facet":"node","field":"colour","op":"=","value":"x"}]}"#,
    )
    .await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["facet"], 1);
    assert_eq!(r.body["field"], "colour");

    let r = post(&uri, r#"{"chain":[{"facet":"edge","field":"belief","op":">","value":"high"}]}"#).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["facet"], 0);
    assert_eq!(r.body["field"], "belief");
    assert!(r.version.is_some());
}

#[tokio::test]
async fn node_suggestions() {
    let out = ok(get(&format!("/api/graphs/{G}/nodes/{}", scenario::TOCILIZUMAB)).await);
    assert_eq!(out["direction"], "out");
    assert_eq!(out["suggestions"].as_array().unwrap().len(), scenario::TOCILIZUMAB_OUT_DEGREE);
    assert_eq!(out["node"]["out_degree"], json!(scenario::TOCILIZUMAB_OUT_DEGREE));
    // Ranked by evidence: the curated 39-item edge leads.
    assert_eq!(out["suggestions"][0]["neighbor"], scenario::IL6);
    assert_eq!(out["suggestions"][0]["edge"]["evidence_count"], 39);
    golden("node_tocilizumab", &out);

    let already = edge_path(scenario::TOCILIZUMAB, "Inhibition", scenario::IL6);
    let rest = ok(get(&format!("/api/graphs/{G}/nodes/{}?subgraph={already}", scenario::TOCILIZUMAB)).await);
    let rest = rest["suggestions"].as_array().unwrap();
    assert_eq!(rest.len(), scenario::TOCILIZUMAB_OUT_DEGREE - 1);
    assert!(rest.iter().all(|s| s["neighbor"] != scenario::IL6));

    let inc = ok(get(&format!("/api/graphs/{G}/nodes/{}?direction=in", scenario::IL6)).await);
    assert_eq!(inc["direction"], "in");
    assert_eq!(inc["suggestions"].as_array().unwrap().len(), scenario::IL6_IN_DEGREE);

    let r = get(&format!("/api/graphs/{G}/nodes/{}?direction=sideways", scenario::IL6)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["field"], "direction");
    let r = get(&format!("/api/graphs/{G}/nodes/{}?subgraph=no%7Csuch%7Cedge", scenario::IL6)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["field"], "subgraph");
    assert_eq!(get(&format!("/api/graphs/{G}/nodes/nobody")).await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn edge_and_evidence() {
    let eid = edge_path(scenario::TOCILIZUMAB, "Inhibition", scenario::IL6);
    let e = ok(get(&format!("/api/graphs/{G}/edges/{eid}")).await);
    assert_eq!(e["evidence_count"], 39);
    assert_eq!(e["curated"], true);
    assert_eq!(e["polarity"], "negative");
    for doi in scenario::SEED_DOIS {
        assert!(e["dois"].as_array().unwrap().contains(&json!(doi)));
    }
    golden("edge_toci_il6", &e);

    let ev = ok(get(&format!("/api/graphs/{G}/edges/{eid}/evidence")).await);
    let items = ev.as_array().unwrap();
    assert_eq!(items.len(), 39);
    for item in items {
        if item["document"].is_null() {
            assert!(item["neighbors"].as_array().unwrap().is_empty());
        } else {
            assert_eq!(item["document"]["doi"], item["doi"]);
            assert_eq!(item["neighbors"].as_array().unwrap().len(), 5);
        }
    }
    golden("evidence_toci_il6", &ev);

    let missing = get(&format!("/api/graphs/{G}/edges/a%7CInhibition%7Cb/evidence")).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn subgraph_layout_route() {
    let nodes = json!({"nodes": [scenario::TOCILIZUMAB, scenario::IL6, scenario::COVID_19]});
    let body = ok(post(&format!("/api/graphs/{G}/layout"), &nodes.to_string()).await);
    let layer = |id: &str| {
        body["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .find(|n| n["id"] == id)
            .unwrap()["layer"]
            .as_u64()
            .unwrap()
    };
    assert_eq!(layer(scenario::TOCILIZUMAB), 0);
    assert_eq!(layer(scenario::IL6), 1);
    assert_eq!(layer(scenario::COVID_19), 2);
    assert_eq!(body["crossings"], 0);
    golden("layout_pathway", &body);

    let toci_il6 = format!("{}|Inhibition|{}", scenario::TOCILIZUMAB, scenario::IL6);
    let only = json!({"nodes": [], "edges": [toci_il6]});
    let body = ok(post(&format!("/api/graphs/{G}/layout"), &only.to_string()).await);
    assert_eq!(body["nodes"].as_array().unwrap().len(), 2);
    assert_eq!(body["edges"].as_array().unwrap().len(), 1);

    for bad in [r#"{"nodes":[]}"#, r#"{"nodes":["ghost"]}"#, r#"{"nodes":"IL6"}"#, "[1,2"] {
        let r = post(&format!("/api/graphs/{G}/layout"), bad).await;
        assert_eq!(r.status, StatusCode::BAD_REQUEST, "{bad}");
        assert!(r.body["error"].is_string());
    }
}

#[tokio::test]
async fn document_search_and_lookup() {
    let all = ok(get("/api/corpus/documents?page_size=500").await);
    assert_eq!(all["total"], json!(scenario::CORPUS_SIZE));
    let docs = all["documents"].as_array().unwrap();
    let keys: Vec<(i64, &str)> = docs
        .iter()
        .map(|d| (-d["year"].as_i64().unwrap(), d["doi"].as_str().unwrap()))
        .collect();
    assert!(keys.windows(2).all(|w| w[0] < w[1]), "ordered by year desc, doi asc");

    let hits = ok(get("/api/corpus/documents?text=il-6&page=0&page_size=7").await);
    assert_eq!(hits["page_size"], 7);
    assert!(hits["documents"].as_array().unwrap().len() <= 7);
    let expected = docs
        .iter()
        .filter(|d| {
            let t = format!("{} {}", d["title"].as_str().unwrap(), d["abstract"].as_str().unwrap_or(""));
            t.to_lowercase().contains("il-6")
        })
        .count();
    assert_eq!(hits["total"], json!(expected));
    golden("search_il6", &hits);

    let r = get("/api/corpus/documents?page_size=0").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["field"], "page_size");
    let r = get("/api/corpus/documents?year_min=recent").await;
    assert_eq!(r.body["field"], "year_min");

    let seed = scenario::SEED_DOIS[0];
    let doc = ok(get(&format!("/api/corpus/documents/{seed}")).await);
    assert_eq!(doc["doi"], seed);
    assert!(doc["row"].is_u64());

    let nn = ok(get(&format!("/api/corpus/documents/{seed}/neighbors?k=4")).await);
    let nn = nn.as_array().unwrap();
    assert_eq!(nn.len(), 4);
    let sims: Vec<f64> = nn.iter().map(|n| n["similarity"].as_f64().unwrap()).collect();
    assert!(sims.windows(2).all(|w| w[0] >= w[1]));
    assert!(nn.iter().all(|n| n["doi"] != seed));

    let r = get(&format!("/api/corpus/documents/{seed}/neighbors?k=0")).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["field"], "k");
    let r = get(&format!("/api/corpus/documents/{seed}/neighbors?k={}", scenario::CORPUS_SIZE)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let links = ok(get(&format!("/api/corpus/documents/{seed}/graphs")).await);
    assert_eq!(links[0]["graph"], G);
    let toci_il6 = format!("{}|Inhibition|{}", scenario::TOCILIZUMAB, scenario::IL6);
    assert!(links[0]["edges"].as_array().unwrap().contains(&json!(toci_il6)));
    golden("document_graphs", &links);

    assert_eq!(ok(get("/api/corpus/documents/10.0/unknown/graphs").await), json!([]));
    assert_eq!(get("/api/corpus/documents/10.0/unknown").await.status, StatusCode::NOT_FOUND);
    assert_eq!(get("/api/corpus/documents/10.0/unknown/neighbors").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cluster_levels() {
    let all = ok(get("/api/corpus/clusters").await);
    let coarse = ok(get("/api/corpus/clusters?level=coarse").await);
    let fine = ok(get("/api/corpus/clusters?level=fine").await);
    assert_eq!(all["points"].as_array().unwrap().len(), scenario::CORPUS_SIZE);
    let count = |v: &Value, level: &str| v["clusters"].as_array().unwrap().iter().filter(|c| c["level"] == level).count();
    assert_eq!(count(&coarse, "fine"), 0);
    assert_eq!(count(&fine, "coarse"), 0);
    assert_eq!(count(&all, "coarse") + count(&all, "fine"), all["clusters"].as_array().unwrap().len());
    for c in all["clusters"].as_array().unwrap() {
        for key in ["id", "parent", "level", "hue", "stability", "polygon"] {
            assert!(c.get(key).is_some(), "cluster lacks {key}");
        }
    }
    // Noise points carry no cluster.
    let noise: Vec<&Value> = all["noise"].as_array().unwrap().iter().collect();
    for p in all["points"].as_array().unwrap() {
        assert_eq!(p["cluster"].is_null(), noise.contains(&&p["doi"]));
    }
    golden("clusters_all", &all);

    let r = get("/api/corpus/clusters?level=medium").await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.body["field"], "level");
}

#[tokio::test]
async fn unknown_routes_and_version_header() {
    let version = dataset().version.clone();
    assert_eq!(version.len(), 64);
    for uri in ["/api/nowhere", "/", "/api/graphs/x/y/z"] {
        let r = get(uri).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{uri}");
        assert!(r.body["error"].is_string());
        assert_eq!(r.version.as_deref(), Some(version.as_str()));
    }
    let r = get("/api/graphs").await;
    assert_eq!(r.version.as_deref(), Some(version.as_str()));
}

#[tokio::test]
async fn concurrent_identical_requests() {
    let chain = json!({"chain": [
        {"facet": "edge", "field": "belief", "op": ">=", "value": 0.5},
        {"facet": "path", "sources": [scenario::SARS_COV_2], "targets": [scenario::COVID_19], "max_len": 3, "cap": 50}
    ]})
    .to_string();
    let uri = format!("/api/graphs/{G}/query");
    let tasks: Vec<_> = (0..16)
        .map(|_| {
            let (uri, chain) = (uri.clone(), chain.clone());
            tokio::spawn(async move { send(app(), Method::POST, &uri, Some(&chain)).await.body })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        bodies.push(t.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
    assert!(!bodies[0]["paths"].as_array().unwrap().is_empty());
}

#[test]
fn missing_embeddings_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    scenario_fixture(dir.path()).unwrap();
    fs::remove_file(dir.path().join(layout::EMBEDDINGS)).unwrap();
    let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("corpus/embeddings.bin"), "{err}");
}

#[test]
fn load_rejects_inconsistent_inputs() {
    let dir = tempfile::tempdir().unwrap();
    scenario_fixture(dir.path()).unwrap();
    let docs = dir.path().join(layout::DOCUMENTS);
    let text = fs::read_to_string(&docs).unwrap();
    let fewer: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    fs::write(&docs, fewer).unwrap();
    let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
    assert!(matches!(err, LoadError::Corpus(_) | LoadError::Ingest { .. }), "{err}");

    let dir = tempfile::tempdir().unwrap();
    scenario_fixture(dir.path()).unwrap();
    let manifest = dir.path().join(layout::MANIFEST);
    let text = fs::read_to_string(&manifest).unwrap();
    let declared = dataset().manifest.graphs[0].edges.unwrap();
    fs::write(&manifest, text.replace(&format!("\"edges\": {declared}"), "\"edges\": 7")).unwrap();
    let err = load_dataset(dir.path(), &LoadOptions::default()).unwrap_err();
    assert!(err.to_string().contains("declares 7"), "{err}");
}

#[test]
fn loading_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    scenario_fixture(dir.path()).unwrap();
    let a = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
    let b = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
    assert_eq!(a.precomputation_json(), b.precomputation_json());
    assert_eq!(a.version, b.version);
    let c = load_dataset(
        dir.path(),
        &LoadOptions {
            min_belief: 0.95,
            ..LoadOptions::default()
        },
    )
    .unwrap();
    assert_ne!(a.version, c.version);
    assert!(c.graphs[G].graph.edge_count() < a.graphs[G].graph.edge_count());
}
