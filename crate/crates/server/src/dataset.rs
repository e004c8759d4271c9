//! Loading a dataset directory and precomputing everything the API serves.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use atlas_core::ingest::{
    bundle, layout, load_graph, open_file, read_embeddings, read_manifest, AssembleOptions, GraphEntry,
    HyperEdge, IngestError, Manifest,
};
use atlas_core::knowledge::{
    cluster, parse_documents, points_of, project_2d, ClusterParams, ClusterTree, Corpus, DocGraphIndex,
    KnowledgeError,
};
use atlas_core::layout::pack::{pack_graph, CirclePack, LeafWeight, DEFAULT_LOD_THRESHOLD_PX};
use atlas_core::layout::route::{route_hyper_edge, RoutedPath};
use atlas_core::model::AssembledGraph;
use atlas_core::scalar::{Matrix, Point2};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Ingest { path: PathBuf, source: IngestError },
    #[error(transparent)]
    Graph(#[from] IngestError),
    #[error("corpus: {0}")]
    Corpus(#[from] KnowledgeError),
    #[error("graph {graph}: manifest declares {declared} {what}, found {found}")]
    Count {
        graph: String,
        what: &'static str,
        declared: usize,
        found: usize,
    },
    #[error("{path}: expected {expected}x2 coordinates, found {rows}x{cols}")]
    Coords {
        path: String,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("graph {graph}: {reason}")]
    Layout { graph: String, reason: String },
    #[error("reading {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadOptions {
    pub min_belief: f64,
    pub alpha_radius: Option<f64>,
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub lod_threshold_px: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            min_belief: 0.0,
            alpha_radius: None,
            min_cluster_size: 25,
            min_samples: 5,
            lod_threshold_px: DEFAULT_LOD_THRESHOLD_PX,
        }
    }
}

/// One graph with its overview geometry.
#[derive(Debug)]
pub struct GraphData {
    pub entry: GraphEntry,
    pub graph: AssembledGraph,
    pub pack: CirclePack<f64>,
    /// Bundles and their routes per ontology level, `0..=max_depth`.
    pub levels: Vec<Vec<(HyperEdge, RoutedPath<f64>)>>,
}

impl GraphData {
    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }
}

#[derive(Debug)]
pub struct CorpusData {
    pub corpus: Corpus,
    pub coords: Vec<Point2<f64>>,
    pub clusters: ClusterTree<f64>,
}

/// Immutable, fully precomputed dataset.
#[derive(Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub graphs: BTreeMap<String, GraphData>,
    pub corpus: CorpusData,
    pub doc_index: DocGraphIndex,
    pub options: LoadOptions,
    /// Hex sha256 over the input files and load options.
    pub version: String,
}

fn count_lines(path: &Path) -> Result<usize, LoadError> {
    let reader = open_file(path).map_err(|source| LoadError::Ingest {
        path: path.into(),
        source,
    })?;
    let mut n = 0;
    for line in reader.lines() {
        let line = line.map_err(|source| LoadError::Io {
            path: path.into(),
            source,
        })?;
        if !line.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

fn hash_file(hasher: &mut Sha256, dir: &Path, rel: &Path) -> Result<(), LoadError> {
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => LoadError::Ingest {
            path: rel.into(),
            source: IngestError::Missing(rel.into()),
        },
        _ => LoadError::Io { path, source: e },
    })?;
    hasher.update((rel.to_string_lossy().len() as u64).to_le_bytes());
    hasher.update(rel.to_string_lossy().as_bytes());
    hasher.update((bytes.len() as u64).to_le_bytes());
    hasher.update(&bytes);
    Ok(())
}

fn graph_data(entry: &GraphEntry, graph: AssembledGraph) -> Result<GraphData, LoadError> {
    let fail = |reason: String| LoadError::Layout {
        graph: entry.id.clone(),
        reason,
    };
    let pack = pack_graph(&graph, LeafWeight::Degree).map_err(|e| fail(e.to_string()))?;
    let max_depth = graph.ontology().max_depth();
    let mut levels = Vec::with_capacity(max_depth + 1);
    for level in 0..=max_depth {
        let bundles = bundle(&graph, level);
        let max_count = bundles.iter().map(|b| b.count).max().unwrap_or(1);
        let routed = bundles
            .into_iter()
            .map(|b| {
                let r = route_hyper_edge(&b, &pack, max_count).map_err(|e| fail(e.to_string()))?;
                Ok((b, r))
            })
            .collect::<Result<Vec<_>, LoadError>>()?;
        levels.push(routed);
    }
    Ok(GraphData {
        entry: entry.clone(),
        graph,
        pack,
        levels,
    })
}

fn load_coords(dir: &Path, rel: &str, n: usize) -> Result<Vec<Point2<f64>>, LoadError> {
    let path = dir.join(rel);
    let matrix = read_embeddings(open_file(&path).map_err(|source| LoadError::Ingest {
        path: rel.into(),
        source,
    })?)
    .map_err(|source| LoadError::Ingest {
        path: rel.into(),
        source,
    })?;
    if matrix.rows() != n || matrix.cols() != 2 {
        return Err(LoadError::Coords {
            path: rel.into(),
            expected: n,
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    Ok(matrix
        .iter_rows()
        .map(|r| Point2::new(f64::from(r[0]), f64::from(r[1])))
        .collect())
}

fn projected(embeddings: &Matrix<f32>) -> Vec<Point2<f64>> {
    let as_f64 = Matrix::from_row_major(
        embeddings.rows(),
        embeddings.cols(),
        embeddings.as_slice().iter().map(|&x| f64::from(x)).collect(),
    )
    .expect("same shape");
    match project_2d(&as_f64) {
        Ok(coords) => points_of(&coords),
        Err(e) => {
            log::warn!("corpus projection unavailable ({e}); placing documents at the origin");
            vec![Point2::origin(); embeddings.rows()]
        }
    }
}

/// Parses, assembles, bundles, packs, routes, projects and clusters a
/// dataset directory.
pub fn load_dataset(dir: &Path, options: &LoadOptions) -> Result<Dataset, LoadError> {
    let manifest = read_manifest(dir).map_err(|source| LoadError::Ingest {
        path: layout::MANIFEST.into(),
        source,
    })?;
    let mut hasher = Sha256::new();
    hash_file(&mut hasher, dir, Path::new(layout::MANIFEST))?;

    let assemble = AssembleOptions {
        min_belief: options.min_belief,
        extra_categories: Vec::new(),
    };
    let mut graphs = BTreeMap::new();
    for entry in &manifest.graphs {
        let agents_rel = layout::agents(&entry.id);
        let statements_rel = layout::statements(&entry.id);
        hash_file(&mut hasher, dir, &agents_rel)?;
        hash_file(&mut hasher, dir, &statements_rel)?;
        let graph = load_graph(dir, entry, &assemble)?;
        let agent_lines = count_lines(&dir.join(&agents_rel))?;
        let statement_lines = count_lines(&dir.join(&statements_rel))?;
        log::info!(
            "graph {}: {} agents ({} lines), {} edges from {} statements",
            entry.id,
            graph.node_count(),
            agent_lines,
            graph.edge_count(),
            statement_lines
        );
        if graph.node_count() != agent_lines {
            return Err(LoadError::Count {
                graph: entry.id.clone(),
                what: "agent lines",
                declared: agent_lines,
                found: graph.node_count(),
            });
        }
        // A belief threshold legitimately drops edges below the declared count.
        let declared_edges = if options.min_belief > 0.0 { None } else { entry.edges };
        for (what, declared, found) in [
            ("agents", entry.agents, graph.node_count()),
            ("edges", declared_edges, graph.edge_count()),
        ] {
            if let Some(declared) = declared {
                if declared != found {
                    return Err(LoadError::Count {
                        graph: entry.id.clone(),
                        what,
                        declared,
                        found,
                    });
                }
            }
        }
        graphs.insert(entry.id.clone(), graph_data(entry, graph)?);
    }

    let docs_rel = &manifest.corpus.documents;
    let emb_rel = &manifest.corpus.embeddings;
    hash_file(&mut hasher, dir, Path::new(docs_rel))?;
    hash_file(&mut hasher, dir, Path::new(emb_rel))?;
    let docs_path = dir.join(docs_rel);
    let documents = parse_documents(open_file(&docs_path).map_err(|source| LoadError::Ingest {
        path: docs_rel.into(),
        source,
    })?)
    .map_err(|source| LoadError::Ingest {
        path: docs_rel.into(),
        source,
    })?;
    let emb_path = dir.join(emb_rel);
    let embeddings = read_embeddings(open_file(&emb_path).map_err(|source| LoadError::Ingest {
        path: emb_rel.into(),
        source,
    })?)
    .map_err(|source| LoadError::Ingest {
        path: emb_rel.into(),
        source,
    })?;
    log::info!("corpus: {} documents, {}x{} embeddings", documents.len(), embeddings.rows(), embeddings.cols());
    let corpus = Corpus::new(documents, embeddings)?;

    let coords = match &manifest.corpus.coords {
        Some(rel) => {
            hash_file(&mut hasher, dir, Path::new(rel))?;
            load_coords(dir, rel, corpus.len())?
        }
        None => projected(corpus.embeddings()),
    };
    let params = ClusterParams {
        min_cluster_size: options.min_cluster_size,
        min_samples: options.min_samples,
        alpha: options.alpha_radius,
    };
    let clusters = if corpus.len() < params.min_cluster_size {
        log::warn!(
            "corpus has {} documents, fewer than min_cluster_size {}; all noise",
            corpus.len(),
            params.min_cluster_size
        );
        ClusterTree {
            clusters: Vec::new(),
            noise: (0..corpus.len()).collect(),
        }
    } else {
        cluster(&coords, params).map_err(|e| LoadError::Layout {
            graph: "corpus".into(),
            reason: e.to_string(),
        })?
    };

    let doc_index = DocGraphIndex::build(graphs.values().map(|g| &g.graph));
    hasher.update(format!("{options:?}").as_bytes());
    let version = hex::encode(hasher.finalize());
    Ok(Dataset {
        manifest,
        graphs,
        corpus: CorpusData {
            corpus,
            coords,
            clusters,
        },
        doc_index,
        options: options.clone(),
        version,
    })
}

#[derive(Serialize)]
struct GraphPrecomputation<'a> {
    id: &'a str,
    pack: &'a CirclePack<f64>,
    levels: Vec<Vec<(&'a HyperEdge, &'a RoutedPath<f64>)>>,
}

#[derive(Serialize)]
struct Precomputation<'a> {
    version: &'a str,
    graphs: Vec<GraphPrecomputation<'a>>,
    coords: &'a [Point2<f64>],
    clusters: &'a ClusterTree<f64>,
}

impl Dataset {
    /// Every precomputed artifact serialized deterministically.
    pub fn precomputation_json(&self) -> String {
        let p = Precomputation {
            version: &self.version,
            graphs: self
                .graphs
                .values()
                .map(|g| GraphPrecomputation {
                    id: &g.entry.id,
                    pack: &g.pack,
                    levels: g
                        .levels
                        .iter()
                        .map(|l| l.iter().map(|(b, r)| (b, r)).collect())
                        .collect(),
                })
                .collect(),
            coords: &self.corpus.coords,
            clusters: &self.corpus.clusters,
        };
        serde_json::to_string(&p).expect("precomputation serializes")
    }

    pub fn graph(&self, id: &str) -> Option<&GraphData> {
        self.graphs.get(id)
    }
}

/// Relative path of the precomputation cache written by `atlas ingest`.
pub const CACHE_FILE: &str = "cache/precompute.json";
