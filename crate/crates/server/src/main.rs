//! `atlas` command-line tool: ingest, serve, cluster and fixture generation.

use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use atlas_core::fixtures::{gen_dataset, scenario_fixture, FixtureParams};
use atlas_core::knowledge::ClusterExport;
use atlas_server::{load_dataset, router, LoadOptions, CACHE_FILE};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "atlas", version, about = "Causal knowledge graph and document atlas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset directory and write its precomputation cache.
    Ingest {
        dir: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        min_belief: f64,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 0.0)]
        min_belief: f64,
        #[arg(long = "lod-px")]
        lod_px: Option<f64>,
    },
    /// Cluster the corpus and print the result as JSON.
    Cluster {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 25)]
        min_cluster_size: usize,
        #[arg(long, default_value_t = 5)]
        min_samples: usize,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Write a synthetic or scenario dataset.
    GenFixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, conflicts_with = "scenario")]
        nodes: Option<usize>,
        #[arg(long, conflicts_with = "scenario")]
        edges: Option<usize>,
        #[arg(long, conflicts_with = "scenario")]
        docs: Option<usize>,
        #[arg(long)]
        scenario: bool,
    },
}

fn ingest(dir: &Path, options: &LoadOptions) -> anyhow::Result<()> {
    let ds = load_dataset(dir, options).with_context(|| format!("loading {}", dir.display()))?;
    let cache = dir.join(CACHE_FILE);
    fs::create_dir_all(cache.parent().expect("cache file has a parent"))?;
    fs::write(&cache, ds.precomputation_json()).with_context(|| format!("writing {}", cache.display()))?;
    for g in ds.graphs.values() {
        println!(
            "graph {}: {} agents, {} edges, depth {}",
            g.entry.id,
            g.graph.node_count(),
            g.graph.edge_count(),
            g.max_level()
        );
    }
    println!(
        "corpus: {} documents, {} clusters, {} noise",
        ds.corpus.corpus.len(),
        ds.corpus.clusters.clusters.len(),
        ds.corpus.clusters.noise.len()
    );
    println!("version {}", ds.version);
    Ok(())
}

async fn serve(data: &Path, addr: SocketAddr, options: &LoadOptions) -> anyhow::Result<()> {
    let ds = load_dataset(data, options).with_context(|| format!("loading {}", data.display()))?;
    log::info!("dataset {} loaded from {}", ds.version, data.display());
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(ds))).await?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest { dir, min_belief } => ingest(
            &dir,
            &LoadOptions {
                min_belief,
                ..LoadOptions::default()
            },
        ),
        Command::Serve {
            data,
            port,
            host,
            min_belief,
            lod_px,
        } => {
            let mut options = LoadOptions {
                min_belief,
                ..LoadOptions::default()
            };
            if let Some(px) = lod_px {
                if !(px > 0.0) {
                    bail!("--lod-px must be positive");
                }
                options.lod_threshold_px = px;
            }
            let addr: SocketAddr = format!("{host}:{port}").parse().context("parsing listen address")?;
            tokio::runtime::Runtime::new()?.block_on(serve(&data, addr, &options))
        }
        Command::Cluster {
            data,
            min_cluster_size,
            min_samples,
            alpha,
        } => {
            let options = LoadOptions {
                min_cluster_size,
                min_samples,
                alpha_radius: alpha,
                ..LoadOptions::default()
            };
            let ds = load_dataset(&data, &options).with_context(|| format!("loading {}", data.display()))?;
            let c = &ds.corpus;
            let export = ClusterExport::new(&c.corpus, &c.coords, &c.clusters, None);
            writeln!(io::stdout().lock(), "{}", serde_json::to_string_pretty(&export)?)?;
            Ok(())
        }
        Command::GenFixture {
            out,
            seed,
            nodes,
            edges,
            docs,
            scenario,
        } => {
            let manifest = if scenario {
                scenario_fixture(&out)?
            } else {
                let defaults = FixtureParams::default();
                let params = FixtureParams {
                    seed,
                    n_agents: nodes.unwrap_or(defaults.n_agents),
                    n_statements: edges.unwrap_or(defaults.n_statements),
                    n_docs: docs.unwrap_or(defaults.n_docs),
                    ..defaults
                };
                gen_dataset(&params, &out)?
            };
            println!("wrote {} graph(s) to {}", manifest.graphs.len(), out.display());
            Ok(())
        }
    }
}
