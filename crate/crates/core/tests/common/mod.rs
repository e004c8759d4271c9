//! Random graph builder shared by the integration tests.
#![allow(dead_code)]

use atlas_core::ingest::assemble;
use atlas_core::model::{Agent, AssembledGraph, CausalStatement, Evidence, StatementType};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CATEGORIES: [&str; 5] = ["root/a", "root/a/x", "root/a/y", "root/b", "root/b/z"];

pub fn doi(i: usize) -> String {
    format!("10.1/d{i}")
}

/// `n` agents and about `m` statements with random types, beliefs, curation
/// and evidence drawn from a pool of eight DOIs.
pub fn random_graph(seed: u64, n: usize, m: usize) -> AssembledGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents: Vec<Agent> = (0..n)
        .map(|i| Agent {
            id: format!("a{i:02}"),
            name: format!("Agent {}", (b'A' + (i % 26) as u8) as char),
            category_path: CATEGORIES.choose(&mut rng).unwrap().to_string(),
            description: None,
        })
        .collect();
    let mut statements = Vec::new();
    if n >= 2 {
        for k in 0..m {
            let s = rng.random_range(0..n);
            let mut o = rng.random_range(0..n - 1);
            if o >= s {
                o += 1;
            }
            let evidence = (0..rng.random_range(1..4))
                .map(|j| Evidence {
                    text: format!("s{k} e{j}"),
                    doi: doi(rng.random_range(0..8)),
                    source: "test".into(),
                })
                .collect();
            statements.push(CausalStatement {
                id: format!("st{k}"),
                statement_type: *StatementType::ALL.choose(&mut rng).unwrap(),
                subj: agents[s].id.clone(),
                obj: agents[o].id.clone(),
                belief: (rng.random_range(0..=10) as f64) / 10.0,
                curated: rng.random_bool(0.3),
                evidence,
            });
        }
    }
    assemble("test", &statements, &agents).expect("valid random graph")
}
