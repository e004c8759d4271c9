//! Deterministic dataset generation: seeded synthetic graphs at any scale
//! and a fixed drug-repurposing scenario.

use std::collections::HashSet;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::ingest::{layout, write_embeddings, write_jsonl, CorpusEntry, GraphEntry, Manifest};
use crate::knowledge::DocumentRecord;
use crate::model::{edge_id, Agent, CausalStatement, Evidence, StatementType};
use crate::scalar::Matrix;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture parameters: {0}")]
    Params(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

/// How statement endpoints are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Attachment {
    /// Proportional to current degree + 1, which grows hubs.
    #[default]
    Preferential,
    /// Uniform over agents; the control for hub statistics.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureParams {
    pub seed: u64,
    pub n_agents: usize,
    pub n_statements: usize,
    pub n_docs: usize,
    pub embedding_dim: usize,
    pub ontology_depth: usize,
    pub ontology_branching: usize,
    pub attachment: Attachment,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            seed: 1,
            n_agents: 100,
            n_statements: 400,
            n_docs: 500,
            embedding_dim: 32,
            ontology_depth: 3,
            ontology_branching: 4,
            attachment: Attachment::Preferential,
        }
    }
}

impl FixtureParams {
    pub fn validate(&self) -> Result<(), FixtureError> {
        let fields = [
            ("n_agents", self.n_agents),
            ("n_statements", self.n_statements),
            ("n_docs", self.n_docs),
            ("embedding_dim", self.embedding_dim),
            ("ontology_depth", self.ontology_depth),
            ("ontology_branching", self.ontology_branching),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(FixtureError::Params(format!("{name} must be positive")));
        }
        if self.n_agents < 2 {
            return Err(FixtureError::Params("n_agents must be at least 2".into()));
        }
        if self.n_statements + 1 < self.n_agents {
            return Err(FixtureError::Params("n_statements must be at least n_agents - 1".into()));
        }
        let capacity = self.n_agents * (self.n_agents - 1) * StatementType::ALL.len();
        if self.n_statements > capacity / 2 {
            return Err(FixtureError::Params(format!(
                "n_statements {} is too dense for {} agents",
                self.n_statements, self.n_agents
            )));
        }
        Ok(())
    }
}

/// A dataset held in memory, ready to be written in the ingest layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFiles {
    pub manifest: Manifest,
    /// Per graph, in manifest order.
    pub graphs: Vec<(Vec<Agent>, Vec<CausalStatement>)>,
    pub documents: Vec<DocumentRecord>,
    pub embeddings: Matrix<f32>,
}

impl DatasetFiles {
    pub fn write(&self, dir: &Path) -> Result<(), FixtureError> {
        let manifest = serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes");
        write_file(&dir.join(layout::MANIFEST), |w| w.write_all(&manifest))?;
        for (entry, (agents, statements)) in self.manifest.graphs.iter().zip(&self.graphs) {
            write_file(&dir.join(layout::agents(&entry.id)), |w| write_jsonl(w, agents))?;
            write_file(&dir.join(layout::statements(&entry.id)), |w| write_jsonl(w, statements))?;
        }
        write_file(&dir.join(&self.manifest.corpus.documents), |w| {
            write_jsonl(w, &self.documents)
        })?;
        write_file(&dir.join(&self.manifest.corpus.embeddings), |w| {
            write_embeddings(w, &self.embeddings)
        })?;
        Ok(())
    }
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), FixtureError> {
    let wrap = |source| FixtureError::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    let mut w = BufWriter::new(fs::File::create(path).map_err(wrap)?);
    body(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

pub const SYNTHETIC_GRAPH: &str = "synthetic";

fn synthetic_doi(d: usize) -> String {
    format!("10.5555/syn.{d:06}")
}

/// Random category tree: the root has `branching` children, deeper nodes
/// between 1 and `branching`; every leaf sits at exactly `depth`.
fn random_leaves(rng: &mut ChaCha8Rng, depth: usize, branching: usize) -> Vec<String> {
    let mut frontier = vec!["root".to_string()];
    for level in 1..=depth {
        let mut next = Vec::new();
        for parent in &frontier {
            let k = if level == 1 {
                branching
            } else {
                rng.random_range(1..=branching)
            };
            for c in 0..k {
                next.push(format!("{parent}/c{level}x{c}"));
            }
        }
        frontier = next;
    }
    frontier
}

/// Index of the root child (topic) containing a leaf path.
fn topic_of(path: &str) -> usize {
    let seg = path.split('/').nth(1).expect("depth ≥ 1");
    seg.rsplit('x').next().and_then(|s| s.parse().ok()).unwrap_or(0)
}

/// Generates a synthetic dataset in memory.
pub fn generate(params: &FixtureParams) -> Result<DatasetFiles, FixtureError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let leaves = random_leaves(&mut rng, params.ontology_depth, params.ontology_branching);
    let n = params.n_agents;
    let agents: Vec<Agent> = (0..n)
        .map(|i| Agent {
            id: format!("A{i:06}"),
            name: format!("Agent {i}"),
            category_path: leaves.choose(&mut rng).expect("leaves").clone(),
            description: None,
        })
        .collect();

    // Urn with one ticket per agent plus one per incident statement.
    let mut urn: Vec<usize> = (0..n).collect();
    let draw = |rng: &mut ChaCha8Rng, urn: &[usize], bound: usize| match params.attachment {
        Attachment::Preferential => loop {
            let v = urn[rng.random_range(0..urn.len())];
            if v < bound {
                return v;
            }
        },
        Attachment::Uniform => rng.random_range(0..bound),
    };
    let mut pairs: Vec<(usize, usize, StatementType)> = Vec::with_capacity(params.n_statements);
    let mut seen = HashSet::with_capacity(params.n_statements);
    let mut push = |pairs: &mut Vec<_>, urn: &mut Vec<usize>, s: usize, o: usize, t: StatementType| {
        if s == o || !seen.insert((s, o, t)) {
            return false;
        }
        pairs.push((s, o, t));
        urn.push(s);
        urn.push(o);
        true
    };
    for i in 1..n {
        loop {
            let j = draw(&mut rng, &urn, i);
            let t = *StatementType::ALL.choose(&mut rng).expect("types");
            let (s, o) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
            if push(&mut pairs, &mut urn, s, o, t) {
                break;
            }
        }
    }
    while pairs.len() < params.n_statements {
        let s = draw(&mut rng, &urn, n);
        let o = draw(&mut rng, &urn, n);
        let t = *StatementType::ALL.choose(&mut rng).expect("types");
        push(&mut pairs, &mut urn, s, o, t);
    }

    let statements: Vec<CausalStatement> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(s, o, t))| {
            let evidence = (0..rng.random_range(1..=3usize))
                .map(|e| Evidence {
                    text: format!("{} {} {} (finding {e})", agents[s].name, t, agents[o].name),
                    doi: synthetic_doi(rng.random_range(0..params.n_docs)),
                    source: "synthetic".into(),
                })
                .collect();
            CausalStatement {
                id: format!("s{k:07}"),
                statement_type: t,
                subj: agents[s].id.clone(),
                obj: agents[o].id.clone(),
                belief: (rng.random_range(500..=1000) as f64) / 1000.0,
                curated: rng.random_bool(0.2),
                evidence,
            }
        })
        .collect();

    let topics = params.ontology_branching;
    let mut by_topic: Vec<Vec<&Agent>> = vec![Vec::new(); topics];
    for a in &agents {
        by_topic[topic_of(&a.category_path)].push(a);
    }
    let publishers = ["Atlas Press", "Cell Letters", "Open Biology", "Journal of Signalling"];
    let documents: Vec<DocumentRecord> = (0..params.n_docs)
        .map(|d| {
            let topic = d % topics;
            let entities: Vec<String> = by_topic[topic]
                .choose_multiple(&mut rng, 3)
                .map(|a| a.name.clone())
                .collect();
            DocumentRecord {
                doi: synthetic_doi(d),
                title: format!("Study {d} on topic {topic}"),
                authors: vec![format!("Author {}", rng.random_range(0..50)), format!("Author {}", rng.random_range(0..50))],
                publisher: publishers.choose(&mut rng).expect("publishers").to_string(),
                year: rng.random_range(2000..=2023),
                abstract_text: format!("We examine {}.", entities.join(", ")),
                entities,
                figures: rng.random_range(0..4),
                tables: rng.random_range(0..3),
                row: d,
            }
        })
        .collect();

    let embeddings = topic_embeddings(&mut rng, params.n_docs, params.embedding_dim, topics, |d| d % topics);

    let manifest = Manifest {
        name: format!("synthetic-{}", params.seed),
        graphs: vec![GraphEntry {
            id: SYNTHETIC_GRAPH.into(),
            name: "Synthetic network".into(),
            agents: Some(n),
            edges: Some(params.n_statements),
        }],
        corpus: CorpusEntry {
            documents: layout::DOCUMENTS.into(),
            embeddings: layout::EMBEDDINGS.into(),
            coords: None,
        },
    };
    Ok(DatasetFiles {
        manifest,
        graphs: vec![(agents, statements)],
        documents,
        embeddings,
    })
}

/// Rows drawn around one random unit-scale center per topic.
fn topic_embeddings(
    rng: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    topics: usize,
    topic_of: impl Fn(usize) -> usize,
) -> Matrix<f32> {
    let unit = Normal::new(0.0f32, 1.0).expect("valid normal");
    let spread = Normal::new(0.0f32, 0.3).expect("valid normal");
    let centers: Vec<Vec<f32>> = (0..topics)
        .map(|_| (0..dim).map(|_| unit.sample(rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(n * dim);
    for d in 0..n {
        let c = &centers[topic_of(d)];
        data.extend(c.iter().map(|&x| x + spread.sample(rng)));
    }
    Matrix::from_row_major(n, dim, data).expect("n×dim")
}

/// Generates a synthetic dataset into `dir`.
pub fn gen_dataset(params: &FixtureParams, dir: &Path) -> Result<Manifest, FixtureError> {
    let files = generate(params)?;
    files.write(dir)?;
    Ok(files.manifest)
}

/// Constants of the drug-repurposing scenario.
pub mod scenario {
    pub const GRAPH: &str = "covid19-fixture";
    pub const SARS_COV_2: &str = "SARS-CoV-2";
    pub const COVID_19: &str = "COVID-19";
    pub const IL6: &str = "IL6";
    pub const TOCILIZUMAB: &str = "tocilizumab";
    pub const IMMUNE_RESPONSE: &str = "immune-response";
    /// Papers returned by the opening literature search.
    pub const SEED_DOIS: [&str; 2] = ["10.1101/2020.03.30.20048058", "10.1016/j.ijantimicag.2020.105954"];
    pub const TOCILIZUMAB_IL6_EVIDENCE: usize = 39;
    pub const TOCILIZUMAB_OUT_DEGREE: usize = 121;
    pub const IL6_IN_DEGREE: usize = 1_990;
    pub const IL6_OUT_DEGREE: usize = 1_000;
    pub const CORPUS_SIZE: usize = 150;
    pub const EMBEDDING_DIM: usize = 32;
}

const SCENARIO_TOPICS: [(&str, &str); 3] = [
    ("cytokine signalling", "IL-6"),
    ("antiviral therapy", "SARS-CoV-2"),
    ("immunology", "immune response"),
];

fn scenario_doi(d: usize) -> String {
    format!("10.5555/scenario.{d:04}")
}

fn agent(id: &str, name: &str, category: &str) -> Agent {
    Agent {
        id: id.into(),
        name: name.into(),
        category_path: category.into(),
        description: None,
    }
}

fn statement(id: String, t: StatementType, subj: &str, obj: &str, curated: bool, evidence: Vec<Evidence>) -> CausalStatement {
    CausalStatement {
        id,
        statement_type: t,
        subj: subj.into(),
        obj: obj.into(),
        belief: 0.9,
        curated,
        evidence,
    }
}

fn evidence(text: String, doi: String) -> Evidence {
    Evidence {
        text,
        doi,
        source: "scenario".into(),
    }
}

/// Fixed dataset reproducing the COVID-19 treatment walkthrough.
pub fn scenario_files() -> DatasetFiles {
    use scenario::*;
    let corpus_doi = |k: usize| scenario_doi(k % (CORPUS_SIZE - SEED_DOIS.len()));
    let mut agents = vec![
        agent(SARS_COV_2, "SARS-CoV-2", "root/organism/virus"),
        agent(COVID_19, "COVID-19", "root/disease/infection"),
        agent(IL6, "IL-6", "root/protein/cytokine"),
        agent(TOCILIZUMAB, "Tocilizumab", "root/chemical/drug"),
        agent(IMMUNE_RESPONSE, "immune response", "root/process/immunity"),
    ];
    let mut statements = Vec::new();

    // Two partially overlapping curations that merge into 39 items.
    let toci_il6: Vec<Evidence> = (0..TOCILIZUMAB_IL6_EVIDENCE)
        .map(|k| {
            let doi = if k < SEED_DOIS.len() {
                SEED_DOIS[k].to_string()
            } else {
                corpus_doi(k)
            };
            evidence(format!("Tocilizumab blocks IL-6 receptor signalling (report {k})."), doi)
        })
        .collect();
    statements.push(statement("toci-il6-a".into(), StatementType::Inhibition, TOCILIZUMAB, IL6, false, toci_il6[..20].to_vec()));
    statements.push(statement("toci-il6-b".into(), StatementType::Inhibition, TOCILIZUMAB, IL6, true, toci_il6[15..].to_vec()));
    statements.push(statement(
        "sars-il6".into(),
        StatementType::IncreaseAmount,
        SARS_COV_2,
        IL6,
        false,
        vec![
            evidence("SARS-CoV-2 increases the amount of IL6.".into(), SEED_DOIS[0].into()),
            evidence("Infection raises serum IL-6.".into(), corpus_doi(3)),
        ],
    ));
    statements.push(statement(
        "il6-covid".into(),
        StatementType::Activation,
        IL6,
        COVID_19,
        false,
        vec![
            evidence("IL-6 drives COVID-19 severity.".into(), SEED_DOIS[1].into()),
            evidence("Elevated IL-6 predicts poor outcome.".into(), corpus_doi(5)),
        ],
    ));
    statements.push(statement(
        "sars-covid".into(),
        StatementType::Activation,
        SARS_COV_2,
        COVID_19,
        true,
        vec![evidence("SARS-CoV-2 causes COVID-19.".into(), corpus_doi(7))],
    ));
    statements.push(statement(
        "toci-immune".into(),
        StatementType::Inhibition,
        TOCILIZUMAB,
        IMMUNE_RESPONSE,
        false,
        vec![evidence("Tocilizumab dampens the immune response.".into(), corpus_doi(11))],
    ));

    // Remaining tocilizumab targets; none reaches COVID-19 within two steps.
    let directed = [
        StatementType::Activation,
        StatementType::Inhibition,
        StatementType::IncreaseAmount,
        StatementType::DecreaseAmount,
        StatementType::Phosphorylation,
        StatementType::Dephosphorylation,
    ];
    for k in 0..TOCILIZUMAB_OUT_DEGREE - 2 {
        let id = format!("target-{k:03}");
        agents.push(agent(&id, &format!("Target {k}"), "root/protein/receptor"));
        let t = directed[k % directed.len()];
        let items = (0..1 + k % 3)
            .map(|e| evidence(format!("Tocilizumab affects target {k} (note {e})."), corpus_doi(k + e)))
            .collect();
        statements.push(statement(format!("toci-t{k:03}"), t, TOCILIZUMAB, &id, false, items));
    }

    // The IL-6 hub: upstream regulators and downstream effects.
    for k in 0..IL6_IN_DEGREE - 2 {
        let id = format!("regulator-{k:04}");
        agents.push(agent(&id, &format!("Regulator {k}"), "root/protein/kinase"));
        let t = directed[k % directed.len()];
        let items = vec![evidence(format!("Regulator {k} acts on IL-6."), corpus_doi(k))];
        statements.push(statement(format!("r{k:04}-il6"), t, &id, IL6, false, items));
    }
    for k in 0..IL6_OUT_DEGREE - 1 {
        let id = format!("effect-{k:04}");
        agents.push(agent(&id, &format!("Effect {k}"), "root/process/inflammation"));
        let t = directed[(k + 1) % directed.len()];
        let items = vec![evidence(format!("IL-6 acts on effect {k}."), corpus_doi(k + 1))];
        statements.push(statement(format!("il6-e{k:04}"), t, IL6, &id, k % 10 == 0, items));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut documents: Vec<DocumentRecord> = SEED_DOIS
        .iter()
        .enumerate()
        .map(|(i, doi)| DocumentRecord {
            doi: doi.to_string(),
            title: if i == 0 {
                "IL-6 elevation in SARS-CoV-2 infection".into()
            } else {
                "Tocilizumab for severe COVID-19".into()
            },
            authors: vec!["Seed Author".into()],
            publisher: "Preprint Server".into(),
            year: 2020,
            abstract_text: "Tocilizumab inhibits IL-6 signalling, which SARS-CoV-2 raises in COVID-19 patients.".into(),
            entities: vec!["tocilizumab".into(), "IL-6".into(), "SARS-CoV-2".into(), "COVID-19".into()],
            figures: 2,
            tables: 1,
            row: i,
        })
        .collect();
    for d in 0..CORPUS_SIZE - SEED_DOIS.len() {
        let (topic, entity) = SCENARIO_TOPICS[d % SCENARIO_TOPICS.len()];
        let mentions_drug = d % 4 == 0;
        documents.push(DocumentRecord {
            doi: scenario_doi(d),
            title: format!("Notes on {topic} {d}"),
            authors: vec![format!("Author {}", d % 17), format!("Author {}", d % 5)],
            publisher: ["Cell Letters", "Open Biology", "Atlas Press"][d % 3].into(),
            year: 2015 + (d % 8) as i32,
            abstract_text: if mentions_drug {
                format!("We review {entity} and the response to tocilizumab.")
            } else {
                format!("We review {entity}.")
            },
            entities: vec![entity.into()],
            figures: (d % 3) as u32,
            tables: (d % 2) as u32,
            row: documents.len(),
        });
    }
    let n_docs = documents.len();
    let embeddings = topic_embeddings(&mut rng, n_docs, EMBEDDING_DIM, SCENARIO_TOPICS.len(), |d| {
        if d < SEED_DOIS.len() {
            0
        } else {
            (d - SEED_DOIS.len()) % SCENARIO_TOPICS.len()
        }
    });

    agents.sort_by(|a, b| a.id.cmp(&b.id));
    let edge_count = statements
        .iter()
        .map(|s| edge_id(&s.subj, s.statement_type, &s.obj))
        .collect::<HashSet<_>>()
        .len();
    let manifest = Manifest {
        name: "covid19-scenario".into(),
        graphs: vec![GraphEntry {
            id: GRAPH.into(),
            name: "COVID-19 treatment network".into(),
            agents: Some(agents.len()),
            edges: Some(edge_count),
        }],
        corpus: CorpusEntry {
            documents: layout::DOCUMENTS.into(),
            embeddings: layout::EMBEDDINGS.into(),
            coords: None,
        },
    };
    DatasetFiles {
        manifest,
        graphs: vec![(agents, statements)],
        documents,
        embeddings,
    }
}

/// Writes the scenario dataset into `dir`.
pub fn scenario_fixture(dir: &Path) -> Result<Manifest, FixtureError> {
    let files = scenario_files();
    files.write(dir)?;
    Ok(files.manifest)
}
