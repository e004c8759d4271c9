//! Independent reference computations used by the acceptance criteria.

use std::collections::{BTreeMap, BTreeSet};

use atlas_core::ingest::assemble;
use atlas_core::knowledge::Polygon;
use atlas_core::layout::pack::{CirclePack, PackNode};
use atlas_core::model::{Agent, AssembledGraph, CausalStatement, Evidence, StatementType};
use atlas_core::query::Subgraph;
use atlas_core::{EdgeIx, NodeIx, Point2};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// ------------------------------------------------------------------ graphs

pub const CATEGORIES: [&str; 5] = ["root/a", "root/a/x", "root/a/y", "root/b", "root/b/z"];

pub fn doi(i: usize) -> String {
    format!("10.1/d{i}")
}

pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> AssembledGraph {
    let agents: Vec<Agent> = (0..n)
        .map(|i| Agent {
            id: format!("a{i:02}"),
            name: format!("Agent {}", (b'A' + (i % 26) as u8) as char),
            category_path: CATEGORIES.choose(rng).unwrap().to_string(),
            description: None,
        })
        .collect();
    let mut statements = Vec::new();
    for k in 0..if n >= 2 { m } else { 0 } {
        let s = rng.random_range(0..n);
        let o = (s + rng.random_range(1..n)) % n;
        statements.push(CausalStatement {
            id: format!("st{k}"),
            statement_type: *StatementType::ALL.choose(rng).unwrap(),
            subj: agents[s].id.clone(),
            obj: agents[o].id.clone(),
            belief: rng.random_range(0..=10) as f64 / 10.0,
            curated: rng.random_bool(0.3),
            evidence: (0..rng.random_range(1..4))
                .map(|j| Evidence {
                    text: format!("s{k} e{j}"),
                    doi: doi(rng.random_range(0..8)),
                    source: "acceptance".into(),
                })
                .collect(),
        });
    }
    assemble("random", &statements, &agents).expect("valid random graph")
}

pub fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

// ------------------------------------------------------------------- paths

type Found = (Vec<NodeIx>, Vec<EdgeIx>);

/// All simple paths up to `max_len` edges from trying every sequence of
/// distinct nodes, in the documented rank order.
pub fn brute_force_paths(
    g: &AssembledGraph,
    ctx: &Subgraph,
    sources: &BTreeSet<NodeIx>,
    targets: &BTreeSet<NodeIx>,
    max_len: usize,
) -> Vec<Found> {
    let mut table: BTreeMap<(NodeIx, NodeIx), Vec<EdgeIx>> = BTreeMap::new();
    for &e in &ctx.edges {
        let edge = g.edge(e);
        let (s, o) = (g.node_ix(&edge.subj).unwrap(), g.node_ix(&edge.obj).unwrap());
        if ctx.nodes.contains(&s) && ctx.nodes.contains(&o) {
            table.entry((s, o)).or_default().push(e);
            if !edge.directed {
                table.entry((o, s)).or_default().push(e);
            }
        }
    }
    let nodes: Vec<NodeIx> = ctx.nodes.iter().copied().collect();
    let mut sequences = Vec::new();
    let mut stack: Vec<Vec<NodeIx>> = sources.iter().filter(|s| ctx.nodes.contains(s)).map(|&s| vec![s]).collect();
    while let Some(seq) = stack.pop() {
        if seq.len() >= 2 && targets.contains(seq.last().unwrap()) {
            sequences.push(seq.clone());
        }
        if seq.len() <= max_len {
            for &v in &nodes {
                if !seq.contains(&v) {
                    let mut next = seq.clone();
                    next.push(v);
                    stack.push(next);
                }
            }
        }
    }
    let mut out = Vec::new();
    for seq in sequences {
        let mut partial: Vec<Vec<EdgeIx>> = vec![Vec::new()];
        for w in seq.windows(2) {
            let options = table.get(&(w[0], w[1])).cloned().unwrap_or_default();
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    options.iter().map(move |&e| {
                        let mut q = p.clone();
                        q.push(e);
                        q
                    })
                })
                .collect();
        }
        out.extend(partial.into_iter().map(|edges| (seq.clone(), edges)));
    }
    let score = |edges: &[EdgeIx]| edges.iter().map(|&e| (g.edge(e).evidence_count as f64).ln_1p()).sum::<f64>();
    let id = |edges: &[EdgeIx]| edges.iter().map(|&e| g.edge(e).id.as_str()).collect::<Vec<_>>().join(";");
    out.sort_by(|a, b| {
        a.1.len()
            .cmp(&b.1.len())
            .then(score(&b.1).total_cmp(&score(&a.1)))
            .then(id(&a.1).cmp(&id(&b.1)))
            .then(a.0.cmp(&b.0))
    });
    out
}

// ------------------------------------------------------------------ layout

pub const REL_TOL: f64 = 1e-6;

/// Exactly `leaves` leaves under random category paths shorter than `depth`.
pub fn tree_with_leaves(rng: &mut ChaCha8Rng, leaves: usize, depth: usize, fanout: usize) -> PackNode<f64> {
    #[derive(Default)]
    struct Group {
        children: BTreeMap<usize, Group>,
        leaves: Vec<(String, f64)>,
    }
    fn build(id: String, g: Group) -> PackNode<f64> {
        let mut children: Vec<PackNode<f64>> =
            g.children.into_iter().map(|(k, c)| build(format!("{id}/{k}"), c)).collect();
        children.extend(g.leaves.into_iter().map(|(leaf, w)| PackNode::leaf(leaf, w)));
        PackNode::group(id, children)
    }
    let mut root = Group::default();
    for i in 0..leaves {
        let mut g = &mut root;
        for _ in 0..rng.random_range(0..depth) {
            g = g.children.entry(rng.random_range(0..fanout)).or_default();
        }
        g.leaves.push((format!("agent{i:04}"), rng.random_range(1.0..30.0)));
    }
    build("root".into(), root)
}

pub fn tree_depth(node: &PackNode<f64>) -> usize {
    node.children.iter().map(|c| 1 + tree_depth(c)).max().unwrap_or(0)
}

/// Sibling overlaps and parent escapes beyond the relative tolerance.
pub fn pack_violations(p: &CirclePack<f64>) -> usize {
    let dist = |a: Point2<f64>, b: Point2<f64>| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
    let mut bad = 0;
    for node in &p.nodes {
        let c = node.circle;
        if let Some(parent) = node.parent {
            let pc = p.nodes[parent].circle;
            if dist(c.center, pc.center) + c.radius > pc.radius * (1.0 + REL_TOL) {
                bad += 1;
            }
        }
        for (i, &a) in node.children.iter().enumerate() {
            for &b in &node.children[i + 1..] {
                let (ca, cb) = (p.nodes[a].circle, p.nodes[b].circle);
                let sum = ca.radius + cb.radius;
                if dist(ca.center, cb.center) < sum * (1.0 - REL_TOL) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Kahn's algorithm over string ids.
pub fn is_acyclic(nodes: &[String], edges: &[(String, String)]) -> bool {
    let mut indeg: BTreeMap<&str, usize> = nodes.iter().map(|n| (n.as_str(), 0)).collect();
    for (_, o) in edges {
        *indeg.get_mut(o.as_str()).unwrap() += 1;
    }
    let mut ready: Vec<&str> = indeg.iter().filter(|(_, &d)| d == 0).map(|(&n, _)| n).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for (s, o) in edges.iter().filter(|(s, _)| s == v) {
            let _ = s;
            let d = indeg.get_mut(o.as_str()).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(o);
            }
        }
    }
    seen == nodes.len()
}

/// Crossing pairs among `(layer, from_pos, to_pos)` segments.
pub fn pairwise_crossings(segments: &[(usize, f64, f64)]) -> usize {
    let mut c = 0;
    for (i, a) in segments.iter().enumerate() {
        for b in &segments[i + 1..] {
            if a.0 == b.0 && (a.1 - b.1) * (a.2 - b.2) < 0.0 {
                c += 1;
            }
        }
    }
    c
}

/// Minimum crossings over every combination of per-layer orders.
pub fn brute_force_minimum(layers: &[Vec<usize>], layer_of: &[usize], edges: &[(usize, usize)]) -> usize {
    let options: Vec<Vec<Vec<usize>>> = layers.iter().map(|l| permutations(l)).collect();
    let mut best = usize::MAX;
    let mut idx = vec![0usize; layers.len()];
    let mut slot = vec![0i64; layer_of.len()];
    loop {
        for (l, &i) in idx.iter().enumerate() {
            for (s, &v) in options[l][i].iter().enumerate() {
                slot[v] = s as i64;
            }
        }
        let mut c = 0;
        for (i, &(a, b)) in edges.iter().enumerate() {
            for &(x, y) in &edges[i + 1..] {
                if layer_of[a] == layer_of[x] && (slot[a] - slot[x]) * (slot[b] - slot[y]) < 0 {
                    c += 1;
                }
            }
        }
        best = best.min(c);
        let mut l = 0;
        loop {
            if l == idx.len() {
                return best;
            }
            idx[l] += 1;
            if idx[l] < options[l].len() {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
    }
}

// -------------------------------------------------------------- clustering

pub fn adjusted_rand(a: &[i64], b: &[i64]) -> f64 {
    let mut table: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    let mut rows: BTreeMap<i64, u64> = BTreeMap::new();
    let mut cols: BTreeMap<i64, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&n| c2(n)).sum();
    let sa: f64 = rows.values().map(|&n| c2(n)).sum();
    let sb: f64 = cols.values().map(|&n| c2(n)).sum();
    let expected = sa * sb / c2(a.len() as u64);
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

// ---------------------------------------------------------------- geometry

pub fn signed_area(p: &Polygon<f64>) -> f64 {
    let v = &p.vertices;
    (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

fn orient(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_meet(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> bool {
    let within = |p: Point2<f64>, q: Point2<f64>, r: Point2<f64>| {
        orient(p, q, r) == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    (o1 * o2 < 0.0 && o3 * o4 < 0.0) || within(a, b, c) || within(a, b, d) || within(c, d, a) || within(c, d, b)
}

pub fn is_simple(p: &Polygon<f64>) -> bool {
    let v = &p.vertices;
    let n = v.len();
    let distinct: BTreeSet<(u64, u64)> = v.iter().map(|q| (q.x.to_bits(), q.y.to_bits())).collect();
    if n < 3 || distinct.len() != n {
        return false;
    }
    for i in 0..n {
        for j in i + 2..n {
            if !(i == 0 && j == n - 1) && segments_meet(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

fn dist_to_segment(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    ((p.x - a.x - t * dx).powi(2) + (p.y - a.y - t * dy).powi(2)).sqrt()
}

/// Even-odd ray casting; points within `eps` of an edge count as inside.
pub fn inside_or_on(poly: &Polygon<f64>, p: Point2<f64>, eps: f64) -> bool {
    let v = &poly.vertices;
    let n = v.len();
    if (0..n).any(|i| dist_to_segment(p, v[i], v[(i + 1) % n]) <= eps) {
        return true;
    }
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
            inside = !inside;
        }
    }
    inside
}

/// Gift-wrapped hull vertex set.
pub fn hull_vertices(pts: &[Point2<f64>]) -> BTreeSet<(u64, u64)> {
    let start = (0..pts.len())
        .min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x).then(pts[a].y.total_cmp(&pts[b].y)))
        .unwrap();
    let d2 = |a: Point2<f64>, b: Point2<f64>| (a.x - b.x).powi(2) + (a.y - b.y).powi(2);
    let mut hull = BTreeSet::new();
    let mut current = start;
    loop {
        hull.insert((pts[current].x.to_bits(), pts[current].y.to_bits()));
        let mut next = (current + 1) % pts.len();
        for i in 0..pts.len() {
            let o = orient(pts[current], pts[next], pts[i]);
            if o < 0.0 || (o == 0.0 && d2(pts[current], pts[i]) > d2(pts[current], pts[next])) {
                next = i;
            }
        }
        current = next;
        if current == start {
            return hull;
        }
    }
}

// --------------------------------------------------------------- neighbors

/// Cosine neighbors of row `q` by full scan in f64; ties by doi.
pub fn brute_neighbors(rows: &[Vec<f32>], dois: &[String], q: usize, k: usize) -> Vec<String> {
    let norm = |r: &[f32]| r.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>().sqrt();
    let mut all: Vec<(f64, &String)> = (0..rows.len())
        .filter(|&r| r != q)
        .map(|r| {
            let dot: f64 = rows[q].iter().zip(&rows[r]).map(|(&a, &b)| f64::from(a) * f64::from(b)).sum();
            (dot / (norm(&rows[q]) * norm(&rows[r])), &dois[r])
        })
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    all.into_iter().take(k).map(|(_, d)| d.clone()).collect()
}
