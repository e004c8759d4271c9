//! Hierarchical density clustering over 2D points with a two-level
//! (coarse/fine) summary of the condensed tree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Point2, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("{points} points is fewer than min_cluster_size {min_cluster_size}")]
    TooFewPoints {
        points: usize,
        min_cluster_size: usize,
    },
    #[error("min_cluster_size must be at least 2")]
    MinClusterSize,
    #[error("min_samples must be at least 1")]
    MinSamples,
    #[error("non-finite coordinate at row {0}")]
    NonFinite(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Coarse,
    Fine,
}

/// Cluster selected from the condensed tree, before boundaries are drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct RawCluster<T> {
    pub id: usize,
    pub parent: Option<usize>,
    pub level: Level,
    pub members: BTreeSet<usize>,
    pub stability: T,
    pub hue: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering<T> {
    pub clusters: Vec<RawCluster<T>>,
    pub noise: BTreeSet<usize>,
}

impl<T> Clustering<T> {
    /// Fine cluster id per point, `None` for noise.
    pub fn fine_labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut labels = vec![None; n];
        for c in self.clusters.iter().filter(|c| c.level == Level::Fine) {
            for &m in &c.members {
                labels[m] = Some(c.id);
            }
        }
        labels
    }
}

/// Distance from each point to its `min_samples`-th nearest other point.
pub fn core_distances<T: Scalar>(points: &[Point2<T>], min_samples: usize) -> Vec<T> {
    let n = points.len();
    let k = min_samples.min(n.saturating_sub(1));
    let mut row = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            if k == 0 {
                return T::zero();
            }
            row.clear();
            row.extend((0..n).filter(|&j| j != i).map(|j| points[i].dist(points[j])));
            let (_, kth, _) = row.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).expect("finite"));
            *kth
        })
        .collect()
}

/// Minimum spanning tree of the mutual-reachability graph (dense Prim),
/// returned as `(a, b, weight)` sorted by weight then endpoints.
pub fn mutual_reachability_mst<T: Scalar>(points: &[Point2<T>], core: &[T]) -> Vec<(usize, usize, T)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![T::infinity(); n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d = points[current].dist(points[j]).max(core[current]).max(core[j]);
            if d < best[j] {
                best[j] = d;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((from[next].min(next), from[next].max(next), best[next]));
        current = next;
    }
    edges.sort_by(|a, b| {
        a.2.partial_cmp(&b.2)
            .expect("finite")
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    edges
}

/// One row of the condensed tree: `child` is a point (< n) or a cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CondensedEdge<T> {
    pub parent: usize,
    pub child: usize,
    pub lambda: T,
    pub size: usize,
}

struct Dendrogram<T> {
    left: Vec<usize>,
    right: Vec<usize>,
    dist: Vec<T>,
    size: Vec<usize>,
}

fn single_linkage<T: Scalar>(n: usize, mst: &[(usize, usize, T)]) -> Dendrogram<T> {
    let total = 2 * n - 1;
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut d = Dendrogram {
        left: vec![0; n - 1],
        right: vec![0; n - 1],
        dist: vec![T::zero(); n - 1],
        size: vec![1; total],
    };
    for (k, &(a, b, w)) in mst.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + k;
        parent[ra] = node;
        parent[rb] = node;
        d.left[k] = ra;
        d.right[k] = rb;
        d.dist[k] = w;
        d.size[node] = d.size[ra] + d.size[rb];
    }
    d
}

fn condense<T: Scalar>(n: usize, tree: &Dendrogram<T>, min_cluster_size: usize, floor: T) -> Vec<CondensedEdge<T>> {
    let root = 2 * n - 2;
    let mut relabel = vec![usize::MAX; 2 * n - 1];
    relabel[root] = n;
    let mut next_label = n + 1;
    let mut out = Vec::new();
    let mut stack = vec![root];
    let children = |node: usize| (tree.left[node - n], tree.right[node - n]);
    let leaves = |node: usize, out: &mut Vec<usize>| {
        let mut st = vec![node];
        while let Some(v) = st.pop() {
            if v < n {
                out.push(v);
            } else {
                let (l, r) = children(v);
                st.push(r);
                st.push(l);
            }
        }
    };
    while let Some(node) = stack.pop() {
        if node < n {
            continue;
        }
        let (l, r) = children(node);
        let d = tree.dist[node - n].max(floor);
        let lambda = T::one() / d;
        let label = relabel[node];
        let (ls, rs) = (tree.size[l], tree.size[r]);
        let mut fall = Vec::new();
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                for c in [l, r] {
                    relabel[c] = next_label;
                    next_label += 1;
                    out.push(CondensedEdge {
                        parent: label,
                        child: relabel[c],
                        lambda,
                        size: tree.size[c],
                    });
                    stack.push(c);
                }
            }
            (false, false) => {
                leaves(l, &mut fall);
                leaves(r, &mut fall);
            }
            (true, false) => {
                relabel[l] = label;
                stack.push(l);
                leaves(r, &mut fall);
            }
            (false, true) => {
                relabel[r] = label;
                stack.push(r);
                leaves(l, &mut fall);
            }
        }
        for p in fall {
            out.push(CondensedEdge {
                parent: label,
                child: p,
                lambda,
                size: 1,
            });
        }
    }
    out
}

/// Full clustering: core distances, mutual-reachability MST, condensed
/// tree, excess-of-mass selection (root excluded unless it never splits).
///
/// Each selected cluster is a fine cluster. Its coarse cluster is the
/// top-level condensed cluster (a child of the root) containing it, or the
/// fine cluster itself when it is top-level. Ids number coarse clusters
/// first, then fine ones, each ordered by smallest member row; fine
/// clusters take their coarse parent's hue.
pub fn hdbscan<T: Scalar>(
    points: &[Point2<T>],
    min_cluster_size: usize,
    min_samples: usize,
) -> Result<Clustering<T>, ClusterError> {
    if min_cluster_size < 2 {
        return Err(ClusterError::MinClusterSize);
    }
    if min_samples < 1 {
        return Err(ClusterError::MinSamples);
    }
    let n = points.len();
    if n < min_cluster_size {
        return Err(ClusterError::TooFewPoints {
            points: n,
            min_cluster_size,
        });
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(ClusterError::NonFinite(i));
    }

    let core = core_distances(points, min_samples);
    let mst = mutual_reachability_mst(points, &core);
    let scale = mst.iter().map(|e| e.2).fold(T::zero(), T::max);
    let floor = if scale > T::zero() {
        scale * T::epsilon()
    } else {
        T::one()
    };
    let dendrogram = single_linkage(n, &mst);
    let condensed = condense(n, &dendrogram, min_cluster_size, floor);

    // Cluster labels are n..n+count; children always carry larger labels.
    let count = condensed
        .iter()
        .map(|e| e.parent.max(if e.size > 1 { e.child } else { 0 }))
        .max()
        .map_or(1, |m| m - n + 1);
    let mut parent_of = vec![usize::MAX; count];
    let mut birth = vec![T::zero(); count];
    let mut stability = vec![T::zero(); count];
    let mut child_clusters: Vec<Vec<usize>> = vec![Vec::new(); count];
    for e in &condensed {
        if e.child >= n {
            let c = e.child - n;
            parent_of[c] = e.parent - n;
            birth[c] = e.lambda;
            child_clusters[e.parent - n].push(c);
        }
    }
    for e in &condensed {
        let p = e.parent - n;
        stability[p] = stability[p] + (e.lambda - birth[p]) * T::of_usize(e.size);
    }

    let mut selected = vec![false; count];
    if child_clusters[0].is_empty() {
        selected[0] = true;
    } else {
        let mut best = stability.clone();
        for c in (1..count).rev() {
            let subtree: T = child_clusters[c].iter().map(|&k| best[k]).sum();
            if !child_clusters[c].is_empty() && subtree > stability[c] {
                best[c] = subtree;
            } else {
                selected[c] = true;
                let mut st = child_clusters[c].clone();
                while let Some(k) = st.pop() {
                    selected[k] = false;
                    st.extend(child_clusters[k].iter().copied());
                }
            }
        }
    }

    // Members: every point falling out anywhere below the cluster.
    let mut direct: Vec<Vec<usize>> = vec![Vec::new(); count];
    for e in condensed.iter().filter(|e| e.child < n) {
        direct[e.parent - n].push(e.child);
    }
    let subtree_members = |c: usize| {
        let mut members = BTreeSet::new();
        let mut st = vec![c];
        while let Some(k) = st.pop() {
            members.extend(direct[k].iter().copied());
            st.extend(child_clusters[k].iter().copied());
        }
        members
    };
    let top_level = |mut c: usize| {
        while c != 0 && parent_of[c] != 0 {
            c = parent_of[c];
        }
        c
    };

    let fine: Vec<usize> = (0..count).filter(|&c| selected[c]).collect();
    let mut coarse: Vec<usize> = fine.iter().map(|&c| top_level(c)).collect();
    coarse.sort_unstable();
    coarse.dedup();

    let mut coarse_sets: Vec<(usize, BTreeSet<usize>)> =
        coarse.iter().map(|&c| (c, subtree_members(c))).collect();
    coarse_sets.sort_by_key(|(_, m)| m.first().copied());
    let mut fine_sets: Vec<(usize, BTreeSet<usize>)> = fine.iter().map(|&c| (c, subtree_members(c))).collect();
    fine_sets.sort_by_key(|(_, m)| m.first().copied());

    let mut clusters = Vec::with_capacity(coarse_sets.len() + fine_sets.len());
    for (i, (c, members)) in coarse_sets.iter().enumerate() {
        clusters.push(RawCluster {
            id: i,
            parent: None,
            level: Level::Coarse,
            members: members.clone(),
            stability: stability[*c],
            hue: i,
        });
    }
    let mut noise: BTreeSet<usize> = (0..n).collect();
    for (c, members) in fine_sets {
        let top = top_level(c);
        let parent = coarse_sets
            .iter()
            .position(|(k, _)| *k == top)
            .expect("coarse cluster recorded");
        for m in &members {
            noise.remove(m);
        }
        clusters.push(RawCluster {
            id: clusters.len(),
            parent: Some(parent),
            level: Level::Fine,
            members,
            stability: stability[c],
            hue: parent,
        });
    }
    Ok(Clustering { clusters, noise })
}
