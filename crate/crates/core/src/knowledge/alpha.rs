//! Delaunay triangulation (Bowyer–Watson) and alpha-shape boundaries.

use std::collections::{BTreeMap, HashMap, HashSet};

use robust::{incircle, orient2d, Coord};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Point2, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphaError {
    #[error("alpha shape needs at least 3 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("alpha radius must be positive and finite")]
    BadRadius,
}

/// Closed counterclockwise polygon; the closing edge is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon<T> {
    pub vertices: Vec<Point2<T>>,
}

impl<T: Scalar> Polygon<T> {
    /// Twice the signed area is avoided; this is the signed area itself.
    pub fn signed_area(&self) -> T {
        let v = &self.vertices;
        let n = v.len();
        let mut sum = T::zero();
        for i in 0..n {
            sum = sum + v[i].cross(v[(i + 1) % n]);
        }
        sum / T::lit(2.0)
    }

    pub fn is_ccw(&self) -> bool {
        self.signed_area() > T::zero()
    }

    /// Inside or within `eps` of the boundary.
    pub fn contains(&self, p: Point2<T>, eps: f64) -> bool {
        let p = p.to_f64();
        let v: Vec<Point2<f64>> = self.vertices.iter().map(|q| q.to_f64()).collect();
        let n = v.len();
        let mut winding = 0i32;
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            if segment_distance(p, a, b) <= eps {
                return true;
            }
            let side = b.sub(a).cross(p.sub(a));
            if a.y <= p.y {
                if b.y > p.y && side > 0.0 {
                    winding += 1;
                }
            } else if b.y <= p.y && side < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// No two non-adjacent edges touch and no vertex repeats.
    pub fn is_simple(&self) -> bool {
        let v: Vec<Point2<f64>> = self.vertices.iter().map(|q| q.to_f64()).collect();
        let n = v.len();
        if n < 3 {
            return false;
        }
        let mut seen = HashSet::new();
        if !v.iter().all(|p| seen.insert((p.x.to_bits(), p.y.to_bits()))) {
            return false;
        }
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                    return false;
                }
            }
        }
        true
    }
}

fn coord(p: Point2<f64>) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn segment_distance(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(a.add(ab.scale(t)))
}

fn on_segment(p: Point2<f64>, a: Point2<f64>, b: Point2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection with exact orientation tests.
pub fn segments_touch(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> bool {
    let o1 = orient2d(coord(a), coord(b), coord(c));
    let o2 = orient2d(coord(a), coord(b), coord(d));
    let o3 = orient2d(coord(c), coord(d), coord(a));
    let o4 = orient2d(coord(c), coord(d), coord(b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(c, a, b))
        || (o2 == 0.0 && on_segment(d, a, b))
        || (o3 == 0.0 && on_segment(a, c, d))
        || (o4 == 0.0 && on_segment(b, c, d))
}

/// Counterclockwise triangle of input indices.
pub type Triangle = [usize; 3];

/// Delaunay triangulation of `points` by incremental insertion in input
/// order. Exact duplicates of earlier points are skipped.
pub fn delaunay<T: Scalar>(points: &[Point2<T>]) -> Result<Vec<Triangle>, AlphaError> {
    let pts: Vec<Point2<f64>> = points.iter().map(|p| p.to_f64()).collect();
    let distinct = distinct_indices(&pts);
    if distinct.len() < 3 {
        return Err(AlphaError::TooFewPoints(distinct.len()));
    }
    let a = pts[distinct[0]];
    let b = distinct.iter().map(|&i| pts[i]).find(|&p| p != a).expect("3 distinct points");
    if distinct
        .iter()
        .all(|&i| orient2d(coord(a), coord(b), coord(pts[i])) == 0.0)
    {
        return Err(AlphaError::Collinear);
    }

    let (mut lo, mut hi) = (pts[distinct[0]], pts[distinct[0]]);
    for &i in &distinct {
        lo = Point2::new(lo.x.min(pts[i].x), lo.y.min(pts[i].y));
        hi = Point2::new(hi.x.max(pts[i].x), hi.y.max(pts[i].y));
    }
    let center = lo.add(hi).scale(0.5);
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);
    let m = span * 1.0e4;
    let n = pts.len();
    let mut all = pts.clone();
    all.push(Point2::new(center.x - 2.0 * m, center.y - m));
    all.push(Point2::new(center.x + 2.0 * m, center.y - m));
    all.push(Point2::new(center.x, center.y + 2.0 * m));

    let mut tris: Vec<Triangle> = vec![[n, n + 1, n + 2]];
    for &p in &distinct {
        let pc = coord(all[p]);
        let mut bad = Vec::new();
        let mut keep = Vec::with_capacity(tris.len() + 2);
        for t in tris.drain(..) {
            if incircle(coord(all[t[0]]), coord(all[t[1]]), coord(all[t[2]]), pc) > 0.0 {
                bad.push(t);
            } else {
                keep.push(t);
            }
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &bad {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        for t in &bad {
            for k in 0..3 {
                let (u, v) = (t[k], t[(k + 1) % 3]);
                if edge_count[&(u.min(v), u.max(v))] == 1 {
                    keep.push([u, v, p]);
                }
            }
        }
        tris = keep;
    }
    tris.retain(|t| t.iter().all(|&v| v < n));
    tris.sort_unstable();
    Ok(tris)
}

fn distinct_indices(pts: &[Point2<f64>]) -> Vec<usize> {
    let mut seen = HashSet::new();
    (0..pts.len())
        .filter(|&i| seen.insert((pts[i].x.to_bits(), pts[i].y.to_bits())))
        .collect()
}

fn circumradius(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>) -> f64 {
    let (ab, bc, ca) = (a.dist(b), b.dist(c), c.dist(a));
    let area2 = b.sub(a).cross(c.sub(a)).abs();
    if area2 == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * area2)
    }
}

/// Counterclockwise convex hull (indices), collinear points dropped.
pub fn convex_hull<T: Scalar>(points: &[Point2<T>]) -> Result<Vec<usize>, AlphaError> {
    let pts: Vec<Point2<f64>> = points.iter().map(|p| p.to_f64()).collect();
    let mut idx = distinct_indices(&pts);
    if idx.len() < 3 {
        return Err(AlphaError::TooFewPoints(idx.len()));
    }
    idx.sort_by(|&i, &j| {
        pts[i]
            .x
            .total_cmp(&pts[j].x)
            .then(pts[i].y.total_cmp(&pts[j].y))
    });
    let turn = |a: usize, b: usize, c: usize| orient2d(coord(pts[a]), coord(pts[b]), coord(pts[c]));
    let mut hull: Vec<usize> = Vec::with_capacity(idx.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> = if pass == 0 {
            Box::new(idx.iter())
        } else {
            Box::new(idx.iter().rev())
        };
        for &i in iter {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 0.0 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(AlphaError::Collinear);
    }
    Ok(hull)
}

/// Twice the median nearest-neighbor distance among distinct points.
pub fn default_alpha<T: Scalar>(points: &[Point2<T>]) -> T {
    let pts: Vec<Point2<f64>> = points.iter().map(|p| p.to_f64()).collect();
    let idx = distinct_indices(&pts);
    let mut nn: Vec<f64> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .filter(|&&j| j != i)
                .map(|&j| pts[i].dist(pts[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .filter(|d| d.is_finite())
        .collect();
    if nn.is_empty() {
        return T::one();
    }
    nn.sort_by(f64::total_cmp);
    let mid = nn.len() / 2;
    let median = if nn.len() % 2 == 1 {
        nn[mid]
    } else {
        (nn[mid - 1] + nn[mid]) / 2.0
    };
    T::lit(2.0 * median)
}

/// Alpha-shape boundary polygons of `points`.
///
/// Delaunay triangles with circumradius at most `alpha` are kept. A point
/// left uncovered is attached through its smallest incident triangle so
/// every point lies inside or on some polygon. Boundary edges are stitched
/// into counterclockwise loops, splitting at pinch vertices and at vertices
/// where a hole touches the outline; holes are dropped.
/// With no surviving triangle the convex hull is returned.
pub fn alpha_shape<T: Scalar>(points: &[Point2<T>], alpha: T) -> Result<Vec<Polygon<T>>, AlphaError> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(AlphaError::BadRadius);
    }
    let tris = delaunay(points)?;
    let pts: Vec<Point2<f64>> = points.iter().map(|p| p.to_f64()).collect();
    let radius: Vec<f64> = tris
        .iter()
        .map(|t| circumradius(pts[t[0]], pts[t[1]], pts[t[2]]))
        .collect();
    let alpha = alpha.as_f64();
    let mut kept: Vec<bool> = radius.iter().map(|&r| r <= alpha).collect();
    if !kept.iter().any(|&k| k) {
        return hull_polygon(points);
    }

    let mut covered = vec![false; pts.len()];
    for (t, _) in tris.iter().zip(&kept).filter(|(_, k)| **k) {
        for &v in t {
            covered[v] = true;
        }
    }
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (ti, t) in tris.iter().enumerate() {
        for &v in t {
            if !covered[v] {
                let e = best.entry(v).or_insert(ti);
                if radius[ti] < radius[*e] {
                    *e = ti;
                }
            }
        }
    }
    for ti in best.into_values() {
        kept[ti] = true;
    }

    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, _) in tris.iter().zip(&kept).filter(|(_, k)| **k) {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            *edge_count.entry((u.min(v), u.max(v))).or_default() += 1;
        }
    }
    let mut boundary: Vec<(usize, usize)> = Vec::new();
    for (t, _) in tris.iter().zip(&kept).filter(|(_, k)| **k) {
        for k in 0..3 {
            let (u, v) = (t[k], t[(k + 1) % 3]);
            if edge_count[&(u.min(v), u.max(v))] == 1 {
                boundary.push((u, v));
            }
        }
    }
    boundary.sort_unstable();

    let loops = match stitch(&pts, &boundary) {
        Some(l) => l,
        None => return hull_polygon(points),
    };
    let mut out = Vec::new();
    for lp in loops.into_iter().flat_map(split_at_repeats) {
        let poly = Polygon {
            vertices: lp.iter().map(|&i| points[i]).collect(),
        };
        if poly.vertices.len() >= 3 && poly.is_ccw() {
            out.push(poly);
        }
    }
    if out.is_empty() {
        return hull_polygon(points);
    }
    Ok(out)
}

/// Splits a closed walk that revisits a vertex into simple closed walks.
fn split_at_repeats(walk: Vec<usize>) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut path: Vec<usize> = Vec::with_capacity(walk.len());
    let mut pos: HashMap<usize, usize> = HashMap::new();
    for v in walk {
        if let Some(&at) = pos.get(&v) {
            let sub = path.split_off(at);
            for u in &sub {
                pos.remove(u);
            }
            out.push(sub);
        }
        pos.insert(v, path.len());
        path.push(v);
    }
    out.push(path);
    out
}

fn hull_polygon<T: Scalar>(points: &[Point2<T>]) -> Result<Vec<Polygon<T>>, AlphaError> {
    let hull = convex_hull(points)?;
    Ok(vec![Polygon {
        vertices: hull.iter().map(|&i| points[i]).collect(),
    }])
}

/// Follows boundary edges into loops. At a vertex with several outgoing
/// edges, continues along the one reached first turning clockwise from the
/// reversed incoming edge, which separates regions that only touch there.
fn stitch(pts: &[Point2<f64>], edges: &[(usize, usize)]) -> Option<Vec<Vec<usize>>> {
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ei, &(u, _)) in edges.iter().enumerate() {
        outgoing.entry(u).or_default().push(ei);
    }
    let tau = std::f64::consts::TAU;
    let mut next = vec![usize::MAX; edges.len()];
    for (ei, &(u, v)) in edges.iter().enumerate() {
        let cands = outgoing.get(&v)?;
        let back = pts[u].sub(pts[v]).angle();
        next[ei] = *cands.iter().min_by(|&&a, &&b| {
            let cw = |e: usize| {
                let ang = pts[edges[e].1].sub(pts[v]).angle();
                let d = (back - ang).rem_euclid(tau);
                if d == 0.0 {
                    tau
                } else {
                    d
                }
            };
            cw(a).total_cmp(&cw(b)).then(a.cmp(&b))
        })?;
    }
    let mut used = vec![false; edges.len()];
    let mut loops = Vec::new();
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut e = start;
        loop {
            if used[e] {
                return None;
            }
            used[e] = true;
            lp.push(edges[e].0);
            e = next[e];
            if e == start {
                break;
            }
        }
        loops.push(lp);
    }
    Some(loops)
}
