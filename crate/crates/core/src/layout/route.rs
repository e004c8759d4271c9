//! Hyper-edge routes wrapped around the ontology rings.
//!
//! A route leaves the source group's boundary facing the target, travels
//! along the source's parent ring, crosses to the target's parent ring with a
//! single cubic and finishes along that ring into the target boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::enclose::Circle;
use super::pack::CirclePack;
use crate::ingest::HyperEdge;
use crate::scalar::{Point2, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RouteError {
    #[error("category {0:?} is not part of the packing")]
    UnknownCategory(String),
    #[error("bundle count {count} must lie in [1, {max_count}]")]
    Count { count: usize, max_count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winding {
    Ccw,
    Cw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Segment<T> {
    Arc {
        circle: Circle<T>,
        start_angle: T,
        end_angle: T,
        winding: Winding,
    },
    Cubic {
        points: [Point2<T>; 4],
    },
}

impl<T: Scalar> Segment<T> {
    pub fn start(&self) -> Point2<T> {
        match self {
            Segment::Arc {
                circle, start_angle, ..
            } => circle.boundary_point(*start_angle),
            Segment::Cubic { points } => points[0],
        }
    }

    pub fn end(&self) -> Point2<T> {
        match self {
            Segment::Arc {
                circle, end_angle, ..
            } => circle.boundary_point(*end_angle),
            Segment::Cubic { points } => points[3],
        }
    }

    /// Signed sweep of an arc (positive counterclockwise); zero for cubics.
    pub fn sweep(&self) -> T {
        match self {
            Segment::Arc {
                start_angle,
                end_angle,
                ..
            } => *end_angle - *start_angle,
            Segment::Cubic { .. } => T::zero(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutedPath<T> {
    pub hyper_edge: String,
    pub segments: Vec<Segment<T>>,
    pub brightness: T,
}

impl<T: Scalar> RoutedPath<T> {
    pub fn start(&self) -> Point2<T> {
        self.segments[0].start()
    }

    pub fn end(&self) -> Point2<T> {
        self.segments[self.segments.len() - 1].end()
    }
}

/// `ln(1 + count) / ln(1 + max_count)`.
pub fn bundle_brightness<T: Scalar>(count: usize, max_count: usize) -> Result<T, RouteError> {
    if count == 0 || count > max_count {
        return Err(RouteError::Count { count, max_count });
    }
    Ok(T::of_usize(count).ln_1p() / T::of_usize(max_count).ln_1p())
}

/// Signed angular step from `from` to `to` along the shorter side, in
/// `(-pi, pi]`; an exact half turn goes counterclockwise.
pub fn shorter_sweep<T: Scalar>(from: T, to: T) -> T {
    let tau = T::TAU();
    let mut d = (to - from) % tau;
    if d < T::zero() {
        d = d + tau;
    }
    if d > T::PI() {
        d - tau
    } else {
        d
    }
}

fn arc<T: Scalar>(circle: Circle<T>, start: T, sweep: T) -> Segment<T> {
    Segment::Arc {
        circle,
        start_angle: start,
        end_angle: start + sweep,
        winding: if sweep >= T::zero() {
            Winding::Ccw
        } else {
            Winding::Cw
        },
    }
}

fn line<T: Scalar>(a: Point2<T>, b: Point2<T>) -> Segment<T> {
    let third = T::one() / T::lit(3.0);
    let d = b.sub(a);
    Segment::Cubic {
        points: [a, a.add(d.scale(third)), a.add(d.scale(third + third)), b],
    }
}

fn direction<T: Scalar>(from: Point2<T>, to: Point2<T>) -> Point2<T> {
    let d = to.sub(from);
    let n = d.norm();
    if n > T::zero() {
        d.scale(T::one() / n)
    } else {
        Point2::new(T::one(), T::zero())
    }
}

/// Routes one bundle; `max_count` is the largest bundle count at its level.
pub fn route_hyper_edge<T: Scalar>(
    bundle: &HyperEdge,
    pack: &CirclePack<T>,
    max_count: usize,
) -> Result<RoutedPath<T>, RouteError> {
    let lookup = |id: &str| {
        pack.position(id)
            .ok_or_else(|| RouteError::UnknownCategory(id.to_string()))
    };
    let si = lookup(&bundle.source_category)?;
    let ti = lookup(&bundle.target_category)?;
    let brightness = bundle_brightness(bundle.count, max_count)?;
    let source = pack.nodes[si].circle;
    let target = pack.nodes[ti].circle;

    let segments = if si == ti {
        self_loop(&source)
    } else {
        let toward = direction(source.center, target.center);
        let exit = source.center.add(toward.scale(source.radius));
        let entry = target.center.sub(toward.scale(target.radius));
        let nested = pack.is_ancestor(si, ti) || pack.is_ancestor(ti, si);
        let ps = pack.nodes[si].parent.map(|p| (p, pack.nodes[p].circle));
        let pt = pack.nodes[ti].parent.map(|p| (p, pack.nodes[p].circle));
        if nested {
            vec![line(exit, entry)]
        } else {
            wrapped(&source, &target, exit, entry, ps, pt)
        }
    };
    Ok(RoutedPath {
        hyper_edge: bundle.id(),
        segments: segments
            .into_iter()
            .filter(|s| !matches!(s, Segment::Arc { .. }) || s.sweep() != T::zero())
            .collect(),
        brightness,
    })
}

fn wrapped<T: Scalar>(
    source: &Circle<T>,
    target: &Circle<T>,
    exit: Point2<T>,
    entry: Point2<T>,
    ps: Option<(usize, Circle<T>)>,
    pt: Option<(usize, Circle<T>)>,
) -> Vec<Segment<T>> {
    let mut segments = Vec::with_capacity(5);
    let mut cursor = exit;
    match (ps, pt) {
        (Some((p, ring)), Some((q, _))) if p == q => {
            let from = source.center.sub(ring.center).angle();
            let to = target.center.sub(ring.center).angle();
            let start = ring.boundary_point(from);
            segments.push(line(cursor, start));
            let arc = arc(ring, from, shorter_sweep(from, to));
            cursor = arc.end();
            segments.push(arc);
        }
        _ => {
            let mut far_end = None;
            if let Some((_, ring)) = ps {
                let from = source.center.sub(ring.center).angle();
                let to = target.center.sub(ring.center).angle();
                segments.push(line(cursor, ring.boundary_point(from)));
                let arc = arc(ring, from, shorter_sweep(from, to));
                cursor = arc.end();
                segments.push(arc);
            }
            if let Some((_, ring)) = pt {
                let from = source.center.sub(ring.center).angle();
                let to = target.center.sub(ring.center).angle();
                let arrive = ring.boundary_point(from);
                segments.push(bridge(cursor, arrive, ps.map(|p| p.1), ring));
                let arc = arc(ring, from, shorter_sweep(from, to));
                cursor = arc.end();
                far_end = Some(arc);
            }
            if let Some(arc) = far_end {
                segments.push(arc);
            }
        }
    }
    segments.push(line(cursor, entry));
    segments
}

/// Cubic between two rings whose control points sit outside both.
fn bridge<T: Scalar>(
    from: Point2<T>,
    to: Point2<T>,
    from_ring: Option<Circle<T>>,
    to_ring: Circle<T>,
) -> Segment<T> {
    let outward = |ring: Option<Circle<T>>, p: Point2<T>| match ring {
        Some(r) => direction(r.center, p),
        None => direction(p, to),
    };
    let n_from = outward(from_ring, from);
    let n_to = direction(to_ring.center, to);
    let outside = |p: Point2<T>| {
        from_ring.is_none_or(|r| p.dist(r.center) > r.radius) && p.dist(to_ring.center) > to_ring.radius
    };
    let mut reach = from.dist(to) / T::lit(3.0);
    let mut c1 = from.add(n_from.scale(reach));
    let mut c2 = to.add(n_to.scale(reach));
    for _ in 0..32 {
        if outside(c1) && outside(c2) {
            break;
        }
        reach = reach / T::lit(2.0);
        c1 = from.add(n_from.scale(reach));
        c2 = to.add(n_to.scale(reach));
    }
    Segment::Cubic {
        points: [from, c1, c2, to],
    }
}

fn self_loop<T: Scalar>(circle: &Circle<T>) -> Vec<Segment<T>> {
    let up = T::FRAC_PI_2();
    let spread = T::lit(0.35);
    let a = circle.boundary_point(up - spread);
    let b = circle.boundary_point(up + spread);
    let lift = circle.radius * T::lit(0.6);
    let c1 = a.add(Point2::polar(up - spread).scale(lift));
    let c2 = b.add(Point2::polar(up + spread).scale(lift));
    vec![Segment::Cubic {
        points: [a, c1, c2, b],
    }]
}
