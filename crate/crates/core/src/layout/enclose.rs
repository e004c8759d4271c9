//! Smallest circle enclosing a set of circles.
//!
//! Randomized incremental construction over a seeded shuffle; each basis
//! holds at most three support circles and is solved in closed form.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{Point2, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle<T> {
    pub center: Point2<T>,
    pub radius: T,
}

impl<T: Scalar> Circle<T> {
    pub fn new(x: T, y: T, radius: T) -> Self {
        Self {
            center: Point2::new(x, y),
            radius,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.center.is_finite() && self.radius.is_finite() && self.radius > T::zero()
    }

    /// Point on the boundary at `angle`.
    pub fn boundary_point(&self, angle: T) -> Point2<T> {
        self.center.add(Point2::polar(angle).scale(self.radius))
    }

    /// Whether `other` lies inside `self`, allowing `rel_tol * self.radius`
    /// of slack.
    pub fn contains_circle(&self, other: &Circle<T>, rel_tol: T) -> bool {
        self.center.dist(other.center) + other.radius <= self.radius * (T::one() + rel_tol)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncloseError {
    #[error("cannot enclose an empty set of circles")]
    Empty,
}

const SHUFFLE_SEED: u64 = 0x5eed_c1c1e;

/// Smallest circle containing every input circle.
pub fn min_enclosing_circle<T: Scalar>(circles: &[Circle<T>]) -> Result<Circle<T>, EncloseError> {
    if circles.is_empty() {
        return Err(EncloseError::Empty);
    }
    let mut order: Vec<Circle<T>> = circles.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(SHUFFLE_SEED);
    order.shuffle(&mut rng);

    let mut basis: Vec<Circle<T>> = Vec::new();
    let mut enclosing: Option<Circle<T>> = None;
    let mut i = 0;
    while i < order.len() {
        let p = order[i];
        if enclosing.is_some_and(|e| encloses_weak(&e, &p)) {
            i += 1;
            continue;
        }
        match extend_basis(&basis, p) {
            Some(b) => {
                basis = b;
                enclosing = Some(enclose_basis(&basis));
            }
            None => {
                // Numerical breakdown: grow the current circle to cover `p`.
                let e = enclosing.unwrap_or(p);
                basis = vec![p];
                enclosing = Some(Circle {
                    center: e.center,
                    radius: e.radius.max(e.center.dist(p.center) + p.radius),
                });
            }
        }
        i = 0;
    }
    let mut result = enclosing.expect("nonempty input");
    // Absorb rounding so containment holds exactly.
    let reach = circles
        .iter()
        .map(|c| result.center.dist(c.center) + c.radius)
        .fold(T::zero(), T::max);
    result.radius = result.radius.max(reach);
    Ok(result)
}

fn encloses_not<T: Scalar>(a: &Circle<T>, b: &Circle<T>) -> bool {
    let dr = a.radius - b.radius;
    let d = b.center.sub(a.center);
    dr < T::zero() || dr * dr < d.dot(d)
}

fn encloses_weak<T: Scalar>(a: &Circle<T>, b: &Circle<T>) -> bool {
    let slack = a.radius.max(b.radius).max(T::one()) * T::solver_tolerance();
    let dr = a.radius - b.radius + slack;
    let d = b.center.sub(a.center);
    dr > T::zero() && dr * dr > d.dot(d)
}

fn encloses_weak_all<T: Scalar>(a: &Circle<T>, basis: &[Circle<T>]) -> bool {
    basis.iter().all(|b| encloses_weak(a, b))
}

fn extend_basis<T: Scalar>(basis: &[Circle<T>], p: Circle<T>) -> Option<Vec<Circle<T>>> {
    if encloses_weak_all(&p, basis) {
        return Some(vec![p]);
    }
    for b in basis {
        if encloses_not(&p, b) && encloses_weak_all(&enclose2(b, &p), basis) {
            return Some(vec![*b, p]);
        }
    }
    for i in 0..basis.len().saturating_sub(1) {
        for j in i + 1..basis.len() {
            let (bi, bj) = (&basis[i], &basis[j]);
            if encloses_not(&enclose2(bi, bj), &p)
                && encloses_not(&enclose2(bi, &p), bj)
                && encloses_not(&enclose2(bj, &p), bi)
            {
                if let Some(c) = enclose3(bi, bj, &p) {
                    if encloses_weak_all(&c, basis) {
                        return Some(vec![*bi, *bj, p]);
                    }
                }
            }
        }
    }
    None
}

fn enclose_basis<T: Scalar>(basis: &[Circle<T>]) -> Circle<T> {
    match basis {
        [a] => *a,
        [a, b] => enclose2(a, b),
        [a, b, c] => enclose3(a, b, c).unwrap_or_else(|| {
            // Collinear support: the widest pair encloses the third.
            let candidates = [enclose2(a, b), enclose2(a, c), enclose2(b, c)];
            candidates
                .into_iter()
                .max_by(|x, y| x.radius.partial_cmp(&y.radius).expect("finite"))
                .expect("three candidates")
        }),
        _ => unreachable!("basis holds one to three circles"),
    }
}

fn enclose2<T: Scalar>(a: &Circle<T>, b: &Circle<T>) -> Circle<T> {
    let d = b.center.sub(a.center);
    let l = d.norm();
    if l <= T::zero() {
        return if a.radius >= b.radius { *a } else { *b };
    }
    let dr = b.radius - a.radius;
    let two = T::lit(2.0);
    Circle {
        center: Point2::new(
            (a.center.x + b.center.x + d.x / l * dr) / two,
            (a.center.y + b.center.y + d.y / l * dr) / two,
        ),
        radius: (l + a.radius + b.radius) / two,
    }
}

/// Circle internally tangent to three circles (Apollonius).
fn enclose3<T: Scalar>(a: &Circle<T>, b: &Circle<T>, c: &Circle<T>) -> Option<Circle<T>> {
    let (x1, y1, r1) = (a.center.x, a.center.y, a.radius);
    let (x2, y2, r2) = (b.center.x, b.center.y, b.radius);
    let (x3, y3, r3) = (c.center.x, c.center.y, c.radius);
    let a2 = x1 - x2;
    let a3 = x1 - x3;
    let b2 = y1 - y2;
    let b3 = y1 - y3;
    let c2 = r2 - r1;
    let c3 = r3 - r1;
    let d1 = x1 * x1 + y1 * y1 - r1 * r1;
    let d2 = d1 - x2 * x2 - y2 * y2 + r2 * r2;
    let d3 = d1 - x3 * x3 - y3 * y3 + r3 * r3;
    let ab = a3 * b2 - a2 * b3;
    if ab == T::zero() {
        return None;
    }
    let two = T::lit(2.0);
    let xa = (b2 * d3 - b3 * d2) / (ab * two) - x1;
    let xb = (b3 * c2 - b2 * c3) / ab;
    let ya = (a3 * d2 - a2 * d3) / (ab * two) - y1;
    let yb = (a2 * c3 - a3 * c2) / ab;
    let qa = xb * xb + yb * yb - T::one();
    let qb = two * (r1 + xa * xb + ya * yb);
    let qc = xa * xa + ya * ya - r1 * r1;
    let r = -(if qa.abs() > T::lit(1e-6) {
        (qb + (qb * qb - T::lit(4.0) * qa * qc).max(T::zero()).sqrt()) / (two * qa)
    } else {
        qc / qb
    });
    let circle = Circle {
        center: Point2::new(x1 + xa + xb * r, y1 + ya + yb * r),
        radius: r,
    };
    circle.is_valid().then_some(circle)
}
