//! Two-component principal projection by power iteration with deflation.

use thiserror::Error;

use crate::scalar::{Matrix, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProjectionError {
    #[error("projection needs at least 2 rows and 2 columns, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("non-finite entry at row {0}")]
    NonFinite(usize),
    #[error("all rows are identical")]
    Degenerate,
}

const MAX_ITERATIONS: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Projection<T> {
    /// n×2 coordinates of the centered rows.
    pub coords: Matrix<T>,
    pub components: [Vec<T>; 2],
    /// Variance captured by each component.
    pub variances: [T; 2],
    pub total_variance: T,
}

/// Covariance operator either as an explicit d×d matrix or implicitly via
/// the centered data, whichever is cheaper per multiply.
enum Operator<T> {
    Dense { d: usize, cov: Vec<T> },
    Implicit { centered: Vec<T>, n: usize, d: usize },
}

impl<T: Scalar> Operator<T> {
    fn apply(&self, v: &[T], out: &mut [T]) {
        match self {
            Operator::Dense { d, cov } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = cov[i * d..(i + 1) * d].iter().zip(v).map(|(&a, &b)| a * b).sum();
                }
            }
            Operator::Implicit { centered, n, d } => {
                out.iter_mut().for_each(|o| *o = T::zero());
                let denom = T::of_usize(n - 1);
                for r in 0..*n {
                    let row = &centered[r * d..(r + 1) * d];
                    let s: T = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
                    for (o, &a) in out.iter_mut().zip(row) {
                        *o = *o + a * s / denom;
                    }
                }
            }
        }
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn normalize<T: Scalar>(v: &mut [T]) -> T {
    let norm = dot(v, v).sqrt();
    if norm > T::zero() {
        v.iter_mut().for_each(|x| *x = *x / norm);
    }
    norm
}

/// Dominant eigenpair of `op` restricted to the complement of `deflate`.
fn power_iteration<T: Scalar>(op: &Operator<T>, d: usize, deflate: &[(T, Vec<T>)]) -> (T, Vec<T>) {
    let mut v: Vec<T> = (0..d)
        .map(|j| T::one() + T::lit(0.5) * T::of_usize(j + 1).sin())
        .collect();
    for (_, u) in deflate {
        let k = dot(&v, u);
        v.iter_mut().zip(u).for_each(|(x, &ui)| *x = *x - k * ui);
    }
    normalize(&mut v);
    let mut w = vec![T::zero(); d];
    let tol = T::solver_tolerance();
    let mut lambda = T::zero();
    for _ in 0..MAX_ITERATIONS {
        op.apply(&v, &mut w);
        for (l, u) in deflate {
            let k = *l * dot(u, &v);
            w.iter_mut().zip(u).for_each(|(x, &ui)| *x = *x - k * ui);
        }
        lambda = dot(&v, &w);
        let norm = normalize(&mut w);
        if norm == T::zero() {
            return (T::zero(), v);
        }
        let delta = v
            .iter()
            .zip(&w)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt();
        std::mem::swap(&mut v, &mut w);
        if delta < tol {
            break;
        }
    }
    (lambda, v)
}

fn fix_sign<T: Scalar>(v: &mut [T]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Top-two principal components of the rows of `data`.
pub fn principal_components<T: Scalar>(data: &Matrix<T>) -> Result<Projection<T>, ProjectionError> {
    let (n, d) = (data.rows(), data.cols());
    if n < 2 || d < 2 {
        return Err(ProjectionError::Shape { rows: n, cols: d });
    }
    if let Some(r) = (0..n).find(|&r| data.row(r).iter().any(|x| !x.is_finite())) {
        return Err(ProjectionError::NonFinite(r));
    }
    let mut mean = vec![T::zero(); d];
    for row in data.iter_rows() {
        mean.iter_mut().zip(row).for_each(|(m, &x)| *m = *m + x);
    }
    mean.iter_mut().for_each(|m| *m = *m / T::of_usize(n));
    let mut centered = Vec::with_capacity(n * d);
    for row in data.iter_rows() {
        centered.extend(row.iter().zip(&mean).map(|(&x, &m)| x - m));
    }
    let total_variance = centered.iter().map(|&x| x * x).sum::<T>() / T::of_usize(n - 1);
    if total_variance == T::zero() {
        return Err(ProjectionError::Degenerate);
    }

    let op = if d <= n {
        let mut cov = vec![T::zero(); d * d];
        for r in 0..n {
            let row = &centered[r * d..(r + 1) * d];
            for i in 0..d {
                let ri = row[i];
                for j in i..d {
                    cov[i * d + j] = cov[i * d + j] + ri * row[j];
                }
            }
        }
        let denom = T::of_usize(n - 1);
        for i in 0..d {
            for j in i..d {
                let c = cov[i * d + j] / denom;
                cov[i * d + j] = c;
                cov[j * d + i] = c;
            }
        }
        Operator::Dense { d, cov }
    } else {
        Operator::Implicit {
            centered: centered.clone(),
            n,
            d,
        }
    };

    let (l1, mut v1) = power_iteration(&op, d, &[]);
    fix_sign(&mut v1);
    let (mut l2, mut v2) = power_iteration(&op, d, &[(l1, v1.clone())]);
    let negligible = l1 * T::epsilon() * T::of_usize(16 * d);
    if l2 <= negligible {
        l2 = T::zero();
        v2 = vec![T::zero(); d];
    } else {
        fix_sign(&mut v2);
    }

    let mut coords = Vec::with_capacity(n * 2);
    for r in 0..n {
        let row = &centered[r * d..(r + 1) * d];
        coords.push(dot(row, &v1));
        coords.push(dot(row, &v2));
    }
    Ok(Projection {
        coords: Matrix::from_row_major(n, 2, coords).expect("n×2"),
        components: [v1, v2],
        variances: [l1, l2],
        total_variance,
    })
}

/// n×2 principal-component coordinates of the rows of `data`.
pub fn project_2d<T: Scalar>(data: &Matrix<T>) -> Result<Matrix<T>, ProjectionError> {
    principal_components(data).map(|p| p.coords)
}
