//! Small dense linear algebra helpers: exact row reduction over the rationals
//! and rank-revealing floating-point routines built on nalgebra's SVD.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::symcore::Rational;

/// Reduce `m` (row-major, `ncols` wide) to reduced row echelon form in place.
/// Returns the pivot columns in increasing order.
pub fn rref(m: &mut Vec<Vec<Rational>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = Rational::from_integer(1.into()) / m[row][col].clone();
        for v in m[row].iter_mut().skip(col) {
            *v = v.clone() * inv.clone();
        }
        let pivot_row = m[row].clone();
        for (r, other) in m.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (c, pv) in pivot_row.iter().enumerate().skip(col) {
                if !pv.is_zero() {
                    other[c] = other[c].clone() - f.clone() * pv.clone();
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    m.truncate(row.max(0));
    m.retain(|r| r.iter().any(|v| !v.is_zero()));
    pivots
}

/// Basis of `{v : M v = 0}` for a row-major matrix with `ncols` columns.
pub fn nullspace(m: &[Vec<Rational>], ncols: usize) -> Vec<Vec<Rational>> {
    let mut r = m.to_vec();
    let pivots = rref(&mut r, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Rational::zero(); ncols];
            v[f] = Rational::from_integer(1.into());
            for (row, &pc) in r.iter().zip(&pivots) {
                v[pc] = -row[f].clone();
            }
            v
        })
        .collect()
}

/// Rank of an exact matrix.
pub fn exact_rank(m: &[Vec<Rational>], ncols: usize) -> usize {
    let mut r = m.to_vec();
    rref(&mut r, ncols).len()
}

/// Solve `M x = b` exactly; returns one solution if consistent.
pub fn solve_exact(m: &[Vec<Rational>], b: &[Rational], ncols: usize) -> Option<Vec<Rational>> {
    let mut aug: Vec<Vec<Rational>> = m
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug, ncols + 1);
    if pivots.last() == Some(&ncols) {
        return None;
    }
    let mut x = vec![Rational::zero(); ncols];
    for (row, &pc) in aug.iter().zip(&pivots) {
        x[pc] = row[ncols].clone();
    }
    Some(x)
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Numerical rank with tolerance relative to the largest singular value.
/// A matrix whose largest singular value is below `abs_floor` has rank 0.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax <= abs_floor {
        return 0;
    }
    s.iter().filter(|&&v| v > rel_tol * smax).count()
}

/// Orthonormal basis (as columns) of the column span of `m`.
pub fn orthonormal_span(m: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax <= abs_floor {
        return DMatrix::zeros(n, 0);
    }
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] > rel_tol * smax).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])])
}

/// Canonical orthonormal basis of the orthogonal complement of the column span
/// of `span` (assumed orthonormal): the standard basis vectors are projected onto
/// the complement and orthonormalized in index order, skipping dependent ones.
pub fn canonical_complement(span: &DMatrix<f64>) -> DMatrix<f64> {
    let n = span.nrows();
    let target = n - span.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(target);
    for e in 0..n {
        if basis.len() == target {
            break;
        }
        let mut v = DVector::from_fn(n, |i, _| if i == e { 1.0 } else { 0.0 });
        // Two passes of modified Gram–Schmidt for stability.
        for _ in 0..2 {
            for c in 0..span.ncols() {
                let col = span.column(c);
                let d = col.dot(&v);
                v -= col * d;
            }
            for b in &basis {
                let d = b.dot(&v);
                v -= b * d;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (c, b) in basis.iter().enumerate() {
        out.set_column(c, b);
    }
    out
}

/// Least-squares solution of `A x ≈ b` via SVD with relative cutoff `rcond`.
/// Returns the minimum-norm solution and the numerical rank.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> (DVector<f64>, usize) {
    if a.ncols() == 0 {
        return (DVector::zeros(0), 0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (rcond * smax).max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    let x = svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()));
    (x, rank)
}

/// Tikhonov-damped least squares: minimizes `|A x - b|² + λ |x|²`.
pub fn damped_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = a.ncols();
    let m = a.nrows();
    let mut aug = DMatrix::zeros(m + n, n);
    aug.view_mut((0, 0), (m, n)).copy_from(a);
    let s = lambda.sqrt();
    for i in 0..n {
        aug[(m + i, i)] = s;
    }
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(b);
    lstsq(&aug, &rhs, 1e-15).0
}

/// Root-mean-square of a slice.
pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{rat, ratio};

    #[test]
    fn exact_nullspace() {
        // x + 2y - z = 0, y + z = 0
        let m = vec![vec![rat(1), rat(2), rat(-1)], vec![rat(0), rat(1), rat(1)]];
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 1);
        assert_eq!(ns[0], vec![rat(3), rat(-1), rat(1)]);
        assert_eq!(exact_rank(&m, 3), 2);
    }

    #[test]
    fn exact_solve() {
        let m = vec![vec![rat(2), rat(0)], vec![rat(0), rat(4)]];
        assert_eq!(solve_exact(&m, &[rat(1), rat(1)], 2), Some(vec![ratio(1, 2), ratio(1, 4)]));
        let singular = vec![vec![rat(1), rat(1)], vec![rat(1), rat(1)]];
        assert_eq!(solve_exact(&singular, &[rat(1), rat(2)], 2), None);
    }

    #[test]
    fn complement_is_canonical() {
        let tangent = DMatrix::from_column_slice(2, 1, &[0.0, -1.0]);
        let c = canonical_complement(&tangent);
        assert_eq!(c.ncols(), 1);
        assert!((c[(0, 0)] - 1.0).abs() < 1e-15 && c[(1, 0)].abs() < 1e-15);
        let full = canonical_complement(&DMatrix::zeros(3, 0));
        assert_eq!(full, DMatrix::identity(3, 3));
    }

    #[test]
    fn rank_and_lstsq() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(numerical_rank(&m, 1e-9, 0.0), 1);
        assert_eq!(numerical_rank(&DMatrix::zeros(2, 2), 1e-9, 0.0), 0);
        let a = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let (x, r) = lstsq(&a, &DVector::from_vec(vec![1.0, 2.0, 3.0]), 1e-12);
        assert_eq!(r, 1);
        assert!((x[0] - 2.0).abs() < 1e-14);
    }
}
