//! Degree-bounded membership by dense linear algebra.
//!
//! Looks for polynomial multipliers `f_ij` of total degree at most `bound`
//! with `V = Σ f_ij (x_j − a_j) X_i`. A solution is a certificate; the absence
//! of one only rules out multipliers up to that degree. Used as a cross-check
//! for the Gröbner backend.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::vanishing_generators;
use crate::error::{Error, Result};
use crate::foliation::FoliationPresentation;
use crate::linalg::{exact_rank, nullspace, rref, solve_exact};
use crate::symcore::{Monomial, PolyVectorField, Rational};

/// All monomials in `nvars` variables of total degree `<= bound`.
pub fn monomials_up_to(nvars: usize, bound: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(axis: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if axis == cur.len() {
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[axis] = e;
            rec(axis + 1, left - e, cur, out);
        }
        cur[axis] = 0;
    }
    rec(0, bound, &mut cur, &mut out);
    out.sort();
    out
}

type Key = (usize, Monomial);

/// Columns `x^α (x_j − a_j) X_i` as sparse maps from (component, monomial).
fn columns(f: &FoliationPresentation, x: &[Rational], bound: u32) -> Result<Vec<BTreeMap<Key, Rational>>> {
    let gens = vanishing_generators(f, x)?;
    let mons = monomials_up_to(f.dim(), bound);
    let mut cols = Vec::with_capacity(gens.len() * mons.len());
    let one = Rational::from_integer(1.into());
    for g in &gens {
        for m in &mons {
            let mut col = BTreeMap::new();
            for (k, p) in g.iter().enumerate() {
                for (mm, c) in p.mul_term(m, &one).terms() {
                    col.insert((k, mm.clone()), c.clone());
                }
            }
            cols.push(col);
        }
    }
    Ok(cols)
}

fn dense(cols: &[BTreeMap<Key, Rational>], extra: &[BTreeMap<Key, Rational>]) -> (Vec<Key>, Vec<Vec<Rational>>) {
    let mut keys: Vec<Key> = cols.iter().chain(extra).flat_map(|c| c.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let index: BTreeMap<&Key, usize> = keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let ncols = cols.len() + extra.len();
    let mut m = vec![vec![Rational::zero(); ncols]; keys.len()];
    for (c, col) in extra.iter().chain(cols).enumerate() {
        for (k, v) in col {
            m[index[k]][c] = v.clone();
        }
    }
    (keys, m)
}

fn field_map(v: &PolyVectorField) -> BTreeMap<Key, Rational> {
    let mut out = BTreeMap::new();
    for (k, p) in v.components().iter().enumerate() {
        for (m, c) in p.terms() {
            out.insert((k, m.clone()), c.clone());
        }
    }
    out
}

/// Is `V ∈ I_x F` with multipliers of degree at most `bound`?
pub fn membership_bounded(f: &FoliationPresentation, v: &PolyVectorField, x: &[Rational], bound: u32) -> Result<bool> {
    if v.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: v.dim() });
    }
    let cols = columns(f, x, bound)?;
    let target = field_map(v);
    let (keys, m) = dense(&cols, &[]);
    if target.keys().any(|k| keys.binary_search(k).is_err()) {
        return Ok(false);
    }
    let b: Vec<Rational> = keys.iter().map(|k| target.get(k).cloned().unwrap_or_else(Rational::zero)).collect();
    Ok(solve_exact(&m, &b, cols.len()).is_some())
}

/// Basis (in reduced echelon form) of constant `c` with `Σ c_i X_i ∈ I_x F`
/// witnessed by multipliers of degree at most `bound`.
pub fn kernel_bounded(f: &FoliationPresentation, x: &[Rational], bound: u32) -> Result<Vec<Vec<Rational>>> {
    let q = f.q();
    let cols = columns(f, x, bound)?;
    let gens: Vec<BTreeMap<Key, Rational>> = f
        .generators()
        .iter()
        .map(|g| field_map(g).into_iter().map(|(k, v)| (k, -v)).collect())
        .collect();
    // unknowns: c (first q), then multipliers; Σ f·m − Σ c X = 0
    let (_, m) = dense(&cols, &gens);
    let ns = nullspace(&m, q + cols.len());
    let mut proj: Vec<Vec<Rational>> = ns.into_iter().map(|v| v[..q].to_vec()).collect();
    rref(&mut proj, q);
    Ok(proj)
}

pub fn fiber_dimension_bounded(f: &FoliationPresentation, x: &[Rational], bound: u32) -> Result<usize> {
    let k = kernel_bounded(f, x, bound)?;
    Ok(f.q() - exact_rank(&k, f.q()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::symcore::rat;

    #[test]
    fn monomial_count() {
        assert_eq!(monomials_up_to(2, 2).len(), 6);
        assert_eq!(monomials_up_to(3, 6).len(), 84);
    }

    #[test]
    fn oracle_examples() {
        let o = vec![rat(0), rat(0)];
        let rot = catalog::rot2();
        assert!(!membership_bounded(&rot, &PolyVectorField::parse("[y, -x]").unwrap(), &o, 6).unwrap());
        assert!(membership_bounded(&rot, &PolyVectorField::parse("[x*y, -x^2]").unwrap(), &o, 6).unwrap());
        let sl2 = catalog::sl2_1d();
        assert!(membership_bounded(&sl2, &PolyVectorField::parse("[x]").unwrap(), &[rat(0)], 6).unwrap());
        assert_eq!(fiber_dimension_bounded(&rot, &o, 6).unwrap(), 1);
        assert_eq!(fiber_dimension_bounded(&sl2, &[rat(0)], 6).unwrap(), 1);
        assert_eq!(fiber_dimension_bounded(&catalog::full2(), &o, 6).unwrap(), 2);
    }
}
