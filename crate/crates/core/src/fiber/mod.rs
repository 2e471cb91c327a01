//! The fiber `A(F)_x = F / I_x F` at a rational point.
//!
//! `I_x F` is the submodule of `ℚ[x]^n` generated by `(x_j − a_j)·X_i`. Its
//! normal form map is ℚ-linear, so the constant combinations `Σ c_i X_i`
//! landing in `I_x F` form the kernel of a rational matrix whose columns are
//! the normal forms of the generators.

pub mod bounded;
pub mod groebner;

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;

pub use groebner::{GroebnerBasis, ModVec};

use crate::error::{Error, Result};
use crate::foliation::FoliationPresentation;
use crate::linalg::{nullspace, rref};
use crate::symcore::{snap_point, Monomial, PolyVectorField, Polynomial, Rational};

/// Generators `(x_j − a_j)·X_i` of `I_x F`, ordered by `i` then `j`.
pub fn vanishing_generators(f: &FoliationPresentation, x: &[Rational]) -> Result<Vec<ModVec>> {
    check_base(f, x)?;
    let d = f.dim();
    let mut out = Vec::with_capacity(f.q() * d);
    for g in f.generators() {
        for (j, a) in x.iter().enumerate() {
            let mut lin = Polynomial::var(d, j);
            lin.add_term(Monomial::one(d), -a.clone());
            out.push(g.components().iter().map(|c| c * &lin).collect());
        }
    }
    Ok(out)
}

fn check_base(f: &FoliationPresentation, x: &[Rational]) -> Result<()> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    Ok(())
}

/// Snap a floating point base to exact rationals, or fail.
pub fn rational_base(x: &[f64]) -> Result<Vec<Rational>> {
    snap_point(x, 1_000_000, 1e-12).ok_or(Error::NonRationalPoint)
}

/// Gröbner basis of `I_x F` together with the data needed for class computations.
#[derive(Clone, Debug)]
pub struct VanishingModule {
    base: Vec<Rational>,
    basis: GroebnerBasis,
}

impl VanishingModule {
    pub fn new(f: &FoliationPresentation, x: &[Rational]) -> Result<Self> {
        let gens = vanishing_generators(f, x)?;
        Ok(VanishingModule { base: x.to_vec(), basis: GroebnerBasis::new(&gens, f.dim(), f.dim()) })
    }

    pub fn base(&self) -> &[Rational] {
        &self.base
    }

    pub fn contains(&self, v: &PolyVectorField) -> bool {
        self.basis.contains(&v.components().to_vec())
    }

    pub fn normal_form(&self, v: &PolyVectorField) -> ModVec {
        self.basis.normal_form(&v.components().to_vec())
    }

    pub fn groebner(&self) -> &GroebnerBasis {
        &self.basis
    }
}

/// Is `V` in `I_x F`?
pub fn module_membership(f: &FoliationPresentation, v: &PolyVectorField, x: &[Rational]) -> Result<bool> {
    if v.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: v.dim() });
    }
    Ok(VanishingModule::new(f, x)?.contains(v))
}

/// Basis data for `A(F)_x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberBasisReport {
    #[serde(serialize_with = "ser_rat_vec")]
    pub base: Vec<Rational>,
    pub dimension: usize,
    /// Basis of `{c : Σ c_i X_i ∈ I_x F}`.
    #[serde(serialize_with = "ser_rat_mat")]
    pub kernel_basis: Vec<Vec<Rational>>,
    /// 0-based indices of generators whose classes form a basis.
    pub minimal_generator_indices: Vec<usize>,
    /// Rows map coefficients to coordinates of the class in the basis given by
    /// the minimal generators.
    #[serde(skip)]
    pub class_matrix: Vec<Vec<Rational>>,
}

fn ser_rat_vec<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

fn ser_rat_mat<S: serde::Serializer>(m: &[Vec<Rational>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.iter().map(|row| row.iter().map(|r| r.to_string()).collect::<Vec<_>>()))
}

impl FiberBasisReport {
    /// Class coordinates of `Σ c_i X_i`.
    pub fn class_of(&self, c: &[Rational]) -> Vec<Rational> {
        self.class_matrix
            .iter()
            .map(|row| row.iter().zip(c).fold(Rational::zero(), |acc, (l, ci)| acc + l * ci))
            .collect()
    }

    pub fn is_zero_class(&self, c: &[Rational]) -> bool {
        self.class_of(c).iter().all(Zero::is_zero)
    }
}

/// Compute dimension, kernel and minimal generators at `x`.
pub fn minimal_generators(f: &FoliationPresentation, x: &[Rational]) -> Result<FiberBasisReport> {
    let module = VanishingModule::new(f, x)?;
    let q = f.q();
    // Collect normal forms and index their (component, monomial) support.
    let nfs: Vec<ModVec> = f.generators().iter().map(|g| module.normal_form(g)).collect();
    let mut rows: BTreeMap<(usize, Monomial), Vec<Rational>> = BTreeMap::new();
    for (i, nf) in nfs.iter().enumerate() {
        for (k, p) in nf.iter().enumerate() {
            for (m, c) in p.terms() {
                rows.entry((k, m.clone())).or_insert_with(|| vec![Rational::zero(); q])[i] = c.clone();
            }
        }
    }
    let mut mat: Vec<Vec<Rational>> = rows.into_values().collect();
    let kernel_basis = nullspace(&mat, q);
    let pivots = rref(&mut mat, q);
    Ok(FiberBasisReport {
        base: x.to_vec(),
        dimension: pivots.len(),
        kernel_basis,
        minimal_generator_indices: pivots,
        class_matrix: mat,
    })
}

pub fn fiber_dimension(f: &FoliationPresentation, x: &[Rational]) -> Result<usize> {
    Ok(minimal_generators(f, x)?.dimension)
}

/// Class of `Σ c_i X_i` in `A(F)_x`, stored by representative.
#[derive(Clone, Debug)]
pub struct FiberVector {
    pub base: Vec<Rational>,
    pub coeffs: Vec<Rational>,
}

impl FiberVector {
    pub fn q(&self) -> usize {
        self.coeffs.len()
    }

    pub fn base_f64(&self) -> Vec<f64> {
        crate::symcore::coeff::to_f64_vec(&self.base)
    }

    /// Equality of classes, decided against a report for the same base.
    pub fn same_class(&self, other: &FiberVector, report: &FiberBasisReport) -> bool {
        if self.base != other.base || self.base != report.base {
            return false;
        }
        let diff: Vec<Rational> = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        report.is_zero_class(&diff)
    }

    pub fn is_zero(&self, report: &FiberBasisReport) -> bool {
        report.is_zero_class(&self.coeffs)
    }
}

pub fn evaluate(f: &FoliationPresentation, coeffs: &[Rational], x: &[Rational]) -> Result<FiberVector> {
    check_base(f, x)?;
    if coeffs.len() != f.q() {
        return Err(Error::DimensionMismatch { expected: f.q(), got: coeffs.len() });
    }
    Ok(FiberVector { base: x.to_vec(), coeffs: coeffs.to_vec() })
}

/// Exact tangent vector `Σ c_i X_i(base)`.
pub fn anchor(f: &FoliationPresentation, v: &FiberVector) -> Result<Vec<Rational>> {
    check_base(f, &v.base)?;
    f.combination(&v.coeffs).eval(&v.base)
}

pub fn anchor_f64(f: &FoliationPresentation, v: &FiberVector) -> Result<Vec<f64>> {
    Ok(crate::symcore::coeff::to_f64_vec(&anchor(f, v)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::symcore::{rat, ratio};

    fn pt(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&a| rat(a)).collect()
    }

    #[test]
    fn rot2_membership_at_origin() {
        let f = catalog::rot2();
        let xr = PolyVectorField::parse("[x*y, -x^2]").unwrap();
        let r = PolyVectorField::parse("[y, -x]").unwrap();
        assert!(module_membership(&f, &xr, &pt(&[0, 0])).unwrap());
        assert!(!module_membership(&f, &r, &pt(&[0, 0])).unwrap());
    }

    #[test]
    fn dimensions() {
        assert_eq!(fiber_dimension(&catalog::full2(), &[ratio(1, 3), rat(-2)]).unwrap(), 2);
        assert_eq!(fiber_dimension(&catalog::rot2(), &pt(&[0, 0])).unwrap(), 1);
        assert_eq!(fiber_dimension(&catalog::rot2(), &pt(&[1, 0])).unwrap(), 1);
        assert_eq!(fiber_dimension(&catalog::scale1(), &pt(&[0])).unwrap(), 1);
        assert_eq!(fiber_dimension(&catalog::scale1(), &pt(&[1])).unwrap(), 1);
        let sl2 = minimal_generators(&catalog::sl2_1d(), &pt(&[0])).unwrap();
        // x∂x = x·∂x and x²∂x = x²·∂x both vanish in the fiber at 0
        assert_eq!(sl2.dimension, 1);
        assert_eq!(sl2.minimal_generator_indices, vec![0]);
        assert_eq!(sl2.kernel_basis.len(), 2);
    }

    #[test]
    fn classes_and_anchor() {
        let sl2 = catalog::sl2_1d();
        let rep = minimal_generators(&sl2, &pt(&[0])).unwrap();
        let v = evaluate(&sl2, &pt(&[0, 0, 1]), &pt(&[0])).unwrap();
        assert!(v.is_zero(&rep));

        let rot = catalog::rot2();
        let origin = minimal_generators(&rot, &pt(&[0, 0])).unwrap();
        let r0 = evaluate(&rot, &pt(&[1]), &pt(&[0, 0])).unwrap();
        assert!(!r0.is_zero(&origin));
        assert_eq!(anchor(&rot, &r0).unwrap(), pt(&[0, 0]));
        let r1 = evaluate(&rot, &pt(&[1]), &pt(&[1, 0])).unwrap();
        assert_eq!(anchor(&rot, &r1).unwrap(), pt(&[0, -1]));
    }
}
