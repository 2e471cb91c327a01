use nalgebra::DMatrix;
use num_traits::Zero;

use super::expm::{expm, expm_frechet, expm_t};
use crate::symcore::{Coeff, Monomial, PolyVectorField, Rational};

/// A linear vector field `x ↦ A x` with exact entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearField {
    pub matrix: Vec<Vec<Rational>>,
}

impl LinearField {
    pub fn new(matrix: Vec<Vec<Rational>>) -> Self {
        LinearField { matrix }
    }

    /// Recognize a field whose components are homogeneous of degree one.
    pub fn from_field(f: &PolyVectorField) -> Option<Self> {
        let d = f.dim();
        let mut m = vec![vec![Rational::zero(); d]; d];
        for (k, comp) in f.components().iter().enumerate() {
            for (mono, c) in comp.terms() {
                if mono.degree() != 1 {
                    return None;
                }
                let j = mono.0.iter().position(|&e| e == 1)?;
                m[k][j] = c.clone();
            }
        }
        Some(LinearField { matrix: m })
    }

    pub fn to_field(&self) -> PolyVectorField {
        let d = self.matrix.len();
        let comps = self
            .matrix
            .iter()
            .map(|row| {
                let mut p = crate::symcore::Polynomial::zero(d);
                for (j, c) in row.iter().enumerate() {
                    p.add_term(Monomial::var(d, j), c.clone());
                }
                p
            })
            .collect();
        PolyVectorField::new(comps).expect("square matrix")
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        let d = self.matrix.len();
        DMatrix::from_fn(d, d, |r, c| self.matrix[r][c].to_f64())
    }
}

/// `e^{tA}` for an exact matrix.
pub fn matrix_exponential(a: &LinearField, t: f64) -> DMatrix<f64> {
    expm_t(&a.to_f64(), t)
}

/// Matrix of `(Φ^t_A)_* B = e^{tA} B e^{-tA}`.
pub fn pushforward_matrix(a: &DMatrix<f64>, t: f64, b: &DMatrix<f64>) -> DMatrix<f64> {
    let e = expm_t(a, t);
    let einv = expm_t(a, -t);
    e * b * einv
}

/// Flow of a piecewise-constant combination of linear generators:
/// the product of the per-piece exponentials, latest piece on the left.
pub fn piecewise_flow(mats: &[DMatrix<f64>], pieces: &[(f64, Vec<f64>)]) -> DMatrix<f64> {
    let d = mats.first().map(|m| m.nrows()).unwrap_or(0);
    let mut acc = DMatrix::identity(d, d);
    for (dt, c) in pieces {
        let a = combine(mats, c);
        acc = expm(&(a * *dt)) * acc;
    }
    acc
}

/// `Σ c_i A_i`.
pub fn combine(mats: &[DMatrix<f64>], c: &[f64]) -> DMatrix<f64> {
    let d = mats.first().map(|m| m.nrows()).unwrap_or(0);
    mats.iter().zip(c).fold(DMatrix::zeros(d, d), |acc, (m, &ci)| acc + m * ci)
}

/// Complement of the linear variation `X(t, s)(x) = A(s) x` (constant in `t`):
/// `Y(t, s)(y) = L(tA, tA') e^{-tA} y` where `L` is the Fréchet derivative of exp.
pub fn linear_complement_matrix(a: &DMatrix<f64>, da_ds: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let (e, l) = expm_frechet(&(a * t), &(da_ds * t));
    let einv = e.clone().try_inverse().expect("exponential is invertible");
    l * einv
}
