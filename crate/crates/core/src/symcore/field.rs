use std::fmt;

use super::coeff::{Coeff, Rational};
use super::parse::{parse_poly, split_components};
use super::poly::{default_var_names, Polynomial};
use crate::error::{Error, Result};

/// A vector field `Σ X^k ∂_k` with polynomial components.
#[derive(Clone, PartialEq)]
pub struct PolyVectorField<C: Coeff = Rational> {
    components: Vec<Polynomial<C>>,
}

impl<C: Coeff> PolyVectorField<C> {
    pub fn new(components: Vec<Polynomial<C>>) -> Result<Self> {
        if let Some(first) = components.first() {
            let n = first.nvars();
            if components.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: components.len() });
            }
            if let Some(bad) = components.iter().find(|c| c.nvars() != n) {
                return Err(Error::DimensionMismatch { expected: n, got: bad.nvars() });
            }
        }
        Ok(PolyVectorField { components })
    }

    pub fn zero(dim: usize) -> Self {
        PolyVectorField { components: vec![Polynomial::zero(dim); dim] }
    }

    /// Coordinate field `∂_axis`.
    pub fn coordinate(dim: usize, axis: usize) -> Self {
        let mut f = Self::zero(dim);
        f.components[axis] = Polynomial::one(dim);
        f
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial<C>] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &Polynomial<C> {
        &self.components[k]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn degree(&self) -> Option<u32> {
        self.components.iter().filter_map(Polynomial::degree).max()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(())
    }

    /// Derivation `X(f) = Σ_j X^j ∂_j f`.
    pub fn apply(&self, f: &Polynomial<C>) -> Result<Polynomial<C>> {
        if f.nvars() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.nvars() });
        }
        let mut out = Polynomial::zero(self.dim());
        for (j, xj) in self.components.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            let d = f.partial_derivative(j);
            if !d.is_zero() {
                out = &out + &(xj * &d);
            }
        }
        Ok(out)
    }

    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut comps = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let a = self.apply(&other.components[k])?;
            let b = other.apply(&self.components[k])?;
            comps.push(&a - &b);
        }
        Ok(PolyVectorField { components: comps })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(PolyVectorField {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(PolyVectorField {
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        })
    }

    /// Multiply by the function `f`.
    pub fn mul_poly(&self, f: &Polynomial<C>) -> Self {
        PolyVectorField { components: self.components.iter().map(|c| c * f).collect() }
    }

    pub fn scale(&self, c: &C) -> Self {
        PolyVectorField { components: self.components.iter().map(|p| p.scale(c)).collect() }
    }

    pub fn eval(&self, x: &[C]) -> Result<Vec<C>> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval_f64(x)).collect()
    }

    /// `Σ_i f_i · X_i` for polynomial coefficients.
    pub fn combination(coeffs: &[Polynomial<C>], fields: &[Self]) -> Result<Self> {
        let dim = fields.first().map(Self::dim).unwrap_or(0);
        let mut acc = Self::zero(dim);
        for (f, x) in coeffs.iter().zip(fields) {
            if !f.is_zero() {
                acc = acc.try_add(&x.mul_poly(f))?;
            }
        }
        Ok(acc)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D + Copy) -> PolyVectorField<D> {
        PolyVectorField { components: self.components.iter().map(|p| p.map_coeffs(f)).collect() }
    }

    pub fn render(&self) -> String {
        let names = default_var_names(self.dim());
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let parts: Vec<String> = self.components.iter().map(|p| p.render(&refs)).collect();
        format!("[{}]", parts.join(", "))
    }
}

impl PolyVectorField<Rational> {
    /// Parse `[p1, ..., pn]`; the number of components fixes the dimension.
    pub fn parse(src: &str) -> Result<Self> {
        let parts = split_components(src)?;
        Self::parse_components(&parts)
    }

    pub fn parse_components<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        let n = parts.len();
        let comps = parts.iter().map(|p| parse_poly(p.as_ref(), n)).collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }

    /// Parse in a chart of known dimension, checking the component count.
    pub fn parse_in(src: &str, dim: usize) -> Result<Self> {
        let f = Self::parse(src)?;
        if f.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
        }
        Ok(f)
    }
}

impl<C: Coeff> fmt::Display for PolyVectorField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<C: Coeff> fmt::Debug for PolyVectorField<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyVectorField{}", self.render())
    }
}
