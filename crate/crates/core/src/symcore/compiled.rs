use nalgebra::{DMatrix, DVector};

use super::coeff::Coeff;
use super::field::PolyVectorField;
use super::poly::Polynomial;

/// Floating-point evaluator for a fixed polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl CompiledPoly {
    pub fn new<C: Coeff>(p: &Polynomial<C>) -> Self {
        CompiledPoly { terms: p.terms().map(|(m, c)| (c.to_f64(), m.0.clone())).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (xi, &k) in x.iter().zip(e) {
                if k != 0 {
                    t *= xi.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }
}

/// Floating-point evaluator for a vector field and its Jacobian.
#[derive(Clone, Debug)]
pub struct CompiledField {
    dim: usize,
    comps: Vec<CompiledPoly>,
    // jac[k][j] = ∂_j X^k
    jac: Vec<Vec<CompiledPoly>>,
}

impl CompiledField {
    pub fn new<C: Coeff>(f: &PolyVectorField<C>) -> Self {
        let dim = f.dim();
        let comps = f.components().iter().map(CompiledPoly::new).collect();
        let jac = f
            .components()
            .iter()
            .map(|c| (0..dim).map(|j| CompiledPoly::new(&c.partial_derivative(j))).collect())
            .collect();
        CompiledField { dim, comps, jac }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.comps) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Add `scale * X(x)` into `out`.
    pub fn axpy(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        for (o, c) in out.iter_mut().zip(&self.comps) {
            if !c.is_zero() {
                *o += scale * c.eval(x);
            }
        }
    }

    /// Add `scale * DX(x)` into the row-major `dim × dim` buffer `out`.
    pub fn jac_axpy(&self, scale: f64, x: &[f64], out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        for k in 0..self.dim {
            for j in 0..self.dim {
                let p = &self.jac[k][j];
                if !p.is_zero() {
                    out[k * self.dim + j] += scale * p.eval(x);
                }
            }
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |k, j| self.jac[k][j].eval(x))
    }
}

/// Compiled generator family `X_1..X_q` sharing one chart.
#[derive(Clone, Debug)]
pub struct CompiledFamily {
    dim: usize,
    fields: Vec<CompiledField>,
}

impl CompiledFamily {
    pub fn new<C: Coeff>(fields: &[PolyVectorField<C>]) -> Self {
        let dim = fields.first().map(PolyVectorField::dim).unwrap_or(0);
        CompiledFamily { dim, fields: fields.iter().map(CompiledField::new).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, i: usize) -> &CompiledField {
        &self.fields[i]
    }

    /// `Σ c_i X_i(x)` written into `out`.
    pub fn combine_into(&self, c: &[f64], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (ci, f) in c.iter().zip(&self.fields) {
            f.axpy(*ci, x, out);
        }
    }

    pub fn combine(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.combine_into(c, x, &mut out);
        out
    }

    /// Row-major Jacobian of `Σ c_i X_i` at `x`.
    pub fn combine_jac_into(&self, c: &[f64], x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (ci, f) in c.iter().zip(&self.fields) {
            f.jac_axpy(*ci, x, out);
        }
    }

    /// `d × q` matrix with columns `X_i(x)`.
    pub fn frame(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.fields.len());
        for (i, f) in self.fields.iter().enumerate() {
            m.set_column(i, &DVector::from_vec(f.eval(x)));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_exact_evaluation() {
        let f = PolyVectorField::parse("[x^2*y - 1/3, y^3 + 2*x]").unwrap();
        let cf = CompiledField::new(&f);
        let x = [0.7, -1.3];
        let exact = f.eval_f64(&x).unwrap();
        let fast = cf.eval(&x);
        for (a, b) in exact.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-14);
        }
        let j = cf.jacobian(&x);
        assert!((j[(0, 0)] - 2.0 * 0.7 * -1.3).abs() < 1e-14);
        assert!((j[(1, 1)] - 3.0 * 1.69).abs() < 1e-12);
        assert_eq!(j[(1, 0)], 2.0);
    }
}
