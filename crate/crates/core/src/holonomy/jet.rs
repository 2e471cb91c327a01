use nalgebra::{DMatrix, DVector};

use super::slice::Slice;
use crate::error::{Error, Result};
use crate::fiber::bounded::monomials_up_to;
use crate::fpath::TAU_PT;
use crate::linalg::lstsq;
use crate::symcore::{Monomial, Polynomial};

/// Truncated Taylor map between slices, in slice coordinates, fixing the origin.
#[derive(Clone, Debug)]
pub struct GermJet {
    pub order: u32,
    pub source: Slice,
    pub target: Slice,
    /// One polynomial in the source coordinates per target coordinate.
    pub taylor: Vec<Polynomial<f64>>,
}

/// Drop every term of total degree above `order` and the constant term.
pub fn truncate(p: &Polynomial<f64>, order: u32) -> Polynomial<f64> {
    let mut out = Polynomial::zero(p.nvars());
    for (m, c) in p.terms() {
        let deg = m.degree();
        if deg >= 1 && deg <= order {
            out.add_term(m.clone(), *c);
        }
    }
    out
}

impl GermJet {
    pub fn identity(slice: &Slice, order: u32) -> GermJet {
        let m = slice.dim();
        GermJet { order, source: slice.clone(), target: slice.clone(), taylor: (0..m).map(|i| Polynomial::var(m, i)).collect() }
    }

    pub fn source_dim(&self) -> usize {
        self.source.dim()
    }

    pub fn target_dim(&self) -> usize {
        self.target.dim()
    }

    /// First-order part as a `m_target × m_source` matrix.
    pub fn linear_part(&self) -> DMatrix<f64> {
        let m0 = self.source_dim();
        DMatrix::from_fn(self.target_dim(), m0, |r, c| self.taylor[r].coeff(&Monomial::var(m0, c)))
    }

    /// Coefficients of degree `≥ 2`, flattened as (output, monomial, value).
    pub fn higher_terms(&self) -> Vec<(usize, Vec<u32>, f64)> {
        let mut out = Vec::new();
        for (i, p) in self.taylor.iter().enumerate() {
            for (m, c) in p.terms() {
                if m.degree() >= 2 {
                    out.push((i, m.0.clone(), *c));
                }
            }
        }
        out
    }

    /// Largest coefficient difference with another jet of the same shape.
    pub fn max_difference(&self, other: &GermJet) -> f64 {
        self.taylor
            .iter()
            .zip(&other.taylor)
            .map(|(a, b)| (a - b).max_abs_coeff())
            .fold(0.0, f64::max)
    }

    /// Is this the identity jet within `tol` per coefficient?
    pub fn is_identity(&self, tol: f64) -> bool {
        if self.source_dim() != self.target_dim() {
            return false;
        }
        let id = GermJet::identity(&self.source, self.order);
        self.max_difference(&id) <= tol
    }

    pub fn eval(&self, sigma: &[f64]) -> Vec<f64> {
        self.taylor.iter().map(|p| p.eval_f64(sigma).expect("jet arity")).collect()
    }
}

/// `J2 ∘ J1` truncated at the smaller order.
pub fn compose_jets(j2: &GermJet, j1: &GermJet) -> Result<GermJet> {
    if !j1.target.matches(&j2.source, TAU_PT) {
        return Err(Error::SliceMismatch("target slice of the first jet differs from the source of the second".into()));
    }
    let order = j1.order.min(j2.order);
    let inner: Vec<Polynomial<f64>> = j1.taylor.iter().map(|p| truncate(p, order)).collect();
    let taylor = if j1.source_dim() == 0 {
        vec![Polynomial::zero(0); j2.target_dim()]
    } else {
        j2.taylor.iter().map(|p| Ok(truncate(&truncate(p, order).compose(&inner)?, order))).collect::<Result<Vec<_>>>()?
    };
    Ok(GermJet { order, source: j1.source.clone(), target: j2.target.clone(), taylor })
}

/// Least-squares fit of a polynomial map without constant term, total degree
/// `order + 1`, truncated to `order`. Inputs are scaled by `scale` for conditioning.
pub fn fit_taylor(inputs: &[Vec<f64>], outputs: &[Vec<f64>], m_in: usize, m_out: usize, order: u32, scale: f64) -> Vec<Polynomial<f64>> {
    if m_in == 0 {
        return vec![Polynomial::zero(0); m_out];
    }
    let mons: Vec<Monomial> = monomials_up_to(m_in, order + 1).into_iter().filter(|m| m.degree() > 0).collect();
    let a = DMatrix::from_fn(inputs.len(), mons.len(), |r, c| {
        mons[c].0.iter().zip(&inputs[r]).map(|(&e, x)| (x / scale).powi(e as i32)).product()
    });
    (0..m_out)
        .map(|k| {
            let b = DVector::from_iterator(outputs.len(), outputs.iter().map(|o| o[k]));
            let (sol, _) = lstsq(&a, &b, 1e-13);
            let mut p = Polynomial::zero(m_in);
            for (m, c) in mons.iter().zip(sol.iter()) {
                if m.degree() <= order {
                    p.add_term(m.clone(), c / scale.powi(m.degree() as i32));
                }
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn slice(m: usize) -> Slice {
        Slice { base: vec![0.0; m], frame: DMatrix::identity(m, m), extent: 1.0 }
    }

    #[test]
    fn fit_recovers_a_quadratic_map() {
        let s = slice(2);
        let pts = crate::sampling::chebyshev_grid(&[0.0, 0.0], 0.1, 4);
        let img: Vec<Vec<f64>> = pts.iter().map(|p| vec![2.0 * p[0] + p[1] * p[1], -p[1] + 0.5 * p[0] * p[1]]).collect();
        let taylor = fit_taylor(&pts, &img, 2, 2, 2, 0.1);
        let j = GermJet { order: 2, source: s.clone(), target: s, taylor };
        let l = j.linear_part();
        assert!((l[(0, 0)] - 2.0).abs() < 1e-10 && (l[(1, 1)] + 1.0).abs() < 1e-10);
        assert!((j.taylor[0].coeff(&Monomial(vec![0, 2])) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn composition_truncates() {
        let s = slice(1);
        let x = Polynomial::var(1, 0);
        let sq = &x * &x;
        let f = GermJet { order: 2, source: s.clone(), target: s.clone(), taylor: vec![&x + &sq] };
        let id = GermJet::identity(&s, 3);
        let c = compose_jets(&f, &id).unwrap();
        assert_eq!(c.order, 2);
        assert!(c.max_difference(&f) < 1e-15);
        // (x + x²) ∘ (x + x²) = x + 2x² + O(x³)
        let ff = compose_jets(&f, &f).unwrap();
        assert!((ff.taylor[0].coeff(&Monomial(vec![2])) - 2.0).abs() < 1e-15);
        assert_eq!(ff.taylor[0].degree(), Some(2));
    }
}
