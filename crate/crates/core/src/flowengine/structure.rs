use nalgebra::DMatrix;

use super::coeffs::{CoeffCurve, UPoly};
use super::flow::stops_between;
use super::ode::{integrate, OdeOptions, OdeSolution};
use crate::error::{Error, Result};
use crate::foliation::{FoliationPresentation, StructureConstants};
use crate::symcore::{Coeff, PolyVectorField, Polynomial};

/// `a^k_j(t) = Σ_i c^i(t) c^k_{ij}` for a fixed generator index `j`, so that
/// `[X(t), X_j] = Σ_k a^k_j(t) X_k`.
#[derive(Clone, Debug)]
pub struct TimeDepStructure {
    pub j: usize,
    curve: CoeffCurve,
    // cert[k][i] = c^k_{ij}
    cert: Vec<Vec<Polynomial>>,
}

impl TimeDepStructure {
    /// `a^k_j` on the given piece as a sum of (time polynomial) × (space polynomial).
    pub fn piece_terms(&self, piece: usize, k: usize) -> Vec<(UPoly, Polynomial)> {
        self.cert[k]
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.curve.pieces()[piece][i].clone(), c.clone()))
            .filter(|(u, _)| !u.is_zero())
            .collect()
    }

    /// `a^k_j(t)` as polynomials in `x` with floating coefficients.
    pub fn at_time(&self, t: f64) -> Vec<Polynomial<f64>> {
        let c = self.curve.eval(t);
        self.cert
            .iter()
            .map(|row| {
                row.iter().zip(&c).fold(Polynomial::zero(row[0].nvars()), |acc, (p, &ci)| {
                    if ci == 0.0 {
                        acc
                    } else {
                        &acc + &p.to_f64().scale(&ci)
                    }
                })
            })
            .collect()
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        self.at_time(t).iter().map(|p| p.eval_f64(x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        (0..self.curve.num_pieces()).all(|p| (0..self.cert.len()).all(|k| self.piece_terms(p, k).is_empty()))
    }
}

pub fn timedep_structure_coeffs(f: &FoliationPresentation, curve: &CoeffCurve, j: usize) -> Result<TimeDepStructure> {
    let q = f.q();
    if j >= q {
        return Err(Error::Invalid(format!("generator index {j} out of range")));
    }
    if curve.q() != q {
        return Err(Error::DimensionMismatch { expected: q, got: curve.q() });
    }
    let cert = (0..q).map(|k| (0..q).map(|i| f.certificate().get(i, j, k).clone()).collect()).collect();
    Ok(TimeDepStructure { j, curve: curve.clone(), cert })
}

/// Residual of `[X(t), X_j] = Σ_k a^k_j(t) X_k` at time `t`, as a symbolic field
/// with floating coefficients (zero when the certificate is valid).
pub fn structure_residual(f: &FoliationPresentation, s: &TimeDepStructure, t: f64) -> Result<PolyVectorField<f64>> {
    let c = s.curve.eval(t);
    let gens: Vec<PolyVectorField<f64>> = f.generators().iter().map(|g| g.map_coeffs(|v| v.to_f64())).collect();
    let dim = f.dim();
    let xt = PolyVectorField::combination(&c.iter().map(|&v| Polynomial::constant(dim, v)).collect::<Vec<_>>(), &gens)?;
    let lhs = xt.lie_bracket(&gens[s.j])?;
    let rhs = PolyVectorField::combination(&s.at_time(t), &gens)?;
    lhs.try_sub(&rhs)
}

/// Transport of generator coefficients under the flow of `X(t) = Σ c^i(t) X_i`
/// when the structure coefficients are constant: `Φ^t_* X_l = Σ_k G_{lk}(t) X_k`
/// with `G' = -G M(t)`, `M_{lk} = Σ_i c^i c^k_{il}`, and `H = G^{-1}`, `H' = M H`.
#[derive(Clone, Debug)]
pub struct FrameTransport {
    q: usize,
    sol: OdeSolution,
}

impl FrameTransport {
    pub fn new(sc: &StructureConstants, curve: &CoeffCurve, tol: f64) -> Result<Self> {
        let q = sc.q;
        let (stops, pieces) = stops_between(curve.breakpoints(), 0.0, 1.0);
        let mut y0 = vec![0.0; 2 * q * q];
        for i in 0..q {
            y0[i * q + i] = 1.0;
            y0[q * q + i * q + i] = 1.0;
        }
        let mut c = vec![0.0; q];
        let sol = integrate(
            |seg, t, y, out| {
                curve.eval_piece_into(pieces[seg], t, &mut c);
                let m = sc.ad_matrix(&c);
                let g = DMatrix::from_row_slice(q, q, &y[..q * q]);
                let h = DMatrix::from_row_slice(q, q, &y[q * q..]);
                let dg = -(&g * &m);
                let dh = &m * &h;
                for r in 0..q {
                    for s in 0..q {
                        out[r * q + s] = dg[(r, s)];
                        out[q * q + r * q + s] = dh[(r, s)];
                    }
                }
            },
            &stops,
            &y0,
            &OdeOptions::with_tol(tol),
            |_, _| Ok(()),
        )?;
        Ok(FrameTransport { q, sol })
    }

    pub fn g(&self, t: f64) -> DMatrix<f64> {
        let y = self.sol.eval(t);
        DMatrix::from_row_slice(self.q, self.q, &y[..self.q * self.q])
    }

    pub fn h(&self, t: f64) -> DMatrix<f64> {
        let y = self.sol.eval(t);
        DMatrix::from_row_slice(self.q, self.q, &y[self.q * self.q..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn sl2_contraction() {
        let f = catalog::sl2_1d();
        let curve = CoeffCurve::from_absolute(
            vec![0.0, 1.0],
            &[vec![Polynomial::zero(1), crate::symcore::parse::parse_univariate_f64("t", "t").unwrap(), Polynomial::zero(1)]],
        )
        .unwrap();
        let s = timedep_structure_coeffs(&f, &curve, 0).unwrap();
        let a = s.eval(0.4, &[0.3]).unwrap();
        assert!((a[0] + 0.4).abs() < 1e-15 && a[1] == 0.0 && a[2] == 0.0);
        for &t in &[0.0, 0.25, 0.9] {
            assert!(structure_residual(&f, &s, t).unwrap().is_zero());
        }
    }

    #[test]
    fn abelian_structure_vanishes() {
        for f in [catalog::rot2(), catalog::full2()] {
            let curve = CoeffCurve::constant(&vec![1.5; f.q()]);
            for j in 0..f.q() {
                assert!(timedep_structure_coeffs(&f, &curve, j).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn transport_inverse_pair() {
        let f = catalog::sl2_1d();
        let sc = f.structure_constants().unwrap();
        let curve = CoeffCurve::constant(&[0.3, -0.5, 0.2]);
        let tr = FrameTransport::new(&sc, &curve, 1e-12).unwrap();
        let prod = tr.g(0.7) * tr.h(0.7);
        assert!((prod - DMatrix::identity(3, 3)).abs().max() < 1e-10);
    }
}
