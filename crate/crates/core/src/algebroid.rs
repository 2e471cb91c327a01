//! Leafwise algebroid data: A-paths over the fixed generators and the
//! A-homotopy equation `∂_s α − ∂_t β = [α, β]`, `β(0, s) = 0`.

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fiber::minimal_generators;
use crate::flowengine::coeffs::union_breakpoints;
use crate::flowengine::flow::stops_between;
use crate::flowengine::ode::integrate;
use crate::flowengine::{CoeffCurve, IntegralCurve, OdeOptions, TimeDependentElement};
use crate::foliation::FoliationPresentation;
use crate::fpath::variation::{membership_fit, Grid, MembershipBackend, TAU_MEM};
use crate::fpath::{FPath, Variation};
use crate::linalg::{dist, norm};
use crate::sampling::ball_points;
use crate::symcore::{snap_point, Coeff, CompiledPoly, Rational};

/// Largest admissible `|Σ a_i X_i(γ) − γ'|`.
pub const ANCHOR_TOL: f64 = 1e-5;
const ANCHOR_SAMPLES: usize = 40;

/// An A-path: coefficients `a(t)` against the generators over a base curve `γ`.
#[derive(Clone, Debug)]
pub struct APath {
    pub foliation: Arc<FoliationPresentation>,
    pub base: IntegralCurve,
    pub coeffs: CoeffCurve,
    pub tol: f64,
}

/// Sup over interior sample times of `|Σ a_i(t) X_i(γ(t)) − γ'(t)|`.
pub fn anchor_residual(f: &FoliationPresentation, base: &IntegralCurve, coeffs: &CoeffCurve) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..ANCHOR_SAMPLES {
        let t = (i as f64 + 0.5) / ANCHOR_SAMPLES as f64;
        let x = base.eval(t);
        let v = f.compiled().combine(&coeffs.eval(t), &x);
        worst = worst.max(dist(&v, &base.velocity(t)));
    }
    worst
}

impl APath {
    /// Checks the anchor condition.
    pub fn new(foliation: Arc<FoliationPresentation>, base: IntegralCurve, coeffs: CoeffCurve, tol: f64) -> Result<Self> {
        if coeffs.q() != foliation.q() {
            return Err(Error::DimensionMismatch { expected: foliation.q(), got: coeffs.q() });
        }
        if base.dim() != foliation.dim() {
            return Err(Error::DimensionMismatch { expected: foliation.dim(), got: base.dim() });
        }
        let residual = anchor_residual(&foliation, &base, &coeffs);
        if residual > ANCHOR_TOL {
            return Err(Error::AnchorViolation { residual });
        }
        Ok(APath { foliation, base, coeffs, tol })
    }

    pub fn anchor_residual(&self) -> f64 {
        anchor_residual(&self.foliation, &self.base, &self.coeffs)
    }

    pub fn source(&self) -> &[f64] {
        self.base.start()
    }

    pub fn target(&self) -> &[f64] {
        self.base.end()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_zero()
    }
}

/// `Q(X, γ)(t) = ev_{γ(t)} X(t)`.
pub fn project_to_apath(p: &FPath) -> Result<APath> {
    APath::new(p.foliation().clone(), p.base.clone(), p.coeffs().clone(), p.tol)
}

/// The F-path with the same coefficients and the same base curve.
pub fn lift_apath(a: &APath) -> Result<FPath> {
    let residual = a.anchor_residual();
    if residual > ANCHOR_TOL {
        return Err(Error::AnchorViolation { residual });
    }
    Ok(FPath {
        element: TimeDependentElement::new(a.foliation.clone(), a.coeffs.clone())?,
        base: a.base.clone(),
        tol: a.tol,
    })
}

/// `β^k(t, s)` on a grid, with the base points `γ(t, s)`. Index order `[s][t]`.
#[derive(Clone, Debug, Serialize)]
pub struct AHomotopyField {
    pub ts: Vec<f64>,
    pub ss: Vec<f64>,
    pub beta: Vec<Vec<Vec<f64>>>,
    pub base: Vec<Vec<Vec<f64>>>,
}

impl AHomotopyField {
    /// `β(1, s)` for every grid `s`.
    pub fn terminal(&self) -> Vec<&[f64]> {
        self.beta.iter().map(|row| row.last().unwrap().as_slice()).collect()
    }
}

/// Nonzero structure functions grouped by output index: `(i, j, c^k_{ij})`.
struct Brackets {
    by_k: Vec<Vec<(usize, usize, CompiledPoly)>>,
}

impl Brackets {
    fn new(f: &FoliationPresentation) -> Self {
        let q = f.q();
        let cert = f.certificate();
        let by_k = (0..q)
            .map(|k| {
                let mut v = Vec::new();
                for i in 0..q {
                    for j in 0..q {
                        let p = cert.get(i, j, k);
                        if !p.is_zero() {
                            v.push((i, j, CompiledPoly::new(p)));
                        }
                    }
                }
                v
            })
            .collect();
        Brackets { by_k }
    }
}

/// Integrate `γ' = Σ c^i X_i(γ)` together with
/// `β^k' = ∂_s c^k − Σ_{ij} c^i β^j c^k_{ij}(γ)`, `β(0) = 0`.
fn beta_along(v: &Variation, br: &Brackets, s: f64, ts: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let f = &v.foliation;
    let d = f.dim();
    let q = f.q();
    let c = v.coeffs_at(s);
    let dc = v.ds_coeffs_at(s);
    let bps = union_breakpoints([c.breakpoints(), dc.breakpoints()].into_iter());
    let (c, dc) = (c.refined(&bps), dc.refined(&bps));
    let (stops, pieces) = stops_between(&bps, 0.0, 1.0);
    let mut y0 = v.start.clone();
    y0.resize(d + q, 0.0);
    let mut cv = vec![0.0; q];
    let mut dcv = vec![0.0; q];
    let sol = integrate(
        |seg, t, y, out| {
            let (x, beta) = y.split_at(d);
            c.eval_piece_into(pieces[seg], t, &mut cv);
            dc.eval_piece_into(pieces[seg], t, &mut dcv);
            f.compiled().combine_into(&cv, x, &mut out[..d]);
            for k in 0..q {
                let mut acc = dcv[k];
                for (i, j, ck) in &br.by_k[k] {
                    acc -= cv[*i] * beta[*j] * ck.eval(x);
                }
                out[d + k] = acc;
            }
        },
        &stops,
        &y0,
        &OdeOptions::with_tol(v.tol),
        |t, y| {
            let x = &y[..d];
            if y.iter().all(|a| a.is_finite()) && f.chart().contains(x) {
                Ok(())
            } else {
                Err(Error::ChartEscape { t, point: x.to_vec() })
            }
        },
    )?;
    let mut base = Vec::with_capacity(ts.len());
    let mut beta = Vec::with_capacity(ts.len());
    for &t in ts {
        let y = sol.eval(t);
        base.push(y[..d].to_vec());
        beta.push(if t == 0.0 { vec![0.0; q] } else { y[d..].to_vec() });
    }
    Ok((base, beta))
}

/// `β(t, s)` for the generator-coefficient extension `α = c(t, s)` of a variation.
pub fn ahomotopy_beta(v: &Variation, grid: &Grid) -> Result<AHomotopyField> {
    let br = Brackets::new(&v.foliation);
    let ts = grid.ts();
    let ss = grid.ss();
    let rows = Exec::default().try_map(&ss, |&s| beta_along(v, &br, s, &ts))?;
    let (base, beta) = rows.into_iter().unzip();
    Ok(AHomotopyField { ts, ss, beta, base })
}

/// Outcome of the A-homotopy test, one entry per grid `s`.
#[derive(Clone, Debug, Serialize)]
pub struct AHomotopyReport {
    pub ok: bool,
    pub ss: Vec<f64>,
    /// Size of the class of `β(1, s)` (exact) or the membership residual.
    pub residuals: Vec<f64>,
    /// `|Σ β^k(1, s) X_k(γ(1, s))|`.
    pub anchor_defects: Vec<f64>,
    pub backends: Vec<MembershipBackend>,
}

/// Is `β(1, s)` zero in `A(F)` at `γ(1, s)` for every grid `s`?
///
/// At rational endpoints the class is computed exactly from the fiber basis;
/// elsewhere the anchor must vanish and the field `Σ β^k(1, s) X_k` must fit
/// into `I_{γ(1,s)} F` on a sample ball.
pub fn is_ahomotopy(v: &Variation, grid: &Grid, tau: f64) -> Result<AHomotopyReport> {
    let f = &v.foliation;
    let field = ahomotopy_beta(v, grid)?;
    let mut reports = HashMap::new();
    let mut out = AHomotopyReport { ok: true, ss: field.ss.clone(), residuals: Vec::new(), anchor_defects: Vec::new(), backends: Vec::new() };
    for (is, beta) in field.terminal().into_iter().enumerate() {
        let end = field.base[is].last().unwrap();
        let anchor = norm(&f.compiled().combine(beta, end));
        let (residual, backend) = match snap_point(end, 1000, 1e-9) {
            Some(p) => {
                if !reports.contains_key(&p) {
                    let rep = minimal_generators(f, &p)?;
                    reports.insert(p.clone(), rep);
                }
                let rep = &reports[&p];
                let cls: Vec<f64> = rep
                    .class_matrix
                    .iter()
                    .map(|row: &Vec<Rational>| row.iter().zip(beta).map(|(l, b)| l.to_f64() * b).sum())
                    .collect();
                (norm(&cls) / norm(beta).max(1.0), MembershipBackend::Exact)
            }
            None => {
                let pts = ball_points(end, 0.05, 60);
                let vals: Vec<Vec<f64>> = pts.iter().map(|x| f.compiled().combine(beta, x)).collect();
                let fit = membership_fit(f, end, &pts, &vals, tau);
                (fit.residual.max(if anchor <= tau { 0.0 } else { anchor }), MembershipBackend::LeastSquares)
            }
        };
        out.ok &= residual <= tau;
        out.residuals.push(residual);
        out.anchor_defects.push(anchor);
        out.backends.push(backend);
    }
    Ok(out)
}

/// `is_ahomotopy` on the default grid with the default tolerance.
pub fn is_ahomotopy_default(v: &Variation) -> Result<AHomotopyReport> {
    is_ahomotopy(v, &Grid::default(), TAU_MEM)
}
