//! Variations of F-paths, their complements `Y(t, s)` and the F-homotopy test.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{make_fpath, FPath, TAU_PT};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fiber::{bounded::monomials_up_to, minimal_generators, module_membership, FiberBasisReport};
use crate::flowengine::coeffs::union_breakpoints;
use crate::flowengine::flow::{flow_point, flow_variational, split_state};
use crate::flowengine::linear::{combine, linear_complement_matrix};
use crate::flowengine::quad::gauss_legendre;
use crate::flowengine::{expm_t, CoeffCurve, ElementField, FrameTransport, OdeOptions, UPoly};
use crate::foliation::FoliationPresentation;
use crate::linalg::{lstsq, norm, rms};
use crate::sampling::ball_points;
use crate::symcore::{snap_point, snap_rational, Polynomial, PolyVectorField, Rational};

/// Longest quadrature panel.
const PANEL: f64 = 1.0 / 16.0;
/// Default relative membership tolerance.
pub const TAU_MEM: f64 = 1e-6;
const BALL_RADIUS: f64 = 0.05;
const BALL_POINTS: usize = 60;
const MAX_FIT_DEGREE: u32 = 4;
const ENDPOINT_TOL: f64 = 1e-6;

/// `c(t, s) = Σ_m w_m(s) C_m(t)` with polynomial weights, started at a fixed point.
#[derive(Clone, Debug)]
pub struct Variation {
    pub foliation: Arc<FoliationPresentation>,
    pub terms: Vec<(UPoly, CoeffCurve)>,
    pub start: Vec<f64>,
    pub tol: f64,
}

impl Variation {
    pub fn new(
        foliation: Arc<FoliationPresentation>,
        terms: Vec<(UPoly, CoeffCurve)>,
        start: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("a variation needs at least one term".into()));
        }
        if let Some((_, c)) = terms.iter().find(|(_, c)| c.q() != foliation.q()) {
            return Err(Error::DimensionMismatch { expected: foliation.q(), got: c.q() });
        }
        foliation.check_point(&start)?;
        Ok(Variation { foliation, terms, start, tol })
    }

    /// `(1 − s) c0 + s c1`.
    pub fn linear(
        foliation: Arc<FoliationPresentation>,
        c0: CoeffCurve,
        c1: CoeffCurve,
        start: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        Self::new(foliation, vec![(UPoly::linear(1.0, -1.0), c0), (UPoly::linear(0.0, 1.0), c1)], start, tol)
    }

    /// The variation that does not depend on `s`.
    pub fn constant(p: &FPath) -> Self {
        Variation {
            foliation: p.foliation().clone(),
            terms: vec![(UPoly::constant(1.0), p.coeffs().clone())],
            start: p.source().to_vec(),
            tol: p.tol,
        }
    }

    fn combine_terms(&self, weights: Vec<f64>) -> CoeffCurve {
        let curves: Vec<&CoeffCurve> = self.terms.iter().map(|(_, c)| c).collect();
        CoeffCurve::linear_combination(&weights, &curves).expect("terms share the generator count")
    }

    /// `c(·, s)`.
    pub fn coeffs_at(&self, s: f64) -> CoeffCurve {
        self.combine_terms(self.terms.iter().map(|(w, _)| w.eval(s)).collect())
    }

    /// `∂_s c(·, s)`.
    pub fn ds_coeffs_at(&self, s: f64) -> CoeffCurve {
        self.combine_terms(self.terms.iter().map(|(w, _)| w.deriv().eval(s)).collect())
    }

    pub fn slice(&self, s: f64) -> Result<FPath> {
        make_fpath(self.foliation.clone(), self.coeffs_at(s), &self.start, self.tol)
    }

    /// Base curve point `p(t, s)`.
    pub fn base_point(&self, t: f64, s: f64) -> Result<Vec<f64>> {
        let c = self.coeffs_at(s);
        let field = ElementField::new(&self.foliation, &c);
        flow_point(&field, &self.start, 0.0, t, &OdeOptions::with_tol(self.tol), self.foliation.chart())
    }

    pub fn is_constant_in_s(&self) -> bool {
        self.terms.iter().all(|(w, c)| w.deriv().is_zero() || c.is_zero())
    }
}

/// Tensor grid in `(t, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub nt: usize,
    pub ns: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid { nt: 33, ns: 17 }
    }
}

fn uniform(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0];
    }
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

impl Grid {
    pub fn ts(&self) -> Vec<f64> {
        uniform(self.nt)
    }

    pub fn ss(&self) -> Vec<f64> {
        uniform(self.ns)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplementBackend {
    /// Pick the most exact backend that applies.
    Auto,
    /// Linear generators and coefficients constant in `t`: closed form via the
    /// Fréchet derivative of the matrix exponential.
    Linear,
    /// Constant structure coefficients: `Y = Σ y^k X_k` with scalar `y`.
    Coefficients,
    /// Pushforwards along sampled flows with Gauss–Legendre quadrature.
    Sampled,
}

/// Complement values on a `(t, s)` grid. Index order is `[s][t]`.
#[derive(Clone, Debug)]
pub struct ComplementField {
    pub ts: Vec<f64>,
    pub ss: Vec<f64>,
    pub backend: ComplementBackend,
    /// `y^k(t, s)` when the coefficient backend was used.
    pub coeffs: Option<Vec<Vec<Vec<f64>>>>,
    /// Matrix of the linear field `Y(t, s)` for the linear backend.
    pub matrices: Option<Vec<Vec<DMatrix<f64>>>>,
    /// `p(t, s)`.
    pub base: Vec<Vec<Vec<f64>>>,
    /// `Y(t, s)(p(t, s))`.
    pub at_base: Vec<Vec<Vec<f64>>>,
}

impl ComplementField {
    /// Largest `|Y(0, s)|` over the grid; zero by construction.
    pub fn initial_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.at_base {
            worst = worst.max(norm(&row[0]));
        }
        if let Some(c) = &self.coeffs {
            for row in c {
                worst = worst.max(norm(&row[0]));
            }
        }
        if let Some(m) = &self.matrices {
            for row in m {
                worst = worst.max(row[0].abs().max());
            }
        }
        worst
    }
}

fn linear_applicable(v: &Variation) -> Option<Vec<DMatrix<f64>>> {
    let mats = v.foliation.linear_matrices()?;
    v.terms.iter().all(|(_, c)| c.constant_value().is_some()).then_some(mats)
}

fn resolve(v: &Variation, backend: ComplementBackend) -> Result<ComplementBackend> {
    let lin = linear_applicable(v).is_some();
    let coef = v.foliation.structure_constants().is_some();
    match backend {
        ComplementBackend::Auto => Ok(if lin {
            ComplementBackend::Linear
        } else if coef {
            ComplementBackend::Coefficients
        } else {
            ComplementBackend::Sampled
        }),
        ComplementBackend::Linear if !lin => {
            Err(Error::Unsupported("linear backend needs linear generators and t-constant coefficients".into()))
        }
        ComplementBackend::Coefficients if !coef => {
            Err(Error::Unsupported("coefficient backend needs constant structure coefficients".into()))
        }
        b => Ok(b),
    }
}

/// `c(s)` and `∂_s c(s)` for a variation whose terms are constant in `t`.
fn constant_coeffs(v: &Variation, s: f64) -> (Vec<f64>, Vec<f64>) {
    let q = v.foliation.q();
    let mut c = vec![0.0; q];
    let mut dc = vec![0.0; q];
    for (w, curve) in &v.terms {
        let val = curve.constant_value().expect("checked by the caller");
        let (ws, dws) = (w.eval(s), w.deriv().eval(s));
        for i in 0..q {
            c[i] += ws * val[i];
            dc[i] += dws * val[i];
        }
    }
    (c, dc)
}

struct Slice {
    base: Vec<Vec<f64>>,
    at_base: Vec<Vec<f64>>,
    coeffs: Option<Vec<Vec<f64>>>,
    matrices: Option<Vec<DMatrix<f64>>>,
}

fn breaks_with(ts: &[f64], curves: &[&CoeffCurve]) -> Vec<f64> {
    union_breakpoints(curves.iter().map(|c| c.breakpoints()).chain(std::iter::once(ts)))
}

/// Sampled backend along `p(·, s)`.
fn sampled_slice(v: &Variation, s: f64, ts: &[f64]) -> Result<Slice> {
    let f = &v.foliation;
    let d = f.dim();
    let cs = v.coeffs_at(s);
    let dcs = v.ds_coeffs_at(s);
    let field = ElementField::new(f, &cs);
    let sol = flow_variational(&field, &v.start, 0.0, 1.0, &OdeOptions::with_tol(v.tol), f.chart())?;
    let rule = gauss_legendre(0.0, 1.0, &breaks_with(ts, &[&cs, &dcs]), PANEL);
    let mut acc = DVector::zeros(d);
    let mut node = 0;
    let mut base = Vec::with_capacity(ts.len());
    let mut at_base = Vec::with_capacity(ts.len());
    let mut dx = vec![0.0; d];
    for &t in ts {
        while node < rule.len() && rule[node].0 < t {
            let (u, w) = rule[node];
            let (x, j) = split_state(&sol.eval(u), d);
            f.compiled().combine_into(&dcs.eval(u), &x, &mut dx);
            let inc = j.lu().solve(&DVector::from_column_slice(&dx)).ok_or_else(|| Error::Invalid("singular flow Jacobian".into()))?;
            acc += inc * w;
            node += 1;
        }
        let (x, j) = split_state(&sol.eval(t), d);
        let y = if t == 0.0 { DVector::zeros(d) } else { &j * &acc };
        base.push(x);
        at_base.push(y.iter().copied().collect());
    }
    Ok(Slice { base, at_base, coeffs: None, matrices: None })
}

fn coefficient_slice(v: &Variation, s: f64, ts: &[f64]) -> Result<Slice> {
    let f = &v.foliation;
    let q = f.q();
    let sc = f.structure_constants().expect("checked by resolve");
    let cs = v.coeffs_at(s);
    let dcs = v.ds_coeffs_at(s);
    let frames = FrameTransport::new(&sc, &cs, v.tol)?;
    let path = make_fpath(f.clone(), cs.clone(), &v.start, v.tol)?;
    let rule = gauss_legendre(0.0, 1.0, &breaks_with(ts, &[&cs, &dcs]), PANEL);
    let mut w = DVector::<f64>::zeros(q);
    let mut node = 0;
    let mut out = Slice { base: Vec::new(), at_base: Vec::new(), coeffs: Some(Vec::new()), matrices: None };
    for &t in ts {
        while node < rule.len() && rule[node].0 < t {
            let (u, wt) = rule[node];
            let dc = DVector::from_vec(dcs.eval(u));
            w += frames.h(u).transpose() * dc * wt;
            node += 1;
        }
        let y: Vec<f64> = if t == 0.0 { vec![0.0; q] } else { (frames.g(t).transpose() * &w).iter().copied().collect() };
        let p = path.base.eval(t);
        out.at_base.push(f.compiled().combine(&y, &p));
        out.base.push(p);
        out.coeffs.as_mut().unwrap().push(y);
    }
    Ok(out)
}

fn linear_slice(v: &Variation, s: f64, ts: &[f64], mats: &[DMatrix<f64>]) -> Slice {
    let (c, dc) = constant_coeffs(v, s);
    let a = combine(mats, &c);
    let da = combine(mats, &dc);
    let x0 = DVector::from_column_slice(&v.start);
    let mut out = Slice { base: Vec::new(), at_base: Vec::new(), coeffs: None, matrices: Some(Vec::new()) };
    for &t in ts {
        let d = a.nrows();
        let m = if t == 0.0 { DMatrix::zeros(d, d) } else { linear_complement_matrix(&a, &da, t) };
        let p = expm_t(&a, t) * &x0;
        out.at_base.push((&m * &p).iter().copied().collect());
        out.base.push(p.iter().copied().collect());
        out.matrices.as_mut().unwrap().push(m);
    }
    out
}

/// `Y(t, s)` on a grid, with the requested backend.
pub fn complement(v: &Variation, grid: &Grid, backend: ComplementBackend) -> Result<ComplementField> {
    let backend = resolve(v, backend)?;
    let ts = grid.ts();
    let ss = grid.ss();
    let mats = linear_applicable(v);
    let slices = Exec::default().try_map(&ss, |&s| match backend {
        ComplementBackend::Linear => Ok(linear_slice(v, s, &ts, mats.as_ref().unwrap())),
        ComplementBackend::Coefficients => coefficient_slice(v, s, &ts),
        _ => sampled_slice(v, s, &ts),
    })?;
    let mut field = ComplementField {
        ts,
        ss,
        backend,
        coeffs: None,
        matrices: None,
        base: Vec::new(),
        at_base: Vec::new(),
    };
    let mut coeffs = Vec::new();
    let mut matrices = Vec::new();
    for sl in slices {
        field.base.push(sl.base);
        field.at_base.push(sl.at_base);
        if let Some(c) = sl.coeffs {
            coeffs.push(c);
        }
        if let Some(m) = sl.matrices {
            matrices.push(m);
        }
    }
    if backend == ComplementBackend::Coefficients {
        field.coeffs = Some(coeffs);
    }
    if backend == ComplementBackend::Linear {
        field.matrices = Some(matrices);
    }
    debug_assert_eq!(field.initial_defect(), 0.0);
    Ok(field)
}

/// `Y(t, s)` at arbitrary points by the sampled formula: each point is flowed
/// back to time 0 and the variation-of-parameters integral is evaluated along
/// its trajectory.
pub fn complement_at(v: &Variation, s: f64, t: f64, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let f = &v.foliation;
    let d = f.dim();
    if t == 0.0 {
        return Ok(vec![vec![0.0; d]; points.len()]);
    }
    let cs = v.coeffs_at(s);
    let dcs = v.ds_coeffs_at(s);
    let field = ElementField::new(f, &cs);
    let opts = OdeOptions::with_tol(v.tol);
    let rule = gauss_legendre(0.0, t, &breaks_with(&[], &[&cs, &dcs]), PANEL);
    Exec::default().try_map(points, |y| {
        let x0 = flow_point(&field, y, t, 0.0, &opts, f.chart())?;
        let sol = flow_variational(&field, &x0, 0.0, t, &opts, f.chart())?;
        let mut acc = DVector::zeros(d);
        let mut dx = vec![0.0; d];
        for &(u, w) in &rule {
            let (x, j) = split_state(&sol.eval(u), d);
            f.compiled().combine_into(&dcs.eval(u), &x, &mut dx);
            acc += j.lu().solve(&DVector::from_column_slice(&dx)).ok_or_else(|| Error::Invalid("singular flow Jacobian".into()))? * w;
        }
        let (_, jt) = split_state(&sol.y1, d);
        Ok((jt * acc).iter().copied().collect())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipBackend {
    /// Exact module membership at a rational endpoint.
    Exact,
    /// Least-squares fit on a sample ball.
    LeastSquares,
}

/// Outcome of the F-homotopy test, one entry per grid value of `s`.
#[derive(Clone, Debug, Serialize)]
pub struct HomotopyReport {
    pub ok: bool,
    pub ss: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `|Y(1, s)(p(1, s))|`, which must vanish for a homotopy.
    pub endpoint_defects: Vec<f64>,
    pub backends: Vec<MembershipBackend>,
    pub rank_deficient: Vec<bool>,
    pub complement_backend: ComplementBackend,
}

/// Result of the least-squares membership fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOutcome {
    pub residual: f64,
    pub degree: u32,
    pub rank_deficient: bool,
}

/// Fit `Y(x) ≈ Σ f_i(x) X_i(x)` on `points` with each `f_i` a polynomial in
/// `x − center` without constant term; escalates the degree up to 4 and stops
/// at the first fit below `tau`.
pub fn membership_fit(f: &FoliationPresentation, center: &[f64], points: &[Vec<f64>], values: &[Vec<f64>], tau: f64) -> FitOutcome {
    let d = f.dim();
    let q = f.q();
    let rows = points.len() * d;
    let b = DVector::from_iterator(rows, values.iter().flatten().copied());
    let frames: Vec<DMatrix<f64>> = points.iter().map(|x| f.compiled().frame(x)).collect();
    let gen_scale = rms(&frames.iter().flat_map(|m| m.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>());
    let denom = rms(b.as_slice()).max(gen_scale).max(f64::MIN_POSITIVE);
    let mut best = FitOutcome { residual: f64::INFINITY, degree: 0, rank_deficient: false };
    for degree in 1..=MAX_FIT_DEGREE {
        let mons: Vec<_> = monomials_up_to(d, degree).into_iter().filter(|m| m.degree() > 0).collect();
        let ncols = q * mons.len();
        let mut a = DMatrix::zeros(rows, ncols);
        for (pi, x) in points.iter().enumerate() {
            let z: Vec<f64> = x.iter().zip(center).map(|(xi, ci)| (xi - ci) / BALL_RADIUS).collect();
            for (mi, m) in mons.iter().enumerate() {
                let zm: f64 = m.0.iter().zip(&z).map(|(&e, zi)| zi.powi(e as i32)).product();
                for i in 0..q {
                    for k in 0..d {
                        a[(pi * d + k, i * mons.len() + mi)] = zm * frames[pi][(k, i)];
                    }
                }
            }
        }
        let (sol, rank) = lstsq(&a, &b, 1e-12);
        let r = &a * sol - &b;
        let residual = rms(r.as_slice()) / denom;
        let outcome = FitOutcome { residual, degree, rank_deficient: rank < ncols };
        if residual < best.residual {
            best = outcome;
        }
        if residual <= tau {
            return outcome;
        }
    }
    best
}

fn snap_matrix(m: &DMatrix<f64>) -> Option<Vec<Vec<Rational>>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| snap_rational(m[(r, c)], 1000, 1e-9)).collect::<Option<Vec<_>>>())
        .collect()
}

fn linear_poly_field(m: &[Vec<Rational>]) -> PolyVectorField {
    let d = m.len();
    let comps = m
        .iter()
        .map(|row| {
            let mut p = Polynomial::zero(d);
            for (j, c) in row.iter().enumerate() {
                p = &p + &Polynomial::var(d, j).scale(c);
            }
            p
        })
        .collect();
    PolyVectorField::new(comps).expect("square matrix")
}

/// Test `Y(1, s) ∈ I_{p(1,s)} F` on the default grid.
pub fn is_homotopy(v: &Variation, tau_mem: f64) -> Result<HomotopyReport> {
    is_homotopy_on(v, &Grid::default(), tau_mem)
}

pub fn is_homotopy_on(v: &Variation, grid: &Grid, tau_mem: f64) -> Result<HomotopyReport> {
    let f = &v.foliation;
    let y = complement(v, grid, ComplementBackend::Auto)?;
    let last = y.ts.len() - 1;
    let mut reports: HashMap<Vec<Rational>, FiberBasisReport> = HashMap::new();
    let mut out = HomotopyReport {
        ok: true,
        ss: y.ss.clone(),
        residuals: Vec::new(),
        endpoint_defects: Vec::new(),
        backends: Vec::new(),
        rank_deficient: Vec::new(),
        complement_backend: y.backend,
    };
    for (is, &s) in y.ss.iter().enumerate() {
        let end = &y.base[is][last];
        let defect = norm(&y.at_base[is][last]);
        let exact_end = snap_point(end, 1000, 1e-9);
        let mut exact: Option<f64> = None;
        match (y.backend, &exact_end) {
            (ComplementBackend::Linear, Some(p)) => {
                if let Some(m) = snap_matrix(&y.matrices.as_ref().unwrap()[is][last]) {
                    let member = module_membership(f, &linear_poly_field(&m), p)?;
                    exact = Some(if member { 0.0 } else { 1.0 });
                }
            }
            (ComplementBackend::Coefficients, Some(p)) => {
                if !reports.contains_key(p) {
                    reports.insert(p.clone(), minimal_generators(f, p)?);
                }
                let rep = &reports[p];
                let c = &y.coeffs.as_ref().unwrap()[is][last];
                let cls: Vec<f64> = rep
                    .class_matrix
                    .iter()
                    .map(|row| row.iter().zip(c).map(|(l, ci)| crate::symcore::Coeff::to_f64(l) * ci).sum())
                    .collect();
                exact = Some(norm(&cls) / norm(c).max(1.0));
            }
            _ => {}
        }
        let (residual, backend, deficient) = match exact {
            Some(r) => (r, MembershipBackend::Exact, false),
            None => {
                let pts = ball_points(end, BALL_RADIUS, BALL_POINTS);
                let vals = complement_at(v, s, 1.0, &pts)?;
                let fit = membership_fit(f, end, &pts, &vals, tau_mem);
                (fit.residual, MembershipBackend::LeastSquares, fit.rank_deficient)
            }
        };
        let ok_s = residual <= tau_mem && defect <= ENDPOINT_TOL;
        out.ok &= ok_s;
        out.residuals.push(residual);
        out.endpoint_defects.push(defect);
        out.backends.push(backend);
        out.rank_deficient.push(deficient);
    }
    Ok(out)
}

/// `X(t, s) = s X₁(t) + (1 − s) X₀(t)` for two paths over the same base curve.
pub fn interpolate_paths(p0: &FPath, p1: &FPath) -> Result<Variation> {
    if !(Arc::ptr_eq(p0.foliation(), p1.foliation()) || **p0.foliation() == **p1.foliation()) {
        return Err(Error::Invalid("paths belong to different presentations".into()));
    }
    let gap = p0.base.max_distance(&p1.base, 64);
    if gap > TAU_PT {
        return Err(Error::EndpointMismatch(format!("base curves differ by {gap:e}")));
    }
    let tol = p0.tol.min(p1.tol);
    let v = Variation::linear(p0.foliation().clone(), p0.coeffs().clone(), p1.coeffs().clone(), p0.source().to_vec(), tol)?;
    // Re-integrate the slices and make sure they stay on the common base.
    for s in [0.25, 0.5, 0.75] {
        let sl = v.slice(s)?;
        let dev = sl.base.max_distance(&p0.base, 32);
        if dev > TAU_PT {
            return Err(Error::Verification(format!("interpolated slice s = {s} leaves the base curve by {dev:e}")));
        }
    }
    Ok(v)
}
