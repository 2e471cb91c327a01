//! Morphisms of foliated manifolds `(F, f): F_M → F_N`, stored as a
//! polynomial base map together with the matrix `u` of the pre-pullback
//! images `F(X_i) = Σ_j u_ij ⊗ Y_j`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebroid::{APath, ANCHOR_TOL};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fiber::groebner::GroebnerBasis;
use crate::fiber::FiberVector;
use crate::flowengine::{CoeffCurve, IntegralCurve, UPoly};
use crate::foliation::{verify_involutivity, FoliationPresentation};
use crate::fpath::{make_fpath, FPath};
use crate::linalg::{dist, lstsq, numerical_rank};
use crate::sampling::{chebyshev_nodes, halton};
use crate::symcore::{CompiledPoly, PolyVectorField, Polynomial, Rational};

const MAP_SAMPLES: usize = 40;

#[derive(Clone, Debug)]
pub struct FoliatedMorphism {
    pub source: Arc<FoliationPresentation>,
    pub target: Arc<FoliationPresentation>,
    /// `f = (f_1, …, f_n)` in the source coordinates.
    pub map: Vec<Polynomial>,
    /// `q_M × q_N` matrix of functions on the source.
    pub coeffs: Vec<Vec<Polynomial>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MorphismReport {
    pub ok: bool,
    pub anchor_ok: bool,
    pub bracket_ok: bool,
    /// Both involutivity certificates verify.
    pub certificates_ok: bool,
    pub anchor_failures: Vec<usize>,
    pub bracket_failures: Vec<(usize, usize)>,
}

impl FoliatedMorphism {
    pub fn new(
        source: Arc<FoliationPresentation>,
        target: Arc<FoliationPresentation>,
        map: Vec<Polynomial>,
        coeffs: Vec<Vec<Polynomial>>,
    ) -> Result<Self> {
        let (m, n) = (source.dim(), target.dim());
        if map.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: map.len() });
        }
        if coeffs.len() != source.q() {
            return Err(Error::DimensionMismatch { expected: source.q(), got: coeffs.len() });
        }
        if let Some(row) = coeffs.iter().find(|r| r.len() != target.q()) {
            return Err(Error::DimensionMismatch { expected: target.q(), got: row.len() });
        }
        if let Some(p) = map.iter().chain(coeffs.iter().flatten()).find(|p| p.nvars() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: p.nvars() });
        }
        Ok(FoliatedMorphism { source, target, map, coeffs })
    }

    /// Constant coefficient matrix.
    pub fn with_constant_coeffs(
        source: Arc<FoliationPresentation>,
        target: Arc<FoliationPresentation>,
        map: Vec<Polynomial>,
        u: &[Vec<Rational>],
    ) -> Result<Self> {
        let m = source.dim();
        let coeffs = u.iter().map(|row| row.iter().map(|c| Polynomial::constant(m, c.clone())).collect()).collect();
        Self::new(source, target, map, coeffs)
    }

    /// `(id, id)` on a presentation.
    pub fn identity(f: Arc<FoliationPresentation>) -> Self {
        let (m, q) = (f.dim(), f.q());
        let map = (0..m).map(|j| Polynomial::var(m, j)).collect();
        let coeffs = (0..q)
            .map(|i| (0..q).map(|j| if i == j { Polynomial::one(m) } else { Polynomial::zero(m) }).collect())
            .collect();
        FoliatedMorphism { source: f.clone(), target: f, map, coeffs }
    }

    /// `u = 0` over the constant map to `point`.
    pub fn zero(source: Arc<FoliationPresentation>, target: Arc<FoliationPresentation>, point: &[Rational]) -> Result<Self> {
        let m = source.dim();
        let map = point.iter().map(|c| Polynomial::constant(m, c.clone())).collect();
        let coeffs = vec![vec![Polynomial::zero(m); target.q()]; source.q()];
        Self::new(source, target, map, coeffs)
    }

    pub fn map_f64(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|p| p.eval_f64(x).expect("source dimension")).collect()
    }

    pub fn map_exact(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        self.map.iter().map(|p| p.eval(x)).collect()
    }

    /// `u(x)` as a `q_M × q_N` matrix.
    pub fn coeffs_f64(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.source.q(), self.target.q(), |i, j| self.coeffs[i][j].eval_f64(x).expect("source dimension"))
    }

    /// Constant `u`, if every entry is constant.
    pub fn constant_coeffs(&self) -> Option<DMatrix<f64>> {
        if self.coeffs.iter().flatten().all(Polynomial::is_constant) {
            let m = self.source.dim();
            Some(self.coeffs_f64(&vec![0.0; m]))
        } else {
            None
        }
    }

    /// `df(X)` as the components `X(f_k)`.
    fn push_field(&self, x: &PolyVectorField) -> Result<Vec<Polynomial>> {
        self.map.iter().map(|fk| x.apply(fk)).collect()
    }

    /// `Y ∘ f`.
    fn pull_field(&self, y: &PolyVectorField) -> Result<Vec<Polynomial>> {
        y.components().iter().map(|c| c.compose(&self.map)).collect()
    }

    fn pull_poly(&self, p: &Polynomial) -> Result<Polynomial> {
        p.compose(&self.map)
    }

    /// Does `df(X_i) = Σ_j u_ij (Y_j ∘ f)` hold for generator `i`?
    fn anchor_holds(&self, i: usize, pulled: &[Vec<Polynomial>]) -> Result<bool> {
        let lhs = self.push_field(self.source.generator(i))?;
        let mut rhs = vec![Polynomial::zero(self.source.dim()); self.target.dim()];
        for (u, yj) in self.coeffs[i].iter().zip(pulled) {
            if u.is_zero() {
                continue;
            }
            for (r, c) in rhs.iter_mut().zip(yj) {
                *r = &*r + &(u * c);
            }
        }
        Ok(lhs == rhs)
    }

    fn pulled_targets(&self) -> Result<Vec<Vec<Polynomial>>> {
        self.target.generators().iter().map(|y| self.pull_field(y)).collect()
    }

    /// Indices of generators violating the anchor identity.
    pub fn anchor_failures(&self) -> Result<Vec<usize>> {
        let pulled = self.pulled_targets()?;
        let idx: Vec<usize> = (0..self.source.q()).collect();
        let ok = Exec::default().try_map(&idx, |&i| self.anchor_holds(i, &pulled))?;
        Ok(idx.into_iter().zip(ok).filter(|(_, ok)| !ok).map(|(i, _)| i).collect())
    }

    /// Coefficients of `F([X_a, X_b])` and of the right-hand side of the
    /// bracket identity, both over the target generators.
    fn bracket_sides(&self, a: usize, b: usize, pulled_c: &[Vec<Vec<Polynomial>>]) -> Result<(Vec<Polynomial>, Vec<Polynomial>)> {
        let m = self.source.dim();
        let qn = self.target.q();
        let cert = self.source.certificate();
        let mut lhs = vec![Polynomial::zero(m); qn];
        for (c, cc) in cert.pair(a, b).iter().enumerate() {
            if cc.is_zero() {
                continue;
            }
            for (l, u) in lhs.iter_mut().zip(&self.coeffs[c]) {
                *l = &*l + &(cc * u);
            }
        }
        let (ua, ub) = (&self.coeffs[a], &self.coeffs[b]);
        let (xa, xb) = (self.source.generator(a), self.source.generator(b));
        let mut rhs = Vec::with_capacity(qn);
        for k in 0..qn {
            // X_a(v^k) − X_b(u^k); the sign on the second term is forced by antisymmetry
            let mut acc = &xa.apply(&ub[k])? - &xb.apply(&ua[k])?;
            for i in 0..qn {
                if ua[i].is_zero() {
                    continue;
                }
                for j in 0..qn {
                    let c = &pulled_c[i][j][k];
                    if !c.is_zero() && !ub[j].is_zero() {
                        acc = &acc + &(&(&ua[i] * &ub[j]) * c);
                    }
                }
            }
            rhs.push(acc);
        }
        Ok((lhs, rhs))
    }

    /// Target structure functions composed with `f`, `[i][j][k]`.
    fn pulled_structure(&self) -> Result<Vec<Vec<Vec<Polynomial>>>> {
        let qn = self.target.q();
        let cert = self.target.certificate();
        (0..qn)
            .map(|i| (0..qn).map(|j| (0..qn).map(|k| self.pull_poly(cert.get(i, j, k))).collect()).collect())
            .collect()
    }

    /// Pairs `a < b` whose bracket identity fails at the level of coefficients.
    pub fn bracket_failures(&self) -> Result<Vec<(usize, usize)>> {
        let pulled_c = self.pulled_structure()?;
        let q = self.source.q();
        let pairs: Vec<(usize, usize)> = (0..q).flat_map(|a| (a + 1..q).map(move |b| (a, b))).collect();
        let ok = Exec::default().try_map(&pairs, |&(a, b)| {
            let (l, r) = self.bracket_sides(a, b, &pulled_c)?;
            Ok::<_, Error>(l == r)
        })?;
        Ok(pairs.into_iter().zip(ok).filter(|(_, ok)| !ok).map(|(p, _)| p).collect())
    }
}

/// Exact check of the anchor and bracket identities.
pub fn verify_morphism(phi: &FoliatedMorphism) -> Result<MorphismReport> {
    let certificates_ok = verify_involutivity(&phi.source).ok && verify_involutivity(&phi.target).ok;
    let anchor_failures = phi.anchor_failures()?;
    let bracket_failures = phi.bracket_failures()?;
    let anchor_ok = anchor_failures.is_empty();
    let bracket_ok = bracket_failures.is_empty();
    Ok(MorphismReport {
        ok: anchor_ok && bracket_ok && certificates_ok,
        anchor_ok,
        bracket_ok,
        certificates_ok,
        anchor_failures,
        bracket_failures,
    })
}

/// `Φ₂ ∘ Φ₁`: base map `g ∘ f`, coefficients `u · (v ∘ f)`.
pub fn compose_morphisms(phi2: &FoliatedMorphism, phi1: &FoliatedMorphism) -> Result<FoliatedMorphism> {
    if !(Arc::ptr_eq(&phi1.target, &phi2.source) || *phi1.target == *phi2.source) {
        return Err(Error::Invalid("middle foliations differ".into()));
    }
    let m = phi1.source.dim();
    let map = phi2.map.iter().map(|g| phi1.pull_poly(g)).collect::<Result<Vec<_>>>()?;
    let v_f: Vec<Vec<Polynomial>> =
        phi2.coeffs.iter().map(|row| row.iter().map(|v| phi1.pull_poly(v)).collect()).collect::<Result<_>>()?;
    let qp = phi2.target.q();
    let coeffs = phi1
        .coeffs
        .iter()
        .map(|urow| {
            (0..qp)
                .map(|k| {
                    urow.iter().zip(&v_f).fold(Polynomial::zero(m), |acc, (u, vrow)| {
                        if u.is_zero() || vrow[k].is_zero() {
                            acc
                        } else {
                            &acc + &(u * &vrow[k])
                        }
                    })
                })
                .collect()
        })
        .collect();
    let out = FoliatedMorphism::new(phi1.source.clone(), phi2.target.clone(), map, coeffs)?;
    let rep = verify_morphism(&out)?;
    if !rep.ok {
        return Err(Error::Verification(format!("composite fails: {rep:?}")));
    }
    Ok(out)
}

/// `Σ_i c_i u_ij(x) ⊗ Y_j` at `f(x)`, exactly.
pub fn fiber_map(phi: &FoliatedMorphism, v: &FiberVector) -> Result<FiberVector> {
    if v.q() != phi.source.q() {
        return Err(Error::DimensionMismatch { expected: phi.source.q(), got: v.q() });
    }
    let base = phi.map_exact(&v.base)?;
    let mut coeffs = vec![Rational::from_integer(0.into()); phi.target.q()];
    for (ci, row) in v.coeffs.iter().zip(&phi.coeffs) {
        for (out, u) in coeffs.iter_mut().zip(row) {
            *out += ci * &u.eval(&v.base)?;
        }
    }
    Ok(FiberVector { base, coeffs })
}

fn require_anchor(phi: &FoliatedMorphism) -> Result<()> {
    let bad = phi.anchor_failures()?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(format!("anchor identity fails for generators {bad:?}")))
    }
}

/// Piecewise polynomial approximation of `g` on `[0, 1]`, refining each
/// given piece by bisection until the sampled error is below `tol`.
fn fit_curve(g: impl Fn(f64) -> Vec<f64>, breakpoints: &[f64], q: usize, tol: f64) -> Result<CoeffCurve> {
    const DEG: usize = 9;
    const MAX_DEPTH: u32 = 12;
    let nodes: Vec<f64> = chebyshev_nodes(DEG + 1).iter().map(|s| 0.5 * (s + 1.0)).collect();
    let vander = DMatrix::from_fn(DEG + 1, DEG + 1, |r, c| nodes[r].powi(c as i32));
    let fit = |a: f64, b: f64| -> (Vec<UPoly>, f64) {
        let vals: Vec<Vec<f64>> = nodes.iter().map(|u| g(a + (b - a) * u)).collect();
        let polys: Vec<UPoly> = (0..q)
            .map(|k| {
                let rhs = DVector::from_iterator(DEG + 1, vals.iter().map(|v| v[k]));
                UPoly(lstsq(&vander, &rhs, 1e-14).0.iter().copied().collect()).trimmed()
            })
            .collect();
        let err = (0..=2 * DEG)
            .map(|i| {
                let u = i as f64 / (2 * DEG) as f64;
                let want = g(a + (b - a) * u);
                polys.iter().zip(&want).map(|(p, w)| (p.eval(u) - w).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        (polys, err)
    };
    let mut bps = vec![0.0];
    let mut pieces = Vec::new();
    let mut stack: Vec<(f64, f64, u32)> = breakpoints.windows(2).rev().map(|w| (w[0], w[1], 0)).collect();
    while let Some((a, b, depth)) = stack.pop() {
        let (polys, err) = fit(a, b);
        if err > tol && depth < MAX_DEPTH {
            let mid = 0.5 * (a + b);
            stack.push((mid, b, depth + 1));
            stack.push((a, mid, depth + 1));
            continue;
        }
        if err > tol {
            return Err(Error::Verification(format!("coefficient transport fit error {err:e} on [{a}, {b}]")));
        }
        bps.push(b);
        pieces.push(polys);
    }
    CoeffCurve::new(bps, pieces)
}

/// `b_j(t) = Σ_i a_i(t) u_ij(γ(t))`; exact when `u` is constant.
fn transport_coeffs(phi: &FoliatedMorphism, coeffs: &CoeffCurve, base: &IntegralCurve, tol: f64) -> Result<CoeffCurve> {
    let qn = phi.target.q();
    if let Some(u) = phi.constant_coeffs() {
        let pieces = coeffs
            .pieces()
            .iter()
            .map(|row| {
                (0..qn)
                    .map(|j| row.iter().enumerate().fold(UPoly::zero(), |acc, (i, a)| acc.add(&a.scale(u[(i, j)]))))
                    .collect()
            })
            .collect();
        return CoeffCurve::new(coeffs.breakpoints().to_vec(), pieces);
    }
    let compiled: Vec<Vec<CompiledPoly>> = phi.coeffs.iter().map(|row| row.iter().map(CompiledPoly::new).collect()).collect();
    fit_curve(
        |t| {
            let x = base.eval(t);
            let a = coeffs.eval(t);
            (0..qn).map(|j| a.iter().zip(&compiled).map(|(ai, row)| ai * row[j].eval(&x)).sum()).collect()
        },
        coeffs.breakpoints(),
        qn,
        tol.max(1e-10),
    )
}

/// Sup distance between `f ∘ γ` and a target curve.
fn map_defect(phi: &FoliatedMorphism, gamma: &IntegralCurve, pushed: &IntegralCurve) -> f64 {
    (0..=MAP_SAMPLES)
        .map(|k| {
            let t = k as f64 / MAP_SAMPLES as f64;
            dist(&phi.map_f64(&gamma.eval(t)), &pushed.eval(t))
        })
        .fold(0.0, f64::max)
}

/// The A-path `(f ∘ γ, Σ a_i u_ij(γ))` on the target.
///
/// The pushed base curve is integrated from `f(γ(0))` and compared with
/// `f ∘ γ`; a discrepancy above `ANCHOR_TOL` is an anchor violation.
pub fn pushforward_apath(phi: &FoliatedMorphism, a: &APath) -> Result<APath> {
    if !(Arc::ptr_eq(&a.foliation, &phi.source) || *a.foliation == *phi.source) {
        return Err(Error::Invalid("A-path lives on a different presentation".into()));
    }
    require_anchor(phi)?;
    let b = transport_coeffs(phi, &a.coeffs, &a.base, a.tol)?;
    let x0 = phi.map_f64(a.source());
    let pushed = make_fpath(phi.target.clone(), b, &x0, a.tol)?;
    let residual = map_defect(phi, &a.base, &pushed.base);
    if residual > ANCHOR_TOL {
        return Err(Error::AnchorViolation { residual });
    }
    APath::new(phi.target.clone(), pushed.base, pushed.element.coeffs, a.tol)
}

/// `f^{-1}(F_N)` for a submersion, presented by lifts followed by verticals,
/// with the projection morphism onto `F_N`.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub foliation: Arc<FoliationPresentation>,
    pub n_lifts: usize,
    /// `(lift_j ↦ 1 ⊗ Y_j, vertical ↦ 0)`.
    pub projection: FoliatedMorphism,
}

/// Assemble `⟨lifts ∪ verticals⟩` after checking `df(X̃_j) = Y_j ∘ f`,
/// `df(V) = 0` and the supplied certificate. `brackets` index the combined
/// list, lifts first.
pub fn pullback_foliation(
    map: Vec<Polynomial>,
    target: Arc<FoliationPresentation>,
    verticals: Vec<PolyVectorField>,
    lifts: Vec<PolyVectorField>,
    brackets: &[(usize, usize, Vec<Polynomial>)],
    chart: crate::foliation::Chart,
) -> Result<Pullback> {
    if lifts.len() != target.q() {
        return Err(Error::DimensionMismatch { expected: target.q(), got: lifts.len() });
    }
    let n_lifts = lifts.len();
    let mut gens = lifts;
    gens.extend(verticals);
    let foliation = Arc::new(FoliationPresentation::with_brackets(chart, gens, brackets)?);
    let m = foliation.dim();
    let coeffs = (0..foliation.q())
        .map(|i| (0..target.q()).map(|j| if i == j { Polynomial::one(m) } else { Polynomial::zero(m) }).collect())
        .collect();
    let projection = FoliatedMorphism::new(foliation.clone(), target, map, coeffs)?;
    let bad = projection.anchor_failures()?;
    if let Some(&i) = bad.first() {
        return Err(Error::Verification(if i < n_lifts {
            format!("lift {i} is not f-related to target generator {i}")
        } else {
            format!("vertical generator {} is not in ker df", i - n_lifts)
        }));
    }
    if !verify_involutivity(&foliation).ok {
        return Err(Error::Verification("supplied certificate for the pullback does not verify".into()));
    }
    Ok(Pullback { foliation, n_lifts, projection })
}

/// `Φ = projection ∘ inclusion` through `f^{-1}(F_N)`.
#[derive(Clone, Debug)]
pub struct Factorization {
    /// `(F_M → f^{-1}(F_N))` over the identity map.
    pub inclusion: FoliatedMorphism,
    pub projection: FoliatedMorphism,
    /// The composite reproduces `Φ`'s coefficient matrix exactly.
    pub exact: bool,
}

/// Rank check of `df` on 100 Halton points of `[-2, 2]^m`.
pub fn is_submersion_on_sample(map: &[Polynomial], m: usize) -> bool {
    let n = map.len();
    let jac: Vec<Vec<CompiledPoly>> = map.iter().map(|f| (0..m).map(|j| CompiledPoly::new(&f.partial_derivative(j))).collect()).collect();
    (0..100u64).all(|i| {
        let x: Vec<f64> = halton(i, m).iter().map(|h| 4.0 * h - 2.0).collect();
        let d = DMatrix::from_fn(n, m, |r, c| jac[r][c].eval(&x));
        numerical_rank(&d, 1e-9, 1e-12) == n
    })
}

pub fn factor_morphism(phi: &FoliatedMorphism, pullback: &Pullback) -> Result<Factorization> {
    let pb = &pullback.foliation;
    if !(Arc::ptr_eq(&pullback.projection.target, &phi.target) || *pullback.projection.target == *phi.target) {
        return Err(Error::Invalid("pullback is for a different target presentation".into()));
    }
    if pullback.projection.map != phi.map {
        return Err(Error::Invalid("pullback is along a different base map".into()));
    }
    if pb.dim() != phi.source.dim() {
        return Err(Error::DimensionMismatch { expected: phi.source.dim(), got: pb.dim() });
    }
    let m = pb.dim();
    if !is_submersion_on_sample(&phi.map, m) {
        return Err(Error::Invalid("base map is not a submersion on the sample".into()));
    }
    let rows = |gens: &[PolyVectorField]| -> Vec<Vec<Polynomial>> { gens.iter().map(|g| g.components().to_vec()).collect() };
    let full = GroebnerBasis::new(&rows(pb.generators()), m, m);
    let verticals = &pb.generators()[pullback.n_lifts..];
    let vert = (!verticals.is_empty()).then(|| GroebnerBasis::new(&rows(verticals), m, m));
    let anchor_ok = phi.anchor_failures()?.is_empty();
    let mut exact = anchor_ok;
    let mut coeffs = Vec::with_capacity(phi.source.q());
    for (i, x) in phi.source.generators().iter().enumerate() {
        // Preferred: X_i − Σ_j u_ij X̃_j is vertical, so the composite is Φ itself.
        let via_u = if anchor_ok {
            let horizontal = pb.poly_combination(
                &(0..pb.q()).map(|j| if j < pullback.n_lifts { phi.coeffs[i][j].clone() } else { Polynomial::zero(m) }).collect::<Vec<_>>(),
            )?;
            let rest = x.try_sub(&horizontal)?;
            if rest.is_zero() {
                Some(vec![Polynomial::zero(m); verticals.len()])
            } else {
                vert.as_ref().and_then(|g| g.express(&rest.components().to_vec()))
            }
            .map(|w| phi.coeffs[i].iter().cloned().chain(w).collect::<Vec<_>>())
        } else {
            None
        };
        let row = match via_u {
            Some(r) => r,
            None => {
                exact = false;
                full.express(&x.components().to_vec())
                    .ok_or_else(|| Error::Membership(format!("source generator {i} is not in the pullback module")))?
            }
        };
        coeffs.push(row);
    }
    let ident = (0..m).map(|j| Polynomial::var(m, j)).collect();
    let inclusion = FoliatedMorphism::new(phi.source.clone(), pb.clone(), ident, coeffs)?;
    Ok(Factorization { inclusion, projection: pullback.projection.clone(), exact })
}

/// Source generators killed by the morphism: `df(X_i) = 0` and `u_i = 0`.
pub fn vertical_generators(phi: &FoliatedMorphism) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in 0..phi.source.q() {
        let dfx = phi.push_field(phi.source.generator(i))?;
        if dfx.iter().all(Polynomial::is_zero) && phi.coeffs[i].iter().all(Polynomial::is_zero) {
            out.push(i);
        }
    }
    Ok(out)
}

/// `(X, γ) ↦ (df(X), f ∘ γ)` for a path whose coefficients sit on the
/// non-vertical generators (or with the vertical ones dropped on request).
pub fn pushforward_projectable_fpath(phi: &FoliatedMorphism, p: &FPath, drop_vertical: bool) -> Result<FPath> {
    if !(Arc::ptr_eq(p.foliation(), &phi.source) || **p.foliation() == *phi.source) {
        return Err(Error::Invalid("path lives on a different presentation".into()));
    }
    require_anchor(phi)?;
    let vertical = vertical_generators(phi)?;
    let c = p.coeffs();
    let moving: Vec<usize> = (0..c.q()).filter(|i| c.pieces().iter().any(|row| !row[*i].is_zero())).collect();
    if !drop_vertical {
        if let Some(i) = moving.iter().find(|i| vertical.contains(i)) {
            return Err(Error::Invalid(format!("coefficient of vertical generator {i} is nonzero")));
        }
    }
    if moving.iter().any(|&i| !vertical.contains(&i) && !phi.coeffs[i].iter().all(Polynomial::is_constant)) {
        return Err(Error::Unsupported("projectability needs constant transport coefficients".into()));
    }
    let u = phi.coeffs_f64(&vec![0.0; phi.source.dim()]);
    let qn = phi.target.q();
    let pieces = c
        .pieces()
        .iter()
        .map(|row| {
            (0..qn)
                .map(|j| {
                    row.iter()
                        .enumerate()
                        .filter(|(i, _)| !vertical.contains(i))
                        .fold(UPoly::zero(), |acc, (i, a)| acc.add(&a.scale(u[(i, j)])))
                })
                .collect()
        })
        .collect();
    let b = CoeffCurve::new(c.breakpoints().to_vec(), pieces)?;
    let out = make_fpath(phi.target.clone(), b, &phi.map_f64(p.source()), p.tol)?;
    let residual = map_defect(phi, &p.base, &out.base);
    if residual > ANCHOR_TOL {
        return Err(Error::AnchorViolation { residual });
    }
    Ok(out)
}

/// Linearized holonomies of a projectable path and of its pushforward,
/// related through `df` between the slices.
#[derive(Clone, Debug)]
pub struct HolonomyComparison {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
    /// `df` from the source slices to the image slices, in slice coordinates.
    pub d0: DMatrix<f64>,
    pub d1: DMatrix<f64>,
    /// `max |L_N d0 − d1 L_M|`.
    pub defect: f64,
}

fn map_jacobian(phi: &FoliatedMorphism, x: &[f64]) -> DMatrix<f64> {
    let m = phi.source.dim();
    DMatrix::from_fn(phi.map.len(), m, |r, c| phi.map[r].partial_derivative(c).eval_f64(x).expect("source dimension"))
}

/// Compare `H_N(f ∘ γ) ∘ df|_τ` with `df|_τ ∘ H_M(γ)` at the linear level.
/// The image slices are spanned by `df` applied to the default source slices.
pub fn holonomy_commutation(phi: &FoliatedMorphism, p: &FPath, extent: f64, tol: f64) -> Result<HolonomyComparison> {
    use crate::holonomy::{default_slices, linearized_holonomy, slice_with_frame};
    let pushed = pushforward_projectable_fpath(phi, p, false)?;
    let (s0, s1) = default_slices(p, extent)?;
    let image = |s: &crate::holonomy::Slice, y: &[f64]| {
        let frame = map_jacobian(phi, &s.base) * &s.frame;
        slice_with_frame(&phi.target, y, &frame, extent)
    };
    let t0 = image(&s0, pushed.source())?;
    let t1 = image(&s1, pushed.target())?;
    let d0 = t0.frame.transpose() * map_jacobian(phi, &s0.base) * &s0.frame;
    let d1 = t1.frame.transpose() * map_jacobian(phi, &s1.base) * &s1.frame;
    let source = linearized_holonomy(p, &s0, &s1, tol)?;
    let target = linearized_holonomy(&pushed, &t0, &t1, tol)?;
    let defect = (&target * &d0 - &d1 * &source).amax();
    Ok(HolonomyComparison { source, target, d0, d1, defect })
}
