//! Path-holonomy bisubmersions `t(c, y) = Φ¹_{Σ c_i X_i}(y)`, `s(c, y) = y`,
//! formal composite points, bisections, and the map to F-paths.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fiber::minimal_generators;
use crate::flowengine::flow::stops_between;
use crate::flowengine::ode::integrate;
use crate::flowengine::{CoeffCurve, OdeOptions};
use crate::foliation::{distribution_at, FoliationPresentation, RANK_FLOOR, TAU_RANK};
use crate::fpath::{concatenate, make_fpath, FPath, TAU_PT};
use crate::holonomy::{default_slice, jet_of_map, GermJet, DEFAULT_EXTENT};
use crate::linalg::{dist, numerical_rank};
use crate::sampling::halton;
use crate::symcore::{snap_point, Polynomial};

/// Box `|c|_∞ ≤ c_radius`, `|y − x|_∞ ≤ y_radius` around `(0, x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhbBox {
    pub c_radius: f64,
    pub y_radius: f64,
}

/// How the generators of a bisubmersion were chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisCheck {
    /// Minimal generators at a rational center; their classes are a basis of the fiber.
    Verified,
    /// The center is not rational, so every generator is used and the basis
    /// property was not checked.
    Skipped,
}

#[derive(Clone, Debug)]
pub struct PathHolonomyBisubmersion {
    pub foliation: Arc<FoliationPresentation>,
    pub center: Vec<f64>,
    /// Indices into the presentation of the generators used, in order.
    pub gen_indices: Vec<usize>,
    pub domain: PhbBox,
    pub basis_check: BasisCheck,
    /// Flow time of the target map; 1 for a path-holonomy bisubmersion.
    pub flow_time: f64,
    pub tol: f64,
}

/// Flow of `Σ c_i X_{g_i}` for unit time with the Jacobians in `y` and in `c`.
fn flow_with_sensitivity(b: &PathHolonomyBisubmersion, c: &[f64], y: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let f = &b.foliation;
    let d = f.dim();
    let m = b.gen_indices.len();
    let coeffs: Vec<f64> = b.full_coeffs(c).iter().map(|a| a * b.flow_time).collect();
    let fam = f.compiled();
    let (stops, _) = stops_between(&[0.0, 1.0], 0.0, 1.0);
    let mut y0 = y.to_vec();
    y0.resize(d + d * d + d * m, 0.0);
    for i in 0..d {
        y0[d + i * d + i] = 1.0;
    }
    let mut dz = vec![0.0; d * d];
    let mut xi = vec![0.0; d];
    let sol = integrate(
        |_, _, st, out| {
            let x = &st[..d];
            fam.combine_into(&coeffs, x, &mut out[..d]);
            dz.fill(0.0);
            fam.combine_jac_into(&coeffs, x, &mut dz);
            let jm = &st[d..d + d * d];
            let sm = &st[d + d * d..];
            for r in 0..d {
                for col in 0..d {
                    out[d + r * d + col] = (0..d).map(|k| dz[r * d + k] * jm[k * d + col]).sum();
                }
            }
            for (a, &g) in b.gen_indices.iter().enumerate() {
                fam.field(g).eval_into(x, &mut xi);
                for r in 0..d {
                    let v: f64 = (0..d).map(|k| dz[r * d + k] * sm[k * m + a]).sum();
                    out[d + d * d + r * m + a] = v + b.flow_time * xi[r];
                }
            }
        },
        &stops,
        &y0,
        &OdeOptions::with_tol(b.tol).dense(false),
        |t, st| {
            let x = &st[..d];
            if st.iter().all(|v| v.is_finite()) && f.chart().contains(x) {
                Ok(())
            } else {
                Err(Error::ChartEscape { t, point: x.to_vec() })
            }
        },
    )?;
    let x1 = sol.y1[..d].to_vec();
    let jy = DMatrix::from_row_slice(d, d, &sol.y1[d..d + d * d]);
    let jc = DMatrix::from_row_slice(d, m, &sol.y1[d + d * d..]);
    Ok((x1, jy, jc))
}

/// Path-holonomy bisubmersion at `x`. At a rational center the generators are
/// the minimal generators of the fiber; otherwise all of them. A center counts
/// as rational when it lies within 1e-9 of a point with denominators ≤ 1000.
pub fn make_phb(f: Arc<FoliationPresentation>, x: &[f64], domain: PhbBox, tol: f64) -> Result<PathHolonomyBisubmersion> {
    f.check_point(x)?;
    if !(domain.c_radius >= 0.0 && domain.y_radius >= 0.0) {
        return Err(Error::Invalid("box radii must be non-negative".into()));
    }
    let (gen_indices, basis_check) = match snap_point(x, 1000, 1e-9) {
        Some(xr) => (minimal_generators(&f, &xr)?.minimal_generator_indices, BasisCheck::Verified),
        None => ((0..f.q()).collect(), BasisCheck::Skipped),
    };
    let b = PathHolonomyBisubmersion { foliation: f, center: x.to_vec(), gen_indices, domain, basis_check, flow_time: 1.0, tol };
    for (c, y) in b.corners() {
        b.target(&c, &y)?;
    }
    Ok(b)
}

impl PathHolonomyBisubmersion {
    /// Same bisubmersion with target map `Φ^time`. Only useful as a broken
    /// example for the verifier.
    pub fn with_flow_time(mut self, time: f64) -> Self {
        self.flow_time = time;
        self
    }

    pub fn n_coeffs(&self) -> usize {
        self.gen_indices.len()
    }

    pub fn dim(&self) -> usize {
        self.n_coeffs() + self.foliation.dim()
    }

    /// Coefficients against every generator of the presentation.
    pub fn full_coeffs(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.foliation.q()];
        for (a, &g) in self.gen_indices.iter().enumerate() {
            out[g] = c[a];
        }
        out
    }

    fn check_coords(&self, c: &[f64], y: &[f64]) -> Result<()> {
        if c.len() != self.n_coeffs() {
            return Err(Error::DimensionMismatch { expected: self.n_coeffs(), got: c.len() });
        }
        if y.len() != self.foliation.dim() {
            return Err(Error::DimensionMismatch { expected: self.foliation.dim(), got: y.len() });
        }
        Ok(())
    }

    pub fn contains(&self, c: &[f64], y: &[f64]) -> bool {
        let slack = 1e-12;
        c.iter().all(|a| a.abs() <= self.domain.c_radius + slack)
            && y.iter().zip(&self.center).all(|(a, b)| (a - b).abs() <= self.domain.y_radius + slack)
    }

    pub fn source(&self, _c: &[f64], y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }

    pub fn target(&self, c: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.check_coords(c, y)?;
        Ok(flow_with_sensitivity(self, c, y)?.0)
    }

    /// `dt` as a `d × (m + d)` matrix, coefficient columns first.
    pub fn target_jacobian(&self, c: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        self.check_coords(c, y)?;
        let (_, jy, jc) = flow_with_sensitivity(self, c, y)?;
        let d = self.foliation.dim();
        let m = self.n_coeffs();
        let mut out = DMatrix::zeros(d, m + d);
        out.view_mut((0, 0), (d, m)).copy_from(&jc);
        out.view_mut((0, m), (d, d)).copy_from(&jy);
        Ok(out)
    }

    /// `ds = [0 | I]`.
    pub fn source_jacobian(&self) -> DMatrix<f64> {
        let d = self.foliation.dim();
        let m = self.n_coeffs();
        let mut out = DMatrix::zeros(d, m + d);
        out.view_mut((0, m), (d, d)).fill_with_identity();
        out
    }

    fn corners(&self) -> Vec<(Vec<f64>, Vec<f64>)> {
        let m = self.n_coeffs();
        let d = self.foliation.dim();
        let n = m + d;
        (0..1usize << n)
            .map(|mask| {
                let sign = |k: usize| if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                let c = (0..m).map(|k| sign(k) * self.domain.c_radius).collect();
                let y = (0..d).map(|k| self.center[k] + sign(m + k) * self.domain.y_radius).collect();
                (c, y)
            })
            .collect()
    }

    /// `n` quasi-random points of the box.
    pub fn sample_points(&self, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let m = self.n_coeffs();
        (0..n as u64)
            .map(|i| {
                let h = halton(i, self.dim());
                let c = h[..m].iter().map(|u| (2.0 * u - 1.0) * self.domain.c_radius).collect();
                let y = h[m..].iter().zip(&self.center).map(|(u, x)| x + (2.0 * u - 1.0) * self.domain.y_radius).collect();
                (c, y)
            })
            .collect()
    }
}

/// Rank data at one sample point of a bisubmersion.
#[derive(Clone, Debug, Serialize)]
pub struct BisubSample {
    pub c: Vec<f64>,
    pub y: Vec<f64>,
    pub rank_ds: usize,
    pub rank_dt: usize,
    /// Rank of `dt(ker ds)` and of the distribution at `t(c, y)`.
    pub rank_image: usize,
    pub rank_distribution: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BisubReport {
    pub ok: bool,
    pub basis_check: BasisCheck,
    pub samples: Vec<BisubSample>,
}

/// Pointwise shadow of `t⁻¹F = Γ(ker dt) + Γ(ker ds)`: `ds` and `dt` are onto and
/// `dt(ker ds)` equals the distribution at `t(c, y)`.
pub fn verify_bisubmersion(b: &PathHolonomyBisubmersion, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<BisubReport> {
    let d = b.foliation.dim();
    let m = b.n_coeffs();
    let ds = b.source_jacobian();
    let rank_ds = numerical_rank(&ds, TAU_RANK, RANK_FLOOR);
    let checks = Exec::default().try_map(samples, |(c, y)| -> Result<BisubSample> {
        let dt = b.target_jacobian(c, y)?;
        let ty = b.target(c, y)?;
        let rank_dt = numerical_rank(&dt, TAU_RANK, RANK_FLOOR);
        let image = dt.columns(0, m).into_owned();
        let dist_t = distribution_at(&b.foliation, &ty)?;
        let rank_image = numerical_rank(&image, TAU_RANK, RANK_FLOOR);
        let mut joint = DMatrix::zeros(d, m + b.foliation.q());
        joint.view_mut((0, 0), (d, m)).copy_from(&image);
        joint.view_mut((0, m), (d, b.foliation.q())).copy_from(&dist_t.matrix());
        let rank_joint = numerical_rank(&joint, TAU_RANK, RANK_FLOOR);
        let ok = rank_ds == d && rank_dt == d && rank_image == dist_t.rank && rank_joint == dist_t.rank;
        Ok(BisubSample { c: c.clone(), y: y.clone(), rank_ds, rank_dt, rank_image, rank_distribution: dist_t.rank, ok })
    })?;
    Ok(BisubReport { ok: checks.iter().all(|s| s.ok), basis_check: b.basis_check, samples: checks })
}

/// A point of one bisubmersion.
#[derive(Clone, Debug)]
pub struct PhbFactor {
    pub host: Arc<PathHolonomyBisubmersion>,
    pub c: Vec<f64>,
    pub y: Vec<f64>,
}

/// A point of a composite `P ×_M Q ×_M …`, kept as the tree of compositions.
#[derive(Clone, Debug)]
pub enum PhbPoint {
    Single(PhbFactor),
    /// `p · q` with `s(p) = t(q)`.
    Composite(Box<PhbPoint>, Box<PhbPoint>),
}

impl PhbPoint {
    pub fn new(host: Arc<PathHolonomyBisubmersion>, c: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        host.check_coords(&c, &y)?;
        if !host.contains(&c, &y) {
            return Err(Error::Invalid(format!("point ({c:?}, {y:?}) lies outside the bisubmersion box")));
        }
        Ok(PhbPoint::Single(PhbFactor { host, c, y }))
    }

    pub fn source(&self) -> Vec<f64> {
        match self {
            PhbPoint::Single(f) => f.y.clone(),
            PhbPoint::Composite(_, q) => q.source(),
        }
    }

    pub fn target(&self) -> Result<Vec<f64>> {
        match self {
            PhbPoint::Single(f) => f.host.target(&f.c, &f.y),
            PhbPoint::Composite(p, _) => p.target(),
        }
    }

    /// Factors from the last one applied to the first one applied.
    pub fn factors(&self) -> Vec<&PhbFactor> {
        match self {
            PhbPoint::Single(f) => vec![f],
            PhbPoint::Composite(p, q) => {
                let mut v = p.factors();
                v.extend(q.factors());
                v
            }
        }
    }

    fn foliation(&self) -> &Arc<FoliationPresentation> {
        &self.factors()[0].host.foliation
    }

    /// The diffeomorphism carried by the canonical bisection, applied to `y`.
    pub fn carried(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut x = y.to_vec();
        for f in self.factors().into_iter().rev() {
            x = f.host.target(&f.c, &x)?;
        }
        Ok(x)
    }
}

/// `p · q`.
pub fn compose_points(p: &PhbPoint, q: &PhbPoint) -> Result<PhbPoint> {
    let sp = p.source();
    let tq = q.target()?;
    let gap = dist(&sp, &tq);
    if gap > TAU_PT {
        return Err(Error::EndpointMismatch(format!("source {sp:?} of the left point is {gap:e} away from target {tq:?}")));
    }
    Ok(PhbPoint::Composite(Box::new(p.clone()), Box::new(q.clone())))
}

/// `Ψ̃`: constant-coefficient path for a single point, concatenation for `p · q`.
pub fn psi_tilde(p: &PhbPoint) -> Result<FPath> {
    match p {
        PhbPoint::Single(f) => {
            let coeffs = CoeffCurve::constant(&f.host.full_coeffs(&f.c).iter().map(|a| a * f.host.flow_time).collect::<Vec<_>>());
            make_fpath(f.host.foliation.clone(), coeffs, &f.y, f.host.tol)
        }
        PhbPoint::Composite(a, b) => concatenate(&psi_tilde(a)?, &psi_tilde(b)?),
    }
}

/// A bisection `y ↦ (c(y), y)` of a bisubmersion.
#[derive(Clone, Debug)]
pub struct Bisection {
    pub host: Arc<PathHolonomyBisubmersion>,
    pub c: Vec<Polynomial<f64>>,
}

impl Bisection {
    /// The canonical bisection through `(c, ·)`.
    pub fn canonical(host: Arc<PathHolonomyBisubmersion>, c: &[f64]) -> Self {
        let d = host.foliation.dim();
        let c = c.iter().map(|&a| Polynomial::constant(d, a)).collect();
        Bisection { host, c }
    }

    pub fn eval(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (self.c.iter().map(|p| p.eval_f64(y).expect("bisection arity")).collect(), y.to_vec())
    }

    /// `t ∘ σ`.
    pub fn carried(&self, y: &[f64]) -> Result<Vec<f64>> {
        let (c, y) = self.eval(y);
        self.host.target(&c, &y)
    }

    /// Largest `|s(σ(y)) − y|`.
    pub fn source_defect(&self, ys: &[Vec<f64>]) -> f64 {
        ys.iter()
            .map(|y| {
                let (c, yy) = self.eval(y);
                dist(&self.host.source(&c, &yy), y)
            })
            .fold(0.0, f64::max)
    }

    /// Is `t ∘ σ` a local diffeomorphism at every point of `ys`?
    pub fn is_local_diffeo(&self, ys: &[Vec<f64>]) -> Result<bool> {
        let d = self.host.foliation.dim();
        let m = self.host.n_coeffs();
        for y in ys {
            let (c, yy) = self.eval(y);
            let dt = self.host.target_jacobian(&c, &yy)?;
            let dc = DMatrix::from_fn(m, d, |a, k| self.c[a].partial_derivative(k).eval_f64(y).expect("bisection arity"));
            let jac = dt.columns(m, d) + dt.columns(0, m) * dc;
            if numerical_rank(&jac, TAU_RANK, RANK_FLOOR) < d {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Jet of the diffeomorphism carried by the canonical bisection at `p`,
/// between default slices at `s(p)` and `t(p)`, corrected into the target slice.
pub fn carried_diffeo_jet(p: &PhbPoint, order: u32, tol: f64) -> Result<GermJet> {
    let f = p.foliation();
    let s0 = default_slice(f, &p.source(), DEFAULT_EXTENT)?;
    let s1 = default_slice(f, &p.target()?, DEFAULT_EXTENT)?;
    Ok(jet_of_map(f, &s0, &s1, order, tol, |y| p.carried(y))?.0)
}
