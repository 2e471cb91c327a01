//! F-paths: a time-dependent element together with one of its integral
//! curves. Concatenation, reversal, variations and the homotopy test.

pub mod reparam;
pub mod variation;

use std::sync::Arc;

use nalgebra::DMatrix;

pub use reparam::{concat_coeffs, r, r_inverse, r_prime};
pub use variation::{
    complement, complement_at, interpolate_paths, is_homotopy, ComplementBackend, ComplementField, Grid,
    HomotopyReport, MembershipBackend, Variation,
};

use crate::error::{Error, Result};
use crate::flowengine::{
    flow_point, flow_with_jacobian, integrate_curve, CoeffCurve, IntegralCurve, OdeOptions, TimeDependentElement,
};
use crate::foliation::FoliationPresentation;
use crate::linalg::dist;

/// Endpoint matching tolerance for concatenation and composition.
pub const TAU_PT: f64 = 1e-6;

/// An F-path `(X, p)`.
#[derive(Clone, Debug)]
pub struct FPath {
    pub element: TimeDependentElement,
    pub base: IntegralCurve,
    pub tol: f64,
}

impl FPath {
    pub fn foliation(&self) -> &Arc<FoliationPresentation> {
        &self.element.foliation
    }

    pub fn coeffs(&self) -> &CoeffCurve {
        &self.element.coeffs
    }

    pub fn source(&self) -> &[f64] {
        self.base.start()
    }

    pub fn target(&self) -> &[f64] {
        self.base.end()
    }

    pub fn dim(&self) -> usize {
        self.element.foliation.dim()
    }

    /// `Φ¹_X(x)`.
    pub fn flow(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.flow_between(x, 0.0, 1.0)
    }

    pub fn flow_between(&self, x: &[f64], from: f64, to: f64) -> Result<Vec<f64>> {
        let f = &self.element.foliation;
        flow_point(&self.element.field(), x, from, to, &OdeOptions::with_tol(self.tol), f.chart())
    }

    /// `Φ¹_X(x)` and its Jacobian.
    pub fn flow_jacobian(&self, x: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let f = &self.element.foliation;
        flow_with_jacobian(&self.element.field(), x, 0.0, 1.0, &OdeOptions::with_tol(self.tol), f.chart())
    }

    /// Is the base curve a fixed point (the element vanishes along it)?
    pub fn is_constant_path(&self) -> bool {
        self.coeffs().is_zero()
    }
}

/// Integrate `c` from `x0` and package the result.
pub fn make_fpath(f: Arc<FoliationPresentation>, coeffs: CoeffCurve, x0: &[f64], tol: f64) -> Result<FPath> {
    f.check_point(x0)?;
    let element = TimeDependentElement::new(f, coeffs)?;
    let base = integrate_curve(&element.field(), x0, tol, element.foliation.chart())?;
    Ok(FPath { element, base, tol })
}

/// The constant path at `x` (zero element).
pub fn unit_path(f: Arc<FoliationPresentation>, x: &[f64], tol: f64) -> Result<FPath> {
    let q = f.q();
    make_fpath(f, CoeffCurve::zero(q), x, tol)
}

fn same_foliation(a: &Arc<FoliationPresentation>, b: &Arc<FoliationPresentation>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `Q ⊙ P`: first `P`, then `Q`, both reparameterized by `r`.
pub fn concatenate(q: &FPath, p: &FPath) -> Result<FPath> {
    if !same_foliation(q.foliation(), p.foliation()) {
        return Err(Error::Invalid("paths belong to different presentations".into()));
    }
    let gap = dist(p.target(), q.source());
    if gap > TAU_PT {
        return Err(Error::EndpointMismatch(format!(
            "target {:?} of the first path is {gap:e} away from source {:?} of the second",
            p.target(),
            q.source()
        )));
    }
    let coeffs = concat_coeffs(q.coeffs(), p.coeffs())?;
    let tol = p.tol.min(q.tol);
    let out = make_fpath(p.foliation().clone(), coeffs, p.source(), tol)?;
    // The re-integrated base curve must agree with the glued one.
    let allowed = TAU_PT + 1e4 * tol;
    for k in 0..=40 {
        let t = k as f64 / 40.0;
        let glued = if t <= 0.5 { p.base.eval(r(2.0 * t)) } else { q.base.eval(r(2.0 * t - 1.0)) };
        let dev = dist(&glued, &out.base.eval(t));
        if dev > allowed {
            return Err(Error::Verification(format!("concatenated base curve deviates by {dev:e} at t = {t}")));
        }
    }
    Ok(out)
}

/// Right-nested concatenation `P_n ⊙ (… ⊙ (P_2 ⊙ P_1))`, with `paths[0]` first.
pub fn concatenate_all(paths: &[FPath]) -> Result<FPath> {
    let (first, rest) = paths.split_first().ok_or_else(|| Error::Invalid("no paths to concatenate".into()))?;
    rest.iter().try_fold(first.clone(), |acc, next| concatenate(next, &acc))
}

/// `(−X(1 − t), p(1 − t))`.
pub fn reverse(p: &FPath) -> Result<FPath> {
    make_fpath(p.foliation().clone(), p.coeffs().reversed(), p.target(), p.tol)
}
