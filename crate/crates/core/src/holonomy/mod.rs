//! Holonomy of F-paths between transversal slices, represented by truncated
//! Taylor jets in slice coordinates.

pub mod correction;
pub mod jet;
pub mod slice;

use nalgebra::DMatrix;
use num_rational::BigRational;
use serde::Serialize;

pub use correction::{correct_to_slice, CorrectionResult, CorrectionTerm};
pub use jet::{compose_jets, fit_taylor, truncate, GermJet};
pub use slice::{default_slice, equivalence_status, slice_with_frame, EquivalenceStatus, Slice, DEFAULT_EXTENT};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fiber::{minimal_generators, rational_base};
use crate::foliation::FoliationPresentation;
use crate::fpath::{FPath, TAU_PT};
use crate::linalg::dist;
use crate::sampling::chebyshev_grid;

/// Default jet order.
pub const DEFAULT_ORDER: u32 = 2;
/// Stencil radius as a fraction of the slice extent.
const STENCIL_SCALE: f64 = 0.1;

/// Holonomy jet together with the data needed to judge it.
#[derive(Clone, Debug)]
pub struct HolonomyReport {
    pub jet: GermJet,
    pub correction: CorrectionResult,
    pub equivalence_status: EquivalenceStatus,
}

/// Stencil in slice coordinates: tensor Chebyshev nodes, `(k+2)^m` points.
pub fn stencil(s: &Slice, order: u32) -> Vec<Vec<f64>> {
    let m = s.dim();
    if m == 0 {
        return vec![Vec::new()];
    }
    chebyshev_grid(&vec![0.0; m], STENCIL_SCALE * s.extent, order as usize + 2)
}

/// Correct `images` of the `s0` stencil into `s1` and fit an order-`k` jet.
pub fn jet_from_images(
    f: &FoliationPresentation,
    s0: &Slice,
    s1: &Slice,
    sigmas: &[Vec<f64>],
    images: &[Vec<f64>],
    order: u32,
    tol: f64,
) -> Result<(GermJet, CorrectionResult)> {
    let corr = correct_to_slice(f, images, s1, tol, (order + 1).max(2))?;
    let outputs: Vec<Vec<f64>> = corr.corrected.iter().map(|y| s1.coords(y)).collect();
    let taylor = fit_taylor(sigmas, &outputs, s0.dim(), s1.dim(), order, STENCIL_SCALE * s0.extent);
    Ok((GermJet { order, source: s0.clone(), target: s1.clone(), taylor }, corr))
}

/// Jet of `Φ¹_Z ∘ map` restricted to `s0`, for any map sending `s0.base`
/// to `s1.base`.
pub fn jet_of_map<M>(f: &FoliationPresentation, s0: &Slice, s1: &Slice, order: u32, tol: f64, map: M) -> Result<(GermJet, CorrectionResult)>
where
    M: Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
{
    let sigmas = stencil(s0, order);
    let points: Vec<Vec<f64>> = sigmas.iter().map(|s| s0.point(s)).collect();
    let images = Exec::default().try_map(&points, |x| map(x))?;
    jet_from_images(f, s0, s1, &sigmas, &images, order, tol)
}

fn check_slices(p: &FPath, s0: &Slice, s1: &Slice) -> Result<()> {
    if dist(&s0.base, p.source()) > TAU_PT {
        return Err(Error::SliceMismatch(format!("source slice is not based at the path source {:?}", p.source())));
    }
    if dist(&s1.base, p.target()) > TAU_PT {
        return Err(Error::SliceMismatch(format!("target slice is not based at the path target {:?}", p.target())));
    }
    if s0.dim() != s1.dim() {
        return Err(Error::SliceMismatch(format!("slice dimensions {} and {} differ", s0.dim(), s1.dim())));
    }
    Ok(())
}

pub fn holonomy_report(p: &FPath, s0: &Slice, s1: &Slice, order: u32, tol: f64) -> Result<HolonomyReport> {
    check_slices(p, s0, s1)?;
    let f = p.foliation();
    let (jet, correction) = jet_of_map(f, s0, s1, order, tol, |x| p.flow(x))?;
    let equivalence_status = equivalence_status(f, s1)?;
    Ok(HolonomyReport { jet, correction, equivalence_status })
}

/// Order-`k` jet of the corrected holonomy `Φ¹_Z ∘ Φ¹_X : S0 → S1`.
pub fn holonomy_jet(p: &FPath, s0: &Slice, s1: &Slice, order: u32, tol: f64) -> Result<GermJet> {
    Ok(holonomy_report(p, s0, s1, order, tol)?.jet)
}

/// Linear part of the holonomy, `dim S1 × dim S0`.
pub fn linearized_holonomy(p: &FPath, s0: &Slice, s1: &Slice, tol: f64) -> Result<DMatrix<f64>> {
    Ok(holonomy_jet(p, s0, s1, 1, tol)?.linear_part())
}

/// Default slices at both ends of a path.
pub fn default_slices(p: &FPath, extent: f64) -> Result<(Slice, Slice)> {
    let f = p.foliation();
    Ok((default_slice(f, p.source(), extent)?, default_slice(f, p.target(), extent)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Triviality {
    Trivial,
    NotTrivial,
    /// The slice foliation has positive rank, so a non-identity jet proves nothing.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct TrivialityReport {
    pub status: Triviality,
    /// Largest coefficient difference from the identity jet.
    pub deviation: f64,
    pub jet: GermJet,
}

/// Does a path whose element lies in `I_{p(0)}F` have identity holonomy on `s0`?
///
/// The precondition is checked exactly: every time coefficient of the
/// coefficient curve must have zero class in the fiber at `p(0)`.
pub fn trivial_holonomy_check(p: &FPath, s0: &Slice, order: u32, tol: f64) -> Result<TrivialityReport> {
    let f = p.foliation();
    let x0 = rational_base(p.source())?;
    let fiber = minimal_generators(f, &x0)?;
    let curve = p.coeffs();
    for piece in curve.pieces() {
        let deg = piece.iter().map(|u| u.0.len()).max().unwrap_or(0);
        for k in 0..deg {
            let c: Vec<BigRational> = piece
                .iter()
                .map(|u| {
                    let v = u.0.get(k).copied().unwrap_or(0.0);
                    BigRational::from_float(v).ok_or_else(|| Error::Invalid(format!("coefficient {v} is not finite")))
                })
                .collect::<Result<_>>()?;
            if !fiber.is_zero_class(&c) {
                return Err(Error::Invalid("the element does not vanish in the fiber at the source point".into()));
            }
        }
    }
    if dist(p.source(), p.target()) > TAU_PT {
        return Err(Error::Invalid("path with element in I_xF must be a loop".into()));
    }
    let report = holonomy_report(p, s0, s0, order, tol)?;
    let deviation = report.jet.max_difference(&GermJet::identity(s0, order));
    let status = match equivalence_status(f, s0)? {
        EquivalenceStatus::Inconclusive => Triviality::Inconclusive,
        EquivalenceStatus::Decidable if deviation <= tol.max(1e-6) => Triviality::Trivial,
        EquivalenceStatus::Decidable => Triviality::NotTrivial,
    };
    Ok(TrivialityReport { status, deviation, jet: report.jet })
}
