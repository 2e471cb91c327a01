use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::foliation::{distribution_at, FoliationPresentation, RANK_FLOOR, TAU_RANK};
use crate::linalg::{canonical_complement, dist, numerical_rank};
use crate::sampling::ball_points;

/// Default slice radius.
pub const DEFAULT_EXTENT: f64 = 0.5;
const MIN_EXTENT: f64 = 1e-4;
const CHECK_POINTS: usize = 20;

/// An affine slice `base + frame·σ`, `|σ| ≤ extent`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub base: Vec<f64>,
    /// `d × m`, orthonormal columns.
    pub frame: DMatrix<f64>,
    pub extent: f64,
}

/// Whether holonomy jets at this slice can be compared directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceStatus {
    /// The induced foliation on the slice has rank 0 on the checked points,
    /// so jets represent holonomy classes faithfully.
    Decidable,
    /// Jets are representatives only.
    Inconclusive,
}

impl Slice {
    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.len()
    }

    /// Point with slice coordinates `σ`.
    pub fn point(&self, sigma: &[f64]) -> Vec<f64> {
        let p = DVector::from_column_slice(&self.base) + &self.frame * DVector::from_column_slice(sigma);
        p.iter().copied().collect()
    }

    /// Orthogonal projection of `y` to slice coordinates.
    pub fn coords(&self, y: &[f64]) -> Vec<f64> {
        let v = DVector::from_iterator(y.len(), y.iter().zip(&self.base).map(|(a, b)| a - b));
        (self.frame.transpose() * v).iter().copied().collect()
    }

    /// Projector onto the orthogonal complement of the slice directions.
    pub fn normal_projector(&self) -> DMatrix<f64> {
        let d = self.ambient_dim();
        DMatrix::identity(d, d) - &self.frame * self.frame.transpose()
    }

    /// Distance of `y` from the affine plane of the slice.
    pub fn distance(&self, y: &[f64]) -> f64 {
        let v = DVector::from_iterator(y.len(), y.iter().zip(&self.base).map(|(a, b)| a - b));
        (self.normal_projector() * v).norm()
    }

    /// Sample points used for transversality checks (always includes the base).
    pub fn sample_points(&self, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.base.clone()];
        if self.dim() > 0 {
            let origin = vec![0.0; self.dim()];
            out.extend(ball_points(&origin, self.extent, n).iter().map(|s| self.point(s)));
        }
        out
    }

    /// Same base (within `tol`) and the same frame.
    pub fn matches(&self, other: &Slice, tol: f64) -> bool {
        self.dim() == other.dim()
            && dist(&self.base, &other.base) <= tol
            && (self.frame.clone() - &other.frame).abs().max() <= 1e-9
    }
}

fn joint_rank(s: &Slice, gens: &DMatrix<f64>) -> usize {
    let d = s.ambient_dim();
    let m = s.dim();
    let mut joint = DMatrix::zeros(d, m + gens.ncols());
    joint.view_mut((0, 0), (d, m)).copy_from(&s.frame);
    joint.view_mut((0, m), (d, gens.ncols())).copy_from(gens);
    numerical_rank(&joint, TAU_RANK, RANK_FLOOR)
}

fn transversal(f: &FoliationPresentation, s: &Slice) -> Result<bool> {
    for y in s.sample_points(CHECK_POINTS) {
        if !f.chart().contains(&y) {
            return Ok(false);
        }
        let g = distribution_at(f, &y)?.matrix();
        if joint_rank(s, &g) < s.ambient_dim() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Slice through `x` spanned by the canonical complement of the distribution.
/// The extent is halved until `T_yS + D_y` fills the tangent space at every
/// check point.
pub fn default_slice(f: &FoliationPresentation, x: &[f64], extent: f64) -> Result<Slice> {
    let dist0 = distribution_at(f, x)?;
    let frame = canonical_complement(&dist0.orthonormal_basis());
    let mut s = Slice { base: x.to_vec(), frame, extent };
    while s.extent >= MIN_EXTENT {
        if transversal(f, &s)? {
            return Ok(s);
        }
        s.extent *= 0.5;
    }
    Err(Error::Transversality { point: x.to_vec() })
}

/// Slice with a caller-supplied frame (columns are orthonormalized).
pub fn slice_with_frame(f: &FoliationPresentation, x: &[f64], frame: &DMatrix<f64>, extent: f64) -> Result<Slice> {
    f.check_point(x)?;
    if frame.nrows() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: frame.nrows() });
    }
    let q = frame.clone().qr().q();
    let frame = q.columns(0, frame.ncols()).into_owned();
    let s = Slice { base: x.to_vec(), frame, extent };
    let g = distribution_at(f, x)?;
    if joint_rank(&s, &g.matrix()) < f.dim() || s.dim() + g.rank != f.dim() {
        return Err(Error::Transversality { point: x.to_vec() });
    }
    Ok(s)
}

/// `Decidable` when `T_yS ∩ D_y = 0` at the base and at the check points.
pub fn equivalence_status(f: &FoliationPresentation, s: &Slice) -> Result<EquivalenceStatus> {
    for y in s.sample_points(CHECK_POINTS) {
        let g = distribution_at(f, &y)?;
        if joint_rank(s, &g.matrix()) < s.dim() + g.rank {
            return Ok(EquivalenceStatus::Inconclusive);
        }
    }
    Ok(EquivalenceStatus::Decidable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn catalog_slices() {
        let radial = default_slice(&catalog::rot2(), &[1.0, 0.0], 0.5).unwrap();
        assert_eq!(radial.dim(), 1);
        assert!((radial.frame[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(equivalence_status(&catalog::rot2(), &radial).unwrap(), EquivalenceStatus::Decidable);

        let disc = default_slice(&catalog::rot2(), &[0.0, 0.0], 0.5).unwrap();
        assert_eq!(disc.dim(), 2);
        assert_eq!(equivalence_status(&catalog::rot2(), &disc).unwrap(), EquivalenceStatus::Inconclusive);

        let point = default_slice(&catalog::full2(), &[0.3, 0.1], 0.5).unwrap();
        assert_eq!(point.dim(), 0);
    }
}
