//! Flows of time-dependent elements: adaptive integration, variational
//! equations, pushforwards and an exact linear subengine.

pub mod coeffs;
pub mod expm;
pub mod flow;
pub mod linear;
pub mod ode;
pub mod quad;
pub mod structure;

pub use coeffs::{CoeffCurve, UPoly};
pub use expm::{expm, expm_frechet, expm_t};
pub use flow::{
    flow_map, flow_point, flow_with_jacobian, integrate_curve, pushforward, ConstantField, ElementField, FlowResult,
    IntegralCurve, TimeField,
};
pub use linear::{matrix_exponential, pushforward_matrix, LinearField};
pub use ode::{OdeOptions, OdeSolution};
pub use structure::{timedep_structure_coeffs, FrameTransport, TimeDepStructure};

use std::sync::Arc;

use crate::foliation::FoliationPresentation;

/// `X(t) = Σ c^i(t) X_i`: coefficient curves against a presentation's generators.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentElement {
    pub foliation: Arc<FoliationPresentation>,
    pub coeffs: CoeffCurve,
}

impl TimeDependentElement {
    pub fn new(foliation: Arc<FoliationPresentation>, coeffs: CoeffCurve) -> crate::Result<Self> {
        if coeffs.q() != foliation.q() {
            return Err(crate::Error::DimensionMismatch { expected: foliation.q(), got: coeffs.q() });
        }
        Ok(TimeDependentElement { foliation, coeffs })
    }

    pub fn field(&self) -> ElementField<'_> {
        ElementField::new(&self.foliation, &self.coeffs)
    }
}
