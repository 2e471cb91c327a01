//! Exact polynomial algebra and polynomial vector fields.

pub mod coeff;
pub mod compiled;
pub mod field;
pub mod parse;
pub mod poly;

pub use coeff::{rat, ratio, snap_point, snap_rational, Coeff, Rational};
pub use compiled::{CompiledFamily, CompiledField, CompiledPoly};
pub use field::PolyVectorField;
pub use parse::{parse_point, parse_poly};
pub use poly::{poly_equal, Monomial, Polynomial};

/// Exact evaluation of `p` at a rational point.
pub fn poly_eval(p: &Polynomial, x: &[Rational]) -> crate::Result<Rational> {
    p.eval(x)
}

/// `[X, Y]` computed symbolically.
pub fn lie_bracket(x: &PolyVectorField, y: &PolyVectorField) -> crate::Result<PolyVectorField> {
    x.lie_bracket(y)
}
