//! Polynomial machinery on the reference interval `[-1, 1]`: Legendre
//! polynomials, hierarchical shape functions and Gauss–Legendre rules.

mod legendre;
mod quadrature;
mod shape;

pub use legendre::{legendre_differentiate, legendre_eval, LegendreCoeffs};
pub use quadrature::{gauss_legendre, gauss_legendre_cached, QuadratureRule};
pub use shape::{shape_functions, shape_to_legendre, ShapeValues};

pub(crate) use legendre::fill_legendre;
pub(crate) use shape::fill_shape;

/// Extra Gauss points beyond the local degree for element integrals
/// involving non-polynomial data.
pub const QUADRATURE_MARGIN: usize = 10;

/// Number of Gauss points used for element integrals of degree-`p` data.
pub fn element_quadrature_points(p: usize) -> usize {
    p + QUADRATURE_MARGIN
}
