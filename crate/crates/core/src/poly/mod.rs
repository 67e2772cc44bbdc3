//! Polynomials, rational functions, Laurent series, roots and contour quadrature.

mod laurent;
mod poly;
mod quad;
mod rational;
mod roots;
mod scalar;

pub use laurent::{polynomial_part, residue_at, residue_of_series, series_at, series_div, Center, LaurentSeries, ORDER_CAP};
pub use poly::Poly;
pub use quad::{contour_integral, gauss_legendre, Contour, Integral, QuadOptions, Rule};
pub use rational::RationalFn;
pub use roots::{poly_roots, Roots};
pub use scalar::{bits_for_digits, mp_precision, set_mp_precision, Mp, Scalar};
