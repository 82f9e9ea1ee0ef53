//! Renormalization-group toolkit for large-N vector and matrix models.

// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixedpoint;
pub mod flow;
pub mod grid;
pub mod potentials;
pub mod quadrature;
pub mod saddle;
pub mod scalar;
pub mod series;
pub mod special;
pub mod stability;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};
pub use series::{Poly, TruncatedSeries};

/// Double-precision truncated series.
pub type Series = TruncatedSeries<f64>;
/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;
/// Double-precision potential.
pub type Potential64 = potentials::Potential<f64>;
/// Double-precision `R` function.
pub type RFunction64 = potentials::RFunction<f64>;
/// Double-precision flow state.
pub type FlowState64 = flow::FlowState<f64>;
/// Double-precision fixed-point solution.
pub type FixedPoint64 = fixedpoint::FixedPointSolution<f64>;
/// Exact multicritical / linear fixed-point potential.
pub type RationalPotential = potentials::Potential<Rational>;
